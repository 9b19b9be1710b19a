//! JSON scenario files.
//!
//! Durations are given in microseconds on disk and converted to seconds.

use std::fs;
use std::path::{Path, PathBuf};

use ratekit_core::{
    AarfParams, Algorithm, AlgorithmKind, ArfParams, ChannelModel, LengthDistribution, MacOverheadParams, RateLadder,
    Scenario, TrafficModel,
};
use serde::{Deserialize, Serialize};

/// `beta_max` used when an AARF/PAARF file omits it.
pub const DEFAULT_BETA_MAX: u32 = 3;
pub const DEFAULT_SLOT_US: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmName {
    Arf,
    Aarf,
    Paarf,
}

impl From<AlgorithmName> for AlgorithmKind {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Arf => AlgorithmKind::Arf,
            AlgorithmName::Aarf => AlgorithmKind::Aarf,
            AlgorithmName::Paarf => AlgorithmKind::Paarf,
        }
    }
}

impl From<AlgorithmKind> for AlgorithmName {
    fn from(k: AlgorithmKind) -> Self {
        match k {
            AlgorithmKind::Arf => AlgorithmName::Arf,
            AlgorithmKind::Aarf => AlgorithmName::Aarf,
            AlgorithmKind::Paarf => AlgorithmName::Paarf,
        }
    }
}

fn default_slot_us() -> f64 {
    DEFAULT_SLOT_US
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadFile {
    pub difs_us: f64,
    pub sifs_us: f64,
    pub t_ack_us: f64,
    pub cw_min: u64,
    pub cw_max: u64,
    pub gamma_max: u32,
    #[serde(default = "default_slot_us")]
    pub slot_us: f64,
}

impl OverheadFile {
    /// IEEE 802.11b DSSS values.
    pub fn ieee80211b() -> Self {
        Self::from(&MacOverheadParams::ieee80211b())
    }
}

impl From<&OverheadFile> for MacOverheadParams {
    fn from(o: &OverheadFile) -> Self {
        MacOverheadParams {
            difs: o.difs_us * 1e-6,
            sifs: o.sifs_us * 1e-6,
            t_ack: o.t_ack_us * 1e-6,
            cw_min: o.cw_min,
            cw_max: o.cw_max,
            gamma_max: o.gamma_max,
            slot_time: o.slot_us * 1e-6,
        }
    }
}

impl From<&MacOverheadParams> for OverheadFile {
    fn from(o: &MacOverheadParams) -> Self {
        // Round trip through microseconds must not pick up 1e-6 noise.
        let us = |s: f64| (s * 1e6 * 1e6).round() / 1e6;
        OverheadFile {
            difs_us: us(o.difs),
            sifs_us: us(o.sifs),
            t_ack_us: us(o.t_ack),
            cw_min: o.cw_min,
            cw_max: o.cw_max,
            gamma_max: o.gamma_max,
            slot_us: us(o.slot_time),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub rates_bps: Vec<f64>,
    pub alphas: Vec<f64>,
    pub mean_packet_bits: f64,
    pub algorithm: AlgorithmName,
    pub s: u64,
    pub f: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhead: Option<OverheadFile>,
    /// Simulator packet lengths as `[bits, weight]` pairs; their weighted
    /// mean must equal `mean_packet_bits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet_lengths: Option<Vec<[f64; 2]>>,
}

impl ScenarioFile {
    /// Core scenario, not yet validated.
    pub fn to_scenario(&self) -> Scenario {
        let base = ArfParams { s: self.s, f: self.f };
        let aarf = AarfParams {
            base,
            beta_max: self.beta_max.unwrap_or(DEFAULT_BETA_MAX),
        };
        let algorithm = match self.algorithm {
            AlgorithmName::Arf => Algorithm::Arf(base),
            AlgorithmName::Aarf => Algorithm::Aarf(aarf),
            AlgorithmName::Paarf => Algorithm::Paarf(aarf),
        };
        let lengths = match &self.packet_lengths {
            None => LengthDistribution::Deterministic,
            Some(points) => LengthDistribution::Empirical(points.iter().map(|p| (p[0], p[1])).collect()),
        };
        Scenario {
            ladder: RateLadder::new(self.rates_bps.clone()),
            channel: ChannelModel::new(self.alphas.clone()),
            traffic: TrafficModel {
                mean_packet_bits: self.mean_packet_bits,
                lengths,
            },
            algorithm,
            overhead: self.overhead.as_ref().map(MacOverheadParams::from),
        }
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(sc: &Scenario) -> Self {
        let arf = sc.algorithm.arf_params();
        ScenarioFile {
            rates_bps: sc.ladder.rates.clone(),
            alphas: sc.channel.alphas.clone(),
            mean_packet_bits: sc.traffic.mean_packet_bits,
            algorithm: sc.algorithm.kind().into(),
            s: arf.s,
            f: arf.f,
            beta_max: sc.algorithm.aarf_params().map(|p| p.beta_max),
            overhead: sc.overhead.as_ref().map(OverheadFile::from),
            packet_lengths: match &sc.traffic.lengths {
                LengthDistribution::Deterministic => None,
                LengthDistribution::Empirical(points) => Some(points.iter().map(|&(l, w)| [l, w]).collect()),
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Reads and parses any JSON input file.
pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| LoadError::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, LoadError> {
    load_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG4: &str = r#"{
        "rates_bps": [1e6, 2e6],
        "alphas": [0.9, 0.2],
        "mean_packet_bits": 8000,
        "algorithm": "aarf",
        "s": 10,
        "f": 2,
        "beta_max": 3
    }"#;

    #[test]
    fn parses_the_documented_fields() {
        let file: ScenarioFile = serde_json::from_str(FIG4).unwrap();
        let sc = file.to_scenario();
        assert_eq!(sc.algorithm.kind(), AlgorithmKind::Aarf);
        assert_eq!(sc.algorithm.aarf_params().unwrap().threshold(1), Some(20));
        assert!(sc.overhead.is_none());
        assert!(ratekit_core::model::validate(sc).is_ok());
    }

    #[test]
    fn overhead_is_in_microseconds_with_a_default_slot() {
        let json = r#"{"difs_us": 50, "sifs_us": 10, "t_ack_us": 112, "cw_min": 32, "cw_max": 1023, "gamma_max": 5}"#;
        let o: OverheadFile = serde_json::from_str(json).unwrap();
        assert_eq!(o, OverheadFile::ieee80211b());
        let p = MacOverheadParams::from(&o);
        assert!((p.difs - 50e-6).abs() < 1e-18);
        assert!((p.slot_time - 20e-6).abs() < 1e-18);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = FIG4.replace("\"s\": 10", "\"s\": 10, \"sucess\": 1");
        assert!(serde_json::from_str::<ScenarioFile>(&json).is_err());
        let json = FIG4.replace("\"aarf\"", "\"minstrel\"");
        assert!(serde_json::from_str::<ScenarioFile>(&json).is_err());
    }

    #[test]
    fn round_trips_through_the_core_type() {
        let mut file: ScenarioFile = serde_json::from_str(FIG4).unwrap();
        file.overhead = Some(OverheadFile::ieee80211b());
        file.packet_lengths = Some(vec![[4000.0, 1.0], [12000.0, 1.0]]);
        assert_eq!(ScenarioFile::from(&file.to_scenario()), file);
    }
}
