//! The two-rate evaluation scenarios: `alpha_1` swept from 0.7 toward 1.

use crate::scenario::{AlgorithmName, OverheadFile, ScenarioFile};
use crate::sweep::{SweepSpec, DEFAULT_PACKETS, DEFAULT_SEED};

pub const FIGURES: [u8; 6] = [4, 5, 6, 7, 8, 9];
pub const MEAN_PACKET_BITS: f64 = 8000.0;
/// Largest `alpha_1` on the grid; the model needs `alpha < 1`.
pub const ALPHA_CAP: f64 = 1.0 - 1e-6;

/// `0.70, 0.72, ..., 0.98` and [`ALPHA_CAP`].
pub fn alpha_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..15).map(|k| f64::from(70 + 2 * k) / 100.0).collect();
    g.push(ALPHA_CAP);
    g
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preset {
    pub figure: u8,
    pub rates_bps: [f64; 2],
    pub alpha_2: f64,
    pub overhead: bool,
}

pub fn preset(figure: u8) -> Option<Preset> {
    let (rates_bps, alpha_2, overhead) = match figure {
        4 => ([1e6, 2e6], 0.2, false),
        5 => ([1e6, 2e6], 0.7, false),
        6 => ([1e6, 2e6], 0.2, true),
        7 => ([1e6, 2e6], 0.7, true),
        8 => ([5.5e6, 11e6], 0.2, true),
        9 => ([5.5e6, 11e6], 0.7, true),
        _ => return None,
    };
    Some(Preset {
        figure,
        rates_bps,
        alpha_2,
        overhead,
    })
}

impl Preset {
    /// Scenario at `alpha_1` for `algorithm`, with 802.11b overhead iff the
    /// preset has it.
    pub fn scenario(&self, alpha_1: f64, algorithm: AlgorithmName) -> ScenarioFile {
        ScenarioFile {
            rates_bps: self.rates_bps.to_vec(),
            alphas: vec![alpha_1, self.alpha_2],
            mean_packet_bits: MEAN_PACKET_BITS,
            algorithm,
            s: 10,
            f: 2,
            beta_max: Some(3),
            overhead: self.overhead.then(OverheadFile::ieee80211b),
            packet_lengths: None,
        }
    }

    /// Sweep over [`alpha_grid`] for all three algorithms. Presets with
    /// overhead simulate, since AARF and PAARF have no closed form there.
    pub fn sweep(&self) -> SweepSpec {
        SweepSpec {
            base: self.scenario(0.9, AlgorithmName::Arf),
            param: "alphas[0]".into(),
            grid: alpha_grid(),
            algorithms: vec![AlgorithmName::Arf, AlgorithmName::Aarf, AlgorithmName::Paarf],
            with_sim: self.overhead,
            with_overhead: self.overhead,
            packets: DEFAULT_PACKETS,
            seed: DEFAULT_SEED,
        }
    }
}
