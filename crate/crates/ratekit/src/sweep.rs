//! Parameter sweeps over one scenario field, analytic and simulated.

use rayon::prelude::*;
use ratekit_core::sim::{simulate, SimConfig};
use ratekit_core::{analyze, AlgorithmKind, AnalysisError};
use serde::{Deserialize, Serialize};

use crate::scenario::{AlgorithmName, OverheadFile, ScenarioFile};
use crate::table::{SweepRow, SweepTable};

pub const DEFAULT_PACKETS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const THREADS_ENV: &str = "RATEKIT_THREADS";

fn default_packets() -> u64 {
    DEFAULT_PACKETS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// A sweep description. `with_overhead` decides whether DCF overhead is
/// modeled: the base file's `overhead` block is used if present, 802.11b
/// values otherwise. When false any overhead in the base is dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ScenarioFile,
    /// Field to vary, e.g. `alphas[0]`, `rates_bps[1]`, `s`, `overhead.difs_us`.
    pub param: String,
    pub grid: Vec<f64>,
    pub algorithms: Vec<AlgorithmName>,
    #[serde(default)]
    pub with_sim: bool,
    #[serde(default)]
    pub with_overhead: bool,
    #[serde(default = "default_packets")]
    pub packets: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("grid is empty")]
    EmptyGrid,
    #[error("no algorithms selected")]
    NoAlgorithms,
    #[error("unknown or out-of-range parameter path `{0}`")]
    BadParam(String),
    #[error("simulation needs at least 1 packet")]
    NoPackets,
    #[error("{THREADS_ENV} must be a positive integer, got `{0}`")]
    BadThreads(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Rate(usize),
    Alpha(usize),
    MeanBits,
    S,
    F,
    BetaMax,
    Difs,
    Sifs,
    TAck,
    Slot,
    CwMin,
    CwMax,
    GammaMax,
}

impl Field {
    fn parse(path: &str, file: &ScenarioFile) -> Option<Self> {
        let indexed = |prefix: &str, len: usize| -> Option<usize> {
            let rest = path.strip_prefix(prefix)?.strip_prefix('[')?.strip_suffix(']')?;
            let k: usize = rest.parse().ok()?;
            (k < len).then_some(k)
        };
        if let Some(k) = indexed("rates_bps", file.rates_bps.len()) {
            return Some(Field::Rate(k));
        }
        if let Some(k) = indexed("alphas", file.alphas.len()) {
            return Some(Field::Alpha(k));
        }
        let field = match path {
            "mean_packet_bits" => Field::MeanBits,
            "s" => Field::S,
            "f" => Field::F,
            "beta_max" => Field::BetaMax,
            "overhead.difs_us" => Field::Difs,
            "overhead.sifs_us" => Field::Sifs,
            "overhead.t_ack_us" => Field::TAck,
            "overhead.slot_us" => Field::Slot,
            "overhead.cw_min" => Field::CwMin,
            "overhead.cw_max" => Field::CwMax,
            "overhead.gamma_max" => Field::GammaMax,
            _ => return None,
        };
        let needs_overhead = matches!(
            field,
            Field::Difs | Field::Sifs | Field::TAck | Field::Slot | Field::CwMin | Field::CwMax | Field::GammaMax
        );
        (!needs_overhead || file.overhead.is_some()).then_some(field)
    }

    fn set(self, file: &mut ScenarioFile, x: f64) -> Result<(), String> {
        let int = |x: f64| -> Result<u64, String> {
            if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
                Ok(x as u64)
            } else {
                Err(format!("{x} is not a non-negative integer"))
            }
        };
        let small = |x: f64| -> Result<u32, String> {
            u32::try_from(int(x)?).map_err(|_| format!("{x} does not fit in 32 bits"))
        };
        let o = file.overhead.as_mut();
        match self {
            Field::Rate(k) => file.rates_bps[k] = x,
            Field::Alpha(k) => file.alphas[k] = x,
            Field::MeanBits => file.mean_packet_bits = x,
            Field::S => file.s = int(x)?,
            Field::F => file.f = int(x)?,
            Field::BetaMax => file.beta_max = Some(small(x)?),
            Field::Difs => o.expect("checked at parse").difs_us = x,
            Field::Sifs => o.expect("checked at parse").sifs_us = x,
            Field::TAck => o.expect("checked at parse").t_ack_us = x,
            Field::Slot => o.expect("checked at parse").slot_us = x,
            Field::CwMin => o.expect("checked at parse").cw_min = int(x)?,
            Field::CwMax => o.expect("checked at parse").cw_max = int(x)?,
            Field::GammaMax => o.expect("checked at parse").gamma_max = small(x)?,
        }
        Ok(())
    }
}

/// Thread count from `RATEKIT_THREADS`, `None` if unset.
pub fn threads_from_env() -> Result<Option<usize>, SpecError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(SpecError::BadThreads(v)),
        },
    }
}

impl SweepSpec {
    fn base_with_overhead(&self) -> ScenarioFile {
        let mut base = self.base.clone();
        base.overhead = if self.with_overhead {
            Some(base.overhead.unwrap_or_else(OverheadFile::ieee80211b))
        } else {
            None
        };
        base
    }

    fn field(&self) -> Result<Field, SpecError> {
        Field::parse(&self.param, &self.base_with_overhead()).ok_or_else(|| SpecError::BadParam(self.param.clone()))
    }

    pub fn check(&self) -> Result<(), SpecError> {
        if self.grid.is_empty() {
            return Err(SpecError::EmptyGrid);
        }
        if self.algorithms.is_empty() {
            return Err(SpecError::NoAlgorithms);
        }
        if self.with_sim && self.packets == 0 {
            return Err(SpecError::NoPackets);
        }
        self.field().map(|_| ())
    }

    /// The scenario file of grid point `x` under `algo`.
    pub fn point(&self, x: f64, algo: AlgorithmName) -> Result<ScenarioFile, String> {
        let mut file = self.base_with_overhead();
        file.algorithm = algo;
        self.field().map_err(|e| e.to_string())?.set(&mut file, x)?;
        Ok(file)
    }
}

fn run_point(spec: &SweepSpec, index: usize, x: f64, algo: AlgorithmName, n_rates: usize) -> SweepRow {
    let mut row = SweepRow::empty(x, algo.into(), n_rates);
    let file = match spec.point(x, algo) {
        Ok(f) => f,
        Err(e) => {
            row.error = Some(e);
            return row;
        }
    };
    let sc = file.to_scenario();
    match analyze(&sc) {
        Ok(r) => {
            row.analytic_tau_bps = Some(r.throughput_bps);
            row.fractions = r.rate_fractions.into_iter().map(Some).collect();
        }
        Err(AnalysisError::NoClosedForm(_)) if spec.with_sim => {}
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    }
    if spec.with_sim {
        let config = SimConfig {
            stream: index as u64,
            ..SimConfig::new(sc, spec.packets, spec.seed)
        };
        match simulate(&config) {
            Ok(s) => {
                row.sim_tau_bps = Some(s.throughput_est);
                row.sim_stderr_bps = Some(s.throughput_stderr);
                if row.analytic_tau_bps.is_none() {
                    row.fractions = s.transmit_fraction_est.into_iter().map(Some).collect();
                }
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

/// Runs every (grid point, algorithm) pair, in parallel on `threads` workers
/// (rayon's default when `None`). Rows come out in grid order, then in the
/// order of `spec.algorithms`; simulation streams are keyed by that position,
/// so the table does not depend on the thread count. Failures are recorded in
/// their row.
pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepTable, SpecError> {
    spec.check()?;
    let n_rates = spec.base.rates_bps.len();
    let tasks: Vec<(f64, AlgorithmName)> = spec
        .grid
        .iter()
        .flat_map(|&x| spec.algorithms.iter().map(move |&a| (x, a)))
        .collect();
    let work = || {
        tasks
            .par_iter()
            .enumerate()
            .map(|(k, &(x, a))| run_point(spec, k, x, a, n_rates))
            .collect::<Vec<_>>()
    };
    let rows = match threads {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool with a positive size")
            .install(work),
    };

    let mut notes = vec![format!("param: {}", spec.param)];
    let sim_only: Vec<&str> = spec
        .algorithms
        .iter()
        .map(|&a| AlgorithmKind::from(a))
        .filter(|k| spec.with_overhead && *k != AlgorithmKind::Arf)
        .map(AlgorithmKind::name)
        .collect();
    if !sim_only.is_empty() {
        notes.push(format!(
            "simulation only (no closed form with MAC overhead): {}; their f_i are simulated",
            sim_only.join(", ")
        ));
    }
    if spec.with_overhead {
        notes.push("f_i: share of time spent transmitting data at rate i".to_owned());
    }
    if spec.with_sim {
        notes.push(format!("simulation: {} packets, seed {}", spec.packets, spec.seed));
    }
    for (k, row) in rows.iter().enumerate() {
        if let Some(e) = &row.error {
            notes.push(format!("error in row {}: param={} algo={}: {e}", k + 1, row.param, row.algo));
        }
    }
    Ok(SweepTable {
        param: spec.param.clone(),
        n_rates,
        notes,
        rows,
    })
}
