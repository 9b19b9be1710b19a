//! Packet-level Monte Carlo simulation of ARF, AARF and PAARF.
//!
//! The algorithms run as literal per-packet state machines over a Bernoulli
//! channel, optionally with DCF timing (uniform back-off draws, spacings and
//! ACKs). The simulator labels its position with the same [`StateId`]s as the
//! analytic chains so that transition frequencies and sojourn times can be
//! compared state by state.
//!
//! Randomness comes from a ChaCha8 stream keyed by `seed` and selected by
//! `stream`; each packet consumes its draws in a fixed order (length if the
//! length distribution is empirical, then outcome, then back-off slots), so a
//! run is a pure function of its configuration.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aarf::ProbeVariant;
use crate::model::{validate, AlgorithmKind, LengthDistribution, Scenario, ValidationErrors};
use crate::overhead::{overhead_times, OverheadTimes};
use crate::StateId;

pub const DEFAULT_BATCHES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Number of transmission attempts to simulate, warm-up included.
    pub n_packets: u64,
    pub seed: u64,
    /// Leading attempts excluded from every estimate.
    pub warmup_packets: u64,
    /// Batches for the batch-means standard errors.
    pub batches: usize,
    /// ChaCha stream id; lets independent runs share a seed.
    pub stream: u64,
}

impl SimConfig {
    /// Default warm-up of 1% of the packets and 100 batches.
    pub fn new(scenario: Scenario, n_packets: u64, seed: u64) -> Self {
        Self {
            scenario,
            n_packets,
            seed,
            warmup_packets: n_packets / 100,
            batches: DEFAULT_BATCHES,
            stream: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(ValidationErrors),
    #[error("n_packets must be at least 1")]
    NoPackets,
    #[error("warm-up of {warmup} packets leaves nothing of {n_packets} to measure")]
    WarmupTooLong { warmup: u64, n_packets: u64 },
    #[error("at least one batch is required")]
    NoBatches,
    #[error("state {0} was never left during the measured window")]
    UnobservedState(StateId),
}

/// Sojourn-time samples of one state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SojournStats {
    pub visits: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl SojournStats {
    fn push(&mut self, x: f64) {
        self.visits += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.visits as f64
    }

    /// Standard error of the mean; visits are independent given the state.
    pub fn stderr(&self) -> f64 {
        if self.visits < 2 {
            return f64::INFINITY;
        }
        let n = self.visits as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        libm::sqrt(var / n)
    }
}

/// Probe bookkeeping for AARF/PAARF runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbeStats {
    /// Probe-state visits by number of probe packets sent (index 1 or 2).
    pub visits_by_attempts: [u64; 3],
    /// Second probe packets sent although the first one succeeded.
    pub second_after_success: u64,
    /// PAARF visits whose first probe failed but sent no second one.
    pub missing_second: u64,
    /// Per stage, the smallest and largest success run that triggered a probe.
    pub trigger_runs: BTreeMap<u32, (u64, u64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Delivered bits over total time, bit/s.
    pub throughput_est: f64,
    pub throughput_stderr: f64,
    /// Share of total time (overhead included) spent at each rate.
    pub time_fraction_est: Vec<f64>,
    pub time_fraction_stderr: Vec<f64>,
    /// Share of total time spent transmitting data at each rate; equal to
    /// `time_fraction_est` without overhead.
    pub transmit_fraction_est: Vec<f64>,
    pub transmit_fraction_stderr: Vec<f64>,
    /// Traversals of each edge, for state visits that began after warm-up.
    pub transition_counts: BTreeMap<(StateId, StateId), u64>,
    pub sojourns: BTreeMap<StateId, SojournStats>,
    pub probes: ProbeStats,
    /// Measured (post warm-up) time, s.
    pub total_sim_time: f64,
    /// Measured (post warm-up) transmission attempts.
    pub measured_packets: u64,
    pub batches: usize,
}

impl SimResult {
    /// Empirical probability of `from -> to` among exits from `from`, with its
    /// binomial standard error.
    pub fn transition_probability(&self, from: StateId, to: StateId) -> Option<(f64, f64)> {
        let exits: u64 = self
            .transition_counts
            .range((from, StateId::Rate { rate: 0 })..)
            .take_while(|((a, _), _)| *a == from)
            .map(|(_, c)| c)
            .sum();
        if exits == 0 {
            return None;
        }
        let hits = self.transition_counts.get(&(from, to)).copied().unwrap_or(0);
        let p = hits as f64 / exits as f64;
        Some((p, libm::sqrt(p * (1.0 - p) / exits as f64)))
    }
}

#[derive(Clone, Debug)]
struct Batch {
    bits: f64,
    time: f64,
    rate_time: Vec<f64>,
    tx_time: Vec<f64>,
}

enum Lengths {
    Fixed(f64),
    Drawn(Vec<f64>, WeightedIndex<f64>),
}

struct Machine {
    kind: AlgorithmKind,
    n: usize,
    s: u64,
    f: u64,
    beta_max: u32,
    with_overhead: bool,
    rate: usize,
    stage: u32,
    probing: bool,
    probe_attempts: u32,
    first_probe_failed: bool,
    succ_run: u64,
    fail_run: u64,
    counter: u32,
}

impl Machine {
    fn state(&self) -> StateId {
        match self.kind {
            AlgorithmKind::Arf if self.with_overhead => StateId::Backoff {
                rate: self.rate,
                counter: self.counter,
            },
            AlgorithmKind::Arf => StateId::Rate { rate: self.rate },
            _ if self.probing => StateId::Probe {
                rate: self.rate,
                stage: self.stage,
            },
            _ => StateId::Fallback {
                rate: self.rate,
                stage: self.stage,
            },
        }
    }

    fn tx_rate(&self) -> usize {
        if self.probing {
            self.rate + 1
        } else {
            self.rate
        }
    }

    fn threshold(&self) -> u64 {
        self.s << self.stage
    }

    fn reset_runs(&mut self) {
        self.succ_run = 0;
        self.fail_run = 0;
    }

    /// Applies one outcome; returns true if the chain state changed (or was
    /// re-entered).
    fn step(&mut self, ok: bool, probes: &mut ProbeStats) -> bool {
        match self.kind {
            AlgorithmKind::Arf => self.step_arf(ok),
            kind => {
                let variant = ProbeVariant::of(kind).expect("aarf family");
                if self.probing {
                    self.step_probe(ok, variant, probes)
                } else {
                    self.step_fallback(ok, probes)
                }
            }
        }
    }

    fn step_arf(&mut self, ok: bool) -> bool {
        if ok {
            self.succ_run += 1;
            self.fail_run = 0;
            if self.rate + 1 < self.n && self.succ_run == self.s {
                self.rate += 1;
                self.reset_runs();
                return true;
            }
        } else {
            self.fail_run += 1;
            self.succ_run = 0;
            if self.fail_run == self.f {
                if self.rate > 0 {
                    self.rate -= 1;
                    self.reset_runs();
                    return true;
                }
                if self.with_overhead {
                    // Lowest rate: re-entered with the carried counter.
                    self.reset_runs();
                    return true;
                }
            }
        }
        false
    }

    fn step_fallback(&mut self, ok: bool, probes: &mut ProbeStats) -> bool {
        if ok {
            self.succ_run += 1;
            self.fail_run = 0;
            if self.rate + 1 < self.n && self.succ_run == self.threshold() {
                let e = probes
                    .trigger_runs
                    .entry(self.stage)
                    .or_insert((self.succ_run, self.succ_run));
                e.0 = e.0.min(self.succ_run);
                e.1 = e.1.max(self.succ_run);
                self.probing = true;
                self.probe_attempts = 0;
                self.first_probe_failed = false;
                self.reset_runs();
                return true;
            }
        } else {
            self.fail_run += 1;
            self.succ_run = 0;
            if self.fail_run == self.f && self.rate > 0 {
                self.rate -= 1;
                self.stage = 0;
                self.reset_runs();
                return true;
            }
        }
        false
    }

    fn step_probe(&mut self, ok: bool, variant: ProbeVariant, probes: &mut ProbeStats) -> bool {
        self.probe_attempts += 1;
        if self.probe_attempts == 2 && !self.first_probe_failed {
            probes.second_after_success += 1;
        }
        if self.probe_attempts == 1 && !ok {
            self.first_probe_failed = true;
        }
        let may_retry = variant == ProbeVariant::Persistent && self.probe_attempts == 1;
        if !ok && may_retry {
            return false;
        }
        if variant == ProbeVariant::Persistent && self.probe_attempts == 1 && self.first_probe_failed {
            probes.missing_second += 1;
        }
        probes.visits_by_attempts[self.probe_attempts.min(2) as usize] += 1;
        self.probing = false;
        if ok {
            self.rate += 1;
            self.stage = 0;
        } else {
            self.stage = (self.stage + 1).min(self.beta_max);
        }
        self.reset_runs();
        true
    }
}

fn batch_stderr(samples: impl Iterator<Item = f64> + Clone, count: usize) -> f64 {
    if count < 2 {
        return 0.0;
    }
    let n = count as f64;
    let mean = samples.clone().sum::<f64>() / n;
    let ss: f64 = samples.map(|x| (x - mean) * (x - mean)).sum();
    libm::sqrt(ss / (n - 1.0) / n)
}

/// Runs the simulation. Identical configurations give identical results.
pub fn simulate(config: &SimConfig) -> Result<SimResult, SimError> {
    let sc = validate(config.scenario.clone()).map_err(SimError::Invalid)?;
    if config.n_packets == 0 {
        return Err(SimError::NoPackets);
    }
    if config.warmup_packets >= config.n_packets {
        return Err(SimError::WarmupTooLong {
            warmup: config.warmup_packets,
            n_packets: config.n_packets,
        });
    }
    if config.batches == 0 {
        return Err(SimError::NoBatches);
    }

    let n = sc.n_rates();
    let rates = sc.ladder.rates.clone();
    let alphas = sc.channel.alphas.clone();
    let lengths = match &sc.traffic.lengths {
        LengthDistribution::Deterministic => Lengths::Fixed(sc.mean_bits()),
        LengthDistribution::Empirical(points) => {
            let weights = WeightedIndex::new(points.iter().map(|p| p.1)).expect("validated weights");
            Lengths::Drawn(points.iter().map(|p| p.0).collect(), weights)
        }
    };
    let dcf: Option<(OverheadTimes, u32)> = sc.overhead.map(|o| (overhead_times(&o), o.gamma_max));

    let arf = sc.algorithm.arf_params();
    let mut m = Machine {
        kind: sc.algorithm.kind(),
        n,
        s: arf.s,
        f: arf.f,
        beta_max: sc.algorithm.aarf_params().map_or(0, |p| p.beta_max),
        with_overhead: dcf.is_some(),
        rate: 0,
        stage: 0,
        probing: false,
        probe_attempts: 0,
        first_probe_failed: false,
        succ_run: 0,
        fail_run: 0,
        counter: 0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);

    let measured = config.n_packets - config.warmup_packets;
    let n_batches = (config.batches as u64).min(measured) as usize;
    let mut batches = vec![
        Batch {
            bits: 0.0,
            time: 0.0,
            rate_time: vec![0.0; n],
            tx_time: vec![0.0; n],
        };
        n_batches
    ];

    let mut probes = ProbeStats::default();
    let mut transition_counts: BTreeMap<(StateId, StateId), u64> = BTreeMap::new();
    let mut sojourns: BTreeMap<StateId, SojournStats> = BTreeMap::new();
    let mut clock = 0.0f64;
    let mut state = m.state();
    let mut entry_clock = 0.0f64;
    let mut entry_measured = config.warmup_packets == 0;

    for k in 0..config.n_packets {
        let tx = m.tx_rate();
        let bits = match &lengths {
            Lengths::Fixed(l) => *l,
            Lengths::Drawn(values, dist) => values[dist.sample(&mut rng)],
        };
        let ok = rng.random::<f64>() < alphas[tx];
        let airtime = bits / rates[tx];
        let mut dt = airtime;
        if let Some((times, gamma_max)) = &dcf {
            let window = (1u64 << m.counter) * times.cw_min;
            let slots = rng.random_range(0..window);
            dt += slots as f64 * times.slot_time + if ok { times.t_success } else { times.t_failure };
            m.counter = if ok { 0 } else { (m.counter + 1) % (gamma_max + 1) };
        }
        clock += dt;

        if k >= config.warmup_packets {
            let idx = ((k - config.warmup_packets) * n_batches as u64 / measured) as usize;
            let b = &mut batches[idx];
            b.time += dt;
            b.rate_time[tx] += dt;
            b.tx_time[tx] += airtime;
            if ok {
                b.bits += bits;
            }
        }

        if m.step(ok, &mut probes) {
            let next = m.state();
            if entry_measured {
                *transition_counts.entry((state, next)).or_insert(0) += 1;
                sojourns.entry(state).or_default().push(clock - entry_clock);
            }
            state = next;
            entry_clock = clock;
            entry_measured = k + 1 >= config.warmup_packets;
        }
    }

    let total_time: f64 = batches.iter().map(|b| b.time).sum();
    let total_bits: f64 = batches.iter().map(|b| b.bits).sum();
    let throughput_stderr = batch_stderr(batches.iter().map(|b| b.bits / b.time), n_batches);
    let mut time_fraction_est = vec![0.0; n];
    let mut time_fraction_stderr = vec![0.0; n];
    let mut transmit_fraction_est = vec![0.0; n];
    let mut transmit_fraction_stderr = vec![0.0; n];
    for i in 0..n {
        time_fraction_est[i] = batches.iter().map(|b| b.rate_time[i]).sum::<f64>() / total_time;
        transmit_fraction_est[i] = batches.iter().map(|b| b.tx_time[i]).sum::<f64>() / total_time;
        time_fraction_stderr[i] = batch_stderr(batches.iter().map(|b| b.rate_time[i] / b.time), n_batches);
        transmit_fraction_stderr[i] = batch_stderr(batches.iter().map(|b| b.tx_time[i] / b.time), n_batches);
    }

    Ok(SimResult {
        throughput_est: total_bits / total_time,
        throughput_stderr,
        time_fraction_est,
        time_fraction_stderr,
        transmit_fraction_est,
        transmit_fraction_stderr,
        transition_counts,
        sojourns,
        probes,
        total_sim_time: total_time,
        measured_packets: measured,
        batches: n_batches,
    })
}

/// Simulates `config` and estimates the probability of the edge
/// `from -> to`.
pub fn estimate_transition_probability(config: &SimConfig, from: StateId, to: StateId) -> Result<(f64, f64), SimError> {
    let result = simulate(config)?;
    result
        .transition_probability(from, to)
        .ok_or(SimError::UnobservedState(from))
}
