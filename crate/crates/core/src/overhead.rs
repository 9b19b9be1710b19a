//! ARF over IEEE 802.11b DCF: inter-frame spacings, ACK time and binary
//! exponential back-off whose counter is carried across rate changes.
//!
//! State `i_gamma` is rate `i` entered with back-off counter `gamma`. The
//! counter counts failures since the last success, modulo `gamma_max + 1`.
//! Leaving `i_gamma` downward after `f` failures with no success since entry
//! carries the counter `(gamma + f) mod (gamma_max + 1)`; any other downward
//! exit carries `f mod (gamma_max + 1)`, and an upward exit resets it to 0.
//!
//! Unlike the overhead-free model, the lowest rate also tracks failure runs:
//! `f` failures there re-enter the lowest rate with the carried counter. The
//! rate process is unchanged by this (a failure already resets the success
//! run), but the counter is not.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, Matrix};
use crate::micro::{MicroChain, MicroSolution, Position};
use crate::model::{validate, AlgorithmKind, MacOverheadParams, Scenario};
use crate::throughput::{ChainSolution, ThroughputReport};
use crate::{AnalysisError, StateId};

/// Per-transmission DCF overheads.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverheadTimes {
    /// DIFS + SIFS + ACK, s.
    pub t_success: f64,
    /// DIFS, s.
    pub t_failure: f64,
    pub cw_min: u64,
    pub slot_time: f64,
}

impl OverheadTimes {
    /// Mean back-off in slots after `gamma` failures: `(2^gamma CW_min - 1) / 2`.
    pub fn backoff_slots(&self, gamma: u32) -> f64 {
        ((1u64 << gamma) * self.cw_min - 1) as f64 / 2.0
    }

    /// Mean back-off in seconds.
    pub fn backoff_mean(&self, gamma: u32) -> f64 {
        self.backoff_slots(gamma) * self.slot_time
    }

    /// Expected time of one transmission attempt made with counter `gamma`.
    pub fn per_attempt(&self, alpha: f64, airtime: f64, gamma: u32) -> f64 {
        airtime + self.backoff_mean(gamma) + alpha * self.t_success + (1.0 - alpha) * self.t_failure
    }
}

pub fn overhead_times(params: &MacOverheadParams) -> OverheadTimes {
    OverheadTimes {
        t_success: params.difs + params.sifs + params.t_ack,
        t_failure: params.difs,
        cw_min: params.cw_min,
        slot_time: params.slot_time,
    }
}

/// Expected visits to each micro state `S_j` (merged over the before/after
/// first success copies), sorted by `j`.
pub fn expected_visits(alpha: f64, s: u64, f: u64, position: Position) -> Vec<(i64, f64)> {
    MicroChain::new(alpha, s, f, position).solve().visits_by_run()
}

/// Position of rate `i` in the overhead-aware chain: every rate but the top
/// one has both exits (the lowest one's downward exit returns to itself).
pub fn overhead_position(i: usize, n: usize) -> Position {
    if i + 1 == n {
        Position::Highest
    } else {
        Position::Interior
    }
}

struct RateModel {
    alpha: f64,
    airtime: f64,
    micro: MicroSolution,
}

struct Model {
    rates: Vec<RateModel>,
    times: OverheadTimes,
    gamma_max: u32,
    f: u64,
}

impl Model {
    fn build(scenario: &Scenario) -> Result<Self, AnalysisError> {
        let sc = validate(scenario.clone())?;
        let kind = sc.algorithm.kind();
        if kind != AlgorithmKind::Arf {
            return Err(AnalysisError::NoClosedForm(kind));
        }
        let params = sc.overhead.ok_or(AnalysisError::MissingOverhead)?;
        let arf = sc.algorithm.arf_params();
        let n = sc.n_rates();
        let rates = (0..n)
            .map(|i| {
                let alpha = sc.alpha(i);
                RateModel {
                    alpha,
                    airtime: sc.mean_bits() / sc.rate(i),
                    micro: MicroChain::new(alpha, arf.s, arf.f, overhead_position(i, n)).solve(),
                }
            })
            .collect();
        Ok(Self {
            rates,
            times: overhead_times(&params),
            gamma_max: params.gamma_max,
            f: arf.f,
        })
    }

    fn modulus(&self) -> u64 {
        u64::from(self.gamma_max) + 1
    }

    fn sojourn(&self, i: usize, gamma: u32) -> f64 {
        let r = &self.rates[i];
        r.micro
            .states
            .iter()
            .zip(&r.micro.visits)
            .map(|(pos, y)| y * self.times.per_attempt(r.alpha, r.airtime, pos.backoff_counter(gamma, self.gamma_max)))
            .sum()
    }

    fn theta(&self, i: usize) -> f64 {
        let r = &self.rates[i];
        r.micro.expected_transmissions * r.airtime
    }

    fn transitions(&self, i: usize, gamma: u32) -> Vec<(StateId, f64)> {
        let m = self.modulus();
        let r = &self.rates[i];
        let down = i.saturating_sub(1);
        let fresh_counter = ((u64::from(gamma) + self.f) % m) as u32;
        let later_counter = (self.f % m) as u32;
        let mut out: Vec<(StateId, f64)> = Vec::new();
        let mut add = |state: StateId, p: f64| {
            if p <= 0.0 {
                return;
            }
            match out.iter_mut().find(|(s, _)| *s == state) {
                Some(e) => e.1 += p,
                None => out.push((state, p)),
            }
        };
        add(StateId::Backoff { rate: (i + 1).min(self.rates.len() - 1), counter: 0 }, r.micro.p_up);
        add(StateId::Backoff { rate: down, counter: fresh_counter }, r.micro.p_down_fresh);
        add(StateId::Backoff { rate: down, counter: later_counter }, r.micro.p_down_after_success);
        out
    }
}

/// Mean time in state `i_gamma`, including transmission time, back-off,
/// spacings and ACKs for every attempt made before the rate changes.
pub fn sojourn_with_overhead(i: usize, gamma: u32, scenario: &Scenario) -> Result<f64, AnalysisError> {
    let model = Model::build(scenario)?;
    Ok(model.sojourn(i, gamma))
}

/// Successor distribution of state `i_gamma`. Targets that coincide (for
/// example both downward exits when `gamma = 0`) are merged.
pub fn overhead_transitions(i: usize, gamma: u32, scenario: &Scenario) -> Result<Vec<(StateId, f64)>, AnalysisError> {
    let model = Model::build(scenario)?;
    Ok(model.transitions(i, gamma))
}

/// Embedded chain over the `(rate, counter)` states reachable from `1_0`.
#[derive(Clone, Debug)]
pub struct OverheadChain {
    pub states: Vec<StateId>,
    pub transitions: Matrix,
    /// Mean sojourn including overhead.
    pub mu: Vec<f64>,
    /// Mean pure transmission time.
    pub theta: Vec<f64>,
}

impl OverheadChain {
    /// Every edge with positive probability.
    pub fn edges(&self) -> Vec<(StateId, StateId)> {
        let n = self.states.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if self.transitions[(a, b)] > 0.0 {
                    out.push((self.states[a], self.states[b]));
                }
            }
        }
        out
    }
}

pub fn overhead_chain(scenario: &Scenario) -> Result<OverheadChain, AnalysisError> {
    let model = Model::build(scenario)?;
    let start = StateId::Backoff { rate: 0, counter: 0 };
    let mut index: BTreeMap<StateId, usize> = BTreeMap::new();
    let mut states = vec![start];
    let mut out_edges = Vec::new();
    index.insert(start, 0);
    let mut k = 0;
    while k < states.len() {
        let StateId::Backoff { rate, counter } = states[k] else {
            unreachable!("overhead chain only holds back-off states")
        };
        let next = model.transitions(rate, counter);
        for (s, _) in &next {
            if !index.contains_key(s) {
                index.insert(*s, states.len());
                states.push(*s);
            }
        }
        out_edges.push(next);
        k += 1;
    }
    // Order by (rate, counter) for stable reporting.
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by_key(|&k| states[k]);
    let sorted: Vec<StateId> = order.iter().map(|&k| states[k]).collect();
    let pos = |s: &StateId| sorted.binary_search(s).expect("state was discovered");

    let mut transitions = Matrix::zeros(sorted.len());
    for (from, edges) in states.iter().zip(&out_edges) {
        for (to, p) in edges {
            transitions[(pos(from), pos(to))] += p;
        }
    }
    let mut mu = Vec::with_capacity(sorted.len());
    let mut theta = Vec::with_capacity(sorted.len());
    for s in &sorted {
        let StateId::Backoff { rate, counter } = *s else { unreachable!() };
        mu.push(model.sojourn(rate, counter));
        theta.push(model.theta(rate));
    }
    Ok(OverheadChain {
        states: sorted,
        transitions,
        mu,
        theta,
    })
}

/// Steady-state ARF throughput with MAC overhead. The reported rate
/// fractions are the shares of total time spent actually transmitting at
/// each rate.
pub fn arf_mac_throughput(scenario: &Scenario) -> Result<ThroughputReport, AnalysisError> {
    let chain = overhead_chain(scenario)?;
    let pi = linalg::stationary(&chain.transitions).map_err(|_| AnalysisError::SingularChain)?;
    if linalg::balance_residual(&chain.transitions, &pi) > 1e-10 {
        return Err(AnalysisError::SingularChain);
    }
    let solution = ChainSolution::from_embedded(pi, chain.mu);
    Ok(ThroughputReport::assemble(scenario, chain.states, solution, chain.theta))
}
