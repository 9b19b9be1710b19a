use alloc::vec;
use alloc::vec::Vec;

use crate::model::{AlgorithmKind, Scenario};
use crate::{aarf, arf, overhead, AnalysisError, StateId};

/// Stationary solution of a semi-Markov process: embedded-chain
/// probabilities, mean sojourn times and long-run time fractions
/// `p_k = pi_k mu_k / sum(pi mu)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSolution {
    pub pi: Vec<f64>,
    pub mu: Vec<f64>,
    pub p_time: Vec<f64>,
}

impl ChainSolution {
    pub fn from_embedded(pi: Vec<f64>, mu: Vec<f64>) -> Self {
        debug_assert_eq!(pi.len(), mu.len());
        let total: f64 = pi.iter().zip(&mu).map(|(p, m)| p * m).sum();
        let p_time = pi.iter().zip(&mu).map(|(p, m)| p * m / total).collect();
        Self { pi, mu, p_time }
    }

    /// Mean time between state transitions, `sum(pi mu)`.
    pub fn mean_cycle(&self) -> f64 {
        self.pi.iter().zip(&self.mu).map(|(p, m)| p * m).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThroughputReport {
    pub algorithm: AlgorithmKind,
    pub with_overhead: bool,
    pub states: Vec<StateId>,
    pub solution: ChainSolution,
    /// Mean pure transmission time per state; equals `mu` without overhead.
    pub theta: Vec<f64>,
    /// Long-run fraction of time spent transmitting at each rate (`f_i`
    /// without overhead, `g_i` with it).
    pub rate_fractions: Vec<f64>,
    /// `sum_i fraction_i * alpha_i * R_i` in bit/s.
    pub throughput_bps: f64,
}

impl ThroughputReport {
    pub(crate) fn assemble(
        scenario: &Scenario,
        states: Vec<StateId>,
        solution: ChainSolution,
        theta: Vec<f64>,
    ) -> Self {
        let n = scenario.n_rates();
        let cycle = solution.mean_cycle();
        let mut rate_fractions = vec![0.0; n];
        for ((state, pi), th) in states.iter().zip(&solution.pi).zip(&theta) {
            rate_fractions[state.tx_rate()] += pi * th / cycle;
        }
        let throughput_bps = rate_fractions
            .iter()
            .enumerate()
            .map(|(i, f)| f * scenario.alpha(i) * scenario.rate(i))
            .sum();
        Self {
            algorithm: scenario.algorithm.kind(),
            with_overhead: scenario.overhead.is_some(),
            states,
            solution,
            theta,
            rate_fractions,
            throughput_bps,
        }
    }

    pub fn pi_of(&self, state: StateId) -> Option<f64> {
        self.states
            .iter()
            .position(|s| *s == state)
            .map(|k| self.solution.pi[k])
    }
}

/// Routes a scenario to its closed-form solver: ARF with or without MAC
/// overhead, AARF and PAARF without it.
pub fn analyze(scenario: &Scenario) -> Result<ThroughputReport, AnalysisError> {
    match (scenario.algorithm.kind(), scenario.overhead.is_some()) {
        (AlgorithmKind::Arf, false) => arf::arf_throughput(scenario),
        (AlgorithmKind::Arf, true) => overhead::arf_mac_throughput(scenario),
        (_, false) => aarf::aarf_throughput(scenario),
        (kind, true) => Err(AnalysisError::NoClosedForm(kind)),
    }
}
