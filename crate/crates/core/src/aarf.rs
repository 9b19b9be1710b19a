//! AARF and PAARF as a semi-Markov process over fall-back and probe states.
//!
//! At rate `i` the fall-back state `i_beta` waits for `2^beta * s`
//! consecutive successes (or `f` failures, which drop to `(i-1)_0`) and then
//! enters the probe state `i_beta^{+1}`, which transmits at rate `i+1`. A
//! successful probe moves to `(i+1)_0`; a failed one moves to
//! `i_{min(beta+1, beta_max)}`. The top rate has the single state `N_0`.
//!
//! Every state of a level is a fixed multiple of that level's `i_0`, and the
//! only flows between levels are probe successes upward and fall-back
//! failures into `i_0` downward, so the lattice reduces to a birth-death
//! chain over the `i_0` states. [`aarf_dense_stationary`] solves the full
//! embedded chain directly for cross-checking.

use alloc::vec;
use alloc::vec::Vec;

use crate::arf::{expected_transmissions, mean_sojourn, stationary_from_ratios, up_probability, Position};
use crate::linalg::{self, Matrix};
use crate::model::{validate, AarfParams, AlgorithmKind, Scenario};
use crate::throughput::{ChainSolution, ThroughputReport};
use crate::{AnalysisError, StateId};

/// How many probe packets a probe state may send.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeVariant {
    /// AARF: one probe packet.
    Single,
    /// PAARF: a second probe packet if the first fails.
    Persistent,
}

impl ProbeVariant {
    pub fn of(kind: AlgorithmKind) -> Option<Self> {
        match kind {
            AlgorithmKind::Arf => None,
            AlgorithmKind::Aarf => Some(ProbeVariant::Single),
            AlgorithmKind::Paarf => Some(ProbeVariant::Persistent),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeParams {
    /// Mean time in the probe state, s.
    pub mu: f64,
    /// Probability of moving up to `(i+1)_0`.
    pub p_up: f64,
    /// Probability of falling back to the next stage at rate `i`.
    pub p_back: f64,
}

/// Sojourn and exit probabilities of a probe state sending at a rate with
/// success probability `alpha_next`.
pub fn probe_params(alpha_next: f64, variant: ProbeVariant, mean_packet_bits: f64, rate_next: f64) -> ProbeParams {
    let airtime = mean_packet_bits / rate_next;
    let fail = 1.0 - alpha_next;
    match variant {
        ProbeVariant::Single => ProbeParams {
            mu: airtime,
            p_up: alpha_next,
            p_back: fail,
        },
        ProbeVariant::Persistent => ProbeParams {
            mu: (2.0 - alpha_next) * airtime,
            p_up: 2.0 * alpha_next - alpha_next * alpha_next,
            p_back: fail * fail,
        },
    }
}

/// Mean sojourn of fall-back state `i_stage` and its probability of exiting
/// toward the probe state (the rest exits to `(i-1)_0`). This is ARF at rate
/// `i` with the success threshold raised to `2^stage * s`.
pub fn fallback_sojourn_and_exit(
    alpha: f64,
    stage: u32,
    params: &AarfParams,
    mean_packet_bits: f64,
    rate: f64,
    position: Position,
) -> (f64, f64) {
    let threshold = params
        .threshold(stage)
        .expect("validated stage threshold fits in u64");
    let f = params.base.f;
    let x = expected_transmissions(alpha, threshold, f, position);
    let toward = match position {
        Position::Lowest => 1.0,
        Position::Interior => up_probability(alpha, threshold, f),
        Position::Highest => 0.0,
    };
    (mean_sojourn(x, mean_packet_bits, rate), toward)
}

/// Stationary probabilities of one level's states as multiples of `pi_{i_0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelCoefficients {
    /// Indexed by stage; `fallback[0] == 1`.
    pub fallback: Vec<f64>,
    /// Indexed by stage.
    pub probe: Vec<f64>,
}

/// Balance equations around the states of a level, in stage order.
///
/// `toward[beta]` is the probability that `i_beta` exits to its probe state
/// and `p_back` the probability that a probe fails. Stage `beta < beta_max`
/// is only entered from the previous stage's failed probe; the last stage is
/// also re-entered from its own failed probe, hence the
/// `1 / (1 - p_back * toward[beta_max])` factor there.
pub fn level_reduce(toward: &[f64], p_back: f64) -> Result<LevelCoefficients, AnalysisError> {
    assert!(!toward.is_empty());
    let last = toward.len() - 1;
    let mut fallback = Vec::with_capacity(toward.len());
    let mut chain = 1.0;
    for (stage, t) in toward.iter().enumerate() {
        if stage == 0 {
            fallback.push(1.0);
        } else if stage < last {
            fallback.push(chain);
        } else {
            let loop_exit = 1.0 - p_back * toward[last];
            if !(loop_exit > 0.0) {
                return Err(AnalysisError::DegenerateLoop);
            }
            fallback.push(chain / loop_exit);
        }
        chain *= t * p_back;
    }
    let probe = fallback.iter().zip(toward).map(|(c, t)| c * t).collect();
    Ok(LevelCoefficients { fallback, probe })
}

struct Level {
    mu_fallback: Vec<f64>,
    toward: Vec<f64>,
    probe: Option<ProbeParams>,
}

struct Lattice {
    levels: Vec<Level>,
}

impl Lattice {
    fn build(scenario: &Scenario) -> Result<Self, AnalysisError> {
        let sc = validate(scenario.clone())?;
        let kind = sc.algorithm.kind();
        let (params, variant) = match (sc.algorithm.aarf_params(), ProbeVariant::of(kind)) {
            (Some(p), Some(v)) => (p, v),
            _ => {
                return Err(AnalysisError::WrongAlgorithm {
                    expected: "aarf/paarf",
                    found: kind,
                })
            }
        };
        if sc.overhead.is_some() {
            return Err(AnalysisError::NoClosedForm(kind));
        }
        let n = sc.n_rates();
        let bits = sc.mean_bits();
        if n == 1 {
            return Ok(Self {
                levels: vec![Level {
                    mu_fallback: vec![bits / sc.rate(0)],
                    toward: vec![0.0],
                    probe: None,
                }],
            });
        }
        let mut levels = Vec::with_capacity(n);
        for i in 0..n {
            let position = Position::of(i, n);
            let stages = if i + 1 == n { 0 } else { params.beta_max };
            let (mu_fallback, toward) = (0..=stages)
                .map(|b| fallback_sojourn_and_exit(sc.alpha(i), b, &params, bits, sc.rate(i), position))
                .unzip();
            let probe = (i + 1 < n).then(|| probe_params(sc.alpha(i + 1), variant, bits, sc.rate(i + 1)));
            levels.push(Level {
                mu_fallback,
                toward,
                probe,
            });
        }
        Ok(Self { levels })
    }

    /// States in solver order: per level, `i_0, i_0^{+1}, i_1, i_1^{+1}, ...`.
    fn states(&self) -> Vec<StateId> {
        let mut out = Vec::new();
        for (rate, level) in self.levels.iter().enumerate() {
            for stage in 0..level.toward.len() as u32 {
                out.push(StateId::Fallback { rate, stage });
                if level.probe.is_some() {
                    out.push(StateId::Probe { rate, stage });
                }
            }
        }
        out
    }

    fn mu(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for level in &self.levels {
            for mu in &level.mu_fallback {
                out.push(*mu);
                if let Some(p) = &level.probe {
                    out.push(p.mu);
                }
            }
        }
        out
    }
}

/// Stationary solution of the AARF/PAARF lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct AarfChainSolution {
    pub states: Vec<StateId>,
    pub solution: ChainSolution,
    /// Per-level coefficients relative to `pi_{i_0}`.
    pub levels: Vec<LevelCoefficients>,
    /// Fraction of time transmitting at each rate; probe time counts toward
    /// the probed rate.
    pub rate_fractions: Vec<f64>,
}

/// Solves the lattice through its birth-death reduction.
pub fn aarf_stationary(scenario: &Scenario) -> Result<AarfChainSolution, AnalysisError> {
    let lattice = Lattice::build(scenario)?;
    let n = lattice.levels.len();
    let mut coefs = Vec::with_capacity(n);
    for level in &lattice.levels {
        let p_back = level.probe.map_or(0.0, |p| p.p_back);
        let mut c = level_reduce(&level.toward, p_back)?;
        if level.probe.is_none() {
            c.probe.clear();
        }
        coefs.push(c);
    }

    // Flow up out of level i equals flow down into i_0 from level i+1.
    let ratios: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| {
            let probe = lattice.levels[i].probe.expect("non-top level has probes");
            let up: f64 = coefs[i].probe.iter().map(|c| c * probe.p_up).sum();
            let above = &lattice.levels[i + 1];
            let down: f64 = coefs[i + 1]
                .fallback
                .iter()
                .zip(&above.toward)
                .map(|(c, t)| c * (1.0 - t))
                .sum();
            up / down
        })
        .collect();
    let anchors = stationary_from_ratios(&ratios, |rate| StateId::Fallback { rate, stage: 0 })?;

    let mut pi = Vec::new();
    for (a, c) in anchors.iter().zip(&coefs) {
        for stage in 0..c.fallback.len() {
            pi.push(a * c.fallback[stage]);
            if let Some(p) = c.probe.get(stage) {
                pi.push(a * p);
            }
        }
    }
    let total: f64 = pi.iter().sum();
    let states = lattice.states();
    for (k, p) in pi.iter_mut().enumerate() {
        *p /= total;
        if !(*p >= 1e-300) {
            return Err(AnalysisError::Underflow(states[k]));
        }
    }

    let solution = ChainSolution::from_embedded(pi, lattice.mu());
    let mut rate_fractions = vec![0.0; n];
    for (state, p) in states.iter().zip(&solution.p_time) {
        rate_fractions[state.tx_rate()] += p;
    }
    Ok(AarfChainSolution {
        states,
        solution,
        levels: coefs,
        rate_fractions,
    })
}

/// Transition matrix of the full embedded chain, with its states (same order
/// as [`aarf_stationary`]) and mean sojourns.
pub fn aarf_embedded_chain(scenario: &Scenario) -> Result<(Vec<StateId>, Matrix, Vec<f64>), AnalysisError> {
    let lattice = Lattice::build(scenario)?;
    let states = lattice.states();
    let index = |s: StateId| states.iter().position(|t| *t == s).expect("state in lattice");
    let n = lattice.levels.len();
    let mut p = Matrix::zeros(states.len());
    if n == 1 {
        p[(0, 0)] = 1.0;
        return Ok((states, p, lattice.mu()));
    }
    for (rate, level) in lattice.levels.iter().enumerate() {
        let last = level.toward.len() as u32 - 1;
        for stage in 0..=last {
            let from = index(StateId::Fallback { rate, stage });
            let toward = level.toward[stage as usize];
            if let Some(probe) = &level.probe {
                let at = index(StateId::Probe { rate, stage });
                p[(from, at)] += toward;
                p[(at, index(StateId::Fallback { rate: rate + 1, stage: 0 }))] += probe.p_up;
                let back = (stage + 1).min(last);
                p[(at, index(StateId::Fallback { rate, stage: back }))] += probe.p_back;
            }
            if rate > 0 {
                p[(from, index(StateId::Fallback { rate: rate - 1, stage: 0 }))] += 1.0 - toward;
            }
        }
    }
    Ok((states, p, lattice.mu()))
}

/// Stationary distribution of the full embedded chain by a dense solve.
pub fn aarf_dense_stationary(scenario: &Scenario) -> Result<(Vec<StateId>, Vec<f64>), AnalysisError> {
    let (states, p, _) = aarf_embedded_chain(scenario)?;
    let pi = linalg::stationary(&p).map_err(|_| AnalysisError::SingularChain)?;
    Ok((states, pi))
}

/// Steady-state throughput of AARF or PAARF (picked by the scenario's
/// algorithm tag) without MAC overhead.
pub fn aarf_throughput(scenario: &Scenario) -> Result<ThroughputReport, AnalysisError> {
    let sol = aarf_stationary(scenario)?;
    let theta = sol.solution.mu.clone();
    Ok(ThroughputReport::assemble(scenario, sol.states, sol.solution, theta))
}

/// [`aarf_throughput`] restricted to PAARF scenarios.
pub fn paarf_throughput(scenario: &Scenario) -> Result<ThroughputReport, AnalysisError> {
    match scenario.algorithm.kind() {
        AlgorithmKind::Paarf => aarf_throughput(scenario),
        found => Err(AnalysisError::WrongAlgorithm {
            expected: "paarf",
            found,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arf::arf_throughput;
    use crate::micro::micro_chain_solve;
    use crate::model::{Algorithm, ArfParams, ChannelModel, RateLadder, TrafficModel};

    const BITS: f64 = 8000.0;

    fn params(s: u64, f: u64, beta_max: u32) -> AarfParams {
        AarfParams {
            base: ArfParams { s, f },
            beta_max,
        }
    }

    fn scenario(rates: Vec<f64>, alphas: Vec<f64>, p: AarfParams, persistent: bool) -> Scenario {
        Scenario {
            ladder: RateLadder::new(rates),
            channel: ChannelModel::new(alphas),
            traffic: TrafficModel::deterministic(BITS),
            algorithm: if persistent { Algorithm::Paarf(p) } else { Algorithm::Aarf(p) },
            overhead: None,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn probe_examples() {
        let a = probe_params(0.2, ProbeVariant::Single, BITS, 2e6);
        assert_eq!(a.p_up, 0.2);
        assert_eq!(a.mu, 4e-3);
        let p = probe_params(0.2, ProbeVariant::Persistent, BITS, 2e6);
        assert!((p.p_up - 0.36).abs() < 1e-15);
        assert!((p.p_up + p.p_back - 1.0).abs() < 1e-15);
        let p = probe_params(0.5, ProbeVariant::Persistent, BITS, 2e6);
        assert!((p.mu - 1.5 * 4e-3).abs() < 1e-18);
    }

    #[test]
    fn persistent_probe_is_more_likely_to_succeed() {
        let a = probe_params(0.5, ProbeVariant::Single, BITS, 1e6);
        let p = probe_params(0.5, ProbeVariant::Persistent, BITS, 1e6);
        assert!(p.p_up > a.p_up);
    }

    #[test]
    fn stage_zero_is_plain_arf() {
        let p = params(10, 2, 3);
        for (alpha, pos) in [(0.9, Position::Lowest), (0.6, Position::Interior), (0.3, Position::Highest)] {
            let (mu, toward) = fallback_sojourn_and_exit(alpha, 0, &p, BITS, 1e6, pos);
            let x = expected_transmissions(alpha, 10, 2, pos);
            assert_eq!(mu, mean_sojourn(x, BITS, 1e6));
            if pos == Position::Interior {
                assert_eq!(toward, up_probability(alpha, 10, 2));
            }
        }
    }

    #[test]
    fn later_stages_double_the_threshold() {
        let p = params(10, 2, 3);
        assert_eq!(p.threshold(1), Some(20));
        let (mu, toward) = fallback_sojourn_and_exit(0.9, 1, &p, BITS, 1e6, Position::Interior);
        assert_eq!(toward, up_probability(0.9, 20, 2));
        assert_eq!(mu, mean_sojourn(expected_transmissions(0.9, 20, 2, Position::Interior), BITS, 1e6));

        let p = params(1, 1, 2);
        let (mu, toward) = fallback_sojourn_and_exit(0.5, 2, &p, BITS, 1e6, Position::Interior);
        let oracle = micro_chain_solve(0.5, 4, 1, Position::Interior);
        assert!(rel(toward, oracle.p_up) < 1e-12);
        assert!(rel(mu, oracle.expected_transmissions * BITS / 1e6) < 1e-12);
    }

    #[test]
    fn single_stage_level_by_hand() {
        // i_0 -> probe w.p. t, probe -> i_0 w.p. b: pi_probe = t * pi_{i_0}.
        let c = level_reduce(&[0.4], 0.7).unwrap();
        assert_eq!(c.fallback, vec![1.0]);
        assert_eq!(c.probe, vec![0.4]);

        // Two stages: pi_1 = pi_1^+ * b + pi_0^+ * b, pi_1^+ = t1 * pi_1.
        let (t0, t1, b) = (0.6, 0.3, 0.5);
        let c = level_reduce(&[t0, t1], b).unwrap();
        let want = t0 * b / (1.0 - b * t1);
        assert!(rel(c.fallback[1], want) < 1e-15);
        assert!(rel(c.probe[1], want * t1) < 1e-15);
    }

    #[test]
    fn degenerate_loop_is_reported() {
        assert!(matches!(level_reduce(&[1.0, 1.0], 1.0), Err(AnalysisError::DegenerateLoop)));
    }

    #[test]
    fn reduction_matches_the_dense_chain() {
        let cases = [
            (vec![1e6, 2e6], vec![0.9, 0.2], params(10, 2, 3), false),
            (vec![1e6, 2e6], vec![0.9, 0.7], params(10, 2, 3), true),
            (vec![1e6, 2e6, 5.5e6, 11e6], vec![0.95, 0.8, 0.5, 0.3], params(3, 2, 2), false),
            (vec![1e6, 2e6, 5.5e6], vec![0.4, 0.6, 0.9], params(2, 1, 0), true),
            (vec![1e6, 2e6, 5.5e6], vec![0.3, 0.2, 0.1], params(12, 4, 3), false),
        ];
        for (rates, alphas, p, persistent) in cases {
            let sc = scenario(rates, alphas, p, persistent);
            let reduced = aarf_stationary(&sc).unwrap();
            let (states, dense) = aarf_dense_stationary(&sc).unwrap();
            assert_eq!(states, reduced.states);
            for (a, b) in reduced.solution.pi.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn fractions_sum_to_one() {
        let sc = scenario(vec![1e6, 2e6, 5.5e6], vec![0.9, 0.6, 0.3], params(10, 2, 3), true);
        let r = aarf_throughput(&sc).unwrap();
        assert!((r.rate_fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((r.solution.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hopeless_upper_rate_pins_the_lower_one() {
        let sc = scenario(vec![1e6, 2e6], vec![0.9, 1e-4], params(10, 2, 3), false);
        let r = aarf_throughput(&sc).unwrap();
        assert!(r.rate_fractions[0] > 0.99);
    }

    #[test]
    fn probe_changes_the_answer_even_without_stages() {
        let sc = scenario(vec![1e6, 2e6], vec![0.9, 0.5], params(10, 2, 0), false);
        let aarf = aarf_throughput(&sc).unwrap();
        let arf = arf_throughput(&sc.with_algorithm(Algorithm::Arf(ArfParams { s: 10, f: 2 }))).unwrap();
        assert!(rel(aarf.rate_fractions[0], arf.rate_fractions[0]) > 1e-3);
    }

    #[test]
    fn tags_share_one_pipeline() {
        let sc = scenario(vec![1e6, 2e6], vec![0.9, 0.5], params(10, 2, 3), true);
        assert_eq!(aarf_throughput(&sc).unwrap(), paarf_throughput(&sc).unwrap());
        let single = scenario(vec![1e6, 2e6], vec![0.9, 0.5], params(10, 2, 3), false);
        assert!(matches!(
            paarf_throughput(&single),
            Err(AnalysisError::WrongAlgorithm { .. })
        ));
    }

    #[test]
    fn one_rate_is_constant() {
        let sc = scenario(vec![2e6], vec![0.5], params(10, 2, 3), false);
        let r = aarf_throughput(&sc).unwrap();
        assert!(rel(r.throughput_bps, 1e6) < 1e-12);
    }

    #[test]
    fn overhead_has_no_closed_form() {
        let mut sc = scenario(vec![1e6, 2e6], vec![0.9, 0.5], params(10, 2, 3), false);
        sc.overhead = Some(crate::MacOverheadParams::ieee80211b());
        assert!(matches!(aarf_throughput(&sc), Err(AnalysisError::NoClosedForm(_))));
    }
}
