//! ARF as a birth-death semi-Markov process over the rates.
//!
//! Within a rate the algorithm counts consecutive outcomes (see
//! [`crate::micro`]); the closed forms below give the expected number of
//! transmissions before the rate changes and the probability that the change
//! is upward. Geometric sums are accumulated term by term rather than through
//! `(1 - x^n) / (1 - x)`, which cancels badly for `x` near 1.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{validate, Algorithm, Scenario};
use crate::throughput::{ChainSolution, ThroughputReport};
use crate::{AnalysisError, StateId};

pub use crate::micro::Position;

pub(crate) fn power(x: f64, n: u64) -> f64 {
    let mut p = 1.0;
    for _ in 0..n {
        p *= x;
    }
    p
}

/// `sum_{j=from}^{to-1} x^j`, summed directly.
pub(crate) fn geometric(x: f64, from: u64, to: u64) -> f64 {
    let mut term = power(x, from);
    let mut sum = 0.0;
    for _ in from..to {
        sum += term;
        term *= x;
    }
    sum
}

/// Expected number of transmissions made at a rate before ARF leaves it,
/// starting from a fresh run.
///
/// At the lowest rate only `s` matters (the wait for `s` successes in a row),
/// at the highest only `f`.
pub fn expected_transmissions(alpha: f64, s: u64, f: u64, position: Position) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0 && s >= 1 && f >= 1);
    let fail = 1.0 - alpha;
    match position {
        Position::Lowest => geometric(alpha, 0, s) / power(alpha, s),
        Position::Highest => geometric(fail, 0, f) / power(fail, f),
        Position::Interior => {
            let num = geometric(alpha, 0, s) * geometric(fail, 0, f);
            if s == 1 || f == 1 {
                num
            } else {
                num / (1.0 - geometric(alpha, 1, s) * geometric(fail, 1, f))
            }
        }
    }
}

/// Probability that ARF leaves an interior rate upward. The downward
/// probability is the complement; the lowest rate always moves up and the
/// highest always down.
pub fn up_probability(alpha: f64, s: u64, f: u64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0 && s >= 1 && f >= 1);
    let fail = 1.0 - alpha;
    let num = power(alpha, s) * geometric(fail, 0, f);
    if s == 1 || f == 1 {
        num
    } else {
        num / (1.0 - geometric(alpha, 1, s) * geometric(fail, 1, f))
    }
}

/// Mean time spent at a rate: transmissions times mean packet airtime.
pub fn mean_sojourn(expected_transmissions: f64, mean_packet_bits: f64, rate: f64) -> f64 {
    expected_transmissions * mean_packet_bits / rate
}

/// Stationary distribution of the birth-death chain with up-probabilities
/// `up[i] = p_{i,i+1}` and down-probabilities `1 - up[i]`.
///
/// The boundaries must be `up[0] = 1` and `up[N-1] = 0` (a single state is
/// accepted as is).
pub fn birth_death_stationary(up: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let n = up.len();
    if n == 0 {
        return Err(AnalysisError::BadBoundary);
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    if up[0] != 1.0 || up[n - 1] != 0.0 {
        return Err(AnalysisError::BadBoundary);
    }
    let ratios: Vec<f64> = (0..n - 1).map(|k| up[k] / (1.0 - up[k + 1])).collect();
    stationary_from_ratios(&ratios, |k| StateId::Rate { rate: k })
}

/// `w_0 = 1, w_{k+1} = w_k * ratios[k]`, normalized. Products are rescaled
/// as they go so that long ladders with extreme ratios do not overflow.
pub(crate) fn stationary_from_ratios(
    ratios: &[f64],
    label: impl Fn(usize) -> StateId,
) -> Result<Vec<f64>, AnalysisError> {
    const RESCALE_ABOVE: f64 = 1e100;
    let mut w = Vec::with_capacity(ratios.len() + 1);
    w.push(1.0);
    for r in ratios {
        let next = w[w.len() - 1] * r;
        w.push(next);
        if next > RESCALE_ABOVE {
            for v in w.iter_mut() {
                *v /= next;
            }
        }
    }
    let total: f64 = w.iter().sum();
    for (k, v) in w.iter_mut().enumerate() {
        *v /= total;
        if !(*v >= 1e-300) {
            return Err(AnalysisError::Underflow(label(k)));
        }
    }
    Ok(w)
}

/// States, embedded-chain probabilities and sojourns of ARF without overhead.
pub fn arf_chain(scenario: &Scenario) -> Result<(Vec<StateId>, ChainSolution), AnalysisError> {
    let sc = validate(scenario.clone())?;
    let p = match sc.algorithm {
        Algorithm::Arf(p) => p,
        other => {
            return Err(AnalysisError::WrongAlgorithm {
                expected: "arf",
                found: other.kind(),
            })
        }
    };
    let n = sc.n_rates();
    let states = (0..n).map(|rate| StateId::Rate { rate }).collect();
    if n == 1 {
        let mu = vec![sc.mean_bits() / sc.rate(0)];
        return Ok((states, ChainSolution::from_embedded(vec![1.0], mu)));
    }

    let mut up = vec![0.0; n];
    let mut mu = vec![0.0; n];
    for i in 0..n {
        let position = Position::of(i, n);
        up[i] = match position {
            Position::Lowest => 1.0,
            Position::Highest => 0.0,
            Position::Interior => up_probability(sc.alpha(i), p.s, p.f),
        };
        let x = expected_transmissions(sc.alpha(i), p.s, p.f, position);
        mu[i] = mean_sojourn(x, sc.mean_bits(), sc.rate(i));
    }
    let pi = birth_death_stationary(&up)?;
    Ok((states, ChainSolution::from_embedded(pi, mu)))
}

/// Steady-state ARF throughput without MAC overhead.
pub fn arf_throughput(scenario: &Scenario) -> Result<ThroughputReport, AnalysisError> {
    if scenario.overhead.is_some() {
        return Err(AnalysisError::UnexpectedOverhead);
    }
    let (states, solution) = arf_chain(scenario)?;
    let theta = solution.mu.clone();
    Ok(ThroughputReport::assemble(scenario, states, solution, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::micro::micro_chain_solve;
    use crate::model::{ArfParams, ChannelModel, RateLadder, TrafficModel};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn arf(rates: Vec<f64>, alphas: Vec<f64>, s: u64, f: u64) -> Scenario {
        Scenario {
            ladder: RateLadder::new(rates),
            channel: ChannelModel::new(alphas),
            traffic: TrafficModel::deterministic(1000.0),
            algorithm: Algorithm::Arf(ArfParams { s, f }),
            overhead: None,
        }
    }

    #[test]
    fn expected_transmissions_examples() {
        assert_eq!(expected_transmissions(0.5, 1, 9, Position::Lowest), 2.0);
        assert_eq!(expected_transmissions(0.5, 1, 1, Position::Interior), 1.0);
        assert!(rel(expected_transmissions(0.5, 2, 2, Position::Interior), 3.0) < 1e-15);
    }

    #[test]
    fn up_probability_examples() {
        assert_eq!(up_probability(0.5, 1, 1), 0.5);
        assert!(rel(up_probability(0.5, 2, 2), 0.5) < 1e-15);
        // With f >= 2 the first-order terms in 1 - alpha cancel; with f = 1
        // the probability is alpha^s and sits s * 1e-6 below one.
        for s in 1..=12 {
            for f in 2..=4 {
                assert!(up_probability(0.999999, s, f) > 1.0 - 1e-6);
            }
            assert_eq!(up_probability(0.999999, s, 1), power(0.999999, s));
        }
    }

    #[test]
    fn degenerate_branch_matches_general_formula() {
        // With s = 1 the correction term sum_{j=1}^{s-1} alpha^j vanishes, so
        // the general interior expression evaluates to the product branch.
        for &alpha in &[0.1, 0.5, 0.93] {
            for f in 2..5 {
                let fail = 1.0 - alpha;
                let general = geometric(alpha, 0, 1) * geometric(fail, 0, f)
                    / (1.0 - geometric(alpha, 1, 1) * geometric(fail, 1, f));
                assert!(rel(expected_transmissions(alpha, 1, f, Position::Interior), general) < 1e-15);
            }
        }
    }

    #[test]
    fn mean_sojourn_examples() {
        assert!(rel(mean_sojourn(3.0, 1000.0, 1e6), 3e-3) < 1e-15);
        assert!(rel(mean_sojourn(2.0, 8000.0, 2e6), 8e-3) < 1e-15);
        let x = expected_transmissions(0.5, 2, 2, Position::Interior);
        assert!(rel(mean_sojourn(x, 1000.0, 1e6), 3e-3) < 1e-14);
    }

    #[test]
    fn birth_death_examples() {
        assert_eq!(birth_death_stationary(&[1.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let pi = birth_death_stationary(&[1.0, 0.5, 0.0]).unwrap();
        for (got, want) in pi.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(birth_death_stationary(&[0.3]).unwrap(), vec![1.0]);
        assert_eq!(birth_death_stationary(&[0.9, 0.0]), Err(AnalysisError::BadBoundary));
    }

    #[test]
    fn birth_death_survives_long_skewed_ladders() {
        let mut up = vec![0.999; 120];
        up[0] = 1.0;
        up[119] = 0.0;
        let pi = birth_death_stationary(&up);
        // The lowest states are ~1e-360 relative to the top: flagged.
        assert!(matches!(pi, Err(AnalysisError::Underflow(_))));

        let mut up = vec![0.9; 60];
        up[0] = 1.0;
        up[59] = 0.0;
        let pi = birth_death_stationary(&up).unwrap();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pi[58] > pi[57]);
    }

    #[test]
    fn closed_forms_agree_with_the_micro_chain() {
        for &alpha in &[0.05, 0.3, 0.5, 0.77, 0.98] {
            for s in 1..8 {
                for f in 1..5 {
                    let sol = micro_chain_solve(alpha, s, f, Position::Interior);
                    assert!(rel(expected_transmissions(alpha, s, f, Position::Interior), sol.expected_transmissions) < 1e-10);
                    assert!(rel(up_probability(alpha, s, f), sol.p_up) < 1e-10);
                }
                let low = micro_chain_solve(alpha, s, 3, Position::Lowest);
                assert!(rel(expected_transmissions(alpha, s, 3, Position::Lowest), low.expected_transmissions) < 1e-10);
                let high = micro_chain_solve(alpha, 3, s, Position::Highest);
                assert!(rel(expected_transmissions(alpha, 3, s, Position::Highest), high.expected_transmissions) < 1e-10);
            }
        }
    }

    #[test]
    fn single_rate_throughput() {
        let r = arf_throughput(&arf(vec![1e6], vec![0.6], 10, 2)).unwrap();
        assert_eq!(r.rate_fractions, vec![1.0]);
        assert!(rel(r.throughput_bps, 0.6e6) < 1e-15);
    }

    #[test]
    fn two_rate_hand_solution() {
        // mu_1 = 2 l/R_1, mu_2 = l/(R_2 (1 - alpha_2)) = l/1e6; pi = (1/2, 1/2)
        // so f = (2/3, 1/3) and tau = 2/3 * 0.5 * 1e6 + 1/3 * 0.5 * 2e6.
        let r = arf_throughput(&arf(vec![1e6, 2e6], vec![0.5, 0.5], 1, 1)).unwrap();
        assert!(rel(r.rate_fractions[0], 2.0 / 3.0) < 1e-14);
        assert!(rel(r.rate_fractions[1], 1.0 / 3.0) < 1e-14);
        assert!(rel(r.throughput_bps, 2.0e6 / 3.0) < 1e-14);
    }

    #[test]
    fn wrong_algorithm_and_overhead_are_rejected() {
        let mut sc = arf(vec![1e6, 2e6], vec![0.5, 0.5], 1, 1);
        sc.overhead = Some(crate::MacOverheadParams::ieee80211b());
        assert_eq!(arf_throughput(&sc), Err(AnalysisError::UnexpectedOverhead));
        sc.overhead = None;
        sc.algorithm = Algorithm::Aarf(crate::AarfParams { base: ArfParams { s: 1, f: 1 }, beta_max: 0 });
        assert!(matches!(arf_throughput(&sc), Err(AnalysisError::WrongAlgorithm { .. })));
        sc.channel.alphas[0] = 1.5;
        assert!(matches!(arf_chain(&sc), Err(AnalysisError::Invalid(_))));
    }
}
