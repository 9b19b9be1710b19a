//! Scenario inputs shared by the analytic solvers and the simulator.

use alloc::vec::Vec;
use core::fmt;

/// Bit rates `R_1 < R_2 < ... < R_N` in bit/s.
#[derive(Clone, Debug, PartialEq)]
pub struct RateLadder {
    pub rates: Vec<f64>,
}

impl RateLadder {
    pub fn new(rates: Vec<f64>) -> Self {
        Self { rates }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Per-rate probability that a packet sent at that rate succeeds.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    pub alphas: Vec<f64>,
}

impl ChannelModel {
    pub fn new(alphas: Vec<f64>) -> Self {
        Self { alphas }
    }
}

/// How the simulator draws packet lengths. The analytic results depend only
/// on the mean.
#[derive(Clone, Debug, PartialEq)]
pub enum LengthDistribution {
    /// Every packet has the mean length.
    Deterministic,
    /// Discrete distribution given as `(length_bits, weight)` pairs.
    Empirical(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrafficModel {
    pub mean_packet_bits: f64,
    pub lengths: LengthDistribution,
}

impl TrafficModel {
    pub fn deterministic(mean_packet_bits: f64) -> Self {
        Self {
            mean_packet_bits,
            lengths: LengthDistribution::Deterministic,
        }
    }
}

/// Consecutive-success (`s`) and consecutive-failure (`f`) thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArfParams {
    pub s: u64,
    pub f: u64,
}

impl Default for ArfParams {
    fn default() -> Self {
        Self { s: 10, f: 2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AarfParams {
    pub base: ArfParams,
    pub beta_max: u32,
}

impl AarfParams {
    /// Success threshold `2^stage * s` of fall-back stage `stage`, or `None`
    /// if it does not fit in a `u64`.
    pub fn threshold(&self, stage: u32) -> Option<u64> {
        1u64.checked_shl(stage)
            .and_then(|m| m.checked_mul(self.base.s))
    }
}

/// IEEE 802.11 DCF timing. Durations are in seconds, windows in slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacOverheadParams {
    pub difs: f64,
    pub sifs: f64,
    pub t_ack: f64,
    pub cw_min: u64,
    pub cw_max: u64,
    pub gamma_max: u32,
    pub slot_time: f64,
}

impl MacOverheadParams {
    /// 802.11b DSSS values: DIFS 50 us, SIFS 10 us, ACK 112 us, CW 32..1023,
    /// retry limit 5 and a 20 us slot.
    pub fn ieee80211b() -> Self {
        Self {
            difs: 50e-6,
            sifs: 10e-6,
            t_ack: 112e-6,
            cw_min: 32,
            cw_max: 1023,
            gamma_max: 5,
            slot_time: 20e-6,
        }
    }

    /// Largest contention window the retry limit can reach, `2^gamma_max * cw_min - 1`.
    pub fn required_cw_max(&self) -> Option<u64> {
        1u64.checked_shl(self.gamma_max)
            .and_then(|m| m.checked_mul(self.cw_min))
            .map(|w| w.saturating_sub(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlgorithmKind {
    Arf,
    Aarf,
    Paarf,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Arf => "arf",
            AlgorithmKind::Aarf => "aarf",
            AlgorithmKind::Paarf => "paarf",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Arf(ArfParams),
    Aarf(AarfParams),
    Paarf(AarfParams),
}

impl Algorithm {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            Algorithm::Arf(_) => AlgorithmKind::Arf,
            Algorithm::Aarf(_) => AlgorithmKind::Aarf,
            Algorithm::Paarf(_) => AlgorithmKind::Paarf,
        }
    }

    pub fn arf_params(&self) -> ArfParams {
        match self {
            Algorithm::Arf(p) => *p,
            Algorithm::Aarf(p) | Algorithm::Paarf(p) => p.base,
        }
    }

    pub fn aarf_params(&self) -> Option<AarfParams> {
        match self {
            Algorithm::Arf(_) => None,
            Algorithm::Aarf(p) | Algorithm::Paarf(p) => Some(*p),
        }
    }
}

/// Full model input.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub ladder: RateLadder,
    pub channel: ChannelModel,
    pub traffic: TrafficModel,
    pub algorithm: Algorithm,
    pub overhead: Option<MacOverheadParams>,
}

impl Scenario {
    pub fn n_rates(&self) -> usize {
        self.ladder.len()
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.ladder.rates[i]
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.channel.alphas[i]
    }

    pub fn mean_bits(&self) -> f64 {
        self.traffic.mean_packet_bits
    }

    /// The same scenario with a different algorithm.
    pub fn with_algorithm(&self, algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..self.clone()
        }
    }

    pub fn without_overhead(&self) -> Self {
        Self {
            overhead: None,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("rate ladder is empty")]
    EmptyLadder,
    #[error("rate R_{index} = {rate} is not positive")]
    NonPositiveRate { index: usize, rate: f64 },
    #[error("rates are not strictly increasing at R_{index}")]
    NonMonotoneRates { index: usize },
    #[error("success probability alpha_{index} = {alpha} is outside (0, 1)")]
    AlphaOutOfRange { index: usize, alpha: f64 },
    #[error("{rates} rates but {alphas} success probabilities")]
    LengthMismatch { rates: usize, alphas: usize },
    #[error("traffic model: {0}")]
    BadTraffic(&'static str),
    #[error("threshold {name} = {value} must be at least 1")]
    BadThreshold { name: &'static str, value: u64 },
    #[error("success threshold 2^{beta_max} * s overflows")]
    ThresholdOverflow { beta_max: u32 },
    #[error("duration {name} is negative or not finite")]
    BadDuration { name: &'static str },
    #[error("cw_max = {cw_max} is below 2^gamma_max * cw_min - 1 = {required}")]
    CwMaxTooSmall { cw_max: u64, required: u64 },
    #[error("2^gamma_max * cw_min overflows")]
    BackoffOverflow,
}

/// Every violated invariant of a scenario, in field order.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ValidationErrors {}

/// Checks every scenario invariant and returns the scenario unchanged if
/// they all hold. All violations are reported, not just the first.
pub fn validate(scenario: Scenario) -> Result<Scenario, ValidationErrors> {
    let errors = check(&scenario);
    if errors.is_empty() {
        Ok(scenario)
    } else {
        Err(ValidationErrors(errors))
    }
}

pub(crate) fn check(sc: &Scenario) -> Vec<ValidationError> {
    let mut errs = Vec::new();
    let rates = &sc.ladder.rates;
    if rates.is_empty() {
        errs.push(ValidationError::EmptyLadder);
    }
    for (index, &rate) in rates.iter().enumerate() {
        if !(rate > 0.0 && rate.is_finite()) {
            errs.push(ValidationError::NonPositiveRate { index: index + 1, rate });
        }
    }
    for (k, w) in rates.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            errs.push(ValidationError::NonMonotoneRates { index: k + 2 });
        }
    }

    let alphas = &sc.channel.alphas;
    if alphas.len() != rates.len() {
        errs.push(ValidationError::LengthMismatch {
            rates: rates.len(),
            alphas: alphas.len(),
        });
    }
    for (index, &alpha) in alphas.iter().enumerate() {
        if !(alpha > 0.0 && alpha < 1.0) {
            errs.push(ValidationError::AlphaOutOfRange { index: index + 1, alpha });
        }
    }

    check_traffic(&sc.traffic, &mut errs);

    let base = sc.algorithm.arf_params();
    if base.s < 1 {
        errs.push(ValidationError::BadThreshold { name: "s", value: base.s });
    }
    if base.f < 1 {
        errs.push(ValidationError::BadThreshold { name: "f", value: base.f });
    }
    if let Some(p) = sc.algorithm.aarf_params() {
        if base.s >= 1 && p.threshold(p.beta_max).is_none() {
            errs.push(ValidationError::ThresholdOverflow { beta_max: p.beta_max });
        }
    }

    if let Some(o) = &sc.overhead {
        for (name, v) in [
            ("difs", o.difs),
            ("sifs", o.sifs),
            ("t_ack", o.t_ack),
            ("slot_time", o.slot_time),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(ValidationError::BadDuration { name });
            }
        }
        if o.cw_min < 1 {
            errs.push(ValidationError::BadThreshold { name: "cw_min", value: o.cw_min });
        } else {
            match o.required_cw_max() {
                Some(required) if o.cw_max < required => {
                    errs.push(ValidationError::CwMaxTooSmall { cw_max: o.cw_max, required })
                }
                Some(_) => {}
                None => errs.push(ValidationError::BackoffOverflow),
            }
        }
    }
    errs
}

fn check_traffic(t: &TrafficModel, errs: &mut Vec<ValidationError>) {
    if !(t.mean_packet_bits > 0.0 && t.mean_packet_bits.is_finite()) {
        errs.push(ValidationError::BadTraffic("mean packet length must be positive"));
        return;
    }
    if let LengthDistribution::Empirical(points) = &t.lengths {
        if points.is_empty() {
            errs.push(ValidationError::BadTraffic("empirical length distribution is empty"));
            return;
        }
        if points.iter().any(|&(l, w)| !(l > 0.0 && w > 0.0 && l.is_finite() && w.is_finite())) {
            errs.push(ValidationError::BadTraffic(
                "empirical lengths and weights must be positive",
            ));
            return;
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        let mean = points.iter().map(|&(l, w)| l * w).sum::<f64>() / total;
        let rel = (mean - t.mean_packet_bits) / t.mean_packet_bits;
        if !(rel < 1e-9 && rel > -1e-9) {
            errs.push(ValidationError::BadTraffic(
                "empirical mean differs from mean_packet_bits",
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_rate() -> Scenario {
        Scenario {
            ladder: RateLadder::new(vec![1e6, 2e6]),
            channel: ChannelModel::new(vec![0.9, 0.2]),
            traffic: TrafficModel::deterministic(8000.0),
            algorithm: Algorithm::Arf(ArfParams { s: 10, f: 2 }),
            overhead: None,
        }
    }

    #[test]
    fn accepts_the_two_rate_regime() {
        let sc = two_rate();
        assert_eq!(validate(sc.clone()), Ok(sc));
    }

    #[test]
    fn rejects_descending_rates() {
        let mut sc = two_rate();
        sc.ladder.rates = vec![2e6, 1e6];
        let errs = validate(sc).unwrap_err().0;
        assert_eq!(errs, vec![ValidationError::NonMonotoneRates { index: 2 }]);
    }

    #[test]
    fn rejects_alpha_of_one() {
        let mut sc = two_rate();
        sc.channel.alphas = vec![1.0, 0.2];
        let errs = validate(sc).unwrap_err().0;
        assert_eq!(errs, vec![ValidationError::AlphaOutOfRange { index: 1, alpha: 1.0 }]);
    }

    #[test]
    fn reports_every_violation() {
        let sc = Scenario {
            ladder: RateLadder::new(vec![2e6, 1e6, -1.0]),
            channel: ChannelModel::new(vec![0.0, 0.5]),
            traffic: TrafficModel::deterministic(8000.0),
            algorithm: Algorithm::Aarf(AarfParams {
                base: ArfParams { s: 0, f: 0 },
                beta_max: 3,
            }),
            overhead: Some(MacOverheadParams {
                cw_max: 100,
                ..MacOverheadParams::ieee80211b()
            }),
        };
        let errs = validate(sc).unwrap_err().0;
        assert!(errs.contains(&ValidationError::NonPositiveRate { index: 3, rate: -1.0 }));
        assert!(errs.contains(&ValidationError::NonMonotoneRates { index: 2 }));
        assert!(errs.contains(&ValidationError::LengthMismatch { rates: 3, alphas: 2 }));
        assert!(errs.contains(&ValidationError::AlphaOutOfRange { index: 1, alpha: 0.0 }));
        assert!(errs.contains(&ValidationError::BadThreshold { name: "s", value: 0 }));
        assert!(errs.contains(&ValidationError::BadThreshold { name: "f", value: 0 }));
        assert!(errs.contains(&ValidationError::CwMaxTooSmall { cw_max: 100, required: 1023 }));
    }

    #[test]
    fn threshold_doubling_and_overflow() {
        let p = AarfParams { base: ArfParams { s: 10, f: 2 }, beta_max: 3 };
        assert_eq!(p.threshold(0), Some(10));
        assert_eq!(p.threshold(1), Some(20));
        assert_eq!(p.threshold(3), Some(80));
        assert_eq!(p.threshold(63), None);
        assert_eq!(p.threshold(64), None);

        let mut sc = two_rate();
        sc.algorithm = Algorithm::Aarf(AarfParams { beta_max: 62, ..p });
        assert_eq!(
            validate(sc).unwrap_err().0,
            vec![ValidationError::ThresholdOverflow { beta_max: 62 }]
        );
    }

    #[test]
    fn empirical_lengths_must_match_the_mean() {
        let mut sc = two_rate();
        sc.traffic = TrafficModel {
            mean_packet_bits: 8000.0,
            lengths: LengthDistribution::Empirical(vec![(4000.0, 1.0), (12000.0, 1.0)]),
        };
        assert!(validate(sc.clone()).is_ok());
        sc.traffic.mean_packet_bits = 8001.0;
        assert!(validate(sc).is_err());
    }

    #[test]
    fn ieee80211b_defaults_are_valid() {
        let mut sc = two_rate();
        sc.overhead = Some(MacOverheadParams::ieee80211b());
        assert!(validate(sc).is_ok());
        assert_eq!(MacOverheadParams::ieee80211b().required_cw_max(), Some(1023));
    }
}
