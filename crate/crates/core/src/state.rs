use core::fmt;

/// A state of one of the semi-Markov processes. Rate indices are zero-based
/// here and one-based when displayed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateId {
    /// ARF transmitting at a rate.
    Rate { rate: usize },
    /// AARF/PAARF fall-back state `i_beta`. The top rate only has stage 0.
    Fallback { rate: usize, stage: u32 },
    /// AARF/PAARF probe state `i_beta^{+1}`; probes are sent at `rate + 1`.
    Probe { rate: usize, stage: u32 },
    /// ARF with MAC overhead, entered with back-off counter `counter`.
    Backoff { rate: usize, counter: u32 },
}

impl StateId {
    /// Index of the rate used for transmissions made in this state.
    pub fn tx_rate(&self) -> usize {
        match *self {
            StateId::Probe { rate, .. } => rate + 1,
            StateId::Rate { rate } | StateId::Fallback { rate, .. } | StateId::Backoff { rate, .. } => {
                rate
            }
        }
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StateId::Rate { rate } => write!(f, "{}", rate + 1),
            StateId::Fallback { rate, stage } => write!(f, "{}_{}", rate + 1, stage),
            StateId::Probe { rate, stage } => write!(f, "{}^+1_{}", rate + 1, stage),
            StateId::Backoff { rate, counter } => write!(f, "{}_g{}", rate + 1, counter),
        }
    }
}
