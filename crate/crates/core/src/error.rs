use crate::model::{AlgorithmKind, ValidationErrors};
use crate::StateId;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("invalid scenario: {0}")]
    Invalid(ValidationErrors),
    #[error("{found} scenario passed to the {expected} solver")]
    WrongAlgorithm {
        expected: &'static str,
        found: AlgorithmKind,
    },
    #[error("this solver does not model MAC overhead")]
    UnexpectedOverhead,
    #[error("MAC overhead parameters are required")]
    MissingOverhead,
    #[error("no closed form for {0} with MAC overhead; use the simulator")]
    NoClosedForm(AlgorithmKind),
    #[error("stationary probability of state {0} underflows")]
    Underflow(StateId),
    #[error("birth-death boundary probabilities must be p_12 = 1 and p_N,N+1 = 0")]
    BadBoundary,
    #[error("probe/fall-back loop at the last stage never exits")]
    DegenerateLoop,
    #[error("embedded chain is singular")]
    SingularChain,
}

impl From<ValidationErrors> for AnalysisError {
    fn from(e: ValidationErrors) -> Self {
        AnalysisError::Invalid(e)
    }
}
