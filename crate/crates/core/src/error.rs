use thiserror::Error;

/// Failure modes of the pipeline, one variant per error class named in the
/// module contracts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConleyError {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("growth witness ({c1}, {c2}) violated: sampled excess {violation}")]
    InvalidWitness { c1: f64, c2: f64, violation: f64 },

    #[error("degenerate signature: eigenvalue {eigenvalue} within tolerance {tolerance} of zero")]
    Nondegeneracy { eigenvalue: f64, tolerance: f64 },

    #[error("trajectory left the field box between t = {t_lo} and t = {t_hi}")]
    BoxExit { t_lo: f64, t_hi: f64 },

    #[error("isolation failed: {0}")]
    Isolation(String),

    #[error("index pair rejected, grid too coarse: {0}")]
    Refine(String),

    #[error("subspace not admissible: {0}")]
    Admissibility(String),

    #[error("continuation broke at s = {s} (step {step})")]
    ContinuationBreak { step: usize, s: f64 },

    #[error("integer overflow during Smith normal form reduction")]
    Overflow,
}

pub type Result<T, E = ConleyError> = std::result::Result<T, E>;
