use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("roots {i} and {j} coincide within {tol:e}")]
    DegenerateRoots { i: usize, j: usize, tol: f64 },

    #[error("branch point of the closed-form alpha roots at Lambda = {lambda}: {what}")]
    BranchPoint { lambda: f64, what: &'static str },

    #[error("closed-form alpha branch {index} fails the quartic check (residual {residual:e})")]
    ValidationFailure { index: usize, residual: f64 },

    #[error("singular denominator in energy formula: |2α(2αλ+ω)| = {0:e}")]
    SingularDenominator(f64),

    #[error("no Newton start converged for n = {n} ({seeds} seeds, best residual {best:e})")]
    NoConvergence { n: usize, seeds: usize, best: f64 },

    #[error("invalid truncation N = {0} (need N >= 4)")]
    InvalidTruncation(usize),

    #[error("truncation unstable: nearest level moved {shift:e} between N = {from} and N = {to}")]
    TruncationUnstable { shift: f64, from: usize, to: usize },
}
