use thiserror::Error;

/// Errors shared by every module in the crate.
///
/// Numeric-domain problems are reported through dedicated variants rather
/// than panics so that callers (and the CLI) can map them to exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input fell outside its documented range, or was not finite.
    #[error("domain error: {0}")]
    Domain(String),

    /// The kernel spectrum is (numerically) degenerate: sin(w) is below
    /// threshold, the closed-form eigenvector normalization divides by ~0.
    #[error("degenerate kernel: sin(w) = {sin_w:.3e} is at or below 1e-10")]
    DegenerateKernel { sin_w: f64 },

    /// No phase phi in (0, 2pi) satisfies the matching condition at this
    /// theta to solver tolerance. Carries the best residual seen.
    #[error("no matched phase at theta = {theta}: best |residual| = {residual:.3e}")]
    NoMatchedPhase { theta: f64, residual: f64 },

    /// A phase pair handed to a matched-only operation is not on the
    /// matched curve.
    #[error("phases not matched: |residual| = {residual:.3e} exceeds {tolerance:.1e}")]
    NotMatched { residual: f64, tolerance: f64 },

    /// The certainty condition does not hold at this iteration count.
    #[error("no certainty at m = {m}: |certainty residual| = {residual:.3e}")]
    NotCertain { m: u64, residual: f64 },

    /// No integer-m phase adjustment exists: f never crosses m on either
    /// side of theta = pi. Reports the curve minimum for diagnostics.
    #[error("no solution: f(theta) never crosses m = {m}; min(f) = {min_f}")]
    NoSolution { m: u64, min_f: f64 },

    /// The initial state has a component outside span{|tau>, U|eta>}, so
    /// the two-level reduction does not apply.
    #[error("initial state outside span{{|tau>, U|eta>}}: residual norm = {residual:.3e}")]
    OutOfSpan { residual: f64 },

    /// |<tau|U|eta>| is too close to 0 or 1 for the reduction angles to be
    /// well conditioned.
    #[error("degenerate overlap: |<tau|U|eta>| = {overlap} outside (eps, 1-eps)")]
    DegenerateOverlap { overlap: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
