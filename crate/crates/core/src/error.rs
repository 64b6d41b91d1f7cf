//! Error type shared across the library.

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Both coordinates of a regularized pair vanish; the quadruple collision
    /// is not regularized and the potential radical is singular there.
    #[error("degenerate pair: Q{i} and Q{j} both vanish (quadruple collision is unregularized)")]
    DegeneratePair { i: usize, j: usize },

    /// A physical momentum is undefined at a collision (Q_i = 0).
    #[error("axis {axis} is at collision (Q = 0); physical momentum undefined")]
    CollisionState { axis: usize },

    /// Physical coordinates must be strictly positive to map into the
    /// regularized chart.
    #[error("physical coordinate q{axis} = {value} must be positive")]
    NonPositiveCoordinate { axis: usize, value: f64 },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("invalid query: {reason}")]
    InvalidQuery { reason: String },

    /// A terminal event was requested but never fired within the span.
    #[error("integration span {span} exhausted before any terminal event")]
    MaxSpanExceeded { span: f64 },

    /// The quadruple-collision guard tripped: some pair sum Q_i^2 + Q_j^2
    /// fell below the configured floor.
    #[error("quadruple-collision approach at s = {s}: min pair Q_i^2 + Q_j^2 = {min_pair:.3e}")]
    NearQuadruple { s: f64, min_pair: f64 },

    /// The state stopped being finite (step size too large for the region).
    #[error("non-finite state at s = {s}")]
    NonFinite { s: f64 },

    #[error("searches require a negative energy, got {energy}")]
    EnergyNotNegative { energy: f64 },

    /// The crossing Q1 = Q2 was never reached for this (alpha, beta).
    #[error("crossing Q1 = Q2 not reached at (alpha, beta) = ({alpha}, {beta}): {stopped}")]
    CrossingNotReached {
        alpha: f64,
        beta: f64,
        stopped: String,
    },

    /// No sign change of P3 at the crossing over the scanned beta grid.
    #[error("no sign change of P3(tau) for alpha = {alpha}: scanned beta up to {beta_max} ({evaluations} points)")]
    NoSignChange {
        alpha: f64,
        beta_max: f64,
        evaluations: usize,
    },

    /// The shooting root exists but falls outside the first-collision region.
    #[error("root at (alpha, beta) = ({alpha}, {beta}) classifies outside the sigma region")]
    RootOutsideSigma { alpha: f64, beta: f64 },

    /// Bisection endpoints do not straddle the quantity being bracketed.
    #[error("bracket failure: {reason}")]
    BracketFailure { reason: String },

    /// The orbit residual did not change sign exactly once on the coarse
    /// alpha grid. Carries the (alpha, beta, residual) samples seen.
    #[error("residual changed sign {changes} times on the alpha grid (expected exactly once)")]
    ResidualBracket {
        changes: usize,
        samples: Vec<(f64, f64, f64)>,
    },

    /// (W + W^-1)/2 failed to split into the expected diagonal blocks.
    #[error("block defect {defect:.3e} exceeds 1e-3; factorization assumptions violated")]
    BlockDefect { defect: f64 },
}
