use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative power Λ^{power} applied to a field with nonzero mean {mean:.3e}")]
    NegativePowerOnNonzeroMean { power: f64, mean: f64 },

    #[error("Littlewood–Paley block {j} outside resolved range [{min}, {max}]")]
    BlockOutOfRange { j: i32, min: i32, max: i32 },

    #[error("density not positive: 1 + μ·n = {margin:.3e}")]
    DensityNonpositive { margin: f64 },

    #[error("value {value} outside the range of f: 1 + y must be positive")]
    OutOfRange { value: f64 },

    #[error("physical density must be positive (min {min:.3e})")]
    NonpositiveDensity { min: f64 },

    #[error("amplitude {amplitude} too large: positivity margin {margin:.3e}")]
    AmplitudeTooLarge { amplitude: f64, margin: f64 },

    #[error("time step {dt:.4e} exceeds the CFL limit {limit:.4e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-finite value in state at t = {time}")]
    NonFinite { time: f64 },

    #[error("matrix exponential ill-conditioned (norm {norm:.3e})")]
    IllConditioned { norm: f64 },

    #[error("quadrature not converged: relative change {change:.3e} at t = {time}")]
    QuadratureNotConverged { change: f64, time: f64 },

    #[error("derivative order {order} exceeds what the grid resolves")]
    DerivativeOrderExceedsResolution { order: usize },

    #[error("equivalence certificate violated for {functional}: {lower:.6e} <= {value:.6e} <= {upper:.6e} fails")]
    EquivalenceViolated {
        functional: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("decay fit needs at least {needed} samples in the window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("decay fit needs positive values; found {value} at t = {time}")]
    NonpositiveValue { time: f64, value: f64 },

    #[error("this quantity is only defined for B_∞ = 0")]
    RequiresBInftyZero,

    #[error("s = {s} outside the admissible range {range}")]
    SOutOfRange { s: f64, range: &'static str },

    #[error("p = {p} outside [1, 2]")]
    POutOfRange { p: f64 },

    #[error("interpolation exponent θ = {theta} outside {range}")]
    ThetaOutOfRange { theta: f64, range: &'static str },

    #[error("exponents violate 1/2 + s/3 = 1/p (s = {s}, p = {p})")]
    ExponentMismatch { s: f64, p: f64 },

    #[error("exact interpolation violated: ratio {ratio} > 1 + 1e-9")]
    ExactViolated { ratio: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
