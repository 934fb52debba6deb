//! Periodic grids, transforms, Fourier multipliers, Littlewood–Paley blocks
//! and norm calculators.
//!
//! Fields are stored by their Fourier-series coefficients
//! `f(x) = Σ_k f̂_k e^{ik·x}` on the box `[0, L)³`. All L²-type norms carry the
//! box measure, `‖f‖² = L³ Σ_k |f̂_k|²`, so they scale with the box the way the
//! whole-space norms do.

mod fft;
mod field;
mod grid;
pub mod littlewood_paley;
pub mod norms;
pub mod ops;

pub use fft::{to_physical, to_physical_pair, to_spectral, to_spectral_pair};
pub(crate) use fft::{physical_pair_into, spectral_pair_into};
pub use field::{Field, FieldTuple, ScalarField, VectorField};
pub use grid::GridSpec;
pub use littlewood_paley::LpFamily;
pub use norms::{
    besov_norm, homog_norm, l2_norm, lp_norm, neg_sobolev_norm, neg_sobolev_norm_truncated,
    sobolev_norm, BesovNorm, TruncatedNorm,
};
pub use ops::{
    apply_multiplier, cosine_mode, curl, derivative_tensor, divergence, fractional, gradient,
    inverse_divergence, laplacian, longitudinal_part, partial, transverse_part,
};
