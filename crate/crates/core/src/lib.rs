//! Numerical laboratory for the compressible Euler–Maxwell system near the
//! equilibrium `(n_∞, 0, 0, B_∞)`.
//!
//! The crate is organised around the perturbation form of the system in the
//! variables `(n, u, E, B)`:
//!
//! - [`spectral`]: periodic grids, FFTs, Fourier multipliers, Littlewood–Paley
//!   blocks and every norm used by the diagnostics.
//! - [`model`]: physical constants, the Gauss-law closure `f(n)`, the change of
//!   variables and constraint-compatible initial data.
//! - [`dynamics`]: the pseudo-spectral right-hand side, RK4 stepping and
//!   constraint monitoring.
//! - [`linear`]: exact per-wavenumber evolution of the linearised system and
//!   quadrature of weighted norms over the whole space.
//! - [`energetics`]: energy, dissipation and cross functionals.
//! - [`analysis`]: log-log decay fits and the theoretical exponent tables.
//! - [`inequality_lab`]: randomized oracles for the interpolation, embedding
//!   and commutator inequalities.
//! - [`config`] and [`experiments`]: the run configuration schema and the
//!   four experiment drivers behind the `emlab` binary.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod energetics;
mod error;
pub mod experiments;
pub mod inequality_lab;
pub mod linear;
pub mod model;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
