//! Differential and fractional Fourier multipliers.

use num_complex::Complex64;

use super::{Field, GridSpec, ScalarField, VectorField};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Multiplies every coefficient by `m(k)`, with `k` the derivative wavevector
/// (Nyquist entries zeroed).
pub fn apply_multiplier(f: &ScalarField, m: impl Fn([f64; 3]) -> Complex64) -> ScalarField {
    let grid = *f.grid();
    let kd = grid.derivative_wavenumbers();
    f.map_modes(|idx, c| {
        let [i, j, l] = grid.split(idx);
        c * m([kd[i], kd[j], kd[l]])
    })
}

/// `∂f/∂x_axis`.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    apply_multiplier(f, |k| I * k[axis])
}

pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField::from_components_unchecked([partial(f, 0), partial(f, 1), partial(f, 2)])
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = *v.grid();
    let kd = grid.derivative_wavenumbers();
    let [a, b, c] = v.parts();
    let coeffs = (0..grid.len())
        .map(|idx| {
            let [i, j, l] = grid.split(idx);
            I * (kd[i] * a.coefficients()[idx] + kd[j] * b.coefficients()[idx] + kd[l] * c.coefficients()[idx])
        })
        .collect();
    ScalarField::from_coefficients_unchecked(grid, coeffs)
}

pub fn curl(v: &VectorField) -> VectorField {
    let grid = *v.grid();
    let kd = grid.derivative_wavenumbers();
    v.map_modes(|idx, w| {
        let [i, j, l] = grid.split(idx);
        let k = [kd[i], kd[j], kd[l]];
        [
            I * (k[1] * w[2] - k[2] * w[1]),
            I * (k[2] * w[0] - k[0] * w[2]),
            I * (k[0] * w[1] - k[1] * w[0]),
        ]
    })
}

/// `Δf`, using the full `|k|²` including Nyquist modes.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    f.map_modes(|idx, c| -grid.k_squared(idx) * c)
}

/// All `3^order` components `∂_{i1}…∂_{iℓ} f`, ordered lexicographically in
/// `(i1, …, iℓ)`. Their summed squared L² norms equal `Σ_k |k|^{2ℓ}|f̂_k|²`
/// for fields without Nyquist content.
pub fn derivative_tensor(f: &ScalarField, order: usize) -> Vec<ScalarField> {
    let mut current = vec![f.clone()];
    for _ in 0..order {
        current = current
            .iter()
            .flat_map(|g| (0..3).map(move |axis| partial(g, axis)))
            .collect();
    }
    current
}

/// `Λ^s f = F⁻¹(|k|^s f̂)` with the zero mode sent to zero.
///
/// For `s < 0` the field must have negligible mean: `|f̂_0| ≤ 1e-12·‖f‖`.
pub fn fractional(f: &ScalarField, s: f64) -> Result<ScalarField> {
    check_mean(f, s)?;
    let grid = *f.grid();
    Ok(f.map_modes(|idx, c| {
        if idx == 0 {
            Complex64::default()
        } else {
            c * grid.k_squared(idx).powf(0.5 * s)
        }
    }))
}

pub(crate) fn check_mean<F: Field>(f: &F, s: f64) -> Result<()> {
    if s < 0.0 {
        let mean = f.mean_magnitude();
        // ‖f‖ in coefficient units, so the test is box independent.
        let rms = (f.weighted_sum(|_| 1.0) / f.grid().volume()).sqrt();
        if mean > 1e-12 * rms {
            return Err(Error::NegativePowerOnNonzeroMean { power: s, mean });
        }
    }
    Ok(())
}

/// Helmholtz projection onto `k·v̂ = 0`; the zero mode and Nyquist modes are kept.
pub fn transverse_part(v: &VectorField) -> VectorField {
    let grid = *v.grid();
    let kw = grid.derivative_wavenumbers();
    v.map_modes(|idx, w| {
        let [i, j, l] = grid.split(idx);
        let k = [kw[i], kw[j], kw[l]];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return w;
        }
        let proj = (k[0] * w[0] + k[1] * w[1] + k[2] * w[2]) / k2;
        [w[0] - proj * k[0], w[1] - proj * k[1], w[2] - proj * k[2]]
    })
}

pub fn longitudinal_part(v: &VectorField) -> VectorField {
    v - &transverse_part(v)
}

/// Vector field whose divergence is `rho` on nonzero modes:
/// `v̂ = −i k ρ̂ / |k|²`, zero mean.
pub fn inverse_divergence(rho: &ScalarField) -> VectorField {
    let grid = *rho.grid();
    let kd = grid.derivative_wavenumbers();
    let zero = ScalarField::zeros(grid);
    let base = VectorField::from_components_unchecked([rho.clone(), zero.clone(), zero]);
    base.map_modes(|idx, w| {
        let [i, j, l] = grid.split(idx);
        let k = [kd[i], kd[j], kd[l]];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return [Complex64::default(); 3];
        }
        let a = -I * w[0] / k2;
        [a * k[0], a * k[1], a * k[2]]
    })
}

/// Grid helper for tests and generators: the field `a·cos(k·x + phase)` for integer mode `m`.
pub fn cosine_mode(grid: GridSpec, m: [i64; 3], amplitude: f64, phase: f64) -> ScalarField {
    let k0 = grid.fundamental();
    ScalarField::from_fn(grid, |x| {
        let arg = k0 * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]);
        amplitude * (arg + phase).cos()
    })
}
