//! Norm calculators. Fourier-side norms are exact Parseval sums with the box
//! measure; [`lp_norm`] is a physical-space quadrature.

use super::ops::check_mean;
use super::{Field, LpFamily};
use crate::Result;

pub fn l2_norm<F: Field>(f: &F) -> f64 {
    f.weighted_sum(|_| 1.0).sqrt()
}

/// `‖∇^l f‖_{L²} = (L³ Σ_k |k|^{2l} |f̂_k|²)^{1/2}`.
pub fn homog_norm<F: Field>(f: &F, l: usize) -> f64 {
    f.weighted_sum(|k2| k2.powi(l as i32)).sqrt()
}

/// `‖f‖_{H^k} = (Σ_{l≤k} ‖∇^l f‖²)^{1/2}`.
pub fn sobolev_norm<F: Field>(f: &F, k: usize) -> f64 {
    f.weighted_sum(|k2| (0..=k).map(|l| k2.powi(l as i32)).sum()).sqrt()
}

/// `‖f‖_{Ḣ^{-s}} = ‖Λ^{-s} f‖_{L²}` for a mean-zero field.
pub fn neg_sobolev_norm<F: Field>(f: &F, s: f64) -> Result<f64> {
    check_mean(f, -s)?;
    Ok(neg_sobolev_norm_truncated(f, s).value)
}

/// A box-truncated whole-space norm together with the smallest wavenumber
/// that contributed to it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedNorm {
    pub value: f64,
    pub smallest_k: f64,
}

/// `(L³ Σ_{k≠0} |k|^{-2s} |f̂_k|²)^{1/2}`, silently dropping the zero mode.
///
/// This is the box approximation of the whole-space `Ḣ^{-s}` norm of a
/// localized function whose mean is not zero.
pub fn neg_sobolev_norm_truncated<F: Field>(f: &F, s: f64) -> TruncatedNorm {
    let value = f
        .weighted_sum(|k2| if k2 == 0.0 { 0.0 } else { k2.powf(-s) })
        .sqrt();
    TruncatedNorm {
        value,
        smallest_k: smallest_contributing_k(f),
    }
}

fn smallest_contributing_k<F: Field>(f: &F) -> f64 {
    let grid = *f.grid();
    let mut best = i64::MAX;
    for comp in f.components() {
        for (idx, c) in comp.coefficients().iter().enumerate() {
            if idx != 0 && c.norm_sqr() > 0.0 {
                best = best.min(grid.mode_norm2(idx));
            }
        }
    }
    if best == i64::MAX {
        0.0
    } else {
        grid.fundamental() * (best as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovNorm {
    /// `sup_j 2^{-sj} ‖Δ̇_j f‖_{L²}`.
    pub value: f64,
    /// Block attaining the supremum.
    pub argmax: i32,
    pub smallest_k: f64,
}

/// `‖f‖_{Ḃ^{-s}_{2,∞}}` over the blocks that cover the grid.
pub fn besov_norm<F: Field>(f: &F, s: f64) -> BesovNorm {
    let grid = *f.grid();
    let family = LpFamily::for_grid(&grid);
    let comps = f.components();
    let coeffs: Vec<&[_]> = comps.iter().map(|c| c.coefficients()).collect();
    let mut value = 0.0;
    let mut argmax = family.j_min;
    for (j, e) in family.block_energies(&grid, &coeffs) {
        let v = 2f64.powf(-s * j as f64) * e.sqrt();
        if v > value {
            value = v;
            argmax = j;
        }
    }
    BesovNorm {
        value,
        argmax,
        smallest_k: smallest_contributing_k(f),
    }
}

/// `‖f‖_{L^p}` by the grid rectangle rule; `p = ∞` gives the sample maximum.
pub fn lp_norm<F: Field>(f: &F, p: f64) -> f64 {
    assert!(p >= 1.0, "L^p needs p >= 1, got {p}");
    let mag = f.magnitude();
    if p.is_infinite() {
        return mag.into_iter().fold(0.0, f64::max);
    }
    let dv = f.grid().cell_volume();
    (mag.iter().map(|v| v.powf(p)).sum::<f64>() * dv).powf(1.0 / p)
}
