//! Dyadic Littlewood–Paley decomposition.
//!
//! The cutoff is `φ(r) = 1` for `r ≤ 1`, `φ(r) = 0` for `r ≥ 2`, and on
//! `1 < r < 2`
//!
//! ```text
//! φ(r) = 1 − ∫_{-1}^{2r−3} b(ρ) dρ / ∫_{-1}^{1} b(ρ) dρ,   b(ρ) = exp(1/(ρ² − 1)).
//! ```
//!
//! The integrals use a fixed composite Gauss–Legendre rule (8 panels × 24
//! nodes over `[−1, min(x, 0)]`, reflected by symmetry), so values are reproducible bit for bit. Rings are
//! `φ_j(r) = φ(2^{−j} r) − φ(2^{−j+1} r)`, supported in `2^{j−1} ≤ r ≤ 2^{j+1}`.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::{GridSpec, ScalarField};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

const PANELS: usize = 8;
const NODES: usize = 24;

fn bump(rho: f64) -> f64 {
    if rho.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / (rho * rho - 1.0)).exp()
    }
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

fn bump_integral(upper: f64) -> f64 {
    let (x, w) = rule();
    let a = -1.0;
    let width = (upper - a) / PANELS as f64;
    let mut sum = 0.0;
    for p in 0..PANELS {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (xi, wi) in x.iter().zip(w) {
            sum += 0.5 * width * wi * bump(mid + 0.5 * width * xi);
        }
    }
    sum
}

fn bump_total() -> f64 {
    static TOTAL: OnceLock<f64> = OnceLock::new();
    *TOTAL.get_or_init(|| 2.0 * bump_integral(0.0))
}

/// Radial cutoff `φ(r)`.
pub fn cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        // b is even, so the upper half reuses the lower-half integral.
        let t = 2.0 * r - 3.0;
        if t <= 0.0 {
            1.0 - bump_integral(t) / bump_total()
        } else {
            bump_integral(-t) / bump_total()
        }
    }
}

/// Ring function `φ_j(r)`.
pub fn ring(j: i32, r: f64) -> f64 {
    let scale = 2f64.powi(-j);
    cutoff(scale * r) - cutoff(2.0 * scale * r)
}

/// Range of blocks covering every resolved nonzero wavenumber of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LpFamily {
    pub j_min: i32,
    pub j_max: i32,
}

impl LpFamily {
    /// Smallest range with `Σ_{j_min}^{j_max} φ_j ≡ 1` on all grid modes `k ≠ 0`.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let k_min = grid.fundamental();
        let k_top = grid.fundamental() * (grid.max_mode_norm2() as f64).sqrt();
        Self {
            j_min: k_min.log2().floor() as i32,
            j_max: k_top.log2().ceil() as i32,
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    fn check(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            Err(Error::BlockOutOfRange {
                j,
                min: self.j_min,
                max: self.j_max,
            })
        } else {
            Ok(())
        }
    }

    /// `φ_j(|k|)` tabulated over integer `|m|²` of the grid.
    pub fn ring_table(&self, grid: &GridSpec, j: i32) -> Vec<f64> {
        let k0 = grid.fundamental();
        (0..=grid.max_mode_norm2())
            .map(|m2| if m2 == 0 { 0.0 } else { ring(j, k0 * (m2 as f64).sqrt()) })
            .collect()
    }

    /// `Δ̇_j f`.
    pub fn block(&self, f: &ScalarField, j: i32) -> Result<ScalarField> {
        self.check(j)?;
        let grid = *f.grid();
        let table = self.ring_table(&grid, j);
        Ok(f.map_modes(|idx, c| c * table[grid.mode_norm2(idx) as usize]))
    }

    /// `‖Δ̇_j f‖²_{L²}` for every block, summed over the given components.
    pub fn block_energies(&self, grid: &GridSpec, comps: &[&[Complex64]]) -> Vec<(i32, f64)> {
        let n_blocks = (self.j_max - self.j_min + 1) as usize;
        // Per |m|²: accumulate Σ|ĉ|², then distribute over the (at most two) live rings.
        let mut shell = vec![0.0; grid.max_mode_norm2() as usize + 1];
        for coeffs in comps {
            for (idx, c) in coeffs.iter().enumerate() {
                shell[grid.mode_norm2(idx) as usize] += c.norm_sqr();
            }
        }
        let tables: Vec<Vec<f64>> = self.blocks().map(|j| self.ring_table(grid, j)).collect();
        let mut out = vec![0.0; n_blocks];
        for (m2, e) in shell.iter().enumerate() {
            if *e == 0.0 {
                continue;
            }
            for (b, table) in tables.iter().enumerate() {
                let w = table[m2];
                out[b] += w * w * e;
            }
        }
        self.blocks()
            .zip(out)
            .map(|(j, e)| (j, grid.volume() * e))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ops::cosine_mode;
    use crate::spectral::norms::l2_norm;

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.3), 1.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert_eq!(cutoff(2.0), 0.0);
        let mid = cutoff(1.5);
        assert!((mid - 0.5).abs() < 1e-10, "symmetric bump gives 1/2 at the midpoint: {mid}");
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = cutoff(1.0 + i as f64 / 200.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert!(cutoff(1.0 + 1e-3) > 1.0 - 1e-12);
    }

    #[test]
    fn blocks_are_almost_orthogonal() {
        // 0 ≤ φ_j and Σφ_j = 1 with at most two live rings give
        // ½‖f‖² ≤ Σ‖Δ̇_j f‖² ≤ ‖f‖².
        let g = GridSpec::new(16, 7.0).unwrap();
        let fam = LpFamily::for_grid(&g);
        let f = &(&cosine_mode(g, [1, 0, 0], 1.0, 0.2) + &cosine_mode(g, [2, 1, 1], 0.7, 1.1))
            + &cosine_mode(g, [5, -3, 2], 0.4, 2.0);
        let total = l2_norm(&f).powi(2);
        let sum: f64 = fam.blocks().map(|j| l2_norm(&fam.block(&f, j).unwrap()).powi(2)).sum();
        assert!(sum <= total * (1.0 + 1e-12) && sum >= 0.5 * total, "{sum} vs {total}");
        assert!(sum < total * (1.0 - 1e-3), "a mode inside an overlap loses energy");
    }

    #[test]
    fn partition_of_unity_on_grid() {
        let g = GridSpec::new(32, 10.0).unwrap();
        let fam = LpFamily::for_grid(&g);
        let tables: Vec<Vec<f64>> = fam.blocks().map(|j| fam.ring_table(&g, j)).collect();
        for m2 in 1..=g.max_mode_norm2() as usize {
            let s: f64 = tables.iter().map(|t| t[m2]).sum();
            assert!((s - 1.0).abs() < 1e-10, "m2={m2}: {s}");
        }
    }

    #[test]
    fn ring_support() {
        for j in -3..4 {
            let lo = 2f64.powi(j - 1);
            let hi = 2f64.powi(j + 1);
            for i in 0..400 {
                let r = 2f64.powi(j - 3) * (1.0 + i as f64 * 0.05);
                if r < lo || r > hi {
                    assert_eq!(ring(j, r), 0.0, "j={j} r={r}");
                }
            }
        }
    }

    #[test]
    fn block_of_centered_shell_is_identity_and_far_blocks_vanish() {
        // |k| = 2^j exactly: φ_j = 1 there.
        let g = GridSpec::new(16, 2.0 * std::f64::consts::PI).unwrap();
        let fam = LpFamily::for_grid(&g);
        let f = cosine_mode(g, [4, 0, 0], 1.0, 0.2);
        let d2 = fam.block(&f, 2).unwrap();
        assert!(l2_norm(&(&d2 - &f)) < 1e-13);
        let d0 = fam.block(&f, 0).unwrap();
        assert!(l2_norm(&d0) < 1e-14);
        let d4 = fam.block(&f, 4).unwrap();
        assert!(l2_norm(&d4) < 1e-14);
    }

    #[test]
    fn out_of_range_block() {
        let g = GridSpec::new(8, 1.0).unwrap();
        let fam = LpFamily::for_grid(&g);
        let f = ScalarField::zeros(g);
        assert!(matches!(fam.block(&f, fam.j_max + 1), Err(Error::BlockOutOfRange { .. })));
    }
}
