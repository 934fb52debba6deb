use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform periodic `N³` grid on the box `[0, L)³`.
///
/// Flat indices run `idx = (i·N + j)·N + l` with `i` along x. Per axis the
/// integer mode of index `i` is `i` for `i < N/2` and `i − N` otherwise, so an
/// even grid carries the Nyquist mode as `−N/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    points_per_axis: usize,
    box_length: f64,
}

impl GridSpec {
    pub fn new(points_per_axis: usize, box_length: f64) -> Result<Self> {
        if points_per_axis < 2 {
            return Err(Error::InvalidParameter(format!(
                "points_per_axis must be at least 2, got {points_per_axis}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        Ok(Self {
            points_per_axis,
            box_length,
        })
    }

    pub fn points(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of grid points, `N³`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Smallest nonzero wavenumber `2π/L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Largest resolved wavenumber per axis, `πN/L`.
    pub fn k_max(&self) -> f64 {
        PI * self.points_per_axis as f64 / self.box_length
    }

    pub fn mode(&self, i: usize) -> i64 {
        let n = self.points_per_axis;
        if i < n.div_ceil(2) {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        self.points_per_axis % 2 == 0 && i == self.points_per_axis / 2
    }

    /// Per-axis wavenumbers `2π m / L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let k0 = self.fundamental();
        (0..self.points_per_axis).map(|i| k0 * self.mode(i) as f64).collect()
    }

    /// Per-axis wavenumbers used by odd-order derivatives: identical to
    /// [`Self::wavenumbers`] except that the Nyquist entry is zero, which keeps
    /// derivatives of real fields real.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        let mut k = self.wavenumbers();
        if self.points_per_axis % 2 == 0 {
            k[self.points_per_axis / 2] = 0.0;
        }
        k
    }

    pub fn split(&self, idx: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn join(&self, ijk: [usize; 3]) -> usize {
        let n = self.points_per_axis;
        (ijk[0] * n + ijk[1]) * n + ijk[2]
    }

    pub fn modes(&self, idx: usize) -> [i64; 3] {
        let [i, j, l] = self.split(idx);
        [self.mode(i), self.mode(j), self.mode(l)]
    }

    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let k0 = self.fundamental();
        let m = self.modes(idx);
        [k0 * m[0] as f64, k0 * m[1] as f64, k0 * m[2] as f64]
    }

    /// Integer `|m|²` of a flat index; `|k|² = (2π/L)²·|m|²`.
    pub fn mode_norm2(&self, idx: usize) -> i64 {
        let m = self.modes(idx);
        m[0] * m[0] + m[1] * m[1] + m[2] * m[2]
    }

    pub fn k_squared(&self, idx: usize) -> f64 {
        self.fundamental().powi(2) * self.mode_norm2(idx) as f64
    }

    /// Largest `|m|²` over the grid.
    pub fn max_mode_norm2(&self) -> i64 {
        let h = (self.points_per_axis / 2) as i64;
        3 * h * h
    }

    /// Flat index of the mode `−k`.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.points_per_axis;
        let [i, j, l] = self.split(idx);
        self.join([(n - i) % n, (n - j) % n, (n - l) % n])
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let [i, j, l] = self.split(idx);
        [i as f64 * h, j as f64 * h, l as f64 * h]
    }

    /// Whether a mode survives the 2/3 truncation (`3|m_i| < N` on every axis).
    pub fn dealias_mask(&self) -> Vec<bool> {
        let n = self.points_per_axis as i64;
        (0..self.len())
            .map(|idx| self.modes(idx).iter().all(|m| 3 * m.abs() < n))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_extremes() {
        let g = GridSpec::new(16, 4.0).unwrap();
        let k = g.wavenumbers();
        let smallest = k.iter().filter(|v| **v != 0.0).fold(f64::MAX, |a, b| a.min(b.abs()));
        assert!((smallest - 2.0 * PI / 4.0).abs() < 1e-15);
        let largest = k.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!((largest - g.k_max()).abs() < 1e-12);
    }

    #[test]
    fn mirror_is_involution_and_negates_modes() {
        let g = GridSpec::new(6, 1.0).unwrap();
        for idx in 0..g.len() {
            let m = g.mirror(idx);
            assert_eq!(g.mirror(m), idx);
            let a = g.modes(idx);
            let b = g.modes(m);
            for ax in 0..3 {
                if !g.is_nyquist(g.split(idx)[ax]) {
                    assert_eq!(a[ax], -b[ax]);
                }
            }
        }
    }

    #[test]
    fn odd_grid_modes_are_symmetric() {
        let g = GridSpec::new(5, 1.0).unwrap();
        let m: Vec<i64> = (0..5).map(|i| g.mode(i)).collect();
        assert_eq!(m, vec![0, 1, 2, -2, -1]);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(1, 1.0).is_err());
        assert!(GridSpec::new(8, 0.0).is_err());
        assert!(GridSpec::new(8, f64::NAN).is_err());
    }

    #[test]
    fn dealias_mask_counts() {
        let g = GridSpec::new(64, 1.0).unwrap();
        let kept = g.dealias_mask().iter().filter(|b| **b).count();
        // |m| <= 21 on each axis
        assert_eq!(kept, 43usize.pow(3));
    }
}
