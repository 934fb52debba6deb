use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{fft, GridSpec};
use crate::{Error, Result};

/// Shared view used by the norm calculators: a field is a list of real scalar
/// components on one grid.
pub trait Field {
    fn grid(&self) -> &GridSpec;

    fn components(&self) -> Vec<&ScalarField>;

    /// `L³ Σ_k w(|k|²) Σ_c |ĉ_k|²` over all components.
    fn weighted_sum(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let grid = *self.grid();
        let k0sq = grid.fundamental().powi(2);
        // Weights depend on |m|² only; tabulate them once.
        let table: Vec<f64> = (0..=grid.max_mode_norm2()).map(|m2| weight(k0sq * m2 as f64)).collect();
        let mut sum = 0.0;
        for comp in self.components() {
            for (idx, c) in comp.coefficients().iter().enumerate() {
                let a = c.norm_sqr();
                if a != 0.0 {
                    sum += table[grid.mode_norm2(idx) as usize] * a;
                }
            }
        }
        grid.volume() * sum
    }

    /// Pointwise Euclidean magnitude of the field.
    fn magnitude(&self) -> Vec<f64> {
        let comps = self.components();
        let grid = *self.grid();
        let mut acc = vec![0.0; grid.len()];
        for comp in comps {
            for (a, v) in acc.iter_mut().zip(comp.physical()) {
                *a += v * v;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// Largest `|f̂_0|` over the components.
    fn mean_magnitude(&self) -> f64 {
        self.components()
            .iter()
            .map(|c| c.coefficients()[0].norm())
            .fold(0.0, f64::max)
    }
}

/// Real scalar field stored by its Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_coefficients(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_coefficients_unchecked(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn from_physical(grid: GridSpec, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            coeffs: fft::to_spectral(&grid, values),
        })
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Self {
            grid,
            coeffs: fft::to_spectral(&grid, &values),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn physical(&self) -> Vec<f64> {
        fft::to_physical(&self.grid, &self.coeffs)
    }

    /// Spatial mean (the zero-mode coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::default())
    }

    /// `max_k |f̂_k − conj(f̂_{−k})| / max_k |f̂_k|`; zero for an exactly real field.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for idx in 0..self.coeffs.len() {
            let [i, j, l] = self.grid.split(idx);
            if self.grid.is_nyquist(i) || self.grid.is_nyquist(j) || self.grid.is_nyquist(l) {
                // Nyquist partners alias onto themselves; only the real part is meaningful.
                continue;
            }
            let d = (self.coeffs[idx] - self.coeffs[self.grid.mirror(idx)].conj()).norm();
            worst = worst.max(d);
        }
        worst / scale
    }

    /// Coefficient-wise map `f̂_k ↦ g(idx, f̂_k)`.
    pub fn map_modes(&self, g: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().enumerate().map(|(idx, &c)| g(idx, c)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_modes(|_, c| c * factor)
    }

    /// Zero-mode removed copy.
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = Complex64::default();
        out
    }

    /// Pointwise map in physical space.
    pub fn map_physical(&self, g: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.physical().into_iter().map(g).collect();
        Self {
            grid: self.grid,
            coeffs: fft::to_spectral(&self.grid, &values),
        }
    }

    /// Pointwise product in physical space (no dealiasing).
    pub fn product(&self, other: &ScalarField) -> Self {
        let (a, b) = fft::to_physical_pair(&self.grid, &self.coeffs, &other.coeffs);
        let values: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self {
            grid: self.grid,
            coeffs: fft::to_spectral(&self.grid, &values),
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| op(a, b)).collect(),
        }
    }
}

impl Field for ScalarField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn components(&self) -> Vec<&ScalarField> {
        vec![self]
    }

    fn magnitude(&self) -> Vec<f64> {
        self.physical().into_iter().map(f64::abs).collect()
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}

/// Real 3-vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comps: [ScalarField; 3],
}

impl VectorField {
    pub fn new(comps: [ScalarField; 3]) -> Result<Self> {
        if comps[0].grid != comps[1].grid || comps[0].grid != comps[2].grid {
            return Err(Error::InvalidParameter("vector components on different grids".into()));
        }
        Ok(Self { comps })
    }

    pub(crate) fn from_components_unchecked(comps: [ScalarField; 3]) -> Self {
        Self { comps }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            comps: [ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid)],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let samples: Vec<[f64; 3]> = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        let comp = |c: usize| {
            let v: Vec<f64> = samples.iter().map(|s| s[c]).collect();
            ScalarField::from_coefficients_unchecked(grid, fft::to_spectral(&grid, &v))
        };
        Self {
            comps: [comp(0), comp(1), comp(2)],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.comps[0].grid
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.comps[axis]
    }

    pub fn parts(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn into_parts(self) -> [ScalarField; 3] {
        self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(ScalarField::is_zero)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.comps.iter().map(ScalarField::hermitian_defect).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c.scale(factor))
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])],
        }
    }

    /// Mode-wise map on the coefficient triple `(v̂_x, v̂_y, v̂_z)`.
    pub fn map_modes(&self, g: impl Fn(usize, [Complex64; 3]) -> [Complex64; 3]) -> Self {
        let grid = *self.grid();
        let mut out = [
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
        ];
        for idx in 0..grid.len() {
            let v = g(
                idx,
                [
                    self.comps[0].coeffs[idx],
                    self.comps[1].coeffs[idx],
                    self.comps[2].coeffs[idx],
                ],
            );
            for c in 0..3 {
                out[c].push(v[c]);
            }
        }
        let [a, b, c] = out;
        Self {
            comps: [
                ScalarField::from_coefficients_unchecked(grid, a),
                ScalarField::from_coefficients_unchecked(grid, b),
                ScalarField::from_coefficients_unchecked(grid, c),
            ],
        }
    }
}

impl Field for VectorField {
    fn grid(&self) -> &GridSpec {
        self.grid()
    }

    fn components(&self) -> Vec<&ScalarField> {
        self.comps.iter().collect()
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: Self) -> VectorField {
        VectorField {
            comps: [
                &self.comps[0] + &rhs.comps[0],
                &self.comps[1] + &rhs.comps[1],
                &self.comps[2] + &rhs.comps[2],
            ],
        }
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: Self) -> VectorField {
        VectorField {
            comps: [
                &self.comps[0] - &rhs.comps[0],
                &self.comps[1] - &rhs.comps[1],
                &self.comps[2] - &rhs.comps[2],
            ],
        }
    }
}

/// A tuple of fields seen as one field, e.g. `(n, u, E, B)`.
pub struct FieldTuple<'a> {
    grid: GridSpec,
    parts: Vec<&'a ScalarField>,
}

impl<'a> FieldTuple<'a> {
    pub fn new(parts: Vec<&'a ScalarField>) -> Self {
        assert!(!parts.is_empty(), "empty field tuple");
        Self {
            grid: parts[0].grid,
            parts,
        }
    }
}

impl Field for FieldTuple<'_> {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn components(&self) -> Vec<&ScalarField> {
        self.parts.clone()
    }
}
