//! Matrix exponential by scaling and squaring of a truncated Taylor series.

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Terms kept after scaling the matrix to `‖B‖₁ ≤ 1/2`: the tail is below
/// `0.5¹⁹/19! ≈ 2e-23`.
const TAYLOR_TERMS: usize = 18;

fn norm1<const N: usize>(a: &SMatrix<Complex64, N, N>) -> f64 {
    (0..N)
        .map(|j| (0..N).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)`.
pub fn expm<const N: usize>(a: &SMatrix<Complex64, N, N>) -> Result<SMatrix<Complex64, N, N>> {
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::IllConditioned { norm });
    }
    let squarings = if norm <= 0.5 { 0 } else { (norm / 0.5).log2().ceil() as i32 };
    let b = a * Complex64::new(2f64.powi(-squarings), 0.0);
    let mut term = SMatrix::<Complex64, N, N>::identity();
    let mut sum = term;
    for j in 1..=TAYLOR_TERMS {
        term = term * b * Complex64::new(1.0 / j as f64, 0.0);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    if sum.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IllConditioned { norm });
    }
    Ok(sum)
}
