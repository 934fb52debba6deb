use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::GridSpec;

struct Plan {
    n: usize,
    mirror: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<Plan>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize) -> Rc<Plan> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let grid = GridSpec::new(n, 1.0).expect("planned grids have n >= 2");
                Rc::new(Plan {
                    n,
                    mirror: (0..grid.len()).map(|idx| grid.mirror(idx)).collect(),
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    })
}

impl Plan {
    /// Unnormalized 3-D transform in place.
    ///
    /// With a `band` (per-axis index mask), an inverse transform assumes the
    /// input vanishes outside `band³` and skips those lines; a forward
    /// transform only computes outputs inside `band³` and zeroes the rest.
    fn run(&self, data: &mut [Complex64], inverse: bool, band: Option<&[bool]>) {
        let n = self.n;
        let fft = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let live = |i: usize| band.map_or(true, |b| b[i]);
        let mut buf = vec![Complex64::default(); n * n];

        // Contiguous axis.
        if inverse && band.is_some() {
            for i in (0..n).filter(|&i| live(i)) {
                for j in (0..n).filter(|&j| live(j)) {
                    let row = (i * n + j) * n;
                    fft.process_with_scratch(&mut data[row..row + n], &mut scratch);
                }
            }
        } else {
            fft.process_with_scratch(data, &mut scratch);
        }

        // Middle axis, one plane at a time through a transposed buffer.
        for i in 0..n {
            if inverse && !live(i) {
                continue;
            }
            let plane = &mut data[i * n * n..(i + 1) * n * n];
            for j in 0..n {
                for l in 0..n {
                    buf[l * n + j] = plane[j * n + l];
                }
            }
            if !inverse && band.is_some() {
                for l in (0..n).filter(|&l| live(l)) {
                    fft.process_with_scratch(&mut buf[l * n..(l + 1) * n], &mut scratch);
                }
            } else {
                fft.process_with_scratch(&mut buf, &mut scratch);
            }
            for j in 0..n {
                for l in 0..n {
                    plane[j * n + l] = buf[l * n + j];
                }
            }
        }

        // Outer axis, one j-slab at a time.
        for j in 0..n {
            if !inverse && !live(j) {
                for i in 0..n {
                    let row = (i * n + j) * n;
                    data[row..row + n].fill(Complex64::default());
                }
                continue;
            }
            for i in 0..n {
                let row = (i * n + j) * n;
                for l in 0..n {
                    buf[l * n + i] = data[row + l];
                }
            }
            if !inverse && band.is_some() {
                for l in (0..n).filter(|&l| live(l)) {
                    fft.process_with_scratch(&mut buf[l * n..(l + 1) * n], &mut scratch);
                }
            } else {
                fft.process_with_scratch(&mut buf, &mut scratch);
            }
            for i in 0..n {
                let row = (i * n + j) * n;
                for l in 0..n {
                    data[row + l] = if !inverse && !(live(i) && live(l)) {
                        Complex64::default()
                    } else {
                        buf[l * n + i]
                    };
                }
            }
        }
    }
}

/// Physical samples to Fourier-series coefficients (`f̂_k = N⁻³ Σ_x f(x) e^{-ik·x}`).
pub fn to_spectral(grid: &GridSpec, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_in_place(grid, &mut data);
    hermitian_average(grid, data)
}

/// Fourier coefficients to physical samples; the imaginary part is dropped.
pub fn to_physical(grid: &GridSpec, coeffs: &[Complex64]) -> Vec<f64> {
    let mut data = coeffs.to_vec();
    plan(grid.points()).run(&mut data, true, None);
    data.into_iter().map(|c| c.re).collect()
}

/// Two real fields through one complex transform, packed as `a + i b`.
pub fn to_physical_pair(
    grid: &GridSpec,
    a: &[Complex64],
    b: &[Complex64],
) -> (Vec<f64>, Vec<f64>) {
    let mut out_a = vec![0.0; a.len()];
    let mut out_b = vec![0.0; a.len()];
    physical_pair_into(grid, a, b, None, &mut Vec::new(), &mut out_a, &mut out_b);
    (out_a, out_b)
}

/// As [`to_physical_pair`] for inputs supported in `band³`, writing into
/// caller buffers (`work` is resized as needed).
pub(crate) fn physical_pair_into(
    grid: &GridSpec,
    a: &[Complex64],
    b: &[Complex64],
    band: Option<&[bool]>,
    work: &mut Vec<Complex64>,
    out_a: &mut [f64],
    out_b: &mut [f64],
) {
    let i = Complex64::i();
    work.clear();
    work.extend(a.iter().zip(b).map(|(x, y)| x + i * y));
    plan(grid.points()).run(work, true, band);
    for ((c, x), y) in work.iter().zip(out_a.iter_mut()).zip(out_b.iter_mut()) {
        *x = c.re;
        *y = c.im;
    }
}

/// Two real fields to spectral space through one complex transform.
pub fn to_spectral_pair(grid: &GridSpec, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut out_a = vec![Complex64::default(); a.len()];
    let mut out_b = vec![Complex64::default(); a.len()];
    spectral_pair_into(grid, a, b, None, &mut Vec::new(), &mut out_a, &mut out_b);
    (out_a, out_b)
}

/// As [`to_spectral_pair`], keeping only coefficients in `band³` and writing
/// into caller buffers.
pub(crate) fn spectral_pair_into(
    grid: &GridSpec,
    a: &[f64],
    b: &[f64],
    band: Option<&[bool]>,
    work: &mut Vec<Complex64>,
    out_a: &mut [Complex64],
    out_b: &mut [Complex64],
) {
    work.clear();
    work.extend(a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)));
    let plan = plan(grid.points());
    plan.run(work, false, band);
    let scale = 1.0 / grid.len() as f64;
    let half = Complex64::new(0.5 * scale, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5 * scale);
    for idx in 0..work.len() {
        let f = work[idx];
        let g = work[plan.mirror[idx]].conj();
        out_a[idx] = half * (f + g);
        out_b[idx] = minus_half_i * (f - g);
    }
}

fn forward_in_place(grid: &GridSpec, data: &mut [Complex64]) {
    plan(grid.points()).run(data, false, None);
    let scale = 1.0 / grid.len() as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
}

// Forward transforms of real data are Hermitian up to rounding; averaging
// with the mirrored coefficient makes the symmetry exact.
fn hermitian_average(grid: &GridSpec, data: Vec<Complex64>) -> Vec<Complex64> {
    let plan = plan(grid.points());
    let mut out = data.clone();
    for idx in 0..data.len() {
        out[idx] = 0.5 * (data[idx] + data[plan.mirror[idx]].conj());
    }
    out
}
