//! Linearized system per wavenumber and exact weighted-norm decay series.
//!
//! For each `ξ` the linear part of the system is `dŜ/dt = A(ξ) Ŝ` with
//! `Ŝ = (n̂, û, Ê, B̂) ∈ ℂ¹⁰`. Norms of the whole-space solution are
//! integrals over `ξ ∈ ℝ³`, evaluated by radial Gauss–Legendre quadrature on
//! dyadic panels. With `B_∞ = 0` the integrand is isotropic and one direction
//! per radius suffices; otherwise a Gauss rule in the polar angle about `B_∞`
//! is used and the azimuth is integrated exactly by axial symmetry.

mod expm;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_decay, theoretical_exponent, DecayQuantity, FitTarget, NormSeries, Verdict};
use crate::model::PhysicalConstants;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

pub use expm::expm;

pub type Mat10 = SMatrix<Complex64, 10, 10>;
pub type Vec10 = SVector<Complex64, 10>;

/// Relative size of round-off in propagated norms.
pub const NOISE_FLOOR: f64 = 1e-14;

/// Quadrature changes are measured against the larger of the value itself
/// and this fraction of the full-state norm at the same time, so that
/// components which are exponentially small (and oscillate rapidly in `|ξ|`)
/// do not hold the whole table hostage.
pub const CONVERGENCE_SCALE: f64 = 1e-6;

const N: usize = 0;
const U: usize = 1;
const E: usize = 4;
const B: usize = 7;

fn levi(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `A(ξ)` of the linearized system.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSystem {
    pub xi: [f64; 3],
    pub matrix: Mat10,
    pub constants: PhysicalConstants,
}

/// ```text
/// dn̂/dt = −i ξ·û
/// dû/dt = −ν û − û×B_∞ − i ξ n̂ − ν Ê
/// dÊ/dt = i ν ξ×B̂ + ν û
/// dB̂/dt = −i ν ξ×Ê
/// ```
pub fn mode_matrix(xi: [f64; 3], constants: &PhysicalConstants) -> ModeSystem {
    let nu = constants.nu();
    let bi = constants.b_infty;
    let i = Complex64::i();
    let mut m = Mat10::zeros();
    for a in 0..3 {
        m[(N, U + a)] = -i * xi[a];
        m[(U + a, U + a)] = Complex64::new(-nu, 0.0);
        m[(U + a, N)] = -i * xi[a];
        m[(U + a, E + a)] = Complex64::new(-nu, 0.0);
        m[(E + a, U + a)] = Complex64::new(nu, 0.0);
        for b in 0..3 {
            for c in 0..3 {
                let eps = levi(a, b, c);
                if eps == 0.0 {
                    continue;
                }
                // (u×B_∞)_a = ε_abc u_b B_c
                m[(U + a, U + b)] -= Complex64::new(eps * bi[c], 0.0);
                // (ξ×B)_a = ε_abc ξ_b B_c
                m[(E + a, B + c)] += i * nu * eps * xi[b];
                m[(B + a, E + c)] -= i * nu * eps * xi[b];
            }
        }
    }
    ModeSystem {
        xi,
        matrix: m,
        constants: constants.clone(),
    }
}

impl ModeSystem {
    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `exp(tA)`.
    pub fn propagator(&self, t: f64) -> Result<Mat10> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
        }
        expm(&(self.matrix * Complex64::new(t, 0.0)))
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let schur = nalgebra::linalg::Schur::try_new(self.matrix, 1e-14, 10_000)
            .ok_or(Error::IllConditioned { norm: self.matrix.norm() })?;
        let ev = schur
            .eigenvalues()
            .ok_or(Error::IllConditioned { norm: self.matrix.norm() })?;
        Ok(ev.iter().copied().collect())
    }

    /// Largest real part of the spectrum.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// `(|i ξ·Ê + ν n̂|, |ξ·B̂|)`.
    pub fn constraint_residual(&self, s: &Vec10) -> (f64, f64) {
        let nu = self.constants.nu();
        let i = Complex64::i();
        let xi = self.xi;
        let gauss = i * (xi[0] * s[E] + xi[1] * s[E + 1] + xi[2] * s[E + 2]) + nu * s[N];
        let div_b = xi[0] * s[B] + xi[1] * s[B + 1] + xi[2] * s[B + 2];
        (gauss.norm(), div_b.norm())
    }
}

/// `exp(tA(ξ)) Ŝ₀`.
pub fn evolve_mode(mode: &ModeSystem, t: f64, s0: &Vec10) -> Result<Vec10> {
    Ok(mode.propagator(t)? * s0)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}

/// Orthonormal pair spanning the plane perpendicular to the unit vector `d`.
pub fn transverse_frame(d: [f64; 3]) -> [[f64; 3]; 2] {
    let trial = if d[0].abs() <= d[1].abs() && d[0].abs() <= d[2].abs() {
        [1.0, 0.0, 0.0]
    } else if d[1].abs() <= d[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = normalize(cross(d, trial));
    [e1, cross(d, e1)]
}

/// Which parts of the initial data the profile populates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataComponents {
    /// Longitudinal `Ê` with the Gauss-consistent `n̂ = −i ξ·Ê/ν`.
    pub gauss: bool,
    pub u: bool,
    /// Transverse `Ê` (free part).
    pub e: bool,
    /// Transverse `B̂`.
    pub b: bool,
}

impl Default for DataComponents {
    fn default() -> Self {
        Self {
            gauss: true,
            u: true,
            e: true,
            b: true,
        }
    }
}

/// Constraint-consistent unit data vectors at `ξ = r d`: mutually incoherent,
/// each carrying `|Ŝ₀|²`-weight one in its defining component.
pub fn data_basis(d: [f64; 3], r: f64, nu: f64, components: DataComponents) -> Vec<Vec10> {
    let [e1, e2] = transverse_frame(d);
    let mut out = Vec::new();
    let vec_at = |offset: usize, dir: [f64; 3]| {
        let mut v = Vec10::zeros();
        for a in 0..3 {
            v[offset + a] = Complex64::new(dir[a], 0.0);
        }
        v
    };
    if components.gauss {
        let mut v = vec_at(E, d);
        v[N] = Complex64::new(0.0, -r / nu);
        out.push(v);
    }
    if components.u {
        out.extend([vec_at(U, d), vec_at(U, e1), vec_at(U, e2)]);
    }
    if components.e {
        out.extend([vec_at(E, e1), vec_at(E, e2)]);
    }
    if components.b {
        out.extend([vec_at(B, e1), vec_at(B, e2)]);
    }
    out
}

/// Radial shape of `|Ŝ₀(ξ)|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileShape {
    /// `r^{2s−3} e^{−r²/width²}`: every dyadic block carries `2^{2sj}` of the
    /// mass at low frequency, i.e. the `Ḃ^{-s}_{2,∞}` borderline class. At
    /// `s = 3/2` it is flat near the origin, like `L¹` data.
    Besov { s: f64, width: f64 },
    /// Flat on `r ≤ radius` with a Gaussian rolloff of the given width.
    FlatLow { radius: f64, rolloff: f64 },
    /// All mass on the sphere `|ξ| = radius` (surface density one).
    Shell { radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralProfile {
    pub shape: ProfileShape,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub components: DataComponents,
}

fn one() -> f64 {
    1.0
}

/// Default Gaussian width of the Besov-class profile.
pub const DEFAULT_PROFILE_WIDTH: f64 = 0.5;

impl SpectralProfile {
    pub fn new(shape: ProfileShape) -> Self {
        Self {
            shape,
            amplitude: 1.0,
            components: DataComponents::default(),
        }
    }

    pub fn besov(s: f64) -> Self {
        Self::new(ProfileShape::Besov {
            s,
            width: DEFAULT_PROFILE_WIDTH,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            ProfileShape::Besov { s, width } => s > 0.0 && s <= 1.5 && width > 0.0,
            ProfileShape::FlatLow { radius, rolloff } => radius > 0.0 && rolloff > 0.0,
            ProfileShape::Shell { radius } => radius > 0.0,
        };
        if !ok || !(self.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!("invalid spectral profile {:?}", self)));
        }
        Ok(())
    }

    /// `ρ(r)`, the weight of each basis vector at radius `r`.
    pub fn density(&self, r: f64) -> f64 {
        let a2 = self.amplitude * self.amplitude;
        a2 * match self.shape {
            ProfileShape::Besov { s, width } => r.powf(2.0 * s - 3.0) * (-(r * r) / (width * width)).exp(),
            ProfileShape::FlatLow { radius, rolloff } => {
                if r <= radius {
                    1.0
                } else {
                    (-((r - radius) / rolloff).powi(2)).exp()
                }
            }
            ProfileShape::Shell { .. } => 1.0,
        }
    }

    /// Radial nodes and weights for `∫ g(r) r² dr` (the `r²` is folded in).
    fn radial_rule(&self, nodes_per_panel: usize, t_max: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = match self.shape {
            ProfileShape::Shell { radius } => return vec![(radius, radius * radius)],
            ProfileShape::Besov { s, width } => {
                // Below r_min the mass fraction is ≲ r_min^{2s}, and at time t
                // the missing part scales like (r_min √t)^{2s}.
                let r_min = 10f64.powf(-6.0 / (2.0 * s)).min(1e-3 / (1.0 + t_max).sqrt());
                (r_min, 5.0 * width)
            }
            ProfileShape::FlatLow { radius, rolloff } => (1e-3 / (1.0 + t_max).sqrt(), radius + 5.0 * rolloff),
        };
        let mut edges = vec![lo];
        let mut e = 2f64.powf(lo.log2().floor() + 1.0);
        while e < hi {
            edges.push(e);
            e *= 2.0;
        }
        if let ProfileShape::FlatLow { radius, .. } = self.shape {
            // the profile has a kink at the radius
            edges.push(radius);
            edges.sort_by(f64::total_cmp);
            edges.dedup();
        }
        edges.push(hi);
        let (x, w) = gauss_legendre(nodes_per_panel);
        let mut out = Vec::with_capacity(edges.len() * nodes_per_panel);
        for p in edges.windows(2) {
            let (a, b) = (p[0], p[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                let r = mid + half * xi;
                out.push((r, half * wi * r * r));
            }
        }
        out
    }
}

/// Norm selectors for the decay series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    FullState,
    NuE,
    NOnly,
    NDivu,
    U,
    E,
    B,
}

impl Component {
    pub fn label(&self) -> &'static str {
        match self {
            Self::FullState => "full_state",
            Self::NuE => "nuE",
            Self::NOnly => "n_only",
            Self::NDivu => "n_divu",
            Self::U => "u",
            Self::E => "E",
            Self::B => "B",
        }
    }

    fn weight(&self, s: &Vec10, xi: [f64; 3]) -> f64 {
        let sq = |range: std::ops::Range<usize>| range.map(|i| s[i].norm_sqr()).sum::<f64>();
        match self {
            Self::FullState => sq(0..10),
            Self::NuE => sq(0..7),
            Self::NOnly => sq(0..1),
            Self::NDivu => sq(0..1) + (xi[0] * s[U] + xi[1] * s[U + 1] + xi[2] * s[U + 2]).norm_sqr(),
            Self::U => sq(U..U + 3),
            Self::E => sq(E..E + 3),
            Self::B => sq(B..B + 3),
        }
    }
}

impl From<DecayQuantity> for Component {
    fn from(q: DecayQuantity) -> Self {
        match q {
            DecayQuantity::FullState => Self::FullState,
            DecayQuantity::NuE => Self::NuE,
            DecayQuantity::NOnly => Self::NOnly,
            DecayQuantity::NDivu => Self::NDivu,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormRequest {
    pub component: Component,
    pub k: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes on each dyadic radial panel.
    pub nodes_per_panel: usize,
    /// Gauss–Legendre nodes in `cos θ` about `B_∞` (unused when `B_∞ = 0`).
    pub polar_nodes: usize,
    /// Largest accepted relative change when the node counts are doubled.
    pub convergence_tolerance: f64,
    pub check_convergence: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_panel: 32,
            polar_nodes: 32,
            convergence_tolerance: 5e-3,
            check_convergence: true,
        }
    }
}

/// Directions `d` and weights for `∫_{S²} g(d) dσ`, exact for integrands
/// symmetric about `B_∞`.
fn direction_rule(constants: &PhysicalConstants, polar_nodes: usize) -> Vec<([f64; 3], f64)> {
    if constants.b_infty_is_zero() {
        return vec![([1.0, 0.0, 0.0], 4.0 * PI)];
    }
    let axis = normalize(constants.b_infty);
    let [p, _] = transverse_frame(axis);
    let (x, w) = gauss_legendre(polar_nodes);
    x.iter()
        .zip(&w)
        .map(|(c, wi)| {
            let s = (1.0 - c * c).sqrt();
            let d = [0, 1, 2].map(|a| c * axis[a] + s * p[a]);
            (d, 2.0 * PI * wi)
        })
        .collect()
}

/// Raw quadrature sums `Σ_nodes w ρ |ξ|^{2k} |mask·e^{tA}Ŝ₀|²` per request and time.
fn quadrature_sums(
    profile: &SpectralProfile,
    requests: &[NormRequest],
    times: &[f64],
    constants: &PhysicalConstants,
    nodes_per_panel: usize,
    directions: &[([f64; 3], f64)],
) -> Result<Vec<Vec<f64>>> {
    let t_max = times.last().copied().unwrap_or(0.0);
    let radial = profile.radial_rule(nodes_per_panel, t_max);
    let nu = constants.nu();
    let mut sums = vec![vec![0.0; times.len()]; requests.len()];
    for &(r, wr) in &radial {
        let rho = profile.density(r);
        if rho == 0.0 {
            continue;
        }
        for &(d, wd) in directions {
            let xi = d.map(|x| r * x);
            let mode = mode_matrix(xi, constants);
            let basis = data_basis(d, r, nu, profile.components);
            let mut cur: Vec<Vec10> = basis;
            let mut cache: Vec<(u64, Mat10)> = Vec::new();
            let mut t_prev = 0.0;
            for (ti, &t) in times.iter().enumerate() {
                let dt = t - t_prev;
                if dt > 0.0 {
                    let key = dt.to_bits();
                    let p = match cache.iter().find(|(k, _)| *k == key) {
                        Some((_, p)) => *p,
                        None => {
                            let p = mode.propagator(dt)?;
                            cache.push((key, p));
                            p
                        }
                    };
                    for v in cur.iter_mut() {
                        *v = p * *v;
                    }
                }
                t_prev = t;
                for (q, req) in requests.iter().enumerate() {
                    let mass: f64 = cur.iter().map(|v| req.component.weight(v, xi)).sum();
                    sums[q][ti] += wr * wd * rho * r.powi(2 * req.k as i32) * mass;
                }
            }
        }
    }
    Ok(sums)
}

/// `(∫ |ξ|^{2k} |mask·exp(tA(ξ))Ŝ₀(ξ)|² dξ)^{1/2}` for every request and time.
///
/// Each series carries a `noise_floor` metadata entry: `NOISE_FLOOR` times
/// the full-state norm with the same `k` at `t = 0`.
pub fn weighted_norm_table(
    profile: &SpectralProfile,
    requests: &[NormRequest],
    times: &[f64],
    constants: &PhysicalConstants,
    quad: &QuadratureSpec,
) -> Result<Vec<NormSeries>> {
    profile.validate()?;
    constants.validate()?;
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("times must be >= 0 and strictly increasing".into()));
    }
    if requests.iter().any(|r| r.component == Component::NDivu) && !constants.b_infty_is_zero() {
        return Err(Error::RequiresBInftyZero);
    }
    // Hidden full-state requests at t = 0 give the noise floors.
    let mut all: Vec<NormRequest> = requests.to_vec();
    for r in requests {
        let full = NormRequest {
            component: Component::FullState,
            k: r.k,
        };
        if !all.contains(&full) {
            all.push(full);
        }
    }
    let dirs = direction_rule(constants, quad.polar_nodes);
    let sums = quadrature_sums(profile, &all, times, constants, quad.nodes_per_panel, &dirs)?;
    let norms: Vec<Vec<f64>> = sums.iter().map(|s| s.iter().map(|v| v.max(0.0).sqrt()).collect()).collect();
    let full_index = |k: u32| {
        all.iter()
            .position(|r| r.component == Component::FullState && r.k == k)
            .expect("added above")
    };
    let floor_of = |k: u32| NOISE_FLOOR * norms[full_index(k)][0];

    if quad.check_convergence && !matches!(profile.shape, ProfileShape::Shell { .. }) {
        let fine_dirs = direction_rule(constants, 2 * quad.polar_nodes);
        let fine = quadrature_sums(profile, requests, times, constants, 2 * quad.nodes_per_panel, &fine_dirs)?;
        for (q, req) in requests.iter().enumerate() {
            let floor = floor_of(req.k);
            let full = full_index(req.k);
            for (ti, &t) in times.iter().enumerate() {
                let coarse = norms[q][ti];
                let refined = fine[q][ti].max(0.0).sqrt();
                if refined < 100.0 * floor {
                    continue;
                }
                let scale = refined.max(CONVERGENCE_SCALE * norms[full][ti]);
                let change = (coarse - refined).abs() / scale;
                if change > quad.convergence_tolerance {
                    return Err(Error::QuadratureNotConverged { change, time: t });
                }
            }
        }
    }

    let radial_nodes = profile.radial_rule(quad.nodes_per_panel, *times.last().unwrap()).len();
    requests
        .iter()
        .enumerate()
        .map(|(q, req)| {
            Ok(NormSeries::new(format!("{}_k{}", req.component.label(), req.k), times.to_vec(), norms[q].clone())?
                .with_meta("component", req.component.label())
                .with_meta("k", req.k)
                .with_meta("noise_floor", floor_of(req.k))
                .with_meta("radial_nodes", radial_nodes)
                .with_meta("directions", dirs.len()))
        })
        .collect()
}

/// Single-request form of [`weighted_norm_table`].
pub fn weighted_norm_series(
    profile: &SpectralProfile,
    k: u32,
    component: Component,
    times: &[f64],
    constants: &PhysicalConstants,
    quad: &QuadratureSpec,
) -> Result<NormSeries> {
    let mut t = weighted_norm_table(profile, &[NormRequest { component, k }], times, constants, quad)?;
    Ok(t.remove(0))
}

/// Sample times `0, dt, 2dt, …, t_max` (a single propagator per node).
pub fn uniform_times(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearReportConfig {
    /// Data class index: `(u₀, E₀, B₀) ∈ Ḃ^{-s}_{2,∞}`.
    pub s: f64,
    pub k_list: Vec<u32>,
    pub quantities: Vec<DecayQuantity>,
    /// Also fit `‖∇^k B‖` against the basic rate.
    pub include_b: bool,
    pub profile_width: f64,
    pub t_max: f64,
    pub sample_dt: f64,
    pub window: (f64, f64),
    pub tolerance: f64,
    pub quadrature: QuadratureSpec,
}

impl Default for LinearReportConfig {
    fn default() -> Self {
        Self {
            s: 1.5,
            k_list: vec![0, 1],
            quantities: DecayQuantity::ALL.to_vec(),
            include_b: true,
            profile_width: DEFAULT_PROFILE_WIDTH,
            t_max: 500.0,
            sample_dt: 5.0,
            window: (20.0, 500.0),
            tolerance: crate::analysis::LINEAR_TOLERANCE,
            quadrature: QuadratureSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearRow {
    pub quantity: String,
    pub k: u32,
    pub s: f64,
    pub fitted_slope: f64,
    pub target: f64,
    pub required_n: u32,
    pub r_squared: f64,
    pub floor_contaminated: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearReport {
    pub s: f64,
    pub b_infty: [f64; 3],
    pub window: (f64, f64),
    pub tolerance: f64,
    pub rows: Vec<LinearRow>,
    pub quadrature: BTreeMap<String, String>,
    #[serde(skip)]
    pub series: Vec<NormSeries>,
}

impl LinearReport {
    pub fn row(&self, quantity: &str, k: u32) -> Option<&LinearRow> {
        self.rows.iter().find(|r| r.quantity == quantity && r.k == k)
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Pass)
    }
}

/// Fitted exponents of every monitored quantity against its target.
pub fn linear_decay_report(config: &LinearReportConfig, constants: &PhysicalConstants) -> Result<LinearReport> {
    if !(config.s > 0.0 && config.s <= 1.5) {
        return Err(Error::SOutOfRange {
            s: config.s,
            range: "(0, 3/2]",
        });
    }
    let b_zero = constants.b_infty_is_zero();
    let mut requests = Vec::new();
    let mut targets = Vec::new();
    for &k in &config.k_list {
        for &q in &config.quantities {
            let rate = theoretical_exponent(q, k, config.s, b_zero)?;
            requests.push(NormRequest { component: q.into(), k });
            targets.push((q.label(), rate));
        }
        if config.include_b {
            let rate = theoretical_exponent(DecayQuantity::FullState, k, config.s, b_zero)?;
            requests.push(NormRequest { component: Component::B, k });
            targets.push(("B", rate));
        }
    }
    let profile = SpectralProfile::new(ProfileShape::Besov {
        s: config.s,
        width: config.profile_width,
    });
    let times = uniform_times(config.t_max, config.sample_dt);
    let series = weighted_norm_table(&profile, &requests, &times, constants, &config.quadrature)?;
    let mut rows = Vec::new();
    for ((req, (label, rate)), ser) in requests.iter().zip(&targets).zip(&series) {
        let floor: f64 = ser.metadata["noise_floor"].parse().unwrap_or(0.0);
        let fit = fit_decay(
            ser,
            config.window,
            Some(FitTarget {
                exponent: rate.exponent,
                tolerance: config.tolerance,
            }),
            Some(floor),
        )?;
        rows.push(LinearRow {
            quantity: label.to_string(),
            k: req.k,
            s: config.s,
            fitted_slope: fit.slope,
            target: rate.exponent,
            required_n: rate.required_n,
            r_squared: fit.r_squared,
            floor_contaminated: fit.floor_contaminated,
            verdict: fit.verdict,
        });
    }
    let mut quadrature = BTreeMap::new();
    if let Some(first) = series.first() {
        for key in ["radial_nodes", "directions"] {
            quadrature.insert(key.to_string(), first.metadata[key].clone());
        }
    }
    quadrature.insert("nodes_per_panel".into(), config.quadrature.nodes_per_panel.to_string());
    quadrature.insert("profile".into(), format!("besov(s={}, width={})", config.s, config.profile_width));
    Ok(LinearReport {
        s: config.s,
        b_infty: constants.b_infty,
        window: config.window,
        tolerance: config.tolerance,
        rows,
        quadrature,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(b: [f64; 3]) -> PhysicalConstants {
        PhysicalConstants::default().with_b_infty(b)
    }

    fn sorted_by_im(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        v
    }

    #[test]
    fn zero_wavenumber_spectrum() {
        let c = consts([0.0; 3]);
        let nu = c.nu();
        let m = mode_matrix([0.0; 3], &c);
        // [[−ν, −ν], [ν, 0]]: λ² + νλ + ν² = 0
        let root = Complex64::new(-0.5 * nu, 0.5 * 3f64.sqrt() * nu);
        let mut expected = vec![Complex64::default(); 4];
        expected.extend([root; 3]);
        expected.extend([root.conj(); 3]);
        let got = sorted_by_im(m.eigenvalues().unwrap());
        let expected = sorted_by_im(expected);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).norm() < 1e-7, "{g} vs {e}");
        }
    }

    #[test]
    fn trace_is_minus_three_nu() {
        for b in [[0.0; 3], [0.3, -1.0, 2.0]] {
            let c = consts(b);
            for xi in [[0.0; 3], [1.0, 2.0, -0.5], [40.0, 0.0, 0.1]] {
                let t = mode_matrix(xi, &c).trace();
                assert!((t.re + 3.0 * c.nu()).abs() < 1e-15 && t.im == 0.0);
            }
        }
    }

    #[test]
    fn axis_aligned_mode_decouples() {
        let m = mode_matrix([1.7, 0.0, 0.0], &consts([0.0; 3])).matrix;
        let longitudinal = [N, U, E];
        let transverse = [U + 1, U + 2, E + 1, E + 2, B + 1, B + 2];
        for &i in &longitudinal {
            for &j in &transverse {
                assert_eq!(m[(i, j)], Complex64::default());
                assert_eq!(m[(j, i)], Complex64::default());
            }
        }
        // B₁ is inert along ξ = (κ,0,0)
        for j in 0..10 {
            assert_eq!(m[(B, j)], Complex64::default());
            assert_eq!(m[(j, B)], Complex64::default());
        }
    }

    #[test]
    fn closed_form_at_zero_wavenumber() {
        // u' = −νu − νE, E' = νu: with ω = ν√3/2,
        // u(t) = e^{−νt/2}(cos ωt − sin ωt/√3) for u(0)=1, E(0)=0.
        let c = consts([0.0; 3]);
        let nu = c.nu();
        let m = mode_matrix([0.0; 3], &c);
        let mut s0 = Vec10::zeros();
        s0[U] = Complex64::new(1.0, 0.0);
        let w = 0.5 * 3f64.sqrt() * nu;
        for t in [0.0, 0.3, 2.0, 11.0] {
            let s = evolve_mode(&m, t, &s0).unwrap();
            let g = (-0.5 * nu * t).exp();
            let u = g * ((w * t).cos() - (w * t).sin() / 3f64.sqrt());
            let e = g * 2.0 / 3f64.sqrt() * (w * t).sin();
            assert!((s[U].re - u).abs() < 1e-13 && s[U].im.abs() < 1e-13);
            assert!((s[E].re - e).abs() < 1e-13);
        }
    }

    #[test]
    fn group_property_and_identity() {
        let m = mode_matrix([0.4, -1.1, 2.0], &consts([0.0, 0.0, 1.0]));
        assert!((m.propagator(0.0).unwrap() - Mat10::identity()).norm() < 1e-15);
        let a = m.propagator(3.0).unwrap() * m.propagator(4.5).unwrap();
        let b = m.propagator(7.5).unwrap();
        assert!((a - b).norm() < 1e-9 * b.norm());
        assert!(matches!(m.propagator(-1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn energy_is_nonincreasing_and_constraints_hold() {
        let c = consts([0.2, 0.0, 1.0]);
        let xi: [f64; 3] = [0.3, 0.8, -0.2];
        let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        let d = xi.map(|x| x / r);
        let m = mode_matrix(xi, &c);
        let s0: Vec10 = data_basis(d, r, c.nu(), DataComponents::default())
            .into_iter()
            .enumerate()
            .fold(Vec10::zeros(), |acc, (i, v)| acc + v * Complex64::new(1.0 + i as f64, 0.5));
        let (g0, b0) = m.constraint_residual(&s0);
        assert!(g0 < 1e-15 && b0 < 1e-15);
        let step = m.propagator(0.25).unwrap();
        let mut s = s0;
        let mut prev = s.norm();
        for _ in 0..400 {
            s = step * s;
            let now = s.norm();
            assert!(now <= prev * (1.0 + 1e-13));
            prev = now;
            let (g, b) = m.constraint_residual(&s);
            assert!(g <= 1e-9 * s0.norm() && b <= 1e-9 * s0.norm());
        }
    }

    #[test]
    fn spectral_abscissa_is_nonpositive() {
        let c = consts([0.0, 0.6, 0.8]);
        for xi in [[0.01, 0.0, 0.0], [0.5, 0.5, 0.1], [3.0, -2.0, 1.0], [0.0, 0.0, 10.0]] {
            assert!(mode_matrix(xi, &c).spectral_abscissa().unwrap() <= 1e-10);
        }
    }

    fn rotation(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
        let [x, y, z] = normalize(axis);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    }

    fn rotate_state(r: &[[f64; 3]; 3], s: &Vec10) -> Vec10 {
        let mut out = *s;
        for off in [U, E, B] {
            for a in 0..3 {
                out[off + a] = (0..3).map(|b| s[off + b] * r[a][b]).sum();
            }
        }
        out
    }

    #[test]
    fn rotational_covariance() {
        let rot = rotation([1.0, 2.0, -0.5], 0.9);
        let apply = |v: [f64; 3]| [0, 1, 2].map(|a| (0..3).map(|b| rot[a][b] * v[b]).sum::<f64>());
        let check = |c: &PhysicalConstants, rot: &[[f64; 3]; 3]| {
            let xi = [0.7, -0.2, 0.4];
            let s0 = Vec10::from_fn(|i, _| Complex64::new(0.1 * i as f64, (i as f64).sin()));
            let lhs = evolve_mode(&mode_matrix(apply(xi), c), 5.0, &rotate_state(rot, &s0)).unwrap();
            let rhs = rotate_state(rot, &evolve_mode(&mode_matrix(xi, c), 5.0, &s0).unwrap());
            (lhs - rhs).norm()
        };
        assert!(check(&consts([0.0; 3]), &rot) < 1e-10);
        // About B_∞ itself the symmetry survives.
        let b = [0.3, 0.0, 1.0];
        let about_b = rotation(b, 1.3);
        let c = consts(b);
        let apply_b = |v: [f64; 3]| [0, 1, 2].map(|a| (0..3).map(|k| about_b[a][k] * v[k]).sum::<f64>());
        let xi = [0.7, -0.2, 0.4];
        let s0 = Vec10::from_fn(|i, _| Complex64::new(0.1 * i as f64, 0.3));
        let lhs = evolve_mode(&mode_matrix(apply_b(xi), &c), 5.0, &rotate_state(&about_b, &s0)).unwrap();
        let rhs = rotate_state(&about_b, &evolve_mode(&mode_matrix(xi, &c), 5.0, &s0).unwrap());
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn flat_profile_at_time_zero() {
        // Only transverse B: |Ŝ₀|² = 2 on |ξ| ≤ 1, so value² = 2·(4π/3).
        let profile = SpectralProfile {
            shape: ProfileShape::FlatLow { radius: 1.0, rolloff: 1e-3 },
            amplitude: 1.0,
            components: DataComponents { gauss: false, u: false, e: false, b: true },
        };
        let quad = QuadratureSpec { check_convergence: false, ..Default::default() };
        let s = weighted_norm_series(&profile, 0, Component::FullState, &[0.0], &consts([0.0; 3]), &quad).unwrap();
        let tail = 2.0 * 4.0 * PI * (0.5 * PI.sqrt() * 1e-3 + 2e-3 * 1e-3 * 0.5 + 1e-9);
        let expected = (2.0 * 4.0 * PI / 3.0 + tail).sqrt();
        assert!((s.values[0] / expected - 1.0).abs() < 1e-6, "{} vs {}", s.values[0], expected);
    }

    #[test]
    fn shell_profile_matches_direct_evolution() {
        let c = consts([0.0; 3]);
        let radius = 0.7;
        let profile = SpectralProfile::new(ProfileShape::Shell { radius });
        let times = [0.0, 1.0, 4.0, 9.0];
        let series = weighted_norm_series(&profile, 1, Component::NuE, &times, &c, &QuadratureSpec::default()).unwrap();
        let d = [1.0, 0.0, 0.0];
        let mode = mode_matrix(d.map(|x| radius * x), &c);
        for (t, v) in times.iter().zip(&series.values) {
            let mass: f64 = data_basis(d, radius, c.nu(), DataComponents::default())
                .iter()
                .map(|b| {
                    let s = evolve_mode(&mode, *t, b).unwrap();
                    (0..7).map(|i| s[i].norm_sqr()).sum::<f64>()
                })
                .sum();
            let direct = (4.0 * PI * radius * radius * radius * radius * mass).sqrt();
            assert!((v - direct).abs() < 1e-12 * direct);
        }
    }

    #[test]
    fn azimuthal_collapse_is_exact() {
        // Explicit azimuth sum over 64 nodes equals the collapsed rule.
        let c = consts([0.0, 0.5, 1.0]);
        let r = 0.6;
        let axis = normalize(c.b_infty);
        let [p, q] = transverse_frame(axis);
        let t = 6.0;
        let mass_at = |d: [f64; 3]| -> f64 {
            let mode = mode_matrix(d.map(|x| r * x), &c);
            data_basis(d, r, c.nu(), DataComponents::default())
                .iter()
                .map(|b| Component::FullState.weight(&evolve_mode(&mode, t, b).unwrap(), [0.0; 3]))
                .sum()
        };
        let cos = 0.35f64;
        let sin = (1.0 - cos * cos).sqrt();
        let collapsed = mass_at([0, 1, 2].map(|a| cos * axis[a] + sin * p[a]));
        let explicit: f64 = (0..64)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / 64.0;
                let d = [0, 1, 2].map(|a| cos * axis[a] + sin * (phi.cos() * p[a] + phi.sin() * q[a]));
                mass_at(d)
            })
            .sum::<f64>()
            / 64.0;
        assert!((collapsed - explicit).abs() < 1e-10 * explicit);
    }

    #[test]
    fn n_divu_needs_zero_background() {
        let p = SpectralProfile::besov(1.5);
        let r = weighted_norm_series(&p, 0, Component::NDivu, &[0.0, 1.0], &consts([0.0, 0.0, 1.0]), &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::RequiresBInftyZero)));
    }

    #[test]
    fn basic_rate_for_half_class() {
        let cfg = LinearReportConfig {
            s: 0.5,
            k_list: vec![0],
            quantities: vec![DecayQuantity::FullState],
            include_b: false,
            ..Default::default()
        };
        let rep = linear_decay_report(&cfg, &consts([0.0; 3])).unwrap();
        let row = rep.row("full_state", 0).unwrap();
        assert!((row.fitted_slope + 0.25).abs() < 0.08, "{row:?}");
    }
}
