//! Physical constants, the Gauss-law closure `f(n)`, the change of variables
//! to the perturbation unknowns and constraint-compatible initial data.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::spectral::{
    divergence, inverse_divergence, l2_norm, transverse_part, Field, GridSpec, ScalarField,
    VectorField,
};
use crate::{Error, Result};

/// Constants of the original system. The perturbation equations are written
/// with `A = τ = λ = ε = n_∞ = 1`; only `γ` and `B_∞` enter the dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    pub gamma: f64,
    #[serde(rename = "A")]
    pub pressure_coeff: f64,
    pub tau: f64,
    #[serde(rename = "lambda")]
    pub debye_length: f64,
    pub epsilon: f64,
    pub n_infty: f64,
    pub b_infty: [f64; 3],
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            gamma: 5.0 / 3.0,
            pressure_coeff: 1.0,
            tau: 1.0,
            debye_length: 1.0,
            epsilon: 1.0,
            n_infty: 1.0,
            b_infty: [0.0, 0.0, 1.0],
        }
    }
}

impl PhysicalConstants {
    pub fn with_b_infty(mut self, b: [f64; 3]) -> Self {
        self.b_infty = b;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        for (name, v) in [
            ("pressure_coeff", self.pressure_coeff),
            ("tau", self.tau),
            ("debye_length", self.debye_length),
            ("epsilon", self.epsilon),
            ("n_infty", self.n_infty),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.b_infty.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("b_infty must be finite".into()));
        }
        Ok(())
    }

    /// The perturbation form assumes every constant except `γ` and `B_∞` is one.
    pub fn require_normalized(&self) -> Result<()> {
        self.validate()?;
        for (name, v) in [
            ("pressure_coeff", self.pressure_coeff),
            ("tau", self.tau),
            ("debye_length", self.debye_length),
            ("epsilon", self.epsilon),
            ("n_infty", self.n_infty),
        ] {
            if v != 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v}: the perturbation equations are normalized to {name} = 1"
                )));
            }
        }
        Ok(())
    }

    /// `μ = (γ − 1)/2`.
    pub fn mu(&self) -> f64 {
        0.5 * (self.gamma - 1.0)
    }

    /// `ν = 1/√γ`.
    pub fn nu(&self) -> f64 {
        1.0 / self.gamma.sqrt()
    }

    pub fn b_infty_is_zero(&self) -> bool {
        self.b_infty.iter().all(|b| *b == 0.0)
    }
}

/// `f(n) = (1 + μn)^{1/μ} − 1`, and `eⁿ − 1` for `γ = 1`.
pub fn f_of_n(n: f64, gamma: f64) -> Result<f64> {
    let mu = 0.5 * (gamma - 1.0);
    if mu == 0.0 {
        return Ok(n.exp_m1());
    }
    let base = 1.0 + mu * n;
    if base <= 0.0 || !base.is_finite() {
        return Err(Error::DensityNonpositive { margin: base });
    }
    if mu == 1.0 {
        return Ok(n);
    }
    Ok(((mu * n).ln_1p() / mu).exp_m1())
}

/// `f'(n) = (1 + μn)^{1/μ − 1}`.
pub fn f_prime(n: f64, gamma: f64) -> Result<f64> {
    let mu = 0.5 * (gamma - 1.0);
    if mu == 0.0 {
        return Ok(n.exp());
    }
    let base = 1.0 + mu * n;
    if base <= 0.0 {
        return Err(Error::DensityNonpositive { margin: base });
    }
    Ok(base.powf(1.0 / mu - 1.0))
}

/// `f''(n) = (1 − μ)(1 + μn)^{1/μ − 2}`.
pub fn f_second(n: f64, gamma: f64) -> Result<f64> {
    let mu = 0.5 * (gamma - 1.0);
    if mu == 0.0 {
        return Ok(n.exp());
    }
    let base = 1.0 + mu * n;
    if base <= 0.0 {
        return Err(Error::DensityNonpositive { margin: base });
    }
    Ok((1.0 - mu) * base.powf(1.0 / mu - 2.0))
}

/// Inverse of [`f_of_n`]: `n = ((1 + y)^μ − 1)/μ`, `ln(1 + y)` for `γ = 1`.
pub fn f_inverse(y: f64, gamma: f64) -> Result<f64> {
    if 1.0 + y <= 0.0 || !y.is_finite() {
        return Err(Error::OutOfRange { value: y });
    }
    let mu = 0.5 * (gamma - 1.0);
    if mu == 0.0 {
        return Ok(y.ln_1p());
    }
    if mu == 1.0 {
        return Ok(y);
    }
    Ok((mu * y.ln_1p()).exp_m1() / mu)
}

/// Pointwise `f(n)` of a field.
pub fn f_field(n: &ScalarField, gamma: f64) -> Result<ScalarField> {
    let values = n
        .physical()
        .into_iter()
        .map(|v| f_of_n(v, gamma))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::from_physical(*n.grid(), &values)
}

/// Smallest `1 + μ n(x)` on the grid.
pub fn positivity_margin(n: &ScalarField, constants: &PhysicalConstants) -> f64 {
    let mu = constants.mu();
    n.physical().into_iter().map(|v| 1.0 + mu * v).fold(f64::INFINITY, f64::min)
}

/// The perturbation unknowns `(n, u, E, B)` at rescaled time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationState {
    pub n: ScalarField,
    pub u: VectorField,
    pub e: VectorField,
    pub b: VectorField,
    pub time: f64,
}

impl PerturbationState {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            n: ScalarField::zeros(grid),
            u: VectorField::zeros(grid),
            e: VectorField::zeros(grid),
            b: VectorField::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.n.grid()
    }

    /// The ten scalar components in the order `n, u, E, B`.
    pub fn scalars(&self) -> [&ScalarField; 10] {
        let [u0, u1, u2] = self.u.parts();
        let [e0, e1, e2] = self.e.parts();
        let [b0, b1, b2] = self.b.parts();
        [&self.n, u0, u1, u2, e0, e1, e2, b0, b1, b2]
    }

    pub fn is_zero(&self) -> bool {
        self.scalars().iter().all(|f| f.is_zero())
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.scalars().iter().map(|f| f.hermitian_defect()).fold(0.0, f64::max)
    }
}

impl Field for PerturbationState {
    fn grid(&self) -> &GridSpec {
        self.n.grid()
    }

    fn components(&self) -> Vec<&ScalarField> {
        self.scalars().to_vec()
    }
}

/// Unknowns of the original system: density, velocity, electric and
/// magnetic fields at physical time.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalState {
    pub density: ScalarField,
    pub velocity: VectorField,
    pub electric: VectorField,
    pub magnetic: VectorField,
    pub time: f64,
}

fn shift_mean(v: &VectorField, shift: [f64; 3]) -> VectorField {
    let mut parts = v.clone().into_parts();
    for (c, s) in parts.iter_mut().zip(shift) {
        *c = c.map_modes(|idx, z| if idx == 0 { z + s } else { z });
    }
    VectorField::new(parts).expect("same grid")
}

/// Forward change of variables.
pub fn to_perturbation(phys: &PhysicalState, constants: &PhysicalConstants) -> Result<PerturbationState> {
    constants.validate()?;
    let rho = phys.density.physical();
    let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::NonpositiveDensity { min });
    }
    let g = constants.gamma;
    let mu = constants.mu();
    let n_vals: Vec<f64> = if mu == 0.0 {
        let a = constants.pressure_coeff.sqrt();
        rho.iter().map(|r| a * (r.ln() - constants.n_infty.ln())).collect()
    } else {
        rho.iter()
            .map(|r| (mu * (r / constants.n_infty).ln()).exp_m1() / mu)
            .collect()
    };
    let sg = g.sqrt();
    let b_shift = constants.b_infty.map(|b| -b);
    Ok(PerturbationState {
        n: ScalarField::from_physical(*phys.density.grid(), &n_vals)?,
        u: phys.velocity.scale(1.0 / sg),
        e: phys.electric.scale(1.0 / sg),
        b: shift_mean(&phys.magnetic.scale(1.0 / sg), b_shift),
        time: sg * phys.time,
    })
}

/// Inverse change of variables.
pub fn from_perturbation(state: &PerturbationState, constants: &PhysicalConstants) -> Result<PhysicalState> {
    constants.validate()?;
    let mu = constants.mu();
    let rho: Vec<f64> = if mu == 0.0 {
        let a = constants.pressure_coeff.sqrt();
        state
            .n
            .physical()
            .into_iter()
            .map(|n| constants.n_infty * (n / a).exp())
            .collect()
    } else {
        state
            .n
            .physical()
            .into_iter()
            .map(|n| f_of_n(n, constants.gamma).map(|f| constants.n_infty * (1.0 + f)))
            .collect::<Result<_>>()?
    };
    let sg = constants.gamma.sqrt();
    Ok(PhysicalState {
        density: ScalarField::from_physical(*state.grid(), &rho)?,
        velocity: state.u.scale(sg),
        electric: state.e.scale(sg),
        magnetic: shift_mean(&state.b, constants.b_infty).scale(sg),
        time: state.time / sg,
    })
}

/// Shape of the seeded initial perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialKind {
    /// Random phases, `|ĝ(k)| ∝ min(1,|k|)^{s−5/4} exp(−|k|²/width²)`: finite
    /// `Ḣ^{-s}` norm dominated by the low band.
    LowFreq { s: f64, width: f64 },
    /// Coherent packet with flat spectrum on `|k| ≤ radius` and a Gaussian
    /// rolloff above: the `L¹` / `Ḃ^{-3/2}_{2,∞}` class.
    FlatLow { radius: f64, rolloff: f64 },
    /// Compactly supported `C^∞` bump of the given radius at the box centre.
    Bump { radius: f64 },
    /// `n₀ = δ cos(k·x)` and a transverse `B₀ = δ e_⊥ cos(k·x)` on one mode.
    SingleMode { mode: [i64; 3] },
}

impl Default for InitialKind {
    fn default() -> Self {
        InitialKind::FlatLow {
            radius: 0.5,
            rolloff: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInitialData")]
pub struct InitialData {
    #[serde(flatten)]
    pub kind: InitialKind,
    /// Peak magnitude `δ` of each seeded field.
    pub amplitude: f64,
    /// Peak magnitude of the free transverse part of `E₀`, relative to `δ`.
    pub transverse_e: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            kind: InitialKind::default(),
            amplitude: 1e-2,
            transverse_e: 0.0,
        }
    }
}

// serde cannot combine `flatten` with `deny_unknown_fields`, so the flat
// table is read through this and the shape rebuilt by hand.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitialData {
    kind: Option<String>,
    s: Option<f64>,
    width: Option<f64>,
    radius: Option<f64>,
    rolloff: Option<f64>,
    mode: Option<[i64; 3]>,
    amplitude: Option<f64>,
    transverse_e: Option<f64>,
}

impl TryFrom<RawInitialData> for InitialData {
    type Error = String;

    fn try_from(r: RawInitialData) -> std::result::Result<Self, String> {
        let d = InitialData::default();
        let need = |v: Option<f64>, name: &str, kind: &str| {
            v.ok_or_else(|| format!("initial kind `{kind}` needs `{name}`"))
        };
        let given: Vec<&str> = [
            ("s", r.s.is_some()),
            ("width", r.width.is_some()),
            ("radius", r.radius.is_some()),
            ("rolloff", r.rolloff.is_some()),
            ("mode", r.mode.is_some()),
        ]
        .iter()
        .filter(|(_, g)| *g)
        .map(|(n, _)| *n)
        .collect();
        let (kind, allowed): (InitialKind, &[&str]) = match r.kind.as_deref() {
            None => {
                if !given.is_empty() {
                    return Err(format!("initial: `{}` given without `kind`", given[0]));
                }
                (d.kind, &[])
            }
            Some(k @ "low_freq") => (
                InitialKind::LowFreq { s: need(r.s, "s", k)?, width: need(r.width, "width", k)? },
                &["s", "width"],
            ),
            Some(k @ "flat_low") => (
                InitialKind::FlatLow { radius: need(r.radius, "radius", k)?, rolloff: need(r.rolloff, "rolloff", k)? },
                &["radius", "rolloff"],
            ),
            Some(k @ "bump") => (InitialKind::Bump { radius: need(r.radius, "radius", k)? }, &["radius"]),
            Some("single_mode") => (
                InitialKind::SingleMode { mode: r.mode.ok_or("initial kind `single_mode` needs `mode`")? },
                &["mode"],
            ),
            Some(other) => {
                return Err(format!(
                    "unknown initial kind `{other}`, expected one of low_freq, flat_low, bump, single_mode"
                ))
            }
        };
        if let Some(extra) = given.iter().find(|g| !allowed.contains(g)) {
            return Err(format!("unknown field `{extra}` for this initial kind"));
        }
        Ok(InitialData {
            kind,
            amplitude: r.amplitude.unwrap_or(d.amplitude),
            transverse_e: r.transverse_e.unwrap_or(d.transverse_e),
        })
    }
}

struct Generator<'a> {
    grid: GridSpec,
    kind: &'a InitialKind,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn centre(&self) -> [f64; 3] {
        [0.5 * self.grid.box_length(); 3]
    }

    /// One mean-zero scalar shape of the configured kind.
    fn scalar(&mut self) -> ScalarField {
        let grid = self.grid;
        let field = match *self.kind {
            InitialKind::LowFreq { s, width } => {
                let noise: Vec<f64> = (0..grid.len()).map(|_| self.normal()).collect();
                let a = s - 1.25;
                ScalarField::from_physical(grid, &noise)
                    .expect("sized to grid")
                    .map_modes(|idx, c| {
                        let k = grid.k_squared(idx).sqrt();
                        if idx == 0 || c.norm() == 0.0 {
                            return Complex64::default();
                        }
                        c / c.norm() * k.min(1.0).powf(a) * (-(k * k) / (width * width)).exp()
                    })
            }
            InitialKind::FlatLow { radius, rolloff } => {
                let weight = self.normal();
                let profile = move |k: f64| {
                    if k <= radius {
                        1.0
                    } else {
                        (-((k - radius) / rolloff).powi(2)).exp()
                    }
                };
                packet(grid, self.centre(), profile).scale(weight)
            }
            InitialKind::Bump { radius } => {
                let weight = self.normal();
                let c = self.centre();
                ScalarField::from_fn(grid, |x| {
                    let r2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                    let rho2 = r2 / (radius * radius);
                    if rho2 >= 1.0 {
                        0.0
                    } else {
                        weight * (1.0 / (rho2 - 1.0)).exp()
                    }
                })
            }
            InitialKind::SingleMode { mode } => crate::spectral::cosine_mode(grid, mode, 1.0, 0.0),
        };
        field.without_mean()
    }

    fn vector(&mut self) -> VectorField {
        VectorField::new([self.scalar(), self.scalar(), self.scalar()]).expect("same grid")
    }
}

/// Coherent packet `F⁻¹[P(|k|) e^{−ik·c}]` centred at `c`.
fn packet(grid: GridSpec, centre: [f64; 3], profile: impl Fn(f64) -> f64) -> ScalarField {
    let k = grid.wavenumbers();
    let coeffs = (0..grid.len())
        .map(|idx| {
            let [i, j, l] = grid.split(idx);
            if grid.is_nyquist(i) || grid.is_nyquist(j) || grid.is_nyquist(l) {
                return Complex64::default();
            }
            let kv = [k[i], k[j], k[l]];
            let mag = (kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]).sqrt();
            let phase = -(kv[0] * centre[0] + kv[1] * centre[1] + kv[2] * centre[2]);
            Complex64::from_polar(profile(mag) / grid.volume(), phase)
        })
        .collect();
    ScalarField::from_coefficients(grid, coeffs).expect("sized to grid")
}

fn normalize_peak<F: Field + Scalable>(f: F, peak: f64) -> F {
    let m = crate::spectral::lp_norm(&f, f64::INFINITY);
    if m == 0.0 {
        f
    } else {
        f.scaled(peak / m)
    }
}

trait Scalable {
    fn scaled(&self, factor: f64) -> Self;
}

impl Scalable for ScalarField {
    fn scaled(&self, factor: f64) -> Self {
        self.scale(factor)
    }
}

impl Scalable for VectorField {
    fn scaled(&self, factor: f64) -> Self {
        self.scale(factor)
    }
}

/// Longitudinal `E` with `div E = −ν f(n)` on every nonzero mode:
/// `Ê_long = i k ν f̂(n)/|k|²`.
pub fn gauss_longitudinal(n: &ScalarField, constants: &PhysicalConstants) -> Result<VectorField> {
    let f = f_field(n, constants.gamma)?;
    Ok(inverse_divergence(&f.scale(-constants.nu())))
}

/// Seeded initial data satisfying the compatibility conditions: transverse
/// `B₀` and `div E₀ = −ν f(n₀)`.
pub fn make_initial_data(
    spec: &InitialData,
    seed: u64,
    grid: GridSpec,
    constants: &PhysicalConstants,
) -> Result<PerturbationState> {
    constants.validate()?;
    let delta = spec.amplitude;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("amplitude must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(PerturbationState::zeros(grid));
    }
    let mut gen = Generator {
        grid,
        kind: &spec.kind,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let (n0, u0, b0, e_free) = match spec.kind {
        InitialKind::SingleMode { mode } => {
            if mode == [0, 0, 0] {
                return Err(Error::InvalidParameter("single_mode needs a nonzero mode".into()));
            }
            let n0 = crate::spectral::cosine_mode(grid, mode, delta, 0.0);
            let dir = unit_perpendicular(mode.map(|m| m as f64));
            let shape = crate::spectral::cosine_mode(grid, mode, delta, 0.0);
            let b0 = VectorField::new([shape.scale(dir[0]), shape.scale(dir[1]), shape.scale(dir[2])])?;
            let e_free = if spec.transverse_e != 0.0 {
                let s = crate::spectral::cosine_mode(grid, mode, delta * spec.transverse_e, 0.5 * PI);
                let d2 = cross(mode.map(|m| m as f64), dir);
                let norm = (d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]).sqrt();
                VectorField::new([s.scale(d2[0] / norm), s.scale(d2[1] / norm), s.scale(d2[2] / norm)])?
            } else {
                VectorField::zeros(grid)
            };
            (n0, VectorField::zeros(grid), transverse_part(&b0), e_free)
        }
        _ => {
            let n0 = normalize_peak(gen.scalar(), delta);
            let u0 = normalize_peak(gen.vector(), delta);
            let b0 = normalize_peak(transverse_part(&gen.vector()), delta);
            let e_free = if spec.transverse_e != 0.0 {
                normalize_peak(transverse_part(&gen.vector()), delta * spec.transverse_e)
            } else {
                VectorField::zeros(grid)
            };
            (n0, u0, b0, e_free)
        }
    };
    let margin = positivity_margin(&n0, constants);
    if margin <= 0.0 {
        return Err(Error::AmplitudeTooLarge { amplitude: delta, margin });
    }
    let e_long = gauss_longitudinal(&n0, constants)?;
    Ok(PerturbationState {
        n: n0,
        u: u0,
        e: &e_long + &e_free,
        b: b0,
        time: 0.0,
    })
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit_perpendicular(k: [f64; 3]) -> [f64; 3] {
    let trial = if k[0].abs() <= k[1].abs() && k[0].abs() <= k[2].abs() {
        [1.0, 0.0, 0.0]
    } else if k[1].abs() <= k[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let c = cross(k, trial);
    let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    c.map(|v| v / norm)
}

/// Constraint residuals of a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompatibilityReport {
    /// `‖div E + ν f(n)‖_{L²}` over the nonzero modes off the Nyquist planes
    /// (where the spectral divergence vanishes identically).
    pub gauss_residual: f64,
    /// `‖div B‖_{L²}`.
    pub div_b_residual: f64,
    /// `‖div B‖ / ‖B‖` (zero when `B = 0`).
    pub div_b_relative: f64,
    /// `min_x (1 + μ n)`.
    pub positivity_margin: f64,
    /// `ν |mean f(n)| L^{3/2}`: the uniform charge a periodic `E` cannot carry.
    pub charge_imbalance: f64,
}

pub fn verify_compatibility(state: &PerturbationState, constants: &PhysicalConstants) -> CompatibilityReport {
    let volume = state.grid().volume();
    let margin = positivity_margin(&state.n, constants);
    let div_b = l2_norm(&divergence(&state.b));
    let b_norm = l2_norm(&state.b);
    let (gauss, charge) = match f_field(&state.n, constants.gamma) {
        Ok(f) => {
            let nu = constants.nu();
            let res = &divergence(&state.e) + &f.scale(nu);
            let grid = *res.grid();
            let resolved = res.map_modes(|idx, c| {
                let [i, j, l] = grid.split(idx);
                if idx == 0 || grid.is_nyquist(i) || grid.is_nyquist(j) || grid.is_nyquist(l) {
                    Complex64::default()
                } else {
                    c
                }
            });
            (
                l2_norm(&resolved),
                nu * f.mean().abs() * volume.sqrt(),
            )
        }
        Err(_) => (f64::NAN, f64::NAN),
    };
    CompatibilityReport {
        gauss_residual: gauss,
        div_b_residual: div_b,
        div_b_relative: if b_norm > 0.0 { div_b / b_norm } else { 0.0 },
        positivity_margin: margin,
        charge_imbalance: charge,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{besov_norm, gradient};
    use proptest::prelude::*;

    #[test]
    fn f_basic_values() {
        assert_eq!(f_of_n(0.0, 5.0 / 3.0).unwrap(), 0.0);
        for n in [-0.9, -0.1, 0.0, 0.3, 2.0] {
            assert!((f_of_n(n, 3.0).unwrap() - n).abs() <= 1e-14);
            assert!((f_inverse(n, 3.0).unwrap() - n).abs() <= 1e-14);
        }
        assert!(matches!(f_of_n(-4.0, 5.0 / 3.0), Err(Error::DensityNonpositive { .. })));
        assert!(matches!(f_inverse(-1.0, 5.0 / 3.0), Err(Error::OutOfRange { .. })));
        assert_eq!(f_inverse(0.0, 1.4).unwrap(), 0.0);
    }

    #[test]
    fn f_second_order_coefficient_by_richardson() {
        // (f(n) − n)/n² → f''(0)/2; Richardson on h, h/2 removes the O(n) term.
        for gamma in [1.4, 5.0 / 3.0, 2.0] {
            let q = |h: f64| (f_of_n(h, gamma).unwrap() - h) / (h * h);
            let h = 1e-2;
            let extrapolated = 2.0 * q(h / 2.0) - q(h);
            let analytic = 0.5 * f_second(0.0, gamma).unwrap();
            assert!((extrapolated - analytic).abs() < 1e-5, "γ={gamma}: {extrapolated} vs {analytic}");
            assert!((analytic - 0.25 * (3.0 - gamma)).abs() < 1e-15);
        }
    }

    #[test]
    fn f_is_close_to_identity() {
        for gamma in [1.4, 5.0 / 3.0, 2.0, 3.0] {
            let c = 0.5 * f_second(0.0, gamma).unwrap();
            for i in 1..=100 {
                let n = 0.1 * i as f64 / 100.0;
                for n in [n, -n] {
                    let ratio = (f_of_n(n, gamma).unwrap() - n) / (n * n);
                    if c == 0.0 {
                        assert!(ratio.abs() < 1e-9);
                    } else {
                        assert!((ratio - c).abs() <= 0.1 * c.abs(), "γ={gamma} n={n}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn f_inverse_round_trip(y in -0.95f64..5.0, gamma in 1.0f64..4.0) {
            let n = f_inverse(y, gamma).unwrap();
            prop_assert!((f_of_n(n, gamma).unwrap() - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }

        #[test]
        fn f_is_increasing(a in -1.0f64..1.0, b in -1.0f64..1.0, gamma in 1.0f64..3.0) {
            prop_assume!(a < b);
            prop_assert!(f_of_n(a, gamma).unwrap() < f_of_n(b, gamma).unwrap());
        }
    }

    fn grid() -> GridSpec {
        GridSpec::new(16, 2.0 * PI).unwrap()
    }

    #[test]
    fn equilibrium_maps_to_origin() {
        let g = grid();
        let c = PhysicalConstants::default();
        let sg = c.gamma.sqrt();
        let phys = PhysicalState {
            density: ScalarField::from_fn(g, |_| 1.0),
            velocity: VectorField::zeros(g),
            electric: VectorField::zeros(g),
            magnetic: VectorField::from_fn(g, |_| c.b_infty.map(|b| sg * b)),
            time: 0.0,
        };
        let state = to_perturbation(&phys, &c).unwrap();
        assert!(l2_norm(&state.n) < 1e-14);
        assert!(l2_norm(&state.b) < 1e-13);
        assert!(l2_norm(&state.u) == 0.0 && l2_norm(&state.e) == 0.0);
    }

    #[test]
    fn change_of_variables_round_trip() {
        let g = grid();
        for gamma in [1.0, 1.4, 5.0 / 3.0] {
            let c = PhysicalConstants::default().with_gamma(gamma);
            let phys = PhysicalState {
                density: ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].sin() * x[1].cos()),
                velocity: VectorField::from_fn(g, |x| [x[2].sin(), 0.1, x[0].cos()]),
                electric: VectorField::from_fn(g, |x| [0.2, x[1].sin(), 0.0]),
                magnetic: VectorField::from_fn(g, |x| [x[1].cos(), 0.0, 1.5]),
                time: 2.5,
            };
            let state = to_perturbation(&phys, &c).unwrap();
            assert!((state.time - 2.5 * gamma.sqrt()).abs() < 1e-14);
            let back = from_perturbation(&state, &c).unwrap();
            let d = l2_norm(&(&back.density - &phys.density))
                + l2_norm(&(&back.velocity - &phys.velocity))
                + l2_norm(&(&back.electric - &phys.electric))
                + l2_norm(&(&back.magnetic - &phys.magnetic));
            assert!(d < 1e-12 * l2_norm(&phys.magnetic), "γ={gamma}: {d}");
            assert!((back.time - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn log_branch_is_exp_pair() {
        let g = grid();
        let c = PhysicalConstants::default().with_gamma(1.0);
        let state = PerturbationState {
            n: ScalarField::from_fn(g, |x| 0.2 * x[0].sin()),
            ..PerturbationState::zeros(g)
        };
        let phys = from_perturbation(&state, &c).unwrap();
        let expected = ScalarField::from_fn(g, |x| (0.2 * x[0].sin()).exp());
        assert!(l2_norm(&(&phys.density - &expected)) < 1e-12);
    }

    #[test]
    fn nonpositive_density_rejected() {
        let g = grid();
        let phys = PhysicalState {
            density: ScalarField::from_fn(g, |x| x[0].sin()),
            velocity: VectorField::zeros(g),
            electric: VectorField::zeros(g),
            magnetic: VectorField::zeros(g),
            time: 0.0,
        };
        assert!(matches!(
            to_perturbation(&phys, &PhysicalConstants::default()),
            Err(Error::NonpositiveDensity { .. })
        ));
    }

    #[test]
    fn zero_amplitude_gives_zero_state() {
        let spec = InitialData { amplitude: 0.0, ..Default::default() };
        let s = make_initial_data(&spec, 1, grid(), &PhysicalConstants::default()).unwrap();
        assert!(s.is_zero());
        let r = verify_compatibility(&s, &PhysicalConstants::default());
        assert_eq!(r.gauss_residual, 0.0);
        assert_eq!(r.div_b_residual, 0.0);
        assert_eq!(r.positivity_margin, 1.0);
    }

    #[test]
    fn single_mode_is_compatible() {
        let delta = 1e-2;
        let spec = InitialData {
            kind: InitialKind::SingleMode { mode: [1, 2, 0] },
            amplitude: delta,
            transverse_e: 0.5,
        };
        let c = PhysicalConstants::default();
        let s = make_initial_data(&spec, 3, grid(), &c).unwrap();
        let r = verify_compatibility(&s, &c);
        assert!(r.gauss_residual <= 1e-10 * delta, "{r:?}");
        assert!(r.div_b_residual <= 1e-12, "{r:?}");
    }

    #[test]
    fn generated_data_are_compatible_and_transverse() {
        let c = PhysicalConstants::default();
        for kind in [
            InitialKind::LowFreq { s: 1.0, width: 1.5 },
            InitialKind::FlatLow { radius: 1.0, rolloff: 0.5 },
            InitialKind::Bump { radius: 2.0 },
        ] {
            let spec = InitialData { kind, amplitude: 1e-2, transverse_e: 0.3 };
            let s = make_initial_data(&spec, 7, grid(), &c).unwrap();
            let r = verify_compatibility(&s, &c);
            assert!(r.gauss_residual <= 1e-12, "{r:?}");
            assert!(r.div_b_relative <= 1e-13, "{r:?}");
            assert!(r.positivity_margin > 0.99);
            let peak = crate::spectral::lp_norm(&s.u, f64::INFINITY);
            assert!((peak - 1e-2).abs() < 1e-14);
            // exact transversality of every B coefficient
            let k = s.grid().derivative_wavenumbers();
            for idx in 0..s.grid().len() {
                let [i, j, l] = s.grid().split(idx);
                let dot = k[i] * s.b.parts()[0].coefficients()[idx]
                    + k[j] * s.b.parts()[1].coefficients()[idx]
                    + k[l] * s.b.parts()[2].coefficients()[idx];
                assert!(dot.norm() < 1e-17);
            }
        }
    }

    #[test]
    fn broken_gauss_law_is_measured() {
        let c = PhysicalConstants::default();
        let g = grid();
        let spec = InitialData { kind: InitialKind::Bump { radius: 2.0 }, ..Default::default() };
        let mut s = make_initial_data(&spec, 2, g, &c).unwrap();
        let phi = ScalarField::from_fn(g, |x| 1e-3 * (x[0] + x[1]).sin());
        let defect = gradient(&phi);
        s.e = &s.e + &defect;
        let r = verify_compatibility(&s, &c);
        let injected = l2_norm(&divergence(&defect));
        assert!((r.gauss_residual - injected).abs() <= 1e-10 * injected);
    }

    #[test]
    fn amplitude_too_large() {
        let spec = InitialData { kind: InitialKind::SingleMode { mode: [1, 0, 0] }, amplitude: 4.0, transverse_e: 0.0 };
        assert!(matches!(
            make_initial_data(&spec, 1, grid(), &PhysicalConstants::default()),
            Err(Error::AmplitudeTooLarge { .. })
        ));
    }

    #[test]
    fn flat_low_besov_norm_is_box_stable() {
        let c = PhysicalConstants::default();
        let spec = InitialData {
            kind: InitialKind::FlatLow { radius: 1.0, rolloff: 0.5 },
            amplitude: 1e-2,
            transverse_e: 0.0,
        };
        let small = make_initial_data(&spec, 5, GridSpec::new(32, 8.0 * PI).unwrap(), &c).unwrap();
        let large = make_initial_data(&spec, 5, GridSpec::new(64, 16.0 * PI).unwrap(), &c).unwrap();
        let a = besov_norm(&small.u, 1.5).value;
        let b = besov_norm(&large.u, 1.5).value;
        assert!(a.is_finite() && a > 0.0);
        assert!((a / b - 1.0).abs() < 0.2, "{a} vs {b}");
    }
}
