//! Energy, dissipation and cross functionals of a perturbation state.
//!
//! Every functional is a Parseval sum. The state is first reduced to tables
//! indexed by the integer `|m|²` of each mode, after which any derivative
//! order costs one pass over those tables.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Monitor;
use crate::model::{PerturbationState, PhysicalConstants};
use crate::spectral::{GridSpec, ScalarField, VectorField};
use crate::{Error, Result};

/// Highest derivative order any functional will weigh with `|k|^{2l}`.
pub const MAX_ORDER: usize = 12;

/// Default weight of the cross terms in the combined energy and in `F_k`, `G_k`.
pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_EPS: f64 = 0.1;

/// Per-shell sums of the state's Fourier data.
struct Shells {
    k0sq: f64,
    volume: f64,
    n: Vec<f64>,
    u: Vec<f64>,
    e: Vec<f64>,
    b: Vec<f64>,
    /// `Re Σ conj(û)·(i k n̂)`
    un: Vec<f64>,
    /// `Re Σ conj(û)·Ê`
    ue: Vec<f64>,
    /// `Re Σ conj(Ê)·(i k × B̂)`
    eb: Vec<f64>,
    /// `Σ |ψ̂|²`, `ψ = div u`
    psi: Vec<f64>,
    /// `Re Σ conj(ψ̂) n̂`
    psin: Vec<f64>,
}

impl Shells {
    fn new(state: &PerturbationState) -> Self {
        let grid = *state.grid();
        let len = grid.max_mode_norm2() as usize + 1;
        let kd = grid.derivative_wavenumbers();
        let mut s = Shells {
            k0sq: grid.fundamental().powi(2),
            volume: grid.volume(),
            n: vec![0.0; len],
            u: vec![0.0; len],
            e: vec![0.0; len],
            b: vec![0.0; len],
            un: vec![0.0; len],
            ue: vec![0.0; len],
            eb: vec![0.0; len],
            psi: vec![0.0; len],
            psin: vec![0.0; len],
        };
        fn coeffs(v: &VectorField) -> [&[Complex64]; 3] {
            v.parts().each_ref().map(|c| c.coefficients())
        }
        let (u, e, b) = (coeffs(&state.u), coeffs(&state.e), coeffs(&state.b));
        let n = state.n.coefficients();
        let i = Complex64::i();
        for idx in 0..grid.len() {
            let m2 = grid.mode_norm2(idx) as usize;
            let [a0, a1, a2] = grid.split(idx);
            let k = [kd[a0], kd[a1], kd[a2]];
            let nn = n[idx];
            let uu = [u[0][idx], u[1][idx], u[2][idx]];
            let ee = [e[0][idx], e[1][idx], e[2][idx]];
            let bb = [b[0][idx], b[1][idx], b[2][idx]];
            let curl_b = [
                i * (k[1] * bb[2] - k[2] * bb[1]),
                i * (k[2] * bb[0] - k[0] * bb[2]),
                i * (k[0] * bb[1] - k[1] * bb[0]),
            ];
            let psi = i * (k[0] * uu[0] + k[1] * uu[1] + k[2] * uu[2]);
            s.n[m2] += nn.norm_sqr();
            s.psi[m2] += psi.norm_sqr();
            s.psin[m2] += (psi.conj() * nn).re;
            for a in 0..3 {
                s.u[m2] += uu[a].norm_sqr();
                s.e[m2] += ee[a].norm_sqr();
                s.b[m2] += bb[a].norm_sqr();
                s.un[m2] += (uu[a].conj() * i * k[a] * nn).re;
                s.ue[m2] += (uu[a].conj() * ee[a]).re;
                s.eb[m2] += (ee[a].conj() * curl_b[a]).re;
            }
        }
        s
    }

    /// `L³ Σ |k|^{2l} table`.
    fn moment(&self, table: &[f64], l: usize) -> f64 {
        let sum: f64 = table
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(m2, v)| (self.k0sq * m2 as f64).powi(l as i32) * v)
            .sum();
        self.volume * sum
    }

    fn range(&self, table: &[f64], lo: usize, hi: usize) -> f64 {
        (lo..=hi).map(|l| self.moment(table, l)).sum()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::DerivativeOrderExceedsResolution { order });
    }
    Ok(())
}

/// `E_N = Σ_{l≤N} ‖∇^l(n,u,E,B)‖²`.
pub fn energy(state: &PerturbationState, order: usize) -> Result<f64> {
    check_order(order)?;
    let s = Shells::new(state);
    Ok(energy_from(&s, 0, order))
}

fn energy_from(s: &Shells, lo: usize, hi: usize) -> f64 {
    [&s.n, &s.u, &s.e, &s.b].iter().map(|t| s.range(t, lo, hi)).sum()
}

/// `D_N = Σ_{l≤N} ‖∇^l(n,u)‖² + Σ_{l≤N−1} ‖∇^l E‖² + Σ_{1≤l≤N−1} ‖∇^l B‖²`.
pub fn dissipation(state: &PerturbationState, order: usize) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidParameter("dissipation needs N >= 1".into()));
    }
    check_order(order)?;
    let s = Shells::new(state);
    Ok(dissipation_from(&s, order))
}

fn dissipation_from(s: &Shells, order: usize) -> f64 {
    let mut d = s.range(&s.n, 0, order) + s.range(&s.u, 0, order) + s.range(&s.e, 0, order - 1);
    if order >= 2 {
        d += s.range(&s.b, 1, order - 1);
    }
    d
}

/// `(E_k^{k+2}, D_k^{k+2})`.
pub fn window_energy(state: &PerturbationState, k: usize) -> Result<(f64, f64)> {
    check_order(k + 2)?;
    Ok(window_from(&Shells::new(state), k))
}

fn window_from(s: &Shells, k: usize) -> (f64, f64) {
    let e = energy_from(s, k, k + 2);
    let d = s.range(&s.n, k, k + 2) + s.range(&s.u, k, k + 2) + s.range(&s.e, k, k + 1) + s.moment(&s.b, k + 1);
    (e, d)
}

/// Signed cross terms at level `k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Interactive {
    /// `Σ_{l=k}^{k+1} ∫ ∇^l u · ∇∇^l n`
    pub i_n: f64,
    /// `Σ_{l=k}^{k+1} ∫ ∇^l u · ∇^l E`
    pub i_e: f64,
    /// `−∫ ∇^k E · ∇×∇^k B`
    pub i_b: f64,
}

pub fn interactive(state: &PerturbationState, k: usize) -> Result<Interactive> {
    check_order(k + 1)?;
    Ok(interactive_from(&Shells::new(state), k))
}

fn interactive_from(s: &Shells, k: usize) -> Interactive {
    Interactive {
        i_n: s.range(&s.un, k, k + 1),
        i_e: s.range(&s.ue, k, k + 1),
        i_b: -s.moment(&s.eb, k),
    }
}

/// `Ẽ_k = E_k^{k+2} + η (I_n + I_E + η I_B)`: the window energy with the
/// cross terms that make the window dissipation appear.
pub fn combined_energy(state: &PerturbationState, k: usize, eta: f64) -> Result<f64> {
    check_order(k + 2)?;
    let s = Shells::new(state);
    Ok(combined_from(&s, k, eta))
}

fn combined_from(s: &Shells, k: usize, eta: f64) -> f64 {
    let w = window_from(s, k).0;
    let i = interactive_from(s, k);
    w + eta * (i.i_n + i.i_e + eta * i.i_b)
}

fn certify(functional: &'static str, value: f64, lower: f64, upper: f64) -> Result<f64> {
    let slack = 1e-12 * upper.abs().max(1e-300);
    if value < lower - slack || value > upper + slack {
        return Err(Error::EquivalenceViolated {
            functional,
            value,
            lower,
            upper,
        });
    }
    Ok(value)
}

/// `F_k = ‖∇^k(u,E)‖² + eps ∫ ∇^k u · ∇^k E`, certified against
/// `(1 ∓ eps)‖∇^k(u,E)‖²`.
pub fn f_functional(state: &PerturbationState, k: usize, eps: f64) -> Result<f64> {
    check_order(k)?;
    f_from(&Shells::new(state), k, eps)
}

fn f_from(s: &Shells, k: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let base = s.moment(&s.u, k) + s.moment(&s.e, k);
    let value = base + eps * s.moment(&s.ue, k);
    certify("F_k", value, (1.0 - eps) * base, (1.0 + eps) * base)
}

/// `G_k = ν²‖∇^k n‖² + ‖∇^k ψ‖² − eps ∫ ∇^k ψ · ∇^k n` with `ψ = div u`,
/// certified against multiples of `‖∇^k(n,ψ)‖²`.
pub fn g_functional(state: &PerturbationState, k: usize, eps: f64, constants: &PhysicalConstants) -> Result<f64> {
    check_order(k + 1)?;
    g_from(&Shells::new(state), k, eps, constants.nu())
}

fn g_from(s: &Shells, k: usize, eps: f64, nu: f64) -> Result<f64> {
    let limit = 2.0 * nu * nu.min(1.0);
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, {limit}), got {eps}")));
    }
    let n2 = s.moment(&s.n, k);
    let p2 = s.moment(&s.psi, k);
    let value = nu * nu * n2 + p2 - eps * s.moment(&s.psin, k);
    // |eps ∫ψn| ≤ eps/(2ν) (ν²‖n‖² + ‖ψ‖²)
    let r = eps / (2.0 * nu);
    let base = n2 + p2;
    certify(
        "G_k",
        value,
        (1.0 - r) * (nu * nu).min(1.0) * base,
        (1.0 + r) * (nu * nu).max(1.0) * base,
    )
}

/// Which functionals a [`FunctionalMonitor`] logs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSpec {
    /// `N` values for `E_N`, `D_N`.
    pub energy_orders: Vec<usize>,
    /// `k` values for the windows, cross terms, `F_k`, `G_k`.
    pub windows: Vec<usize>,
    pub eta: f64,
    pub eps: f64,
    /// `‖∇^k X‖` for each listed `(k, X)`.
    pub norms: Vec<NormSpec>,
}

impl Default for MonitorSpec {
    fn default() -> Self {
        Self {
            energy_orders: vec![3],
            windows: vec![0],
            eta: DEFAULT_ETA,
            eps: DEFAULT_EPS,
            norms: vec![
                NormSpec { k: 0, field: FieldSel::State },
                NormSpec { k: 0, field: FieldSel::B },
                NormSpec { k: 0, field: FieldSel::N },
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSel {
    N,
    U,
    E,
    B,
    #[serde(rename = "nuE")]
    NuE,
    State,
}

impl FieldSel {
    pub fn label(&self) -> &'static str {
        match self {
            Self::N => "n",
            Self::U => "u",
            Self::E => "E",
            Self::B => "B",
            Self::NuE => "nuE",
            Self::State => "state",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub k: usize,
    pub field: FieldSel,
}

/// Every functional at one instant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub time: f64,
    pub energy: BTreeMap<usize, f64>,
    pub dissipation: BTreeMap<usize, f64>,
    pub window: BTreeMap<usize, (f64, f64)>,
    pub interactive: BTreeMap<usize, Interactive>,
    pub combined: BTreeMap<usize, f64>,
    pub f: BTreeMap<usize, f64>,
    pub g: BTreeMap<usize, f64>,
    pub gauss_residual: f64,
    pub div_b_residual: f64,
}

impl MonitorSpec {
    pub fn validate(&self) -> Result<()> {
        for &n in &self.energy_orders {
            if n == 0 {
                return Err(Error::InvalidParameter("energy orders must be >= 1".into()));
            }
            check_order(n)?;
        }
        for &k in &self.windows {
            check_order(k + 2)?;
        }
        for spec in &self.norms {
            check_order(spec.k)?;
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        Ok(())
    }

    pub fn report(&self, state: &PerturbationState, constants: &PhysicalConstants) -> Result<FunctionalReport> {
        let s = Shells::new(state);
        let compat = crate::model::verify_compatibility(state, constants);
        let mut r = FunctionalReport {
            time: state.time,
            energy: BTreeMap::new(),
            dissipation: BTreeMap::new(),
            window: BTreeMap::new(),
            interactive: BTreeMap::new(),
            combined: BTreeMap::new(),
            f: BTreeMap::new(),
            g: BTreeMap::new(),
            gauss_residual: compat.gauss_residual,
            div_b_residual: compat.div_b_residual,
        };
        for &n in &self.energy_orders {
            check_order(n)?;
            r.energy.insert(n, energy_from(&s, 0, n));
            r.dissipation.insert(n, dissipation_from(&s, n));
        }
        for &k in &self.windows {
            check_order(k + 2)?;
            r.window.insert(k, window_from(&s, k));
            r.interactive.insert(k, interactive_from(&s, k));
            r.combined.insert(k, combined_from(&s, k, self.eta));
            r.f.insert(k, f_from(&s, k, self.eps)?);
            r.g.insert(k, g_from(&s, k, self.eps, constants.nu())?);
        }
        Ok(r)
    }
}

fn field_norm(s: &Shells, sel: FieldSel, k: usize) -> f64 {
    let sq = match sel {
        FieldSel::N => s.moment(&s.n, k),
        FieldSel::U => s.moment(&s.u, k),
        FieldSel::E => s.moment(&s.e, k),
        FieldSel::B => s.moment(&s.b, k),
        FieldSel::NuE => s.moment(&s.n, k) + s.moment(&s.u, k) + s.moment(&s.e, k),
        FieldSel::State => s.moment(&s.n, k) + s.moment(&s.u, k) + s.moment(&s.e, k) + s.moment(&s.b, k),
    };
    sq.max(0.0).sqrt()
}

/// Logs the functionals of a [`MonitorSpec`] as run columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FunctionalMonitor {
    pub spec: MonitorSpec,
}

impl FunctionalMonitor {
    pub fn new(spec: MonitorSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }
}

impl Monitor for FunctionalMonitor {
    fn columns(&self) -> Vec<String> {
        let mut c = Vec::new();
        for n in &self.spec.energy_orders {
            c.push(format!("E_{n}"));
            c.push(format!("D_{n}"));
        }
        for k in &self.spec.windows {
            let top = k + 2;
            c.extend([
                format!("Ewin_{k}_{top}"),
                format!("Dwin_{k}_{top}"),
                format!("Etilde_{k}"),
                format!("In_{k}"),
                format!("IE_{k}"),
                format!("IB_{k}"),
                format!("F_{k}"),
                format!("G_{k}"),
            ]);
        }
        for spec in &self.spec.norms {
            c.push(format!("norm_{}_k{}", spec.field.label(), spec.k));
        }
        c
    }

    fn evaluate(&self, state: &PerturbationState, constants: &PhysicalConstants) -> Result<Vec<f64>> {
        let s = Shells::new(state);
        let mut row = Vec::new();
        for &n in &self.spec.energy_orders {
            row.push(energy_from(&s, 0, n));
            row.push(dissipation_from(&s, n));
        }
        for &k in &self.spec.windows {
            let (e, d) = window_from(&s, k);
            let i = interactive_from(&s, k);
            row.extend([
                e,
                d,
                combined_from(&s, k, self.spec.eta),
                i.i_n,
                i.i_e,
                i.i_b,
                f_from(&s, k, self.spec.eps)?,
                g_from(&s, k, self.spec.eps, constants.nu())?,
            ]);
        }
        for spec in &self.spec.norms {
            row.push(field_norm(&s, spec.field, spec.k));
        }
        Ok(row)
    }
}

/// Largest `λ` with `dE/dt + λ D ≤ 0` at every interior sample, the
/// derivative taken by centered differences.
pub fn dissipation_rate(times: &[f64], energy: &[f64], dissipation: &[f64]) -> Result<f64> {
    if times.len() != energy.len() || times.len() != dissipation.len() || times.len() < 3 {
        return Err(Error::InvalidParameter("need >= 3 aligned samples".into()));
    }
    let mut lambda = f64::INFINITY;
    for i in 1..times.len() - 1 {
        let de = (energy[i + 1] - energy[i - 1]) / (times[i + 1] - times[i - 1]);
        if dissipation[i] > 0.0 {
            lambda = lambda.min(-de / dissipation[i]);
        }
    }
    Ok(lambda)
}

/// `‖∇^k X‖` of the selected fields.
pub fn field_derivative_norm(state: &PerturbationState, sel: FieldSel, k: usize) -> Result<f64> {
    check_order(k)?;
    Ok(field_norm(&Shells::new(state), sel, k))
}

#[doc(hidden)]
pub fn single_mode_state(grid: GridSpec, m: [i64; 3], parts: [(usize, f64); 2]) -> PerturbationState {
    let mut st = PerturbationState::zeros(grid);
    for (slot, amp) in parts {
        let f = crate::spectral::cosine_mode(grid, m, amp, 0.0);
        match slot {
            0 => st.n = f,
            1..=3 => st.u = replace(&st.u, slot - 1, f),
            4..=6 => st.e = replace(&st.e, slot - 4, f),
            _ => st.b = replace(&st.b, slot - 7, f),
        }
    }
    st
}

fn replace(v: &VectorField, axis: usize, f: ScalarField) -> VectorField {
    let mut parts = v.clone().into_parts();
    parts[axis] = f;
    VectorField::new(parts).expect("same grid")
}
