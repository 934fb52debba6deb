//! wasm-bindgen entry points for `www/index.html`. Every export takes plain
//! numbers and returns a JSON string; errors come back as JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use emlab::analysis::{fit_decay, theoretical_exponent, DecayQuantity, FitTarget, LINEAR_TOLERANCE};
use emlab::linear::{mode_matrix, uniform_times, weighted_norm_series, Component, QuadratureSpec, SpectralProfile};
use emlab::model::{f_of_n, PhysicalConstants};

fn js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js)
}

fn constants(gamma: f64, b: [f64; 3]) -> Result<PhysicalConstants, JsValue> {
    let c = PhysicalConstants::default().with_gamma(gamma).with_b_infty(b);
    c.validate().map_err(js)?;
    Ok(c)
}

#[derive(Serialize)]
struct Dispersion {
    xi: Vec<f64>,
    /// Ten eigenvalues per wavenumber, sorted by real part.
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Eigenvalues of the per-mode matrix along a ray at `angle_deg` from
/// `B_∞ = (0, 0, b)`.
pub fn dispersion_data(gamma: f64, b: f64, angle_deg: f64, xi_max: f64, samples: usize) -> emlab::Result<String> {
    let c = PhysicalConstants::default().with_gamma(gamma).with_b_infty([0.0, 0.0, b]);
    c.validate()?;
    let (sn, cs) = angle_deg.to_radians().sin_cos();
    let samples = samples.clamp(2, 2000);
    let mut out = Dispersion {
        xi: Vec::new(),
        re: Vec::new(),
        im: Vec::new(),
    };
    for i in 0..samples {
        let r = xi_max * i as f64 / (samples - 1) as f64;
        let mut ev = mode_matrix([r * sn, 0.0, r * cs], &c).eigenvalues()?;
        ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        out.xi.push(r);
        out.re.push(ev.iter().map(|z| z.re).collect());
        out.im.push(ev.iter().map(|z| z.im).collect());
    }
    Ok(serde_json::to_string(&out)?)
}

#[wasm_bindgen]
pub fn dispersion(gamma: f64, b: f64, angle_deg: f64, xi_max: f64, samples: usize) -> Result<String, JsValue> {
    dispersion_data(gamma, b, angle_deg, xi_max, samples).map_err(js)
}

#[derive(Serialize)]
struct Decay {
    times: Vec<f64>,
    values: Vec<f64>,
    slope: f64,
    target: f64,
    pass: bool,
}

/// `‖∇^k X(t)‖` for the linearized whole-space problem with `B_∞ = 0` and
/// data of class `s`; `quantity` is one of `full_state`, `nuE`, `B`.
#[wasm_bindgen]
pub fn linear_decay(s: f64, k: u32, quantity: &str, t_max: f64) -> Result<String, JsValue> {
    let (component, q) = match quantity {
        "full_state" => (Component::FullState, DecayQuantity::FullState),
        "nuE" => (Component::NuE, DecayQuantity::NuE),
        "B" => (Component::B, DecayQuantity::FullState),
        other => return Err(js(format!("unknown quantity `{other}`"))),
    };
    if !(t_max >= 50.0 && t_max <= 2000.0) {
        return Err(js("t_max must lie in [50, 2000]"));
    }
    let c = constants(5.0 / 3.0, [0.0; 3])?;
    let profile = SpectralProfile::besov(s);
    profile.validate().map_err(js)?;
    let times = uniform_times(t_max, t_max / 100.0);
    let quad = QuadratureSpec {
        check_convergence: false,
        ..Default::default()
    };
    let series = weighted_norm_series(&profile, k, component, &times, &c, &quad).map_err(js)?;
    let rate = theoretical_exponent(q, k, s, true).map_err(js)?;
    let fit = fit_decay(
        &series,
        (0.04 * t_max, t_max),
        Some(FitTarget {
            exponent: rate.exponent,
            tolerance: LINEAR_TOLERANCE,
        }),
        None,
    )
    .map_err(js)?;
    to_json(&Decay {
        times: series.times,
        values: series.values,
        slope: fit.slope,
        target: rate.exponent,
        pass: fit.verdict == emlab::analysis::Verdict::Pass,
    })
}

#[derive(Serialize)]
struct Closure {
    n: Vec<f64>,
    f: Vec<f64>,
}

/// `f(n)` on `(−1/μ, n_max]`, the Gauss-law closure.
#[wasm_bindgen]
pub fn closure(gamma: f64, n_max: f64, samples: usize) -> Result<String, JsValue> {
    let c = constants(gamma, [0.0; 3])?;
    let lo = -0.98 / c.mu();
    let samples = samples.clamp(2, 5000);
    let mut out = Closure { n: Vec::new(), f: Vec::new() };
    for i in 0..samples {
        let n = lo + (n_max - lo) * i as f64 / (samples - 1) as f64;
        out.n.push(n);
        out.f.push(f_of_n(n, gamma).map_err(js)?);
    }
    to_json(&out)
}
