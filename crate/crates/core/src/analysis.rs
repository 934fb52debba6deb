//! Decay-rate regression and the theoretical exponent tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default tolerance for slopes from the linear analyzer.
pub const LINEAR_TOLERANCE: f64 = 0.08;
/// Default tolerance for slopes from nonlinear box runs.
pub const NONLINEAR_TOLERANCE: f64 = 0.25;
/// Values below `FLOOR_FACTOR × floor` are treated as noise-contaminated.
pub const FLOOR_FACTOR: f64 = 100.0;

/// A monitored quantity sampled in time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub quantity: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl NormSeries {
    pub fn new(quantity: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("times must be strictly increasing".into()));
        }
        if let Some((t, v)) = times.iter().zip(&values).find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative or NaN value {v} at t = {t}")));
        }
        Ok(Self {
            quantity: quantity.into(),
            times,
            values,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No target to compare against.
    Unchecked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub quantity: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub target: Option<f64>,
    pub tolerance: f64,
    /// Some sample in the window sits within `FLOOR_FACTOR` of the noise floor.
    pub floor_contaminated: bool,
    pub verdict: Verdict,
}

/// What to compare a fit against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitTarget {
    pub exponent: f64,
    pub tolerance: f64,
}

/// Least squares of `log value` against `log(1 + t)` over samples with
/// `t ∈ [window.0, window.1]`.
pub fn fit_decay(
    series: &NormSeries,
    window: (f64, f64),
    target: Option<FitTarget>,
    noise_floor: Option<f64>,
) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 8 {
        return Err(Error::InsufficientSamples {
            needed: 8,
            found: pts.len(),
        });
    }
    if let Some(&(time, value)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonpositiveValue { time, value });
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let floor_contaminated = noise_floor.is_some_and(|f| pts.iter().any(|(_, v)| *v < FLOOR_FACTOR * f));
    let verdict = match target {
        None => Verdict::Unchecked,
        Some(t) if !floor_contaminated && (slope - t.exponent).abs() <= t.tolerance => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };
    Ok(DecayFit {
        quantity: series.quantity.clone(),
        slope,
        intercept,
        r_squared,
        window,
        samples: pts.len(),
        target: target.map(|t| t.exponent),
        tolerance: target.map_or(0.0, |t| t.tolerance),
        floor_contaminated,
        verdict,
    })
}

/// Quantities with a decay rate in the main theorem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayQuantity {
    /// `‖∇^k(n, u, E, B)‖`
    FullState,
    /// `‖∇^k(n, u, E)‖`
    NuE,
    /// `‖∇^k n‖`
    NOnly,
    /// `‖∇^k(n, div u)‖`, only for `B_∞ = 0`
    NDivu,
}

impl DecayQuantity {
    pub const ALL: [DecayQuantity; 4] = [Self::FullState, Self::NuE, Self::NOnly, Self::NDivu];

    pub fn label(&self) -> &'static str {
        match self {
            Self::FullState => "full_state",
            Self::NuE => "nuE",
            Self::NOnly => "n_only",
            Self::NDivu => "n_divu",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoreticalRate {
    pub exponent: f64,
    /// Smallest integer regularity `N` for which the rate is claimed.
    pub required_n: u32,
}

/// Target exponent of `quantity` at derivative order `k` for data in `Ḣ^{-s}`.
pub fn theoretical_exponent(quantity: DecayQuantity, k: u32, s: f64, b_infty_zero: bool) -> Result<TheoreticalRate> {
    if !(0.0..=1.5).contains(&s) {
        return Err(Error::SOutOfRange { s, range: "[0, 3/2]" });
    }
    let k = k as f64;
    let (exponent, n) = match quantity {
        DecayQuantity::FullState => (-(k + s) / 2.0, 2.0 * k + 2.0 + s),
        DecayQuantity::NuE => (-(k + 1.0 + s) / 2.0, 2.0 * k + 4.0 + s),
        DecayQuantity::NOnly => (-(k + 2.0 + s) / 2.0, 2.0 * k + 6.0 + s),
        DecayQuantity::NDivu => {
            if !b_infty_zero {
                return Err(Error::RequiresBInftyZero);
            }
            (-(k / 2.0 + 1.75 + s), 2.0 * k + 10.0 + s)
        }
    };
    Ok(TheoreticalRate {
        exponent,
        required_n: n.ceil() as u32,
    })
}

/// `s_p = 3(1/p − 1/2)`.
pub fn s_of_p(p: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::POutOfRange { p });
    }
    Ok(3.0 * (1.0 / p - 0.5))
}

/// Earlier rates for `L¹`-type data, alongside the sharper density rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PriorRates {
    pub n: f64,
    pub u_e: f64,
    pub b: f64,
    pub this_paper_n: f64,
}

pub fn duan_comparison() -> PriorRates {
    PriorRates {
        n: -11.0 / 4.0,
        u_e: -5.0 / 4.0,
        b: -3.0 / 4.0,
        this_paper_n: -13.0 / 4.0,
    }
}
