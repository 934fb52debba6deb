//! Run configuration: one TOML file per experiment, every key optional,
//! unknown keys rejected.
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! points = 32
//! box_length = 50.265
//!
//! [constants]
//! gamma = 1.6667
//! b_infty = [0.0, 0.0, 1.0]
//!
//! [initial]
//! kind = "flat_low"
//! radius = 0.5
//! rolloff = 0.25
//! amplitude = 0.01
//!
//! [data_class]
//! p = 1.0
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{s_of_p, DecayQuantity, LINEAR_TOLERANCE, NONLINEAR_TOLERANCE};
use crate::dynamics::SolverConfig;
use crate::energetics::MonitorSpec;
use crate::linear::{LinearReportConfig, QuadratureSpec, DEFAULT_PROFILE_WIDTH};
use crate::model::{InitialData, PhysicalConstants};
use crate::spectral::GridSpec;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Linear,
    Inequalities,
    Fit,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Linear => "linear",
            Self::Inequalities => "inequalities",
            Self::Fit => "fit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub points: usize,
    pub box_length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: 32,
            box_length: 16.0 * PI,
        }
    }
}

/// Data class of the initial perturbation, by `s` or by `p` with
/// `s = 3(1/p − 1/2)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataClass {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl DataClass {
    /// Resolved `s`; `3/2` when neither is given.
    pub fn s(&self) -> Result<f64> {
        match (self.s, self.p) {
            (None, None) => Ok(1.5),
            (Some(s), None) => Ok(s),
            (None, Some(p)) => s_of_p(p),
            (Some(s), Some(p)) => {
                let sp = s_of_p(p)?;
                if (sp - s).abs() > 1e-12 {
                    return Err(Error::Config(format!("data_class: s = {s} disagrees with p = {p} (s_p = {sp})")));
                }
                Ok(s)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearOptions {
    pub k_list: Vec<u32>,
    pub quantities: Vec<DecayQuantity>,
    pub include_b: bool,
    pub profile_width: f64,
    pub t_max: f64,
    pub sample_dt: f64,
    pub window: (f64, f64),
    pub tolerance: f64,
    pub quadrature: QuadratureSpec,
}

impl Default for LinearOptions {
    fn default() -> Self {
        let d = LinearReportConfig::default();
        Self {
            k_list: d.k_list,
            quantities: d.quantities,
            include_b: d.include_b,
            profile_width: DEFAULT_PROFILE_WIDTH,
            t_max: d.t_max,
            sample_dt: d.sample_dt,
            window: d.window,
            tolerance: LINEAR_TOLERANCE,
            quadrature: d.quadrature,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalityOptions {
    pub trials: usize,
}

impl Default for InequalityOptions {
    fn default() -> Self {
        Self { trials: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Input CSV (overridden by the command line).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Columns to fit; empty means every column except `time`.
    pub columns: Vec<String>,
    pub window: (f64, f64),
    /// Target exponent per column.
    pub targets: std::collections::BTreeMap<String, f64>,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            csv: None,
            columns: Vec::new(),
            window: (1.0, f64::INFINITY),
            targets: Default::default(),
            tolerance: NONLINEAR_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    pub output_dir: String,
    /// Also write a matplotlib script next to the data.
    pub plot_script: bool,
    pub grid: GridConfig,
    pub constants: PhysicalConstants,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub monitors: MonitorSpec,
    pub data_class: DataClass,
    pub linear: LinearOptions,
    pub inequalities: InequalityOptions,
    pub fit: FitOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            output_dir: "out".into(),
            plot_script: true,
            grid: GridConfig::default(),
            constants: PhysicalConstants::default(),
            initial: InitialData::default(),
            solver: SolverConfig::default(),
            monitors: MonitorSpec::default(),
            data_class: DataClass::default(),
            linear: LinearOptions::default(),
            inequalities: InequalityOptions::default(),
            fit: FitOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.points, self.grid.box_length)
    }

    /// Checks every section that the given experiment reads.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(Error::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    k.name(),
                    kind.name()
                )));
            }
        }
        self.data_class.s()?;
        self.constants.validate()?;
        match kind {
            ExperimentKind::Simulate => {
                self.grid_spec()?;
                self.constants.require_normalized()?;
                self.solver.validate()?;
                self.monitors.validate()?;
            }
            ExperimentKind::Linear => {
                self.linear_config()?;
            }
            ExperimentKind::Inequalities => {
                if self.inequalities.trials < 2 {
                    return Err(Error::Config("inequalities.trials must be >= 2".into()));
                }
            }
            ExperimentKind::Fit => {
                if !(self.fit.window.1 > self.fit.window.0) {
                    return Err(Error::Config("fit.window must be increasing".into()));
                }
            }
        }
        Ok(())
    }

    pub fn linear_config(&self) -> Result<LinearReportConfig> {
        let l = &self.linear;
        if !(l.sample_dt > 0.0 && l.t_max > l.sample_dt) {
            return Err(Error::Config("linear: need 0 < sample_dt < t_max".into()));
        }
        Ok(LinearReportConfig {
            s: self.data_class.s()?,
            k_list: l.k_list.clone(),
            quantities: l.quantities.clone(),
            include_b: l.include_b,
            profile_width: l.profile_width,
            t_max: l.t_max,
            sample_dt: l.sample_dt,
            window: l.window,
            tolerance: l.tolerance,
            quadrature: l.quadrature.clone(),
        })
    }

    /// The configuration as actually run: experiment set, overrides applied.
    pub fn resolved(&self, kind: ExperimentKind) -> Self {
        let mut r = self.clone();
        r.experiment = Some(kind);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Projection, StepSize};
    use crate::model::InitialKind;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line_number() {
        let err = RunConfig::from_toml("seed = 1\n[grid]\npoints = 16\nbogus = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn initial_table_is_strict() {
        let ok = RunConfig::from_toml("[initial]\nkind = \"bump\"\nradius = 2.0\n").unwrap();
        assert_eq!(ok.initial.kind, InitialKind::Bump { radius: 2.0 });
        assert_eq!(ok.initial.amplitude, 1e-2);
        for bad in [
            "[initial]\nkind = \"bump\"\nradius = 2.0\nwidth = 1.0\n",
            "[initial]\nkind = \"bump\"\n",
            "[initial]\nkind = \"blob\"\n",
            "[initial]\nradius = 2.0\n",
            "[initial]\namplitude = 0.1\ncolour = 1\n",
        ] {
            assert!(matches!(RunConfig::from_toml(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = RunConfig::default();
        c.seed = 99;
        c.solver.dt = StepSize::Fixed(0.01);
        c.solver.gauss_projection = Projection::Off;
        c.initial.kind = InitialKind::LowFreq { s: 1.0, width: 2.0 };
        c.data_class.p = Some(1.2);
        let r = c.resolved(ExperimentKind::Simulate);
        let text = r.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), r);
    }

    #[test]
    fn p_and_s_give_the_same_linear_targets() {
        let by_p = RunConfig::from_toml("[data_class]\np = 1.0\n").unwrap();
        let by_s = RunConfig::from_toml("[data_class]\ns = 1.5\n").unwrap();
        assert_eq!(by_p.linear_config().unwrap(), by_s.linear_config().unwrap());
        let bad = RunConfig::from_toml("[data_class]\ns = 1.0\np = 1.0\n").unwrap();
        assert!(bad.data_class.s().is_err());
    }

    #[test]
    fn experiment_mismatch_is_an_error() {
        let c = RunConfig::from_toml("experiment = \"linear\"\n").unwrap();
        assert!(c.validate(ExperimentKind::Linear).is_ok());
        assert!(matches!(c.validate(ExperimentKind::Simulate), Err(Error::Config(_))));
    }
}
