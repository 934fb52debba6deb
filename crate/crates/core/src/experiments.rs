//! The four experiment drivers behind the `emlab` binary. Each takes a
//! validated [`RunConfig`] and an output directory and writes plain files:
//! CSV for time series, JSON for reports, TOML for the resolved config.
//! Nothing written depends on wall-clock time, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{fit_decay, theoretical_exponent, DecayFit, DecayQuantity, FitTarget, NormSeries, Verdict};
use crate::config::{ExperimentKind, RunConfig};
use crate::dynamics::{simulate_observed, Monitor, RunMetadata, Trajectory};
use crate::energetics::{FieldSel, FunctionalMonitor};
use crate::inequality_lab::{default_suite, InequalityReport};
use crate::linear::{linear_decay_report, LinearReport};
use crate::model::{make_initial_data, PerturbationState};
use crate::{Error, Result};

/// Relative growth over the running minimum allowed before `E_N` counts as
/// increasing.
pub const MONOTONE_SLACK: f64 = 0.01;
/// `∫ D_N dt` may not exceed this multiple of `E_N(0)`.
pub const DISSIPATION_BUDGET: f64 = 10.0;

/// What a driver produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Csv(e.to_string()))?;
        w.write_record(header).map_err(|e| Error::Csv(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| Error::Csv(e.to_string()))?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn config(&mut self, cfg: &RunConfig, kind: ExperimentKind) -> Result<()> {
        let mut resolved = cfg.resolved(kind);
        resolved.output_dir = self.dir.display().to_string();
        self.text("resolved_config.toml", &resolved.to_toml()?)
    }

    fn finish(self, passed: bool) -> Outcome {
        Outcome {
            passed,
            files: self.files,
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn ledger<T: Serialize>(kind: ExperimentKind, cfg: &RunConfig, passed: bool, body: T) -> serde_json::Value {
    let mut v = serde_json::json!({
        "experiment": kind.name(),
        "seed": cfg.seed,
        "passed": passed,
    });
    if let (Some(m), serde_json::Value::Object(b)) = (v.as_object_mut(), serde_json::to_value(body).unwrap_or_default()) {
        m.extend(b);
    }
    v
}

/// Every sample is at most `(1 + slack)` times the smallest earlier one.
pub fn is_monotone(values: &[f64], slack: f64) -> bool {
    let mut low = f64::INFINITY;
    values.iter().all(|&v| {
        let ok = v <= low * (1.0 + slack);
        low = low.min(v);
        ok
    })
}

/// Trapezoid rule on the samples.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

#[derive(Serialize)]
struct EnergyCheck {
    order: usize,
    initial: f64,
    last: f64,
    monotone: bool,
    dissipation_integral: f64,
    dissipation_bounded: bool,
}

#[derive(Serialize)]
struct FitEntry {
    column: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SimulateSummary {
    run: RunMetadata,
    s: f64,
    energy: Vec<EnergyCheck>,
    /// Slopes over the run, compared with the whole-space rates at the loose
    /// nonlinear tolerance. Informational only: a periodic box cannot show
    /// the asymptotic regime.
    decay_fits: Vec<FitEntry>,
}

fn norm_quantity(field: FieldSel) -> Option<DecayQuantity> {
    match field {
        FieldSel::State => Some(DecayQuantity::FullState),
        FieldSel::NuE => Some(DecayQuantity::NuE),
        FieldSel::N => Some(DecayQuantity::NOnly),
        _ => None,
    }
}

fn dump_state(w: &mut Writer, state: &PerturbationState) -> Result<()> {
    let header: Vec<String> = ["n", "u1", "u2", "u3", "E1", "E2", "E3", "B1", "B2", "B3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let cols: Vec<Vec<f64>> = state.scalars().iter().map(|f| f.physical()).collect();
    let rows: Vec<Vec<String>> = (0..cols[0].len())
        .map(|i| cols.iter().map(|c| fmt(c[i])).collect())
        .collect();
    w.csv("last_good_state.csv", &header, &rows)?;
    w.json(
        "last_good_state.json",
        &serde_json::json!({
            "time": state.time,
            "grid_points": state.grid().points(),
            "box_length": state.grid().box_length(),
            "layout": "row-major (x, y, z), physical space",
        }),
    )
}

fn trajectory_csv(w: &mut Writer, traj: &Trajectory) -> Result<()> {
    let rows: Vec<Vec<String>> = traj.rows.iter().map(|r| r.iter().map(|x| fmt(*x)).collect()).collect();
    w.csv("timeseries.csv", &traj.columns, &rows)
}

/// Nonlinear box run with the functional monitors.
pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.validate(ExperimentKind::Simulate)?;
    let mut w = Writer::new(out)?;
    w.config(cfg, ExperimentKind::Simulate)?;
    let grid = cfg.grid_spec()?;
    let initial = make_initial_data(&cfg.initial, cfg.seed, grid, &cfg.constants)?;
    let monitor = FunctionalMonitor::new(cfg.monitors.clone())?;
    let monitors: [&dyn Monitor; 1] = [&monitor];

    let mut last_good: Option<PerturbationState> = None;
    let run = simulate_observed(&initial, &cfg.solver, &cfg.constants, &monitors, &mut |s| {
        last_good = Some(s.clone())
    });
    let traj = match run {
        Ok(t) => t,
        Err(e) => {
            dump_state(&mut w, last_good.as_ref().unwrap_or(&initial))?;
            w.json("summary.json", &ledger(ExperimentKind::Simulate, cfg, false, serde_json::json!({ "error": e.to_string() })))?;
            return Err(e);
        }
    };
    trajectory_csv(&mut w, &traj)?;

    let times = traj.times();
    let mut energy = Vec::new();
    for &order in &cfg.monitors.energy_orders {
        let (Some(e), Some(d)) = (traj.column(&format!("E_{order}")), traj.column(&format!("D_{order}"))) else {
            continue;
        };
        let integral = trapezoid(&times, &d);
        energy.push(EnergyCheck {
            order,
            initial: e[0],
            last: *e.last().unwrap_or(&e[0]),
            monotone: is_monotone(&e, MONOTONE_SLACK),
            dissipation_integral: integral,
            dissipation_bounded: integral <= DISSIPATION_BUDGET * e[0],
        });
    }

    let s = cfg.data_class.s()?;
    let t_end = *times.last().unwrap_or(&0.0);
    let window = (1.0, t_end.min(traj.metadata.horizon).max(1.0));
    let mut decay_fits = Vec::new();
    for spec in &cfg.monitors.norms {
        let Some(q) = norm_quantity(spec.field) else { continue };
        let column = format!("norm_{}_k{}", spec.field.label(), spec.k);
        let Some(values) = traj.column(&column) else { continue };
        let entry = theoretical_exponent(q, spec.k as u32, s, cfg.constants.b_infty_is_zero())
            .and_then(|rate| {
                let series = NormSeries::new(column.clone(), times.clone(), values)?;
                let target = FitTarget {
                    exponent: rate.exponent,
                    tolerance: cfg.fit.tolerance,
                };
                fit_decay(&series, window, Some(target), None)
            });
        decay_fits.push(match entry {
            Ok(fit) => FitEntry { column, fit: Some(fit), error: None },
            Err(e) => FitEntry { column, fit: None, error: Some(e.to_string()) },
        });
    }

    let passed = energy.iter().all(|c| c.monotone && c.dissipation_bounded);
    let summary = SimulateSummary {
        run: traj.metadata.clone(),
        s,
        energy,
        decay_fits,
    };
    w.json("summary.json", &ledger(ExperimentKind::Simulate, cfg, passed, summary))?;
    if cfg.plot_script {
        w.text("plot.py", PLOT_SCRIPT)?;
    }
    Ok(w.finish(passed))
}

/// Whole-space linear analyzer: fitted slopes against the theoretical table.
pub fn run_linear(cfg: &RunConfig, out: &Path) -> Result<(Outcome, LinearReport)> {
    cfg.validate(ExperimentKind::Linear)?;
    let mut w = Writer::new(out)?;
    w.config(cfg, ExperimentKind::Linear)?;
    let report = linear_decay_report(&cfg.linear_config()?, &cfg.constants)?;
    w.json("decay_report.json", &report)?;

    let header: Vec<String> = ["quantity", "k", "time", "value"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for series in &report.series {
        let k = series.metadata.get("k").cloned().unwrap_or_default();
        for (t, v) in series.times.iter().zip(&series.values) {
            rows.push(vec![series.quantity.clone(), k.clone(), fmt(*t), fmt(*v)]);
        }
    }
    w.csv("linear_series.csv", &header, &rows)?;

    let passed = report.all_pass();
    let failed: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.verdict != Verdict::Pass)
        .map(|r| format!("{} k={}", r.quantity, r.k))
        .collect();
    w.json(
        "summary.json",
        &ledger(ExperimentKind::Linear, cfg, passed, serde_json::json!({ "rows": report.rows.len(), "failed": failed })),
    )?;
    if cfg.plot_script {
        w.text("plot.py", LINEAR_PLOT_SCRIPT)?;
    }
    Ok((w.finish(passed), report))
}

/// The randomized inequality suite.
pub fn run_inequalities(cfg: &RunConfig, out: &Path) -> Result<(Outcome, Vec<InequalityReport>)> {
    cfg.validate(ExperimentKind::Inequalities)?;
    let mut w = Writer::new(out)?;
    w.config(cfg, ExperimentKind::Inequalities)?;
    let reports = default_suite(cfg.inequalities.trials, cfg.seed)?;
    w.json("inequality_report.json", &reports)?;
    let passed = reports.iter().all(|r| r.passed);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.lemma.as_str()).collect();
    w.json(
        "summary.json",
        &ledger(
            ExperimentKind::Inequalities,
            cfg,
            passed,
            serde_json::json!({ "checks": reports.len(), "failed": failed }),
        ),
    )?;
    Ok((w.finish(passed), reports))
}

/// Reads a CSV with a `time` column and one column per series.
pub fn read_series_csv(path: &Path) -> Result<Vec<NormSeries>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let Some(time_col) = header.iter().position(|h| h == "time") else {
        return Err(Error::Csv(format!("{}: no `time` column", path.display())));
    };
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Csv(format!("line {line}: {e}")))?;
        if rec.len() != header.len() {
            return Err(Error::Csv(format!("line {line}: {} fields, header has {}", rec.len(), header.len())));
        }
        for (j, field) in rec.iter().enumerate() {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Csv(format!("line {line}, column `{}`: not a number: {field:?}", header[j])))?;
            cols[j].push(x);
        }
    }
    let times = cols[time_col].clone();
    header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != time_col)
        .map(|(j, name)| {
            NormSeries::new(name.clone(), times.clone(), cols[j].clone()).map_err(|e| Error::Csv(format!("column `{name}`: {e}")))
        })
        .collect()
}

/// Power-law fits of the columns of an existing CSV.
pub fn run_fit(cfg: &RunConfig, csv_path: &Path, out: &Path) -> Result<(Outcome, Vec<DecayFit>)> {
    cfg.validate(ExperimentKind::Fit)?;
    let series = read_series_csv(csv_path)?;
    let wanted: Vec<&NormSeries> = if cfg.fit.columns.is_empty() {
        series.iter().collect()
    } else {
        cfg.fit
            .columns
            .iter()
            .map(|c| {
                series
                    .iter()
                    .find(|s| &s.quantity == c)
                    .ok_or_else(|| Error::Config(format!("fit.columns: `{c}` not in {}", csv_path.display())))
            })
            .collect::<Result<_>>()?
    };
    for name in cfg.fit.targets.keys() {
        if !wanted.iter().any(|s| &s.quantity == name) {
            return Err(Error::Config(format!("fit.targets: `{name}` is not a fitted column")));
        }
    }
    let mut w = Writer::new(out)?;
    let mut resolved = cfg.clone();
    resolved.fit.csv = Some(csv_path.display().to_string());
    w.config(&resolved, ExperimentKind::Fit)?;

    let fits: Vec<DecayFit> = wanted
        .iter()
        .map(|s| {
            let target = cfg.fit.targets.get(&s.quantity).map(|&exponent| FitTarget {
                exponent,
                tolerance: cfg.fit.tolerance,
            });
            fit_decay(s, cfg.fit.window, target, None)
        })
        .collect::<Result<_>>()?;
    w.json("fit_report.json", &fits)?;
    let passed = fits.iter().all(|f| f.verdict != Verdict::Fail);
    let slopes: BTreeMap<&str, f64> = fits.iter().map(|f| (f.quantity.as_str(), f.slope)).collect();
    w.json("summary.json", &ledger(ExperimentKind::Fit, cfg, passed, serde_json::json!({ "slopes": slopes })))?;
    Ok((w.finish(passed), fits))
}

const PLOT_SCRIPT: &str = r#"# Plots timeseries.csv from this directory.
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
with open(here / "timeseries.csv") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["time"]) for r in rows]

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
for name in rows[0]:
    if name.startswith("norm_"):
        ax1.loglog([1 + x for x in t], [float(r[name]) for r in rows], label=name)
    if name.startswith("E_") or name.startswith("D_"):
        ax2.semilogy(t, [float(r[name]) for r in rows], label=name)
ax1.set_xlabel("1 + t")
ax1.legend()
ax2.set_xlabel("t")
ax2.legend()
fig.tight_layout()
fig.savefig(here / "timeseries.png", dpi=120)
"#;

const LINEAR_PLOT_SCRIPT: &str = r#"# Plots linear_series.csv from this directory.
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
series = defaultdict(lambda: ([], []))
with open(here / "linear_series.csv") as fh:
    for r in csv.DictReader(fh):
        t, v = series[(r["quantity"], r["k"])]
        t.append(1 + float(r["time"]))
        v.append(float(r["value"]))

fig, ax = plt.subplots(figsize=(6, 4.5))
for (q, k), (t, v) in sorted(series.items()):
    ax.loglog(t, v, label=f"{q} k={k}")
ax.set_xlabel("1 + t")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(here / "linear_series.png", dpi=120)
"#;
