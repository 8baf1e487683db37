//! Experiment configs, orchestration over `(h, trajectory)` cells and file
//! emission (CSV, SVG line plots, a manifest per output directory).

mod config;
mod output;

pub use config::{step_count, ExperimentConfig, StepSizes, Tracked, MAX_STEPS};
pub use output::{csv_bytes, fmt_num, polyline_points, sha256_hex, subsample, svg_line_plot, FileDigest, Manifest, OutputBundle};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::diagnostics::{drift_scaling_exponent, functional_drift, strong_order_estimate, DiagnosticsError, DriftScaling, DriftSeries, OrderEstimate};
use crate::integrators::{integrate, IntegratorError, Trajectory};
use crate::modified::{CoefficientTable, ModifiedError};
use crate::stochastics::{sample_increments, truncate_increments, SeedSpec, StochasticsError};
use crate::systems::{PoissonSystem, SystemError};
use output::BundleWriter;

/// Read when neither the command line nor the config names an output directory.
pub const OUTPUT_DIR_ENV: &str = "SPOISSON_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "spoisson-out";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("config `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("h = {h}, trajectory {trajectory}: {source}")]
    Cell { h: f64, trajectory: usize, source: IntegratorError },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Stochastics(#[from] StochasticsError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Modified(#[from] ModifiedError),
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "config",
            Self::Io { .. } => "io",
            Self::Csv(_) => "csv",
            Self::Cell { .. } | Self::Integrator(_) => "integrator",
            Self::System(_) => "system",
            Self::Stochastics(_) => "stochastics",
            Self::Diagnostics(_) => "diagnostics",
            Self::Modified(_) => "modified",
            Self::Usage(_) => "usage",
        }
    }

    /// `{"error": kind, "message": ..., "path": ...}`
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            Self::Config { path, .. } | Self::Io { path, .. } => v["path"] = json!(path),
            Self::Cell { h, trajectory, .. } => {
                v["h"] = json!(h);
                v["trajectory"] = json!(trajectory);
            }
            _ => {}
        }
        v
    }
}

/// Command line first, then the config, then `$SPOISSON_OUTPUT_DIR`, then
/// `spoisson-out`.
pub fn resolve_output_dir(cli: Option<&Path>, config: Option<&Path>) -> PathBuf {
    cli.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// One integrated `(h, trajectory)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub h: f64,
    pub trajectory_id: usize,
    pub trajectory: Trajectory,
}

impl Cell {
    /// Drift series of every tracked functional.
    pub fn drift_series(&self) -> Vec<DriftSeries> {
        self.trajectory
            .tracks()
            .map(|(f, _)| functional_drift(&self.trajectory, f).expect("tracked"))
            .collect()
    }
}

/// Integrates every `(h, trajectory)` cell of `config`, in parallel. Trajectory
/// `p` draws from `SeedSpec::new(master_seed, p)` at every step size.
pub fn simulate(config: &ExperimentConfig) -> Result<Vec<Cell>, HarnessError> {
    config.validate()?;
    let sys = config.build_system()?;
    let stepper = config.build_stepper()?;
    let track = config.track_request();
    let cells: Vec<(f64, usize)> = config
        .step_sizes()
        .into_iter()
        .flat_map(|h| (0..config.n_paths).map(move |p| (h, p)))
        .collect();
    cells
        .into_par_iter()
        .map(|(h, p)| {
            let n = step_count(config.t_end, h).expect("validated");
            let inc = sample_increments(SeedSpec::new(config.master_seed, p as u64), h, sys.noise_count(), n)?;
            let inc = truncate_increments(&inc, config.truncation)?;
            let trajectory = integrate(&sys, &stepper, &config.y0, h, n, &inc, track)
                .map_err(|source| HarnessError::Cell { h, trajectory: p, source })?;
            Ok(Cell { h, trajectory_id: p, trajectory })
        })
        .collect()
}

fn states_csv(cells: &[&Cell], points: Option<usize>) -> Result<Vec<u8>, HarnessError> {
    let d = cells[0].trajectory.dim;
    let mut header = vec!["t".to_string(), "trajectory_id".to_string()];
    header.extend((1..=d).map(|i| format!("y{i}")));
    let rows = cells.iter().flat_map(|c| {
        subsample(c.trajectory.n_steps(), points).into_iter().map(move |n| {
            let mut row = vec![fmt_num(c.trajectory.time(n)), c.trajectory_id.to_string()];
            row.extend(c.trajectory.state(n).iter().map(|v| fmt_num(*v)));
            row
        })
    });
    csv_bytes(&header, rows)
}

/// Writes the drift CSV and one SVG per functional for the cells sharing one `h`.
fn write_drift(out: &mut BundleWriter, name: &str, h: f64, cells: &[&Cell], points: Option<usize>) -> Result<(), HarnessError> {
    let series: Vec<(usize, Vec<DriftSeries>)> = cells.iter().map(|c| (c.trajectory_id, c.drift_series())).collect();
    let header: Vec<String> = ["t", "value", "trajectory_id", "functional"].map(String::from).to_vec();
    let rows = series.iter().flat_map(|(id, all)| {
        all.iter().flat_map(move |s| {
            subsample(s.t.len() - 1, points)
                .into_iter()
                .map(move |n| vec![fmt_num(s.t[n]), fmt_num(s.values[n]), id.to_string(), s.label.clone()])
        })
    });
    out.write(&format!("drift_h{h}.csv"), &csv_bytes(&header, rows)?)?;
    let labels: Vec<String> = series[0].1.iter().map(|s| s.label.clone()).collect();
    for (k, label) in labels.iter().enumerate() {
        let lines: Vec<(String, Vec<(f64, f64)>)> = series
            .iter()
            .map(|(id, all)| {
                let s = &all[k];
                let pts = subsample(s.t.len() - 1, points).into_iter().map(|n| (s.t[n], s.values[n])).collect();
                (format!("trajectory {id}"), pts)
            })
            .collect();
        let title = format!("{name}: {label}, h = {h}");
        out.write(&format!("{label}_h{h}.svg"), svg_line_plot(&title, "t", &format!("{label} deviation"), &lines).as_bytes())?;
    }
    Ok(())
}

fn group_by_h<'a>(config: &ExperimentConfig, cells: &'a [Cell]) -> Vec<(f64, Vec<&'a Cell>)> {
    config
        .step_sizes()
        .into_iter()
        .map(|h| (h, cells.iter().filter(|c| c.h == h).collect()))
        .collect()
}

/// Integrates `config` and writes `states_h*.csv`, plus `drift_h*.csv` and
/// one SVG per `(h, functional)` when anything is tracked.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<OutputBundle, HarnessError> {
    let cells = simulate(config)?;
    write_cells(config, &cells, out_dir, true)
}

/// Like [`run`] without the state files; needs at least one tracked functional.
pub fn run_drift(config: &ExperimentConfig, out_dir: &Path) -> Result<OutputBundle, HarnessError> {
    if config.track.is_empty() {
        return Err(HarnessError::Config { path: "track".into(), message: "drift needs at least one tracked functional".into() });
    }
    let cells = simulate(config)?;
    write_cells(config, &cells, out_dir, false)
}

/// Writes already integrated cells as [`run`] would.
pub fn write_cells(config: &ExperimentConfig, cells: &[Cell], out_dir: &Path, states: bool) -> Result<OutputBundle, HarnessError> {
    let mut out = BundleWriter::new(out_dir)?;
    for (h, group) in group_by_h(config, cells) {
        if group.is_empty() {
            continue;
        }
        if states {
            out.write(&format!("states_h{h}.csv"), &states_csv(&group, config.plot_points)?)?;
        }
        if !config.track.is_empty() {
            write_drift(&mut out, &config.name, h, &group, config.plot_points)?;
        }
    }
    out.finish(if states { "simulate" } else { "drift" }, config, config.master_seed)
}

/// Drift scaling study over the config's step sizes; writes `scaling.csv`.
pub fn run_scaling(config: &ExperimentConfig, out_dir: &Path) -> Result<(DriftScaling, OutputBundle), HarnessError> {
    config.validate()?;
    let sys = config.build_system()?;
    let stepper = config.build_stepper()?;
    let res = drift_scaling_exponent(&sys, &stepper, &config.y0, &config.protocol())?;
    let header: Vec<String> = ["h", "mean_max_drift", "n_paths"].map(String::from).to_vec();
    let rows = res.hs.iter().zip(&res.drifts).map(|(h, d)| vec![fmt_num(*h), fmt_num(*d), res.n_paths.to_string()]);
    let mut out = BundleWriter::new(out_dir)?;
    out.write("scaling.csv", &csv_bytes(&header, rows)?)?;
    let bundle = out.finish("drift-scaling", config, config.master_seed)?;
    Ok((res, bundle))
}

/// Strong-order study over the config's step sizes; writes `order.csv`.
pub fn run_order(config: &ExperimentConfig, out_dir: &Path) -> Result<(OrderEstimate, OutputBundle), HarnessError> {
    config.validate()?;
    let sys = config.build_system()?;
    let stepper = config.build_stepper()?;
    let res = strong_order_estimate(&sys, &stepper, &config.y0, &config.protocol())?;
    let header: Vec<String> = ["h", "mean_error", "half_width", "n_paths"].map(String::from).to_vec();
    let rows = (0..res.hs.len())
        .map(|i| vec![fmt_num(res.hs[i]), fmt_num(res.errors[i]), fmt_num(res.half_widths[i]), res.n_paths.to_string()]);
    let mut out = BundleWriter::new(out_dir)?;
    out.write("order.csv", &csv_bytes(&header, rows)?)?;
    let bundle = out.finish("order", config, config.master_seed)?;
    Ok((res, bundle))
}

/// One row per `(point, α)`: `point, alpha0..alpham, c1..cd`.
pub fn coefficient_csv(tables: &[CoefficientTable]) -> Result<Vec<u8>, HarnessError> {
    let Some(first) = tables.first() else {
        return Err(HarnessError::Usage("no evaluation points".into()));
    };
    let mut header = vec!["point".to_string()];
    header.extend((0..=first.m).map(|i| format!("alpha{i}")));
    header.extend((1..=first.dim()).map(|i| format!("c{i}")));
    let rows = tables.iter().enumerate().flat_map(|(p, t)| {
        t.entries().map(move |(alpha, v)| {
            let mut row = vec![p.to_string()];
            row.extend(alpha.entries().iter().map(|e| e.to_string()));
            row.extend(v.iter().map(|x| fmt_num(*x)));
            row
        })
    });
    csv_bytes(&header, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Fig1, Figure::Fig2, Figure::Fig3];

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.label() == label)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
        }
    }

    /// The canned experiment behind the figure.
    pub fn config(&self) -> ExperimentConfig {
        let base = ExperimentConfig {
            name: self.label().into(),
            system: String::new(),
            sigma: Vec::new(),
            stepper: "midpoint".into(),
            solver: Default::default(),
            y0: Vec::new(),
            h: StepSizes::One(0.1),
            t_end: 2000.0,
            n_paths: 1,
            master_seed: 0,
            truncation: Default::default(),
            track: vec![Tracked::RandomHamiltonian],
            plot_points: None,
            output_dir: None,
        };
        match self {
            Self::Fig1 => ExperimentConfig {
                system: "pendulum".into(),
                sigma: vec![0.01, 0.02, 0.03],
                y0: vec![1.0, 2.0],
                h: StepSizes::Many(vec![0.1, 0.2, 0.4, 0.8]),
                track: vec![Tracked::Hamiltonian],
                ..base
            },
            Self::Fig2 => ExperimentConfig {
                system: "double-well".into(),
                sigma: vec![0.01, 0.01],
                y0: vec![0.0, 1.0],
                h: StepSizes::Many(vec![0.001, 0.01, 0.1]),
                plot_points: Some(2000),
                ..base
            },
            Self::Fig3 => ExperimentConfig {
                system: "maxwell-bloch".into(),
                sigma: vec![0.01, 0.01],
                stepper: "mb-splitting".into(),
                y0: vec![0.0, 0.0, 1.0],
                t_end: 1e5,
                track: vec![Tracked::RandomHamiltonian, Tracked::Casimirs],
                plot_points: Some(1000),
                ..base
            },
        }
    }
}

/// Runs the canned config of `figure` into `out_dir`.
pub fn reproduce(figure: Figure, out_dir: &Path) -> Result<OutputBundle, HarnessError> {
    run_drift(&figure.config(), out_dir)
}
