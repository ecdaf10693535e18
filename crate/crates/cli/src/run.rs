//! Experiment dispatch and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value as Json};

use preset_core::experiments::{
    detect_strips, effective_detuning, harmonic_order, repeated_reset, rethermalization, rhombus_point,
    single_tone_scan, time_trace, two_tone_scan, two_tone_trace, ExperimentKind, Param, ScanGrid, ScanSpec,
    StripOptions,
};
use preset_core::fourier_expand;
use preset_core::units::to_mhz;
use preset_core::FluxDrive;

use crate::config::{Job, RunConfig};
use crate::error::CliError;
use crate::output::{self, Table};

#[derive(Debug, Clone)]
pub struct Report {
    pub data: PathBuf,
    pub metadata: PathBuf,
    pub summary: PathBuf,
    /// Scan cells whose integration failed; their rows carry the error.
    pub failed_cells: usize,
    pub cells: usize,
}

struct Outcome {
    table: Table,
    summary: Json,
    failed_cells: usize,
    cells: usize,
}

/// Errors after validation are failures of the computation, not of the input.
fn computing(e: preset_core::Error) -> CliError {
    CliError::Integration(e.to_string())
}

/// Builds the worker pool: `threads` when given, else one per core.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::invalid("--threads", "must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::invalid("--threads", e.to_string()))
}

/// Runs the experiment on `pool` and writes the data, metadata and summary
/// files. Nothing is written when the configuration is rejected.
pub fn execute(config: &RunConfig, pool: &rayon::ThreadPool) -> Result<Report, CliError> {
    let job = config.job()?;
    let started = Instant::now();
    let outcome = pool.install(|| compute(config, &job))?;
    let wall_time = started.elapsed().as_secs_f64();

    let out = &config.output;
    fs::create_dir_all(&out.directory).map_err(|e| CliError::io(&out.directory, e))?;
    let file = |suffix: &str| out.directory.join(format!("{}{suffix}", out.stem));
    let report = Report {
        data: file(&format!(".{}", out.format.extension())),
        metadata: file(".meta.json"),
        summary: file(".summary.json"),
        failed_cells: outcome.failed_cells,
        cells: outcome.cells,
    };
    outcome.table.write(&report.data, out.format)?;
    write_json(&report.summary, &outcome.summary)?;
    let metadata = json!({
        "tool": "preset",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": config.experiment.kind.name(),
        "config": config.to_raw(),
        "threads": pool.current_num_threads(),
        "wall_time_s": wall_time,
        "data_file": file_name(&report.data),
        "summary_file": file_name(&report.summary),
        "columns": outcome.table.columns,
        "cells": outcome.cells,
        "failed_cells": outcome.failed_cells,
    });
    write_json(&report.metadata, &metadata)?;
    Ok(report)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn write_json(path: &Path, value: &Json) -> Result<(), CliError> {
    let mut text = serde_json::to_vec_pretty(value).expect("summaries always serialize");
    text.push(b'\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn compute(config: &RunConfig, job: &Job) -> Result<Outcome, CliError> {
    let kind = config.experiment.kind;
    match job {
        Job::Scan(spec) => {
            let grid = match kind {
                ExperimentKind::SingleToneScan => single_tone_scan(spec, None),
                _ => two_tone_scan(spec, None),
            }
            .map_err(computing)?;
            let summary = match kind {
                ExperimentKind::SingleToneScan => {
                    let threshold = config.experiment.strip_threshold.unwrap_or_default();
                    single_tone_summary(spec, &grid, threshold)?
                }
                _ => two_tone_summary(spec, &grid)?,
            };
            Ok(Outcome {
                table: output::scan_table(&grid),
                summary,
                failed_cells: grid.failures(),
                cells: grid.cells.len(),
            })
        }
        Job::Trace(spec) => {
            let result = match kind {
                ExperimentKind::TwoToneTrace => two_tone_trace(spec),
                _ => time_trace(spec),
            }
            .map_err(computing)?;
            let traj = &result.trajectory;
            let summary = json!({
                "kind": kind.name(),
                "label": result.label,
                "final_populations": traj.final_qubit(),
                "final_photons": traj.photons.last(),
                "closed_form": result.closed_form.as_ref().map(|cf| json!({
                    "n": cf.n,
                    "alpha": cf.alpha,
                    "g_abs_MHz": to_mhz(cf.g_abs),
                    "kappa_r_inverse_ns": 1e9 / cf.kappa_r,
                    "regime": cf.regime,
                })),
                "decay": result.decay.as_ref().map(|d| json!({
                    "tau_ns": d.tau * 1e9,
                    "initial": d.initial,
                    "asymptote": d.asymptote,
                })),
                "cascade": result.cascade.as_ref().map(|c| json!({
                    "f_to_e_per_s": c.rates.f_to_e,
                    "e_to_g_per_s": c.rates.e_to_g,
                    "residual_norm": c.residual_norm,
                })),
                "invariants": traj.invariants,
            });
            Ok(Outcome {
                table: output::trace_table(&result),
                summary,
                failed_cells: 0,
                cells: 0,
            })
        }
        Job::Reset {
            spec,
            repetitions,
            preparation,
        } => {
            let seq = repeated_reset(spec, *repetitions, preparation).map_err(computing)?;
            let n = seq.residuals.len() as f64;
            let summary = json!({
                "kind": kind.name(),
                "repetitions": repetitions,
                "preparation": preparation,
                "mean_residual": seq.residuals.iter().sum::<f64>() / n,
                "max_residual": seq.residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                "trend": seq.trend.as_ref().map(|t| json!({
                    "slope_per_cycle": t.slope,
                    "intercept": t.intercept,
                    "ci95_low": t.ci_low,
                    "ci95_high": t.ci_high,
                    "contains_zero": t.contains_zero(),
                })),
                "invariants": seq.invariants,
            });
            Ok(Outcome {
                table: output::reset_table(&seq),
                summary,
                failed_cells: 0,
                cells: 0,
            })
        }
        Job::Rethermalization(spec) => {
            let result = rethermalization(spec).map_err(computing)?;
            let summary = json!({
                "kind": kind.name(),
                "fit": {
                    "tau_us": result.fit.tau * 1e6,
                    "initial": result.fit.initial,
                    "asymptote": result.fit.asymptote,
                },
                "model_time_constant_us": result.model_time_constant * 1e6,
                "model_asymptote": result.model_asymptote,
                "invariants": result.trajectory.invariants,
            });
            Ok(Outcome {
                table: output::rethermalization_table(&result),
                summary,
                failed_cells: 0,
                cells: 0,
            })
        }
    }
}

/// Strips in P_e with their extrapolated centers matched to sideband orders.
fn single_tone_summary(spec: &ScanSpec, grid: &ScanGrid, threshold: f64) -> Result<Json, CliError> {
    let options = StripOptions {
        threshold,
        ..StripOptions::default()
    };
    let strips = detect_strips(grid, 1, &options).map_err(computing)?;
    let device = &spec.setup.device;
    let delta =
        effective_detuning(device, &FluxDrive::idle(spec.drive.park_flux, spec.drive.duration)).map_err(computing)?;
    let strongest = spec.drive_at(grid.x.len() - 1, grid.y.len() - 1).map_err(computing)?;
    let alpha = harmonic_order(&fourier_expand(&device.to_bare().transmon, &strongest).map_err(computing)?);
    let listed: Vec<Json> = strips
        .iter()
        .map(|s| {
            let order = s.match_order(delta, alpha, 6);
            json!({
                "center_MHz": to_mhz(s.small_amplitude_center),
                "order": order.map(|o| o.n),
                "expected_MHz": order.map(|o| to_mhz(o.expected)),
                "relative_error": order.map(|o| o.relative_error),
                "cells": s.cells,
                "fragments": s.fragments,
                "rows": s.rows.len(),
            })
        })
        .collect();
    Ok(json!({
        "kind": "single_tone_scan",
        "cells": grid.cells.len(),
        "failed_cells": grid.failures(),
        "delta_bar_MHz": to_mhz(delta),
        "alpha": alpha,
        "strip_threshold": threshold,
        "strips": listed,
    }))
}

/// Predicted reset lines at the scan's tone amplitudes and the deepest cell.
fn two_tone_summary(spec: &ScanSpec, grid: &ScanGrid) -> Result<Json, CliError> {
    let fixed = |p: Param| match p {
        Param::Fixed(v) => v,
        _ => 0.0,
    };
    let (a1, a2) = (
        fixed(spec.drive.tones[0].amplitude),
        fixed(spec.drive.tones[1].amplitude),
    );
    let template = FluxDrive::idle(spec.drive.park_flux, spec.drive.duration);
    let (w1, w2) = rhombus_point(&spec.setup.device, a1, a2, &template).map_err(computing)?;
    let deepest = grid
        .cells
        .iter()
        .filter(|c| c.ok)
        .min_by(|a, b| (1.0 - a.populations[0]).total_cmp(&(1.0 - b.populations[0])));
    Ok(json!({
        "kind": "two_tone_scan",
        "cells": grid.cells.len(),
        "failed_cells": grid.failures(),
        "e_condition_MHz": to_mhz(2.0 * w1),
        "f_condition_MHz": to_mhz(w1 + w2),
        "rhombus_MHz": [to_mhz(w1), to_mhz(w2)],
        "deepest_cell": deepest.map(|c| json!({
            "ix": c.ix,
            "iy": c.iy,
            "x": grid.x.unit.to_display(grid.x.values[c.ix]),
            "y": grid.y.unit.to_display(grid.y.values[c.iy]),
            "one_minus_p_g": 1.0 - c.populations[0],
        })),
    }))
}
