//! Runs a resolved configuration and produces tables, interferograms and
//! their metadata.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use twinosc_core::analytic::{
    crossing_times, eigenstructure, rabi_frequency_with, rabi_occupation_with, stuckelberg_double_passage,
    LzParams,
};
use twinosc_core::drive::{realize, DriveRealization, DriveSpec};
use twinosc_core::dynamics::{
    exact_initial_state, integrate_bloch_with, integrate_exact_with, integrate_schrodinger_with, IntegratorConfig,
    StateVector,
};
use twinosc_core::model::{QubitParams, RegimeReport, RegimeThresholds};
use twinosc_core::observables::{from_eigenbasis, upper_occupation, upper_occupation_bloch};
use twinosc_core::ode::StepStats;
use twinosc_core::rng::ALGORITHM_ID;
use twinosc_core::sweep::{Interferogram, ModelKind};
use twinosc_core::Complex;

use crate::config::{Experiment, OutputFormat, Resolved, RunConfig};
use crate::error::CliError;
use crate::io::{self, Table};
use crate::parallel::run_sweep;

/// Computed result of one run.
#[derive(Debug, Clone)]
pub enum Product {
    Trajectory(Table),
    Interferogram(Interferogram),
}

/// Result of [`execute`]: data plus everything recorded in the sidecar.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub product: Product,
    pub summary: Value,
    pub warnings: Vec<String>,
    pub stats: StepStats,
    pub wall_time_s: f64,
    pub started_unix_s: f64,
}

impl RunOutput {
    pub fn table(&self) -> Option<&Table> {
        match &self.product {
            Product::Trajectory(t) => Some(t),
            Product::Interferogram(_) => None,
        }
    }

    pub fn interferogram(&self) -> Option<&Interferogram> {
        match &self.product {
            Product::Interferogram(ig) => Some(ig),
            Product::Trajectory(_) => None,
        }
    }
}

/// Validates, checks the slow-envelope regime and computes.
pub fn execute(cfg: &RunConfig, parallelism: usize, force: bool) -> Result<RunOutput, CliError> {
    let resolved = cfg.resolve()?;
    let mut warnings = regime_warnings(cfg, &resolved, force)?;
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let (product, summary, stats) = match &resolved.grid {
        Some(grid) => {
            let ig = run_sweep(grid, &resolved.integrator, parallelism)?;
            let stats = ig.total_stats();
            let summary = sweep_summary(&ig);
            for (k, d) in ig.diagnostics.iter().enumerate() {
                if let Some(e) = &d.error {
                    let nx = grid.x_values.len();
                    warnings.push(format!("cell ({}, {}): {e}", k % nx, k / nx));
                }
            }
            (Product::Interferogram(ig), summary, stats)
        }
        None => {
            let (table, summary, stats) = match cfg.experiment {
                Experiment::Rabi | Experiment::AnalyticRabi => rabi(cfg, &resolved)?,
                Experiment::LzSingle => lz_single(cfg, &resolved)?,
                Experiment::Stuckelberg => stuckelberg(cfg, &resolved)?,
                other => unreachable!("{other} is a sweep experiment"),
            };
            (Product::Trajectory(table), summary, stats)
        }
    };
    Ok(RunOutput {
        product,
        summary,
        warnings,
        stats,
        wall_time_s: clock.elapsed().as_secs_f64(),
        started_unix_s,
    })
}

/// Slow-envelope check for the exact model; violations are errors unless forced.
fn regime_warnings(cfg: &RunConfig, r: &Resolved, force: bool) -> Result<Vec<String>, CliError> {
    let mut warnings: Vec<String> = r.regime.iter().flat_map(|rep| rep.messages.clone()).collect();
    let uses_exact = match cfg.experiment {
        Experiment::Rabi => trajectory_models(cfg).contains(&ModelKind::Exact),
        _ => cfg.model() == ModelKind::Exact,
    };
    if !uses_exact {
        return Ok(warnings);
    }
    let report = match &r.grid {
        // per-cell carrier is carrier_ratio times the largest envelope frequency
        Some(g) => RegimeReport::evaluate(1.0, 0.0, g.carrier_ratio, RegimeThresholds::default()),
        None => {
            let q = exact_qubit(cfg, &r.qubit)?;
            let omega = match cfg.experiment {
                Experiment::LzSingle => 0.0,
                _ => cfg.drive.omega.0,
            };
            RegimeReport::evaluate(omega, q.gamma, q.omega0_carrier, RegimeThresholds::default())
        }
    };
    if !report.valid {
        let text = report.messages.join("; ");
        if !force {
            return Err(CliError::Regime(text));
        }
        warnings.push(format!("forced past regime check: {text}"));
    }
    Ok(warnings)
}

/// Models a run evaluates; several only for the Rabi experiment.
pub fn trajectory_models(cfg: &RunConfig) -> Vec<ModelKind> {
    match (cfg.experiment, cfg.model) {
        (Experiment::AnalyticRabi, _) => vec![ModelKind::Analytic],
        (Experiment::Rabi, Some(m)) => vec![m],
        (Experiment::Rabi, None) if cfg.trajectory.models.is_empty() => {
            vec![ModelKind::Exact, ModelKind::Schrodinger, ModelKind::Analytic]
        }
        (Experiment::Rabi, None) => cfg.trajectory.models.clone(),
        _ => vec![cfg.model()],
    }
}

/// Qubit parameters with a finite carrier for the exact model.
fn exact_qubit(cfg: &RunConfig, q: &QubitParams) -> Result<QubitParams, CliError> {
    if q.has_carrier() {
        return Ok(*q);
    }
    let d = &cfg.drive;
    let scale = d.omega.0.max(q.delta.hypot(d.eps0.0)).max(q.delta);
    let ratio = cfg.trajectory.carrier_ratio.unwrap_or(twinosc_core::sweep::DEFAULT_CARRIER_RATIO);
    Ok(q.with_carrier(ratio * scale)?)
}

fn lower_state(q: &QubitParams, eps: f64) -> StateVector {
    from_eigenbasis(Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), q, eps)
}

/// Basis in which the upper-level occupation is read.
#[derive(Clone, Copy)]
enum Basis {
    /// Eigenbasis of the static bias.
    Static(f64),
    /// Eigenbasis of the instantaneous bias.
    Instantaneous,
}

struct Traced {
    times: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
    stats: StepStats,
}

/// Integrates one model and records amplitudes (or Bloch components) and occupation.
#[allow(clippy::too_many_arguments)]
fn trace(
    model: ModelKind,
    cfg: &RunConfig,
    q: &QubitParams,
    r: &DriveRealization,
    init: StateVector,
    span: (f64, f64),
    ic: &IntegratorConfig,
    basis: Basis,
) -> Result<Traced, CliError> {
    let renorm = cfg.renormalize;
    let eps_at = |t: f64| match basis {
        Basis::Static(e) => e,
        Basis::Instantaneous => r.bias_unchecked(t),
    };
    let name = model.name();
    let mut times = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut push = |t: f64, vals: &[f64]| {
        if cols.is_empty() {
            cols = vec![Vec::new(); vals.len()];
        }
        times.push(t);
        for (c, &v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    };
    let (labels, stats): (Vec<String>, StepStats) = match model {
        ModelKind::Schrodinger => {
            let (_, stats) = integrate_schrodinger_with(q, r, init, span, ic, |t, s| {
                let p = upper_occupation(s, q, eps_at(t), renorm);
                push(t, &[s.psi1.re, s.psi1.im, s.psi2.re, s.psi2.im, p]);
            })?;
            (amplitude_labels(name), stats)
        }
        ModelKind::Exact => {
            let qc = exact_qubit(cfg, q)?;
            let start = exact_initial_state(&qc, r, span.0, init)?;
            let (_, stats) = integrate_exact_with(&qc, r, start, span, ic, |t, s| {
                let p = upper_occupation(&s.psi, &qc, eps_at(t), renorm);
                let v = &s.psi;
                push(t, &[v.psi1.re, v.psi1.im, v.psi2.re, v.psi2.im, p]);
            })?;
            (amplitude_labels(name), stats)
        }
        ModelKind::Bloch => {
            let (_, stats) = integrate_bloch_with(q, r, init.bloch(), span, ic, |t, x| {
                let p = upper_occupation_bloch(x, q, eps_at(t), renorm);
                push(t, &[x.x, x.y, x.z, p]);
            })?;
            let labels = ["x", "y", "z", "occupation"].iter().map(|c| format!("bloch_{c}")).collect();
            (labels, stats)
        }
        ModelKind::Analytic => unreachable!("analytic columns are computed, not integrated"),
    };
    Ok(Traced {
        times,
        columns: labels.into_iter().zip(cols).collect(),
        stats,
    })
}

fn amplitude_labels(name: &str) -> Vec<String> {
    ["re_psi1", "im_psi1", "re_psi2", "im_psi2", "occupation"]
        .iter()
        .map(|c| format!("{name}_{c}"))
        .collect()
}

fn output_stride(cfg: &RunConfig, span: (f64, f64)) -> f64 {
    cfg.trajectory.stride.unwrap_or((span.1 - span.0) / 2000.0)
}

/// Joins traced models on a shared time grid into one table.
fn assemble(
    cfg: &RunConfig,
    r: &DriveRealization,
    times: Option<Vec<f64>>,
    traces: Vec<Traced>,
    extra: Vec<(String, Vec<f64>)>,
) -> Result<(Table, StepStats), CliError> {
    let times = match (times, traces.first()) {
        (Some(t), _) => t,
        (None, Some(first)) => first.times.clone(),
        (None, None) => Vec::new(),
    };
    let mut columns = vec!["t".to_string(), "eps".to_string()];
    let mut data: Vec<Vec<f64>> = vec![times.clone(), times.iter().map(|&t| r.bias_unchecked(t)).collect()];
    let mut stats = StepStats::default();
    for tr in traces {
        if tr.times.len() != times.len() || tr.times.iter().zip(&times).any(|(a, b)| (a - b).abs() > 1e-9 * b.abs().max(1.0)) {
            return Err(CliError::Config(format!(
                "`{}`: models returned different sample times",
                cfg.experiment
            )));
        }
        stats.merge(&tr.stats);
        for (name, col) in tr.columns {
            columns.push(name);
            data.push(col);
        }
    }
    for (name, col) in extra {
        columns.push(name);
        data.push(col);
    }
    let mut table = Table::new(columns);
    for k in 0..times.len() {
        table.push(data.iter().map(|c| c[k]).collect());
    }
    Ok((table, stats))
}

fn rabi(cfg: &RunConfig, res: &Resolved) -> Result<(Table, Value, StepStats), CliError> {
    let q = &res.qubit;
    let d = &cfg.drive;
    let (eps0, a, w) = (d.eps0.0, d.amplitude.0, d.omega.0);
    let t0 = cfg.trajectory.t_start.unwrap_or(0.0);
    let t1 = cfg.trajectory.t_end.expect("checked by resolve");
    if !(t1 > t0) {
        return Err(CliError::Config("trajectory.t_end must exceed t_start".into()));
    }
    let span = (t0, t1);
    let r = realize(&DriveSpec::sinusoidal(eps0, a, w), t1)?;
    let ic = res.integrator.with_stride(output_stride(cfg, span));
    let init = lower_state(q, eps0);
    let omega0 = eigenstructure(q, eps0).omega_qubit;
    let k = cfg
        .trajectory
        .k
        .unwrap_or_else(|| ((omega0 / w).round() as u32).max(1));
    let reference = cfg.trajectory.resonance;

    let models = trajectory_models(cfg);
    let mut traces = Vec::new();
    for &m in models.iter().filter(|&&m| m != ModelKind::Analytic) {
        traces.push(trace(m, cfg, q, &r, init, span, &ic, Basis::Static(eps0))?);
    }
    let times = if traces.is_empty() {
        let n = ((t1 - t0) / ic.dense_output_stride).floor() as usize;
        let mut t: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * ic.dense_output_stride).collect();
        if t.last().is_some_and(|&l| l < t1 - 1e-12 * t1.abs().max(1.0)) {
            t.push(t1);
        }
        Some(t)
    } else {
        None
    };
    let grid = times.clone().unwrap_or_else(|| traces[0].times.clone());
    let mut extra = Vec::new();
    if models.contains(&ModelKind::Analytic) {
        let col = grid
            .iter()
            .map(|&t| rabi_occupation_with(q, eps0, a, w, k, t - t0, true, reference))
            .collect::<Result<Vec<f64>, _>>()?;
        extra.push(("analytic_occupation".to_string(), col));
    }
    let (table, stats) = assemble(cfg, &r, times, traces, extra)?;
    let rabi_frequency = rabi_frequency_with(q, eps0, a, w, k, reference);
    let finals: serde_json::Map<String, Value> = models
        .iter()
        .filter_map(|m| {
            let col = table.column(&format!("{}_occupation", m.name()))?;
            Some((m.name().to_string(), json!(col.last().copied().unwrap_or(f64::NAN))))
        })
        .collect();
    let summary = json!({
        "samples": table.rows.len(),
        "models": models.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "resonance_index": k,
        "rabi_frequency": rabi_frequency,
        "rabi_period": 2.0 * PI / rabi_frequency,
        "final_occupation": finals,
    });
    Ok((table, summary, stats))
}

fn lz_single(cfg: &RunConfig, res: &Resolved) -> Result<(Table, Value, StepStats), CliError> {
    let q = &res.qubit;
    let d = &cfg.drive;
    let t0 = cfg.trajectory.t_start.unwrap_or(0.0);
    let t1 = cfg.trajectory.t_end.expect("checked by resolve");
    if !(t1 > t0) {
        return Err(CliError::Config("trajectory.t_end must exceed t_start".into()));
    }
    let span = (t0, t1);
    let spec = DriveSpec::linear_sweep(d.eps0.0, d.rate, d.t_center.unwrap_or(0.5 * (t0 + t1)));
    let r = realize(&spec, t1)?;
    let ic = res.integrator.with_stride(output_stride(cfg, span));
    let init = lower_state(q, r.bias_at(t0)?);
    let tr = trace(cfg.model(), cfg, q, &r, init, span, &ic, Basis::Instantaneous)?;
    let occupation = tr.columns.last().and_then(|(_, c)| c.last().copied()).unwrap_or(f64::NAN);
    let (table, stats) = assemble(cfg, &r, None, vec![tr], Vec::new())?;
    let predicted = LzParams::from_rate(q.delta, d.rate)?;
    let summary = json!({
        "samples": table.rows.len(),
        "bias_start": r.bias_at(t0)?,
        "bias_end": r.bias_at(t1)?,
        "adiabaticity": predicted.delta_adiab,
        "final_occupation": occupation,
        "lz_probability": predicted.probability(),
    });
    Ok((table, summary, stats))
}

fn stuckelberg(cfg: &RunConfig, res: &Resolved) -> Result<(Table, Value, StepStats), CliError> {
    let q = &res.qubit;
    let d = &cfg.drive;
    let (eps0, a, w) = (d.eps0.0, d.amplitude.0, d.omega.0);
    let t0 = cfg.trajectory.t_start.unwrap_or(0.5 * PI / w);
    let t1 = cfg.trajectory.t_end.unwrap_or(t0 + 2.0 * PI / w);
    if !(t1 > t0) {
        return Err(CliError::Config("trajectory.t_end must exceed t_start".into()));
    }
    let span = (t0, t1);
    let r = realize(&DriveSpec::sinusoidal(eps0, a, w), t1)?;
    let ic = res.integrator.with_stride(output_stride(cfg, span));
    let init = lower_state(q, r.bias_at(t0)?);
    let tr = trace(cfg.model(), cfg, q, &r, init, span, &ic, Basis::Instantaneous)?;
    let occupation = tr.columns.last().and_then(|(_, c)| c.last().copied()).unwrap_or(f64::NAN);
    let (table, stats) = assemble(cfg, &r, None, vec![tr], Vec::new())?;
    let (c1, c2) = crossing_times(eps0, a, w)?;
    let predicted = stuckelberg_double_passage(q, eps0, a, w, c1, c2)?;
    let summary = json!({
        "samples": table.rows.len(),
        "crossing_times": [c1, c2],
        "final_occupation": occupation,
        "double_passage_formula": predicted,
    });
    Ok((table, summary, stats))
}

fn sweep_summary(ig: &Interferogram) -> Value {
    let max = ig.values.iter().copied().filter(|v| v.is_finite()).fold(f64::NAN, f64::max);
    let (nx, ny) = ig.grid.shape();
    json!({
        "shape": [nx, ny],
        "cells": ig.values.len(),
        "failed_cells": ig.failed_cells,
        "failed_realizations": ig.diagnostics.iter().map(|d| d.failed_realizations as u64).sum::<u64>(),
        "max_value": max,
    })
}

/// CSV bytes of the run's main output.
pub fn csv_bytes(out: &RunOutput, format: OutputFormat) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match (&out.product, format) {
        (Product::Trajectory(t), _) => t.write(&mut buf)?,
        (Product::Interferogram(ig), OutputFormat::Csv) => io::write_matrix(ig, &mut buf)?,
        (Product::Interferogram(ig), OutputFormat::LongCsv) => io::write_long(ig, &mut buf)?,
    }
    Ok(buf)
}

/// Sidecar content; `config` alone is enough to repeat the run.
pub fn metadata(cfg: &RunConfig, res: &Resolved, out: &RunOutput, files: &[PathBuf], parallelism: usize) -> Value {
    json!({
        "tool": "twinosc",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "config": cfg,
        "seed": cfg.seed,
        "rng_algorithm": ALGORITHM_ID,
        "resolved": {
            "qubit": res.qubit,
            "oscillators": res.physical,
            "integrator": {
                "method": res.integrator.method.name(),
                "rel_tol": res.integrator.rel_tol,
                "abs_tol": res.integrator.abs_tol,
            },
        },
        "started_unix_s": out.started_unix_s,
        "wall_time_s": out.wall_time_s,
        "parallelism": parallelism,
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "step_stats": out.stats,
        "summary": out.summary,
        "warnings": out.warnings,
    })
}

/// Writes the CSV and its JSON sidecar into `dir`; returns both paths.
pub fn write_outputs(
    cfg: &RunConfig,
    out: &RunOutput,
    dir: &Path,
    parallelism: usize,
) -> Result<Vec<PathBuf>, CliError> {
    let res = cfg.resolve()?;
    let base = cfg.base_name();
    let csv_name = match (&out.product, cfg.format) {
        (Product::Interferogram(_), OutputFormat::LongCsv) => format!("{base}.long.csv"),
        _ => format!("{base}.csv"),
    };
    let csv_path = io::write_file(dir, &csv_name, &csv_bytes(out, cfg.format)?)?;
    let meta_path = dir.join(format!("{base}.json"));
    let files = vec![csv_path, meta_path.clone()];
    let meta = metadata(cfg, &res, out, &files, parallelism);
    io::write_file(dir, &format!("{base}.json"), &io::to_json_pretty(&meta))?;
    Ok(files)
}

/// One-line human summary.
pub fn summary_line(cfg: &RunConfig, out: &RunOutput) -> String {
    let body = match &out.product {
        Product::Interferogram(ig) => {
            let (nx, ny) = ig.grid.shape();
            format!("{nx}x{ny} cells, {} failed", ig.failed_cells)
        }
        Product::Trajectory(t) => {
            let mut s = format!("{} samples", t.rows.len());
            for key in ["lz_probability", "double_passage_formula"] {
                if let (Some(p), Some(f)) = (out.summary.get("final_occupation"), out.summary.get(key)) {
                    s.push_str(&format!(", final occupation {p} ({key} {f})"));
                }
            }
            s
        }
    };
    format!(
        "{}: {} {body}, {} warnings, wall time {:.2} s",
        cfg.base_name(),
        cfg.experiment,
        out.warnings.len(),
        out.wall_time_s
    )
}
