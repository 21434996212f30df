//! Run configuration: schema, file loading and resolution into core types.
//!
//! JSON is the canonical form; TOML files are accepted with the same keys.
//! In `reduced` units every frequency is a multiple of Δ. In `physical`
//! units the system is given as oscillator constants and frequencies are
//! rad/s; strings such as `"8.7 kHz*2pi"` are accepted there as well.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use twinosc_core::analytic::ResonanceReference;
use twinosc_core::dynamics::{IntegratorConfig, Method};
use twinosc_core::model::{reduce_to_qubit, OscillatorParams, QubitParams, RegimeReport};
use twinosc_core::sweep::{
    DriveShape, DriveTemplate, ModelKind, SweepGrid, Window, YAxis, DEFAULT_CARRIER_RATIO,
    DEFAULT_FAILURE_BUDGET, DEFAULT_REALIZATIONS,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Experiments exposed by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Rabi,
    LzSingle,
    Stuckelberg,
    LzsmAmp,
    LzsmFreq,
    Latching,
    Motional,
    AnalyticRabi,
    AnalyticLorentzian,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Rabi,
        Experiment::LzSingle,
        Experiment::Stuckelberg,
        Experiment::LzsmAmp,
        Experiment::LzsmFreq,
        Experiment::Latching,
        Experiment::Motional,
        Experiment::AnalyticRabi,
        Experiment::AnalyticLorentzian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Rabi => "rabi",
            Experiment::LzSingle => "lz-single",
            Experiment::Stuckelberg => "stuckelberg",
            Experiment::LzsmAmp => "lzsm-amp",
            Experiment::LzsmFreq => "lzsm-freq",
            Experiment::Latching => "latching",
            Experiment::Motional => "motional",
            Experiment::AnalyticRabi => "analytic-rabi",
            Experiment::AnalyticLorentzian => "analytic-lorentzian",
        }
    }

    /// Sweep experiments produce interferograms; the rest produce trajectories.
    pub fn is_sweep(self) -> bool {
        self.sweep_layout().is_some()
    }

    /// Drive shape and y axis of a sweep experiment.
    pub fn sweep_layout(self) -> Option<(DriveShape, YAxis)> {
        match self {
            Experiment::LzsmAmp | Experiment::AnalyticLorentzian => {
                Some((DriveShape::Sinusoidal, YAxis::Amplitude))
            }
            Experiment::LzsmFreq => Some((DriveShape::Sinusoidal, YAxis::DriveFrequency)),
            Experiment::Latching => Some((DriveShape::Rectangular, YAxis::DriveFrequency)),
            Experiment::Motional => Some((DriveShape::Telegraph, YAxis::SwitchingRate)),
            _ => None,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A frequency-like number. Accepts a bare number or a string with a unit
/// suffix (`rad/s`, `Hz*2pi`, `kHz*2pi`, `MHz*2pi`, `GHz*2pi`; `·2π` also works).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(transparent)]
pub struct Quantity(pub f64);

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Quantity(v)),
            Raw::Text(s) => parse_quantity(&s).map(Quantity).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses `"<number> [unit]"` into rad/s.
pub fn parse_quantity(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let split = s
        .find(|c: char| c.is_whitespace() || (c.is_alphabetic() && c != 'e' && c != 'E'))
        .unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot read a number from `{s}`"))?;
    let unit: String = unit.chars().filter(|c| !c.is_whitespace()).collect();
    let unit = unit.replace('·', "*").replace('π', "pi");
    let scale = match unit.as_str() {
        "" | "rad/s" => 1.0,
        "Hz*2pi" => 2.0 * PI,
        "kHz*2pi" => 2e3 * PI,
        "MHz*2pi" => 2e6 * PI,
        "GHz*2pi" => 2e9 * PI,
        other => return Err(format!("unknown unit `{other}` in `{s}`")),
    };
    Ok(value * scale)
}

/// How the two-level parameters are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "units", rename_all = "kebab-case", deny_unknown_fields)]
pub enum System {
    /// Δ and γ directly; Δ is normally 1 and sets the frequency unit.
    Reduced {
        #[serde(default = "one")]
        delta: f64,
        #[serde(default)]
        gamma: Quantity,
        /// Carrier Ω0 for the exact model; derived from `carrier_ratio` if absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        carrier: Option<f64>,
    },
    /// Oscillator constants in SI units.
    Physical {
        /// kg
        m: f64,
        /// N/m
        k0: f64,
        /// N/m
        kc: f64,
        gamma: Quantity,
    },
}

fn one() -> f64 {
    1.0
}

/// Bias waveform; the sweep experiments override the swept quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    pub eps0: Quantity,
    pub amplitude: Quantity,
    pub omega: Quantity,
    pub chi: Quantity,
    /// Linear sweep rate (frequency per time).
    pub rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_center: Option<f64>,
    pub start_negative: bool,
}

/// Time grid and extras of the trajectory experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Output sample spacing; `(t_end - t_start) / 2000` if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<f64>,
    /// Columns of the Rabi experiment; exact, schrodinger and analytic if empty.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelKind>,
    /// Resonance index of the analytic Rabi curve; nearest to `ω0 / ω` if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    pub resonance: ResonanceReference,
    /// Exact-model carrier as a multiple of `max(ω, ω0, Δ)` when no carrier is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carrier_ratio: Option<f64>,
}

/// One axis of a sweep: an evenly spaced range or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { start: f64, stop: f64, points: usize },
    Values(Vec<f64>),
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Range {
                start,
                stop,
                points,
            } => twinosc_core::sweep::linspace(*start, *stop, *points),
            Axis::Values(v) => v.clone(),
        }
    }
}

/// Grid of a sweep experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Static bias values.
    pub x: Axis,
    /// Amplitude, drive frequency or switching rate, by experiment.
    pub y: Axis,
    pub window: Window,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "default_realizations")]
    pub realizations: u32,
    #[serde(default = "default_carrier_ratio")]
    pub carrier_ratio: f64,
    #[serde(default = "default_failure_budget")]
    pub failure_budget: f64,
    #[serde(default = "yes")]
    pub closed_form_segments: bool,
}

fn default_realizations() -> u32 {
    DEFAULT_REALIZATIONS
}
fn default_carrier_ratio() -> f64 {
    DEFAULT_CARRIER_RATIO
}
fn default_failure_budget() -> f64 {
    DEFAULT_FAILURE_BUDGET
}
fn yes() -> bool {
    true
}

/// Integrator settings; unset fields keep the core defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
}

impl IntegratorSettings {
    pub fn build(&self) -> IntegratorConfig {
        let mut c = IntegratorConfig::default();
        if let Some(m) = self.method {
            c.method = m;
        }
        if let Some(v) = self.rel_tol {
            c.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            c.abs_tol = v;
        }
        if let Some(v) = self.max_step {
            c.max_step = v;
        }
        if let Some(v) = self.max_steps {
            c.max_steps = v;
        }
        c
    }
}

/// Output file layout of an interferogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// Matrix with axis header row and column.
    #[default]
    Csv,
    /// One row per cell: x, y, value, n_failures.
    LongCsv,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub version: u32,
    /// Base name of the output files; the experiment name if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    pub system: System,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub renormalize: bool,
    #[serde(default)]
    pub format: OutputFormat,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl RunConfig {
    /// Reads a JSON or TOML file, chosen by extension (JSON otherwise).
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid TOML config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::Config(format!("cannot write TOML: {e}")))
    }

    pub fn base_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn model(&self) -> ModelKind {
        match self.experiment {
            Experiment::AnalyticRabi | Experiment::AnalyticLorentzian => ModelKind::Analytic,
            _ => self.model.unwrap_or(ModelKind::Schrodinger),
        }
    }

    /// Validates and converts into core parameter types.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if self.version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "config version {} is not supported (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        let (qubit, physical, regime) = match &self.system {
            System::Reduced {
                delta,
                gamma,
                carrier,
            } => {
                let q = match carrier {
                    Some(c) => QubitParams::new(*delta, gamma.0, *c),
                    None => QubitParams::reduced(*delta, gamma.0),
                }
                .map_err(config_err)?;
                (q, None, None)
            }
            System::Physical { m, k0, kc, gamma } => {
                let p = OscillatorParams::new(*m, *k0, *kc, gamma.0).map_err(config_err)?;
                let (q, report) = reduce_to_qubit(&p).map_err(config_err)?;
                (q, Some(p), Some(report))
            }
        };
        let integrator = self.integrator.build();
        integrator.validate().map_err(config_err)?;
        let model = self.model();
        if model == ModelKind::Analytic
            && !matches!(
                self.experiment,
                Experiment::Rabi
                    | Experiment::AnalyticRabi
                    | Experiment::AnalyticLorentzian
                    | Experiment::LzsmAmp
            )
        {
            return Err(CliError::Config(format!(
                "the analytic model is not available for `{}`",
                self.experiment
            )));
        }
        let grid = match self.experiment.sweep_layout() {
            Some(layout) => Some(self.build_grid(&qubit, layout, model)?),
            None => {
                if self.sweep.is_some() {
                    return Err(CliError::Config(format!(
                        "`{}` is a trajectory experiment and takes no sweep section",
                        self.experiment
                    )));
                }
                self.check_trajectory()?;
                None
            }
        };
        Ok(Resolved {
            qubit,
            physical,
            regime,
            integrator,
            grid,
        })
    }

    fn build_grid(
        &self,
        q: &QubitParams,
        (shape, y_axis): (DriveShape, YAxis),
        model: ModelKind,
    ) -> Result<SweepGrid, CliError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{}` needs a sweep section", self.experiment)))?;
        let d = &self.drive;
        let grid = SweepGrid {
            delta: q.delta,
            gamma: q.gamma,
            x_values: s.x.values(),
            y_axis,
            y_values: s.y.values(),
            drive: DriveTemplate {
                shape,
                amplitude: d.amplitude.0,
                omega: d.omega.0,
                chi: d.chi.0,
                start_negative: d.start_negative,
            },
            model,
            window: s.window,
            t_start: s.t_start,
            realizations: s.realizations,
            base_seed: self.seed,
            renormalize: self.renormalize,
            carrier_ratio: s.carrier_ratio,
            failure_budget: s.failure_budget,
            closed_form_segments: s.closed_form_segments,
        };
        grid.validate().map_err(config_err)?;
        Ok(grid)
    }

    fn check_trajectory(&self) -> Result<(), CliError> {
        let d = &self.drive;
        let t = &self.trajectory;
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Config(format!("`{}`: {what}", self.experiment)))
            }
        };
        match self.experiment {
            Experiment::Rabi | Experiment::AnalyticRabi => {
                need(d.omega.0 > 0.0, "drive.omega must be > 0")?;
                need(d.amplitude.0 >= 0.0, "drive.amplitude must be >= 0")?;
                need(t.t_end.is_some_and(|v| v > 0.0), "trajectory.t_end must be > 0")?;
                need(t.k != Some(0), "trajectory.k must be >= 1")?;
            }
            Experiment::LzSingle => {
                need(d.rate > 0.0, "drive.rate must be > 0")?;
                need(t.t_end.is_some_and(|v| v > 0.0), "trajectory.t_end must be > 0")?;
            }
            Experiment::Stuckelberg => {
                need(d.omega.0 > 0.0, "drive.omega must be > 0")?;
                need(
                    d.eps0.0.abs() < d.amplitude.0,
                    "the double passage needs |eps0| < amplitude",
                )?;
            }
            _ => {}
        }
        if let Some(s) = t.stride {
            need(s > 0.0, "trajectory.stride must be > 0")?;
        }
        if let Some(r) = t.carrier_ratio {
            need(r > 1.0, "trajectory.carrier_ratio must be > 1")?;
        }
        Ok(())
    }
}

fn config_err(e: twinosc_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Validated view of a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub qubit: QubitParams,
    pub physical: Option<OscillatorParams>,
    /// Slow-envelope check of the oscillator parameters themselves.
    pub regime: Option<RegimeReport>,
    pub integrator: IntegratorConfig,
    pub grid: Option<SweepGrid>,
}
