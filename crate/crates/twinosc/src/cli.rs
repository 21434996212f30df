//! Command-line interface.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use twinosc_core::analytic::eigenstructure;
use twinosc_core::drive::{realize, DriveSpec};
use twinosc_core::sweep::ModelKind;

use crate::config::{Experiment, OutputFormat, RunConfig, System};
use crate::error::CliError;
use crate::experiments::{execute, summary_line, trajectory_models, write_outputs};
use crate::io;
use crate::parallel::default_parallelism;
use crate::presets;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TWINOSC_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "twinosc-out";

#[derive(Debug, Parser)]
#[command(name = "twinosc", version, about = "Two coupled damped oscillators driven as a two-level analogue")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment named in the config or preset.
    Run(RunArgs),
    /// Resonant weak driving: occupation against time for several models.
    Rabi(RunArgs),
    /// Single linear passage through the avoided crossing.
    LzSingle(RunArgs),
    /// One drive period with two crossings, compared with the double-passage formula.
    Stuckelberg(RunArgs),
    /// Interferogram against bias and drive amplitude.
    LzsmAmp(RunArgs),
    /// Interferogram against bias and drive frequency.
    LzsmFreq(RunArgs),
    /// Rectangular driving against bias and drive frequency.
    Latching(RunArgs),
    /// Telegraph driving against bias and jump rate.
    Motional(RunArgs),
    /// Closed-form Rabi curve.
    AnalyticRabi(RunArgs),
    /// Lorentzian-series interferogram against bias and drive amplitude.
    AnalyticLorentzian(RunArgs),
    /// Check a configuration and print its parameters without running.
    Validate(ValidateArgs),
    /// List presets or print one as a config file.
    Presets(PresetArgs),
    /// Write the switching instants of a drive realization.
    Realize(RealizeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// JSON or TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Divide the occupation by the instantaneous norm.
    #[arg(long)]
    pub renormalize: bool,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Allowed fraction of failed sweep cells.
    #[arg(long)]
    pub failure_budget: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Worker threads for sweeps.
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Output directory; defaults to $TWINOSC_OUT_DIR, then ./twinosc-out.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the exact model outside its slow-envelope regime.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Positional config path, same as --config.
    #[arg(conflicts_with_all = ["config", "preset"])]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PresetArgs {
    /// Print this preset as a config file.
    #[arg(long)]
    pub show: Option<String>,
    #[arg(long)]
    pub toml: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Rectangular,
    Telegraph,
}

#[derive(Debug, Clone, Args)]
pub struct RealizeArgs {
    #[arg(long, value_enum)]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 0.0)]
    pub eps0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Drive frequency of the rectangular wave.
    #[arg(long, default_value_t = 0.0)]
    pub omega: f64,
    /// Mean jump rate of the telegraph signal.
    #[arg(long, default_value_t = 0.0)]
    pub chi: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub t_max: f64,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Exact,
    Schrodinger,
    Bloch,
    Analytic,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Exact => ModelKind::Exact,
            ModelArg::Schrodinger => ModelKind::Schrodinger,
            ModelArg::Bloch => ModelKind::Bloch,
            ModelArg::Analytic => ModelKind::Analytic,
        }
    }
}

/// Loads the config or preset and applies the command-line overrides.
pub fn load(src: &SourceArgs, experiment: Option<Experiment>) -> Result<RunConfig, CliError> {
    let mut cfg = match (&src.config, &src.preset, experiment) {
        (Some(path), _, _) => RunConfig::from_path(path)?,
        (None, Some(name), _) => presets::get(name)?,
        (None, None, Some(e)) => presets::get(presets::default_for(e))?,
        (None, None, None) => return Err(CliError::Config("give --config or --preset".into())),
    };
    if let Some(e) = experiment {
        cfg.experiment = e;
    }
    if let Some(m) = src.model {
        cfg.model = Some(m.into());
    }
    if let Some(s) = src.seed {
        cfg.seed = s;
    }
    if src.renormalize {
        cfg.renormalize = true;
    }
    if let Some(f) = src.format {
        cfg.format = f;
    }
    if let Some(b) = src.failure_budget {
        match cfg.sweep.as_mut() {
            Some(s) => s.failure_budget = b,
            None => return Err(CliError::Config("--failure-budget applies to sweeps only".into())),
        }
    }
    Ok(cfg)
}

fn out_dir(arg: &Option<PathBuf>) -> PathBuf {
    arg.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn run(args: &RunArgs, experiment: Option<Experiment>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(&args.source, experiment)?;
    let threads = args.parallelism.unwrap_or_else(default_parallelism);
    if threads == 0 {
        return Err(CliError::Config("--parallelism must be >= 1".into()));
    }
    let out = execute(&cfg, threads, args.force)?;
    let dir = out_dir(&args.out);
    let files = write_outputs(&cfg, &out, &dir, threads)?;
    let line = summary_line(&cfg, &out);
    writeln!(stdout, "{line} -> {}", files[0].display()).map_err(|e| CliError::io("stdout", e))?;
    Ok(())
}

fn hz(rad_per_s: f64) -> String {
    format!("{:.6e} rad/s = {:.6e} Hz*2pi", rad_per_s, rad_per_s / (2.0 * PI))
}

/// Parameter report printed by `validate`.
pub fn describe(cfg: &RunConfig) -> Result<String, CliError> {
    let res = cfg.resolve()?;
    let q = res.qubit;
    let d = &cfg.drive;
    let models: Vec<&str> = trajectory_models(cfg).iter().map(|m| m.name()).collect();
    let mut lines = vec![format!(
        "valid: {} (experiment {}, model {})",
        cfg.base_name(),
        cfg.experiment,
        models.join(", ")
    )];
    let physical = matches!(cfg.system, System::Physical { .. });
    let show = |label: &str, v: f64, omega: f64| {
        let mut s = format!("  {label:<10} = {} Δ", v / q.delta);
        if omega > 0.0 {
            s.push_str(&format!(" = {} ω", v / omega));
        }
        if physical {
            s.push_str(&format!(" ({})", hz(v)));
        }
        s
    };
    let w = d.omega.0;
    lines.push(show("delta", q.delta, w));
    lines.push(show("gamma", q.gamma, w));
    if q.has_carrier() {
        lines.push(show("carrier", q.omega0_carrier, w));
    }
    lines.push(show("eps0", d.eps0.0, w));
    lines.push(show("amplitude", d.amplitude.0, w));
    if w > 0.0 {
        lines.push(show("omega", w, 0.0));
    }
    if d.chi.0 > 0.0 {
        lines.push(show("chi", d.chi.0, w));
    }
    if !cfg.experiment.is_sweep() {
        lines.push(show("splitting", eigenstructure(&q, d.eps0.0).omega_qubit, w));
    }
    if let Some(p) = &res.physical {
        lines.push(format!("  oscillators: m = {} kg, k0 = {} N/m, kc = {} N/m", p.m, p.k0, p.kc));
    }
    if let Some(g) = &res.grid {
        let (nx, ny) = g.shape();
        let (x, y) = (&g.x_values, &g.y_values);
        lines.push(format!(
            "  grid: {nx} x {ny}, eps0 in [{}, {}], {} in [{}, {}], window {:?}",
            x[0],
            x[nx - 1],
            g.y_axis.name(),
            y[0],
            y[ny - 1],
            g.window
        ));
    }
    for m in res.regime.iter().flat_map(|r| r.messages.iter()) {
        lines.push(format!("  warning: {m}"));
    }
    lines.push(format!("  seed = {}", cfg.seed));
    Ok(lines.join("\n"))
}

fn realize_switches(a: &RealizeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = match a.shape {
        ShapeArg::Rectangular => DriveSpec::rectangular(a.eps0, a.amplitude, a.omega),
        ShapeArg::Telegraph => DriveSpec::telegraph(a.eps0, a.amplitude, a.chi, a.seed),
    };
    spec.validate()?;
    let r = realize(&spec, a.t_max)?;
    let mut buf = Vec::new();
    io::write_switch_times(&r.discontinuities(), &mut buf)?;
    match &a.out {
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| CliError::Config(format!("bad output path {}", path.display())))?;
            io::write_file(dir, name, &buf)?;
        }
        None => stdout.write_all(&buf).map_err(|e| CliError::io("stdout", e))?,
    }
    Ok(())
}

/// Executes a parsed command line, writing reports to `stdout`.
pub fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let say = |stdout: &mut dyn Write, s: &str| writeln!(stdout, "{s}").map_err(|e| CliError::io("stdout", e));
    match &cli.command {
        Command::Run(a) => run(a, None, stdout),
        Command::Rabi(a) => run(a, Some(Experiment::Rabi), stdout),
        Command::LzSingle(a) => run(a, Some(Experiment::LzSingle), stdout),
        Command::Stuckelberg(a) => run(a, Some(Experiment::Stuckelberg), stdout),
        Command::LzsmAmp(a) => run(a, Some(Experiment::LzsmAmp), stdout),
        Command::LzsmFreq(a) => run(a, Some(Experiment::LzsmFreq), stdout),
        Command::Latching(a) => run(a, Some(Experiment::Latching), stdout),
        Command::Motional(a) => run(a, Some(Experiment::Motional), stdout),
        Command::AnalyticRabi(a) => run(a, Some(Experiment::AnalyticRabi), stdout),
        Command::AnalyticLorentzian(a) => run(a, Some(Experiment::AnalyticLorentzian), stdout),
        Command::Validate(a) => {
            let mut src = a.source.clone();
            if a.path.is_some() {
                src.config = a.path.clone();
            }
            let cfg = load(&src, None)?;
            say(stdout, &describe(&cfg)?)
        }
        Command::Presets(a) => match &a.show {
            Some(name) => {
                let cfg = presets::get(name)?;
                let text = if a.toml { cfg.to_toml()? } else { cfg.to_json() };
                say(stdout, text.trim_end())
            }
            None => {
                for name in presets::NAMES {
                    let cfg = presets::get(name)?;
                    say(stdout, &format!("{name:<16} {}", cfg.experiment))?;
                }
                Ok(())
            }
        },
        Command::Realize(a) => realize_switches(a, stdout),
    }
}
