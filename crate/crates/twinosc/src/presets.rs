//! Built-in run configurations.
//!
//! Reduced presets use Δ = 1. Axis ranges and grid sizes are choices of
//! this crate; the remaining values are listed next to each preset.

use std::f64::consts::PI;

use twinosc_core::analytic::ResonanceReference;
use twinosc_core::model::{carrier_frequency, reduce_to_qubit, OscillatorParams};
use twinosc_core::sweep::{ModelKind, Window};

use crate::config::{
    Axis, DriveConfig, Experiment, IntegratorSettings, OutputFormat, Quantity, RunConfig, SweepConfig,
    System, TrajectoryConfig, SCHEMA_VERSION,
};
use crate::error::CliError;

pub const NAMES: [&str; 10] = [
    "fig2-rabi",
    "fig3a",
    "fig3b",
    "fig3c",
    "fig4-freq",
    "fig5-latching",
    "fig6-motional",
    "faust12-like",
    "lz-sweep",
    "double-passage",
];

/// Preset used by an experiment subcommand when no config is given.
pub fn default_for(e: Experiment) -> &'static str {
    match e {
        Experiment::Rabi | Experiment::AnalyticRabi => "fig2-rabi",
        Experiment::LzSingle => "lz-sweep",
        Experiment::Stuckelberg => "double-passage",
        Experiment::LzsmAmp | Experiment::AnalyticLorentzian => "fig3a",
        Experiment::LzsmFreq => "fig4-freq",
        Experiment::Latching => "fig5-latching",
        Experiment::Motional => "fig6-motional",
    }
}

pub fn get(name: &str) -> Result<RunConfig, CliError> {
    let cfg = match name {
        "fig2-rabi" => fig2_rabi(),
        "fig3a" => lzsm_amplitude(name, 2.0, 0.02, 50.0),
        "fig3b" => lzsm_amplitude(name, 1.0 / 3.0, 0.1, 8.0),
        "fig3c" => lzsm_amplitude(name, 1.0 / 3.0, 1.0, 1.0),
        "fig4-freq" => fig4_freq(),
        "fig5-latching" => fig5_latching(),
        "fig6-motional" => fig6_motional(),
        "faust12-like" => faust12_like(),
        "lz-sweep" => lz_sweep(),
        "double-passage" => double_passage(),
        _ => {
            return Err(CliError::Config(format!(
                "unknown preset `{name}`; available: {}",
                NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}

fn base(name: &str, experiment: Experiment, system: System) -> RunConfig {
    RunConfig {
        version: SCHEMA_VERSION,
        name: Some(name.to_string()),
        experiment,
        model: None,
        system,
        drive: DriveConfig::default(),
        trajectory: TrajectoryConfig::default(),
        sweep: None,
        integrator: IntegratorSettings::default(),
        seed: 0,
        renormalize: false,
        format: OutputFormat::Csv,
    }
}

fn reduced(gamma: f64, carrier: Option<f64>) -> System {
    System::Reduced {
        delta: 1.0,
        gamma: Quantity(gamma),
        carrier,
    }
}

fn range(start: f64, stop: f64, points: usize) -> Axis {
    Axis::Range { start, stop, points }
}

fn sweep(x: Axis, y: Axis, window: Window) -> SweepConfig {
    SweepConfig {
        x,
        y,
        window,
        t_start: 0.0,
        realizations: twinosc_core::sweep::DEFAULT_REALIZATIONS,
        carrier_ratio: twinosc_core::sweep::DEFAULT_CARRIER_RATIO,
        failure_budget: twinosc_core::sweep::DEFAULT_FAILURE_BUDGET,
        closed_form_segments: true,
    }
}

/// Resonant weak driving: ε0 = 5Δ, ω = ω0 = sqrt(26) Δ, A = 0.7 ω,
/// γ = 0.006 ω, exact-model carrier Ω0 = 100 ω.
fn fig2_rabi() -> RunConfig {
    let omega = 26f64.sqrt();
    let mut c = base("fig2-rabi", Experiment::Rabi, reduced(0.006 * omega, Some(100.0 * omega)));
    c.drive.eps0 = Quantity(5.0);
    c.drive.amplitude = Quantity(0.7 * omega);
    c.drive.omega = Quantity(omega);
    c.trajectory = TrajectoryConfig {
        t_start: None,
        t_end: Some(200.0),
        stride: Some(0.05),
        models: vec![ModelKind::Exact, ModelKind::Schrodinger, ModelKind::Analytic],
        k: Some(1),
        // ω equals the splitting, not |ε0|
        resonance: ResonanceReference::Splitting,
        carrier_ratio: None,
    };
    c.integrator.rel_tol = Some(1e-9);
    c.integrator.abs_tol = Some(1e-11);
    c
}

/// Occupation against ε0 and A at fixed ω, with γ = `gamma_per_period` · ω/2π
/// and an averaging window of `periods` drive periods:
/// ω/Δ = 2, 0.02, 50 (fast driving); ω/Δ = 1/3, 0.1, 8 (slow driving);
/// ω/Δ = 1/3, 1, 1 (strong damping).
fn lzsm_amplitude(name: &str, omega: f64, gamma_per_period: f64, periods: f64) -> RunConfig {
    let mut c = base(name, Experiment::LzsmAmp, reduced(gamma_per_period * omega / (2.0 * PI), None));
    c.drive.omega = Quantity(omega);
    // fast driving: up to the second antinode of J1 at A/ω ≈ 5.3
    let (x_reach, a_reach) = if omega > 1.0 { (5.0 * omega, 6.0 * omega) } else { (30.0 * omega, 30.0 * omega) };
    c.sweep = Some(sweep(
        range(-x_reach, x_reach, 101),
        range(0.0, a_reach, 101),
        Window::DrivePeriods(periods),
    ));
    c
}

/// Occupation against ε0 and ω at fixed A = 10Δ; γΔt ≈ 0.1.
fn fig4_freq() -> RunConfig {
    let a = 10.0;
    let mut c = base("fig4-freq", Experiment::LzsmFreq, reduced(5e-4, None));
    c.drive.amplitude = Quantity(a);
    c.sweep = Some(sweep(
        range(-1.5 * a, 1.5 * a, 101),
        range(0.05 * a, a, 101),
        Window::Time(200.0),
    ));
    c
}

/// Rectangular driving at A = 20Δ against ε0 and ω; γΔt = 0.2.
fn fig5_latching() -> RunConfig {
    let a = 20.0;
    let mut c = base("fig5-latching", Experiment::Latching, reduced(2e-4, None));
    c.drive.amplitude = Quantity(a);
    c.sweep = Some(sweep(
        range(-3.0 * a, 3.0 * a, 151),
        range(0.01 * a, a, 100),
        Window::Time(1000.0),
    ));
    c
}

/// Telegraph driving at A = 200Δ for jump rates from 0.1A to 5A,
/// 100 realizations per cell. The even point count keeps ε0 = 0 off the grid.
fn fig6_motional() -> RunConfig {
    let a = 200.0;
    let mut c = base("fig6-motional", Experiment::Motional, reduced(3e-3, None));
    c.drive.amplitude = Quantity(a);
    c.seed = 1;
    c.sweep = Some(sweep(
        range(-2.0 * a, 2.0 * a, 60),
        Axis::Values([0.1, 0.25, 0.5, 1.0, 2.0, 5.0].iter().map(|r| r * a).collect()),
        Window::Time(100.0),
    ));
    c
}

/// Micromechanical pair: m = 1e-15 kg, k0 = 3 N/m, kc = 0.003 N/m,
/// γ = 80 Hz·2π. Mass is taken in kg, which gives Ω0 ≈ 5.5e7 rad/s and
/// Δ ≈ 5.5e4 rad/s. Sinusoidal sweep at ω = 2Δ, frequencies in rad/s.
fn faust12_like() -> RunConfig {
    let p = OscillatorParams {
        m: 1e-15,
        k0: 3.0,
        kc: 0.003,
        gamma: 80.0 * 2.0 * PI,
    };
    debug_assert!(carrier_frequency(&p) > 5e7);
    let (q, _) = reduce_to_qubit(&p).expect("preset parameters are valid");
    let system = System::Physical {
        m: p.m,
        k0: p.k0,
        kc: p.kc,
        gamma: Quantity(p.gamma),
    };
    let mut c = base("faust12-like", Experiment::LzsmAmp, system);
    let omega = 2.0 * q.delta;
    c.drive.omega = Quantity(omega);
    c.sweep = Some(sweep(
        range(-10.0 * q.delta, 10.0 * q.delta, 41),
        range(0.0, 10.0 * q.delta, 41),
        Window::DrivePeriods(50.0),
    ));
    c
}

/// Single linear passage from ε = -50Δ to +50Δ at rate v = Δ² (δ = 1/4), no damping.
fn lz_sweep() -> RunConfig {
    let mut c = base("lz-sweep", Experiment::LzSingle, reduced(0.0, None));
    c.drive.rate = 1.0;
    c.drive.t_center = Some(50.0);
    c.trajectory.t_end = Some(100.0);
    c.trajectory.stride = Some(0.05);
    c.integrator.rel_tol = Some(1e-10);
    c.integrator.abs_tol = Some(1e-12);
    c
}

/// One drive period through two crossings: ε0 = 3.1Δ, A = 40Δ, ω = 0.05Δ, no damping.
fn double_passage() -> RunConfig {
    let mut c = base("double-passage", Experiment::Stuckelberg, reduced(0.0, None));
    c.drive.eps0 = Quantity(3.1);
    c.drive.amplitude = Quantity(40.0);
    c.drive.omega = Quantity(0.05);
    c.trajectory.stride = Some(0.1);
    c.integrator.rel_tol = Some(1e-11);
    c.integrator.abs_tol = Some(1e-13);
    c
}
