//! Double passage through the avoided crossing, integrated directly and
//! compared with the adiabatic-impulse formula.

use std::f64::consts::PI;

use twinosc_core::analytic::{
    crossing_times, dynamical_phase, lz_params, stokes_phase, stuckelberg_double_passage,
};
use twinosc_core::drive::{realize, DriveSpec};
use twinosc_core::dynamics::{integrate_schrodinger_with, IntegratorConfig};
use twinosc_core::model::QubitParams;
use twinosc_core::observables::{from_eigenbasis, upper_occupation};
use twinosc_core::Complex;

/// Starts in the lower adiabatic state at the bias maximum before the two
/// crossings and reads the upper adiabatic occupation at the next maximum.
fn simulated(q: &QubitParams, eps0: f64, a: f64, w: f64) -> f64 {
    let t_a = 0.5 * PI / w;
    let t_b = 2.5 * PI / w;
    let r = realize(&DriveSpec::sinusoidal(eps0, a, w), t_b).unwrap();
    let e_a = eps0 + a;
    let init = from_eigenbasis(Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), q, e_a);
    let cfg = IntegratorConfig::default()
        .with_tolerances(1e-11, 1e-13)
        .with_stride(t_b - t_a);
    let (end, _) = integrate_schrodinger_with(q, &r, init, (t_a, t_b), &cfg, |_, _| {}).unwrap();
    upper_occupation(&end, q, e_a, false)
}

#[test]
fn formula_tracks_simulation() {
    let q = QubitParams::reduced(1.0, 0.0).unwrap();
    let a = 40.0;
    for &(w, eps0) in &[(0.05, 3.1), (0.02, -7.3), (0.01, 11.0), (0.0125, 0.4), (0.03, 20.0)] {
        let (t1, t2) = crossing_times(eps0, a, w).unwrap();
        let f = stuckelberg_double_passage(&q, eps0, a, w, t1, t2).unwrap();
        let s = simulated(&q, eps0, a, w);
        assert!((f - s).abs() < 0.01, "w={w} eps0={eps0}: formula {f} vs simulated {s}");
    }
}

/// Fits the phase offset `x` in `4P(1-P) sin²(ζ + x)` at fixed adiabaticity.
fn fitted_offset(delta_adiab: f64) -> f64 {
    let q = QubitParams::reduced(1.0, 0.0).unwrap();
    let a = 60.0;
    let v = 1.0 / (4.0 * delta_adiab);
    let mut cases = Vec::new();
    for k in 0..8 {
        let eps0 = -28.0 + 7.0 * k as f64 + 0.37;
        let w = v / (a * (1.0 - (eps0 / a).powi(2)).sqrt());
        let (t1, t2) = crossing_times(eps0, a, w).unwrap();
        let lz = lz_params(&q, a, w, eps0).unwrap();
        assert!((lz.delta_adiab - delta_adiab).abs() < 1e-12);
        let p = lz.probability();
        let zeta = dynamical_phase(&q, eps0, a, w, t1, t2);
        cases.push((4.0 * p * (1.0 - p), zeta, simulated(&q, eps0, a, w)));
    }
    let cost = |x: f64| -> f64 {
        cases
            .iter()
            .map(|&(amp, zeta, s)| (amp * (zeta + x).sin().powi(2) - s).powi(2) / (amp * amp))
            .sum()
    };
    // sin² has period π: search one period, then refine
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..2000 {
        let x = -PI + PI * k as f64 / 2000.0;
        let c = cost(x);
        if c < best.0 {
            best = (c, x);
        }
    }
    best.1
}

#[test]
fn stokes_phase_matches_fit_at_unit_adiabaticity() {
    for &d in &[0.3, 1.0] {
        let fit = fitted_offset(d);
        let model = stokes_phase(d) + 0.5 * PI;
        let diff = (fit - model).rem_euclid(PI);
        let diff = diff.min(PI - diff);
        assert!(diff < 0.05, "delta={d}: fitted {fit}, model {model}");
    }
}
