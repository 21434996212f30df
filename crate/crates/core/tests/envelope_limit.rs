//! The second-order envelope equation approaches the first-order dynamics
//! as the carrier frequency grows.

use twinosc_core::drive::{realize, DriveSpec};
use twinosc_core::dynamics::{
    exact_initial_state, integrate_exact_with, integrate_schrodinger_with, IntegratorConfig,
};
use twinosc_core::model::QubitParams;
use twinosc_core::observables::{from_eigenbasis, upper_occupation};
use twinosc_core::Complex;

fn worst_gap(carrier_over_omega: f64) -> f64 {
    let (delta, gamma, eps0): (f64, f64, f64) = (1.0, 0.01, 2.0);
    let omega = delta.hypot(eps0);
    let q = QubitParams::reduced(delta, gamma).unwrap();
    let r = realize(&DriveSpec::sinusoidal(eps0, 0.7 * omega, omega), 25.0).unwrap();
    let init = from_eigenbasis(Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), &q, eps0);
    let cfg = IntegratorConfig::default().with_tolerances(1e-11, 1e-13).with_stride(0.05);

    let mut reference = Vec::new();
    integrate_schrodinger_with(&q, &r, init, (0.0, 25.0), &cfg, |_, s| {
        reference.push(upper_occupation(s, &q, eps0, false))
    })
    .unwrap();

    let qc = q.with_carrier(carrier_over_omega * omega).unwrap();
    let start = exact_initial_state(&qc, &r, 0.0, init).unwrap();
    let mut k = 0;
    let mut worst: f64 = 0.0;
    integrate_exact_with(&qc, &r, start, (0.0, 25.0), &cfg, |_, s| {
        worst = worst.max((upper_occupation(&s.psi, &qc, eps0, false) - reference[k]).abs());
        k += 1;
    })
    .unwrap();
    assert_eq!(k, reference.len());
    worst
}

#[test]
fn deviation_shrinks_with_carrier() {
    let gaps: Vec<f64> = [25.0, 50.0, 100.0].iter().map(|&c| worst_gap(c)).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    // first order in ω/Ω0
    let ratio = gaps[1] / gaps[2];
    assert!((1.5..3.0).contains(&ratio), "{gaps:?}");
    assert!(gaps[2] < 0.02, "{gaps:?}");
}
