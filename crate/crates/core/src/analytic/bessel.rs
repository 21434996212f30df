//! Bessel functions of the first kind and integer order.

#[allow(unused_imports)] // shadowed when std is in the build graph
use num_traits::Float;

use core::f64::consts::PI;

/// Above `max(ASYMPTOTIC_MIN_X, ASYMPTOTIC_K2_FACTOR * k²)` the Hankel
/// expansion is used; below it, Miller's downward recurrence.
pub const ASYMPTOTIC_MIN_X: f64 = 200.0;
pub const ASYMPTOTIC_K2_FACTOR: f64 = 4.0;

/// `J_k(x)` for integer `k >= 0`.
///
/// Absolute error below 1e-13 for `k <= 20`, `|x| <= 50` (checked against
/// an exact rational series in the tests).
pub fn bessel_j(k: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_j(k, -x);
        return if k % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    if x >= ASYMPTOTIC_MIN_X.max(ASYMPTOTIC_K2_FACTOR * kf * kf) {
        return hankel_asymptotic(k, x);
    }
    miller(k, x)
}

/// `J_k(x)` for any integer order, using `J_{-k} = (-1)^k J_k`.
pub fn bessel_j_signed(k: i64, x: f64) -> f64 {
    let v = bessel_j(k.unsigned_abs() as u32, x);
    if k < 0 && k % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Leading oscillating term `sqrt(2/(πx)) cos(x - (2k+1)π/4)`.
pub fn bessel_j_leading_asymptote(k: u32, x: f64) -> f64 {
    (2.0 / (PI * x)).sqrt() * (x - (2.0 * k as f64 + 1.0) * PI / 4.0).cos()
}

fn miller(k: u32, x: f64) -> f64 {
    let top = x.max(k as f64);
    let mut n = (top + 20.0 + 10.0 * top.sqrt()) as u32;
    n += n % 2;
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{m+1}
    let mut cur = 1e-300; // J_m, arbitrary seed
    let mut norm = 0.0;
    let mut wanted = 0.0;
    let mut m = n;
    loop {
        if m == k {
            wanted = cur;
        }
        if m % 2 == 0 {
            norm += if m == 0 { cur } else { 2.0 * cur };
        }
        if m == 0 {
            break;
        }
        let prev = m as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        m -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    wanted / norm
}

fn hankel_asymptotic(k: u32, x: f64) -> f64 {
    let mu = 4.0 * (k as f64) * (k as f64);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev_abs = f64::INFINITY;
    for m in 1..200u32 {
        let odd = (2 * m - 1) as f64;
        term *= (mu - odd * odd) / (m as f64 * 8.0 * x);
        let a = term.abs();
        if a > prev_abs || a < 1e-17 {
            break;
        }
        prev_abs = a;
        match m % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = x - (0.5 * k as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
