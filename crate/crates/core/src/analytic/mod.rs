//! Closed-form results for the driven two-level problem.
//!
//! These serve both as standalone outputs and as oracles for the
//! integrators: level structure and eigenbasis rotation, the Landau-Zener
//! probability, the Stückelberg double-passage formula, multi-photon Rabi
//! oscillations and the time-averaged occupation as a sum of Lorentzians.

mod bessel;
mod special;

pub use bessel::{
    bessel_j, bessel_j_leading_asymptote, bessel_j_signed, ASYMPTOTIC_K2_FACTOR, ASYMPTOTIC_MIN_X,
};
pub use special::{integrate as adaptive_simpson, ln_gamma};

use alloc::format;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed when std is in the build graph
use num_traits::Float;

use crate::error::invalid;
use crate::model::QubitParams;
use crate::{Complex, Error, Result};

/// Level structure of the static Hamiltonian `(Δ/2) σx + (ε0/2) σz`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Eigenstructure {
    /// `ω0 = sqrt(Δ² + ε0²)`.
    pub omega_qubit: f64,
    /// Upper-mode oscillation frequency `Ω+ = Ω0 - ω0/2`.
    pub omega_plus: f64,
    /// `Ω- = Ω0 + ω0/2`.
    pub omega_minus: f64,
    /// `θ = atan2(Δ, ε0)`, in `(0, π)` for `Δ > 0`.
    pub mixing_angle: f64,
}

impl Eigenstructure {
    pub fn gap(&self) -> f64 {
        self.omega_qubit
    }
}

pub fn eigenstructure(q: &QubitParams, eps0: f64) -> Eigenstructure {
    let w = q.delta.hypot(eps0);
    Eigenstructure {
        omega_qubit: w,
        omega_plus: q.omega0_carrier - 0.5 * w,
        omega_minus: q.omega0_carrier + 0.5 * w,
        mixing_angle: q.delta.atan2(eps0),
    }
}

/// Adiabaticity and sweep rate of a single crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LzParams {
    /// `δ = Δ² / (4 v)`.
    pub delta_adiab: f64,
    /// Sweep rate at the crossing, rad/s².
    pub v: f64,
}

impl LzParams {
    pub fn from_rate(delta: f64, v: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid("v", format!("sweep rate must be > 0, got {v}")));
        }
        Ok(LzParams {
            delta_adiab: delta * delta / (4.0 * v),
            v,
        })
    }

    /// `P_LZ = exp(-2πδ)`.
    pub fn probability(&self) -> f64 {
        (-2.0 * PI * self.delta_adiab).exp()
    }
}

/// Crossing parameters of `ε(t) = ε0 + A sin(ωt)`: `v = Aω sqrt(1 - (ε0/A)²)`.
pub fn lz_params(q: &QubitParams, amplitude: f64, omega: f64, eps0: f64) -> Result<LzParams> {
    if !(eps0.abs() < amplitude) {
        return Err(Error::CrossingNotReached { eps0, amplitude });
    }
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be > 0"));
    }
    let r = eps0 / amplitude;
    LzParams::from_rate(q.delta, amplitude * omega * (1.0 - r * r).sqrt())
}

/// Single-passage Landau-Zener probability for the sinusoidal drive.
pub fn lz_probability(q: &QubitParams, amplitude: f64, omega: f64, eps0: f64) -> Result<f64> {
    Ok(lz_params(q, amplitude, omega, eps0)?.probability())
}

/// Stokes phase `-π/4 + δ(ln δ - 1) + arg Γ(1 - iδ)`.
///
/// Runs from `-π/4` in the sudden limit to `-π/2` in the adiabatic one.
pub fn stokes_phase(delta_adiab: f64) -> f64 {
    if delta_adiab <= 0.0 {
        return -PI / 4.0;
    }
    let d = delta_adiab;
    -PI / 4.0 + d * (d.ln() - 1.0) + ln_gamma(Complex::new(1.0, -d)).im
}

/// Consecutive zeros `t1 < t2` of `ε0 + A sin(ωt)` bracketing the
/// negative-bias half of the first period.
pub fn crossing_times(eps0: f64, amplitude: f64, omega: f64) -> Result<(f64, f64)> {
    if !(eps0.abs() < amplitude) {
        return Err(Error::CrossingNotReached { eps0, amplitude });
    }
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be > 0"));
    }
    let s = (eps0 / amplitude).asin();
    Ok(((PI + s) / omega, (2.0 * PI - s) / omega))
}

/// Dynamical phase `½ ∫ sqrt(Δ² + ε(t)²) dt` between `t1` and `t2`.
pub fn dynamical_phase(q: &QubitParams, eps0: f64, amplitude: f64, omega: f64, t1: f64, t2: f64) -> f64 {
    let f = |t: f64| q.delta.hypot(eps0 + amplitude * (omega * t).sin());
    let scale = (q.delta + eps0.abs() + amplitude) * (t2 - t1).abs();
    0.5 * adaptive_simpson(&f, t1, t2, 1e-13 * scale.max(1e-300))
}

/// Stückelberg phase `Φ_St = ζ + φ̃_S + π/2` for the crossings at `t1`, `t2`.
///
/// `ζ` is [`dynamical_phase`] and `φ̃_S` is [`stokes_phase`]. With `φ̃_S`
/// running from `-π/4` to `-π/2`, the quarter-turn offset is what makes
/// `4P(1-P) sin² Φ_St` agree with direct integration of a double passage.
pub fn stuckelberg_phase(
    q: &QubitParams,
    eps0: f64,
    amplitude: f64,
    omega: f64,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let lz = lz_params(q, amplitude, omega, eps0)?;
    Ok(dynamical_phase(q, eps0, amplitude, omega, t1, t2) + stokes_phase(lz.delta_adiab) + 0.5 * PI)
}

/// Double-passage occupation `4 P (1 - P) sin² Φ_St`.
pub fn stuckelberg_double_passage(
    q: &QubitParams,
    eps0: f64,
    amplitude: f64,
    omega: f64,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    if !(t1 < t2) {
        return Err(invalid("t1", "crossing times must satisfy t1 < t2"));
    }
    let p = lz_probability(q, amplitude, omega, eps0)?;
    let phi = stuckelberg_phase(q, eps0, amplitude, omega, t1, t2)?;
    let s = phi.sin();
    Ok(4.0 * p * (1.0 - p) * s * s)
}

/// Renormalised coupling `Δ_k = Δ J_k(A/ω)`.
pub fn dressed_coupling(q: &QubitParams, amplitude: f64, omega: f64, k: i64) -> f64 {
    q.delta * bessel_j_signed(k, amplitude / omega)
}

/// Level spacing that the `k`-photon energy `kω` is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ResonanceReference {
    /// `|ε0|`, the diabatic spacing; accurate for `Δ ≪ |ε0|`.
    #[default]
    Bias,
    /// `ω0 = sqrt(Δ² + ε0²)`, the static level splitting.
    Splitting,
}

/// Detuning `kω - E` of the k-th resonance, `E` chosen by `reference`.
pub fn detuning(q: &QubitParams, eps0: f64, omega: f64, k: u32, reference: ResonanceReference) -> f64 {
    let spacing = match reference {
        ResonanceReference::Bias => eps0.abs(),
        ResonanceReference::Splitting => q.delta.hypot(eps0),
    };
    k as f64 * omega - spacing
}

/// Rabi frequency `sqrt(Δ_k² + (kω - |ε0|)²)` near the k-th resonance.
pub fn rabi_frequency(q: &QubitParams, eps0: f64, amplitude: f64, omega: f64, k: u32) -> f64 {
    rabi_frequency_with(q, eps0, amplitude, omega, k, ResonanceReference::Bias)
}

/// [`rabi_frequency`] with a selectable resonance reference.
pub fn rabi_frequency_with(
    q: &QubitParams,
    eps0: f64,
    amplitude: f64,
    omega: f64,
    k: u32,
    reference: ResonanceReference,
) -> f64 {
    let dk = dressed_coupling(q, amplitude, omega, k as i64);
    dk.hypot(detuning(q, eps0, omega, k, reference))
}

/// Occupation of the upper mode near the k-th multi-photon resonance.
///
/// With `damped`, the result carries the factor `exp(-γt)`.
pub fn rabi_occupation(
    q: &QubitParams,
    eps0: f64,
    amplitude: f64,
    omega: f64,
    k: u32,
    t: f64,
    damped: bool,
) -> Result<f64> {
    rabi_occupation_with(q, eps0, amplitude, omega, k, t, damped, ResonanceReference::Bias)
}

/// [`rabi_occupation`] with a selectable resonance reference.
#[allow(clippy::too_many_arguments)]
pub fn rabi_occupation_with(
    q: &QubitParams,
    eps0: f64,
    amplitude: f64,
    omega: f64,
    k: u32,
    t: f64,
    damped: bool,
    reference: ResonanceReference,
) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "resonance index must be >= 1"));
    }
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be > 0"));
    }
    let dk = dressed_coupling(q, amplitude, omega, k as i64);
    let wr = rabi_frequency_with(q, eps0, amplitude, omega, k, reference);
    if wr == 0.0 {
        return Ok(0.0);
    }
    let mut p = 0.5 * (dk * dk) / (wr * wr) * (1.0 - (wr * t).cos());
    if damped {
        p *= (-q.gamma * t).exp();
    }
    Ok(p)
}

/// Default truncation `ceil((|ε0| + A)/ω) + 5` of the Lorentzian series.
pub fn default_k_max(eps0: f64, amplitude: f64, omega: f64) -> u32 {
    ((eps0.abs() + amplitude) / omega).ceil() as u32 + 5
}

/// Time-averaged occupation as a sum of Lorentzians over `k = 1..=k_max`.
pub fn lorentzian_average(
    q: &QubitParams,
    eps0: f64,
    amplitude: f64,
    omega: f64,
    k_max: Option<u32>,
) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be > 0"));
    }
    let k_max = k_max.unwrap_or_else(|| default_k_max(eps0, amplitude, omega));
    if k_max == 0 {
        return Err(invalid("k_max", "must be >= 1"));
    }
    let e = eps0.abs();
    let g2 = q.gamma * q.gamma;
    let mut sum = 0.0;
    for k in 1..=k_max {
        let dk = dressed_coupling(q, amplitude, omega, k as i64);
        let d2 = dk * dk;
        let det = k as f64 * omega - e;
        let den = d2 + det * det + g2;
        if den > 0.0 {
            sum += d2 / den;
        }
    }
    Ok(sum)
}
