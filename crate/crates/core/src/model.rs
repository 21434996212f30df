//! Physical oscillator parameters and their reduction to two-level form.
//!
//! Two identical oscillators of mass `m` and damping `gamma`, with spring
//! constants `k0 ± dk(t)` and a coupling spring `kc`, map onto a two-level
//! problem with tunnelling amplitude `delta = kc / (m Ω0)` and bias
//! `eps = dk / (m Ω0)`, where `Ω0 = sqrt((k0 + kc) / m)` is the carrier.
//! All reduced quantities are angular frequencies (rad/s).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed when std is in the build graph
use num_traits::Float;

use crate::error::invalid;
use crate::Result;

/// Coupling ratio `kc / k0` above which the weak-coupling warning fires.
pub const WEAK_COUPLING_WARN_RATIO: f64 = 0.01;

/// Default sanity bound on `gamma / delta`.
pub const DEFAULT_GAMMA_OVER_DELTA_BOUND: f64 = 1e3;

/// Raw parameters of the two-oscillator system (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OscillatorParams {
    /// Mass, kg.
    pub m: f64,
    /// Base spring constant, N/m.
    pub k0: f64,
    /// Coupling spring constant, N/m.
    pub kc: f64,
    /// Damping rate, 1/s.
    pub gamma: f64,
}

impl OscillatorParams {
    pub fn new(m: f64, k0: f64, kc: f64, gamma: f64) -> Result<Self> {
        let p = OscillatorParams { m, k0, kc, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(invalid("m", format!("mass must be finite and > 0, got {}", self.m)));
        }
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return Err(invalid("k0", format!("must be finite and > 0, got {}", self.k0)));
        }
        if !(self.kc > 0.0 && self.kc.is_finite()) {
            return Err(invalid("kc", format!("must be finite and > 0, got {}", self.kc)));
        }
        if self.kc >= self.k0 {
            return Err(invalid(
                "kc",
                format!("weak coupling requires kc < k0 ({} >= {})", self.kc, self.k0),
            ));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be finite and >= 0, got {}", self.gamma)));
        }
        let omega0 = carrier_frequency(self);
        if self.gamma >= omega0 {
            return Err(invalid(
                "gamma",
                format!("damping {} must stay below the carrier {}", self.gamma, omega0),
            ));
        }
        Ok(())
    }

    /// Non-fatal remarks about the parameter set.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.kc > WEAK_COUPLING_WARN_RATIO * self.k0 {
            w.push(format!(
                "kc/k0 = {:.3e} exceeds {} (coupling not weak)",
                self.kc / self.k0,
                WEAK_COUPLING_WARN_RATIO
            ));
        }
        w
    }

    /// Multiplies mass and all spring constants by `c`.
    pub fn rescaled(&self, c: f64) -> Self {
        OscillatorParams {
            m: self.m * c,
            k0: self.k0 * c,
            kc: self.kc * c,
            gamma: self.gamma,
        }
    }
}

/// Reduced two-level parameters in rad/s.
///
/// `omega0_carrier` may be `+inf` for purely reduced (dimensionless) work,
/// where no carrier is attached; only the exact envelope model needs it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QubitParams {
    pub delta: f64,
    pub gamma: f64,
    pub omega0_carrier: f64,
}

impl QubitParams {
    pub fn new(delta: f64, gamma: f64, omega0_carrier: f64) -> Result<Self> {
        Self::with_gamma_bound(delta, gamma, omega0_carrier, DEFAULT_GAMMA_OVER_DELTA_BOUND)
    }

    /// Reduced-unit parameters without a carrier.
    pub fn reduced(delta: f64, gamma: f64) -> Result<Self> {
        Self::new(delta, gamma, f64::INFINITY)
    }

    pub fn with_gamma_bound(
        delta: f64,
        gamma: f64,
        omega0_carrier: f64,
        gamma_over_delta_bound: f64,
    ) -> Result<Self> {
        // delta = 0 is allowed: the decoupled limit is a legitimate test case
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(invalid("delta", format!("must be finite and >= 0, got {delta}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be finite and >= 0, got {gamma}")));
        }
        if !(omega0_carrier > 0.0) || omega0_carrier.is_nan() {
            return Err(invalid(
                "omega0_carrier",
                format!("must be > 0, got {omega0_carrier}"),
            ));
        }
        if delta >= omega0_carrier {
            return Err(invalid(
                "delta",
                format!("slow envelope requires delta < carrier ({delta} >= {omega0_carrier})"),
            ));
        }
        if delta > 0.0 && gamma >= delta * gamma_over_delta_bound {
            return Err(invalid(
                "gamma",
                format!("gamma/delta = {} exceeds bound {gamma_over_delta_bound}", gamma / delta),
            ));
        }
        Ok(QubitParams {
            delta,
            gamma,
            omega0_carrier,
        })
    }

    pub fn with_carrier(self, omega0_carrier: f64) -> Result<Self> {
        Self::new(self.delta, self.gamma, omega0_carrier)
    }

    pub fn has_carrier(&self) -> bool {
        self.omega0_carrier.is_finite()
    }
}

/// Thresholds for the slow-envelope regime check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    pub omega_over_carrier: f64,
    pub gamma_over_carrier: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            omega_over_carrier: 0.1,
            gamma_over_carrier: 0.01,
        }
    }
}

/// Outcome of the slow-envelope regime check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegimeReport {
    pub ratio_omega_over_omega0: f64,
    pub ratio_gamma_over_omega0: f64,
    pub valid: bool,
    pub messages: Vec<String>,
}

impl RegimeReport {
    /// Checks an envelope frequency `omega` and damping against the carrier.
    pub fn evaluate(omega: f64, gamma: f64, carrier: f64, th: RegimeThresholds) -> Self {
        let ro = omega.abs() / carrier;
        let rg = gamma / carrier;
        let mut messages = Vec::new();
        if !(ro < th.omega_over_carrier) {
            messages.push(format!(
                "envelope frequency / carrier = {ro:.3e} is not below {}",
                th.omega_over_carrier
            ));
        }
        if !(rg < th.gamma_over_carrier) {
            messages.push(format!(
                "gamma / carrier = {rg:.3e} is not below {}",
                th.gamma_over_carrier
            ));
        }
        RegimeReport {
            ratio_omega_over_omega0: ro,
            ratio_gamma_over_omega0: rg,
            valid: messages.is_empty(),
            messages,
        }
    }
}

/// Carrier frequency `sqrt((k0 + kc) / m)` in rad/s.
pub fn carrier_frequency(p: &OscillatorParams) -> f64 {
    ((p.k0 + p.kc) / p.m).sqrt()
}

/// Tunnelling amplitude through the small-coupling approximation `kc / sqrt(m k0)`.
pub fn delta_approx(p: &OscillatorParams) -> f64 {
    p.kc / (p.m * p.k0).sqrt()
}

/// Reduces the oscillator pair to two-level parameters.
pub fn reduce_to_qubit(p: &OscillatorParams) -> Result<(QubitParams, RegimeReport)> {
    p.validate()?;
    let omega0 = carrier_frequency(p);
    let delta = p.kc / (p.m * omega0);
    let q = QubitParams::new(delta, p.gamma, omega0)?;
    let mut report = RegimeReport::evaluate(delta, p.gamma, omega0, RegimeThresholds::default());
    report.messages.extend(p.warnings());
    Ok((q, report))
}

/// Bias (rad/s) produced by a spring detuning `dk` (N/m).
pub fn bias_from_detuning(dk: f64, p: &OscillatorParams) -> Result<f64> {
    if !dk.is_finite() || dk.abs() >= p.k0 {
        return Err(invalid(
            "dk",
            format!("|dk| = {} must stay below k0 = {} (negative spring)", dk.abs(), p.k0),
        ));
    }
    Ok(dk / (p.m * carrier_frequency(p)))
}

/// Inverse of [`bias_from_detuning`].
pub fn detuning_from_bias(eps: f64, p: &OscillatorParams) -> f64 {
    eps * p.m * carrier_frequency(p)
}
