//! Bias waveforms `eps(t) = eps0 + eps1(t)`.
//!
//! A [`DriveSpec`] is declarative; [`realize`] turns it into a
//! [`DriveRealization`] over a finite horizon. Only the telegraph variant
//! carries randomness, drawn once from its seed at realization time.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed when std is in the build graph
use num_traits::Float;

use crate::error::invalid;
use crate::rng::SeededStream;
use crate::{Error, Result};

/// Time-dependent part of the bias.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum DriveVariant {
    Constant,
    /// `A sin(omega t)`.
    Sinusoidal { amplitude: f64, omega: f64 },
    /// `A sgn(sin(omega t))` with `sgn(0) = +1`.
    Rectangular { amplitude: f64, omega: f64 },
    /// Two-valued `±A` with exponential dwell times of mean `1/chi`.
    Telegraph {
        amplitude: f64,
        chi: f64,
        seed: u64,
        /// Start on the `-A` branch instead of `+A`.
        #[cfg_attr(feature = "serde", serde(default))]
        start_negative: bool,
    },
    /// `v (t - t_center)`.
    LinearSweep { rate: f64, t_center: f64 },
}

/// Declarative drive: static bias plus a variant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriveSpec {
    pub eps0: f64,
    pub variant: DriveVariant,
}

impl DriveSpec {
    pub fn constant(eps0: f64) -> Self {
        DriveSpec {
            eps0,
            variant: DriveVariant::Constant,
        }
    }

    pub fn sinusoidal(eps0: f64, amplitude: f64, omega: f64) -> Self {
        DriveSpec {
            eps0,
            variant: DriveVariant::Sinusoidal { amplitude, omega },
        }
    }

    pub fn rectangular(eps0: f64, amplitude: f64, omega: f64) -> Self {
        DriveSpec {
            eps0,
            variant: DriveVariant::Rectangular { amplitude, omega },
        }
    }

    pub fn telegraph(eps0: f64, amplitude: f64, chi: f64, seed: u64) -> Self {
        DriveSpec {
            eps0,
            variant: DriveVariant::Telegraph {
                amplitude,
                chi,
                seed,
                start_negative: false,
            },
        }
    }

    pub fn linear_sweep(eps0: f64, rate: f64, t_center: f64) -> Self {
        DriveSpec {
            eps0,
            variant: DriveVariant::LinearSweep { rate, t_center },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eps0.is_finite() {
            return Err(invalid("eps0", "must be finite"));
        }
        let amp_ok = |a: f64| a >= 0.0 && a.is_finite();
        match self.variant {
            DriveVariant::Constant => Ok(()),
            DriveVariant::Sinusoidal { amplitude, omega }
            | DriveVariant::Rectangular { amplitude, omega } => {
                if !amp_ok(amplitude) {
                    return Err(invalid("amplitude", format!("must be >= 0, got {amplitude}")));
                }
                if !(omega > 0.0 && omega.is_finite()) {
                    return Err(invalid("omega", format!("must be > 0, got {omega}")));
                }
                Ok(())
            }
            DriveVariant::Telegraph { amplitude, chi, .. } => {
                if !amp_ok(amplitude) {
                    return Err(invalid("amplitude", format!("must be >= 0, got {amplitude}")));
                }
                if !(chi > 0.0 && chi.is_finite()) {
                    return Err(invalid("chi", format!("switching rate must be > 0, got {chi}")));
                }
                Ok(())
            }
            DriveVariant::LinearSweep { rate, t_center } => {
                if rate == 0.0 || !rate.is_finite() {
                    return Err(invalid("rate", "sweep rate must be finite and non-zero"));
                }
                if !t_center.is_finite() {
                    return Err(invalid("t_center", "must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Amplitude `A` of the time-dependent part, zero where undefined.
    pub fn amplitude(&self) -> f64 {
        match self.variant {
            DriveVariant::Sinusoidal { amplitude, .. }
            | DriveVariant::Rectangular { amplitude, .. }
            | DriveVariant::Telegraph { amplitude, .. } => amplitude,
            _ => 0.0,
        }
    }

    /// Characteristic rate of the drive: `omega`, `chi`, or zero.
    pub fn rate(&self) -> f64 {
        match self.variant {
            DriveVariant::Sinusoidal { omega, .. } | DriveVariant::Rectangular { omega, .. } => {
                omega
            }
            DriveVariant::Telegraph { chi, .. } => chi,
            _ => 0.0,
        }
    }

    /// True for drives that are constant between discontinuities.
    pub fn is_piecewise_constant(&self) -> bool {
        matches!(
            self.variant,
            DriveVariant::Constant
                | DriveVariant::Rectangular { .. }
                | DriveVariant::Telegraph { .. }
        )
    }

    /// Largest `|eps(t)|` reached on `[0, t_max]`.
    pub fn max_abs_bias(&self, t_max: f64) -> f64 {
        match self.variant {
            DriveVariant::LinearSweep { rate, t_center } => {
                let a = (self.eps0 + rate * (0.0 - t_center)).abs();
                let b = (self.eps0 + rate * (t_max - t_center)).abs();
                a.max(b)
            }
            _ => self.eps0.abs() + self.amplitude(),
        }
    }
}

/// A drive pinned to a horizon, with its switching sequence when stochastic.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriveRealization {
    pub spec: DriveSpec,
    pub switch_times: Vec<f64>,
    pub t_max: f64,
}

/// Realizes `spec` on `[0, t_max]`.
pub fn realize(spec: &DriveSpec, t_max: f64) -> Result<DriveRealization> {
    spec.validate()?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid("t_max", format!("must be finite and > 0, got {t_max}")));
    }
    let switch_times = match spec.variant {
        DriveVariant::Telegraph { chi, seed, .. } => {
            let mut rng = SeededStream::new(seed);
            let mut times = Vec::with_capacity((chi * t_max * 1.1) as usize + 8);
            let mut t = 0.0;
            loop {
                let next = t + rng.exponential(chi);
                if next > t_max {
                    break;
                }
                if next > t {
                    times.push(next);
                }
                t = next;
            }
            times
        }
        _ => Vec::new(),
    };
    Ok(DriveRealization {
        spec: *spec,
        switch_times,
        t_max,
    })
}

/// Index `n` of the half period `[n pi/omega, (n+1) pi/omega)` containing `t`,
/// snapping to the flip when `t` is a rounded flip instant.
fn half_period_index(omega: f64, t: f64) -> i64 {
    let x = omega * t / PI;
    let n = x.round();
    if (x - n).abs() <= 1e-12 * n.abs().max(1.0) {
        n as i64
    } else {
        x.floor() as i64
    }
}

impl DriveRealization {
    /// Bias at `t`, right-continuous at flips.
    pub fn bias_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.t_max) {
            return Err(Error::TimeOutOfRange {
                t,
                t_max: self.t_max,
            });
        }
        Ok(self.bias_unchecked(t))
    }

    /// [`Self::bias_at`] without the range check, for integrator inner loops.
    pub fn bias_unchecked(&self, t: f64) -> f64 {
        let eps0 = self.spec.eps0;
        match self.spec.variant {
            DriveVariant::Constant => eps0,
            DriveVariant::Sinusoidal { amplitude, omega } => eps0 + amplitude * (omega * t).sin(),
            DriveVariant::Rectangular { amplitude, omega } => {
                if half_period_index(omega, t).rem_euclid(2) == 0 {
                    eps0 + amplitude
                } else {
                    eps0 - amplitude
                }
            }
            DriveVariant::Telegraph {
                amplitude,
                start_negative,
                ..
            } => {
                let count = self.switch_times.partition_point(|&s| s <= t);
                let positive = (count % 2 == 0) != start_negative;
                if positive {
                    eps0 + amplitude
                } else {
                    eps0 - amplitude
                }
            }
            DriveVariant::LinearSweep { rate, t_center } => eps0 + rate * (t - t_center),
        }
    }

    /// Instants where the bias jumps, in `(0, t_max]`.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self.spec.variant {
            DriveVariant::Rectangular { omega, .. } => {
                let mut out = Vec::new();
                let mut k = 1u64;
                loop {
                    let t = k as f64 * PI / omega;
                    if t > self.t_max {
                        // the endpoint belongs to the list when it is a flip up to rounding
                        if (t - self.t_max).abs() <= 1e-12 * self.t_max {
                            out.push(self.t_max);
                        }
                        break;
                    }
                    out.push(t);
                    k += 1;
                }
                out
            }
            DriveVariant::Telegraph { .. } => self.switch_times.clone(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_has_no_switches() {
        let r = realize(&DriveSpec::constant(0.3), 1.0).unwrap();
        assert!(r.switch_times.is_empty());
        assert!(r.discontinuities().is_empty());
        assert_eq!(r.bias_at(0.5).unwrap(), 0.3);
    }

    #[test]
    fn sinusoid_values() {
        let r = realize(&DriveSpec::sinusoidal(0.5, 2.0, 3.0), 10.0).unwrap();
        assert_eq!(r.bias_at(0.0).unwrap(), 0.5);
        let t = PI / 2.0 / 3.0;
        assert!((r.bias_at(t).unwrap() - 2.5).abs() < 1e-15);
        assert!(r.discontinuities().is_empty());
    }

    #[test]
    fn rectangular_flips_at_half_periods() {
        let r = realize(&DriveSpec::rectangular(0.0, 1.0, 2.0 * PI), 1.0).unwrap();
        assert_eq!(r.discontinuities(), [0.5, 1.0]);
        assert_eq!(r.bias_at(0.0).unwrap(), 1.0);
        assert_eq!(r.bias_at(0.25).unwrap(), 1.0);
        // right-continuous: the flip instant already carries the new sign
        assert_eq!(r.bias_at(0.5).unwrap(), -1.0);
        assert_eq!(r.bias_at(0.75).unwrap(), -1.0);
        assert_eq!(r.bias_at(1.0).unwrap(), 1.0);

        let r = realize(&DriveSpec::rectangular(0.0, 1.0, PI), 4.0).unwrap();
        assert_eq!(r.discontinuities(), [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rectangular_sign_at_rounded_flip_instants() {
        let omega = 2.0 * PI / 0.7;
        let r = realize(&DriveSpec::rectangular(0.0, 1.0, omega), 100.0).unwrap();
        for (k, t) in r.discontinuities().into_iter().enumerate() {
            let expected = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(r.bias_at(t).unwrap(), expected, "flip {k}");
        }
    }

    #[test]
    fn telegraph_parity_rule() {
        let r = DriveRealization {
            spec: DriveSpec::telegraph(0.0, 1.0, 1.0, 0),
            switch_times: alloc::vec![1.0],
            t_max: 2.0,
        };
        assert_eq!(r.bias_at(0.5).unwrap(), 1.0);
        assert_eq!(r.bias_at(1.5).unwrap(), -1.0);
        assert_eq!(r.discontinuities(), [1.0]);
    }

    #[test]
    fn telegraph_seeded_statistics() {
        let spec = DriveSpec::telegraph(0.0, 1.0, 1e3, 42);
        let r = realize(&spec, 1.0).unwrap();
        let n = r.switch_times.len() as f64;
        assert!((n - 1000.0).abs() <= 3.0 * 1000f64.sqrt(), "count {n}");
        let mean_gap = r.switch_times.last().unwrap() / n;
        assert!((mean_gap - 1e-3).abs() < 1e-4, "gap {mean_gap}");
        assert!(r.switch_times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(realize(&spec, 1.0).unwrap(), r);
    }

    #[test]
    fn telegraph_gaps_follow_exponential_law() {
        // compare the empirical CDF of gaps with 1 - exp(-chi g)
        let chi = 5.0;
        let r = realize(&DriveSpec::telegraph(0.0, 1.0, chi, 9), 4000.0).unwrap();
        let mut gaps: Vec<f64> = r
            .switch_times
            .iter()
            .scan(0.0, |prev, &t| {
                let g = t - *prev;
                *prev = t;
                Some(g)
            })
            .collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = gaps.len() as f64;
        let ks = gaps
            .iter()
            .enumerate()
            .map(|(i, g)| ((i as f64 + 1.0) / n - (1.0 - (-chi * g).exp())).abs())
            .fold(0.0, f64::max);
        // 1% Kolmogorov-Smirnov critical value
        assert!(ks < 1.63 / n.sqrt(), "KS {ks}");
    }

    #[test]
    fn telegraph_rate_converges_over_seeds() {
        let chi = 20.0;
        let t_max = 10.0;
        let seeds = 200;
        let total: usize = (0..seeds)
            .map(|s| realize(&DriveSpec::telegraph(0.0, 1.0, chi, s), t_max).unwrap().switch_times.len())
            .sum();
        let expected = chi * t_max * seeds as f64;
        assert!((total as f64 - expected).abs() < 3.0 * expected.sqrt());
    }

    #[test]
    fn start_branch_flag() {
        let spec = DriveSpec {
            eps0: 0.0,
            variant: DriveVariant::Telegraph { amplitude: 2.0, chi: 1.0, seed: 3, start_negative: true },
        };
        let r = realize(&spec, 1e-9).unwrap();
        assert_eq!(r.bias_at(0.0).unwrap(), -2.0);
    }

    #[test]
    fn linear_sweep_is_affine() {
        let r = realize(&DriveSpec::linear_sweep(1.0, 2.0, 5.0), 10.0).unwrap();
        assert_eq!(r.bias_at(5.0).unwrap(), 1.0);
        assert_eq!(r.bias_at(6.0).unwrap(), 3.0);
    }

    #[test]
    fn out_of_range_time_is_an_error() {
        let r = realize(&DriveSpec::constant(0.0), 1.0).unwrap();
        assert!(matches!(r.bias_at(1.5), Err(Error::TimeOutOfRange { .. })));
        assert!(r.bias_at(-0.1).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(realize(&DriveSpec::telegraph(0.0, 1.0, 0.0, 1), 1.0).is_err());
        assert!(realize(&DriveSpec::sinusoidal(0.0, -1.0, 1.0), 1.0).is_err());
        assert!(realize(&DriveSpec::rectangular(0.0, 1.0, 0.0), 1.0).is_err());
        assert!(realize(&DriveSpec::linear_sweep(0.0, 0.0, 1.0), 1.0).is_err());
        assert!(realize(&DriveSpec::constant(0.0), 0.0).is_err());
    }

    fn any_spec() -> impl Strategy<Value = DriveSpec> {
        let eps0 = -5.0f64..5.0;
        let amp = 0.0f64..5.0;
        let rate = 0.1f64..10.0;
        (eps0, amp, rate, 0u8..5, any::<u64>()).prop_map(|(e, a, w, kind, seed)| match kind {
            0 => DriveSpec::constant(e),
            1 => DriveSpec::sinusoidal(e, a, w),
            2 => DriveSpec::rectangular(e, a, w),
            3 => DriveSpec::telegraph(e, a, w, seed),
            _ => DriveSpec::linear_sweep(e, w, 1.0),
        })
    }

    proptest! {
        #[test]
        fn bias_is_pure_and_bounded(spec in any_spec(), ts in proptest::collection::vec(0.0f64..5.0, 1..20)) {
            let r = realize(&spec, 5.0).unwrap();
            for t in ts {
                let a = r.bias_at(t).unwrap();
                let b = r.bias_at(t).unwrap();
                prop_assert_eq!(a.to_bits(), b.to_bits());
                if !matches!(spec.variant, DriveVariant::LinearSweep { .. }) {
                    prop_assert!((a - spec.eps0).abs() <= spec.amplitude() + 1e-12);
                }
            }
            let d = r.discontinuities();
            prop_assert!(d.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(d.iter().all(|&t| t > 0.0 && t <= 5.0));
        }
    }
}
