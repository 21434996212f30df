//! Explicit Runge-Kutta integration of real first-order systems.
//!
//! Two methods are provided: the Dormand-Prince 5(4) embedded pair with
//! adaptive step control and its 4th-order continuous extension, and the
//! classical fixed-step RK4 (with cubic Hermite interpolation between
//! steps), kept as an independent cross-check.
//!
//! Integration runs over a single smooth segment. Callers that have
//! discontinuities in the right-hand side split the interval themselves and
//! chain segments through a shared [`SampleClock`], so that output samples
//! sit on one global grid regardless of the seams.

use core::fmt;

#[allow(unused_imports)] // shadowed when std is in the build graph
use num_traits::Float;

use crate::{Error, Result};

/// Right-hand side `dy/dt = f(t, y)` of a real system of dimension `N`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]);
}

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    /// Dormand-Prince 5(4) with dense output.
    AdaptiveRk,
    /// Classical RK4 with step `max_step`.
    FixedRk4,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AdaptiveRk => "dormand-prince-5(4)",
            Method::FixedRk4 => "rk4-fixed",
        }
    }
}

/// Integrator settings shared by all dynamical models.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; the fixed step for [`Method::FixedRk4`].
    pub max_step: f64,
    /// First trial step. `None` selects it automatically.
    pub initial_step: Option<f64>,
    /// Spacing of output samples.
    pub dense_output_stride: f64,
    /// Steps below this size abort the integration.
    pub min_step: f64,
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::AdaptiveRk,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            initial_step: None,
            dense_output_stride: 0.01,
            min_step: 1e-13,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_stride(mut self, stride: f64) -> Self {
        self.dense_output_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(crate::error::invalid("tolerance", "tolerances must be > 0"));
        }
        if !(self.max_step > 0.0) {
            return Err(crate::error::invalid("max_step", "must be > 0"));
        }
        if self.method == Method::FixedRk4 && !self.max_step.is_finite() {
            return Err(crate::error::invalid(
                "max_step",
                "fixed-step RK4 needs a finite max_step",
            ));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return Err(crate::error::invalid("initial_step", "must be > 0"));
            }
        }
        if !(self.dense_output_stride > 0.0) {
            return Err(crate::error::invalid("dense_output_stride", "must be > 0"));
        }
        if !(self.min_step >= 0.0) {
            return Err(crate::error::invalid("min_step", "must be >= 0"));
        }
        Ok(())
    }
}

/// Step counters accumulated over an integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
    pub segments: u64,
}

impl StepStats {
    pub fn merge(&mut self, other: &StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
        self.segments += other.segments;
    }
}

impl fmt::Display for StepStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} accepted, {} rejected, {} evaluations, {} segments",
            self.accepted, self.rejected, self.evaluations, self.segments
        )
    }
}

/// Output grid `origin + n * stride`, always closed by a final sample at `end`.
#[derive(Debug, Clone)]
pub struct SampleClock {
    origin: f64,
    stride: f64,
    end: f64,
    index: u64,
    done: bool,
}

impl SampleClock {
    pub fn new(origin: f64, end: f64, stride: f64) -> Self {
        SampleClock {
            origin,
            stride,
            end,
            index: 0,
            done: false,
        }
    }

    /// Next pending sample time.
    pub fn peek(&self) -> Option<f64> {
        if self.done {
            return None;
        }
        let t = self.origin + self.index as f64 * self.stride;
        // a grid point closer than 1e-9 stride to the end collapses onto it
        if t >= self.end - 1e-9 * self.stride {
            Some(self.end)
        } else {
            Some(t)
        }
    }

    fn advance(&mut self) {
        if let Some(t) = self.peek() {
            if t == self.end {
                self.done = true;
            } else {
                self.index += 1;
            }
        }
    }

    /// Upper bound on the number of samples, for preallocation.
    pub fn len_hint(&self) -> usize {
        ((self.end - self.origin) / self.stride).ceil().max(0.0) as usize + 2
    }
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrates one smooth segment `[t0, t1]` starting from `y0`.
///
/// Every pending sample of `clock` inside `[t0, t1]` is passed to
/// `observer`. Returns the state at `t1`.
pub fn integrate_segment<const N: usize, S, F>(
    sys: &S,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    clock: &mut SampleClock,
    stats: &mut StepStats,
    observer: &mut F,
) -> Result<[f64; N]>
where
    S: OdeSystem<N> + ?Sized,
    F: FnMut(f64, &[f64; N]),
{
    stats.segments += 1;
    while let Some(ts) = clock.peek() {
        if ts > t0 {
            break;
        }
        observer(ts, &y0);
        clock.advance();
    }
    if t1 <= t0 {
        return Ok(y0);
    }
    match cfg.method {
        Method::AdaptiveRk => dopri5(sys, t0, t1, y0, cfg, clock, stats, observer),
        Method::FixedRk4 => rk4(sys, t0, t1, y0, cfg, clock, stats, observer),
    }
}

// Dormand-Prince 5(4) coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn error_norm<const N: usize>(
    y0: &[f64; N],
    y1: &[f64; N],
    err: &[f64; N],
    cfg: &IntegratorConfig,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sk;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

/// Starting step after Hairer, Nørsett & Wanner (II.4).
fn initial_step<const N: usize, S: OdeSystem<N> + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    cfg: &IntegratorConfig,
    span: f64,
    stats: &mut StepStats,
) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    h = h.min(cfg.max_step).min(span);
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h * f0[i];
    }
    let mut f1 = [0.0; N];
    sys.rhs(t0 + h, &y1, &mut f1);
    stats.evaluations += 1;
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(cfg.max_step).min(span)
}

#[allow(clippy::too_many_arguments)]
fn dopri5<const N: usize, S, F>(
    sys: &S,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    clock: &mut SampleClock,
    stats: &mut StepStats,
    observer: &mut F,
) -> Result<[f64; N]>
where
    S: OdeSystem<N> + ?Sized,
    F: FnMut(f64, &[f64; N]),
{
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    sys.rhs(t, &y, &mut k1);
    stats.evaluations += 1;
    if !all_finite(&k1) {
        return Err(Error::NonFinite { t, stats: *stats });
    }
    let mut h = match cfg.initial_step {
        Some(h0) => h0.min(cfg.max_step).min(span),
        None => initial_step(sys, t0, &y, &k1, cfg, span, stats),
    };
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let start_steps = stats.accepted + stats.rejected;

    let mut k2 = [0.0; N];
    let mut k3 = [0.0; N];
    let mut k4 = [0.0; N];
    let mut k5 = [0.0; N];
    let mut k6 = [0.0; N];
    let mut k7 = [0.0; N];
    let mut ys = [0.0; N];
    let mut y1 = [0.0; N];
    let mut err = [0.0; N];

    loop {
        if stats.accepted + stats.rejected - start_steps >= cfg.max_steps {
            return Err(Error::TooManySteps {
                t,
                max_steps: cfg.max_steps,
                stats: *stats,
            });
        }
        let remaining = t1 - t;
        // stretch the final step rather than leave a sliver behind
        let last = h >= remaining * (1.0 - 1e-12) || remaining - h < 1e-12 * span;
        if last {
            h = remaining;
        }
        if h < cfg.min_step.max(4.0 * f64::EPSILON * t.abs()) && !last {
            return Err(Error::StepUnderflow {
                t,
                h,
                stats: *stats,
            });
        }

        for i in 0..N {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, &ys, &mut k2);
        for i in 0..N {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, &ys, &mut k3);
        for i in 0..N {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, &ys, &mut k4);
        for i in 0..N {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, &ys, &mut k5);
        for i in 0..N {
            ys[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t1 } else { t + h };
        sys.rhs(t_new, &ys, &mut k6);
        for i in 0..N {
            y1[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t_new, &y1, &mut k7);
        stats.evaluations += 6;
        for i in 0..N {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&y, &y1, &err, cfg);
        if !e.is_finite() {
            if !all_finite(&y1) && h <= cfg.min_step.max(1e-300) {
                return Err(Error::NonFinite { t, stats: *stats });
            }
            stats.rejected += 1;
            h *= FAC_MIN;
            last_rejected = true;
            if h < cfg.min_step.max(4.0 * f64::EPSILON * t.abs()) {
                return Err(Error::NonFinite { t, stats: *stats });
            }
            continue;
        }

        let fac11 = e.powf(0.2 - BETA * 0.75);
        if e <= 1.0 {
            stats.accepted += 1;
            if !all_finite(&y1) {
                return Err(Error::NonFinite { t: t_new, stats: *stats });
            }
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            facold = e.max(1e-4);

            // continuous extension coefficients, emitted only if a sample is due
            if matches!(clock.peek(), Some(ts) if ts <= t_new) {
                let mut r2 = [0.0; N];
                let mut r3 = [0.0; N];
                let mut r4 = [0.0; N];
                let mut r5 = [0.0; N];
                for i in 0..N {
                    let dy = y1[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    r2[i] = dy;
                    r3[i] = bspl;
                    r4[i] = dy - h * k7[i] - bspl;
                    r5[i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let mut yi = [0.0; N];
                while let Some(ts) = clock.peek() {
                    if ts > t_new {
                        break;
                    }
                    if ts == t_new {
                        observer(ts, &y1);
                    } else {
                        let s = (ts - t) / h;
                        let s1 = 1.0 - s;
                        for i in 0..N {
                            yi[i] = y[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
                        }
                        observer(ts, &yi);
                    }
                    clock.advance();
                }
            }

            y = y1;
            k1 = k7;
            t = t_new;
            if last {
                return Ok(y);
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(cfg.max_step);
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn rk4<const N: usize, S, F>(
    sys: &S,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    clock: &mut SampleClock,
    stats: &mut StepStats,
    observer: &mut F,
) -> Result<[f64; N]>
where
    S: OdeSystem<N> + ?Sized,
    F: FnMut(f64, &[f64; N]),
{
    let span = t1 - t0;
    let n_steps = (span / cfg.max_step).ceil().max(1.0);
    if n_steps as u64 > cfg.max_steps {
        return Err(Error::TooManySteps {
            t: t0,
            max_steps: cfg.max_steps,
            stats: *stats,
        });
    }
    let n_steps = n_steps as u64;
    let h = span / n_steps as f64;
    let mut y = y0;
    let mut f0 = [0.0; N];
    sys.rhs(t0, &y, &mut f0);
    stats.evaluations += 1;
    let mut k2 = [0.0; N];
    let mut k3 = [0.0; N];
    let mut k4 = [0.0; N];
    let mut ys = [0.0; N];
    let mut y1 = [0.0; N];
    let mut f1 = [0.0; N];
    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        let t_new = if step + 1 == n_steps {
            t1
        } else {
            t0 + (step + 1) as f64 * h
        };
        for i in 0..N {
            ys[i] = y[i] + 0.5 * h * f0[i];
        }
        sys.rhs(t + 0.5 * h, &ys, &mut k2);
        for i in 0..N {
            ys[i] = y[i] + 0.5 * h * k2[i];
        }
        sys.rhs(t + 0.5 * h, &ys, &mut k3);
        for i in 0..N {
            ys[i] = y[i] + h * k3[i];
        }
        sys.rhs(t_new, &ys, &mut k4);
        for i in 0..N {
            y1[i] = y[i] + h / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        sys.rhs(t_new, &y1, &mut f1);
        stats.evaluations += 4;
        stats.accepted += 1;
        if !all_finite(&y1) {
            return Err(Error::NonFinite { t: t_new, stats: *stats });
        }
        let mut yi = [0.0; N];
        while let Some(ts) = clock.peek() {
            if ts > t_new {
                break;
            }
            if ts == t_new {
                observer(ts, &y1);
            } else {
                // cubic Hermite between (y, f0) and (y1, f1)
                let s = (ts - t) / h;
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                for i in 0..N {
                    yi[i] = h00 * y[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
                }
                observer(ts, &yi);
            }
            clock.advance();
        }
        y = y1;
        f0 = f1;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    struct Decay(f64);
    impl OdeSystem<1> for Decay {
        fn rhs(&self, _t: f64, y: &[f64; 1], dy: &mut [f64; 1]) {
            dy[0] = -self.0 * y[0];
        }
    }

    struct Harmonic;
    impl OdeSystem<2> for Harmonic {
        fn rhs(&self, _t: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    fn run<const N: usize, S: OdeSystem<N>>(
        sys: &S,
        t1: f64,
        y0: [f64; N],
        cfg: &IntegratorConfig,
    ) -> (Vec<(f64, [f64; N])>, [f64; N], StepStats) {
        let mut clock = SampleClock::new(0.0, t1, cfg.dense_output_stride);
        let mut stats = StepStats::default();
        let mut out = Vec::new();
        let y = integrate_segment(sys, 0.0, t1, y0, cfg, &mut clock, &mut stats, &mut |t, y| {
            out.push((t, *y))
        })
        .unwrap();
        (out, y, stats)
    }

    #[test]
    fn dopri_exponential_decay() {
        let cfg = IntegratorConfig::default().with_tolerances(1e-10, 1e-12).with_stride(0.1);
        let (samples, y, _) = run(&Decay(2.0), 3.0, [1.0], &cfg);
        assert!((y[0] - (-6.0f64).exp()).abs() < 1e-10);
        assert_eq!(samples.len(), 31);
        for (t, s) in samples {
            assert!((s[0] - (-2.0 * t).exp()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn dense_output_tracks_oscillator_between_steps() {
        let cfg = IntegratorConfig::default().with_tolerances(1e-9, 1e-12).with_stride(0.013);
        let (samples, _, stats) = run(&Harmonic, 20.0, [1.0, 0.0], &cfg);
        assert!(stats.accepted < samples.len() as u64);
        for (t, s) in samples {
            assert!((s[0] - t.cos()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn rk4_global_error_is_fourth_order() {
        let err = |h: f64| {
            let cfg = IntegratorConfig {
                method: Method::FixedRk4,
                max_step: h,
                dense_output_stride: 1.0,
                ..Default::default()
            };
            let (_, y, _) = run(&Harmonic, 10.0, [1.0, 0.0], &cfg);
            (y[0] - 10.0f64.cos()).abs()
        };
        let ratio = err(0.04) / err(0.02);
        assert!((ratio - 16.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn clock_closes_on_end() {
        let mut c = SampleClock::new(0.0, 1.0, 0.3);
        let mut ts = Vec::new();
        while let Some(t) = c.peek() {
            ts.push(t);
            c.advance();
        }
        assert_eq!(ts, [0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
    }

    #[test]
    fn non_finite_rhs_is_reported() {
        struct Blow;
        impl OdeSystem<1> for Blow {
            fn rhs(&self, _t: f64, _y: &[f64; 1], dy: &mut [f64; 1]) {
                dy[0] = f64::NAN;
            }
        }
        let cfg = IntegratorConfig::default();
        let mut clock = SampleClock::new(0.0, 1.0, 0.5);
        let mut stats = StepStats::default();
        let r = integrate_segment(&Blow, 0.0, 1.0, [1.0], &cfg, &mut clock, &mut stats, &mut |_, _| {});
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }
}
