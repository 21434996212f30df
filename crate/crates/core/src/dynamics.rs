//! Numerical integration of the three dynamical descriptions.
//!
//! * Schrödinger-like: `i dψ/dt = H(t) ψ - i (γ/2) ψ` with
//!   `H = (Δ/2) σx + (ε(t)/2) σz`.
//! * Exact envelope equation, second order in time:
//!   `ψ'' + (γ + 2iΩ0) ψ' + iΩ0γ ψ - Ω0 (Δ σx + ε(t) σz) ψ = 0`.
//! * Bloch form: `dX/dt = B × X - γ X` with `B = (Δ, 0, ε(t))`.
//!
//! All three share the same segmented driver: the interval is split at the
//! drive's discontinuities and each piece is integrated separately, so no
//! step straddles a jump of the bias.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed when std is in the build graph
use num_traits::Float;

use crate::drive::DriveRealization;
use crate::error::invalid;
use crate::model::QubitParams;
use crate::ode::{integrate_segment, OdeSystem, SampleClock, StepStats};
use crate::{Complex, Result};

pub use crate::ode::{IntegratorConfig, Method};

/// Complex amplitude pair `(ψ1, ψ2)`. The norm is not fixed to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub psi1: Complex,
    pub psi2: Complex,
}

impl StateVector {
    pub fn new(psi1: Complex, psi2: Complex) -> Self {
        StateVector { psi1, psi2 }
    }

    /// `|ψ1|² + |ψ2|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.psi1.norm_sqr() + self.psi2.norm_sqr()
    }

    /// Bloch vector of `ρ = |ψ⟩⟨ψ|`, i.e. `X_k = ⟨ψ|σ_k|ψ⟩`.
    pub fn bloch(&self) -> BlochVector {
        let c = self.psi1.conj() * self.psi2;
        BlochVector {
            x: 2.0 * c.re,
            y: 2.0 * c.im,
            z: self.psi1.norm_sqr() - self.psi2.norm_sqr(),
        }
    }

    fn to_array(self) -> [f64; 4] {
        [self.psi1.re, self.psi1.im, self.psi2.re, self.psi2.im]
    }

    fn from_slice(y: &[f64]) -> Self {
        StateVector {
            psi1: Complex::new(y[0], y[1]),
            psi2: Complex::new(y[2], y[3]),
        }
    }

    fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// State of the second-order envelope equation: amplitudes and their rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactState {
    pub psi: StateVector,
    pub dpsi_dt: StateVector,
}

impl ExactState {
    fn to_array(self) -> [f64; 8] {
        let a = self.psi.to_array();
        let b = self.dpsi_dt.to_array();
        [a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]
    }

    fn from_array(y: &[f64; 8]) -> Self {
        ExactState {
            psi: StateVector::from_slice(&y[..4]),
            dpsi_dt: StateVector::from_slice(&y[4..]),
        }
    }
}

/// Real three-vector `(X, Y, Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Run description attached to every trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub integrator: &'static str,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub stats: StepStats,
    pub warnings: Vec<String>,
}

/// Sampled solution: `states[i]` is the state at `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub meta: TrajectoryMeta,
}

impl<S: Copy> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, S)> {
        Some((*self.times.last()?, *self.states.last()?))
    }
}

/// Bias as seen from inside one smooth segment.
#[derive(Debug, Clone, Copy)]
pub enum SegmentBias<'a> {
    /// Piecewise-constant drive: the value held on this segment.
    Held(f64),
    Smooth(&'a DriveRealization),
}

impl SegmentBias<'_> {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            SegmentBias::Held(v) => *v,
            SegmentBias::Smooth(r) => r.bias_unchecked(t),
        }
    }
}

/// Smooth pieces of `t_span` between the drive's discontinuities.
pub fn segment_bounds(r: &DriveRealization, t_span: (f64, f64)) -> Vec<(f64, f64)> {
    let (t0, t1) = t_span;
    let mut bounds = Vec::new();
    let mut start = t0;
    for d in r.discontinuities() {
        if d > start && d < t1 {
            bounds.push((start, d));
            start = d;
        }
    }
    bounds.push((start, t1));
    bounds
}

fn check_span(r: &DriveRealization, t_span: (f64, f64)) -> Result<()> {
    let (t0, t1) = t_span;
    if !(t0 >= 0.0 && t1 > t0 && t1 <= r.t_max) {
        return Err(invalid(
            "t_span",
            format!("[{t0}, {t1}] must be a non-empty sub-interval of [0, {}]", r.t_max),
        ));
    }
    Ok(())
}

/// Integrates across the drive's discontinuities, restarting at each one.
///
/// `build` constructs the right-hand side for a segment from the bias
/// valid on it. Samples land on the global grid `t0 + n * stride`.
pub fn integrate_segmented<'a, const N: usize, S, B, F>(
    r: &'a DriveRealization,
    t_span: (f64, f64),
    y0: [f64; N],
    cfg: &IntegratorConfig,
    build: B,
    mut observer: F,
) -> Result<([f64; N], StepStats)>
where
    S: OdeSystem<N>,
    B: Fn(SegmentBias<'a>) -> S,
    F: FnMut(f64, &[f64; N]),
{
    cfg.validate()?;
    check_span(r, t_span)?;
    let mut clock = SampleClock::new(t_span.0, t_span.1, cfg.dense_output_stride);
    let mut stats = StepStats::default();
    let mut y = y0;
    let piecewise = r.spec.is_piecewise_constant();
    for (a, b) in segment_bounds(r, t_span) {
        let bias = if piecewise {
            SegmentBias::Held(r.bias_unchecked(0.5 * (a + b)))
        } else {
            SegmentBias::Smooth(r)
        };
        let sys = build(bias);
        y = integrate_segment(&sys, a, b, y, cfg, &mut clock, &mut stats, &mut observer)?;
    }
    Ok((y, stats))
}

/// Right-hand side of the Schrödinger-like equation.
#[derive(Debug, Clone, Copy)]
pub struct SchrodingerRhs<'a> {
    pub delta: f64,
    pub gamma: f64,
    pub bias: SegmentBias<'a>,
}

impl OdeSystem<4> for SchrodingerRhs<'_> {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let he = 0.5 * self.bias.at(t);
        let hd = 0.5 * self.delta;
        let g = 0.5 * self.gamma;
        // (Hψ)_1 = he ψ1 + hd ψ2, (Hψ)_2 = hd ψ1 - he ψ2; dψ = -i Hψ - g ψ
        let h1r = he * y[0] + hd * y[2];
        let h1i = he * y[1] + hd * y[3];
        let h2r = hd * y[0] - he * y[2];
        let h2i = hd * y[1] - he * y[3];
        dy[0] = h1i - g * y[0];
        dy[1] = -h1r - g * y[1];
        dy[2] = h2i - g * y[2];
        dy[3] = -h2r - g * y[3];
    }
}

/// Right-hand side of the second-order envelope equation as a first-order system.
#[derive(Debug, Clone, Copy)]
pub struct ExactRhs<'a> {
    pub delta: f64,
    pub gamma: f64,
    pub carrier: f64,
    pub bias: SegmentBias<'a>,
}

impl OdeSystem<8> for ExactRhs<'_> {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 8], dy: &mut [f64; 8]) {
        let eps = self.bias.at(t);
        let w = self.carrier;
        let g = self.gamma;
        let p1 = Complex::new(y[0], y[1]);
        let p2 = Complex::new(y[2], y[3]);
        let d1 = Complex::new(y[4], y[5]);
        let d2 = Complex::new(y[6], y[7]);
        let damp = Complex::new(g, 2.0 * w);
        let mix = Complex::new(0.0, w * g);
        let a1 = -damp * d1 - mix * p1 + w * (self.delta * p2 + eps * p1);
        let a2 = -damp * d2 - mix * p2 + w * (self.delta * p1 - eps * p2);
        dy[0] = d1.re;
        dy[1] = d1.im;
        dy[2] = d2.re;
        dy[3] = d2.im;
        dy[4] = a1.re;
        dy[5] = a1.im;
        dy[6] = a2.re;
        dy[7] = a2.im;
    }
}

/// Right-hand side of the Bloch-form equation.
#[derive(Debug, Clone, Copy)]
pub struct BlochRhs<'a> {
    pub delta: f64,
    pub gamma: f64,
    pub bias: SegmentBias<'a>,
}

impl OdeSystem<3> for BlochRhs<'_> {
    #[inline]
    fn rhs(&self, t: f64, y: &[f64; 3], dy: &mut [f64; 3]) {
        let eps = self.bias.at(t);
        let d = self.delta;
        // B x X with B = (d, 0, eps)
        dy[0] = -eps * y[1] - self.gamma * y[0];
        dy[1] = eps * y[0] - d * y[2] - self.gamma * y[1];
        dy[2] = d * y[1] - self.gamma * y[2];
    }
}

fn meta(cfg: &IntegratorConfig, stats: StepStats, warnings: Vec<String>) -> TrajectoryMeta {
    TrajectoryMeta {
        integrator: cfg.method.name(),
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        stats,
        warnings,
    }
}

fn check_state(init: &StateVector) -> Result<()> {
    if !init.is_finite() {
        return Err(invalid("init", "initial state must be finite"));
    }
    Ok(())
}

/// Streams Schrödinger-like samples to `observer`; returns the final state.
pub fn integrate_schrodinger_with<F>(
    q: &QubitParams,
    r: &DriveRealization,
    init: StateVector,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    mut observer: F,
) -> Result<(StateVector, StepStats)>
where
    F: FnMut(f64, &StateVector),
{
    check_state(&init)?;
    let (delta, gamma) = (q.delta, q.gamma);
    let (y, stats) = integrate_segmented(
        r,
        t_span,
        init.to_array(),
        cfg,
        |bias| SchrodingerRhs { delta, gamma, bias },
        |t, y: &[f64; 4]| observer(t, &StateVector::from_slice(y)),
    )?;
    Ok((StateVector::from_slice(&y), stats))
}

/// Integrates the Schrödinger-like equation, sampled every `dense_output_stride`.
pub fn integrate_schrodinger(
    q: &QubitParams,
    r: &DriveRealization,
    init: StateVector,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory<StateVector>> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, stats) = integrate_schrodinger_with(q, r, init, t_span, cfg, |t, s| {
        times.push(t);
        states.push(*s);
    })?;
    Ok(Trajectory {
        times,
        states,
        meta: meta(cfg, stats, Vec::new()),
    })
}

/// Closed-form Schrödinger propagation over `tau` at a constant bias `eps`.
pub fn propagate_held(q: &QubitParams, eps: f64, s: StateVector, tau: f64) -> StateVector {
    let half_w = 0.5 * q.delta.hypot(eps);
    let (nx, nz) = if half_w > 0.0 {
        (0.5 * q.delta / half_w, 0.5 * eps / half_w)
    } else {
        (0.0, 0.0)
    };
    let (sn, c) = (half_w * tau).sin_cos();
    let mi = Complex::new(0.0, -sn);
    let decay = (-0.5 * q.gamma * tau).exp();
    // exp(-i w tau n.σ / 2) = cos - i sin n.σ
    let p1 = s.psi1 * c + mi * (s.psi1 * nz + s.psi2 * nx);
    let p2 = s.psi2 * c + mi * (s.psi1 * nx - s.psi2 * nz);
    StateVector::new(p1 * decay, p2 * decay)
}

/// Initial rates for the exact equation consistent with the first-order
/// dynamics: `dψ/dt(t0) = -i H(t0) ψ - (γ/2) ψ`.
pub fn exact_initial_state(
    q: &QubitParams,
    r: &DriveRealization,
    t0: f64,
    psi: StateVector,
) -> Result<ExactState> {
    let eps = r.bias_at(t0)?;
    let rhs = SchrodingerRhs {
        delta: q.delta,
        gamma: q.gamma,
        bias: SegmentBias::Held(eps),
    };
    let mut dy = [0.0; 4];
    rhs.rhs(t0, &psi.to_array(), &mut dy);
    Ok(ExactState {
        psi,
        dpsi_dt: StateVector::from_slice(&dy),
    })
}

fn exact_warnings(q: &QubitParams, r: &DriveRealization) -> Vec<String> {
    let mut w = Vec::new();
    let rate = r.spec.rate();
    if rate > 0.1 * q.omega0_carrier {
        w.push(format!(
            "drive rate {rate} exceeds 0.1 x carrier {}; envelope comparison not meaningful",
            q.omega0_carrier
        ));
    }
    w
}

/// Streams samples of the exact envelope equation to `observer`.
pub fn integrate_exact_with<F>(
    q: &QubitParams,
    r: &DriveRealization,
    init: ExactState,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    mut observer: F,
) -> Result<(ExactState, StepStats)>
where
    F: FnMut(f64, &ExactState),
{
    if !q.has_carrier() {
        return Err(invalid(
            "omega0_carrier",
            "the exact envelope equation needs a finite carrier frequency",
        ));
    }
    check_state(&init.psi)?;
    check_state(&init.dpsi_dt)?;
    let (delta, gamma, carrier) = (q.delta, q.gamma, q.omega0_carrier);
    let (y, stats) = integrate_segmented(
        r,
        t_span,
        init.to_array(),
        cfg,
        |bias| ExactRhs {
            delta,
            gamma,
            carrier,
            bias,
        },
        |t, y: &[f64; 8]| observer(t, &ExactState::from_array(y)),
    )?;
    Ok((ExactState::from_array(&y), stats))
}

/// Integrates the exact second-order envelope equation.
pub fn integrate_exact(
    q: &QubitParams,
    r: &DriveRealization,
    init: ExactState,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory<ExactState>> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, stats) = integrate_exact_with(q, r, init, t_span, cfg, |t, s| {
        times.push(t);
        states.push(*s);
    })?;
    Ok(Trajectory {
        times,
        states,
        meta: meta(cfg, stats, exact_warnings(q, r)),
    })
}

/// Streams Bloch-form samples to `observer`.
pub fn integrate_bloch_with<F>(
    q: &QubitParams,
    r: &DriveRealization,
    init: BlochVector,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    mut observer: F,
) -> Result<(BlochVector, StepStats)>
where
    F: FnMut(f64, &BlochVector),
{
    if ![init.x, init.y, init.z].iter().all(|v| v.is_finite()) {
        return Err(invalid("init", "initial Bloch vector must be finite"));
    }
    let (delta, gamma) = (q.delta, q.gamma);
    let (y, stats) = integrate_segmented(
        r,
        t_span,
        [init.x, init.y, init.z],
        cfg,
        |bias| BlochRhs { delta, gamma, bias },
        |t, y: &[f64; 3]| observer(t, &BlochVector::new(y[0], y[1], y[2])),
    )?;
    Ok((BlochVector::new(y[0], y[1], y[2]), stats))
}

/// Integrates the Bloch-form equation.
pub fn integrate_bloch(
    q: &QubitParams,
    r: &DriveRealization,
    init: BlochVector,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory<BlochVector>> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, stats) = integrate_bloch_with(q, r, init, t_span, cfg, |t, s| {
        times.push(t);
        states.push(*s);
    })?;
    Ok(Trajectory {
        times,
        states,
        meta: meta(cfg, stats, Vec::new()),
    })
}
