//! Measured quantities: eigenmode occupation, windowed time averages,
//! displacement reconstruction and row-wise peak detection.
//!
//! The eigenbasis is that of the static Hamiltonian at bias `eps0` with
//! mixing angle `θ = atan2(Δ, eps0)`:
//!
//! ```text
//! ψ+ = cos(θ/2) ψ1 + sin(θ/2) ψ2      (upper level, +ω0/2)
//! ψ- = sin(θ/2) ψ1 - cos(θ/2) ψ2      (lower level, -ω0/2)
//! ```
//!
//! The rotation is real, symmetric and its own inverse. At `eps0 = 0` this
//! gives `ψ± = (ψ1 ± ψ2)/√2`; for `Δ → 0` and `eps0 > 0`, `ψ+ → ψ1`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed when std is in the build graph
use num_traits::Float;

use crate::dynamics::{BlochVector, ExactState, StateVector, Trajectory};
use crate::model::QubitParams;
use crate::{Complex, Error, Result};

/// Largest allowed sample gap, as a fraction of the averaging window.
pub const MAX_STRIDE_FRACTION: f64 = 0.01;

fn half_angle(q: &QubitParams, eps0: f64) -> (f64, f64) {
    let theta = q.delta.atan2(eps0);
    ((0.5 * theta).cos(), (0.5 * theta).sin())
}

/// Components `(ψ-, ψ+)` of `s` in the eigenbasis at bias `eps0`.
pub fn to_eigenbasis(s: &StateVector, q: &QubitParams, eps0: f64) -> (Complex, Complex) {
    let (c, sn) = half_angle(q, eps0);
    let plus = s.psi1 * c + s.psi2 * sn;
    let minus = s.psi1 * sn - s.psi2 * c;
    (minus, plus)
}

/// Inverse of [`to_eigenbasis`].
pub fn from_eigenbasis(minus: Complex, plus: Complex, q: &QubitParams, eps0: f64) -> StateVector {
    let (c, sn) = half_angle(q, eps0);
    StateVector::new(plus * c + minus * sn, plus * sn - minus * c)
}

/// Unit vector `n+` with `|ψ+|² = (N + n+ · X) / 2` for a pure state of norm `N`.
pub fn upper_axis(q: &QubitParams, eps0: f64) -> BlochVector {
    let theta = q.delta.atan2(eps0);
    BlochVector::new(theta.sin(), 0.0, theta.cos())
}

/// `|ψ+|²`, raw or divided by the instantaneous norm.
pub fn upper_occupation(s: &StateVector, q: &QubitParams, eps0: f64, renormalize: bool) -> f64 {
    let p = to_eigenbasis(s, q, eps0).1.norm_sqr();
    if renormalize {
        let n = s.norm_sqr();
        if n > 0.0 {
            p / n
        } else {
            0.0
        }
    } else {
        p
    }
}

/// `|ψ+|²` from a Bloch vector. The norm of a pure state is `|X|`.
pub fn upper_occupation_bloch(x: &BlochVector, q: &QubitParams, eps0: f64, renormalize: bool) -> f64 {
    let n = x.norm();
    let a = upper_axis(q, eps0);
    let proj = a.x * x.x + a.y * x.y + a.z * x.z;
    let p = (0.5 * (n + proj)).max(0.0);
    if renormalize {
        if n > 0.0 {
            (p / n).min(1.0)
        } else {
            0.0
        }
    } else {
        p.min(n)
    }
}

/// `(1 - e^-z) / z`, continuous at zero.
fn relaxation_factor(z: Complex) -> Complex {
    if z.norm() < 1e-4 {
        Complex::new(1.0, 0.0) - z * (0.5 - z * (1.0 / 6.0 - z / 24.0))
    } else {
        (Complex::new(1.0, 0.0) - (-z).exp()) / z
    }
}

/// `∫ |ψ+|² dt` over `[0, duration]` while the bias is held at `eps`,
/// starting from `s`, with occupations taken at bias `eps0`.
///
/// With `renormalize` the integrand is `|ψ+|² / |ψ|²`.
pub fn held_occupation_integral(
    s: &StateVector,
    q: &QubitParams,
    eps: f64,
    eps0: f64,
    duration: f64,
    renormalize: bool,
) -> f64 {
    let norm = s.norm_sqr();
    if duration <= 0.0 || norm == 0.0 {
        return 0.0;
    }
    // the held eigenvectors evolve with phases e^{∓iwt/2}
    let (held_minus, held_plus) = to_eigenbasis(s, q, eps);
    let (c_h, s_h) = half_angle(q, eps);
    let (c_0, s_0) = half_angle(q, eps0);
    let cp = held_plus * (c_0 * c_h + s_0 * s_h);
    let cm = held_minus * (c_0 * s_h - s_0 * c_h);
    let w = q.delta.hypot(eps);
    let gamma = if renormalize { 0.0 } else { q.gamma };
    let flat = (cp.norm_sqr() + cm.norm_sqr()) * relaxation_factor(Complex::new(gamma * duration, 0.0)).re;
    let beat = (cp * cm.conj() * relaxation_factor(Complex::new(gamma, w) * duration)).re;
    let total = duration * (flat + 2.0 * beat);
    if renormalize {
        total / norm
    } else {
        total
    }
}

/// Upper-mode occupation sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OccupationSeries {
    pub times: Vec<f64>,
    pub occupation: Vec<f64>,
}

impl OccupationSeries {
    pub fn from_schrodinger(
        traj: &Trajectory<StateVector>,
        q: &QubitParams,
        eps0: f64,
        renormalize: bool,
    ) -> Self {
        OccupationSeries {
            times: traj.times.clone(),
            occupation: traj
                .states
                .iter()
                .map(|s| upper_occupation(s, q, eps0, renormalize))
                .collect(),
        }
    }

    pub fn from_exact(traj: &Trajectory<ExactState>, q: &QubitParams, eps0: f64, renormalize: bool) -> Self {
        OccupationSeries {
            times: traj.times.clone(),
            occupation: traj
                .states
                .iter()
                .map(|s| upper_occupation(&s.psi, q, eps0, renormalize))
                .collect(),
        }
    }

    pub fn from_bloch(traj: &Trajectory<BlochVector>, q: &QubitParams, eps0: f64, renormalize: bool) -> Self {
        OccupationSeries {
            times: traj.times.clone(),
            occupation: traj
                .states
                .iter()
                .map(|x| upper_occupation_bloch(x, q, eps0, renormalize))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Trapezoidal mean of `series` over `[t_start, t_start + window]`.
///
/// The samples must cover the window with gaps no larger than
/// `window * MAX_STRIDE_FRACTION`. Window edges falling between two samples
/// are handled by linear interpolation on that single interval.
pub fn time_average(series: &OccupationSeries, window: f64, t_start: f64) -> Result<f64> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(crate::error::invalid("window", format!("must be > 0, got {window}")));
    }
    if series.times.len() != series.occupation.len() {
        return Err(crate::error::invalid("series", "times and values differ in length"));
    }
    let mut acc = TrapezoidMean::new(t_start, window);
    for (&t, &v) in series.times.iter().zip(&series.occupation) {
        acc.push(t, v);
    }
    acc.finish()
}

/// Streaming trapezoidal mean over a fixed window.
///
/// Samples must arrive in increasing time order; those outside the window
/// only contribute through interpolation at the window edges.
#[derive(Debug, Clone)]
pub struct TrapezoidMean {
    t_start: f64,
    window: f64,
    prev: Option<(f64, f64)>,
    covered: Option<(f64, f64)>,
    integral: f64,
    max_gap: f64,
}

impl TrapezoidMean {
    pub fn new(t_start: f64, window: f64) -> Self {
        TrapezoidMean {
            t_start,
            window,
            prev: None,
            covered: None,
            integral: 0.0,
            max_gap: 0.0,
        }
    }

    fn t_end(&self) -> f64 {
        self.t_start + self.window
    }

    pub fn push(&mut self, t: f64, v: f64) {
        let (t0, t1) = (self.t_start, self.t_end());
        if let Some((tp, vp)) = self.prev {
            if t > t0 && tp < t1 && t > tp {
                let (a, va) = if tp < t0 { (t0, lerp(tp, vp, t, v, t0)) } else { (tp, vp) };
                let (b, vb) = if t > t1 { (t1, lerp(tp, vp, t, v, t1)) } else { (t, v) };
                self.integral += 0.5 * (b - a) * (va + vb);
                self.max_gap = self.max_gap.max(t - tp);
                self.covered = Some(match self.covered {
                    None => (a, b),
                    Some((lo, _)) => (lo, b),
                });
            }
        }
        self.prev = Some((t, v));
    }

    /// Mean over the window; fails unless the window was fully and densely covered.
    pub fn finish(&self) -> Result<f64> {
        let (t0, t1) = (self.t_start, self.t_end());
        let tol = 1e-9 * self.window;
        match self.covered {
            Some((lo, hi)) if (lo - t0).abs() <= tol && (hi - t1).abs() <= tol => {}
            other => {
                return Err(Error::InsufficientSampling(format!(
                    "samples cover {other:?}, window is [{t0}, {t1}]"
                )))
            }
        }
        if self.max_gap > self.window * MAX_STRIDE_FRACTION * (1.0 + 1e-9) {
            return Err(Error::InsufficientSampling(format!(
                "sample gap {} exceeds {MAX_STRIDE_FRACTION} of the window {}",
                self.max_gap, self.window
            )));
        }
        Ok(self.integral / self.window)
    }
}

fn lerp(t0: f64, v0: f64, t1: f64, v1: f64, t: f64) -> f64 {
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Access to the amplitude pair of a trajectory state.
pub trait Amplitudes {
    fn amplitudes(&self) -> StateVector;
}

impl Amplitudes for StateVector {
    fn amplitudes(&self) -> StateVector {
        *self
    }
}

impl Amplitudes for ExactState {
    fn amplitudes(&self) -> StateVector {
        self.psi
    }
}

/// Oscillator displacements `u_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    pub times: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

/// `u_i = Re(ψ_i e^{iΩ0 t})` on the trajectory grid.
pub fn reconstruct_displacement<S: Amplitudes>(traj: &Trajectory<S>, q: &QubitParams) -> Result<Displacement> {
    if !q.has_carrier() {
        return Err(crate::error::invalid("omega0_carrier", "displacement needs a finite carrier"));
    }
    let w = q.omega0_carrier;
    let mut u1 = Vec::with_capacity(traj.times.len());
    let mut u2 = Vec::with_capacity(traj.times.len());
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        let a = s.amplitudes();
        let ph = Complex::from_polar(1.0, w * t);
        u1.push((a.psi1 * ph).re);
        u2.push((a.psi2 * ph).re);
    }
    Ok(Displacement {
        times: traj.times.clone(),
        u1,
        u2,
    })
}

/// Velocities `du_i/dt = Re((ψ_i' + iΩ0 ψ_i) e^{iΩ0 t})` for the exact model.
pub fn reconstruct_velocity(traj: &Trajectory<ExactState>, q: &QubitParams) -> Result<Displacement> {
    if !q.has_carrier() {
        return Err(crate::error::invalid("omega0_carrier", "velocity needs a finite carrier"));
    }
    let w = q.omega0_carrier;
    let i = Complex::new(0.0, 1.0);
    let mut v1 = Vec::with_capacity(traj.len());
    let mut v2 = Vec::with_capacity(traj.len());
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        let ph = Complex::from_polar(1.0, w * t);
        v1.push(((s.dpsi_dt.psi1 + i * w * s.psi.psi1) * ph).re);
        v2.push(((s.dpsi_dt.psi2 + i * w * s.psi.psi2) * ph).re);
    }
    Ok(Displacement {
        times: traj.times.clone(),
        u1: v1,
        u2: v2,
    })
}

/// Peak detection settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeakOptions {
    /// Apply a 3-point moving average first.
    pub smooth: bool,
    /// Minimum prominence as a fraction of the (smoothed) row maximum.
    pub rel_prominence: f64,
    /// Minimum absolute prominence.
    pub abs_prominence: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions {
            smooth: true,
            rel_prominence: 0.1,
            abs_prominence: 0.0,
        }
    }
}

/// 3-point moving average; end points average over their two neighbours.
pub fn smooth3(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n < 3 {
        return v.to_vec();
    }
    let mut out = Vec::with_capacity(n);
    out.push(0.5 * (v[0] + v[1]));
    for i in 1..n - 1 {
        out.push((v[i - 1] + v[i] + v[i + 1]) / 3.0);
    }
    out.push(0.5 * (v[n - 2] + v[n - 1]));
    out
}

/// A detected interior local maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
}

/// Interior local maxima whose prominence passes `opts`.
///
/// A plateau counts once, at its middle index. Prominence is the height
/// above the higher of the two lowest points separating the peak from
/// higher ground (or the row ends) on either side.
pub fn find_peaks(values: &[f64], opts: &PeakOptions) -> Vec<Peak> {
    let v = if opts.smooth { smooth3(values) } else { values.to_vec() };
    let n = v.len();
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    let row_max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = (opts.rel_prominence * row_max).max(opts.abs_prominence);
    let mut i = 1;
    while i < n - 1 {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                let h = v[i];
                let mut left_min = h;
                let mut k = i;
                while k > 0 {
                    k -= 1;
                    if v[k] > h {
                        break;
                    }
                    left_min = left_min.min(v[k]);
                }
                let mut right_min = h;
                let mut k = j;
                while k + 1 < n {
                    k += 1;
                    if v[k] > h {
                        break;
                    }
                    right_min = right_min.min(v[k]);
                }
                let prominence = h - left_min.max(right_min);
                if prominence >= threshold && prominence > 0.0 {
                    peaks.push(Peak {
                        index: (i + j) / 2,
                        height: h,
                        prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}
