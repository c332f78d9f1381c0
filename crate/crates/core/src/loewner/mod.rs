//! Chordal Loewner traces driven by SLE(κ,ρ) and Monte Carlo ray avoidance.
//!
//! Traces are built from piecewise-constant driving: on a step of length `dt`
//! with constant driving `u`, the Loewner flow is the vertical-slit map
//! `g(z) = u + √((z − u)² + 4dt)`, whose inverse carries `u` to the slit tip
//! `u + 2i√dt`. Composing inverses from the latest step down to the first
//! gives the trace point exactly for that driving.
//!
//! The driving function of SLE(κ,ρ) with force point `O` satisfies
//! `W − O = √κ · Bessel_d`, `d = 1 + 2(ρ + 2)/κ`, and the force point follows
//! the flow, `dO = −2/(W − O) dt`.

mod flow;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::conformal::WedgeRay;
use crate::error::{domain, Result};
use crate::exponents::{bessel_dimension, SleParameterPair};

pub use flow::{
    mc_trial_trace, mc_wedge_avoidance, mc_wedge_avoidance_with, run_trial, AvoidanceEstimate,
    FlowConfig, RayRecord, TrialOutcome, TrialRecord,
};

/// Run contract for one family of traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SleParams {
    pub pair: SleParameterPair<f64>,
    /// Starting driving value; the force point starts at 0.
    pub start_a: f64,
    pub dt: f64,
    pub max_time: f64,
    pub stop_radius: f64,
    pub seed: u64,
}

impl SleParams {
    pub fn new(
        pair: SleParameterPair<f64>,
        start_a: f64,
        dt: f64,
        max_time: f64,
        stop_radius: f64,
        seed: u64,
    ) -> Result<Self> {
        let p = Self {
            pair,
            start_a,
            dt,
            max_time,
            stop_radius,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.max_time > 0.0 && self.max_time.is_finite()) {
            return domain("dt and max_time must be positive and finite");
        }
        if self.dt > 1e-3 * self.max_time {
            return domain(format!(
                "dt = {} exceeds 1e-3 * max_time = {}",
                self.dt,
                1e-3 * self.max_time
            ));
        }
        if !(self.stop_radius > 0.0) {
            return domain("stop_radius must be positive");
        }
        if !(self.start_a >= 0.0 && self.start_a.is_finite()) {
            return domain("start_a must be a finite nonnegative number");
        }
        if self.pair.rho() != 0.0 && self.start_a == 0.0 {
            return domain(
                "rho != 0 needs start_a > 0 so the Bessel process starts off its singularity",
            );
        }
        Ok(())
    }

    /// Step size of the fixed-step design rule: `√(κ dt) = 0.01 · min(1, scale)`,
    /// where `scale` is the distance scale of the ray base.
    pub fn design_dt(kappa: f64, scale: f64) -> f64 {
        let h = 0.01 * scale.min(1.0);
        h * h / kappa
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrivingPath {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    pub o: Vec<f64>,
    /// The Bessel coordinate hit zero (only possible for d < 2) and the path
    /// was cut at the last valid sample.
    pub truncated: bool,
}

impl DrivingPath {
    pub fn new(times: Vec<f64>, w: Vec<f64>, o: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != w.len() || times.len() != o.len() {
            return domain("driving samples need equal, nonzero lengths");
        }
        if times[0] != 0.0 || times.windows(2).any(|p| !(p[1] > p[0])) {
            return domain("driving times must start at 0 and increase");
        }
        Ok(Self {
            times,
            w,
            o,
            truncated: false,
        })
    }

    /// Driving held at `w` on the given time grid, force point at 0.
    pub fn constant(w: f64, times: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::new(times, vec![w; n], vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Every `factor`-th sample, keeping the origin.
    pub fn subsample(&self, factor: usize) -> Self {
        let pick = |v: &[f64]| v.iter().step_by(factor.max(1)).copied().collect::<Vec<_>>();
        Self {
            times: pick(&self.times),
            w: pick(&self.w),
            o: pick(&self.o),
            truncated: self.truncated,
        }
    }
}

/// Samples the driving pair `(W, O)` on the uniform grid `k·dt`.
///
/// For ρ = 0 the force point plays no role and `W = a + √κ B`. Otherwise
/// `X = W − O` is advanced by Euler–Maruyama on
/// `dX = √κ dB + (ρ + 2)/X dt` with reflection `X ← |X|`, `O` by
/// `dO = −2/X dt`, and `W = O + X`. For d < 2 a step landing on or across 0
/// ends the path with `truncated` set.
pub fn sample_driving(p: &SleParams) -> Result<DrivingPath> {
    p.validate()?;
    let kappa = p.pair.kappa();
    let rho = p.pair.rho();
    let n = (p.max_time / p.dt).ceil() as usize;
    let sd = (kappa * p.dt).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut times = Vec::with_capacity(n + 1);
    let mut w = Vec::with_capacity(n + 1);
    let mut o = Vec::with_capacity(n + 1);
    times.push(0.0);
    w.push(p.start_a);
    o.push(0.0);
    let mut truncated = false;
    if rho == 0.0 {
        let mut cur = p.start_a;
        for k in 1..=n {
            let xi: f64 = StandardNormal.sample(&mut rng);
            cur += sd * xi;
            times.push(k as f64 * p.dt);
            w.push(cur);
            o.push(0.0);
        }
    } else {
        let reflect = bessel_dimension(p.pair) >= 2.0;
        let (mut x, mut force) = (p.start_a, 0.0);
        for k in 1..=n {
            let xi: f64 = StandardNormal.sample(&mut rng);
            let next = x + sd * xi + (rho + 2.0) / x * p.dt;
            force -= 2.0 / x * p.dt;
            // an exact zero cannot be reflected away
            if next == 0.0 || (next < 0.0 && !reflect) {
                truncated = true;
                break;
            }
            x = next.abs();
            times.push(k as f64 * p.dt);
            w.push(force + x);
            o.push(force);
        }
    }
    Ok(DrivingPath {
        times,
        w,
        o,
        truncated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Radius,
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub points: Vec<Complex64>,
    pub params: Option<SleParams>,
    pub terminated_by: Termination,
    /// Indices of points that overflowed and were replaced by their predecessor.
    pub repaired: Vec<usize>,
}

impl Trace {
    pub fn tip(&self) -> Complex64 {
        *self
            .points
            .last()
            .expect("a trace has at least its start point")
    }
}

/// Forward vertical-slit step with constant driving `u` over time `dt`.
#[inline]
pub(crate) fn slit_forward(z: Complex64, u: f64, dt: f64) -> Complex64 {
    let w = z - u;
    let s = (w * w + 4.0 * dt).sqrt();
    u + if s.im < 0.0 { -s } else { s }
}

/// Inverse of [`slit_forward`].
#[inline]
pub(crate) fn slit_inverse(z: Complex64, u: f64, dt: f64) -> Complex64 {
    let w = z - u;
    let s = (w * w - 4.0 * dt).sqrt();
    u + if s.im < 0.0 { -s } else { s }
}

/// Tip after the steps `(u_k, dt_k)`: `G₁⁻¹ ∘ … ∘ G_{n−1}⁻¹(u_n + 2i√dt_n)`.
pub(crate) fn tip_of(steps: &[(f64, f64)]) -> Complex64 {
    let Some(&(u, dt)) = steps.last() else {
        return Complex64::new(0.0, 0.0);
    };
    steps[..steps.len() - 1]
        .iter()
        .rev()
        .fold(Complex64::new(u, 2.0 * dt.sqrt()), |z, &(u, h)| {
            slit_inverse(z, u, h)
        })
}

/// Trace from piecewise-constant steps, one point per step, stopping once the
/// tip leaves the disk of radius `stop_radius` (if given).
pub fn trace_from_steps(start: f64, steps: &[(f64, f64)], stop_radius: Option<f64>) -> Trace {
    let mut times = vec![0.0];
    let mut points = vec![Complex64::new(start, 0.0)];
    let mut repaired = Vec::new();
    let mut terminated_by = Termination::Time;
    let mut t = 0.0;
    for k in 1..=steps.len() {
        t += steps[k - 1].1;
        let mut z = tip_of(&steps[..k]);
        if !(z.re.is_finite() && z.im.is_finite()) {
            z = *points.last().expect("nonempty");
            repaired.push(k);
        }
        times.push(t);
        points.push(z);
        if stop_radius.is_some_and(|r| z.norm() > r) {
            terminated_by = Termination::Radius;
            break;
        }
    }
    Trace {
        times,
        points,
        params: None,
        terminated_by,
        repaired,
    }
}

/// Trace of a sampled driving path. Step `k` holds the driving at its
/// right-endpoint sample `W_k`, which makes the trace exact when `W` is
/// piecewise constant with jumps on the grid.
pub fn trace_from_driving(d: &DrivingPath, p: Option<&SleParams>) -> Trace {
    let steps: Vec<(f64, f64)> = (1..d.len())
        .map(|k| (d.w[k], d.times[k] - d.times[k - 1]))
        .collect();
    let mut trace = trace_from_steps(d.w[0], &steps, p.map(|p| p.stop_radius));
    trace.params = p.copied();
    trace
}

/// Final trace point of a sampled driving path, without the intermediate points.
pub fn endpoint_from_driving(d: &DrivingPath) -> Complex64 {
    if d.len() == 1 {
        return Complex64::new(d.w[0], 0.0);
    }
    let steps: Vec<(f64, f64)> = (1..d.len())
        .map(|k| (d.w[k], d.times[k] - d.times[k - 1]))
        .collect();
    tip_of(&steps)
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    (p - (a + ab * s.clamp(0.0, 1.0))).norm()
}

fn orientation(a: Complex64, b: Complex64, c: Complex64) -> i8 {
    let v = cross(b - a, c - a);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn on_segment(p: Complex64, a: Complex64, b: Complex64) -> bool {
    p.re >= a.re.min(b.re)
        && p.re <= a.re.max(b.re)
        && p.im >= a.im.min(b.im)
        && p.im <= a.im.max(b.im)
}

/// Distance between two closed segments (0 if they intersect).
pub fn segment_distance(a0: Complex64, a1: Complex64, b0: Complex64, b1: Complex64) -> f64 {
    let (o1, o2) = (orientation(a0, a1, b0), orientation(a0, a1, b1));
    let (o3, o4) = (orientation(b0, b1, a0), orientation(b0, b1, a1));
    let crosses = o1 * o2 < 0 && o3 * o4 < 0;
    let touches = (o1 == 0 && on_segment(b0, a0, a1))
        || (o2 == 0 && on_segment(b1, a0, a1))
        || (o3 == 0 && on_segment(a0, b0, b1))
        || (o4 == 0 && on_segment(a1, b0, b1));
    if crosses || touches {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// True iff no segment of the polygonal trace comes within `eps` of the ray
/// (`eps = 0` is exact intersection).
pub fn avoid_ray(trace: &Trace, ray: &WedgeRay<f64>, eps: f64) -> bool {
    let (b0, b1) = (ray.base(), ray.tip());
    if trace.points.len() == 1 {
        return point_segment_distance(trace.points[0], b0, b1) > eps;
    }
    trace.points.windows(2).all(|s| {
        let d = segment_distance(s[0], s[1], b0, b1);
        if eps == 0.0 {
            d > 0.0
        } else {
            d > eps
        }
    })
}

#[cfg(test)]
mod tests;
