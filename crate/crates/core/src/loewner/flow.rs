//! Monte Carlo estimate of `P[trace ∩ ray = ∅]` by flowing the ray forward.
//!
//! Rather than building the trace and intersecting it with the ray, each
//! trial carries a set of ray points through the Loewner flow. A point the
//! curve has hit or enclosed ends up left of the driving value, so the verdict
//! is read off the final images. Steps adapt to the geometry,
//! `√(κ dt) = rel_step · d` with `d` the distance from the driving value to the
//! nearest image (and to the force point when ρ ≠ 0), which keeps a trace to a
//! few thousand steps instead of the ~10⁶ a uniform grid resolving the foot of
//! the ray would need. Each slit is placed at a Brownian-bridge midpoint of
//! its step; endpoint placement biases the estimate by O(rel_step).
//!
//! The tip is recomposed only at geometrically spaced steps to test the stop
//! radius, keeping the O(n²) composition cost to O(n) amortized per trial.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{slit_forward, tip_of, trace_from_steps, SleParams, Termination, Trace};
use crate::conformal::WedgeRay;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowConfig {
    /// `√(κ dt)` as a fraction of the distance from the driving value to the
    /// nearest tracked point.
    pub rel_step: f64,
    /// Number of tracked ray points, denser toward the tip.
    pub ray_points: usize,
    pub max_steps: usize,
    /// Parallel width; 0 uses the global pool.
    pub workers: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            rel_step: 0.1,
            ray_points: 32,
            max_steps: 2_000_000,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub hit: bool,
    /// Ended by max_time, max_steps or a Bessel zero instead of the stop radius.
    pub truncated: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub outcome: TrialOutcome,
    /// The piecewise-constant driving actually used, as `(u, dt)` per step.
    pub steps: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayRecord {
    pub theta: f64,
    pub length: f64,
    pub tip: [f64; 2],
}

impl From<&WedgeRay<f64>> for RayRecord {
    fn from(ray: &WedgeRay<f64>) -> Self {
        let tip = ray.tip();
        Self {
            theta: ray.theta().value(),
            length: ray.length(),
            tip: [tip.re, tip.im],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvoidanceEstimate {
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub std_err: f64,
    pub seed: u64,
    pub params: SleParams,
    pub ray: RayRecord,
    pub config: FlowConfig,
    pub truncated: u64,
    pub mean_steps: f64,
    pub warning: Option<String>,
}

fn ray_samples(ray: &WedgeRay<f64>, m: usize) -> Vec<Complex64> {
    (1..=m)
        .map(|j| {
            let s = 1.0 - ((m - j) as f64 / m as f64).powi(2);
            ray.point_at(s)
        })
        .collect()
}

enum Driver {
    Brownian { w: f64 },
    Bessel { x: f64, o: f64, rho: f64 },
}

impl Driver {
    fn w(&self) -> f64 {
        match *self {
            Driver::Brownian { w } => w,
            Driver::Bessel { x, o, .. } => o + x,
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Driver::Brownian { .. } => f64::INFINITY,
            Driver::Bessel { x, .. } => x,
        }
    }

    /// Advances by `h`; false if the Bessel coordinate fails to stay positive.
    fn advance(&mut self, kappa: f64, h: f64, xi: f64) -> bool {
        match self {
            Driver::Brownian { w } => {
                *w += (kappa * h).sqrt() * xi;
                true
            }
            Driver::Bessel { x, o, rho } => {
                let next = *x + (kappa * h).sqrt() * xi + (*rho + 2.0) / *x * h;
                *o -= 2.0 / *x * h;
                *x = next.abs();
                *x > 0.0
            }
        }
    }
}

/// One trial, seeded by `(p.seed, trial)`.
pub fn run_trial(p: &SleParams, ray: &WedgeRay<f64>, cfg: &FlowConfig, trial: u64) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(trial);
    let kappa = p.pair.kappa();
    let rho = p.pair.rho();
    let mut driver = if rho == 0.0 {
        Driver::Brownian { w: p.start_a }
    } else {
        Driver::Bessel {
            x: p.start_a,
            o: 0.0,
            rho,
        }
    };
    let mut points = ray_samples(ray, cfg.ray_points.max(1));
    let hit_floor = 1e-8 * ray.length().min(1.0);
    let mut steps: Vec<(f64, f64)> = Vec::new();
    let mut t = 0.0;
    let mut next_check = 16;
    let mut hit = false;
    let mut truncated = true;
    let mut u = p.start_a;
    while steps.len() < cfg.max_steps {
        let w = driver.w();
        let d = points
            .iter()
            .map(|z| (z - w).norm())
            .fold(driver.scale(), f64::min);
        if d < hit_floor {
            hit = true;
            truncated = false;
            break;
        }
        let dt = (cfg.rel_step * d).powi(2) / kappa;
        let (xi1, xi2): (f64, f64) = (
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        );
        let ok = driver.advance(kappa, dt / 2.0, xi1);
        u = driver.w();
        if !ok || !driver.advance(kappa, dt / 2.0, xi2) {
            break;
        }
        for z in points.iter_mut() {
            *z = slit_forward(*z, u, dt);
        }
        steps.push((u, dt));
        t += dt;
        if steps.len() >= next_check {
            next_check = steps.len() + (steps.len() / 4).max(1);
            if tip_of(&steps).norm() > p.stop_radius {
                truncated = false;
                break;
            }
        }
        if t >= p.max_time {
            break;
        }
    }
    // the check schedule can lag once steps grow large far from the ray
    if truncated && !steps.is_empty() && tip_of(&steps).norm() > p.stop_radius {
        truncated = false;
    }
    // Points the curve has hit or swallowed sit left of the last slit.
    hit = hit || points.iter().any(|z| z.re < u);
    TrialRecord {
        outcome: TrialOutcome {
            hit,
            truncated,
            steps: steps.len(),
        },
        steps,
    }
}

fn check_inputs(p: &SleParams, ray: &WedgeRay<f64>, trials: u64) -> Result<()> {
    p.validate()?;
    if trials < 100 {
        return domain(format!("at least 100 trials are required, got {trials}"));
    }
    let need = 10.0 * ray.length().max(1.0);
    if p.stop_radius < need {
        return domain(format!(
            "stop_radius {} is below 10 * max(1, ray length) = {need}",
            p.stop_radius
        ));
    }
    Ok(())
}

/// Avoidance frequency over `trials` independent traces with the default flow settings.
pub fn mc_wedge_avoidance(
    p: &SleParams,
    ray: &WedgeRay<f64>,
    trials: u64,
) -> Result<AvoidanceEstimate> {
    mc_wedge_avoidance_with(p, ray, trials, &FlowConfig::default())
}

pub fn mc_wedge_avoidance_with(
    p: &SleParams,
    ray: &WedgeRay<f64>,
    trials: u64,
    cfg: &FlowConfig,
) -> Result<AvoidanceEstimate> {
    check_inputs(p, ray, trials)?;
    if !(cfg.rel_step > 0.0 && cfg.rel_step < 1.0) || cfg.ray_points == 0 {
        return domain("rel_step must lie in (0, 1) and ray_points must be positive");
    }
    let tally = || {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let o = run_trial(p, ray, cfg, i).outcome;
                (o.hit as u64, o.truncated as u64, o.steps as u64)
            })
            .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
    };
    let (hits, truncated, steps) = if cfg.workers == 0 {
        tally()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| {
                crate::Error::Domain(format!("cannot start {} workers: {e}", cfg.workers))
            })?
            .install(tally)
    };
    let p_hat = 1.0 - hits as f64 / trials as f64;
    let warning = (truncated == trials).then(|| {
        format!(
            "all trials stopped before reaching radius {} (max_time {})",
            p.stop_radius, p.max_time
        )
    });
    Ok(AvoidanceEstimate {
        trials,
        hits,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        seed: p.seed,
        params: *p,
        ray: ray.into(),
        config: *cfg,
        truncated,
        mean_steps: steps as f64 / trials as f64,
        warning,
    })
}

/// The full trace of one Monte Carlo trial, for dumps and cross-checks.
pub fn mc_trial_trace(
    p: &SleParams,
    ray: &WedgeRay<f64>,
    cfg: &FlowConfig,
    trial: u64,
) -> (TrialRecord, Trace) {
    let record = run_trial(p, ray, cfg, trial);
    let mut trace = trace_from_steps(p.start_a, &record.steps, None);
    trace.params = Some(*p);
    trace.terminated_by = if record.outcome.truncated {
        Termination::Time
    } else {
        Termination::Radius
    };
    (record, trace)
}
