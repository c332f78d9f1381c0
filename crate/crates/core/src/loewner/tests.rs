use super::*;
use crate::exponents::WedgeAngle;

fn params(kappa: f64, rho: f64, a: f64, dt: f64, max_time: f64, seed: u64) -> SleParams {
    SleParams::new(
        SleParameterPair::new(kappa, rho).unwrap(),
        a,
        dt,
        max_time,
        10.0,
        seed,
    )
    .unwrap()
}

fn grid(n: usize, dt: f64) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * dt).collect()
}

fn vertical_ray(len: f64) -> WedgeRay<f64> {
    WedgeRay::new(WedgeAngle::new(0.5).unwrap(), len).unwrap()
}

fn line_trace(points: Vec<Complex64>) -> Trace {
    Trace {
        times: (0..points.len()).map(|k| k as f64).collect(),
        points,
        params: None,
        terminated_by: Termination::Time,
        repaired: Vec::new(),
    }
}

#[test]
fn params_validation() {
    let pair = SleParameterPair::new(8.0 / 3.0, 0.0).unwrap();
    assert!(SleParams::new(pair, 0.0, 1e-4, 1.0, 10.0, 1).is_ok());
    assert!(SleParams::new(pair, 0.0, 1e-2, 1.0, 10.0, 1).is_err());
    assert!(SleParams::new(pair, 0.0, 1e-4, 1.0, 0.0, 1).is_err());
    let forced = SleParameterPair::new(8.0 / 3.0, 2.0).unwrap();
    assert!(SleParams::new(forced, 0.0, 1e-4, 1.0, 10.0, 1).is_err());
    assert!(SleParams::new(forced, 0.1, 1e-4, 1.0, 10.0, 1).is_ok());
}

#[test]
fn zero_driving_is_exact() {
    let dt = 1e-3;
    let d = DrivingPath::constant(0.0, grid(2000, dt)).unwrap();
    let trace = trace_from_driving(&d, None);
    for (t, z) in trace.times.iter().zip(&trace.points) {
        assert!(
            (z - Complex64::new(0.0, 2.0 * t.sqrt())).norm() <= 1e-9,
            "t = {t}: {z}"
        );
    }
}

#[test]
fn constant_driving_translates() {
    let d = DrivingPath::constant(0.7, grid(500, 1e-2)).unwrap();
    let trace = trace_from_driving(&d, None);
    for (t, z) in trace.times.iter().zip(&trace.points) {
        assert!((z - Complex64::new(0.7, 2.0 * t.sqrt())).norm() <= 1e-12);
    }
    // shifting any driving by c shifts the trace by c
    let p = params(8.0 / 3.0, 0.0, 0.0, 1e-3, 1.0, 5);
    let base = sample_driving(&p).unwrap();
    let mut shifted = base.clone();
    shifted.w.iter_mut().for_each(|w| *w += 2.5);
    let (a, b) = (
        trace_from_driving(&base, None),
        trace_from_driving(&shifted, None),
    );
    for (x, y) in a.points.iter().zip(&b.points) {
        assert!((y - x - 2.5).norm() <= 1e-12);
    }
}

#[test]
fn slit_maps_are_inverse() {
    for (z, u, dt) in [
        (Complex64::new(0.3, 0.2), 0.1, 0.01),
        (Complex64::new(-4.0, 1e-3), 2.0, 0.5),
    ] {
        let back = slit_inverse(slit_forward(z, u, dt), u, dt);
        assert!((back - z).norm() < 1e-12);
    }
    // real points of the slit base go to the tip
    let tip = slit_inverse(Complex64::new(0.0, 0.0), 0.0, 0.25);
    assert!((tip - Complex64::new(0.0, 1.0)).norm() < 1e-15);
}

#[test]
fn trace_stays_in_half_plane() {
    for seed in 0..5 {
        let p = params(8.0 / 3.0, 0.0, 0.0, 1e-3, 2.0, seed);
        let trace = trace_from_driving(&sample_driving(&p).unwrap(), Some(&p));
        assert!(trace.points.iter().all(|z| z.im >= -1e-9));
        assert_eq!(trace.points[0], Complex64::new(0.0, 0.0));
        assert!(trace.repaired.is_empty());
    }
}

#[test]
fn stop_radius_ends_trace() {
    let d = DrivingPath::constant(0.0, grid(1000, 1.0)).unwrap();
    let p = SleParams {
        stop_radius: 9.0,
        ..params(8.0 / 3.0, 0.0, 0.0, 1.0, 1000.0, 0)
    };
    let trace = trace_from_driving(&d, Some(&p));
    assert_eq!(trace.terminated_by, Termination::Radius);
    // 2√t first exceeds 9 at t = 21
    assert_eq!(trace.times.last().copied(), Some(21.0));
}

#[test]
fn driving_is_deterministic() {
    let p = params(8.0 / 3.0, 2.0, 0.1, 1e-4, 1.0, 42);
    let a = sample_driving(&p).unwrap();
    let b = sample_driving(&p).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        trace_from_driving(&a.subsample(10), None),
        trace_from_driving(&b.subsample(10), None)
    );
    let c = sample_driving(&SleParams { seed: 43, ..p }).unwrap();
    assert_ne!(a.w, c.w);
}

#[test]
fn brownian_increments_have_driving_law() {
    let kappa = 8.0 / 3.0;
    let dt = 1e-6;
    let p = params(kappa, 0.0, 0.0, dt, 1.0, 2024);
    let d = sample_driving(&p).unwrap();
    assert_eq!(d.len(), 1_000_001);
    let inc: Vec<f64> = d.w.windows(2).map(|w| w[1] - w[0]).collect();
    let n = inc.len() as f64;
    let mean = inc.iter().sum::<f64>() / n;
    let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let s2 = kappa * dt;
    assert!(mean.abs() < 5.0 * (s2 / n).sqrt(), "mean {mean}");
    assert!(
        (var - s2).abs() < 5.0 * s2 * (2.0 / n).sqrt(),
        "var {var} vs {s2}"
    );
    assert!(d.o.iter().all(|&o| o == 0.0));
}

#[test]
fn force_point_moves_left_and_stays_behind() {
    let p = params(8.0 / 3.0, 2.0, 0.1, 1e-4, 2.0, 9);
    let d = sample_driving(&p).unwrap();
    assert!(!d.truncated);
    assert!(d.o.windows(2).all(|o| o[1] <= o[0]));
    assert!(d.w.iter().zip(&d.o).all(|(w, o)| w - o > 0.0));
    assert_eq!((d.w[0], d.o[0]), (0.1, 0.0));
}

#[test]
fn low_dimension_bessel_truncates() {
    // d = 1 + 2(0.5)/(8/3) = 1.375 < 2: the origin is reached
    let mut any = false;
    for seed in 0..20 {
        let p = params(8.0 / 3.0, -1.5, 0.05, 1e-3, 5.0, seed);
        let d = sample_driving(&p).unwrap();
        if d.truncated {
            any = true;
            assert!(d.len() < 5001);
        }
    }
    assert!(any);
}

#[test]
fn bessel_second_moment_matches_squared_bessel() {
    // X = √κ·Bessel_d with d = 4: E[X_t²] = a² + κ d t. The oracle simulates
    // Z = X² directly, dZ = κ d dt + 2√(κ Z) dB.
    let (kappa, rho, a, dt, t_end) = (8.0 / 3.0, 2.0, 0.1, 5e-4, 0.5);
    let d_dim = 1.0 + 2.0 * (rho + 2.0) / kappa;
    let paths = 2000;
    let mut sim = 0.0;
    for seed in 0..paths {
        let p = params(kappa, rho, a, dt, t_end, 10_000 + seed);
        let d = sample_driving(&p).unwrap();
        let x = d.w.last().unwrap() - d.o.last().unwrap();
        sim += x * x;
    }
    sim /= paths as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut oracle = 0.0;
    let steps = (t_end / dt).round() as usize;
    for _ in 0..paths {
        let mut z: f64 = a * a;
        for _ in 0..steps {
            let xi: f64 = StandardNormal.sample(&mut rng);
            z = (z + kappa * d_dim * dt + 2.0 * (kappa * z).sqrt() * dt.sqrt() * xi).abs();
        }
        oracle += z;
    }
    oracle /= paths as f64;
    let exact = a * a + kappa * d_dim * t_end;
    assert!(
        (sim / oracle - 1.0).abs() < 0.05,
        "sim {sim} oracle {oracle}"
    );
    assert!((sim / exact - 1.0).abs() < 0.05, "sim {sim} exact {exact}");
}

/// RMS over paths of the endpoint change between dt and dt/2 at four levels.
fn endpoint_differences(paths: u64) -> Vec<f64> {
    let kappa = 8.0 / 3.0;
    let t_end = 1.0;
    let fine = 1usize << 10;
    let mut sums = [0.0; 3];
    for seed in 0..paths {
        let p = params(kappa, 0.0, 0.0, t_end / fine as f64, t_end, 500 + seed);
        let d = sample_driving(&p).unwrap();
        let tips: Vec<Complex64> = (0..4)
            .map(|j| endpoint_from_driving(&d.subsample(8 >> j)))
            .collect();
        for j in 0..3 {
            sums[j] += (tips[j + 1] - tips[j]).norm_sqr();
        }
    }
    sums.iter().map(|s| (s / paths as f64).sqrt()).collect()
}

#[test]
fn refinement_differences_shrink() {
    // at least the √dt rate of a Hölder-1/2 driver
    let diffs = endpoint_differences(200);
    for w in diffs.windows(2) {
        assert!(w[0] / w[1] > 1.2, "differences {diffs:?}");
    }
}

#[test]
fn endpoint_matches_full_trace() {
    let p = params(8.0 / 3.0, 0.0, 0.0, 1e-3, 1.0, 8);
    let d = sample_driving(&p).unwrap();
    assert_eq!(
        endpoint_from_driving(&d),
        trace_from_driving(&d, None).tip()
    );
}

#[test]
fn avoid_ray_examples() {
    let ray = vertical_ray(1.0);
    let vertical = line_trace(
        (0..=20)
            .map(|k| Complex64::new(0.0, k as f64 * 0.1))
            .collect(),
    );
    assert!(avoid_ray(&vertical, &ray, 0.0));
    let slanted = line_trace(vec![Complex64::new(0.5, 0.0), Complex64::new(1.5, 0.5)]);
    assert!(!avoid_ray(&slanted, &ray, 0.0));
    assert!(!avoid_ray(&vertical, &ray, 1.0));
    let tiny = vertical_ray(1e-12);
    assert!(avoid_ray(&slanted, &tiny, 0.0));
    assert!(avoid_ray(&vertical, &tiny, 0.0));
}

#[test]
fn segment_distance_cases() {
    let c = |x, y| Complex64::new(x, y);
    assert_eq!(
        segment_distance(c(0.0, 0.0), c(2.0, 2.0), c(0.0, 2.0), c(2.0, 0.0)),
        0.0
    );
    assert!(
        (segment_distance(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)) - 1.0).abs() < 1e-15
    );
    assert!(
        (segment_distance(c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)) - 1.0).abs() < 1e-15
    );
    assert_eq!(
        segment_distance(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)),
        0.0
    );
}

fn flagship_params(seed: u64) -> SleParams {
    params(8.0 / 3.0, 0.0, 0.0, 1e-3, 1e4, seed)
}

#[test]
fn degenerate_ray_is_always_avoided() {
    let est = mc_wedge_avoidance(&flagship_params(3), &vertical_ray(1e-9), 200).unwrap();
    assert_eq!(est.hits, 0);
    assert_eq!(est.p_hat, 1.0);
    assert_eq!(est.std_err, 0.0);
}

#[test]
fn mc_preconditions() {
    let p = flagship_params(1);
    assert!(mc_wedge_avoidance(&p, &vertical_ray(0.5), 99).is_err());
    assert!(mc_wedge_avoidance(&p, &vertical_ray(2.0), 100).is_err());
}

#[test]
fn mc_is_independent_of_workers() {
    let p = flagship_params(11);
    let ray = vertical_ray(0.5);
    let cfg = |workers| FlowConfig {
        workers,
        ..FlowConfig::default()
    };
    let a = mc_wedge_avoidance_with(&p, &ray, 120, &cfg(1)).unwrap();
    let b = mc_wedge_avoidance_with(&p, &ray, 120, &cfg(3)).unwrap();
    assert_eq!(
        (a.hits, a.truncated, a.mean_steps),
        (b.hits, b.truncated, b.mean_steps)
    );
    assert!((a.p_hat * 120.0).round() + a.hits as f64 == 120.0);
}

#[test]
fn forward_flow_agrees_with_trace_intersection() {
    // The flow verdict and an explicit intersection test of the trace built
    // from the same steps must agree on nearly every trial; disagreements can
    // only come from the polygonal resolution of near misses.
    let p = flagship_params(7);
    let ray = vertical_ray(0.5);
    let cfg = FlowConfig::default();
    let (mut agree, mut hits) = (0, 0);
    let n = 60;
    for trial in 0..n {
        let (record, trace) = mc_trial_trace(&p, &ray, &cfg, trial);
        let traced_hit = !avoid_ray(&trace, &ray, 0.0);
        hits += record.outcome.hit as u32;
        agree += (traced_hit == record.outcome.hit) as u32;
        assert!(!record.outcome.truncated);
        assert!(trace.points.iter().all(|z| z.im >= -1e-9));
    }
    assert!(hits > 0);
    assert!(agree >= n as u32 - 2, "agreement {agree}/{n}");
}
