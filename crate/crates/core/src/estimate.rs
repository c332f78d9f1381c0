//! Log-log regression, finite-size slope extrapolation and binomial
//! intervals.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::scalar::{lit, real, Real};

/// Ordinary least squares of `log y` on `log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_std_err: T,
    pub residual_rms: T,
    pub n_points: usize,
}

impl<T: Real> FitResult<T> {
    /// Fitted prefactor `exp(intercept)`.
    pub fn prefactor(&self) -> T {
        self.intercept.exp()
    }
}

fn check_series<T: Real>(xs: &[T], ys: &[T], min_len: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return domain(format!(
            "series lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        ));
    }
    if xs.len() < min_len {
        return domain(format!("need at least {min_len} points, got {}", xs.len()));
    }
    if xs
        .iter()
        .chain(ys)
        .any(|v| !(*v > T::zero()) || !v.is_finite())
    {
        return domain("log-log estimation needs finite positive values");
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("abscissae must be strictly increasing");
    }
    Ok(())
}

/// Least-squares slope of `log ys` against `log xs`. Exact on pure power laws.
pub fn loglog_fit<T: Real>(xs: &[T], ys: &[T]) -> Result<FitResult<T>> {
    check_series(xs, ys, 2)?;
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let n = lit::<T>(lx.len() as i64);
    let mx = lx.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = ly.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (&x, &y) in lx.iter().zip(&ly) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    if !(sxx > T::zero()) {
        return domain("degenerate abscissa spread");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = lx
        .iter()
        .zip(&ly)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .fold(T::zero(), |a, b| a + b);
    let slope_std_err = if lx.len() > 2 {
        (ssr / (n - lit(2)) / sxx).sqrt()
    } else {
        T::zero()
    };
    Ok(FitResult {
        slope,
        intercept,
        slope_std_err,
        residual_rms: (ssr / n).sqrt(),
        n_points: lx.len(),
    })
}

/// Two-point log-log slope between consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalSlope<T> {
    pub n_lo: T,
    pub n_hi: T,
    pub slope: T,
}

/// How the terminal exponent estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extrapolation {
    /// Exact three-point solve of `v = c·N^p·(1 + q/N)` on the last three samples.
    ThreePoint,
    /// No admissible root; linear extrapolation of the last two slopes in the
    /// effective 1/N of each pair.
    TwoSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeSeries<T> {
    pub slopes: Vec<LocalSlope<T>>,
    pub extrapolated: T,
    pub method: Extrapolation,
}

/// Successive log-log slopes and a terminal estimate that removes a leading
/// `1/N` correction.
///
/// The estimate is exact for `v_N = c·N^p·(1 + q/N)`: with `y_i = v_i·N_i^(−p)`
/// the last three points `(1/N_i, y_i)` are collinear exactly at the true p.
/// Roots of that collinearity condition are bracketed near the last
/// two-point slope and the closest one is returned.
pub fn successive_slopes<T: Real>(ns: &[T], vs: &[T]) -> Result<SlopeSeries<T>> {
    check_series(ns, vs, 3)?;
    let slopes: Vec<LocalSlope<T>> = ns
        .windows(2)
        .zip(vs.windows(2))
        .map(|(n, v)| LocalSlope {
            n_lo: n[0],
            n_hi: n[1],
            slope: (v[1] / v[0]).ln() / (n[1] / n[0]).ln(),
        })
        .collect();
    let k = ns.len();
    let last = slopes[slopes.len() - 1].slope;
    let prev = slopes[slopes.len() - 2].slope;
    let (n3, v3) = (&ns[k - 3..], &vs[k - 3..]);
    if let Some(p) = three_point_exponent(n3, v3, last, prev) {
        return Ok(SlopeSeries {
            slopes,
            extrapolated: p,
            method: Extrapolation::ThreePoint,
        });
    }
    // Pair slope = p − q/m + O(N⁻²) with m = ln(N₂/N₁)/(1/N₁ − 1/N₂).
    let eff = |a: T, b: T| (b / a).ln() / (a.recip() - b.recip());
    let m1 = eff(ns[k - 3], ns[k - 2]);
    let m2 = eff(ns[k - 2], ns[k - 1]);
    let p = (m2 * last - m1 * prev) / (m2 - m1);
    Ok(SlopeSeries {
        slopes,
        extrapolated: p,
        method: Extrapolation::TwoSlope,
    })
}

fn three_point_exponent<T: Real>(ns: &[T], vs: &[T], last: T, prev: T) -> Option<T> {
    let x: Vec<T> = ns.iter().map(|n| n.recip()).collect();
    let ln_n: Vec<T> = ns.iter().map(|n| n.ln()).collect();
    let ln_v: Vec<T> = vs.iter().map(|v| v.ln()).collect();
    let collinearity = |p: T| {
        let y: Vec<T> = (0..3)
            .map(|i| ((ln_v[i] - ln_v[2]) - p * (ln_n[i] - ln_n[2])).exp())
            .collect();
        (y[1] - y[0]) * (x[2] - x[1]) - (y[2] - y[1]) * (x[1] - x[0])
    };

    let half_width = T::max(real(0.5), lit::<T>(8) * (last - prev).abs());
    let steps = 4000;
    let h = lit::<T>(2) * half_width / lit(steps);
    let mut best: Option<T> = None;
    let mut consider = |root: T| {
        if best.map_or(true, |b| (root - last).abs() < (b - last).abs()) {
            best = Some(root);
        }
    };
    let mut a = last - half_width;
    let mut fa = collinearity(a);
    for i in 1..=steps {
        let b = last - half_width + h * lit(i);
        let fb = collinearity(b);
        if fa == T::zero() {
            consider(a);
        } else if fa * fb < T::zero() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = (lo + hi) / lit(2);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = collinearity(mid);
                if fm == T::zero() {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < T::zero()) == (flo < T::zero()) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            consider((lo + hi) / lit(2));
        }
        a = b;
        fa = fb;
    }
    best
}

/// Wilson score interval for `hits` successes in `trials`, at `z` standard
/// deviations.
pub fn proportion_interval<T: Real>(hits: u64, trials: u64, z: T) -> Result<(T, T)> {
    if trials == 0 || hits > trials {
        return domain(format!(
            "need 0 <= hits <= trials and trials >= 1, got {hits}/{trials}"
        ));
    }
    if !(z >= T::zero()) {
        return domain("z must be nonnegative");
    }
    let n = T::from_u64(trials).expect("trial count is representable");
    let p = T::from_u64(hits).expect("hit count is representable") / n;
    let z2 = z * z;
    let denom = T::one() + z2 / n;
    let center = (p + z2 / (lit::<T>(2) * n)) / denom;
    let half = z * (p * (T::one() - p) / n + z2 / (lit::<T>(4) * n * n)).sqrt() / denom;
    let low = if hits == 0 {
        T::zero()
    } else {
        (center - half).max(T::zero()).min(p)
    };
    let high = if hits == trials {
        T::one()
    } else {
        (center + half).min(T::one()).max(p)
    };
    Ok((low, high))
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_means<T: Real>(samples: &[T], batches: usize) -> Result<(T, T)> {
    if batches < 2 || samples.len() < batches {
        return domain(format!(
            "batch means needs at least 2 batches and one sample per batch ({} samples, {batches} batches)",
            samples.len()
        ));
    }
    let size = samples.len() / batches;
    let means: Vec<T> = samples
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().fold(T::zero(), |a, &b| a + b) / lit(size as i64))
        .collect();
    let b = lit::<T>(batches as i64);
    let mean = means.iter().fold(T::zero(), |a, &m| a + m) / b;
    let var = means
        .iter()
        .fold(T::zero(), |a, &m| a + (m - mean) * (m - mean))
        / (b - T::one());
    Ok((mean, (var / b).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fit_exact_power_laws() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let f = loglog_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!(f.residual_rms < 1e-14);
        assert_eq!(f.n_points, 4);

        let xs = [0.5, 1.0, 7.0, 40.0, 300.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.625)).collect();
        let f = loglog_fit(&xs, &ys).unwrap();
        assert!((f.slope + 0.625).abs() < 1e-12);
        assert!((f.prefactor() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_with_vanishing_correction() {
        let xs: Vec<f64> = (0..=8).map(|i| 10f64.powf(2.0 + 0.5 * i as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * (1.0 + 0.1 / x)).collect();
        let f = loglog_fit(&xs, &ys).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(loglog_fit(&[1.0], &[1.0]).is_err());
        assert!(loglog_fit(&[1.0, 2.0], &[1.0, 0.0]).is_err());
        assert!(loglog_fit(&[2.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(loglog_fit(&[1.0, 2.0, 3.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn slopes_pure_and_constant() {
        let ns: Vec<f64> = (1..=6).map(|n| n as f64 * 10.0).collect();
        let vs: Vec<f64> = ns.iter().map(|n| 2.5 * n.powf(-1.3)).collect();
        let s = successive_slopes(&ns, &vs).unwrap();
        assert!(s.slopes.iter().all(|l| (l.slope + 1.3).abs() < 1e-12));
        assert!((s.extrapolated + 1.3).abs() < 1e-10);

        let s = successive_slopes(&ns, &[4.0; 6]).unwrap();
        assert!(s.slopes.iter().all(|l| l.slope.abs() < 1e-15));
        assert!(s.extrapolated.abs() < 1e-10);
    }

    #[test]
    fn slopes_remove_inverse_n_correction() {
        let ns: Vec<f64> = (1..=10).map(|k| 100.0 * k as f64).collect();
        let vs: Vec<f64> = ns.iter().map(|n| n.powf(-0.5) * (1.0 + 2.0 / n)).collect();
        let s = successive_slopes(&ns, &vs).unwrap();
        assert_eq!(s.method, Extrapolation::ThreePoint);
        assert!((s.extrapolated + 0.5).abs() < 1e-3);
        // the raw slopes carry the correction
        assert!((s.slopes.last().unwrap().slope + 0.5).abs() > 1e-5);
    }

    #[test]
    fn wilson_interval_examples() {
        let (lo, _) = proportion_interval(0, 100, 1.96).unwrap();
        assert_eq!(lo, 0.0);
        let (lo, hi) = proportion_interval::<f64>(50, 100, 1.96).unwrap();
        assert!(((0.5 - lo) - (hi - 0.5)).abs() < 1e-14);
        let (lo, hi) = proportion_interval::<f64>(9326, 10000, 3.0).unwrap();
        assert!(lo < 0.9326 && 0.9326 < hi);
        assert!((hi - lo - 0.015).abs() < 1e-3, "width {}", hi - lo);
        assert!(proportion_interval(5, 4, 1.0).is_err());
        assert!(proportion_interval(0, 0, 1.0).is_err());
    }

    #[test]
    fn batch_means_of_constant() {
        let (m, e) = batch_means(&[3.0; 100], 10).unwrap();
        assert_eq!(m, 3.0);
        assert_eq!(e, 0.0);
        assert!(batch_means(&[1.0, 2.0], 3).is_err());
    }

    proptest! {
        #[test]
        fn fit_is_scale_invariant(scale in 1e-6f64..1e6, p in -3.0f64..3.0, noise in prop::collection::vec(-0.2f64..0.2, 6)) {
            let xs: Vec<f64> = (1..=6).map(|i| i as f64 * 1.7).collect();
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x.powf(p) * e.exp()).collect();
            let scaled: Vec<f64> = ys.iter().map(|y| y * scale).collect();
            let a = loglog_fit(&xs, &ys).unwrap();
            let b = loglog_fit(&xs, &scaled).unwrap();
            prop_assert!((a.slope - b.slope).abs() < 1e-9);
            prop_assert!((b.intercept - a.intercept - scale.ln()).abs() < 1e-9);
        }

        #[test]
        fn extrapolation_exact_for_model(c in 0.1f64..10.0, p in -2.0f64..2.0, q in -3.0f64..5.0, n0 in 8u32..40) {
            let ns: Vec<f64> = (0..5).map(|i| (n0 + 2 * i) as f64).collect();
            let vs: Vec<f64> = ns.iter().map(|n| c * n.powf(p) * (1.0 + q / n)).collect();
            let s = successive_slopes(&ns, &vs).unwrap();
            prop_assert_eq!(s.method, Extrapolation::ThreePoint);
            prop_assert!((s.extrapolated - p).abs() < 1e-9, "got {} want {}", s.extrapolated, p);
        }

        #[test]
        fn wilson_contains_estimate(trials in 1u64..5000, frac in 0.0f64..=1.0, z in 0.0f64..5.0) {
            let hits = ((trials as f64) * frac).round() as u64;
            let (lo, hi) = proportion_interval(hits, trials, z).unwrap();
            let p = hits as f64 / trials as f64;
            prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}
