//! The slit map of the half-plane minus a segment leaning into the wedge.
//!
//! For an opening θπ and size parameter R,
//!
//! ```text
//! Φ⁻¹(z) = 1 + (z − z₋)^θ (z − z₊)^(1−θ),   z₋ = 1 − Rθ,  z₊ = 1 + R(1 − θ)
//! ```
//!
//! maps ℍ onto ℍ minus a segment from 1 at angle θπ to the negative real
//! axis. Both `z₋` and `z₊` go to the foot 1, and the critical point `z = 1`
//! goes to the tip, so the segment has length `R·θ^θ·(1 − θ)^(1−θ)` (R/2 for a
//! vertical slit). The avoidance probability of a restriction sample is
//! `Φ'(0)^α`, and `Φ'(0) = 1/(Φ⁻¹)'(z₀)` where `Φ⁻¹(z₀) = 0`, `z₀ < z₋`.
//!
//! Only the real branch on `(−∞, z₋)` is evaluated. There both factors are
//! negative and the branch consistent with `Φ⁻¹(z₀) = 0` is
//! `Φ⁻¹(x) = 1 − (z₋ − x)^θ (z₊ − x)^(1−θ)`. The root sits at distance
//! `~R^(−(1−θ)/θ)` from `z₋`, far below the resolution of `z₋` itself for
//! large R, so all root work is done on the offset `u = z₋ − x` and its log.

use num_complex::Complex;

use crate::error::{domain, Error, Result};
use crate::estimate::{loglog_fit, FitResult};
use crate::exponents::{RestrictionExponent, WedgeAngle};
use crate::scalar::{lit, real, Real};

/// Segment from 1 on the real axis, of the given length, making angle θπ with
/// the negative real axis (direction `e^{i(π − θπ)}`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeRay<T> {
    theta: WedgeAngle<T>,
    length: T,
}

impl<T: Real> WedgeRay<T> {
    pub fn new(theta: WedgeAngle<T>, length: T) -> Result<Self> {
        if !(length > T::zero() && length.is_finite()) {
            return domain(format!("ray length must be positive, got {length:?}"));
        }
        Ok(Self { theta, length })
    }

    pub fn theta(&self) -> WedgeAngle<T> {
        self.theta
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn base(&self) -> Complex<T> {
        Complex::new(T::one(), T::zero())
    }

    pub fn direction(&self) -> Complex<T> {
        Complex::from_polar(T::one(), T::PI() * (T::one() - self.theta.value()))
    }

    pub fn tip(&self) -> Complex<T> {
        self.base() + self.direction() * self.length
    }

    /// Point at fraction `s ∈ [0, 1]` of the way from the base to the tip.
    pub fn point_at(&self, s: T) -> Complex<T> {
        self.base() + self.direction() * (self.length * s)
    }
}

/// Endpoints `(1, 1 + L·e^{i(π − θπ)})` of the ray.
pub fn ray_geometry<T: Real>(ray: &WedgeRay<T>) -> (Complex<T>, Complex<T>) {
    (ray.base(), ray.tip())
}

/// `θ^θ (1 − θ)^(1−θ)`: slit length per unit R.
fn slit_factor<T: Real>(theta: T) -> T {
    let xlogx = |x: T| if x > T::zero() { x * x.ln() } else { T::zero() };
    (xlogx(theta) + xlogx(T::one() - theta)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitMap<T> {
    theta: WedgeAngle<T>,
    r: T,
    z_minus: T,
    z_plus: T,
}

/// Preimage `z₀ = z₋ − offset` of the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitRoot<T> {
    pub z0: T,
    pub offset: T,
    pub log_offset: T,
}

impl<T: Real> SlitMap<T> {
    pub fn new(theta: WedgeAngle<T>, r: T) -> Result<Self> {
        if !(r > T::zero() && r.is_finite()) {
            return domain(format!("slit size R must be positive, got {r:?}"));
        }
        let th = theta.value();
        Ok(Self {
            theta,
            r,
            z_minus: T::one() - r * th,
            z_plus: T::one() + r * (T::one() - th),
        })
    }

    /// The map whose removed segment is exactly `ray`.
    pub fn from_ray(ray: &WedgeRay<T>) -> Result<Self> {
        Self::new(ray.theta, ray.length / slit_factor(ray.theta.value()))
    }

    pub fn theta(&self) -> WedgeAngle<T> {
        self.theta
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn z_minus(&self) -> T {
        self.z_minus
    }

    pub fn z_plus(&self) -> T {
        self.z_plus
    }

    pub fn slit_length(&self) -> T {
        self.r * slit_factor(self.theta.value())
    }

    /// The segment removed by `Φ⁻¹`, i.e. `Φ⁻¹([z₋, z₊])`.
    pub fn slit(&self) -> WedgeRay<T> {
        WedgeRay {
            theta: self.theta,
            length: self.slit_length(),
        }
    }

    /// `ln[u^θ (u + R)^(1−θ)]`, the log-modulus of the Φ⁻¹ product at offset `u = e^v`.
    fn log_product(&self, log_offset: T) -> T {
        let th = self.theta.value();
        th * log_offset + (T::one() - th) * (log_offset.exp() + self.r).ln()
    }

    /// `Φ⁻¹(z₋ − u)` for an offset `u > 0`.
    pub fn phi_inverse_at_offset(&self, offset: T) -> Result<T> {
        if !(offset > T::zero()) {
            return domain("offset below the branch point must be positive");
        }
        Ok(T::one() - self.log_product(offset.ln()).exp())
    }

    /// `Φ⁻¹(x)` on the real axis left of the branch point z₋.
    pub fn phi_inverse_on_left_axis(&self, x: T) -> Result<T> {
        if !(x < self.z_minus) {
            return domain(format!(
                "x = {x:?} is not left of the branch point z- = {:?}",
                self.z_minus
            ));
        }
        self.phi_inverse_at_offset(self.z_minus - x)
    }

    /// `(Φ⁻¹)'(x)` by direct differentiation:
    /// `(1 − θ)((x − z₋)/(x − z₊))^θ + θ((x − z₊)/(x − z₋))^(1−θ)`.
    pub fn phi_inverse_derivative(&self, x: T) -> Result<T> {
        if !(x < self.z_minus) {
            return domain(format!(
                "x = {x:?} is not left of the branch point z- = {:?}",
                self.z_minus
            ));
        }
        Ok(self.derivative_at_offset(self.z_minus - x))
    }

    fn derivative_at_offset(&self, u: T) -> T {
        let th = self.theta.value();
        let ratio = u / (u + self.r);
        (T::one() - th) * ratio.powf(th) + th * ratio.recip().powf(T::one() - th)
    }

    /// Root of `Φ⁻¹` left of z₋.
    ///
    /// The log-product is increasing in `v = ln u` with slope at least θ, and
    /// is positive for `u ≥ max(2, 20·R^(−c))`, which fixes the bracket;
    /// bisection on `v` is followed by a Newton polish.
    pub fn find_z0(&self, tol: T) -> Result<SlitRoot<T>> {
        if !(tol > T::zero()) {
            return domain("tolerance must be positive");
        }
        let th = self.theta.value();
        let c = self.theta.excess();
        let guess = -c * self.r.ln();
        let mut hi = T::max(lit::<T>(2).ln(), guess + lit::<T>(20).ln());
        let g_hi = self.log_product(hi);
        let mut lo = hi - (g_hi / th + T::one());
        if !(g_hi > T::zero()) || !(self.log_product(lo) < T::zero()) {
            return Err(Error::RootSearch(format!(
                "could not bracket z0 for theta = {th:?}, R = {:?}",
                self.r
            )));
        }
        for _ in 0..200 {
            let mid = (lo + hi) / lit(2);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_product(mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= real::<T>(1e-6) * (T::one() + mid.abs()) {
                break;
            }
        }
        let mut v = (lo + hi) / lit(2);
        for _ in 0..8 {
            let u = v.exp();
            let slope = th + (T::one() - th) * u / (u + self.r);
            let step = self.log_product(v) / slope;
            let next = (v - step).max(lo).min(hi);
            if next == v {
                break;
            }
            v = next;
        }
        let offset = v.exp();
        let residual = self.log_product(v).exp() - T::one();
        if !(residual.abs() <= tol) {
            return Err(Error::RootSearch(format!(
                "z0 residual {residual:?} above tolerance {tol:?} (theta = {th:?}, R = {:?})",
                self.r
            )));
        }
        Ok(SlitRoot {
            z0: self.z_minus - offset,
            offset,
            log_offset: v,
        })
    }

    /// `|Φ⁻¹(z₀)|` evaluated in offset coordinates.
    pub fn root_residual(&self, root: &SlitRoot<T>) -> T {
        (self.log_product(root.log_offset).exp() - T::one()).abs()
    }

    /// `(Φ⁻¹)'(z₀)` from the root identity `Φ⁻¹(z₀) = 0`:
    /// `−(1 − θ)/(z₀ − z₊) − θ/(z₀ − z₋)`.
    pub fn phi_inverse_derivative_at_root(&self, root: &SlitRoot<T>) -> Result<T> {
        if !(root.offset > T::zero()) {
            return domain("z0 must lie left of the branch point");
        }
        let th = self.theta.value();
        Ok((T::one() - th) / (self.r + root.offset) + th * (-root.log_offset).exp())
    }

    /// Direct evaluation of the derivative formula at the root, for cross-checks.
    pub fn phi_inverse_derivative_direct_at_root(&self, root: &SlitRoot<T>) -> T {
        self.derivative_at_offset(root.offset)
    }

    fn root_tolerance() -> T {
        T::max(real(1e-12), T::epsilon() * lit(64))
    }

    /// `Φ'(0) = 1/(Φ⁻¹)'(z₀)`; exactly 1 in the half-plane.
    pub fn phi_prime_zero(&self) -> Result<T> {
        if self.theta.is_half_plane() {
            return Ok(T::one());
        }
        let root = self.find_z0(Self::root_tolerance())?;
        Ok(self.phi_inverse_derivative_at_root(&root)?.recip())
    }
}

/// `P[K ∩ slit = ∅] = Φ'(0)^α` for a one-sided restriction sample of exponent α.
pub fn ray_avoid_probability<T: Real>(
    alpha: RestrictionExponent<T>,
    map: &SlitMap<T>,
) -> Result<T> {
    Ok(map.phi_prime_zero()?.powf(alpha.value()))
}

/// Power-law fit of `(Φ⁻¹)'(z₀) ≈ k·R^c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit<T> {
    pub c_hat: T,
    pub k_hat: T,
    pub fit: FitResult<T>,
}

/// Recovers the exponent c of `(Φ⁻¹)'(z₀) ~ R^c` from a grid of sizes.
///
/// The grid needs at least four increasing sizes spanning three decades.
pub fn fit_c<T: Real>(theta: WedgeAngle<T>, r_grid: &[T]) -> Result<ExponentFit<T>> {
    if r_grid.len() < 4 {
        return domain(format!(
            "fit_c needs at least 4 sizes, got {}",
            r_grid.len()
        ));
    }
    let (first, last) = (r_grid[0], r_grid[r_grid.len() - 1]);
    if !(first > T::zero() && last / first >= real(1e3)) {
        return domain("fit_c needs a positive grid spanning at least three decades");
    }
    let slopes = r_grid
        .iter()
        .map(|&r| {
            let map = SlitMap::new(theta, r)?;
            let root = map.find_z0(SlitMap::<T>::root_tolerance())?;
            map.phi_inverse_derivative_at_root(&root)
        })
        .collect::<Result<Vec<T>>>()?;
    let fit = loglog_fit(r_grid, &slopes)?;
    Ok(ExponentFit {
        c_hat: fit.slope,
        k_hat: fit.prefactor(),
        fit,
    })
}

/// One row of the slit-map table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeMapRow<T> {
    pub r: T,
    pub z0: T,
    pub phi_prime_zero: T,
    pub predicted_p: T,
}

/// `(R, z₀, Φ'(0), Φ'(0)^α)` over a grid of sizes.
pub fn wedge_map_table<T: Real>(
    theta: WedgeAngle<T>,
    r_grid: &[T],
    alpha: RestrictionExponent<T>,
) -> Result<Vec<WedgeMapRow<T>>> {
    r_grid
        .iter()
        .map(|&r| {
            let map = SlitMap::new(theta, r)?;
            let root = map.find_z0(SlitMap::<T>::root_tolerance())?;
            let phi_prime_zero = map.phi_prime_zero()?;
            Ok(WedgeMapRow {
                r,
                z0: root.z0,
                phi_prime_zero,
                predicted_p: phi_prime_zero.powf(alpha.value()),
            })
        })
        .collect()
}
