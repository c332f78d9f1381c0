//! Closed-form exponents for SLE(κ, ρ) curves, one-sided restriction samples
//! and self-avoiding walks, in the half-plane and in wedges of opening θπ.
//!
//! Every decay exponent is returned as a [`DecayExponent`] tagged with the
//! scaling variable it refers to:
//!
//! * [`InA`]: `P ~ a^σ` as the start point `a → 0`,
//! * [`InR`]: `P ~ R^(-λ)` as the size `R → ∞` (reported positive),
//! * [`InN`]: `P ~ N^γ` or `C_N ~ N^γ` as the step count `N → ∞` (literal power).
//!
//! The tag is a type parameter, so adding exponents of different conventions
//! does not compile. Conversions are explicit: [`DecayExponent::at_radius`]
//! uses scale invariance (`a ↔ 1/R`), [`DecayExponent::in_steps`] uses the
//! fractal dimension (`R ~ N^(1/d)`).
//!
//! Rational laws are generic over [`Field`] and evaluate exactly for rational
//! scalars; laws with square roots need [`Real`].

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, Sub};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::scalar::{frac, lit, Field, Real};

/// κ of the restriction curve, 8/3.
pub fn restriction_kappa<T: Field>() -> T {
    frac(8, 3)
}

/// (κ, ρ) with κ > 0 and ρ > −2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SleParameterPair<T> {
    kappa: T,
    rho: T,
}

impl<T: Field> SleParameterPair<T> {
    pub fn new(kappa: T, rho: T) -> Result<Self> {
        if !(kappa > T::zero()) {
            return domain(format!("kappa must be positive, got {kappa:?}"));
        }
        if !(rho > lit(-2)) {
            return domain(format!("rho must exceed -2, got {rho:?}"));
        }
        Ok(Self { kappa, rho })
    }

    /// Plain SLE_κ (ρ = 0).
    pub fn chordal(kappa: T) -> Result<Self> {
        Self::new(kappa, T::zero())
    }

    /// SLE(8/3, ρ): the right boundary of a one-sided restriction sample.
    pub fn restriction(rho: T) -> Result<Self> {
        Self::new(restriction_kappa(), rho)
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn rho(&self) -> T {
        self.rho
    }
}

/// Exponent α of a one-sided restriction measure, `P[K ∩ A = ∅] = Φ_A'(0)^α`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RestrictionExponent<T>(T);

impl<T: Field> RestrictionExponent<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero()) {
            return domain(format!(
                "restriction exponent must be nonnegative, got {alpha:?}"
            ));
        }
        Ok(Self(alpha))
    }

    /// 5/8, the exponent of SLE_8/3.
    pub fn sle_8_3() -> Self {
        Self(frac(5, 8))
    }

    /// 1, a Brownian excursion.
    pub fn brownian() -> Self {
        Self(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }

    /// Checks α ≥ 1/3, the range in which the boundary SLE(8/3, ρ) has
    /// Bessel dimension d ≥ 2 and never touches the negative half-line.
    pub fn require_boundary(self) -> Result<Self> {
        if self.0 < frac(1, 3) {
            return domain(format!(
                "alpha = {:?} < 1/3: the boundary SLE(8/3, rho) would hit the negative half-line",
                self.0
            ));
        }
        Ok(self)
    }
}

/// Wedge opening θπ with 0 < θ ≤ 1; θ = 1 is the half-plane.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct WedgeAngle<T>(T);

impl<T: Field> WedgeAngle<T> {
    pub fn new(theta: T) -> Result<Self> {
        if !(theta > T::zero() && theta <= T::one()) {
            return domain(format!(
                "wedge angle theta must lie in (0, 1], got {theta:?}"
            ));
        }
        Ok(Self(theta))
    }

    pub fn half_plane() -> Self {
        Self(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn is_half_plane(self) -> bool {
        self.0 == T::one()
    }

    /// The wedge factor `1/θ − 1 = (1 − θ)/θ`. It is also the exponent `c` in
    /// `z₀ − z₋ ~ R^(−c)` and `(Φ⁻¹)'(z₀) ~ R^c` for the slit map.
    pub fn excess(self) -> T {
        (T::one() - self.0) / self.0
    }
}

/// Scaling variable of a decay exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConventionKind {
    InA,
    InR,
    InN,
}

impl ConventionKind {
    pub fn law(self) -> &'static str {
        match self {
            ConventionKind::InA => "P ~ a^value as a -> 0",
            ConventionKind::InR => "P ~ R^(-value) as R -> inf",
            ConventionKind::InN => "P or C_N ~ N^value as N -> inf",
        }
    }
}

impl fmt::Display for ConventionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConventionKind::InA => "in-a",
            ConventionKind::InR => "in-R",
            ConventionKind::InN => "in-N",
        })
    }
}

pub trait Convention: Copy + fmt::Debug + Default + PartialEq {
    const KIND: ConventionKind;
}

/// `P ~ a^σ` as a → 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InA;
/// `P ~ R^(−λ)` as R → ∞.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InR;
/// `N^γ` as N → ∞.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InN;

impl Convention for InA {
    const KIND: ConventionKind = ConventionKind::InA;
}
impl Convention for InR {
    const KIND: ConventionKind = ConventionKind::InR;
}
impl Convention for InN {
    const KIND: ConventionKind = ConventionKind::InN;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayExponent<T, C> {
    value: T,
    convention: PhantomData<C>,
}

impl<T: Field, C: Convention> DecayExponent<T, C> {
    pub fn new(value: T) -> Self {
        Self {
            value,
            convention: PhantomData,
        }
    }

    pub fn value(self) -> T {
        self.value
    }

    pub fn convention(self) -> ConventionKind {
        C::KIND
    }
}

impl<T: Field> DecayExponent<T, InA> {
    /// Scale invariance: a start point at distance a from a unit-size target
    /// is the same event as a unit start point and a target at distance R = 1/a.
    pub fn at_radius(self) -> DecayExponent<T, InR> {
        DecayExponent::new(self.value)
    }
}

impl<T: Field> DecayExponent<T, InR> {
    /// `R^(−λ)` rewritten in the step count N of a walk of fractal dimension
    /// `d` (`R ~ N^(1/d)`), giving `N^(−λ/d)`.
    pub fn in_steps(self, fractal_dimension: T) -> DecayExponent<T, InN> {
        DecayExponent::new(-self.value / fractal_dimension)
    }
}

impl<T: Field, C: Convention> Add for DecayExponent<T, C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value)
    }
}

impl<T: Field, C: Convention> Sub for DecayExponent<T, C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value)
    }
}

impl<T: Field + fmt::Display, C: Convention> fmt::Display for DecayExponent<T, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.value, C::KIND.law())
    }
}

/// One row of the n-curve avoiding chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvoidingChainRow<T> {
    pub n: u32,
    pub rho_n: T,
    pub alpha_n: T,
}

/// ρ̃ and α̃ of a restriction boundary conditioned to hide a second sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HidingTilde<T> {
    pub rho_tilde: T,
    pub alpha_tilde: RestrictionExponent<T>,
}

/// Hausdorff dimension of the SLE_κ trace, `min(2, 1 + κ/8)`.
///
/// κ = 0 is accepted as the degenerate straight line.
pub fn sle_fractal_dimension<T: Field>(kappa: T) -> Result<T> {
    if !(kappa >= T::zero()) {
        return domain(format!("kappa must be nonnegative, got {kappa:?}"));
    }
    let d = T::one() + kappa / lit(8);
    Ok(if d > lit(2) { lit(2) } else { d })
}

/// Dimension of the Bessel process `(W − O)/√κ`: `1 + 2(ρ + 2)/κ`.
pub fn bessel_dimension<T: Field>(p: SleParameterPair<T>) -> T {
    T::one() + lit::<T>(2) * (p.rho + lit(2)) / p.kappa
}

/// Restriction exponent of the SLE(8/3, ρ) boundary: `(ρ + 2)(3ρ + 10)/32`.
pub fn alpha_from_rho<T: Field>(rho: T) -> Result<RestrictionExponent<T>> {
    if !(rho > lit(-2)) {
        return domain(format!(
            "rho must exceed -2, got {rho:?} (alpha -> 0 at the boundary)"
        ));
    }
    RestrictionExponent::new((rho + lit(2)) * (lit::<T>(3) * rho + lit(10)) / lit(32))
}

/// Inverse of [`alpha_from_rho`] on ρ > −2: `(−8 + 2√(1 + 24α))/3`.
pub fn rho_from_alpha<T: Real>(alpha: RestrictionExponent<T>) -> Result<T> {
    let a = alpha.value();
    if !(a > T::zero()) {
        return domain("rho_from_alpha requires alpha > 0");
    }
    Ok((lit::<T>(-8) + lit::<T>(2) * root_24(a)) / lit(3))
}

/// `√(1 + 24α)`.
fn root_24<T: Real>(alpha: T) -> T {
    (T::one() + lit::<T>(24) * alpha).sqrt()
}

/// Shared square root of the conditioning and intersection laws,
/// `√(4α/κ + ((ρ + 2)/κ − 1/2)²)`, together with the shift `(ρ + 2)/κ − 1/2`.
fn conditioning_root<T: Real>(p: SleParameterPair<T>, alpha: RestrictionExponent<T>) -> (T, T) {
    let shift = (p.rho + lit(2)) / p.kappa - frac(1, 2);
    let root = (lit::<T>(4) * alpha.value() / p.kappa + shift * shift).sqrt();
    (shift, root)
}

/// ρ̄ of an SLE(κ, ρ) conditioned to avoid an independent restriction sample
/// of exponent α: `κ/2 − 2 + κ√(4α/κ + ((ρ + 2)/κ − 1/2)²)`.
pub fn conditioned_rho<T: Real>(p: SleParameterPair<T>, alpha: RestrictionExponent<T>) -> T {
    let (_, root) = conditioning_root(p, alpha);
    p.kappa / lit(2) - lit(2) + p.kappa * root
}

/// Decay exponent of the probability that an SLE(κ, ρ) started at a > 0 avoids
/// a restriction sample of exponent α, as a → 0.
pub fn intersection_sigma<T: Real>(
    p: SleParameterPair<T>,
    alpha: RestrictionExponent<T>,
) -> DecayExponent<T, InA> {
    let (shift, root) = conditioning_root(p, alpha);
    DecayExponent::new(root - shift)
}

/// Hiding exponent: the decay of the probability that a sample of exponent β
/// avoids the right boundary of a sample of exponent α.
///
/// Closed form `(3 − √(1 + 24α) + √(24β + (√(1 + 24α) − 3)²))/4`, which is
/// [`intersection_sigma`] at `(8/3, rho_from_alpha(α))`. The same value holds
/// for `R^(−σ)` decay; see [`DecayExponent::at_radius`].
pub fn hiding_sigma<T: Real>(
    alpha: RestrictionExponent<T>,
    beta: RestrictionExponent<T>,
) -> Result<DecayExponent<T, InA>> {
    let s = root_24(alpha.require_boundary()?.value());
    let three = lit::<T>(3);
    let inner = (lit::<T>(24) * beta.value() + (s - three) * (s - three)).sqrt();
    Ok(DecayExponent::new((three - s + inner) / lit(4)))
}

/// Iterates the conditioning recursion for n curves started at a, 2a, …, na:
/// ρ₁ = 0, α₁ = 5/8, then `ρ_(n+1) = conditioned_rho((κ, 0), α_n)` and
/// `α_(n+1) = alpha_from_rho(ρ_(n+1))`.
pub fn avoiding_chain<T: Real>(n_max: u32, kappa: T) -> Result<Vec<AvoidingChainRow<T>>> {
    if n_max == 0 {
        return domain("avoiding_chain needs n_max >= 1");
    }
    let base = SleParameterPair::chordal(kappa)?;
    let mut rows = Vec::with_capacity(n_max as usize);
    let mut rho = T::zero();
    let mut alpha = alpha_from_rho(rho)?;
    rows.push(AvoidingChainRow {
        n: 1,
        rho_n: rho,
        alpha_n: alpha.value(),
    });
    for n in 2..=n_max {
        rho = conditioned_rho(base, alpha);
        alpha = alpha_from_rho(rho)?;
        rows.push(AvoidingChainRow {
            n,
            rho_n: rho,
            alpha_n: alpha.value(),
        });
    }
    Ok(rows)
}

/// Closed form of the κ = 8/3 chain: ρ_n = 2(n − 1), α_n = n(3n + 2)/8.
pub fn avoiding_chain_row<T: Field>(n: u32) -> Result<AvoidingChainRow<T>> {
    let nn = positive_n::<T>(n)?;
    Ok(AvoidingChainRow {
        n,
        rho_n: lit::<T>(2) * (nn - T::one()),
        alpha_n: nn * (lit::<T>(3) * nn + lit(2)) / lit(8),
    })
}

fn positive_n<T: Field>(n: u32) -> Result<T> {
    if n == 0 {
        return domain("number of curves must be at least 1");
    }
    Ok(lit(n as i64))
}

/// Mutual-avoidance exponent of n independent SLE_8/3: `3n(n − 1)/8`, the
/// excess of α_n over the 5n/8 of n independent curves.
pub fn mutual_avoidance_sigma<T: Field>(n: u32) -> Result<DecayExponent<T, InA>> {
    let nn = positive_n::<T>(n)?;
    Ok(DecayExponent::new(
        lit::<T>(3) * nn * (nn - T::one()) / lit(8),
    ))
}

/// Power of N in the number of configurations of n mutually avoiding
/// half-plane walks: `3n(5 − 6n)/64`.
pub fn halfplane_counting_exponent<T: Field>(n: u32) -> Result<DecayExponent<T, InN>> {
    let nn = positive_n::<T>(n)?;
    Ok(DecayExponent::new(
        lit::<T>(3) * nn * (lit::<T>(5) - lit::<T>(6) * nn) / lit(64),
    ))
}

/// Power of N in the probability that n walks are mutually avoiding:
/// `9n(1 − n)/32`.
pub fn saw_mutual_avoidance_n_exponent<T: Field>(n: u32) -> Result<DecayExponent<T, InN>> {
    let nn = positive_n::<T>(n)?;
    Ok(DecayExponent::new(
        lit::<T>(9) * nn * (T::one() - nn) / lit(32),
    ))
}

/// Decay of the probability that a restriction sample of exponent α avoids
/// the slit of length ~R: `λ = α(1 − θ)/θ`.
pub fn wedge_ray_exponent<T: Field>(
    alpha: RestrictionExponent<T>,
    theta: WedgeAngle<T>,
) -> DecayExponent<T, InR> {
    DecayExponent::new(alpha.value() * theta.excess())
}

/// Power of N in the probability that n mutually avoiding walks stay in the
/// wedge: `−(3n(3n + 2)/32)(1/θ − 1)`.
pub fn wedge_confinement_n_exponent<T: Field>(
    n: u32,
    theta: WedgeAngle<T>,
) -> Result<DecayExponent<T, InN>> {
    let nn = positive_n::<T>(n)?;
    let coeff = lit::<T>(3) * nn * (lit::<T>(3) * nn + lit(2)) / lit(32);
    Ok(DecayExponent::new(-coeff * theta.excess()))
}

/// Counting exponent γ(n, θ) of n mutually avoiding walks in the wedge:
/// `27n/64 − 3n(3n + 2)/(32θ)`.
pub fn wedge_gamma<T: Field>(n: u32, theta: WedgeAngle<T>) -> Result<DecayExponent<T, InN>> {
    let nn = positive_n::<T>(n)?;
    let lead = lit::<T>(27) * nn / lit(64);
    let wedge = lit::<T>(3) * nn * (lit::<T>(3) * nn + lit(2)) / (lit::<T>(32) * theta.value());
    Ok(DecayExponent::new(lead - wedge))
}

/// Conditioning of the boundary of a sample of exponent α on hiding a sample
/// of exponent β, with `Q = √(3β/2 + (√(1 + 24α) − 3)²/16)`:
/// `ρ̃ = −2/3 + (8/3)Q` and `α̃ = β + 1/3 + (√(1 + 24α) − 3)²/24 + Q`.
pub fn hiding_tilde<T: Real>(
    alpha: RestrictionExponent<T>,
    beta: RestrictionExponent<T>,
) -> Result<HidingTilde<T>> {
    let s = root_24(alpha.require_boundary()?.value());
    let b = beta.value();
    let gap = s - lit(3);
    let q = (lit::<T>(3) * b / lit(2) + gap * gap / lit(16)).sqrt();
    let rho_tilde = frac::<T>(-2, 3) + frac::<T>(8, 3) * q;
    let alpha_tilde = b + frac(1, 3) + gap * gap / lit(24) + q;
    Ok(HidingTilde {
        rho_tilde,
        alpha_tilde: RestrictionExponent::new(alpha_tilde)?,
    })
}

/// Hiding exponent in the wedge, `λ = σ + α̃(1/θ − 1)` with `P ~ R^(−λ)`.
///
/// Reduces to the half-plane [`hiding_sigma`] at θ = 1 and to
/// [`wedge_ray_exponent`] at β = 0.
pub fn wedge_hiding_exponent<T: Real>(
    alpha: RestrictionExponent<T>,
    beta: RestrictionExponent<T>,
    theta: WedgeAngle<T>,
) -> Result<DecayExponent<T, InR>> {
    let sigma = hiding_sigma(alpha, beta)?.at_radius();
    let tilde = hiding_tilde(alpha, beta)?;
    Ok(sigma + wedge_ray_exponent(tilde.alpha_tilde, theta))
}
