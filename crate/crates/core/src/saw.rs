//! Self-avoiding walks on ℤ² in wedge-shaped masks.
//!
//! Lattice counts carry a nonuniversal growth factor μ^N on top of the
//! continuum power law, so predictions are only ever compared through ratios
//! of counts in two masks, where μ^N cancels. No absolute-exponent fit is
//! offered on purpose.
//!
//! Masks are closed (walks may run along the boundary lines) and the walk
//! starts at the apex.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::estimate::{batch_means, successive_slopes, LocalSlope, SlopeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WedgeMask {
    FullPlane,
    /// `y ≥ 0`, θ = 1.
    HalfPlane,
    /// `x ≥ 0, y ≥ 0`, θ = 1/2.
    Quarter,
    /// `y ≥ 0, y ≥ x`: the wedge from the diagonal round to the negative axis, θ = 3/4.
    DiagonalWedge,
    /// `0 ≤ y ≤ x`, θ = 1/4.
    Octant,
}

impl WedgeMask {
    pub const ALL: [WedgeMask; 5] = [
        Self::FullPlane,
        Self::HalfPlane,
        Self::Quarter,
        Self::DiagonalWedge,
        Self::Octant,
    ];

    #[inline]
    pub fn admits(self, x: i32, y: i32) -> bool {
        match self {
            Self::FullPlane => true,
            Self::HalfPlane => y >= 0,
            Self::Quarter => x >= 0 && y >= 0,
            Self::DiagonalWedge => y >= 0 && y >= x,
            Self::Octant => y >= 0 && y <= x,
        }
    }

    /// Continuum opening in units of π; the full plane has none.
    pub fn theta(self) -> Option<f64> {
        match self {
            Self::FullPlane => None,
            Self::HalfPlane => Some(1.0),
            Self::Quarter => Some(0.5),
            Self::DiagonalWedge => Some(0.75),
            Self::Octant => Some(0.25),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FullPlane => "full",
            Self::HalfPlane => "half",
            Self::Quarter => "quarter",
            Self::DiagonalWedge => "diagonal",
            Self::Octant => "octant",
        }
    }
}

impl fmt::Display for WedgeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WedgeMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "unknown mask {s:?} (full, half, quarter, diagonal, octant)"
                ))
            })
    }
}

pub type Site = (i32, i32);

const STEPS: [Site; 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeWalk {
    points: Vec<Site>,
}

impl LatticeWalk {
    pub fn new(points: Vec<Site>, mask: WedgeMask) -> Result<Self> {
        if points.first() != Some(&(0, 0)) {
            return domain("a walk starts at the origin");
        }
        if points
            .windows(2)
            .any(|p| (p[1].0 - p[0].0).abs() + (p[1].1 - p[0].1).abs() != 1)
        {
            return domain("consecutive sites must be lattice neighbours");
        }
        if let Some(p) = points.iter().find(|p| !mask.admits(p.0, p.1)) {
            return domain(format!("site {p:?} lies outside the {mask} mask"));
        }
        let mut seen = FxHashMap::default();
        for (i, p) in points.iter().enumerate() {
            if let Some(j) = seen.insert(*p, i) {
                return domain(format!("site {p:?} visited at steps {j} and {i}"));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Site] {
        &self.points
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() == 1
    }

    pub fn end_to_end_sq(&self) -> i64 {
        let (x, y) = *self.points.last().expect("nonempty");
        x as i64 * x as i64 + y as i64 * y as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub mask: WedgeMask,
    /// `counts[N] = C_N`.
    pub counts: Vec<BigUint>,
}

impl CountTable {
    pub fn n_max(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,count\n");
        for (n, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{n},{c}\n"));
        }
        out
    }
}

pub const ENUMERATION_GUARD: usize = 28;

/// Exact counts `C_0..C_{n_max}` by depth-first backtracking, refusing
/// `n_max` above [`ENUMERATION_GUARD`].
pub fn enumerate_walks(mask: WedgeMask, n_max: usize) -> Result<CountTable> {
    enumerate_walks_with_limit(mask, n_max, ENUMERATION_GUARD)
}

pub fn enumerate_walks_with_limit(
    mask: WedgeMask,
    n_max: usize,
    limit: usize,
) -> Result<CountTable> {
    if n_max > limit {
        return Err(Error::Guard {
            what: "n_max",
            requested: n_max,
            limit,
        });
    }
    Ok(enumerate_in_order(mask, n_max, STEPS))
}

/// Enumeration with an explicit order of trial directions; the counts must
/// not depend on it.
pub fn enumerate_in_order(mask: WedgeMask, n_max: usize, order: [Site; 4]) -> CountTable {
    let mut counts = vec![0u64; n_max + 1];
    counts[0] = 1;
    // Independent subtrees below each admissible two-step prefix.
    let mut prefixes = Vec::new();
    for a in order {
        if !mask.admits(a.0, a.1) || n_max == 0 {
            continue;
        }
        counts[1] += 1;
        for b in order {
            let p = (a.0 + b.0, a.1 + b.1);
            if p != (0, 0) && mask.admits(p.0, p.1) && n_max >= 2 {
                prefixes.push(vec![(0, 0), a, p]);
            }
        }
    }
    let sub = prefixes
        .into_par_iter()
        .map(|prefix| {
            let mut local = vec![0u64; n_max + 1];
            Grid::new(n_max).extend(mask, &prefix, n_max, order, &mut local);
            local
        })
        .reduce(
            || vec![0u64; n_max + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    for (c, s) in counts.iter_mut().zip(&sub) {
        *c += s;
    }
    CountTable {
        mask,
        counts: counts.into_iter().map(BigUint::from).collect(),
    }
}

struct Grid {
    side: i32,
    occupied: Vec<bool>,
}

impl Grid {
    fn new(n: usize) -> Self {
        let side = 2 * n as i32 + 3;
        Self {
            side,
            occupied: vec![false; (side * side) as usize],
        }
    }

    #[inline]
    fn index(&self, p: Site) -> usize {
        let c = self.side / 2;
        ((p.1 + c) * self.side + p.0 + c) as usize
    }

    fn extend(
        &mut self,
        mask: WedgeMask,
        prefix: &[Site],
        n_max: usize,
        order: [Site; 4],
        counts: &mut [u64],
    ) {
        for &p in prefix {
            let i = self.index(p);
            self.occupied[i] = true;
        }
        counts[prefix.len() - 1] += 1;
        self.dfs(
            mask,
            *prefix.last().expect("nonempty"),
            prefix.len() - 1,
            n_max,
            order,
            counts,
        );
    }

    fn dfs(
        &mut self,
        mask: WedgeMask,
        at: Site,
        depth: usize,
        n_max: usize,
        order: [Site; 4],
        counts: &mut [u64],
    ) {
        if depth == n_max {
            return;
        }
        for d in order {
            let p = (at.0 + d.0, at.1 + d.1);
            let i = self.index(p);
            if self.occupied[i] || !mask.admits(p.0, p.1) {
                continue;
            }
            counts[depth + 1] += 1;
            if depth + 1 < n_max {
                self.occupied[i] = true;
                self.dfs(mask, p, depth + 1, n_max, order, counts);
                self.occupied[i] = false;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSeries {
    /// `(N, C_N^a / C_N^b)` for N ≥ 1.
    pub ratios: Vec<(usize, f64)>,
    /// `ln(r_N / r_{N−1}) / ln(N / (N − 1))` for N ≥ 2.
    pub slopes: Vec<(usize, f64)>,
    /// Extrapolation of the same-parity series ending at n_max.
    pub extrapolated: f64,
    pub extrapolation: SlopeSeries<f64>,
}

/// Local exponents of `C_N^a / C_N^b ~ N^(γ_a − γ_b)`.
///
/// Square-lattice counts in a wedge alternate with the parity of N, so the
/// terminal estimate extrapolates over every second N (ending at n_max), with
/// a 1/N correction.
pub fn ratio_exponent_series(a: &CountTable, b: &CountTable) -> Result<RatioSeries> {
    if a.n_max() != b.n_max() {
        return domain(format!(
            "tables differ in length ({} vs {})",
            a.n_max(),
            b.n_max()
        ));
    }
    let n_max = a.n_max();
    if n_max < 8 {
        return domain(format!("ratio series needs n_max >= 8, got {n_max}"));
    }
    let as_f64 = |c: &BigUint| c.to_f64().filter(|v| *v > 0.0 && v.is_finite());
    let ratios = (1..=n_max)
        .map(|n| match (as_f64(&a.counts[n]), as_f64(&b.counts[n])) {
            (Some(x), Some(y)) => Ok((n, x / y)),
            _ => domain(format!("count at N = {n} is zero")),
        })
        .collect::<Result<Vec<_>>>()?;
    let slopes = ratios
        .windows(2)
        .map(|w| {
            let (n, r) = w[1];
            let (m, q) = w[0];
            (n, (r / q).ln() / (n as f64 / m as f64).ln())
        })
        .collect();
    let (ns, vs): (Vec<f64>, Vec<f64>) = ratios
        .iter()
        .filter(|(n, _)| (n_max - n) % 2 == 0 && *n >= 2)
        .map(|&(n, r)| (n as f64, r))
        .unzip();
    let extrapolation = successive_slopes(&ns, &vs)?;
    Ok(RatioSeries {
        ratios,
        slopes,
        extrapolated: extrapolation.extrapolated,
        extrapolation,
    })
}

impl RatioSeries {
    /// Same-parity two-point slopes used by the extrapolation.
    pub fn parity_slopes(&self) -> &[LocalSlope<f64>] {
        &self.extrapolation.slopes
    }
}

const SYMMETRIES: [[i32; 4]; 7] = [
    [0, -1, 1, 0],  // rotate +90°
    [-1, 0, 0, -1], // rotate 180°
    [0, 1, -1, 0],  // rotate −90°
    [1, 0, 0, -1],  // reflect y ↦ −y
    [-1, 0, 0, 1],  // reflect x ↦ −x
    [0, 1, 1, 0],   // reflect across y = x
    [0, -1, -1, 0], // reflect across y = −x
];

/// Pivot Markov chain on walks of fixed length from the mask apex.
///
/// A move picks a site `k < n` and a non-identity lattice symmetry, applies it
/// to the part of the walk after `k` about site `k`, and is accepted iff the
/// result is self-avoiding and stays inside the mask. The proposal is
/// symmetric, so the uniform distribution on walks is stationary.
pub struct PivotChain {
    mask: WedgeMask,
    points: Vec<Site>,
    index: FxHashMap<Site, u32>,
    rng: ChaCha8Rng,
    proposal: Vec<Site>,
    pub attempted: u64,
    pub accepted: u64,
}

impl PivotChain {
    pub fn new(mask: WedgeMask, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return domain("walk length must be positive");
        }
        let dir = STEPS
            .into_iter()
            .find(|d| (1..=n as i32).all(|k| mask.admits(k * d.0, k * d.1)))
            .ok_or_else(|| Error::Domain(format!("no straight walk fits the {mask} mask")))?;
        let points: Vec<Site> = (0..=n as i32).map(|k| (k * dir.0, k * dir.1)).collect();
        let index = points
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, i as u32))
            .collect();
        Ok(Self {
            mask,
            points,
            index,
            rng: ChaCha8Rng::seed_from_u64(seed),
            proposal: Vec::with_capacity(n),
            attempted: 0,
            accepted: 0,
        })
    }

    pub fn points(&self) -> &[Site] {
        &self.points
    }

    pub fn end_to_end_sq(&self) -> i64 {
        let (x, y) = *self.points.last().expect("nonempty");
        x as i64 * x as i64 + y as i64 * y as i64
    }

    /// One attempted pivot; true if accepted.
    pub fn step(&mut self) -> bool {
        let n = self.points.len() - 1;
        let k = self.rng.gen_range(0..n);
        let g = SYMMETRIES[self.rng.gen_range(0..SYMMETRIES.len())];
        self.attempted += 1;
        let (px, py) = self.points[k];
        self.proposal.clear();
        for &(x, y) in &self.points[k + 1..] {
            let (dx, dy) = (x - px, y - py);
            let q = (px + g[0] * dx + g[1] * dy, py + g[2] * dx + g[3] * dy);
            if !self.mask.admits(q.0, q.1) {
                return false;
            }
            // the moved part is rigid, so only the fixed part can collide
            if self.index.get(&q).is_some_and(|&j| j as usize <= k) {
                return false;
            }
            self.proposal.push(q);
        }
        for p in &self.points[k + 1..] {
            self.index.remove(p);
        }
        for (off, q) in self.proposal.iter().enumerate() {
            let i = k + 1 + off;
            self.points[i] = *q;
            self.index.insert(*q, i as u32);
        }
        self.accepted += 1;
        true
    }

    pub fn walk(&self) -> Result<LatticeWalk> {
        LatticeWalk::new(self.points.clone(), self.mask)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PivotStats {
    pub mask: WedgeMask,
    pub n: usize,
    pub sweeps: u64,
    pub seed: u64,
    /// Accepted pivots discarded before measuring.
    pub burn_in_accepted: u64,
    pub samples: u64,
    pub mean_r2: f64,
    /// Batch-means standard error.
    pub std_err: f64,
    pub batches: usize,
    pub acceptance_rate: f64,
}

pub const PIVOT_MAX_N: usize = 10_000;

/// `⟨R²_N⟩` from `sweeps · n` pivot attempts after a burn-in of `10·n`
/// accepted pivots, measuring after every attempt.
pub fn pivot_sample(mask: WedgeMask, n: usize, sweeps: u64, seed: u64) -> Result<PivotStats> {
    if n == 0 || n > PIVOT_MAX_N {
        return domain(format!(
            "pivot walk length must lie in 1..={PIVOT_MAX_N}, got {n}"
        ));
    }
    if sweeps == 0 {
        return domain("sweeps must be positive");
    }
    let mut chain = PivotChain::new(mask, n, seed)?;
    let burn_in = 10 * n as u64;
    let attempt_cap = 1000 * burn_in;
    while chain.accepted < burn_in && chain.attempted < attempt_cap {
        chain.step();
    }
    let burn_in_accepted = chain.accepted;
    let (a0, c0) = (chain.attempted, chain.accepted);
    let total = sweeps * n as u64;
    let mut r2 = Vec::with_capacity(total as usize);
    for _ in 0..total {
        chain.step();
        r2.push(chain.end_to_end_sq() as f64);
    }
    let batches = if r2.len() >= 40 { 20 } else { 1 };
    let (mean_r2, std_err) = if batches > 1 {
        batch_means(&r2, batches)?
    } else {
        (r2.iter().sum::<f64>() / r2.len() as f64, f64::NAN)
    };
    Ok(PivotStats {
        mask,
        n,
        sweeps,
        seed,
        burn_in_accepted,
        samples: r2.len() as u64,
        mean_r2,
        std_err,
        batches,
        acceptance_rate: (chain.accepted - c0) as f64 / (chain.attempted - a0) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(t: &CountTable) -> Vec<u64> {
        t.counts.iter().map(|c| c.to_u64().unwrap()).collect()
    }

    #[test]
    fn known_counts() {
        let full = counts(&enumerate_walks(WedgeMask::FullPlane, 10).unwrap());
        assert_eq!(
            full,
            [1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100]
        );
        assert_eq!(
            counts(&enumerate_walks(WedgeMask::HalfPlane, 3).unwrap()),
            [1, 3, 7, 19]
        );
        assert_eq!(
            counts(&enumerate_walks(WedgeMask::Quarter, 2).unwrap())[1],
            2
        );
        assert_eq!(
            counts(&enumerate_walks(WedgeMask::Octant, 1).unwrap())[1],
            1
        );
        assert_eq!(
            counts(&enumerate_walks(WedgeMask::DiagonalWedge, 1).unwrap())[1],
            2
        );
        assert_eq!(
            counts(&enumerate_walks(WedgeMask::FullPlane, 0).unwrap()),
            [1]
        );
    }

    #[test]
    fn guard_refuses_large_runs() {
        assert!(matches!(
            enumerate_walks(WedgeMask::Quarter, 29),
            Err(Error::Guard {
                requested: 29,
                limit: 28,
                ..
            })
        ));
        assert!(enumerate_walks_with_limit(WedgeMask::Quarter, 3, 2).is_err());
    }

    #[test]
    fn order_independence_under_reflection() {
        let reflected = STEPS.map(|(x, y)| (-x, y));
        for mask in WedgeMask::ALL {
            assert_eq!(
                enumerate_walks(mask, 12).unwrap(),
                enumerate_in_order(mask, 12, reflected)
            );
        }
    }

    #[test]
    fn masks_are_nested() {
        let tables: Vec<Vec<u64>> = [
            WedgeMask::Octant,
            WedgeMask::Quarter,
            WedgeMask::HalfPlane,
            WedgeMask::FullPlane,
        ]
        .iter()
        .map(|&m| counts(&enumerate_walks(m, 14).unwrap()))
        .collect();
        for n in 0..=14 {
            assert!(tables.windows(2).all(|t| t[0][n] <= t[1][n]), "N = {n}");
        }
    }

    #[test]
    fn full_plane_is_submultiplicative() {
        let c = counts(&enumerate_walks(WedgeMask::FullPlane, 14).unwrap());
        for n in 0..=7 {
            for m in 0..=7 {
                assert!(c[n + m] <= c[n] * c[m]);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let csv = enumerate_walks(WedgeMask::Quarter, 2).unwrap().to_csv();
        assert_eq!(csv, "n,count\n0,1\n1,2\n2,4\n");
    }

    #[test]
    fn mask_parsing() {
        for m in WedgeMask::ALL {
            assert_eq!(m.name().parse::<WedgeMask>().unwrap(), m);
        }
        assert!("cone".parse::<WedgeMask>().is_err());
    }

    #[test]
    fn identical_tables_have_flat_ratio() {
        let t = enumerate_walks(WedgeMask::Quarter, 12).unwrap();
        let s = ratio_exponent_series(&t, &t).unwrap();
        assert!(s.slopes.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(s.extrapolated, 0.0);
    }

    #[test]
    fn ratio_series_recovers_synthetic_exponent() {
        // C_a = N^(−1/2) μ^N vs C_b = μ^N, stored as exact integers
        let mu = 2.638_f64;
        let scale = 1e6;
        let make = |p: f64| CountTable {
            mask: WedgeMask::FullPlane,
            counts: (0..=30)
                .map(|n| {
                    let v = scale * mu.powi(n) * if n == 0 { 1.0 } else { (n as f64).powf(p) };
                    BigUint::from(v.round() as u128)
                })
                .collect(),
        };
        let s = ratio_exponent_series(&make(-0.5), &make(0.0)).unwrap();
        assert!((s.extrapolated + 0.5).abs() < 1e-3, "{}", s.extrapolated);
        assert!(ratio_exponent_series(
            &make(0.0),
            &enumerate_walks(WedgeMask::Quarter, 10).unwrap()
        )
        .is_err());
    }

    #[test]
    fn ratio_rejects_short_or_zero_tables() {
        let t = enumerate_walks(WedgeMask::Quarter, 6).unwrap();
        assert!(ratio_exponent_series(&t, &t).is_err());
        let mut z = enumerate_walks(WedgeMask::Quarter, 9).unwrap();
        let h = enumerate_walks(WedgeMask::HalfPlane, 9).unwrap();
        z.counts[5] = BigUint::from(0u8);
        assert!(ratio_exponent_series(&z, &h).is_err());
    }

    #[test]
    fn walk_validation() {
        assert!(LatticeWalk::new(vec![(0, 0), (1, 0), (1, 1)], WedgeMask::Quarter).is_ok());
        assert!(LatticeWalk::new(vec![(0, 0), (1, 0), (0, 0)], WedgeMask::FullPlane).is_err());
        assert!(LatticeWalk::new(vec![(0, 0), (0, -1)], WedgeMask::HalfPlane).is_err());
        assert!(LatticeWalk::new(vec![(0, 0), (2, 0)], WedgeMask::FullPlane).is_err());
        assert!(LatticeWalk::new(vec![(1, 0)], WedgeMask::FullPlane).is_err());
    }

    #[test]
    fn single_step_walk() {
        for mask in WedgeMask::ALL {
            let s = pivot_sample(mask, 1, 100, 3).unwrap();
            assert_eq!(s.mean_r2, 1.0);
        }
    }

    #[test]
    fn pivot_keeps_walks_valid() {
        for mask in WedgeMask::ALL {
            let mut chain = PivotChain::new(mask, 60, 17).unwrap();
            for i in 0..3000 {
                chain.step();
                if i % 97 == 0 {
                    assert!(chain.walk().is_ok());
                }
            }
            assert!(chain.accepted > 100);
        }
    }

    #[test]
    fn pivot_is_reproducible() {
        let a = pivot_sample(WedgeMask::Quarter, 50, 20, 9).unwrap();
        let b = pivot_sample(WedgeMask::Quarter, 50, 20, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.std_err > 0.0 && a.acceptance_rate > 0.0 && a.acceptance_rate < 1.0);
    }

    #[test]
    fn pivot_visits_all_walks_uniformly() {
        // n = 4: 100 walks. Thinned visit counts against the uniform law.
        let mut chain = PivotChain::new(WedgeMask::FullPlane, 4, 1234).unwrap();
        let mut freq: FxHashMap<Vec<Site>, u64> = FxHashMap::default();
        for _ in 0..1000 {
            chain.step();
        }
        let samples = 100_000u64;
        for _ in 0..samples {
            for _ in 0..20 {
                chain.step();
            }
            *freq.entry(chain.points().to_vec()).or_default() += 1;
        }
        assert_eq!(freq.len(), 100);
        let expected = samples as f64 / 100.0;
        let chi2: f64 = freq
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99 degrees of freedom
        assert!((chi2 - 99.0).abs() < 3.0 * 198f64.sqrt(), "chi2 {chi2}");
        for &c in freq.values() {
            assert!((c as f64 - expected).abs() < 4.0 * expected.sqrt());
        }
    }
}
