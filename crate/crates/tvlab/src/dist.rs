//! Exact finite-support probability distributions over `ℕ × ℕ`.
//!
//! Weights are [`num::BigRational`] values that always sum to exactly 1;
//! zero-weight atoms are pruned on construction. Iteration over supports is
//! lexicographic in `(a, b)`, which also fixes the inverse-CDF sampling
//! order and therefore full determinism given a [`Seed`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A point of the domain `ℕ × ℕ`. Ordering is lexicographic: `a` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainPoint {
    pub a: u64,
    pub b: u64,
}

impl DomainPoint {
    pub const fn new(a: u64, b: u64) -> Self {
        DomainPoint { a, b }
    }

    /// The origin `(0, 0)`, the shared heavy atom of the constructions.
    pub const ORIGIN: DomainPoint = DomainPoint { a: 0, b: 0 };
}

impl fmt::Display for DomainPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// An exact probability: a rational in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Prob(BigRational);

impl Prob {
    pub fn new(value: BigRational) -> Result<Self, DistError> {
        if value.is_negative() || value > BigRational::one() {
            return Err(DistError::BadProb(value.to_string()));
        }
        Ok(Prob(value))
    }

    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    /// `num/den` from machine integers; panics on out-of-range input.
    pub fn ratio(num: u64, den: u64) -> Self {
        Prob::new(big_ratio(num, den)).expect("ratio out of [0,1]")
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Builds a `BigRational` from machine integers.
pub fn big_ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Lossy conversion used only for reporting and size calculators.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    let numer = r.numer();
    let denom = r.denom();
    // Good enough for reporting; exact comparisons never go through here.
    let nf = numer.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = denom.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistError {
    #[error("probability {0} outside [0,1]")]
    BadProb(String),
    #[error("uniform distribution over an empty set")]
    EmptySet,
    #[error("mixture weights must be nonnegative and sum to exactly 1")]
    BadWeights,
    #[error("distribution text line {0} is malformed")]
    BadText(usize),
}

/// Deterministic seed: `(master, stream)` fully determines every draw.
///
/// Derived streams are produced by the counter scheme
/// `Seed { master, stream: index }`; the harness uses the trial index as
/// the stream so that trials can run in parallel yet stay replayable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub const fn new(master: u64, stream: u64) -> Self {
        Seed { master, stream }
    }

    /// Stream `index` derived from this seed's master.
    pub const fn derive(&self, index: u64) -> Self {
        Seed {
            master: self.master,
            stream: index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

/// An ordered multiset of domain points, as drawn.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sample {
    points: Vec<DomainPoint>,
}

impl Sample {
    pub fn new(points: Vec<DomainPoint>) -> Self {
        Sample { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DomainPoint] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = &DomainPoint> {
        self.points.iter()
    }

    /// Fisher-Yates shuffle by `seed`, then split into `(first n1, rest)`.
    pub fn shuffle_split(&self, n1: usize, seed: Seed) -> (Sample, Sample) {
        assert!(n1 <= self.len(), "split point exceeds sample size");
        let mut pts = self.points.clone();
        let mut rng = seed.rng();
        for i in (1..pts.len()).rev() {
            let j = rng.gen_range(0..=i);
            pts.swap(i, j);
        }
        let rest = pts.split_off(n1);
        (Sample::new(pts), Sample::new(rest))
    }

    /// Number of sample points belonging to the given set.
    pub fn count_in(&self, set: &YatracosSet) -> usize {
        self.points.iter().filter(|p| set.contains(p)).count()
    }
}

/// A Yatracos (Scheffé) set: an explicit finite point list, plus optionally
/// everything outside a finite reference support. The reference list makes
/// complements well-defined over the infinite domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YatracosSet {
    pub listed: BTreeSet<DomainPoint>,
    pub outside_flag: bool,
    pub reference_support: BTreeSet<DomainPoint>,
}

impl YatracosSet {
    pub fn new(
        listed: BTreeSet<DomainPoint>,
        outside_flag: bool,
        reference_support: BTreeSet<DomainPoint>,
    ) -> Self {
        debug_assert!(listed.is_subset(&reference_support));
        YatracosSet {
            listed,
            outside_flag,
            reference_support,
        }
    }

    /// The whole domain: empty listing, outside flag on, empty reference.
    pub fn full_domain() -> Self {
        YatracosSet {
            listed: BTreeSet::new(),
            outside_flag: true,
            reference_support: BTreeSet::new(),
        }
    }

    pub fn contains(&self, x: &DomainPoint) -> bool {
        self.listed.contains(x) || (self.outside_flag && !self.reference_support.contains(x))
    }
}

/// Exact finite-support distribution. Invariants: all stored weights are
/// strictly positive and sum to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dist {
    support: BTreeMap<DomainPoint, BigRational>,
}

impl Dist {
    fn from_map(support: BTreeMap<DomainPoint, BigRational>) -> Self {
        let d = Dist {
            support: support.into_iter().filter(|(_, w)| !w.is_zero()).collect(),
        };
        debug_assert!(d.support.values().all(|w| w.is_positive()));
        debug_assert!(d.total_mass().is_one());
        d
    }

    /// Exact weights that must already be nonnegative and sum to 1;
    /// zero-weight atoms are pruned.
    pub fn from_weights(
        support: BTreeMap<DomainPoint, BigRational>,
    ) -> Result<Self, DistError> {
        if support.values().any(|w| w.is_negative()) {
            return Err(DistError::BadWeights);
        }
        let total: BigRational = support.values().cloned().sum();
        if !total.is_one() {
            return Err(DistError::BadWeights);
        }
        Ok(Dist::from_map(support))
    }

    /// Single atom of weight 1 at `x`.
    pub fn dirac(x: DomainPoint) -> Self {
        let mut support = BTreeMap::new();
        support.insert(x, BigRational::one());
        Dist::from_map(support)
    }

    /// Uniform distribution over a nonempty finite point set.
    pub fn uniform(points: &BTreeSet<DomainPoint>) -> Result<Self, DistError> {
        if points.is_empty() {
            return Err(DistError::EmptySet);
        }
        let w = big_ratio(1, points.len() as u64);
        Ok(Dist::from_map(
            points.iter().map(|p| (*p, w.clone())).collect(),
        ))
    }

    /// Convex combination of distributions; weights must sum to exactly 1.
    pub fn mix(components: &[(BigRational, Dist)]) -> Result<Self, DistError> {
        let total: BigRational = components.iter().map(|(w, _)| w.clone()).sum();
        if !total.is_one() || components.iter().any(|(w, _)| w.is_negative()) {
            return Err(DistError::BadWeights);
        }
        let mut support: BTreeMap<DomainPoint, BigRational> = BTreeMap::new();
        for (w, d) in components {
            if w.is_zero() {
                continue;
            }
            for (x, px) in &d.support {
                let entry = support.entry(*x).or_insert_with(BigRational::zero);
                *entry += w * px;
            }
        }
        Ok(Dist::from_map(support))
    }

    pub fn support(&self) -> impl Iterator<Item = (&DomainPoint, &BigRational)> {
        self.support.iter()
    }

    pub fn support_points(&self) -> BTreeSet<DomainPoint> {
        self.support.keys().copied().collect()
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// Weight at a single point (0 outside the support).
    pub fn weight(&self, x: &DomainPoint) -> BigRational {
        self.support.get(x).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total_mass(&self) -> BigRational {
        self.support.values().cloned().sum()
    }

    /// Exact total variation distance: `(1/2) Σ |p(x) − q(x)|`.
    pub fn tv_distance(&self, other: &Dist) -> Prob {
        let mut acc = BigRational::zero();
        let union: BTreeSet<DomainPoint> = self
            .support
            .keys()
            .chain(other.support.keys())
            .copied()
            .collect();
        for x in &union {
            acc += (self.weight(x) - other.weight(x)).abs();
        }
        Prob::new(acc / BigRational::from(BigInt::from(2))).expect("tv in [0,1]")
    }

    /// Exact mass assigned to a Yatracos set (listed points plus, when the
    /// outside flag is on, everything outside the reference support).
    pub fn mass_of(&self, set: &YatracosSet) -> Prob {
        let mut acc = BigRational::zero();
        for (x, w) in &self.support {
            if set.contains(x) {
                acc += w;
            }
        }
        Prob::new(acc).expect("mass in [0,1]")
    }

    /// `n` i.i.d. draws by inverse CDF over the lexicographic support.
    pub fn sample(&self, n: usize, seed: Seed) -> Sample {
        let mut cumulative: Vec<(DomainPoint, BigRational)> = Vec::with_capacity(self.support.len());
        let mut acc = BigRational::zero();
        for (x, w) in &self.support {
            acc += w;
            cumulative.push((*x, acc.clone()));
        }
        let denom = BigInt::one() << 64u32;
        let mut rng = seed.rng();
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let u = BigRational::new(BigInt::from(rng.gen::<u64>()), denom.clone());
            // First support point whose cumulative weight exceeds u.
            let idx = cumulative.partition_point(|(_, c)| *c <= u);
            let idx = idx.min(cumulative.len() - 1);
            points.push(cumulative[idx].0);
        }
        Sample::new(points)
    }

    /// Canonical text form: one `a b num/den` line per atom, lexicographic.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        for (x, w) in &self.support {
            out.push_str(&format!("{} {} {}\n", x.a, x.b, w));
        }
        out
    }

    pub fn from_canonical_text(text: &str) -> Result<Self, DistError> {
        let mut support = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (a, b, w) = (it.next(), it.next(), it.next());
            let (a, b, w) = match (a, b, w, it.next()) {
                (Some(a), Some(b), Some(w), None) => (a, b, w),
                _ => return Err(DistError::BadText(lineno + 1)),
            };
            let a: u64 = a.parse().map_err(|_| DistError::BadText(lineno + 1))?;
            let b: u64 = b.parse().map_err(|_| DistError::BadText(lineno + 1))?;
            let w = parse_ratio(w).ok_or(DistError::BadText(lineno + 1))?;
            if w.is_negative() {
                return Err(DistError::BadText(lineno + 1));
            }
            support.insert(DomainPoint::new(a, b), w);
        }
        let total: BigRational = support.values().cloned().sum();
        if !total.is_one() {
            return Err(DistError::BadWeights);
        }
        Ok(Dist::from_map(support))
    }
}

/// Parses `num/den` or a bare integer into an exact rational.
pub fn parse_ratio(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Some(BigRational::new(num, den))
    } else {
        let num: BigInt = text.parse().ok()?;
        Some(BigRational::from(num))
    }
}
