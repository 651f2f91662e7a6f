//! Distribution families used by the separation constructions: the
//! three-part mixtures `q_{i,j,k}`, their subtracted variants, the packing
//! classes over `[4k] × {2j+1}`, and the growth-rate numerics.

use std::collections::BTreeSet;

use num::rational::BigRational;
use num::{BigInt, Integer, One, Signed};
use thiserror::Error;

use crate::dist::{big_ratio, Dist, DomainPoint, Prob};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FamilyError {
    #[error("parameters violate a family precondition: {0}")]
    BadParams(String),
    #[error("subset index {0} decodes to the empty set where a nonempty one is required")]
    BadIndex(u64),
    #[error("family listing would exceed the cap of {cap} members ({size} requested)")]
    TooLarge { size: u64, cap: u64 },
    #[error(transparent)]
    Dist(#[from] crate::dist::DistError),
}

/// Growth function `g : ℕ → ℕ` used to place the indicator mass `1/g(j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrowthFn {
    /// `t ↦ t²`
    Square,
    /// `t ↦ ⌈32·α·t²⌉` for a positive rational `α`.
    ScaledSquare(BigRational),
    /// Explicit finite table; queries outside the table are errors.
    Table(std::collections::BTreeMap<u64, u64>),
}

impl GrowthFn {
    /// Evaluates `g(t)`, checking `g(t) ≥ t` so that `1/j − 1/g(j) ≥ 0`
    /// holds wherever the construction needs it.
    pub fn eval(&self, t: u64) -> Result<u64, FamilyError> {
        let value = match self {
            GrowthFn::Square => t
                .checked_mul(t)
                .ok_or_else(|| FamilyError::BadParams(format!("g({t}) overflows")))?,
            GrowthFn::ScaledSquare(alpha) => {
                if !alpha.is_positive() {
                    return Err(FamilyError::BadParams("scale must be positive".into()));
                }
                let t2 = BigInt::from(t) * BigInt::from(t) * BigInt::from(32u32);
                let v = alpha * BigRational::from(t2);
                let ceil = v.ceil().to_integer();
                u64::try_from(ceil)
                    .map_err(|_| FamilyError::BadParams(format!("g({t}) overflows")))?
            }
            GrowthFn::Table(map) => *map
                .get(&t)
                .ok_or_else(|| FamilyError::BadParams(format!("g({t}) not tabulated")))?,
        };
        if value < t {
            return Err(FamilyError::BadParams(format!(
                "g({t}) = {value} < {t} breaks the weight ledger"
            )));
        }
        Ok(value)
    }
}

/// Index into the canonical enumeration of nonempty finite subsets of ℕ:
/// `A_i = { b+1 : bit b of i is set }` for `i ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubsetIndex(pub u64);

impl SubsetIndex {
    pub fn decode(&self) -> BTreeSet<u64> {
        let mut set = BTreeSet::new();
        let mut bits = self.0;
        let mut b = 0u64;
        while bits != 0 {
            if bits & 1 == 1 {
                set.insert(b + 1);
            }
            bits >>= 1;
            b += 1;
        }
        set
    }

    /// Inverse of [`SubsetIndex::decode`] on nonempty subsets of `[64]`.
    pub fn encode(set: &BTreeSet<u64>) -> Result<Self, FamilyError> {
        let mut i = 0u64;
        for &e in set {
            if e == 0 || e > 64 {
                return Err(FamilyError::BadParams(format!("element {e} not encodable")));
            }
            i |= 1 << (e - 1);
        }
        Ok(SubsetIndex(i))
    }
}

/// The point `(i, 2j+2)` that uniquely identifies `q_{i,j,g(j)}`.
pub fn indicator_point(i: u64, j: u64) -> DomainPoint {
    DomainPoint::new(i, 2 * j + 2)
}

/// Recognizes indicator points: second coordinate even and at least 4,
/// first coordinate a valid nonempty subset index. `(0,0)` never qualifies.
pub fn indicator_params(x: &DomainPoint) -> Option<(u64, u64)> {
    if x.a >= 1 && x.b >= 4 && x.b % 2 == 0 {
        Some((x.a, (x.b - 2) / 2))
    } else {
        None
    }
}

/// The three-part mixture
/// `q_{i,j,k} = (1−1/j)·δ_{(0,0)} + (1/j−1/k)·U_{A_i×{2j+1}} + (1/k)·δ_{(i,2j+2)}`.
///
/// When a growth function is supplied, it certifies `k = g(j)`.
pub fn make_qijk(
    i: SubsetIndex,
    j: u64,
    k: u64,
    g_check: Option<&GrowthFn>,
) -> Result<Dist, FamilyError> {
    if j < 1 || k < j {
        return Err(FamilyError::BadParams(format!(
            "need k ≥ j ≥ 1, got j={j}, k={k}"
        )));
    }
    if let Some(g) = g_check {
        let gj = g.eval(j)?;
        if gj != k {
            return Err(FamilyError::BadParams(format!(
                "k={k} does not match g({j})={gj}"
            )));
        }
    }
    let heavy = BigRational::one() - big_ratio(1, j);
    let middle = big_ratio(1, j) - big_ratio(1, k);
    let ind = big_ratio(1, k);

    let set = i.decode();
    if set.is_empty() && middle.is_positive() {
        return Err(FamilyError::BadIndex(i.0));
    }
    let mut components = vec![(heavy, Dist::dirac(DomainPoint::ORIGIN))];
    if middle.is_positive() {
        let pts: BTreeSet<DomainPoint> = set
            .iter()
            .map(|&a| DomainPoint::new(a, 2 * j + 1))
            .collect();
        components.push((middle, Dist::uniform(&pts)?));
    }
    components.push((ind, Dist::dirac(indicator_point(i.0, j))));
    Ok(Dist::mix(&components)?)
}

/// The renormalized subtracted variant
/// `q′_{i,j} = ((1−1/j)·δ_{(0,0)} + (1/j−1/g(j))·U_{A_i×{2j+1}}) / (1−1/g(j))`.
pub fn make_q_prime(i: SubsetIndex, j: u64, g: &GrowthFn) -> Result<Dist, FamilyError> {
    let gj = g.eval(j)?;
    if gj <= 1 {
        return Err(FamilyError::BadParams(format!("need g(j) > 1, got {gj}")));
    }
    let scale = BigRational::one() - big_ratio(1, gj);
    let heavy = (BigRational::one() - big_ratio(1, j)) / scale.clone();
    let middle = (big_ratio(1, j) - big_ratio(1, gj)) / scale;

    let set = i.decode();
    if set.is_empty() && middle.is_positive() {
        return Err(FamilyError::BadIndex(i.0));
    }
    let mut components = vec![(heavy, Dist::dirac(DomainPoint::ORIGIN))];
    if middle.is_positive() {
        let pts: BTreeSet<DomainPoint> = set
            .iter()
            .map(|&a| DomainPoint::new(a, 2 * j + 1))
            .collect();
        components.push((middle, Dist::uniform(&pts)?));
    }
    Ok(Dist::mix(&components)?)
}

/// The unnormalized-style subtracted variant
/// `q′_{i,j} = (1−1/j)·δ_{(0,0)} + (1/j)·U_{A_i×{2j+1}}`, paired with the
/// corruption level `η = j/g(j)`.
pub fn make_q_prime_alt(i: SubsetIndex, j: u64) -> Result<Dist, FamilyError> {
    if j < 1 {
        return Err(FamilyError::BadParams("need j ≥ 1".into()));
    }
    let set = i.decode();
    if set.is_empty() {
        return Err(FamilyError::BadIndex(i.0));
    }
    let pts: BTreeSet<DomainPoint> = set
        .iter()
        .map(|&a| DomainPoint::new(a, 2 * j + 1))
        .collect();
    Ok(Dist::mix(&[
        (
            BigRational::one() - big_ratio(1, j),
            Dist::dirac(DomainPoint::ORIGIN),
        ),
        (big_ratio(1, j), Dist::uniform(&pts)?),
    ])?)
}

/// Packing-class member `(1−γ)·δ_{(0,0)} + γ·U_{A×{2j+1}}`.
pub fn make_packing_member(
    a_set: &BTreeSet<u64>,
    gamma: &Prob,
    j: u64,
) -> Result<Dist, FamilyError> {
    let gamma = gamma.as_ratio();
    if a_set.is_empty() || !gamma.is_positive() || gamma >= &BigRational::one() {
        return Err(FamilyError::BadParams(
            "need nonempty A and 0 < γ < 1".into(),
        ));
    }
    let pts: BTreeSet<DomainPoint> = a_set
        .iter()
        .map(|&a| DomainPoint::new(a, 2 * j + 1))
        .collect();
    Ok(Dist::mix(&[
        (
            BigRational::one() - gamma.clone(),
            Dist::dirac(DomainPoint::ORIGIN),
        ),
        (gamma.clone(), Dist::uniform(&pts)?),
    ])?)
}

/// `γ(j) = (1/j − 1/g(j)) / (8·(1 − 1/g(j)))`, the weak-learnability
/// threshold of the subtracted class.
pub fn gamma_of(j: u64, g: &GrowthFn) -> Result<Prob, FamilyError> {
    let gj = g.eval(j)?;
    if gj <= 1 {
        return Err(FamilyError::BadParams(format!("need g(j) > 1, got {gj}")));
    }
    let numer = big_ratio(1, j) - big_ratio(1, gj);
    let denom = (BigRational::one() - big_ratio(1, gj)) * BigRational::from(BigInt::from(8));
    Ok(Prob::new(numer / denom).expect("gamma in [0,1]"))
}

/// A finite description of a distribution class.
#[derive(Debug, Clone)]
pub enum FamilySpec {
    /// A finite slice `{ q_{i,j,g(j)} : i ∈ is, j ∈ js }` of the infinite class.
    Qg {
        g: GrowthFn,
        is: Vec<u64>,
        js: Vec<u64>,
    },
    /// All members `(1−γ)δ_{(0,0)} + γU_{A×{2j+1}}` for nonempty `A ⊆ [4k]`.
    Packing { gamma: Prob, k: u64, j: u64 },
    /// An explicit finite list.
    Explicit(Vec<Dist>),
}

pub const DEFAULT_FAMILY_CAP: u64 = 100_000;

/// Deterministic, duplicate-free listing of a finite family in label order.
pub fn enumerate_family(
    spec: &FamilySpec,
    cap: u64,
) -> Result<Vec<(String, Dist)>, FamilyError> {
    let mut out: Vec<(String, Dist)> = Vec::new();
    match spec {
        FamilySpec::Qg { g, is, js } => {
            let size = (is.len() as u64) * (js.len() as u64);
            if size > cap {
                return Err(FamilyError::TooLarge { size, cap });
            }
            for &i in is {
                for &j in js {
                    let k = g.eval(j)?;
                    let d = make_qijk(SubsetIndex(i), j, k, Some(g))?;
                    out.push((format!("q[i={i};j={j};k={k}]"), d));
                }
            }
        }
        FamilySpec::Packing { gamma, k, j } => {
            let n = 4 * k;
            if n >= 63 {
                return Err(FamilyError::BadParams("packing ground set too large".into()));
            }
            let size = (1u64 << n) - 1;
            if size > cap {
                return Err(FamilyError::TooLarge { size, cap });
            }
            for mask in 1u64..=size {
                let a_set: BTreeSet<u64> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
                let d = make_packing_member(&a_set, gamma, *j)?;
                out.push((format!("pack[mask={mask};j={j}]"), d));
            }
        }
        FamilySpec::Explicit(list) => {
            let size = list.len() as u64;
            if size > cap {
                return Err(FamilyError::TooLarge { size, cap });
            }
            for (idx, d) in list.iter().enumerate() {
                out.push((format!("explicit[{idx}]"), d.clone()));
            }
        }
    }
    // Drop later duplicates of an identical distribution.
    let mut seen: Vec<&Dist> = Vec::new();
    let mut deduped = Vec::with_capacity(out.len());
    for (label, d) in &out {
        if !seen.iter().any(|s| **s == *d) {
            deduped.push((label.clone(), d.clone()));
            seen.push(d);
        }
    }
    Ok(deduped)
}

/// Label for the `Qg` member recovered from an indicator point.
pub fn qg_label(i: u64, j: u64, k: u64) -> String {
    format!("q[i={i};j={j};k={k}]")
}

// `Integer::is_multiple_of` would need the trait in scope at call sites.
#[allow(dead_code)]
fn is_even(n: &BigInt) -> bool {
    n.is_even()
}
