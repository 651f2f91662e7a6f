//! Differentially private components: the stability-based histogram with
//! Laplace noise on nonempty singleton bins, the private learner for the
//! indicator family built on top of it, and the greedy packing-cover
//! construction with plain Yatracos selection over the cover.
//!
//! Privacy holds by construction of the mechanism (noise on nonempty bins
//! plus a release threshold); the tests exercise the accuracy contract and
//! the structural properties, not the privacy inequality itself.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::dist::{ratio_to_f64, Dist, DomainPoint, Prob, Sample, Seed};
use crate::families::{indicator_params, make_qijk, FamilyError, GrowthFn, SubsetIndex};
use crate::select::{build_yatracos, select_min, yatracos_sample_size, SelectError, SelectionTrace};

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("sample of {got} points is smaller than the required {need}")]
    InsufficientSample { need: usize, got: usize },
    #[error("class is empty")]
    EmptyClass,
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Select(#[from] SelectError),
}

/// Privacy parameters. The histogram needs `δ_dp > 0`; `δ_dp = 0` denotes
/// pure DP and is rejected there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpParams {
    pub eps_dp: f64,
    pub delta_dp: f64,
}

impl DpParams {
    pub fn new(eps_dp: f64, delta_dp: f64) -> Result<Self, PrivacyError> {
        if eps_dp <= 0.0 || !(0.0..1.0).contains(&delta_dp) {
            return Err(PrivacyError::BadParams(format!(
                "eps_dp={eps_dp}, delta_dp={delta_dp}"
            )));
        }
        Ok(DpParams { eps_dp, delta_dp })
    }
}

/// Released bin frequencies, in `[0,1]`, for bins that passed the
/// stability threshold. Bins with zero true count are never released.
pub type BinFrequencies = BTreeMap<DomainPoint, f64>;

/// Laplace draw with the given scale from the seeded stream.
fn laplace(rng: &mut impl Rng, scale: f64) -> f64 {
    let u: f64 = rng.gen_range(-0.5..0.5);
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Sample size `⌈8·ln(2/(β·δ_dp)) / (α·ε_dp)⌉` for the histogram accuracy
/// guarantee.
pub fn histogram_sample_size(
    alpha: f64,
    beta: f64,
    params: &DpParams,
) -> Result<u64, PrivacyError> {
    if alpha <= 0.0 || alpha >= 1.0 || beta <= 0.0 || beta >= 1.0 || params.delta_dp <= 0.0 {
        return Err(PrivacyError::BadParams(format!(
            "alpha={alpha}, beta={beta}, delta_dp={}",
            params.delta_dp
        )));
    }
    let raw = 8.0 * (2.0 / (beta * params.delta_dp)).ln() / (alpha * params.eps_dp);
    Ok(raw.ceil() as u64)
}

/// Stability-based histogram: adds `Laplace(2/ε_dp)` noise to each
/// nonempty singleton bin count and releases the noisy frequency only when
/// the noisy count exceeds `1 + (2/ε_dp)·ln(2/δ_dp)`.
pub fn stability_histogram(
    s: &Sample,
    params: &DpParams,
    alpha: f64,
    beta: f64,
    seed: Seed,
) -> Result<BinFrequencies, PrivacyError> {
    if params.delta_dp <= 0.0 {
        return Err(PrivacyError::BadParams(
            "stability histogram needs delta_dp > 0".into(),
        ));
    }
    let need = histogram_sample_size(alpha, beta, params)? as usize;
    if s.len() < need {
        return Err(PrivacyError::InsufficientSample {
            need,
            got: s.len(),
        });
    }
    let mut counts: BTreeMap<DomainPoint, u64> = BTreeMap::new();
    for x in s.iter() {
        *counts.entry(*x).or_insert(0) += 1;
    }
    let scale = 2.0 / params.eps_dp;
    let threshold = 1.0 + scale * (2.0 / params.delta_dp).ln();
    let n = s.len() as f64;
    let mut rng = seed.rng();
    let mut released = BinFrequencies::new();
    // Iteration over nonempty bins is lexicographic, so the noise stream
    // lines up deterministically with the bins.
    for (bin, count) in counts {
        let noisy = count as f64 + laplace(&mut rng, scale);
        if noisy > threshold {
            released.insert(bin, (noisy / n).clamp(0.0, 1.0));
        }
    }
    Ok(released)
}

/// Sample size for [`dp_qg_learn`]: the histogram requirement at accuracy
/// `1/(4·g(⌈1/α⌉))` and confidence `β/2`, plus `32·ln(2/(β/2))·g(⌈1/α⌉)`
/// draws so the indicator bin clears the release threshold.
pub fn dp_qg_sample_size(
    alpha: f64,
    beta: f64,
    params: &DpParams,
    g: &GrowthFn,
) -> Result<u64, PrivacyError> {
    if alpha <= 0.0 || alpha >= 1.0 || beta <= 0.0 || beta >= 1.0 {
        return Err(PrivacyError::BadParams(format!(
            "alpha={alpha}, beta={beta}"
        )));
    }
    let ga = g.eval((1.0 / alpha).ceil() as u64)?;
    let hist = histogram_sample_size(1.0 / (4.0 * ga as f64), beta / 2.0, params)?;
    let hits = (32.0 * (2.0 / (beta / 2.0)).ln() * ga as f64).ceil() as u64;
    Ok(hist + hits)
}

/// Private learner for the indicator family: run the stability histogram
/// with singleton bins, then output the member whose indicator bin was
/// released with frequency at least `1/(2·g(⌈1/α⌉))` (first such bin in
/// lexicographic order), falling back to `δ_{(0,0)}`.
pub fn dp_qg_learn(
    s: &Sample,
    g: &GrowthFn,
    alpha: f64,
    beta: f64,
    params: &DpParams,
    seed: Seed,
) -> Result<Dist, PrivacyError> {
    let need = dp_qg_sample_size(alpha, beta, params, g)? as usize;
    if s.len() < need {
        return Err(PrivacyError::InsufficientSample {
            need,
            got: s.len(),
        });
    }
    let ga = g.eval((1.0 / alpha).ceil() as u64)?;
    let hist_alpha = 1.0 / (4.0 * ga as f64);
    let freqs = stability_histogram(s, params, hist_alpha, beta / 2.0, seed)?;
    let release_floor = 1.0 / (2.0 * ga as f64);
    for (bin, freq) in &freqs {
        if *freq < release_floor {
            continue;
        }
        if let Some((i, j)) = indicator_params(bin) {
            if let Ok(k) = g.eval(j) {
                if let Ok(q) = make_qijk(SubsetIndex(i), j, k, None) {
                    return Ok(q);
                }
            }
        }
    }
    Ok(Dist::dirac(DomainPoint::ORIGIN))
}

/// Greedy maximal packing in list order: admit a member iff its TV
/// distance to every admitted member exceeds `radius`. Maximality makes
/// the result simultaneously a packing and a cover at the same radius.
pub fn greedy_packing(class: &[Dist], radius: &Prob) -> Result<Vec<Dist>, PrivacyError> {
    if class.is_empty() {
        return Err(PrivacyError::EmptyClass);
    }
    let mut packing: Vec<Dist> = Vec::new();
    for candidate in class {
        if packing
            .iter()
            .all(|p| candidate.tv_distance(p).as_ratio() > radius.as_ratio())
        {
            packing.push(candidate.clone());
        }
    }
    Ok(packing)
}

/// Cover-then-select: build the greedy `α/6` packing-cover of the class,
/// then Yatracos-select over it with the given sample.
pub fn cover_then_select(
    class: &[Dist],
    alpha: &Prob,
    beta: f64,
    s: &Sample,
) -> Result<(Dist, SelectionTrace), PrivacyError> {
    let radius = Prob::new(alpha.as_ratio() / num::BigRational::from(num::BigInt::from(6)))
        .expect("alpha/6 in [0,1]");
    let packing = greedy_packing(class, &radius)?;
    let need = yatracos_sample_size(packing.len() as u64, ratio_to_f64(alpha.as_ratio()) / 2.0, beta)?
        as usize;
    if s.len() < need {
        return Err(PrivacyError::InsufficientSample {
            need,
            got: s.len(),
        });
    }
    let sets = build_yatracos(&packing)?;
    Ok(select_min(&sets, s)?)
}
