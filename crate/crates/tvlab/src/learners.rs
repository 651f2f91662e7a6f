//! Learners over the indicator-based family and the generic combinators
//! that lift them: subset-enumeration robustification, the known-level
//! grid reduction, and the Monte Carlo evaluation loop.

use num::rational::BigRational;
use num::One;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{ratio_to_f64, Dist, DomainPoint, Prob, Sample, Seed};
use crate::families::{indicator_params, make_qijk, GrowthFn, SubsetIndex};
use crate::select::{build_yatracos, select_min, yatracos_sample_size, SelectError, SelectionTrace};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("subset enumeration of {subsets} subsets exceeds the cap {cap}")]
    SubsetBlowup { subsets: u128, cap: u64 },
    #[error("sample of {got} points is smaller than the required {need}")]
    InsufficientSample { need: usize, got: usize },
    #[error(transparent)]
    Select(#[from] SelectError),
}

/// A deterministic, replayable learner: same `(sample, seed)` gives the
/// same output distribution.
pub trait Learner: Sync {
    fn learn(&self, sample: &Sample, seed: Seed) -> Dist;
}

impl<F> Learner for F
where
    F: Fn(&Sample, Seed) -> Dist + Sync,
{
    fn learn(&self, sample: &Sample, seed: Seed) -> Dist {
        self(sample, seed)
    }
}

/// The indicator-scan learner: output `q_{i,j,g(j)}` for the first
/// indicator point `(i, 2j+2)` seen in sample order, else `δ_{(0,0)}`.
#[derive(Debug, Clone)]
pub struct RealizableQg {
    pub g: GrowthFn,
}

impl RealizableQg {
    pub fn new(g: GrowthFn) -> Self {
        RealizableQg { g }
    }
}

impl Learner for RealizableQg {
    fn learn(&self, sample: &Sample, _seed: Seed) -> Dist {
        realizable_qg_learn(sample, &self.g)
    }
}

/// Total on all samples: corrupted inputs may carry several indicator
/// points, in which case the first one in sample order wins; indicator
/// points that decode to no valid family member are skipped.
pub fn realizable_qg_learn(sample: &Sample, g: &GrowthFn) -> Dist {
    for x in sample.iter() {
        if let Some((i, j)) = indicator_params(x) {
            if let Ok(k) = g.eval(j) {
                if let Ok(q) = make_qijk(SubsetIndex(i), j, k, None) {
                    return q;
                }
            }
        }
    }
    Dist::dirac(DomainPoint::ORIGIN)
}

/// Realizable sample complexity `⌈ln(1/δ)·g(⌈1/ε⌉)⌉`.
pub fn realizable_sample_size(eps: f64, delta: f64, g: &GrowthFn) -> Result<u64, LearnerError> {
    if !(0.0..1.0).contains(&delta) || delta <= 0.0 || eps <= 0.0 {
        return Err(LearnerError::BadParams(format!("eps={eps}, delta={delta}")));
    }
    let t = (1.0 / eps).ceil() as u64;
    let gj = g
        .eval(t)
        .map_err(|e| LearnerError::BadParams(e.to_string()))?;
    Ok(((1.0 / delta).ln() * gj as f64).ceil() as u64)
}

/// Sample split and subset-enumeration budget for [`robustify`].
#[derive(Debug, Clone, Serialize)]
pub struct SplitPlan {
    pub n1: usize,
    pub n2: usize,
    /// Only subsets of the first part with at least this many points are
    /// fed to the inner learner. 0 enumerates the full power set.
    pub subset_floor: usize,
    pub subset_cap: u64,
    /// Below 1 marks a desk-scale run in the trace.
    pub scale: f64,
}

pub const DEFAULT_SUBSET_CAP: u64 = 1 << 18;

/// Split sizes from the additive-robustness recipe:
/// `n1 = max{2·inner(ε/9, δ/5), 162(1+ln(5/δ))/ε²}` and
/// `n2 = 162(2·n1 + ln(5/δ))/ε²`, both multiplied by `scale`.
pub fn additive_split_plan(
    eps: f64,
    delta: f64,
    inner_size: impl Fn(f64, f64) -> u64,
    scale: f64,
) -> Result<SplitPlan, LearnerError> {
    if eps <= 0.0 || delta <= 0.0 || delta >= 1.0 || scale <= 0.0 {
        return Err(LearnerError::BadParams(format!(
            "eps={eps}, delta={delta}, scale={scale}"
        )));
    }
    let log_term = (5.0 / delta).ln();
    let inner = 2 * inner_size(eps / 9.0, delta / 5.0);
    let uniform = 162.0 * (1.0 + log_term) / (eps * eps);
    let n1 = (scale * (inner as f64).max(uniform)).ceil() as usize;
    let n2 = (scale * 162.0 * (2.0 * n1 as f64 + log_term) / (eps * eps)).ceil() as usize;
    Ok(SplitPlan {
        n1,
        n2,
        subset_floor: 0,
        subset_cap: DEFAULT_SUBSET_CAP,
        scale,
    })
}

/// What [`robustify`] did: split sizes, hypothesis count, and the
/// selection scores.
#[derive(Debug, Clone, Serialize)]
pub struct RobustifyTrace {
    pub n1: usize,
    pub n2: usize,
    pub subsets_enumerated: u64,
    pub hypotheses: usize,
    pub selection: SelectionTrace,
    pub desk_scale: bool,
}

fn subset_count(n: usize, floor: usize) -> u128 {
    (floor..=n).map(|k| binomial(n, k)).sum()
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Subset-enumeration robustification: shuffle and split the sample, run
/// the inner learner on every admissible subset of the first part to form
/// the hypothesis set, then Yatracos-select against the second part.
pub fn robustify(
    inner: &dyn Learner,
    sample: &Sample,
    plan: &SplitPlan,
    seed: Seed,
) -> Result<(Dist, RobustifyTrace), LearnerError> {
    if sample.len() != plan.n1 + plan.n2 {
        return Err(LearnerError::InsufficientSample {
            need: plan.n1 + plan.n2,
            got: sample.len(),
        });
    }
    if plan.n1 >= 127 || subset_count(plan.n1, plan.subset_floor) > plan.subset_cap as u128 {
        return Err(LearnerError::SubsetBlowup {
            subsets: subset_count(plan.n1.min(126), plan.subset_floor),
            cap: plan.subset_cap,
        });
    }
    let (s1, s2) = sample.shuffle_split(plan.n1, seed);
    let mut hypotheses: Vec<Dist> = Vec::new();
    let mut enumerated = 0u64;
    let inner_seed = seed.derive(seed.stream.wrapping_add(0x5eed));
    for mask in 0u128..(1u128 << plan.n1) {
        if (mask.count_ones() as usize) < plan.subset_floor {
            continue;
        }
        enumerated += 1;
        let subset: Vec<DomainPoint> = s1
            .points()
            .iter()
            .enumerate()
            .filter(|(idx, _)| mask >> idx & 1 == 1)
            .map(|(_, p)| *p)
            .collect();
        let h = inner.learn(&Sample::new(subset), inner_seed);
        if !hypotheses.contains(&h) {
            hypotheses.push(h);
        }
    }
    let sets = build_yatracos(&hypotheses)?;
    let (chosen, selection) = select_min(&sets, &s2)?;
    let trace = RobustifyTrace {
        n1: plan.n1,
        n2: plan.n2,
        subsets_enumerated: enumerated,
        hypotheses: sets.hypotheses.len(),
        selection,
        desk_scale: plan.scale < 1.0,
    };
    Ok((chosen, trace))
}

/// One level of the known-corruption grid: a learner plus the sample size
/// its guarantee needs.
pub struct GridLevel<'a> {
    pub learner: &'a dyn Learner,
    pub sample_size: usize,
}

/// Candidates and scores recorded by [`eta_grid_reduce`].
#[derive(Debug, Clone, Serialize)]
pub struct GridTrace {
    pub selection_sample: usize,
    pub level_sizes: Vec<usize>,
    pub candidates: usize,
    pub selection: SelectionTrace,
}

/// Known-level grid reduction: run each level learner on its own disjoint
/// subsample, then Yatracos-select among the candidates with a held-out
/// selection subsample.
pub fn eta_grid_reduce(
    levels: &[GridLevel<'_>],
    sample: &Sample,
    eps: f64,
    delta: f64,
    seed: Seed,
) -> Result<(Dist, GridTrace), LearnerError> {
    if levels.is_empty() {
        return Err(LearnerError::BadParams("no grid levels".into()));
    }
    let s0_size = yatracos_sample_size(levels.len() as u64, eps / 4.0, delta / 2.0)? as usize;
    let need: usize = s0_size + levels.iter().map(|l| l.sample_size).sum::<usize>();
    if sample.len() < need {
        return Err(LearnerError::InsufficientSample {
            need,
            got: sample.len(),
        });
    }
    let points = sample.points();
    let s0 = Sample::new(points[..s0_size].to_vec());
    let mut offset = s0_size;
    let mut candidates = Vec::with_capacity(levels.len());
    for (idx, level) in levels.iter().enumerate() {
        let sub = Sample::new(points[offset..offset + level.sample_size].to_vec());
        offset += level.sample_size;
        candidates.push(level.learner.learn(&sub, seed.derive(seed.stream.wrapping_add(idx as u64 + 1))));
    }
    let sets = build_yatracos(&candidates)?;
    let (chosen, selection) = select_min(&sets, &s0)?;
    let trace = GridTrace {
        selection_sample: s0_size,
        level_sizes: levels.iter().map(|l| l.sample_size).collect(),
        candidates: sets.hypotheses.len(),
        selection,
    };
    Ok((chosen, trace))
}

/// One Monte Carlo trial of [`evaluate_learner`].
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub n: usize,
    pub output_label: String,
    pub error_num: String,
    pub error_den: String,
    pub error: f64,
    pub success: bool,
}

/// Aggregate of a Monte Carlo campaign, with a Wilson 95% interval on the
/// failure rate.
#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_error: f64,
    pub max_error: f64,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    #[serde(skip)]
    pub outputs: Vec<Dist>,
}

/// Wilson 95% score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = (z / (1.0 + z2 / n)) * ((p * (1.0 - p) / n) + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs `trials` independent trials: draw `n` points from `truth` (the
/// possibly corrupted sampling distribution), run the learner, and score
/// the exact TV error against `target` at threshold `eps`. Trial `t` uses
/// seed stream `t`, so trials are replayable and order-independent.
pub fn evaluate_learner(
    learner: &dyn Learner,
    truth: &Dist,
    target: &Dist,
    trials: u64,
    n: usize,
    eps: &Prob,
    seed: Seed,
) -> TrialSummary {
    let results: Vec<(TrialRecord, Dist, BigRational)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = Seed::new(seed.master, t);
            let s = truth.sample(n, trial_seed);
            let out = learner.learn(&s, trial_seed.derive(t.wrapping_add(1 << 32)));
            let err = out.tv_distance(target).into_ratio();
            let success = &err <= eps.as_ratio();
            let record = TrialRecord {
                trial: t,
                n,
                output_label: label_of(&out),
                error_num: err.numer().to_string(),
                error_den: err.denom().to_string(),
                error: ratio_to_f64(&err),
                success,
            };
            (record, out, err)
        })
        .collect();

    let failures = results.iter().filter(|(r, _, _)| !r.success).count() as u64;
    let mean_error = results.iter().map(|(r, _, _)| r.error).sum::<f64>() / trials.max(1) as f64;
    let max_error = results
        .iter()
        .map(|(r, _, _)| r.error)
        .fold(0.0f64, f64::max);
    let (wilson_low, wilson_high) = wilson_interval(failures, trials);
    TrialSummary {
        trials,
        failures,
        failure_rate: failures as f64 / trials.max(1) as f64,
        wilson_low,
        wilson_high,
        mean_error,
        max_error,
        records: results.iter().map(|(r, _, _)| r.clone()).collect(),
        outputs: results.into_iter().map(|(_, d, _)| d).collect(),
    }
}

/// Short display label for a learned distribution: the family member name
/// when recognizable, otherwise the canonical support listing.
pub fn label_of(d: &Dist) -> String {
    if d.support_size() == 1 {
        let (x, _) = d.support().next().expect("single atom");
        if *x == DomainPoint::ORIGIN {
            return "dirac[0;0]".to_string();
        }
        if let Some((i, j)) = indicator_params(x) {
            if d.weight(x).is_one() {
                // Might be a degenerate q_{i,j,j}; label by the atom.
                return format!("dirac[{};{}] (indicator i={i} j={j})", x.a, x.b);
            }
        }
        return format!("dirac[{};{}]", x.a, x.b);
    }
    // Indicator atom identifies a q_{i,j,k} member.
    for (x, w) in d.support() {
        if let Some((i, j)) = indicator_params(x) {
            let k = w.denom() / w.numer();
            return format!("q[i={i};j={j};k={k}]");
        }
    }
    let atoms: Vec<String> = d
        .support()
        .map(|(x, w)| format!("{};{}:{}", x.a, x.b, w))
        .collect();
    format!("dist[{}]", atoms.join("|"))
}
