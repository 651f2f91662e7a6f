//! Experiment runner: wires families, adversaries, and learners into
//! seeded Monte Carlo campaigns and writes CSV (per trial) and JSON
//! (summary) reports. Trial `t` of a run with master seed `m` always uses
//! `Seed::new(m, t)`, so equal configs give byte-identical CSV bodies up
//! to the timing column.

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num::{BigRational, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::adversary::{huber_contaminate, AdversaryError, CorruptionLevel};
use crate::compress::{compression_sample_size, qg_decode, qg_encode, CompressError};
use crate::dist::{big_ratio, ratio_to_f64, Dist, DistError, DomainPoint, Prob, Seed};
use crate::families::{enumerate_family, make_q_prime, make_qijk, FamilyError, FamilySpec, GrowthFn, SubsetIndex, DEFAULT_FAMILY_CAP};
use crate::learners::{
    label_of, realizable_qg_learn, realizable_sample_size, robustify, wilson_interval, GridLevel,
    Learner, LearnerError, RealizableQg, SplitPlan, DEFAULT_SUBSET_CAP,
};
use crate::learners::eta_grid_reduce;
use crate::privacy::{dp_qg_learn, dp_qg_sample_size, greedy_packing, histogram_sample_size, stability_histogram, DpParams, PrivacyError};
use crate::select::{build_yatracos, select_min, yatracos_sample_size, SelectError};

pub use config::{
    apply_overrides, scaled, validate_config, ConfigError, ExperimentConfig, ExperimentKind,
    Params,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("{0}")]
    Run(String),
    #[error("report verification failed: {0} row(s) disagree with recomputed errors")]
    VerifyMismatch(usize),
}

/// One CSV row; the exact error is kept as a rational.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: u64,
    pub n: usize,
    pub output_label: String,
    pub error: BigRational,
    pub success: bool,
    pub micros: u128,
}

/// Per-group statistics: a group is one target distribution's block of
/// consecutive trials.
#[derive(Debug, Clone, Serialize)]
pub struct GroupStat {
    pub target: String,
    pub start_trial: u64,
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Acceptance bound this group's failure rate is compared against.
    pub bound: f64,
}

struct ExpOutcome {
    rows: Vec<(TrialRow, Option<Dist>)>,
    groups: Vec<GroupStat>,
    accept: bool,
    accept_desc: String,
    /// Distributions referenced by group targets (label → dist).
    named: Vec<(String, Dist)>,
    notes: Vec<String>,
}

/// Paths and verdict of a completed run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub accept: bool,
}

/// The experiment names with one-line descriptions, in canonical order.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    ExperimentKind::ALL
        .iter()
        .map(|k| (k.name(), k.describe()))
        .collect()
}

fn sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials.max(1) as f64).sqrt()
}

fn group_stat(target: String, start: u64, rows: &[(TrialRow, Option<Dist>)], bound: f64) -> GroupStat {
    let trials = rows.len() as u64;
    let failures = rows.iter().filter(|(r, _)| !r.success).count() as u64;
    let (lo, hi) = wilson_interval(failures, trials);
    GroupStat {
        target,
        start_trial: start,
        trials,
        failures,
        failure_rate: failures as f64 / trials.max(1) as f64,
        wilson_low: lo,
        wilson_high: hi,
        bound,
    }
}

/// Run `total` seeded trials, optionally on a bounded thread pool, and
/// stamp wall-clock micros on each row. Results come back ordered by
/// trial index regardless of scheduling.
fn run_trials<F>(total: u64, threads: usize, f: F) -> Result<Vec<(TrialRow, Option<Dist>)>, HarnessError>
where
    F: Fn(u64) -> Result<(TrialRow, Option<Dist>), HarnessError> + Sync,
{
    let body = || {
        (0..total)
            .into_par_iter()
            .map(|t| {
                let started = Instant::now();
                let (mut row, out) = f(t)?;
                row.micros = started.elapsed().as_micros();
                Ok((row, out))
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    };
    if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::Run(e.to_string()))?;
        pool.install(body)
    } else {
        body()
    }
}

fn row(trial: u64, n: usize, out: &Dist, target: &Dist, threshold: &BigRational) -> (TrialRow, Option<Dist>) {
    let err = out.tv_distance(target).into_ratio();
    let success = &err <= threshold;
    (
        TrialRow {
            trial,
            n,
            output_label: label_of(out),
            error: err,
            success,
            micros: 0,
        },
        Some(out.clone()),
    )
}

fn req_ratio(value: &Option<BigRational>, what: &str) -> Result<BigRational, HarnessError> {
    value
        .clone()
        .ok_or_else(|| HarnessError::Run(format!("missing {what}")))
}

fn req<T: Copy>(value: &Option<T>, what: &str) -> Result<T, HarnessError> {
    value.ok_or_else(|| HarnessError::Run(format!("missing {what}")))
}

fn family_of(config: &ExperimentConfig) -> Result<Vec<(String, Dist)>, HarnessError> {
    let spec = config
        .family
        .as_ref()
        .ok_or_else(|| HarnessError::Run("missing [family]".into()))?;
    Ok(enumerate_family(spec, DEFAULT_FAMILY_CAP)?)
}

fn growth_of(config: &ExperimentConfig) -> Result<GrowthFn, HarnessError> {
    match &config.family {
        Some(FamilySpec::Qg { g, .. }) => Ok(g.clone()),
        _ => Err(HarnessError::Run("experiment needs [family] kind = qg".into())),
    }
}

/// Execute the configured experiment and write `<name>.csv` and
/// `<name>.json` into the output directory. The returned `accept` flag is
/// the experiment's acceptance predicate; the CLI maps it to the exit code.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(RunArtifacts, serde_json::Value), HarnessError> {
    let outcome = match config.kind {
        ExperimentKind::RealizableQg => realizable_qg_experiment(config)?,
        ExperimentKind::SubtractiveAttack => subtractive_attack_experiment(config)?,
        ExperimentKind::AdditiveHuber => additive_huber_experiment(config)?,
        ExperimentKind::YatracosFinite => yatracos_finite_experiment(config)?,
        ExperimentKind::EtaGrid => eta_grid_experiment(config)?,
        ExperimentKind::CompressionRoundtrip => compression_experiment(config)?,
        ExperimentKind::DpHistogram => dp_histogram_experiment(config)?,
        ExperimentKind::DpQg => dp_qg_experiment(config)?,
        ExperimentKind::CoverSelect => cover_select_experiment(config)?,
    };
    write_reports(config, outcome)
}

fn write_reports(
    config: &ExperimentConfig,
    outcome: ExpOutcome,
) -> Result<(RunArtifacts, serde_json::Value), HarnessError> {
    fs::create_dir_all(&config.out_dir)?;
    let stem = config.kind.name();
    let csv_path = config.out_dir.join(format!("{stem}.csv"));
    let json_path = config.out_dir.join(format!("{stem}.json"));

    let mut writer = csv::Writer::from_path(&csv_path)?;
    writer.write_record([
        "trial",
        "n",
        "output_label",
        "error_num",
        "error_den",
        "error_decimal",
        "success",
        "micros",
    ])?;
    for (r, _) in &outcome.rows {
        writer.write_record([
            r.trial.to_string(),
            r.n.to_string(),
            r.output_label.clone(),
            r.error.numer().to_string(),
            r.error.denom().to_string(),
            format!("{:.12}", ratio_to_f64(&r.error)),
            r.success.to_string(),
            r.micros.to_string(),
        ])?;
    }
    writer.flush()?;

    // Label → canonical text table covering every target and every output,
    // so `verify` can recompute all errors from the logs alone.
    let mut dists: BTreeMap<String, String> = BTreeMap::new();
    for (label, d) in &outcome.named {
        dists.insert(label.clone(), d.to_canonical_text());
    }
    for (r, out) in &outcome.rows {
        if let Some(d) = out {
            dists.entry(r.output_label.clone()).or_insert_with(|| d.to_canonical_text());
        }
    }

    let total = outcome.rows.len() as u64;
    let failures = outcome.rows.iter().filter(|(r, _)| !r.success).count() as u64;
    let (wl, wh) = wilson_interval(failures, total);
    let mean_error = outcome.rows.iter().map(|(r, _)| ratio_to_f64(&r.error)).sum::<f64>()
        / total.max(1) as f64;
    let max_error = outcome
        .rows
        .iter()
        .map(|(r, _)| ratio_to_f64(&r.error))
        .fold(0.0f64, f64::max);

    let summary = json!({
        "experiment": config.kind.name(),
        "seed": config.seed,
        "scale": config.scale.to_string(),
        "total_trials": total,
        "failures": failures,
        "failure_rate": failures as f64 / total.max(1) as f64,
        "wilson_low": wl,
        "wilson_high": wh,
        "mean_error": mean_error,
        "max_error": max_error,
        "acceptance": { "description": outcome.accept_desc, "holds": outcome.accept },
        "groups": outcome.groups,
        "dists": dists,
        "notes": outcome.notes,
    });
    fs::write(&json_path, serde_json::to_string_pretty(&summary)?)?;

    Ok((
        RunArtifacts {
            csv_path,
            json_path,
            accept: outcome.accept,
        },
        summary,
    ))
}

// --- experiments -----------------------------------------------------------

fn realizable_qg_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let members = family_of(config)?;
    let g = growth_of(config)?;
    let eps = req_ratio(&config.params.eps, "eps")?;
    let delta = req_ratio(&config.params.delta, "delta")?;
    let delta_f = ratio_to_f64(&delta);
    let n = match config.params.n {
        Some(n) => n,
        None => scaled(
            realizable_sample_size(ratio_to_f64(&eps), delta_f, &g)?,
            &config.scale,
        ),
    };
    let per_member = config.trials;
    let bound = delta_f + 3.0 * sigma(delta_f, per_member);

    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (gidx, (label, member)) in members.iter().enumerate() {
        let start = (gidx as u64) * per_member;
        let block = run_trials(per_member, config.threads, |t| {
            let trial = start + t;
            let s = member.sample(n, Seed::new(config.seed, trial));
            let out = realizable_qg_learn(&s, &g);
            Ok(row(trial, n, &out, member, &eps))
        })?;
        groups.push(group_stat(label.clone(), start, &block, bound));
        rows.extend(block);
    }
    let accept = groups.iter().all(|g| g.failure_rate <= g.bound);
    Ok(ExpOutcome {
        rows,
        groups,
        accept,
        accept_desc: format!(
            "every member's failure rate at eps={eps} stays within delta + 3*sigma = {bound:.4}"
        ),
        named: members,
        notes: vec![format!("per-member sample size n = {n}")],
    })
}

fn subtractive_attack_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let g = growth_of(config)?;
    let i = req(&config.params.i, "i")?;
    let j = req(&config.params.j, "j")?;
    let eta = req_ratio(&config.params.eta, "eta")?;
    let eps = req_ratio(&config.params.eps, "eps")?;
    let alpha = req_ratio(&config.params.alpha, "alpha")?;
    let n = config.params.n.unwrap_or(30);

    let q_prime = make_q_prime(SubsetIndex(i), j, &g)?;
    let label = format!("qprime[i={i};j={j}]");
    // The learner never sees the indicator, so it falls back to the point
    // mass at the origin; its error is this exact constant.
    let expected = Dist::dirac(DomainPoint::ORIGIN)
        .tv_distance(&q_prime)
        .into_ratio();
    let threshold = alpha.clone() * eta.clone() + eps.clone();
    let exceeds = expected > threshold;

    let rows = run_trials(config.trials, config.threads, |t| {
        let s = q_prime.sample(n, Seed::new(config.seed, t));
        let out = realizable_qg_learn(&s, &g);
        let err = out.tv_distance(&q_prime).into_ratio();
        Ok((
            TrialRow {
                trial: t,
                n,
                output_label: label_of(&out),
                // A trial "succeeds" for the attack when the error is
                // exactly the predicted constant.
                success: err == expected,
                error: err,
                micros: 0,
            },
            Some(out),
        ))
    })?;
    let groups = vec![group_stat(label.clone(), 0, &rows, 0.0)];
    let all_exact = rows.iter().all(|(r, _)| r.success);
    Ok(ExpOutcome {
        accept: all_exact && exceeds,
        accept_desc: format!(
            "every trial error equals {expected} exactly, and {expected} > alpha*eta + eps = {threshold}"
        ),
        notes: vec![format!(
            "error {} alpha*eta + eps (alpha={alpha}, eta={eta}, eps={eps})",
            if exceeds { "exceeds" } else { "does NOT exceed" }
        )],
        named: vec![(label, q_prime.clone())],
        rows,
        groups,
    })
}

fn additive_huber_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let members = family_of(config)?;
    let g = growth_of(config)?;
    let eta = CorruptionLevel::new(req_ratio(&config.params.eta, "eta")?)?;
    let decoy = Dist::dirac(req(&config.params.decoy, "decoy")?);
    let threshold = req_ratio(&config.params.threshold, "threshold")?;
    let accept_rate = ratio_to_f64(&req_ratio(&config.params.accept_rate, "accept_rate")?);
    let plan = SplitPlan {
        n1: req(&config.params.n1, "n1")?,
        n2: req(&config.params.n2, "n2")?,
        subset_floor: config.params.subset_floor.unwrap_or(0),
        subset_cap: config.params.subset_cap.unwrap_or(DEFAULT_SUBSET_CAP),
        scale: ratio_to_f64(&config.scale),
    };
    let n = plan.n1 + plan.n2;
    let inner = RealizableQg::new(g.clone());

    let corrupted: Vec<Dist> = members
        .iter()
        .map(|(_, m)| huber_contaminate(m, &decoy, &eta))
        .collect();

    let rows = run_trials(config.trials, config.threads, |t| {
        let idx = (t as usize) % members.len();
        let seed = Seed::new(config.seed, t);
        let s = corrupted[idx].sample(n, seed);
        let (out, _) = robustify(&inner, &s, &plan, seed.derive(t.wrapping_add(1 << 40)))?;
        Ok(row(t, n, &out, &members[idx].1, &threshold))
    })?;
    let successes = rows.iter().filter(|(r, _)| r.success).count() as f64;
    let rate = successes / config.trials.max(1) as f64;
    let groups = vec![group_stat("all-members".into(), 0, &rows, 1.0 - accept_rate)];
    Ok(ExpOutcome {
        accept: rate >= accept_rate,
        accept_desc: format!(
            "tv error <= {threshold} in at least {accept_rate:.2} of trials (measured {rate:.3})"
        ),
        notes: vec![format!(
            "trial t samples member t mod {} under Huber contamination",
            members.len()
        )],
        named: members,
        rows,
        groups,
    })
}

fn yatracos_finite_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let members = family_of(config)?;
    let eps = req_ratio(&config.params.eps, "eps")?;
    let delta = req_ratio(&config.params.delta, "delta")?;
    let delta_f = ratio_to_f64(&delta);
    let truth_idx = req(&config.params.truth, "truth")?;
    let (truth_label, truth) = members
        .get(truth_idx)
        .ok_or_else(|| HarnessError::Run(format!("truth index {truth_idx} out of range")))?
        .clone();
    let class: Vec<Dist> = members.iter().map(|(_, d)| d.clone()).collect();
    let sets = build_yatracos(&class)?;
    let n = match config.params.n {
        Some(n) => n,
        None => scaled(
            yatracos_sample_size(class.len() as u64, ratio_to_f64(&eps), delta_f)?,
            &config.scale,
        ),
    };
    // Truth is in the class, so min-distance is zero and the guarantee
    // threshold 3*min + eps reduces to eps; keep the general form anyway.
    let min_dist = class
        .iter()
        .map(|d| truth.tv_distance(d).into_ratio())
        .min()
        .unwrap_or_else(BigRational::zero);
    let threshold = BigRational::from_integer(3.into()) * min_dist + eps.clone();
    let bound = delta_f + 3.0 * sigma(delta_f, config.trials);

    let rows = run_trials(config.trials, config.threads, |t| {
        let s = truth.sample(n, Seed::new(config.seed, t));
        let (out, _) = select_min(&sets, &s)?;
        Ok(row(t, n, &out, &truth, &threshold))
    })?;
    let groups = vec![group_stat(truth_label, 0, &rows, bound)];
    let accept = groups[0].failure_rate <= bound;
    Ok(ExpOutcome {
        rows,
        accept,
        accept_desc: format!(
            "failure rate at threshold 3*min + eps = {threshold} stays within delta + 3*sigma = {bound:.4}"
        ),
        named: members,
        notes: vec![format!("selection sample size n = {n}")],
        groups,
    })
}

fn eta_grid_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let members = family_of(config)?;
    let g = growth_of(config)?;
    let eps = ratio_to_f64(&req_ratio(&config.params.eps, "eps")?);
    let delta = ratio_to_f64(&req_ratio(&config.params.delta, "delta")?);
    let eta = CorruptionLevel::new(req_ratio(&config.params.eta, "eta")?)?;
    let etas = config
        .params
        .etas
        .clone()
        .ok_or_else(|| HarnessError::Run("missing etas".into()))?;
    let decoy = Dist::dirac(req(&config.params.decoy, "decoy")?);
    let threshold = req_ratio(&config.params.threshold, "threshold")?;
    let accept_rate = ratio_to_f64(&req_ratio(&config.params.accept_rate, "accept_rate")?);
    let truth_idx = req(&config.params.truth, "truth")?;
    let (truth_label, truth) = members
        .get(truth_idx)
        .ok_or_else(|| HarnessError::Run(format!("truth index {truth_idx} out of range")))?
        .clone();
    let corrupted = huber_contaminate(&truth, &decoy, &eta);

    let inner = RealizableQg::new(g.clone());
    // Level ell assumes corruption level etas[ell] and inflates the
    // realizable size accordingly: the clean member only contributes a
    // (1 - eta) fraction of the draws.
    let levels_n: Vec<usize> = etas
        .iter()
        .map(|e| {
            let base = realizable_sample_size(eps / 4.0, delta / (2.0 * etas.len() as f64), &g)?;
            let inflate = 1.0 / (1.0 - ratio_to_f64(e));
            Ok(scaled((base as f64 * inflate).ceil() as u64, &config.scale))
        })
        .collect::<Result<_, HarnessError>>()?;
    let levels: Vec<GridLevel<'_>> = levels_n
        .iter()
        .map(|&sample_size| GridLevel {
            learner: &inner as &dyn Learner,
            sample_size,
        })
        .collect();
    let s0 = yatracos_sample_size(levels.len() as u64, eps / 4.0, delta / 2.0)? as usize;
    let n = s0 + levels_n.iter().sum::<usize>();

    let rows = run_trials(config.trials, config.threads, |t| {
        let seed = Seed::new(config.seed, t);
        let s = corrupted.sample(n, seed);
        let (out, _) = eta_grid_reduce(&levels, &s, eps, delta, seed.derive(t.wrapping_add(1 << 40)))?;
        Ok(row(t, n, &out, &truth, &threshold))
    })?;
    let successes = rows.iter().filter(|(r, _)| r.success).count() as f64;
    let rate = successes / config.trials.max(1) as f64;
    let groups = vec![group_stat(truth_label, 0, &rows, 1.0 - accept_rate)];
    Ok(ExpOutcome {
        accept: rate >= accept_rate,
        accept_desc: format!(
            "tv error <= {threshold} in at least {accept_rate:.2} of trials (measured {rate:.3})"
        ),
        notes: vec![format!("grid levels use sizes {levels_n:?}, selection sample {s0}")],
        named: members,
        rows,
        groups,
    })
}

fn compression_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let members = family_of(config)?;
    let g = growth_of(config)?;
    let eps = req_ratio(&config.params.eps, "eps")?;
    let n = match config.params.n {
        Some(n) => n,
        None => scaled(compression_sample_size(ratio_to_f64(&eps), &g)?, &config.scale),
    };
    let per_member = config.trials;
    // Definition guarantees success probability >= 2/3.
    let floor = 2.0 / 3.0 - 3.0 * sigma(2.0 / 3.0, per_member);

    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (gidx, (label, member)) in members.iter().enumerate() {
        let start = (gidx as u64) * per_member;
        let block = run_trials(per_member, config.threads, |t| {
            let trial = start + t;
            let s = member.sample(n, Seed::new(config.seed, trial));
            let msg = qg_encode(&s)?;
            let out = qg_decode(&msg, &g)?;
            Ok(row(trial, n, &out, member, &eps))
        })?;
        groups.push(group_stat(label.clone(), start, &block, 1.0 - floor));
        rows.extend(block);
    }
    let accept = groups.iter().all(|g| 1.0 - g.failure_rate >= floor);
    Ok(ExpOutcome {
        rows,
        groups,
        accept,
        accept_desc: format!(
            "every member's round-trip success rate at eps={eps} is at least 2/3 - 3*sigma = {floor:.4}"
        ),
        named: members,
        notes: vec![format!("compression sample size n = {n}")],
    })
}

fn dp_histogram_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let members = family_of(config)?;
    let truth_idx = config.params.truth.unwrap_or(0);
    let (truth_label, truth) = members
        .get(truth_idx)
        .ok_or_else(|| HarnessError::Run(format!("truth index {truth_idx} out of range")))?
        .clone();
    let alpha = ratio_to_f64(&req_ratio(&config.params.alpha, "alpha")?);
    let beta = ratio_to_f64(&req_ratio(&config.params.beta, "beta")?);
    let dp = DpParams::new(
        ratio_to_f64(&req_ratio(&config.params.eps_dp, "eps_dp")?),
        ratio_to_f64(&req_ratio(&config.params.delta_dp, "delta_dp")?),
    )?;
    let n = match config.params.n {
        Some(n) => n,
        None => scaled(histogram_sample_size(alpha, beta, &dp)?, &config.scale),
    };
    let bound = beta + 3.0 * sigma(beta, config.trials);

    let rows = run_trials(config.trials, config.threads, |t| {
        let seed = Seed::new(config.seed, t);
        let s = truth.sample(n, seed);
        let freqs = stability_histogram(&s, &dp, alpha, beta, seed.derive(t.wrapping_add(1 << 40)))?;
        // Every bin must be alpha-accurate, reading suppressed bins as 0.
        let mut max_dev = 0.0f64;
        for (bin, w) in truth.support() {
            let est = freqs.get(bin).copied().unwrap_or(0.0);
            max_dev = max_dev.max((est - ratio_to_f64(w)).abs());
        }
        for (bin, est) in &freqs {
            if truth.weight(bin).is_zero() {
                max_dev = max_dev.max(*est);
            }
        }
        let err = BigRational::from_float(max_dev).unwrap_or_else(BigRational::zero);
        Ok((
            TrialRow {
                trial: t,
                n,
                output_label: format!("hist[released={}]", freqs.len()),
                success: max_dev <= alpha,
                error: err,
                micros: 0,
            },
            None,
        ))
    })?;
    let groups = vec![group_stat(truth_label, 0, &rows, bound)];
    let accept = groups[0].failure_rate <= bound;
    Ok(ExpOutcome {
        rows,
        accept,
        accept_desc: format!(
            "all bins alpha-accurate (alpha={alpha}) in all but beta + 3*sigma = {bound:.4} of trials"
        ),
        named: members,
        notes: vec![format!("histogram sample size n = {n}")],
        groups,
    })
}

fn dp_qg_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let g = growth_of(config)?;
    let i = req(&config.params.i, "i")?;
    let j = req(&config.params.j, "j")?;
    let alpha_r = req_ratio(&config.params.alpha, "alpha")?;
    let alpha = ratio_to_f64(&alpha_r);
    let beta = ratio_to_f64(&req_ratio(&config.params.beta, "beta")?);
    let dp = DpParams::new(
        ratio_to_f64(&req_ratio(&config.params.eps_dp, "eps_dp")?),
        ratio_to_f64(&req_ratio(&config.params.delta_dp, "delta_dp")?),
    )?;
    let k = g.eval(j)?;
    let truth = make_qijk(SubsetIndex(i), j, k, Some(&g))?;
    let truth_label = crate::families::qg_label(i, j, k);
    let n = match config.params.n {
        Some(n) => n,
        None => scaled(dp_qg_sample_size(alpha, beta, &dp, &g)?, &config.scale),
    };
    // 1/j > alpha: the member must be recovered exactly (up to beta).
    // 1/j <= alpha: the fallback is also acceptable, always.
    let exact_regime = big_ratio(1, j) > alpha_r;
    let bound = if exact_regime {
        beta + 3.0 * sigma(beta, config.trials)
    } else {
        0.0
    };
    let fallback = Dist::dirac(DomainPoint::ORIGIN);

    let rows = run_trials(config.trials, config.threads, |t| {
        let seed = Seed::new(config.seed, t);
        let s = truth.sample(n, seed);
        let out = dp_qg_learn(&s, &g, alpha, beta, &dp, seed.derive(t.wrapping_add(1 << 40)))?;
        let success = if exact_regime {
            out == truth
        } else {
            out == truth || out == fallback
        };
        let err = out.tv_distance(&truth).into_ratio();
        Ok((
            TrialRow {
                trial: t,
                n,
                output_label: label_of(&out),
                error: err,
                success,
                micros: 0,
            },
            Some(out),
        ))
    })?;
    let groups = vec![group_stat(truth_label.clone(), 0, &rows, bound)];
    let accept = groups[0].failure_rate <= bound;
    Ok(ExpOutcome {
        rows,
        accept,
        accept_desc: if exact_regime {
            format!("1/j > alpha: output equals the member exactly in all but beta + 3*sigma = {bound:.4} of trials")
        } else {
            "1/j <= alpha: output is the member or the origin point mass in every trial".to_string()
        },
        named: vec![(truth_label, truth)],
        notes: vec![format!("private sample size n = {n}")],
        groups,
    })
}

fn cover_select_experiment(config: &ExperimentConfig) -> Result<ExpOutcome, HarnessError> {
    let members = family_of(config)?;
    let alpha_r = req_ratio(&config.params.alpha, "alpha")?;
    let beta = ratio_to_f64(&req_ratio(&config.params.beta, "beta")?);
    let truth_idx = req(&config.params.truth, "truth")?;
    let (truth_label, truth) = members
        .get(truth_idx)
        .ok_or_else(|| HarnessError::Run(format!("truth index {truth_idx} out of range")))?
        .clone();
    let class: Vec<Dist> = members.iter().map(|(_, d)| d.clone()).collect();
    let radius = Prob::new(alpha_r.clone() / BigRational::from_integer(6.into()))
        .map_err(|e| HarnessError::Run(e.to_string()))?;
    let packing = greedy_packing(&class, &radius)?;
    let sets = build_yatracos(&packing)?;
    let n = match config.params.n {
        Some(n) => n,
        None => scaled(
            yatracos_sample_size(packing.len() as u64, ratio_to_f64(&alpha_r) / 2.0, beta)?,
            &config.scale,
        ),
    };
    let threshold = config.params.threshold.clone().unwrap_or(alpha_r.clone());
    let bound = beta + 3.0 * sigma(beta, config.trials);

    let rows = run_trials(config.trials, config.threads, |t| {
        let s = truth.sample(n, Seed::new(config.seed, t));
        let (out, _) = select_min(&sets, &s)?;
        Ok(row(t, n, &out, &truth, &threshold))
    })?;
    let groups = vec![group_stat(truth_label, 0, &rows, bound)];
    let accept = groups[0].failure_rate <= bound;
    Ok(ExpOutcome {
        rows,
        accept,
        accept_desc: format!(
            "selection over the alpha/6 packing-cover ({} of {} members) errs beyond {threshold} in at most beta + 3*sigma = {bound:.4} of trials",
            packing.len(),
            class.len()
        ),
        named: members,
        notes: vec![format!("selection sample size n = {n}")],
        groups,
    })
}

// --- verify ----------------------------------------------------------------

/// Outcome of re-checking a CSV report against its JSON sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub rows: usize,
    pub verified: usize,
    pub skipped: usize,
    pub mismatches: usize,
}

/// Recompute every row's error from the logged output and target
/// distributions (stored in the JSON sidecar) and compare to the logged
/// exact rational. Rows without a reconstructible output (for example
/// histogram releases) are skipped.
pub fn verify_report(csv_path: &Path) -> Result<VerifyReport, HarnessError> {
    let json_path = csv_path.with_extension("json");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path)?)?;
    let dists = summary
        .get("dists")
        .and_then(|v| v.as_object())
        .ok_or_else(|| HarnessError::Run(format!("{} has no dists table", json_path.display())))?;
    let mut table: BTreeMap<String, Dist> = BTreeMap::new();
    for (label, text) in dists {
        let text = text
            .as_str()
            .ok_or_else(|| HarnessError::Run(format!("dists[{label}] is not a string")))?;
        table.insert(label.clone(), Dist::from_canonical_text(text)?);
    }
    // Each group names its target and owns a block of consecutive trials.
    let mut group_ranges: Vec<(u64, u64, String)> = Vec::new();
    if let Some(groups) = summary.get("groups").and_then(|v| v.as_array()) {
        for g in groups {
            let (Some(start), Some(trials), Some(target)) = (
                g.get("start_trial").and_then(|v| v.as_u64()),
                g.get("trials").and_then(|v| v.as_u64()),
                g.get("target").and_then(|v| v.as_str()),
            ) else {
                return Err(HarnessError::Run("malformed group in summary".into()));
            };
            group_ranges.push((start, start + trials, target.to_string()));
        }
    }

    let mut reader = csv::Reader::from_path(csv_path)?;
    let mut report = VerifyReport {
        rows: 0,
        verified: 0,
        skipped: 0,
        mismatches: 0,
    };
    for record in reader.records() {
        let record = record?;
        report.rows += 1;
        let trial: u64 = record
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| HarnessError::Run("bad trial column".into()))?;
        let label = record.get(2).unwrap_or_default();
        let logged = match (record.get(3), record.get(4)) {
            (Some(num), Some(den)) => crate::dist::parse_ratio(&format!("{num}/{den}"))
                .ok_or_else(|| HarnessError::Run(format!("bad error rational on trial {trial}")))?,
            _ => return Err(HarnessError::Run("missing error columns".into())),
        };
        let target = group_ranges
            .iter()
            .find(|(lo, hi, _)| (*lo..*hi).contains(&trial))
            .and_then(|(_, _, t)| table.get(t));
        let output = table.get(label);
        match (output, target) {
            (Some(out), Some(target)) => {
                report.verified += 1;
                if out.tv_distance(target).into_ratio() != logged {
                    report.mismatches += 1;
                }
            }
            _ => report.skipped += 1,
        }
    }
    if report.mismatches > 0 {
        return Err(HarnessError::VerifyMismatch(report.mismatches));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_from(text: &str, dir: &Path) -> (RunArtifacts, serde_json::Value) {
        let mut config = validate_config(text).unwrap();
        config.out_dir = dir.to_path_buf();
        run_experiment(&config).unwrap()
    }

    const REALIZABLE: &str = "\
[experiment]
name = realizable-qg
trials = 40
seed = 7

[family]
kind = qg
growth = square
is = 1,5
js = 1,2

[params]
eps = 1/2
delta = 1/10
n = 10
";

    #[test]
    fn realizable_run_writes_reports_and_accepts() {
        let dir = tempfile::tempdir().unwrap();
        let (artifacts, summary) = run_from(REALIZABLE, dir.path());
        assert!(artifacts.accept);
        assert!(artifacts.csv_path.exists() && artifacts.json_path.exists());
        assert_eq!(summary["total_trials"], 160);
        let body = fs::read_to_string(&artifacts.csv_path).unwrap();
        assert!(body.starts_with("trial,n,output_label,error_num,error_den,error_decimal,success,micros"));
    }

    #[test]
    fn determinism_up_to_micros() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let (a1, _) = run_from(REALIZABLE, d1.path());
        let (a2, _) = run_from(REALIZABLE, d2.path());
        let strip = |p: &Path| {
            fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(|l| l.rsplit_once(',').unwrap().0.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a1.csv_path), strip(&a2.csv_path));
    }

    #[test]
    fn verify_accepts_fresh_report_and_catches_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let (artifacts, _) = run_from(REALIZABLE, dir.path());
        let report = verify_report(&artifacts.csv_path).unwrap();
        assert_eq!(report.mismatches, 0);
        assert!(report.verified > 0);
        // Corrupt one error numerator.
        let body = fs::read_to_string(&artifacts.csv_path).unwrap();
        let mut lines: Vec<String> = body.lines().map(String::from).collect();
        let cols: Vec<&str> = lines[1].split(',').collect();
        let mut bad = cols.clone();
        let bumped = format!("{}", cols[3].parse::<i64>().unwrap() + 1);
        bad[3] = &bumped;
        lines[1] = bad.join(",");
        fs::write(&artifacts.csv_path, lines.join("\n")).unwrap();
        assert!(matches!(
            verify_report(&artifacts.csv_path),
            Err(HarnessError::VerifyMismatch(1))
        ));
    }

    #[test]
    fn subtractive_attack_accepts_with_exact_errors() {
        let dir = tempfile::tempdir().unwrap();
        let text = "\
[experiment]
name = subtractive-attack
trials = 25
seed = 3

[family]
kind = qg
growth = square

[params]
i = 5
j = 4
eps = 1/10
alpha = 1/1

[adversary]
kind = subtractive
eta = 1/16
";
        let (artifacts, summary) = run_from(text, dir.path());
        assert!(artifacts.accept);
        // Every row's exact error is 1/5.
        let body = fs::read_to_string(&artifacts.csv_path).unwrap();
        for line in body.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!((cols[3], cols[4]), ("1", "5"), "{line}");
        }
        assert!(summary["acceptance"]["holds"].as_bool().unwrap());
    }

    #[test]
    fn unknown_experiment_is_config_error() {
        let err = validate_config("[experiment]\nname = nonesuch\n").unwrap_err();
        assert!(err.issues[0].contains("nonesuch"));
    }

    #[test]
    fn compression_experiment_accepts() {
        let dir = tempfile::tempdir().unwrap();
        let text = "\
[experiment]
name = compression-roundtrip
trials = 60
seed = 11

[family]
kind = qg
growth = square
is = 3
js = 2

[params]
eps = 1/3
";
        let (artifacts, summary) = run_from(text, dir.path());
        assert!(artifacts.accept, "{summary}");
        assert_eq!(summary["groups"][0]["trials"], 60);
    }

    #[test]
    fn dp_histogram_experiment_accepts() {
        let dir = tempfile::tempdir().unwrap();
        let text = "\
[experiment]
name = dp-histogram
trials = 40
seed = 13

[family]
kind = explicit
member.0 = 0 0 2/5, 1 1 1/5, 2 2 1/5, 3 3 1/10, 4 4 1/10

[params]
alpha = 1/10
beta = 1/10
eps_dp = 1/1
delta_dp = 1/1000
";
        let (artifacts, summary) = run_from(text, dir.path());
        assert!(artifacts.accept, "{summary}");
    }

    #[test]
    fn cover_select_experiment_accepts() {
        let dir = tempfile::tempdir().unwrap();
        let text = "\
[experiment]
name = cover-select
trials = 30
seed = 17

[family]
kind = packing
gamma = 1/4
k = 1
j = 1

[params]
alpha = 1/2
beta = 1/10
truth = 2
";
        let (artifacts, summary) = run_from(text, dir.path());
        assert!(artifacts.accept, "{summary}");
    }
}
