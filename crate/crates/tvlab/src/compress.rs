//! The size-1 sample compression scheme for the indicator family: the
//! encoder forwards the first indicator point it sees (falling back to the
//! origin), the decoder reconstructs the family member from it.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{Dist, DomainPoint, Prob, Sample, Seed};
use crate::families::{indicator_params, make_qijk, FamilyError, GrowthFn, SubsetIndex};
use crate::learners::{wilson_interval, TrialRecord};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompressError {
    #[error("cannot encode an empty sample")]
    EmptySample,
    #[error("message must carry exactly one point, got {0}")]
    BadMessage(usize),
    #[error("round trip needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Encoder output: at most one sample point and zero bits (`τ=1`, `t=0`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressionMessage {
    pub points: Vec<DomainPoint>,
    pub bits: Vec<bool>,
}

/// Picks the first indicator point in sample order, else `(0,0)`.
pub fn qg_encode(s: &Sample) -> Result<CompressionMessage, CompressError> {
    if s.is_empty() {
        return Err(CompressError::EmptySample);
    }
    let point = s
        .iter()
        .find(|x| indicator_params(x).is_some())
        .copied()
        .unwrap_or(DomainPoint::ORIGIN);
    Ok(CompressionMessage {
        points: vec![point],
        bits: Vec::new(),
    })
}

/// Reconstructs `q_{i,j,g(j)}` from an indicator point, `δ_{(0,0)}` from
/// anything else. Total on every single-point message.
pub fn qg_decode(m: &CompressionMessage, g: &GrowthFn) -> Result<Dist, CompressError> {
    if m.points.len() != 1 {
        return Err(CompressError::BadMessage(m.points.len()));
    }
    let x = m.points[0];
    if let Some((i, j)) = indicator_params(&x) {
        if let Ok(k) = g.eval(j) {
            if let Ok(q) = make_qijk(SubsetIndex(i), j, k, None) {
                return Ok(q);
            }
        }
    }
    Ok(Dist::dirac(DomainPoint::ORIGIN))
}

/// Sample size `n(ε) = 10·g(⌈1/ε⌉)` for the round-trip evaluation.
pub fn compression_sample_size(eps: f64, g: &GrowthFn) -> Result<u64, CompressError> {
    if eps <= 0.0 || eps >= 1.0 {
        return Err(CompressError::NoTrials);
    }
    let t = (1.0 / eps).ceil() as u64;
    Ok(10 * g.eval(t)?)
}

/// Outcome of a round-trip campaign on one family member.
#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Trials where the fallback `(0,0)` message point was not itself in
    /// the sample: the encoder's output then leaves the sub-sample regime.
    pub fallback_outside_sample: u64,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    #[serde(skip)]
    pub outputs: Vec<Dist>,
}

/// Per trial: draw `n` points from `q`, encode, decode, succeed iff the
/// decoded distribution is within `eps` of `q` in TV distance.
pub fn compression_round_trip(
    q: &Dist,
    g: &GrowthFn,
    eps: &Prob,
    n: usize,
    trials: u64,
    seed: Seed,
) -> Result<RoundTripReport, CompressError> {
    if trials == 0 {
        return Err(CompressError::NoTrials);
    }
    let outcomes: Result<Vec<(TrialRecord, Dist, bool)>, CompressError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = q.sample(n, Seed::new(seed.master, t));
            let msg = qg_encode(&s)?;
            let fallback_outside = msg.points[0] == DomainPoint::ORIGIN
                && !s.iter().any(|x| *x == DomainPoint::ORIGIN);
            let decoded = qg_decode(&msg, g)?;
            let err = decoded.tv_distance(q).into_ratio();
            let success = &err <= eps.as_ratio();
            let record = TrialRecord {
                trial: t,
                n,
                output_label: crate::learners::label_of(&decoded),
                error_num: err.numer().to_string(),
                error_den: err.denom().to_string(),
                error: crate::dist::ratio_to_f64(&err),
                success,
            };
            Ok((record, decoded, fallback_outside))
        })
        .collect();
    let outcomes = outcomes?;
    let successes = outcomes.iter().filter(|(r, _, _)| r.success).count() as u64;
    let fallback_outside_sample = outcomes.iter().filter(|(_, _, f)| *f).count() as u64;
    let (wilson_low, wilson_high) = wilson_interval(trials - successes, trials);
    Ok(RoundTripReport {
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        wilson_low: 1.0 - wilson_high,
        wilson_high: 1.0 - wilson_low,
        fallback_outside_sample,
        records: outcomes.iter().map(|(r, _, _)| r.clone()).collect(),
        outputs: outcomes.into_iter().map(|(_, d, _)| d).collect(),
    })
}
