//! Experiment configuration: a flat `key = value` format with `[section]`
//! headers. Rationals are written `p/q` and parsed exactly. Unknown keys
//! are rejected, and validation reports every violation at once.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

use crate::dist::{parse_ratio, Dist, DomainPoint, Prob};
use crate::families::{FamilySpec, GrowthFn};

#[derive(Debug, Error)]
#[error("invalid config:\n{}", issues.join("\n"))]
pub struct ConfigError {
    pub issues: Vec<String>,
}

/// The nine runnable experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    RealizableQg,
    SubtractiveAttack,
    AdditiveHuber,
    YatracosFinite,
    EtaGrid,
    CompressionRoundtrip,
    DpHistogram,
    DpQg,
    CoverSelect,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::RealizableQg,
        ExperimentKind::SubtractiveAttack,
        ExperimentKind::AdditiveHuber,
        ExperimentKind::YatracosFinite,
        ExperimentKind::EtaGrid,
        ExperimentKind::CompressionRoundtrip,
        ExperimentKind::DpHistogram,
        ExperimentKind::DpQg,
        ExperimentKind::CoverSelect,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::RealizableQg => "realizable-qg",
            ExperimentKind::SubtractiveAttack => "subtractive-attack",
            ExperimentKind::AdditiveHuber => "additive-huber",
            ExperimentKind::YatracosFinite => "yatracos-finite",
            ExperimentKind::EtaGrid => "eta-grid",
            ExperimentKind::CompressionRoundtrip => "compression-roundtrip",
            ExperimentKind::DpHistogram => "dp-histogram",
            ExperimentKind::DpQg => "dp-qg",
            ExperimentKind::CoverSelect => "cover-select",
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            ExperimentKind::RealizableQg => {
                "realizable learner on a finite slice of the indicator family; \
                 accepts iff every member's failure rate stays within delta plus slack"
            }
            ExperimentKind::SubtractiveAttack => {
                "subtractive contamination hides the indicator; accepts iff every trial \
                 error is exactly the predicted constant and exceeds the robustness threshold"
            }
            ExperimentKind::AdditiveHuber => {
                "subset-enumeration robustification under Huber contamination; accepts iff \
                 the error bound holds in the configured fraction of trials"
            }
            ExperimentKind::YatracosFinite => {
                "minimum-distance selection over an explicit finite class; accepts iff the \
                 failure rate stays within delta plus slack"
            }
            ExperimentKind::EtaGrid => {
                "known-level grid reduction under Huber contamination with an unknown level; \
                 accepts iff the error bound holds in the configured fraction of trials"
            }
            ExperimentKind::CompressionRoundtrip => {
                "size-1 compression encode/decode round trip; accepts iff every member's \
                 success rate clears two-thirds minus slack"
            }
            ExperimentKind::DpHistogram => {
                "stability-based private histogram; accepts iff all bins are alpha-accurate \
                 in at least 1-beta of trials, minus slack"
            }
            ExperimentKind::DpQg => {
                "private learner for the indicator family; accepts iff the output is \
                 structurally sound and exact recovery holds when 1/j exceeds alpha"
            }
            ExperimentKind::CoverSelect => {
                "greedy packing-cover plus selection; accepts iff the failure rate stays \
                 within beta plus slack"
            }
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

/// Numeric and structural parameters drawn from the `[params]` and
/// `[adversary]` sections; each experiment uses the subset it needs.
#[derive(Debug, Clone, Default)]
pub struct Params {
    pub eps: Option<BigRational>,
    pub delta: Option<BigRational>,
    pub alpha: Option<BigRational>,
    pub beta: Option<BigRational>,
    pub eps_dp: Option<BigRational>,
    pub delta_dp: Option<BigRational>,
    pub eta: Option<BigRational>,
    pub etas: Option<Vec<BigRational>>,
    pub n: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub subset_cap: Option<u64>,
    pub subset_floor: Option<usize>,
    pub i: Option<u64>,
    pub j: Option<u64>,
    pub truth: Option<usize>,
    pub threshold: Option<BigRational>,
    pub accept_rate: Option<BigRational>,
    pub decoy: Option<DomainPoint>,
}

/// A fully validated run description; equal configs produce byte-identical
/// report bodies.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub trials: u64,
    pub seed: u64,
    pub scale: BigRational,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub family: Option<FamilySpec>,
    pub params: Params,
}

const EXPERIMENT_KEYS: &[&str] = &["name", "trials", "seed", "scale", "threads", "out"];
const PARAM_KEYS: &[&str] = &[
    "eps",
    "delta",
    "alpha",
    "beta",
    "eps_dp",
    "delta_dp",
    "eta",
    "etas",
    "n",
    "n1",
    "n2",
    "subset_cap",
    "subset_floor",
    "i",
    "j",
    "truth",
    "threshold",
    "accept_rate",
];
const FAMILY_KEYS: &[&str] = &["kind", "growth", "is", "js", "gamma", "k", "j"];
const ADVERSARY_KEYS: &[&str] = &["kind", "eta", "decoy"];

struct RawConfig {
    // section -> key -> (line number, value)
    sections: BTreeMap<String, BTreeMap<String, (usize, String)>>,
}

fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut issues = Vec::new();
    let mut sections: BTreeMap<String, BTreeMap<String, (usize, String)>> = BTreeMap::new();
    let mut current = String::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                issues.push(format!("line {lineno}: unterminated section header"));
                continue;
            }
            current = line[1..line.len() - 1].trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(format!("line {lineno}: expected `key = value`"));
            continue;
        };
        if current.is_empty() {
            issues.push(format!("line {lineno}: key before any [section] header"));
            continue;
        }
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = sections.entry(current.clone()).or_default();
        if section.insert(key.clone(), (lineno, value)).is_some() {
            issues.push(format!("line {lineno}: duplicate key {key:?} in [{current}]"));
        }
    }
    if issues.is_empty() {
        Ok(RawConfig { sections })
    } else {
        Err(ConfigError { issues })
    }
}

fn rational_in_unit(
    value: &str,
    lineno: usize,
    key: &str,
    allow_one: bool,
    issues: &mut Vec<String>,
) -> Option<BigRational> {
    let Some(r) = parse_ratio(value) else {
        issues.push(format!("line {lineno}: {key} = {value:?} is not a rational p/q"));
        return None;
    };
    let ok = !r.is_negative() && (r < BigRational::one() || (allow_one && r.is_one()));
    if !ok {
        let bound = if allow_one { "[0, 1]" } else { "[0, 1)" };
        issues.push(format!("line {lineno}: {key} = {value} must lie in {bound}"));
        return None;
    }
    Some(r)
}

fn integer<T: FromStr>(value: &str, lineno: usize, key: &str, issues: &mut Vec<String>) -> Option<T> {
    match value.parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            issues.push(format!("line {lineno}: {key} = {value:?} is not a valid integer"));
            None
        }
    }
}

fn integer_list(value: &str, lineno: usize, key: &str, issues: &mut Vec<String>) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    for piece in value.split(',') {
        match piece.trim().parse::<u64>() {
            Ok(v) => out.push(v),
            Err(_) => {
                issues.push(format!(
                    "line {lineno}: {key} entry {piece:?} is not a valid integer"
                ));
                return None;
            }
        }
    }
    Some(out)
}

fn parse_point(value: &str, lineno: usize, key: &str, issues: &mut Vec<String>) -> Option<DomainPoint> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() == 2 {
        if let (Ok(a), Ok(b)) = (parts[0].parse(), parts[1].parse()) {
            return Some(DomainPoint::new(a, b));
        }
    }
    issues.push(format!("line {lineno}: {key} = {value:?} is not a point `a b`"));
    None
}

fn parse_growth(value: &str, lineno: usize, issues: &mut Vec<String>) -> Option<GrowthFn> {
    if value == "square" {
        return Some(GrowthFn::Square);
    }
    if let Some(rest) = value.strip_prefix("scaled:") {
        if let Some(r) = parse_ratio(rest) {
            if r.is_positive() {
                return Some(GrowthFn::ScaledSquare(r));
            }
        }
    }
    issues.push(format!(
        "line {lineno}: growth = {value:?} (expected `square` or `scaled:p/q`)"
    ));
    None
}

/// One explicit family member: comma-separated atoms `a b p/q`.
fn parse_member(value: &str, lineno: usize, key: &str, issues: &mut Vec<String>) -> Option<Dist> {
    let mut weights = BTreeMap::new();
    for atom in value.split(',') {
        let parts: Vec<&str> = atom.split_whitespace().collect();
        let parsed = if parts.len() == 3 {
            match (parts[0].parse(), parts[1].parse(), parse_ratio(parts[2])) {
                (Ok(a), Ok(b), Some(w)) => Some((DomainPoint::new(a, b), w)),
                _ => None,
            }
        } else {
            None
        };
        let Some((pt, w)) = parsed else {
            issues.push(format!(
                "line {lineno}: {key} atom {atom:?} is not `a b p/q`"
            ));
            return None;
        };
        weights.insert(pt, w);
    }
    match Dist::from_weights(weights) {
        Ok(d) => Some(d),
        Err(e) => {
            issues.push(format!("line {lineno}: {key} is not a distribution ({e})"));
            None
        }
    }
}

fn parse_family(
    section: &BTreeMap<String, (usize, String)>,
    issues: &mut Vec<String>,
) -> Option<FamilySpec> {
    for (key, (lineno, _)) in section {
        let known = FAMILY_KEYS.contains(&key.as_str()) || key.starts_with("member.");
        if !known {
            issues.push(format!("line {lineno}: unknown key {key:?} in [family]"));
        }
    }
    let Some((kind_line, kind)) = section.get("kind") else {
        issues.push("[family]: missing key `kind`".to_string());
        return None;
    };
    match kind.as_str() {
        "qg" => {
            let growth = section
                .get("growth")
                .and_then(|(l, v)| parse_growth(v, *l, issues))?;
            let is = section
                .get("is")
                .and_then(|(l, v)| integer_list(v, *l, "is", issues))
                .unwrap_or_default();
            let js = section
                .get("js")
                .and_then(|(l, v)| integer_list(v, *l, "js", issues))
                .unwrap_or_default();
            Some(FamilySpec::Qg { g: growth, is, js })
        }
        "packing" => {
            let gamma = section.get("gamma").and_then(|(l, v)| {
                rational_in_unit(v, *l, "gamma", false, issues).map(|r| Prob::new(r).expect("in unit"))
            });
            let k = section.get("k").and_then(|(l, v)| integer::<u64>(v, *l, "k", issues));
            let j = section.get("j").and_then(|(l, v)| integer::<u64>(v, *l, "j", issues));
            match (gamma, k, j) {
                (Some(gamma), Some(k), Some(j)) => Some(FamilySpec::Packing { gamma, k, j }),
                _ => {
                    issues.push("[family]: packing needs gamma, k, j".to_string());
                    None
                }
            }
        }
        "explicit" => {
            let mut members: Vec<(usize, Dist)> = Vec::new();
            for (key, (lineno, value)) in section {
                if let Some(idx) = key.strip_prefix("member.") {
                    let Ok(idx) = idx.parse::<usize>() else {
                        issues.push(format!("line {lineno}: bad member index in {key:?}"));
                        continue;
                    };
                    if let Some(d) = parse_member(value, *lineno, key, issues) {
                        members.push((idx, d));
                    }
                }
            }
            if members.is_empty() {
                issues.push("[family]: explicit family has no member.N keys".to_string());
                return None;
            }
            members.sort_by_key(|(idx, _)| *idx);
            Some(FamilySpec::Explicit(members.into_iter().map(|(_, d)| d).collect()))
        }
        other => {
            issues.push(format!(
                "line {kind_line}: family kind {other:?} (expected qg, packing, or explicit)"
            ));
            None
        }
    }
}

/// Parse and validate a config document, collecting every violation.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw = parse_raw(text)?;
    let mut issues = Vec::new();

    for section in raw.sections.keys() {
        if !["experiment", "params", "family", "adversary"].contains(&section.as_str()) {
            issues.push(format!("unknown section [{section}]"));
        }
    }

    let empty = BTreeMap::new();
    let exp = raw.sections.get("experiment").unwrap_or(&empty);
    for (key, (lineno, _)) in exp {
        if !EXPERIMENT_KEYS.contains(&key.as_str()) {
            issues.push(format!("line {lineno}: unknown key {key:?} in [experiment]"));
        }
    }
    let kind = match exp.get("name") {
        Some((lineno, value)) => match value.parse::<ExperimentKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                issues.push(format!("line {lineno}: {e}"));
                None
            }
        },
        None => {
            issues.push("[experiment]: missing key `name`".to_string());
            None
        }
    };
    let trials = exp
        .get("trials")
        .and_then(|(l, v)| integer::<u64>(v, *l, "trials", &mut issues))
        .unwrap_or(200);
    let seed = exp
        .get("seed")
        .and_then(|(l, v)| integer::<u64>(v, *l, "seed", &mut issues))
        .unwrap_or(0);
    let threads = exp
        .get("threads")
        .and_then(|(l, v)| integer::<usize>(v, *l, "threads", &mut issues))
        .unwrap_or(0);
    let out_dir = exp
        .get("out")
        .map(|(_, v)| PathBuf::from(v))
        .unwrap_or_else(|| PathBuf::from("reports"));
    let scale = match exp.get("scale") {
        Some((lineno, value)) => match parse_ratio(value) {
            Some(r) if r.is_positive() => r,
            _ => {
                issues.push(format!("line {lineno}: scale = {value:?} must be a positive p/q"));
                BigRational::one()
            }
        },
        None => BigRational::one(),
    };

    let family = raw
        .sections
        .get("family")
        .and_then(|s| parse_family(s, &mut issues));

    let mut params = Params::default();
    if let Some(section) = raw.sections.get("params") {
        for (key, (lineno, value)) in section {
            let l = *lineno;
            match key.as_str() {
                "eps" => params.eps = rational_in_unit(value, l, key, true, &mut issues),
                "delta" => params.delta = rational_in_unit(value, l, key, false, &mut issues),
                "alpha" => params.alpha = rational_in_unit(value, l, key, true, &mut issues),
                "beta" => params.beta = rational_in_unit(value, l, key, false, &mut issues),
                "eps_dp" => match parse_ratio(value) {
                    Some(r) if r.is_positive() => params.eps_dp = Some(r),
                    _ => issues.push(format!("line {l}: eps_dp = {value:?} must be a positive p/q")),
                },
                "delta_dp" => params.delta_dp = rational_in_unit(value, l, key, false, &mut issues),
                "eta" => params.eta = rational_in_unit(value, l, key, false, &mut issues),
                "etas" => {
                    let mut out = Vec::new();
                    let mut ok = true;
                    for piece in value.split(',') {
                        match rational_in_unit(piece.trim(), l, key, false, &mut issues) {
                            Some(r) => out.push(r),
                            None => ok = false,
                        }
                    }
                    if ok {
                        params.etas = Some(out);
                    }
                }
                "n" => params.n = integer(value, l, key, &mut issues),
                "n1" => params.n1 = integer(value, l, key, &mut issues),
                "n2" => params.n2 = integer(value, l, key, &mut issues),
                "subset_cap" => params.subset_cap = integer(value, l, key, &mut issues),
                "subset_floor" => params.subset_floor = integer(value, l, key, &mut issues),
                "i" => params.i = integer(value, l, key, &mut issues),
                "j" => params.j = integer(value, l, key, &mut issues),
                "truth" => params.truth = integer(value, l, key, &mut issues),
                "threshold" => params.threshold = rational_in_unit(value, l, key, true, &mut issues),
                "accept_rate" => {
                    params.accept_rate = rational_in_unit(value, l, key, true, &mut issues)
                }
                _ => issues.push(format!("line {l}: unknown key {key:?} in [params]")),
            }
            let _ = PARAM_KEYS; // schema documented above; match is the actual gate
        }
    }

    if let Some(section) = raw.sections.get("adversary") {
        for (key, (lineno, value)) in section {
            let l = *lineno;
            match key.as_str() {
                "kind" => {
                    if !["none", "huber", "subtractive", "general"].contains(&value.as_str()) {
                        issues.push(format!("line {l}: unknown adversary kind {value:?}"));
                    }
                }
                "eta" => {
                    if params.eta.is_some() {
                        issues.push(format!("line {l}: eta given in both [params] and [adversary]"));
                    }
                    params.eta = rational_in_unit(value, l, key, false, &mut issues);
                }
                "decoy" => params.decoy = parse_point(value, l, key, &mut issues),
                _ => issues.push(format!("line {l}: unknown key {key:?} in [adversary]")),
            }
            let _ = ADVERSARY_KEYS;
        }
    }

    if let Some(kind) = kind {
        check_required(kind, &family, &params, &mut issues);
    }

    match (kind, issues.is_empty()) {
        (Some(kind), true) => Ok(ExperimentConfig {
            kind,
            trials,
            seed,
            scale,
            threads,
            out_dir,
            family,
            params,
        }),
        _ => Err(ConfigError { issues }),
    }
}

fn check_required(
    kind: ExperimentKind,
    family: &Option<FamilySpec>,
    params: &Params,
    issues: &mut Vec<String>,
) {
    let mut need = |ok: bool, what: &str| {
        if !ok {
            issues.push(format!("{}: missing {what}", kind.name()));
        }
    };
    let has_qg = matches!(family, Some(FamilySpec::Qg { .. }));
    match kind {
        ExperimentKind::RealizableQg => {
            need(has_qg, "[family] kind = qg with is/js");
            need(params.eps.is_some(), "[params] eps");
            need(params.delta.is_some(), "[params] delta");
        }
        ExperimentKind::SubtractiveAttack => {
            need(has_qg, "[family] kind = qg (growth)");
            need(params.i.is_some(), "[params] i");
            need(params.j.is_some(), "[params] j");
            need(params.eta.is_some(), "eta");
            need(params.eps.is_some(), "[params] eps");
            need(params.alpha.is_some(), "[params] alpha");
        }
        ExperimentKind::AdditiveHuber => {
            need(has_qg, "[family] kind = qg with is/js");
            need(params.eta.is_some(), "eta");
            need(params.n1.is_some(), "[params] n1");
            need(params.n2.is_some(), "[params] n2");
            need(params.threshold.is_some(), "[params] threshold");
            need(params.accept_rate.is_some(), "[params] accept_rate");
            need(params.decoy.is_some(), "[adversary] decoy");
        }
        ExperimentKind::YatracosFinite => {
            need(family.is_some(), "[family]");
            need(params.eps.is_some(), "[params] eps");
            need(params.delta.is_some(), "[params] delta");
            need(params.truth.is_some(), "[params] truth");
        }
        ExperimentKind::EtaGrid => {
            need(has_qg, "[family] kind = qg with is/js");
            need(params.eps.is_some(), "[params] eps");
            need(params.delta.is_some(), "[params] delta");
            need(params.eta.is_some(), "eta");
            need(params.etas.is_some(), "[params] etas");
            need(params.threshold.is_some(), "[params] threshold");
            need(params.accept_rate.is_some(), "[params] accept_rate");
            need(params.decoy.is_some(), "[adversary] decoy");
            need(params.truth.is_some(), "[params] truth");
        }
        ExperimentKind::CompressionRoundtrip => {
            need(has_qg, "[family] kind = qg with is/js");
            need(params.eps.is_some(), "[params] eps");
        }
        ExperimentKind::DpHistogram => {
            need(
                matches!(family, Some(FamilySpec::Explicit(_))),
                "[family] kind = explicit",
            );
            need(params.alpha.is_some(), "[params] alpha");
            need(params.beta.is_some(), "[params] beta");
            need(params.eps_dp.is_some(), "[params] eps_dp");
            need(params.delta_dp.is_some(), "[params] delta_dp");
        }
        ExperimentKind::DpQg => {
            need(has_qg, "[family] kind = qg (growth)");
            need(params.i.is_some(), "[params] i");
            need(params.j.is_some(), "[params] j");
            need(params.alpha.is_some(), "[params] alpha");
            need(params.beta.is_some(), "[params] beta");
            need(params.eps_dp.is_some(), "[params] eps_dp");
            need(params.delta_dp.is_some(), "[params] delta_dp");
        }
        ExperimentKind::CoverSelect => {
            need(family.is_some(), "[family]");
            need(params.alpha.is_some(), "[params] alpha");
            need(params.beta.is_some(), "[params] beta");
            need(params.truth.is_some(), "[params] truth");
        }
    }
}

/// Apply CLI overrides on top of a parsed config.
pub fn apply_overrides(
    config: &mut ExperimentConfig,
    seed: Option<u64>,
    trials: Option<u64>,
    out: Option<PathBuf>,
    scale: Option<BigRational>,
) {
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(trials) = trials {
        config.trials = trials;
    }
    if let Some(out) = out {
        config.out_dir = out;
    }
    if let Some(scale) = scale {
        config.scale = scale;
    }
}

/// Scale a sample size by the config's rational scale factor, rounding up
/// and never below 1.
pub fn scaled(n: u64, scale: &BigRational) -> usize {
    let r = BigRational::from(BigInt::from(n)) * scale;
    let up = r.ceil().to_integer();
    if up <= BigInt::zero() {
        1
    } else {
        up.to_string().parse().unwrap_or(usize::MAX)
    }
}
