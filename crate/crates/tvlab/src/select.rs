//! Yatracos-set machinery and minimum-distance hypothesis selection.
//!
//! For hypotheses `q_i, q_j` the Yatracos set is
//! `A_{i,j} = {x : q_i(x) ≥ q_j(x)}`. Points outside every hypothesis
//! support satisfy `0 ≥ 0` and therefore belong to every set; they are
//! represented by the outside flag rather than enumerated.

use num::rational::BigRational;
use num::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::dist::{big_ratio, ratio_to_f64, Dist, Prob, Sample, YatracosSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectError {
    #[error("hypothesis list is empty")]
    EmptyList,
    #[error("sample is empty")]
    EmptySample,
    #[error("bad parameters: {0}")]
    BadParams(String),
}

/// Deduplicated hypotheses plus all ordered-pair Yatracos sets.
#[derive(Debug, Clone)]
pub struct HypothesisList {
    pub hypotheses: Vec<Dist>,
    pub yatracos: Vec<YatracosSet>,
}

/// Builds the Yatracos sets over `hyps` after exact-equality dedup.
pub fn build_yatracos(hyps: &[Dist]) -> Result<HypothesisList, SelectError> {
    if hyps.is_empty() {
        return Err(SelectError::EmptyList);
    }
    let mut hypotheses: Vec<Dist> = Vec::new();
    for h in hyps {
        if !hypotheses.contains(h) {
            hypotheses.push(h.clone());
        }
    }
    let reference: std::collections::BTreeSet<_> = hypotheses
        .iter()
        .flat_map(|h| h.support_points())
        .collect();
    let mut yatracos = Vec::new();
    for (i, qi) in hypotheses.iter().enumerate() {
        for (j, qj) in hypotheses.iter().enumerate() {
            if i == j {
                continue;
            }
            let listed = reference
                .iter()
                .filter(|x| qi.weight(x) >= qj.weight(x))
                .copied()
                .collect();
            yatracos.push(YatracosSet::new(listed, true, reference.clone()));
        }
    }
    Ok(HypothesisList {
        hypotheses,
        yatracos,
    })
}

/// A-distance: `max_B |p(B) − q(B)|` over the Yatracos sets; 0 when there
/// are no sets.
pub fn a_distance(p: &Dist, q: &Dist, sets: &HypothesisList) -> Prob {
    let mut best = BigRational::zero();
    for set in &sets.yatracos {
        let gap = (p.mass_of(set).into_ratio() - q.mass_of(set).into_ratio()).abs();
        if gap > best {
            best = gap;
        }
    }
    Prob::new(best).expect("a-distance in [0,1]")
}

/// Empirical A-distance `max_B |q(B) − |s ∩ B|/|s||`, exact.
pub fn empirical_a_distance(
    q: &Dist,
    s: &Sample,
    sets: &HypothesisList,
) -> Result<Prob, SelectError> {
    if s.is_empty() {
        return Err(SelectError::EmptySample);
    }
    let n = s.len() as u64;
    let mut best = BigRational::zero();
    for set in &sets.yatracos {
        let empirical = big_ratio(s.count_in(set) as u64, n);
        let gap = (q.mass_of(set).into_ratio() - empirical).abs();
        if gap > best {
            best = gap;
        }
    }
    Ok(Prob::new(best).expect("empirical a-distance in [0,1]"))
}

/// Per-hypothesis score recorded by [`select_min`].
#[derive(Debug, Clone, Serialize)]
pub struct SelectionScore {
    pub index: usize,
    pub score_num: String,
    pub score_den: String,
    pub score: f64,
}

/// Scores of every hypothesis plus the selected index.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionTrace {
    pub scores: Vec<SelectionScore>,
    pub selected: usize,
}

/// Selects the hypothesis minimizing the empirical A-distance against `s`;
/// ties break toward the earlier list position.
pub fn select_min(
    sets: &HypothesisList,
    s: &Sample,
) -> Result<(Dist, SelectionTrace), SelectError> {
    if sets.hypotheses.is_empty() {
        return Err(SelectError::EmptyList);
    }
    if s.is_empty() {
        return Err(SelectError::EmptySample);
    }
    let n = s.len() as u64;
    // Precompute empirical frequencies once per set.
    let empirical: Vec<BigRational> = sets
        .yatracos
        .iter()
        .map(|set| big_ratio(s.count_in(set) as u64, n))
        .collect();
    let mut scores = Vec::with_capacity(sets.hypotheses.len());
    let mut best: Option<(usize, BigRational)> = None;
    for (idx, q) in sets.hypotheses.iter().enumerate() {
        let mut score = BigRational::zero();
        for (set, emp) in sets.yatracos.iter().zip(&empirical) {
            let gap = (q.mass_of(set).into_ratio() - emp.clone()).abs();
            if gap > score {
                score = gap;
            }
        }
        scores.push(SelectionScore {
            index: idx,
            score_num: score.numer().to_string(),
            score_den: score.denom().to_string(),
            score: ratio_to_f64(&score),
        });
        match &best {
            Some((_, b)) if *b <= score => {}
            _ => best = Some((idx, score)),
        }
    }
    let (selected, _) = best.expect("nonempty hypothesis list");
    Ok((
        sets.hypotheses[selected].clone(),
        SelectionTrace { scores, selected },
    ))
}

/// Sample size for the finite-class selection guarantee:
/// `⌈8·(2·ln|𝒞| + ln(2/δ)) / ε²⌉`.
pub fn yatracos_sample_size(class_size: u64, eps: f64, delta: f64) -> Result<u64, SelectError> {
    if class_size < 1 || !(0.0..1.0).contains(&delta) || delta <= 0.0 || eps <= 0.0 {
        return Err(SelectError::BadParams(format!(
            "class_size={class_size}, eps={eps}, delta={delta}"
        )));
    }
    let raw = 8.0 * (2.0 * (class_size as f64).ln() + (2.0 / delta).ln()) / (eps * eps);
    Ok(raw.ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DomainPoint, Seed};
    use crate::families::{make_qijk, GrowthFn, SubsetIndex};
    use std::collections::BTreeSet;

    fn pt(a: u64, b: u64) -> DomainPoint {
        DomainPoint::new(a, b)
    }

    fn worked_pair() -> (Dist, Dist, HypothesisList) {
        let p = Dist::dirac(pt(0, 0));
        let pts: BTreeSet<_> = [pt(0, 0), pt(1, 1)].into();
        let q = Dist::uniform(&pts).unwrap();
        let sets = build_yatracos(&[p.clone(), q.clone()]).unwrap();
        (p, q, sets)
    }

    #[test]
    fn dedup_leaves_no_sets() {
        let p = Dist::dirac(pt(0, 0));
        let sets = build_yatracos(&[p.clone(), p]).unwrap();
        assert_eq!(sets.hypotheses.len(), 1);
        assert!(sets.yatracos.is_empty());
    }

    #[test]
    fn worked_pair_sets() {
        let (_, _, sets) = worked_pair();
        assert_eq!(sets.yatracos.len(), 2);
        // A_{p,q} = {(0,0)} plus outside; A_{q,p} = {(1,1)} plus outside.
        let a_pq = &sets.yatracos[0];
        assert!(a_pq.contains(&pt(0, 0)));
        assert!(!a_pq.contains(&pt(1, 1)));
        assert!(a_pq.contains(&pt(9, 9)));
        let a_qp = &sets.yatracos[1];
        assert!(!a_qp.contains(&pt(0, 0)));
        assert!(a_qp.contains(&pt(1, 1)));
        assert!(a_qp.contains(&pt(9, 9)));
    }

    #[test]
    fn yatracos_sets_realize_tv() {
        // q_i(A_{i,j}) − q_j(A_{i,j}) = tv(q_i, q_j) for every ordered pair.
        let g = GrowthFn::Square;
        let hyps: Vec<Dist> = [(1u64, 1u64), (5, 2), (9, 2), (3, 3)]
            .iter()
            .map(|&(i, j)| make_qijk(SubsetIndex(i), j, g.eval(j).unwrap(), Some(&g)).unwrap())
            .collect();
        let sets = build_yatracos(&hyps).unwrap();
        let m = sets.hypotheses.len();
        let mut set_iter = sets.yatracos.iter();
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let set = set_iter.next().unwrap();
                let gap = sets.hypotheses[i].mass_of(set).into_ratio()
                    - sets.hypotheses[j].mass_of(set).into_ratio();
                assert_eq!(
                    gap,
                    sets.hypotheses[i]
                        .tv_distance(&sets.hypotheses[j])
                        .into_ratio()
                );
            }
        }
    }

    #[test]
    fn a_distance_basics() {
        let (p, q, sets) = worked_pair();
        assert_eq!(a_distance(&p, &p, &sets), Prob::zero());
        // For hypotheses in the list, A-distance equals TV exactly.
        assert_eq!(a_distance(&p, &q, &sets), p.tv_distance(&q));
    }

    #[test]
    fn a_distance_bounded_by_tv() {
        let g = GrowthFn::Square;
        let hyps: Vec<Dist> = [(5u64, 2u64), (3, 3)]
            .iter()
            .map(|&(i, j)| make_qijk(SubsetIndex(i), j, g.eval(j).unwrap(), Some(&g)).unwrap())
            .collect();
        let sets = build_yatracos(&hyps).unwrap();
        let outsider = Dist::dirac(pt(7, 7));
        for other in &hyps {
            assert!(
                a_distance(&outsider, other, &sets).as_ratio()
                    <= outsider.tv_distance(other).as_ratio()
            );
        }
    }

    #[test]
    fn empirical_selection_worked_example() {
        let (p, _, sets) = worked_pair();
        let s = Sample::new(vec![pt(0, 0); 6]);
        let d_p = empirical_a_distance(&sets.hypotheses[0], &s, &sets).unwrap();
        let d_q = empirical_a_distance(&sets.hypotheses[1], &s, &sets).unwrap();
        assert_eq!(d_p, Prob::zero());
        assert_eq!(d_q, Prob::ratio(1, 2));
        let (chosen, trace) = select_min(&sets, &s).unwrap();
        assert_eq!(chosen, p);
        assert_eq!(trace.selected, 0);
        assert_eq!(trace.scores.len(), 2);
    }

    #[test]
    fn empirical_rejects_empty_sample() {
        let (_, _, sets) = worked_pair();
        assert_eq!(
            empirical_a_distance(&sets.hypotheses[0], &Sample::default(), &sets),
            Err(SelectError::EmptySample)
        );
    }

    #[test]
    fn selection_invariant_under_duplication() {
        let g = GrowthFn::Square;
        let hyps: Vec<Dist> = [(5u64, 2u64), (9, 2), (3, 3)]
            .iter()
            .map(|&(i, j)| make_qijk(SubsetIndex(i), j, g.eval(j).unwrap(), Some(&g)).unwrap())
            .collect();
        let sets = build_yatracos(&hyps).unwrap();
        let s = hyps[1].sample(40, Seed::new(11, 0));
        let (chosen, _) = select_min(&sets, &s).unwrap();
        let mut doubled = s.points().to_vec();
        doubled.extend_from_slice(s.points());
        let (chosen2, _) = select_min(&sets, &Sample::new(doubled)).unwrap();
        assert_eq!(chosen, chosen2);
    }

    #[test]
    fn single_hypothesis_selected_trivially() {
        let p = Dist::dirac(pt(0, 0));
        let sets = build_yatracos(&[p.clone()]).unwrap();
        let s = Sample::new(vec![pt(4, 4)]);
        let (chosen, _) = select_min(&sets, &s).unwrap();
        assert_eq!(chosen, p);
    }

    #[test]
    fn complement_sets_cover_domain() {
        let (_, _, sets) = worked_pair();
        // A_{i,j} ∪ A_{j,i} covers everything: any point is in one of them.
        for x in [pt(0, 0), pt(1, 1), pt(5, 5)] {
            assert!(sets.yatracos[0].contains(&x) || sets.yatracos[1].contains(&x));
        }
    }

    #[test]
    fn sample_size_examples() {
        // class_size=4, ε=1/5, δ=1/10 → 1154.
        assert_eq!(yatracos_sample_size(4, 0.2, 0.1).unwrap(), 1154);
        // class_size=1 → ⌈8·ln(2/δ)/ε²⌉.
        let expect = (8.0 * (2.0f64 / 0.1).ln() / 0.04).ceil() as u64;
        assert_eq!(yatracos_sample_size(1, 0.2, 0.1).unwrap(), expect);
        // Doubling 1/ε roughly quadruples the size.
        let base = yatracos_sample_size(4, 0.2, 0.1).unwrap();
        let fine = yatracos_sample_size(4, 0.1, 0.1).unwrap();
        assert!(fine >= 4 * base - 4 && fine <= 4 * base + 4);
        assert!(yatracos_sample_size(0, 0.2, 0.1).is_err());
    }

    #[test]
    fn a_distance_brute_force_oracle() {
        // On small union supports, A-distance equals the brute-force max of
        // |p(B) − q(B)| over subsets B expressible as Yatracos sets.
        let g = GrowthFn::Square;
        let hyps: Vec<Dist> = [(1u64, 2u64), (2, 2)]
            .iter()
            .map(|&(i, j)| make_qijk(SubsetIndex(i), j, g.eval(j).unwrap(), Some(&g)).unwrap())
            .collect();
        let sets = build_yatracos(&hyps).unwrap();
        let p = &hyps[0];
        let q = &hyps[1];
        let mut brute = BigRational::zero();
        for set in &sets.yatracos {
            let gap = (p.mass_of(set).into_ratio() - q.mass_of(set).into_ratio()).abs();
            if gap > brute {
                brute = gap;
            }
        }
        assert_eq!(a_distance(p, q, &sets).into_ratio(), brute);
    }
}
