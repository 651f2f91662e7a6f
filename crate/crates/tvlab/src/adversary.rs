//! Contamination adversaries as exact `Dist → Dist` maps.
//!
//! All three adversaries commit to a corrupted *distribution* before any
//! sampling happens; none of them touch samples.

use num::rational::BigRational;
use num::{One, Signed, Zero};
use thiserror::Error;

use crate::dist::{Dist, Prob};

/// Corruption level `η ∈ [0, 1)`, exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptionLevel(BigRational);

impl CorruptionLevel {
    pub fn new(eta: BigRational) -> Result<Self, AdversaryError> {
        if eta.is_negative() || eta >= BigRational::one() {
            return Err(AdversaryError::BadLevel(eta.to_string()));
        }
        Ok(CorruptionLevel(eta))
    }

    pub fn zero() -> Self {
        CorruptionLevel(BigRational::zero())
    }

    pub fn from_prob(p: &Prob) -> Result<Self, AdversaryError> {
        CorruptionLevel::new(p.as_ratio().clone())
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("corruption level {0} outside [0,1)")]
    BadLevel(String),
    #[error("removed mass exceeds the available mass at {0}")]
    MassUnderflow(String),
    #[error(transparent)]
    Dist(#[from] crate::dist::DistError),
}

/// Huber/additive contamination: sampling distribution `η·r + (1−η)·p`.
pub fn huber_contaminate(p: &Dist, r: &Dist, eta: &CorruptionLevel) -> Dist {
    let eta = eta.as_ratio().clone();
    Dist::mix(&[
        (eta.clone(), r.clone()),
        (BigRational::one() - eta, p.clone()),
    ])
    .expect("weights sum to 1")
}

/// Subtractive contamination: the `p` with `η·removed + (1−η)·p = q`,
/// i.e. `p = (q − η·removed) / (1−η)`. Requires `η·removed(x) ≤ q(x)`
/// pointwise.
pub fn subtract_component(
    q: &Dist,
    removed: &Dist,
    eta: &CorruptionLevel,
) -> Result<Dist, AdversaryError> {
    let eta = eta.as_ratio();
    if eta.is_zero() {
        return Ok(q.clone());
    }
    for (x, w) in removed.support() {
        if eta * w > q.weight(x) {
            return Err(AdversaryError::MassUnderflow(x.to_string()));
        }
    }
    let scale = BigRational::one() - eta.clone();
    let weights = q
        .support()
        .map(|(x, w)| (*x, (w - eta * removed.weight(x)) / scale.clone()))
        .collect();
    Ok(Dist::from_weights(weights)?)
}

/// Both modifications at once: remove `η_rem·remove` from `q`, then mix in
/// `η_add·add`. The total TV displacement is at most `η_add + η_rem`.
pub fn general_corrupt(
    q: &Dist,
    add: &Dist,
    remove: &Dist,
    eta_add: &CorruptionLevel,
    eta_rem: &CorruptionLevel,
) -> Result<Dist, AdversaryError> {
    let subtracted = subtract_component(q, remove, eta_rem)?;
    Ok(huber_contaminate(&subtracted, add, eta_add))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{big_ratio, DomainPoint};
    use crate::families::{indicator_point, make_q_prime, make_qijk, GrowthFn, SubsetIndex};

    fn pt(a: u64, b: u64) -> DomainPoint {
        DomainPoint::new(a, b)
    }

    fn level(num: u64, den: u64) -> CorruptionLevel {
        CorruptionLevel::new(big_ratio(num, den)).unwrap()
    }

    #[test]
    fn level_rejects_one() {
        assert!(CorruptionLevel::new(BigRational::one()).is_err());
        assert!(CorruptionLevel::new(big_ratio(17, 16)).is_err());
    }

    #[test]
    fn huber_eta_zero_is_identity() {
        let p = make_qijk(SubsetIndex(5), 2, 4, None).unwrap();
        let r = Dist::dirac(pt(1, 1));
        assert_eq!(huber_contaminate(&p, &r, &CorruptionLevel::zero()), p);
    }

    #[test]
    fn huber_two_atom_example() {
        let mixed = huber_contaminate(
            &Dist::dirac(pt(0, 0)),
            &Dist::dirac(pt(1, 1)),
            &level(1, 4),
        );
        assert_eq!(mixed.weight(&pt(0, 0)), big_ratio(3, 4));
        assert_eq!(mixed.weight(&pt(1, 1)), big_ratio(1, 4));
    }

    #[test]
    fn huber_tv_bounded_by_eta() {
        let p = make_qijk(SubsetIndex(5), 2, 4, None).unwrap();
        for (r, eta) in [
            (Dist::dirac(pt(9, 9)), level(1, 10)),
            (Dist::dirac(pt(0, 0)), level(1, 3)),
            (p.clone(), level(1, 2)),
        ] {
            let corrupted = huber_contaminate(&p, &r, &eta);
            assert!(corrupted.tv_distance(&p).as_ratio() <= eta.as_ratio());
        }
    }

    #[test]
    fn subtract_recovers_q_prime() {
        // Removing the indicator atom at η = 1/g(j) yields q′_{i,j}.
        let g = GrowthFn::Square;
        for (i, j) in [(5u64, 2u64), (5, 4), (3, 3)] {
            let gj = g.eval(j).unwrap();
            let q = make_qijk(SubsetIndex(i), j, gj, Some(&g)).unwrap();
            let removed = Dist::dirac(indicator_point(i, j));
            let p = subtract_component(&q, &removed, &level(1, gj)).unwrap();
            assert_eq!(p, make_q_prime(SubsetIndex(i), j, &g).unwrap());
        }
    }

    #[test]
    fn subtract_round_trip() {
        let q = make_qijk(SubsetIndex(5), 2, 4, None).unwrap();
        let removed = Dist::dirac(pt(5, 6));
        let eta = level(1, 8);
        let p = subtract_component(&q, &removed, &eta).unwrap();
        let back = Dist::mix(&[
            (eta.as_ratio().clone(), removed),
            (BigRational::one() - eta.as_ratio(), p),
        ])
        .unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn subtract_eta_zero_is_identity() {
        let q = make_qijk(SubsetIndex(5), 2, 4, None).unwrap();
        let p = subtract_component(&q, &Dist::dirac(pt(5, 6)), &CorruptionLevel::zero()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn subtract_underflow_detected() {
        let q = make_qijk(SubsetIndex(5), 2, 4, None).unwrap();
        // Indicator carries only 1/4; removing 1/2 of a pure atom fails.
        let err = subtract_component(&q, &Dist::dirac(pt(5, 6)), &level(1, 2));
        assert!(matches!(err, Err(AdversaryError::MassUnderflow(_))));
    }

    #[test]
    fn general_corrupt_identity_and_bound() {
        let q = make_qijk(SubsetIndex(5), 2, 4, None).unwrap();
        let add = Dist::dirac(pt(7, 6));
        let remove = Dist::dirac(pt(5, 6));
        let same = general_corrupt(
            &q,
            &add,
            &remove,
            &CorruptionLevel::zero(),
            &CorruptionLevel::zero(),
        )
        .unwrap();
        assert_eq!(same, q);

        let (ea, er) = (level(1, 10), level(1, 8));
        let corrupted = general_corrupt(&q, &add, &remove, &ea, &er).unwrap();
        let bound = ea.as_ratio() + er.as_ratio();
        assert!(corrupted.tv_distance(&q).as_ratio() <= &bound);
    }

    #[test]
    fn general_corrupt_matches_hand_mixture() {
        // Remove the indicator atom entirely, add a decoy indicator.
        let g = GrowthFn::Square;
        let q = make_qijk(SubsetIndex(5), 2, 4, Some(&g)).unwrap();
        let remove = Dist::dirac(pt(5, 6));
        let add = Dist::dirac(pt(9, 6));
        let (ea, er) = (level(1, 10), level(1, 4));
        let corrupted = general_corrupt(&q, &add, &remove, &ea, &er).unwrap();
        let qp = make_q_prime(SubsetIndex(5), 2, &g).unwrap();
        let hand = Dist::mix(&[
            (big_ratio(1, 10), add),
            (big_ratio(9, 10), qp),
        ])
        .unwrap();
        assert_eq!(corrupted, hand);
    }
}
