//! Subtractive contamination removes exactly the indicator atom; the
//! realizable learner then errs by a fixed constant in every trial.

use tvlab::adversary::{subtract_component, CorruptionLevel};
use tvlab::dist::big_ratio;
use tvlab::families::{indicator_point, make_q_prime, make_qijk, GrowthFn, SubsetIndex};
use tvlab::learners::realizable_qg_learn;
use tvlab::{Dist, Seed};

fn main() {
    let g = GrowthFn::Square;
    let (i, j) = (5u64, 4u64);
    let k = g.eval(j).unwrap();

    let q = make_qijk(SubsetIndex(i), j, k, Some(&g)).unwrap();
    let removed = Dist::dirac(indicator_point(i, j));
    let eta = CorruptionLevel::new(big_ratio(1, k)).unwrap();

    // Removing the 1/k indicator mass and renormalizing gives q'.
    let attacked = subtract_component(&q, &removed, &eta).unwrap();
    let q_prime = make_q_prime(SubsetIndex(i), j, &g).unwrap();
    assert_eq!(attacked, q_prime);
    println!("q' = q minus its indicator, renormalized:\n{}", q_prime.to_canonical_text());

    // The learner keys on the indicator; with it gone, every run falls
    // back to the origin point mass at the same exact error.
    for trial in 0..5 {
        let s = q_prime.sample(50, Seed::new(11, trial));
        let out = realizable_qg_learn(&s, &g);
        println!(
            "trial {trial}: error = {}",
            out.tv_distance(&q_prime).as_ratio()
        );
    }
    println!(
        "threshold alpha*eta + eps at (1, 1/16, 1/10) = {}",
        big_ratio(1, 16) + big_ratio(1, 10)
    );
}
