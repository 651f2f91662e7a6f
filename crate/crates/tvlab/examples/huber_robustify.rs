//! Huber contamination with a decoy indicator, defeated by subset
//! enumeration plus minimum-distance selection.

use tvlab::adversary::{huber_contaminate, CorruptionLevel};
use tvlab::dist::big_ratio;
use tvlab::families::{indicator_point, make_qijk, GrowthFn, SubsetIndex};
use tvlab::learners::{robustify, RealizableQg, SplitPlan, DEFAULT_SUBSET_CAP};
use tvlab::{Dist, Seed};

fn main() {
    let g = GrowthFn::Square;
    let member = make_qijk(SubsetIndex(3), 2, 4, Some(&g)).unwrap();
    let decoy = Dist::dirac(indicator_point(7, 2));
    let eta = CorruptionLevel::new(big_ratio(1, 10)).unwrap();
    let corrupted = huber_contaminate(&member, &decoy, &eta);

    let plan = SplitPlan {
        n1: 12,
        n2: 400,
        subset_floor: 0,
        subset_cap: DEFAULT_SUBSET_CAP,
        scale: 0.01,
    };
    let inner = RealizableQg::new(g);

    let mut worst = big_ratio(0, 1);
    for trial in 0..10 {
        let seed = Seed::new(23, trial);
        let s = corrupted.sample(plan.n1 + plan.n2, seed);
        let (out, trace) = robustify(&inner, &s, &plan, seed.derive(trial + 1)).unwrap();
        let err = out.tv_distance(&member).into_ratio();
        println!(
            "trial {trial}: {} subsets -> {} hypotheses, error {err}",
            trace.subsets_enumerated, trace.hypotheses
        );
        worst = worst.max(err);
    }
    println!("worst error {worst} vs bound 2*eta + slack = {}", big_ratio(7, 20));
}
