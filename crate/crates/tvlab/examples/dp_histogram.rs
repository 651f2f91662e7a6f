//! The stability-based private histogram and the private learner for the
//! indicator family built on top of it.

use std::collections::BTreeMap;

use tvlab::dist::big_ratio;
use tvlab::families::{make_qijk, GrowthFn, SubsetIndex};
use tvlab::privacy::{dp_qg_learn, dp_qg_sample_size, histogram_sample_size, stability_histogram, DpParams};
use tvlab::{Dist, DomainPoint, Seed};

fn main() {
    let dp = DpParams::new(1.0, 1e-3).unwrap();
    let (alpha, beta) = (0.1, 0.1);
    let n = histogram_sample_size(alpha, beta, &dp).unwrap();
    println!("histogram sample size at alpha=1/10: {n}");

    let truth = Dist::from_weights(BTreeMap::from([
        (DomainPoint::new(0, 0), big_ratio(2, 5)),
        (DomainPoint::new(1, 1), big_ratio(2, 5)),
        (DomainPoint::new(2, 2), big_ratio(1, 5)),
    ]))
    .unwrap();
    let s = truth.sample(n as usize, Seed::new(31, 0));
    let freqs = stability_histogram(&s, &dp, alpha, beta, Seed::new(31, 1)).unwrap();
    for (bin, freq) in &freqs {
        println!("released bin ({}, {}): {freq:.4}", bin.a, bin.b);
    }

    // The private learner reads the histogram and keys on indicator bins.
    let g = GrowthFn::Square;
    let (la, lb) = (0.5, 0.1);
    let ln = dp_qg_sample_size(la, lb, &dp, &g).unwrap();
    let member = make_qijk(SubsetIndex(5), 1, 1, Some(&g)).unwrap();
    let s = member.sample(ln as usize, Seed::new(31, 2));
    let out = dp_qg_learn(&s, &g, la, lb, &dp, Seed::new(31, 3)).unwrap();
    println!(
        "private learner at n = {ln}: recovered member exactly: {}",
        out == member
    );
}
