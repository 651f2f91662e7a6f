//! Greedy maximal packing: pairwise distances exceed the radius, and
//! maximality makes the result a cover at the same radius.

use tvlab::families::{enumerate_family, FamilySpec};
use tvlab::privacy::{cover_then_select, greedy_packing};
use tvlab::{Prob, Seed};

fn main() {
    // All 15 nonempty subsets of [4] at gamma = 1/4.
    let spec = FamilySpec::Packing {
        gamma: Prob::ratio(1, 4),
        k: 1,
        j: 1,
    };
    let members = enumerate_family(&spec, 1000).unwrap();
    let class: Vec<_> = members.iter().map(|(_, d)| d.clone()).collect();
    println!("class size: {}", class.len());

    let radius = Prob::ratio(1, 12); // alpha/6 at alpha = 1/2
    let packing = greedy_packing(&class, &radius).unwrap();
    println!("greedy packing at radius 1/12: {} members", packing.len());
    for member in &class {
        let covered = packing
            .iter()
            .any(|p| member.tv_distance(p).as_ratio() <= radius.as_ratio());
        assert!(covered);
    }
    println!("every member is covered at the same radius");

    // Selection over the cover recovers a member to within alpha.
    let truth = &class[6];
    let alpha = Prob::ratio(1, 2);
    let s = truth.sample(2500, Seed::new(47, 0));
    let (out, trace) = cover_then_select(&class, &alpha, 0.1, &s).unwrap();
    println!(
        "selected candidate {} of {}, error {}",
        trace.selected,
        packing.len(),
        out.tv_distance(truth).as_ratio()
    );
}
