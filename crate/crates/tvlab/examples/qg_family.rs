//! The indicator family: construction, the subset-decode rule, and the
//! exact three-weight ledger of each member.

use tvlab::families::{
    enumerate_family, indicator_point, make_qijk, FamilySpec, GrowthFn, SubsetIndex,
};

fn main() {
    let g = GrowthFn::Square;

    // The subset index decodes to the positions of its set bits, 1-based.
    for i in [1u64, 5, 6, 13] {
        println!("A_{i} = {:?}", SubsetIndex(i).decode());
    }

    // q_{5,2,4}: weight 1/2 at the origin, uniform block over A_5 x {5},
    // and the identifying indicator atom at (5, 6) with weight 1/4.
    let q = make_qijk(SubsetIndex(5), 2, 4, None).unwrap();
    println!("\nq_(5,2,4):\n{}", q.to_canonical_text());
    println!("indicator point: {:?}", indicator_point(5, 2));

    // A finite slice of the infinite class, in label order.
    let spec = FamilySpec::Qg {
        g,
        is: vec![1, 5, 9],
        js: vec![1, 2, 3],
    };
    println!("\nslice members:");
    for (label, member) in enumerate_family(&spec, 1000).unwrap() {
        println!("  {label}  (support size {})", member.support_size());
    }
}
