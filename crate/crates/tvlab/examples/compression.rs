//! The size-1 compression scheme: one retained sample point, zero side
//! bits, and a decoder that reconstructs the family member.

use tvlab::compress::{compression_round_trip, compression_sample_size, qg_decode, qg_encode};
use tvlab::families::{make_qijk, GrowthFn, SubsetIndex};
use tvlab::{Prob, Seed};

fn main() {
    let g = GrowthFn::Square;
    let member = make_qijk(SubsetIndex(5), 2, 4, Some(&g)).unwrap();
    let eps = Prob::ratio(1, 3);
    let n = compression_sample_size(1.0 / 3.0, &g).unwrap();
    println!("sample size n(1/3) = {n}");

    // One encode/decode by hand.
    let s = member.sample(n as usize, Seed::new(5, 0));
    let msg = qg_encode(&s).unwrap();
    println!(
        "message: point ({}, {}), {} bits",
        msg.points[0].a,
        msg.points[0].b,
        msg.bits.len()
    );
    let decoded = qg_decode(&msg, &g).unwrap();
    println!("decode error = {}", decoded.tv_distance(&member).as_ratio());

    // A seeded campaign.
    let report = compression_round_trip(&member, &g, &eps, n as usize, 500, Seed::new(5, 0)).unwrap();
    println!(
        "round trip: {}/{} within eps (rate {:.3}, Wilson [{:.3}, {:.3}])",
        report.successes, report.trials, report.success_rate, report.wilson_low, report.wilson_high
    );
}
