//! Exact distributions and total-variation distance on small examples.

use num::BigRational;
use tvlab::dist::big_ratio;
use tvlab::{Dist, DomainPoint, Seed};

fn main() {
    let origin = Dist::dirac(DomainPoint::ORIGIN);
    let coin = Dist::mix(&[
        (big_ratio(1, 2), Dist::dirac(DomainPoint::new(0, 0))),
        (big_ratio(1, 2), Dist::dirac(DomainPoint::new(1, 1))),
    ])
    .unwrap();

    println!("origin point mass:\n{}", origin.to_canonical_text());
    println!("fair coin:\n{}", coin.to_canonical_text());
    println!("tv(origin, coin) = {}", origin.tv_distance(&coin).as_ratio());

    // Mixing toward a distribution shrinks the distance linearly.
    for num in 0u64..=4 {
        let w = big_ratio(num, 4);
        let m = Dist::mix(&[(w.clone(), origin.clone()), (BigRational::from_integer(1.into()) - w, coin.clone())]).unwrap();
        println!("tv(mix@{num}/4, coin) = {}", m.tv_distance(&coin).as_ratio());
    }

    // Seeded sampling is reproducible.
    let s = coin.sample(10, Seed::new(7, 0));
    let again = coin.sample(10, Seed::new(7, 0));
    assert_eq!(s.points(), again.points());
    println!("10 seeded draws: {:?}", s.points().iter().map(|p| (p.a, p.b)).collect::<Vec<_>>());
}
