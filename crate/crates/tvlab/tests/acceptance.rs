//! Acceptance gate: eleven end-to-end criteria, each printing a single
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; each criterion is also an ordinary test assertion.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;

use tvlab::adversary::{huber_contaminate, CorruptionLevel};
use tvlab::compress::{compression_round_trip, compression_sample_size};
use tvlab::dist::{big_ratio, ratio_to_f64, Dist, DomainPoint, Prob, Seed};
use tvlab::families::{
    indicator_point, make_q_prime, make_q_prime_alt, make_qijk, GrowthFn, SubsetIndex,
};
use tvlab::harness::{run_experiment, validate_config};
use tvlab::learners::{
    evaluate_learner, realizable_qg_learn, robustify, RealizableQg, SplitPlan, DEFAULT_SUBSET_CAP,
};
use tvlab::privacy::{
    dp_qg_learn, dp_qg_sample_size, greedy_packing, histogram_sample_size, stability_histogram,
    DpParams,
};
use tvlab::select::{build_yatracos, select_min, yatracos_sample_size};

fn verdict(criterion: u32, what: &str, pass: bool) {
    println!(
        "criterion {criterion:>2} {}: {what}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {what}");
}

fn pt(a: u64, b: u64) -> DomainPoint {
    DomainPoint::new(a, b)
}

/// Random exact distribution over at most `atoms` points from a small grid.
fn random_dist(rng: &mut impl Rng, atoms: usize, grid: u64) -> Dist {
    let count = rng.gen_range(1..=atoms);
    let mut weights: BTreeMap<DomainPoint, u64> = BTreeMap::new();
    for _ in 0..count {
        let p = pt(rng.gen_range(0..grid), rng.gen_range(0..grid));
        *weights.entry(p).or_insert(0) += rng.gen_range(1..100u64);
    }
    let total: u64 = weights.values().sum();
    let exact: BTreeMap<DomainPoint, BigRational> = weights
        .into_iter()
        .map(|(p, w)| (p, big_ratio(w, total)))
        .collect();
    Dist::from_weights(exact).expect("normalized by construction")
}

fn brute_force_tv(p: &Dist, q: &Dist) -> BigRational {
    let union: Vec<DomainPoint> = p
        .support_points()
        .union(&q.support_points())
        .copied()
        .collect();
    assert!(union.len() <= 12, "criterion requires union support <= 12");
    let mut best = BigRational::zero();
    for mask in 0u32..(1 << union.len()) {
        let mut diff = BigRational::zero();
        for (idx, x) in union.iter().enumerate() {
            if mask >> idx & 1 == 1 {
                diff += p.weight(x) - q.weight(x);
            }
        }
        if diff.abs() > best {
            best = diff.abs();
        }
    }
    best
}

#[test]
fn criterion_01_tv_oracle_equivalence() {
    let mut rng = Seed::new(101, 0).rng();
    let ok = (0..500).all(|_| {
        let p = random_dist(&mut rng, 6, 4);
        let q = random_dist(&mut rng, 6, 4);
        p.tv_distance(&q).into_ratio() == brute_force_tv(&p, &q)
    });
    verdict(1, "tv_distance equals 2^support brute force on 500 random pairs", ok);
}

#[test]
fn criterion_02_ledger_and_decompositions() {
    let g = GrowthFn::Square;
    let mut ok = true;
    for i in 1u64..=15 {
        for j in 1u64..=6 {
            let k = g.eval(j).unwrap();
            let q = make_qijk(SubsetIndex(i), j, k, Some(&g)).unwrap();
            let ind = indicator_point(i, j);
            let a_set = SubsetIndex(i).decode();

            // Three-weight ledger. For j = 1 (k = 1) the first
            // two weights vanish and the member degenerates to the
            // indicator point mass.
            let origin_w = if j == 1 {
                BigRational::zero()
            } else {
                BigRational::one() - big_ratio(1, j)
            };
            ok &= q.weight(&DomainPoint::ORIGIN) == origin_w;
            ok &= q.weight(&ind) == big_ratio(1, k);
            let uniform_w = (big_ratio(1, j) - big_ratio(1, k)) / big_ratio(a_set.len() as u64, 1);
            for b in &a_set {
                ok &= q.weight(&pt(*b, 2 * j + 1)) == uniform_w;
            }

            if k == 1 {
                // Degenerate member: both decompositions collapse to the
                // indicator point mass itself.
                ok &= q == Dist::dirac(ind);
                continue;
            }

            // First decomposition: q = (1 - 1/g(j)) q' + (1/g(j)) r with r the
            // indicator point mass.
            let q_prime = make_q_prime(SubsetIndex(i), j, &g).unwrap();
            let lhs = Dist::mix(&[
                (BigRational::one() - big_ratio(1, k), q_prime),
                (big_ratio(1, k), Dist::dirac(ind)),
            ])
            .unwrap();
            ok &= lhs == q;

            // Second decomposition: q = (1 - j/g(j)) q'_alt + (j/g(j)) ((1-1/j) d00 + (1/j) d_ind).
            let q_alt = make_q_prime_alt(SubsetIndex(i), j).unwrap();
            let tail = Dist::mix(&[
                (BigRational::one() - big_ratio(1, j), Dist::dirac(DomainPoint::ORIGIN)),
                (big_ratio(1, j), Dist::dirac(ind)),
            ])
            .unwrap();
            let rhs = Dist::mix(&[
                (BigRational::one() - big_ratio(j, k), q_alt),
                (big_ratio(j, k), tail),
            ])
            .unwrap();
            ok &= rhs == q;
        }
    }
    verdict(2, "member weight ledger and both decompositions exact for i in 1..15, j in 1..6", ok);
}

#[test]
fn criterion_03_realizable_sample_complexity() {
    let g = GrowthFn::Square;
    let learner = RealizableQg::new(g.clone());
    let eps = Prob::ratio(1, 2);
    let trials = 2000u64;
    let bound = 0.1 + 3.0 * (0.1f64 * 0.9 / trials as f64).sqrt();
    let mut ok = true;
    for (gidx, (i, j)) in [1u64, 5, 9]
        .iter()
        .flat_map(|&i| [1u64, 2, 3, 5].iter().map(move |&j| (i, j)))
        .enumerate()
    {
        let member = make_qijk(SubsetIndex(i), j, g.eval(j).unwrap(), Some(&g)).unwrap();
        let summary = evaluate_learner(
            &learner,
            &member,
            &member,
            trials,
            10,
            &eps,
            Seed::new(303 + gidx as u64, 0),
        );
        ok &= summary.failure_rate <= bound;
    }
    verdict(
        3,
        "realizable failure rate <= delta + 3 sigma for all (i, j) at n = 10",
        ok,
    );
}

#[test]
fn criterion_04_subtractive_separation_exact() {
    let g = GrowthFn::Square;
    let q_prime = make_q_prime(SubsetIndex(5), 4, &g).unwrap();
    let expected = big_ratio(1, 5);
    let mut ok = Dist::dirac(DomainPoint::ORIGIN)
        .tv_distance(&q_prime)
        .into_ratio()
        == expected;
    for t in 0..50 {
        let s = q_prime.sample(40, Seed::new(404, t));
        let out = realizable_qg_learn(&s, &g);
        ok &= out.tv_distance(&q_prime).into_ratio() == expected;
    }
    // 1/5 > alpha*eta + eps = 1/16 + 1/10 = 13/80, compared exactly.
    ok &= expected > big_ratio(1, 16) + big_ratio(1, 10);
    verdict(4, "subtractive attack error exactly 1/5 > 13/80 in every trial", ok);
}

#[test]
fn criterion_05_yatracos_finite_class() {
    let class = vec![
        Dist::dirac(pt(0, 0)),
        Dist::mix(&[
            (big_ratio(1, 2), Dist::dirac(pt(0, 0))),
            (big_ratio(1, 2), Dist::dirac(pt(1, 1))),
        ])
        .unwrap(),
        Dist::dirac(pt(2, 2)),
        Dist::mix(&[
            (big_ratio(1, 4), Dist::dirac(pt(0, 0))),
            (big_ratio(3, 4), Dist::dirac(pt(3, 3))),
        ])
        .unwrap(),
    ];
    // Pairwise distances are exact rationals; spot-check a few.
    let mut ok = class[0].tv_distance(&class[1]).into_ratio() == big_ratio(1, 2)
        && class[0].tv_distance(&class[2]).into_ratio() == BigRational::one()
        && class[1].tv_distance(&class[3]).into_ratio() == big_ratio(3, 4);

    let m = yatracos_sample_size(4, 0.2, 0.1).unwrap();
    ok &= m == 1154;
    let truth = &class[1];
    let sets = build_yatracos(&class).unwrap();
    let eps = big_ratio(1, 5);
    let trials = 1000u64;
    let failures: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = truth.sample(m as usize, Seed::new(505, t));
            let (out, _) = select_min(&sets, &s).unwrap();
            u64::from(out.tv_distance(truth).into_ratio() > eps)
        })
        .sum();
    let bound = 0.1 + 3.0 * (0.1f64 * 0.9 / trials as f64).sqrt();
    ok &= (failures as f64 / trials as f64) <= bound;
    verdict(
        5,
        "Yatracos selection at m = 1154 fails within delta + 3 sigma",
        ok,
    );
}

#[test]
fn criterion_06_additive_robust_desk_scale() {
    let g = GrowthFn::Square;
    let inner = RealizableQg::new(g.clone());
    let members: Vec<Dist> = (1u64..=4)
        .flat_map(|i| {
            let g = &g;
            (1u64..=2).map(move |j| make_qijk(SubsetIndex(i), j, g.eval(j).unwrap(), Some(g)).unwrap())
        })
        .collect();
    let eta = CorruptionLevel::new(big_ratio(1, 10)).unwrap();
    let decoy = Dist::dirac(indicator_point(7, 2));
    let plan = SplitPlan {
        n1: 12,
        n2: 400,
        subset_floor: 0,
        subset_cap: DEFAULT_SUBSET_CAP,
        scale: 0.01,
    };
    let threshold = big_ratio(2, 10) + big_ratio(3, 20); // 2 eta + 0.15
    let trials = 500u64;
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let member = &members[t as usize % members.len()];
            let corrupted = huber_contaminate(member, &decoy, &eta);
            let seed = Seed::new(606, t);
            let s = corrupted.sample(plan.n1 + plan.n2, seed);
            let (out, _) = robustify(&inner, &s, &plan, seed.derive(t + 1)).unwrap();
            u64::from(out.tv_distance(member).into_ratio() <= threshold)
        })
        .sum();
    let rate = successes as f64 / trials as f64;
    verdict(
        6,
        &format!("additive-robust error <= 2 eta + 0.15 in {rate:.3} >= 0.85 of trials"),
        rate >= 0.85,
    );
}

#[test]
fn criterion_07_compression_round_trip() {
    let g = GrowthFn::Square;
    let n = compression_sample_size(1.0 / 3.0, &g).unwrap();
    let mut ok = n == 90;
    let eps = Prob::ratio(1, 3);
    let trials = 1000u64;
    let floor = 2.0 / 3.0 - 3.0 * ((2.0f64 / 3.0) * (1.0 / 3.0) / trials as f64).sqrt();
    for (gidx, j) in [2u64, 4].iter().enumerate() {
        let member = make_qijk(SubsetIndex(3), *j, g.eval(*j).unwrap(), Some(&g)).unwrap();
        let report = compression_round_trip(
            &member,
            &g,
            &eps,
            n as usize,
            trials,
            Seed::new(707 + gidx as u64, 0),
        )
        .unwrap();
        ok &= report.success_rate >= floor;
    }
    verdict(7, "compression round trip succeeds >= 2/3 - 3 sigma at n = 90", ok);
}

#[test]
fn criterion_08_dp_histogram_accuracy() {
    let dp = DpParams::new(1.0, 1e-3).unwrap();
    let (alpha, beta) = (0.1, 0.1);
    let n = histogram_sample_size(alpha, beta, &dp).unwrap() as usize;
    let truth = Dist::from_weights(BTreeMap::from([
        (pt(0, 0), big_ratio(2, 5)),
        (pt(1, 1), big_ratio(1, 5)),
        (pt(2, 2), big_ratio(1, 5)),
        (pt(3, 3), big_ratio(1, 10)),
        (pt(4, 4), big_ratio(1, 10)),
    ]))
    .unwrap();
    let trials = 500u64;
    let good: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = Seed::new(808, t);
            let s = truth.sample(n, seed);
            let freqs = stability_histogram(&s, &dp, alpha, beta, seed.derive(t + 1)).unwrap();
            let within = truth.support().all(|(bin, w)| {
                (freqs.get(bin).copied().unwrap_or(0.0) - ratio_to_f64(w)).abs() <= alpha
            }) && freqs.keys().all(|bin| !truth.weight(bin).is_zero());
            u64::from(within)
        })
        .sum();
    let bound = 1.0 - beta - 3.0 * (beta * (1.0 - beta) / trials as f64).sqrt();
    let mut ok = (good as f64 / trials as f64) >= bound;

    // Pre-noise sensitivity: neighboring datasets move at most two bins,
    // each by exactly one, checked exactly on integer counts.
    let count = |pts: &[DomainPoint]| {
        let mut m: BTreeMap<DomainPoint, i64> = BTreeMap::new();
        for x in pts {
            *m.entry(*x).or_insert(0) += 1;
        }
        m
    };
    let a = count(&[pt(0, 0), pt(0, 0), pt(1, 1)]);
    let b = count(&[pt(0, 0), pt(0, 0), pt(2, 2)]);
    let bins: BTreeSet<_> = a.keys().chain(b.keys()).collect();
    let deltas: Vec<i64> = bins
        .into_iter()
        .map(|bin| (a.get(bin).unwrap_or(&0) - b.get(bin).unwrap_or(&0)).abs())
        .collect();
    ok &= deltas.iter().all(|d| *d <= 1) && deltas.iter().sum::<i64>() == 2;
    verdict(8, "DP histogram alpha-accurate in >= 1 - beta - 3 sigma of trials", ok);
}

#[test]
fn criterion_09_dp_qg_learner() {
    let g = GrowthFn::Square;
    let dp = DpParams::new(1.0, 1e-3).unwrap();
    let (alpha, beta) = (0.5, 0.1);
    let n = dp_qg_sample_size(alpha, beta, &dp, &g).unwrap() as usize;
    let trials = 500u64;

    // 1/j > alpha (j = 1): exact recovery with probability >= 1 - beta.
    let truth = make_qijk(SubsetIndex(5), 1, 1, Some(&g)).unwrap();
    let exact: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = Seed::new(909, t);
            let s = truth.sample(n, seed);
            let out = dp_qg_learn(&s, &g, alpha, beta, &dp, seed.derive(t + 1)).unwrap();
            u64::from(out == truth)
        })
        .sum();
    let bound = 1.0 - beta - 3.0 * (beta * (1.0 - beta) / trials as f64).sqrt();
    let mut ok = (exact as f64 / trials as f64) >= bound;

    // 1/j <= alpha (j = 4): output is always the truth or the fallback.
    let far = make_qijk(SubsetIndex(5), 4, 16, Some(&g)).unwrap();
    let fallback = Dist::dirac(DomainPoint::ORIGIN);
    let sound: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = Seed::new(910, t);
            let s = far.sample(n, seed);
            let out = dp_qg_learn(&s, &g, alpha, beta, &dp, seed.derive(t + 1)).unwrap();
            u64::from(out == far || out == fallback)
        })
        .sum();
    ok &= sound == trials;
    verdict(9, "DP learner exact when 1/j > alpha, structurally sound otherwise", ok);
}

#[test]
fn criterion_10_packing_cover() {
    let mut rng = Seed::new(1010, 0).rng();
    let mut ok = true;
    for _ in 0..100 {
        let size = rng.gen_range(2..=20);
        let class: Vec<Dist> = (0..size).map(|_| random_dist(&mut rng, 4, 3)).collect();
        let radius = Prob::new(big_ratio(rng.gen_range(1..4), rng.gen_range(4..9))).unwrap();
        let packing = greedy_packing(&class, &radius).unwrap();
        for (i, p) in packing.iter().enumerate() {
            for q in &packing[i + 1..] {
                ok &= p.tv_distance(q).as_ratio() > radius.as_ratio();
            }
        }
        for member in &class {
            ok &= packing
                .iter()
                .any(|p| member.tv_distance(p).as_ratio() <= radius.as_ratio());
        }
    }
    verdict(10, "greedy packing is a packing and a cover on 100 random classes", ok);
}

#[test]
fn criterion_11_determinism() {
    let text = "\
[experiment]
name = realizable-qg
trials = 50
seed = 99

[family]
kind = qg
growth = square
is = 1,5
js = 1,2

[params]
eps = 1/2
delta = 1/10
n = 10
";
    let strip_micros = |path: &std::path::Path| {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    let mut bodies = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let mut config = validate_config(text).unwrap();
        config.out_dir = dir.path().to_path_buf();
        let (artifacts, _) = run_experiment(&config).unwrap();
        bodies.push(strip_micros(&artifacts.csv_path));
    }
    verdict(11, "re-running a config yields byte-identical CSV bodies sans timing", bodies[0] == bodies[1]);
}
