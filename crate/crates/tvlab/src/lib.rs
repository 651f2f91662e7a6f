//! Exact finite-support discrete distributions over pairs of naturals,
//! contamination adversaries, and total-variation learners, together with
//! a seeded Monte Carlo harness for reproducible experiments.
//!
//! All distribution weights are exact rationals; total-variation distances,
//! mixture algebra, and Yatracos-set masses are computed without floating
//! point. Floats appear only in sample-size calculators and in the Laplace
//! noise of the private histogram.

pub mod adversary;
pub mod compress;
pub mod dist;
pub mod families;
pub mod harness;
pub mod learners;
pub mod privacy;
pub mod select;

pub use dist::{Dist, DomainPoint, Prob, Sample, Seed, YatracosSet};
