//! Nonparametric composite multi-hypothesis testing.
//!
//! A test sequence is assigned to the hypothesis whose training sequences it
//! is closest to, measured by the unbiased MMD² estimate or the two-sample
//! Kolmogorov–Smirnov statistic. The crate also provides the parametric
//! likelihood baseline, closed-form error exponents and discrimination rates,
//! a Fano-type ceiling on the discrimination capacity, and a seeded Monte
//! Carlo harness with exponent regression.
//!
//! ```
//! use disctest::{classify_ks, classify_mmd, Kernel, SampleSequence, TrainingSet};
//!
//! # fn main() -> disctest::Result<()> {
//! let train = TrainingSet::new(vec![
//!     vec![SampleSequence::from_scalars(vec![1.0, 2.0, 3.0])?],
//!     vec![SampleSequence::from_scalars(vec![4.0, 5.0, 6.0])?],
//! ])?;
//! let y = SampleSequence::from_scalars(vec![1.1, 2.1, 2.9])?;
//! let v = classify_ks(&train, &y)?;
//! assert_eq!(v.cluster, 0);
//! assert!((v.score - 1.0 / 3.0).abs() < 1e-12);
//! assert_eq!(classify_mmd(&train, &y, &Kernel::default())?.cluster, 0);
//! # Ok(())
//! # }
//! ```

pub mod bounds;
pub mod classify;
pub mod config;
pub mod distances;
pub mod error;
pub mod numeric;
pub mod report;
pub mod sample;
pub mod seqio;
pub mod simulate;

pub use classify::{classify_ks, classify_likelihood, classify_mmd, TrainingSet, Verdict};
pub use distances::{
    kernel_eval, ks_distance, mmd2_population, mmd2_unbiased, EmpiricalCdf, Kernel,
};
pub use error::{Error, Result};
pub use sample::{DistributionModel, Gaussian, SampleSequence};
