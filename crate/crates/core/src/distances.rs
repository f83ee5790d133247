//! Kernels, the unbiased MMD² u-statistic, empirical CDFs and the exact
//! two-sample Kolmogorov–Smirnov statistic.
//!
//! The MMD² estimator between `x` (length `n`) and `y` (length `m`) is
//!
//! ```text
//! MMD²(x, y) = 1/(n(n-1)) Σ_{i≠j} k(x_i, x_j)
//!            + 1/(m(m-1)) Σ_{i≠j} k(y_i, y_j)
//!            - 2/(nm)     Σ_{i,j}  k(x_i, y_j)
//! ```
//!
//! It is split into [`within_mean`] and [`cross_mean`] so that a classifier
//! comparing one test sequence against many training sequences only pays for
//! the test sequence's within-term once.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{DistributionModel, SampleSequence};

/// A bounded, symmetric kernel `0 <= k(x, y) <= bound()`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Kernel {
    /// `exp(-||x - y||² / (2 h²))`.
    GaussianRbf { bandwidth: f64 },
    /// `k(x, y) = level` everywhere.
    Constant { level: f64 },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::GaussianRbf { bandwidth: 1.0 }
    }
}

impl Kernel {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        let k = Kernel::GaussianRbf { bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn constant(level: f64) -> Result<Self> {
        let k = Kernel::Constant { level };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::GaussianRbf { bandwidth } if !(bandwidth > 0.0 && bandwidth.is_finite()) => {
                Err(Error::InvalidArgument(format!(
                    "kernel bandwidth must be positive and finite, got {bandwidth}"
                )))
            }
            Kernel::Constant { level } if !(level >= 0.0 && level.is_finite()) => Err(
                Error::InvalidArgument(format!("constant kernel level must be >= 0, got {level}")),
            ),
            _ => Ok(()),
        }
    }

    /// The constant `K` with `0 <= k(x, y) <= K`.
    pub fn bound(&self) -> f64 {
        match *self {
            Kernel::GaussianRbf { .. } => 1.0,
            Kernel::Constant { level } => level,
        }
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::GaussianRbf { bandwidth } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * bandwidth * bandwidth)).exp()
            }
            Kernel::Constant { level } => level,
        }
    }
}

/// Evaluates `k(x, y)`.
pub fn kernel_eval(k: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(k.eval_unchecked(x, y))
}

fn check_pair(x: &SampleSequence, y: &SampleSequence) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(())
}

fn require_len(x: &SampleSequence, required: usize) -> Result<()> {
    if x.len() < required {
        return Err(Error::TooShort {
            required,
            found: x.len(),
        });
    }
    Ok(())
}

/// Mean of the off-diagonal Gram entries of `x`. Requires `len(x) >= 2`.
pub fn within_mean(k: &Kernel, x: &SampleSequence) -> Result<f64> {
    require_len(x, 2)?;
    let n = x.len();
    let sum = match (*k, x.dim()) {
        (Kernel::Constant { level }, _) => return Ok(level),
        (Kernel::GaussianRbf { bandwidth }, 1) => {
            let g = 1.0 / (2.0 * bandwidth * bandwidth);
            let v = x.as_flat();
            let mut s = 0.0;
            for i in 0..n {
                let xi = v[i];
                for &xj in &v[i + 1..] {
                    let d = xi - xj;
                    s += (-g * d * d).exp();
                }
            }
            s
        }
        _ => {
            let mut s = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    s += k.eval_unchecked(x.point(i), x.point(j));
                }
            }
            s
        }
    };
    Ok(2.0 * sum / (n as f64 * (n as f64 - 1.0)))
}

/// Mean of the full cross-Gram matrix between `x` and `y`.
pub fn cross_mean(k: &Kernel, x: &SampleSequence, y: &SampleSequence) -> Result<f64> {
    check_pair(x, y)?;
    require_len(x, 1)?;
    require_len(y, 1)?;
    let sum = match (*k, x.dim()) {
        (Kernel::Constant { level }, _) => return Ok(level),
        (Kernel::GaussianRbf { bandwidth }, 1) => {
            let g = 1.0 / (2.0 * bandwidth * bandwidth);
            let mut s = 0.0;
            for &xi in x.as_flat() {
                for &yj in y.as_flat() {
                    let d = xi - yj;
                    s += (-g * d * d).exp();
                }
            }
            s
        }
        _ => {
            let mut s = 0.0;
            for xi in x.points() {
                for yj in y.points() {
                    s += k.eval_unchecked(xi, yj);
                }
            }
            s
        }
    };
    Ok(sum / (x.len() as f64 * y.len() as f64))
}

/// Unbiased MMD² estimate between two sequences, possibly of unequal length.
///
/// The value lies in `[-2K, 2K]` for a kernel bounded by `K` and may be
/// negative.
pub fn mmd2_unbiased(k: &Kernel, x: &SampleSequence, y: &SampleSequence) -> Result<f64> {
    check_pair(x, y)?;
    let wx = within_mean(k, x)?;
    let wy = within_mean(k, y)?;
    // fixed summation order keeps the result exactly symmetric
    let (a, b) = if canonical_first(x, y) {
        (x, y)
    } else {
        (y, x)
    };
    Ok(wx + wy - 2.0 * cross_mean(k, a, b)?)
}

fn canonical_first(x: &SampleSequence, y: &SampleSequence) -> bool {
    let (a, b) = (x.as_flat(), y.as_flat());
    a.len()
        .cmp(&b.len())
        .then_with(|| {
            a.iter()
                .zip(b)
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .is_le()
}

/// `E k(X, Y)` for independent `X ~ p`, `Y ~ q`, Gaussian × Gaussian RBF.
fn gaussian_rbf_expectation(bandwidth: f64, p: &DistributionModel, q: &DistributionModel) -> f64 {
    let (p, q) = (p.as_gaussian(), q.as_gaussian());
    let h2 = bandwidth * bandwidth;
    let s = h2 + p.variance + q.variance;
    let d = p.mean.len() as f64;
    let sq: f64 = p
        .mean
        .iter()
        .zip(&q.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (h2 / s).powf(0.5 * d) * (-sq / (2.0 * s)).exp()
}

/// Population MMD² between two Gaussians under a Gaussian RBF kernel, in
/// closed form. Other kernel families are rejected; use
/// [`mmd2_monte_carlo`] for them.
pub fn mmd2_population(k: &Kernel, p: &DistributionModel, q: &DistributionModel) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    match *k {
        Kernel::GaussianRbf { bandwidth } => {
            let pp = gaussian_rbf_expectation(bandwidth, p, p);
            let qq = gaussian_rbf_expectation(bandwidth, q, q);
            let pq = gaussian_rbf_expectation(bandwidth, p, q);
            Ok(pp + qq - 2.0 * pq)
        }
        other => Err(Error::Unsupported(format!(
            "closed-form population MMD for kernel {other:?}"
        ))),
    }
}

/// Monte Carlo estimate of population MMD² with its standard error.
///
/// Each draw takes two independent points from `p` and two from `q` and
/// averages `k(x, x') + k(y, y') - k(x, y') - k(x', y)`.
pub fn mmd2_monte_carlo<R: Rng + ?Sized>(
    k: &Kernel,
    p: &DistributionModel,
    q: &DistributionModel,
    draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    if draws < 2 {
        return Err(Error::TooFew {
            what: "Monte Carlo draws",
            required: 2,
            found: draws,
        });
    }
    let d = p.dim();
    let mut buf = Vec::with_capacity(4 * d);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..draws {
        buf.clear();
        p.sample_point(rng, &mut buf);
        p.sample_point(rng, &mut buf);
        q.sample_point(rng, &mut buf);
        q.sample_point(rng, &mut buf);
        let (x, rest) = buf.split_at(d);
        let (x2, rest) = rest.split_at(d);
        let (y, y2) = rest.split_at(d);
        let h = k.eval_unchecked(x, x2) + k.eval_unchecked(y, y2)
            - k.eval_unchecked(x, y2)
            - k.eval_unchecked(x2, y);
        let delta = h - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (h - mean);
    }
    let var = m2 / (draws - 1) as f64;
    Ok((mean, (var / draws as f64).sqrt()))
}

/// Population MMD² in closed form when available, otherwise by Monte Carlo
/// with `draws` samples.
pub fn mmd2_population_or_mc<R: Rng + ?Sized>(
    k: &Kernel,
    p: &DistributionModel,
    q: &DistributionModel,
    draws: usize,
    rng: &mut R,
) -> Result<f64> {
    match mmd2_population(k, p, q) {
        Err(Error::Unsupported(_)) => mmd2_monte_carlo(k, p, q, draws, rng).map(|(m, _)| m),
        other => other,
    }
}

/// Right-continuous empirical CDF of scalar samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("empirical CDF sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("empirical CDF sample"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn from_sequence(x: &SampleSequence) -> Result<Self> {
        Self::new(x.scalars()?)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// `F(a) = #{x_i <= a} / n`.
    pub fn eval(&self, a: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= a) as f64 / self.len() as f64
    }

    /// `sup_a |F(a) - G(a)|`, evaluated exactly at every sample point of
    /// either CDF after all ties at that point have been absorbed.
    pub fn ks_distance(&self, other: &EmpiricalCdf) -> f64 {
        let (a, b) = (&self.sorted, &other.sorted);
        let (n, m) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0usize, 0usize);
        let mut sup = 0.0f64;
        while i < a.len() && j < b.len() {
            let v = a[i].min(b[j]);
            while i < a.len() && a[i] <= v {
                i += 1;
            }
            while j < b.len() && b[j] <= v {
                j += 1;
            }
            sup = sup.max((i as f64 / n - j as f64 / m).abs());
        }
        // Past the end of one list the remaining gap only shrinks towards 0;
        // its first value is already covered by the last step above.
        sup
    }
}

/// Two-sample KS statistic between scalar sequences of any lengths.
pub fn ks_distance(x: &SampleSequence, y: &SampleSequence) -> Result<f64> {
    let fx = EmpiricalCdf::from_sequence(x)?;
    let fy = EmpiricalCdf::from_sequence(y)?;
    Ok(fx.ks_distance(&fy))
}
