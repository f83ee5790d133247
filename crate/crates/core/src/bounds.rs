//! Closed-form theory for a problem instance: cluster separations, Chernoff
//! information, achievable discrimination rates, finite-`n` error bounds and
//! the KL-based ceiling on the discrimination capacity.
//!
//! Chernoff and KL divergences are computed in nats. Every rate, capacity
//! and error exponent returned to callers is in bits per sample; the single
//! conversion factor is [`std::f64::consts::LOG2_E`].

use std::f64::consts::LOG2_E;

use serde::Serialize;

use crate::classify::TrainingSet;
use crate::distances::{mmd2_population, Kernel};
use crate::error::{Error, Result};
use crate::numeric::{golden_max, std_normal_cdf};
use crate::sample::DistributionModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mmd2,
    Ks,
}

/// Largest within-cluster diameter and smallest between-cluster distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationPair {
    pub d_inner: f64,
    pub d_outer: f64,
    pub metric: Metric,
}

impl SeparationPair {
    /// Whether the diameter is strictly below the inter-cluster distance.
    pub fn premise_holds(&self) -> bool {
        self.d_inner < self.d_outer
    }

    /// `D_O - D_I` clamped at zero.
    pub fn gap(&self) -> f64 {
        (self.d_outer - self.d_inner).max(0.0)
    }
}

/// Population KS distance `sup_a |F_p(a) - F_q(a)|` between scalar Gaussians.
///
/// The bracket `[min μ - 6 max σ, max μ + 6 max σ]` is scanned on a coarse
/// grid to isolate the best local peak (the CDF difference has at most two),
/// which golden-section search then refines to 1e-10.
pub fn population_ks(p: &DistributionModel, q: &DistributionModel) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    for m in [p, q] {
        if m.dim() != 1 {
            return Err(Error::NotScalar(m.dim()));
        }
    }
    let (p, q) = (p.as_gaussian(), q.as_gaussian());
    let (m1, s1) = (p.mean[0], p.variance.sqrt());
    let (m2, s2) = (q.mean[0], q.variance.sqrt());
    if m1 == m2 && s1 == s2 {
        return Ok(0.0);
    }
    let diff = |a: f64| (std_normal_cdf((a - m1) / s1) - std_normal_cdf((a - m2) / s2)).abs();
    let smax = s1.max(s2);
    let lo = m1.min(m2) - 6.0 * smax;
    let hi = m1.max(m2) + 6.0 * smax;
    const CELLS: usize = 512;
    let step = (hi - lo) / CELLS as f64;
    let (best, _) = (0..=CELLS)
        .map(|i| (i, diff(lo + i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    let a = lo + best.saturating_sub(1) as f64 * step;
    let b = (lo + (best + 1) as f64 * step).min(hi);
    Ok(golden_max(diff, a, b, 1e-10).1)
}

/// Population distance between two members under `metric`.
pub fn population_distance(
    metric: Metric,
    kernel: &Kernel,
    p: &DistributionModel,
    q: &DistributionModel,
) -> Result<f64> {
    match metric {
        Metric::Mmd2 => mmd2_population(kernel, p, q),
        Metric::Ks => population_ks(p, q),
    }
}

/// Diameter/inter-set distances of the given clusters. A violated
/// separation premise is reported through [`SeparationPair::premise_holds`].
pub fn cluster_separations(
    clusters: &[Vec<DistributionModel>],
    metric: Metric,
    kernel: &Kernel,
) -> Result<SeparationPair> {
    if clusters.len() < 2 {
        return Err(Error::TooFew {
            what: "clusters",
            required: 2,
            found: clusters.len(),
        });
    }
    if clusters.iter().any(Vec::is_empty) {
        return Err(Error::Empty("cluster"));
    }
    let mut d_inner = 0.0f64;
    let mut d_outer = f64::INFINITY;
    for (ci, a) in clusters.iter().enumerate() {
        for (i, p) in a.iter().enumerate() {
            for q in &a[i + 1..] {
                d_inner = d_inner.max(population_distance(metric, kernel, p, q)?);
            }
            for b in &clusters[ci + 1..] {
                for q in b {
                    d_outer = d_outer.min(population_distance(metric, kernel, p, q)?);
                }
            }
        }
    }
    Ok(SeparationPair {
        d_inner,
        d_outer,
        metric,
    })
}

/// Chernoff information `max_t -ln ∫ p^{1-t} q^t` in nats, for isotropic
/// Gaussians.
pub fn chernoff_information(p: &DistributionModel, q: &DistributionModel) -> Result<f64> {
    let f = chernoff_exponent_fn(p, q)?;
    if p == q {
        return Ok(0.0);
    }
    let (_, c) = golden_max(f, 0.0, 1.0, 1e-8);
    Ok(c.max(0.0))
}

/// `t -> -ln ∫ p^{1-t} q^t` for isotropic Gaussians.
fn chernoff_exponent_fn(
    p: &DistributionModel,
    q: &DistributionModel,
) -> Result<impl Fn(f64) -> f64> {
    p.validate()?;
    q.validate()?;
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let (p, q) = (p.as_gaussian(), q.as_gaussian());
    let d = p.mean.len() as f64;
    let sq: f64 = p
        .mean
        .iter()
        .zip(&q.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let (v1, v2) = (p.variance, q.variance);
    Ok(move |t: f64| {
        let vt = (1.0 - t) * v1 + t * v2;
        t * (1.0 - t) * sq / (2.0 * vt) + 0.5 * d * (vt.ln() - (1.0 - t) * v1.ln() - t * v2.ln())
    })
}

fn require_models(models: &[DistributionModel]) -> Result<()> {
    if models.len() < 2 {
        return Err(Error::TooFew {
            what: "hypotheses",
            required: 2,
            found: models.len(),
        });
    }
    Ok(())
}

/// Parametric achievable rate, `log2(e) * min_{i<j} C(p_i, p_j)` bits/sample.
pub fn rate_parametric(models: &[DistributionModel]) -> Result<f64> {
    require_models(models)?;
    let mut min = f64::INFINITY;
    for (i, p) in models.iter().enumerate() {
        for q in &models[i + 1..] {
            min = min.min(chernoff_information(p, q)?);
        }
    }
    Ok(LOG2_E * min)
}

fn check_rate_args(sep: &SeparationPair, metric: Metric, length_ratio: f64) -> Result<()> {
    if sep.metric != metric {
        return Err(Error::InvalidArgument(format!(
            "separation computed for {:?}, expected {metric:?}",
            sep.metric
        )));
    }
    if !(0.0..=1.0).contains(&length_ratio) {
        return Err(Error::InvalidArgument(format!(
            "length ratio must lie in [0, 1], got {length_ratio}"
        )));
    }
    Ok(())
}

/// `min(1, γ_min / n)`.
pub fn length_ratio(gamma_min: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    (gamma_min as f64 / n as f64).min(1.0)
}

/// MMD achievable rate `ratio * log2(e) / (96 K²) * (D_O - D_I)²`.
pub fn rate_mmd(sep: &SeparationPair, kernel_bound: f64, length_ratio: f64) -> Result<f64> {
    check_rate_args(sep, Metric::Mmd2, length_ratio)?;
    if kernel_bound.is_nan() || kernel_bound <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "kernel bound must be positive, got {kernel_bound}"
        )));
    }
    let g = sep.gap();
    Ok(length_ratio * LOG2_E / (96.0 * kernel_bound * kernel_bound) * g * g)
}

/// KS achievable rate `ratio * log2(e) / 8 * (D_O - D_I)²`.
pub fn rate_ks(sep: &SeparationPair, length_ratio: f64) -> Result<f64> {
    check_rate_args(sep, Metric::Ks, length_ratio)?;
    let g = sep.gap();
    Ok(length_ratio * LOG2_E / 8.0 * g * g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundTest {
    Mmd { kernel_bound: f64 },
    Ks,
}

/// Upper bound on the average error probability at test length `n` with
/// `M = 2^{nD}` hypotheses, clamped to 1:
///
/// ```text
/// MMD: 2^{nD}     exp(-n' (D_O - D_I)² / (96 K²))
/// KS:  6 · 2^{nD} exp(-n' (D_O - D_I)² / 8)
/// ```
///
/// with `n' = min(n, γ_min)` when the shortest training length is given.
pub fn error_bound(
    test: BoundTest,
    n: usize,
    rate_bits: f64,
    sep: &SeparationPair,
    gamma_min: Option<usize>,
) -> Result<f64> {
    let n_eff = gamma_min.map_or(n, |g| g.min(n)) as f64;
    let g = sep.gap();
    let (prefactor, exponent_nats) = match test {
        BoundTest::Mmd { kernel_bound } => {
            check_rate_args(sep, Metric::Mmd2, 1.0)?;
            if kernel_bound.is_nan() || kernel_bound <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "kernel bound must be positive, got {kernel_bound}"
                )));
            }
            (1.0f64, n_eff * g * g / (96.0 * kernel_bound * kernel_bound))
        }
        BoundTest::Ks => {
            check_rate_args(sep, Metric::Ks, 1.0)?;
            (6.0, n_eff * g * g / 8.0)
        }
    };
    let log2_bound = prefactor.log2() + n as f64 * rate_bits - exponent_nats * LOG2_E;
    Ok(log2_bound.exp2().min(1.0))
}

/// KL divergence `D(p || q)` in nats for isotropic Gaussians.
pub fn kl_gaussian(p: &DistributionModel, q: &DistributionModel) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let (p, q) = (p.as_gaussian(), q.as_gaussian());
    let d = p.mean.len() as f64;
    let r = p.variance / q.variance;
    let sq: f64 = p
        .mean
        .iter()
        .zip(&q.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(0.5 * d * (r - 1.0 - r.ln()) + sq / (2.0 * q.variance))
}

fn mean_pairwise<T>(items: &[T], kl: impl Fn(&T, &T) -> Result<f64>) -> Result<f64> {
    let mut sum = 0.0;
    for (i, a) in items.iter().enumerate() {
        for (j, b) in items.iter().enumerate() {
            if i != j {
                sum += kl(a, b)?;
            }
        }
    }
    // diagonal pairs are included in the average and contribute zero
    Ok(LOG2_E * sum / (items.len() * items.len()) as f64)
}

/// Capacity ceiling `E_{h,h'} D(p_h || p_h')` in bits/sample over independent
/// uniform hypothesis pairs, from known models.
pub fn fano_ceiling_models(models: &[DistributionModel]) -> Result<f64> {
    require_models(models)?;
    mean_pairwise(models, kl_gaussian)
}

/// KL estimate `D(p || q)` in nats from scalar samples using an equal-mass
/// partition of `q`'s samples into `ceil(sqrt(m))` cells.
///
/// Cell edges are order statistics of `q`; a cell holding no `q` sample
/// (possible only with ties) is counted as holding one. Negative estimates
/// are clamped to zero.
pub fn kl_partition_estimate(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Empty("KL estimator sample"));
    }
    let mut qs = q.to_vec();
    qs.sort_by(f64::total_cmp);
    let m = qs.len();
    let cells = (m as f64).sqrt().ceil() as usize;
    // upper edge of cell i is the (i+1)·m/cells-th order statistic
    let edges: Vec<f64> = (1..cells)
        .map(|i| qs[(i * m).div_ceil(cells) - 1])
        .collect();
    let cell_of = |v: f64| edges.partition_point(|&e| e < v);
    let mut p_counts = vec![0usize; cells];
    let mut q_counts = vec![0usize; cells];
    for &v in p {
        p_counts[cell_of(v)] += 1;
    }
    for &v in &qs {
        q_counts[cell_of(v)] += 1;
    }
    let (n, m) = (p.len() as f64, m as f64);
    let est: f64 = p_counts
        .iter()
        .zip(&q_counts)
        .filter(|(&pc, _)| pc > 0)
        .map(|(&pc, &qc)| {
            let pm = pc as f64 / n;
            let qm = qc.max(1) as f64 / m;
            pm * (pm / qm).ln()
        })
        .sum();
    Ok(est.max(0.0))
}

/// Capacity ceiling estimated from training data: each cluster's training
/// sequences are pooled into one scalar sample per hypothesis.
pub fn fano_ceiling_samples(train: &TrainingSet) -> Result<f64> {
    if train.num_clusters() < 2 {
        return Err(Error::TooFew {
            what: "hypotheses",
            required: 2,
            found: train.num_clusters(),
        });
    }
    let pooled = train
        .clusters()
        .iter()
        .map(|c| {
            let mut v = Vec::new();
            for s in c {
                v.extend_from_slice(s.scalars()?);
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    mean_pairwise(&pooled, |a, b| kl_partition_estimate(a, b))
}

/// Everything the theory says about one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub separation_mmd: SeparationPair,
    /// `None` for vector-valued data, where KS is undefined.
    pub separation_ks: Option<SeparationPair>,
    /// Minimum pairwise Chernoff information in nats; `None` for composite
    /// clusters, where the parametric baseline is not defined.
    pub chernoff_min: Option<f64>,
    pub rate_mmd: f64,
    pub rate_ks: Option<f64>,
    pub rate_parametric: Option<f64>,
    /// Known-model KL ceiling; `None` for composite clusters.
    pub fano_ceiling: Option<f64>,
    pub kernel_bound: f64,
    pub length_ratio: f64,
}

impl BoundsReport {
    pub fn compute(
        clusters: &[Vec<DistributionModel>],
        kernel: &Kernel,
        length_ratio: f64,
    ) -> Result<Self> {
        let separation_mmd = cluster_separations(clusters, Metric::Mmd2, kernel)?;
        let scalar = clusters.iter().flatten().all(|m| m.dim() == 1);
        let separation_ks = if scalar {
            Some(cluster_separations(clusters, Metric::Ks, kernel)?)
        } else {
            None
        };
        let kernel_bound = kernel.bound();
        let rate_mmd = rate_mmd(&separation_mmd, kernel_bound, length_ratio)?;
        let rate_ks = separation_ks
            .as_ref()
            .map(|s| rate_ks(s, length_ratio))
            .transpose()?;
        let flat: Option<Vec<DistributionModel>> = clusters
            .iter()
            .map(|c| (c.len() == 1).then(|| c[0].clone()))
            .collect();
        let (chernoff_min, rate_parametric, fano_ceiling) = match flat {
            Some(models) => {
                let rp = rate_parametric(&models)?;
                (
                    Some(rp / LOG2_E),
                    Some(rp),
                    Some(fano_ceiling_models(&models)?),
                )
            }
            None => (None, None, None),
        };
        Ok(Self {
            separation_mmd,
            separation_ks,
            chernoff_min,
            rate_mmd,
            rate_ks,
            rate_parametric,
            fano_ceiling,
            kernel_bound,
            length_ratio,
        })
    }
}
