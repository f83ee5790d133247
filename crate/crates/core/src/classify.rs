//! Decision rules over composite training sets.
//!
//! Each hypothesis (cluster) holds one training sequence per member
//! distribution. The MMD and KS rules pick the training sequence closest to
//! the test sequence and report its cluster; the likelihood rule is the
//! parametric baseline over known, distinct models.
//!
//! Indices in [`Verdict`] are zero-based. Ties go to the smallest
//! `(cluster, member)` pair.

use crate::distances::{cross_mean, within_mean, EmpiricalCdf, Kernel};
use crate::error::{Error, Result};
use crate::sample::{DistributionModel, SampleSequence};

/// Training sequences grouped by hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    clusters: Vec<Vec<SampleSequence>>,
    dim: usize,
}

impl TrainingSet {
    /// Builds a training set. A single cluster is accepted so that the
    /// classifiers degrade to a constant verdict; experiment configs enforce
    /// at least two.
    pub fn new(clusters: Vec<Vec<SampleSequence>>) -> Result<Self> {
        let first = clusters
            .first()
            .and_then(|c| c.first())
            .ok_or(Error::Empty("training set"))?;
        let dim = first.dim();
        for cluster in &clusters {
            if cluster.is_empty() {
                return Err(Error::Empty("training cluster"));
            }
            for s in cluster {
                if s.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: s.dim(),
                    });
                }
            }
        }
        Ok(Self { clusters, dim })
    }

    pub fn clusters(&self) -> &[Vec<SampleSequence>] {
        &self.clusters
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(cluster, member, sequence)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &SampleSequence)> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(c, ms)| ms.iter().enumerate().map(move |(m, s)| (c, m, s)))
    }

    /// Shortest training sequence length.
    pub fn min_len(&self) -> usize {
        self.iter().map(|(_, _, s)| s.len()).min().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub cluster: usize,
    pub member: usize,
    /// Minimising distance (MMD, KS) or maximising log-likelihood.
    pub score: f64,
}

fn check_dim(train: &TrainingSet, y: &SampleSequence) -> Result<()> {
    if y.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: y.dim(),
        });
    }
    Ok(())
}

fn argmin<I>(scores: I) -> Result<Verdict>
where
    I: IntoIterator<Item = Result<(usize, usize, f64)>>,
{
    let mut best: Option<Verdict> = None;
    for item in scores {
        let (cluster, member, score) = item?;
        if best.is_none_or(|b| score < b.score) {
            best = Some(Verdict {
                cluster,
                member,
                score,
            });
        }
    }
    best.ok_or(Error::Empty("training set"))
}

/// Nearest training sequence under the unbiased MMD² estimate.
pub fn classify_mmd(train: &TrainingSet, y: &SampleSequence, k: &Kernel) -> Result<Verdict> {
    check_dim(train, y)?;
    let wy = within_mean(k, y)?;
    argmin(train.iter().map(|(c, m, x)| {
        let score = within_mean(k, x)? + wy - 2.0 * cross_mean(k, x, y)?;
        Ok((c, m, score))
    }))
}

/// Nearest training sequence under the two-sample KS statistic.
pub fn classify_ks(train: &TrainingSet, y: &SampleSequence) -> Result<Verdict> {
    check_dim(train, y)?;
    let fy = EmpiricalCdf::from_sequence(y)?;
    argmin(
        train
            .iter()
            .map(|(c, m, x)| Ok((c, m, EmpiricalCdf::from_sequence(x)?.ks_distance(&fy)))),
    )
}

/// KS rule with pre-built empirical CDFs, one per training sequence in
/// [`TrainingSet::iter`] order.
pub(crate) fn classify_ks_prepared(
    cdfs: &[(usize, usize, EmpiricalCdf)],
    fy: &EmpiricalCdf,
) -> Result<Verdict> {
    argmin(cdfs.iter().map(|(c, m, f)| Ok((*c, *m, f.ks_distance(fy)))))
}

/// Maximum-likelihood choice among known models. `member` is always 0.
pub fn classify_likelihood(models: &[DistributionModel], y: &SampleSequence) -> Result<Verdict> {
    if models.is_empty() {
        return Err(Error::Empty("model list"));
    }
    let mut best: Option<Verdict> = None;
    for (i, model) in models.iter().enumerate() {
        model.validate()?;
        if model.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: y.dim(),
            });
        }
        let ll: f64 = y.points().map(|p| model.log_density(p)).sum();
        if best.is_none_or(|b| ll > b.score) {
            best = Some(Verdict {
                cluster: i,
                member: 0,
                score: ll,
            });
        }
    }
    Ok(best.expect("non-empty model list"))
}
