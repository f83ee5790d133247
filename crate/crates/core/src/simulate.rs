//! Seeded Monte Carlo estimation of the average error probability, uniform
//! over hypotheses' generating members, and log-linear exponent regression.
//!
//! Every trial owns its random streams: training data for a member is drawn
//! from a stream keyed by `(seed, n, trial, member content)` and the test
//! sequence from a stream keyed by `(seed, n, trial)`. Results therefore do
//! not depend on worker count, scheduling, or the order clusters are listed
//! in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_ks_prepared, classify_likelihood, classify_mmd, TrainingSet};
use crate::distances::{EmpiricalCdf, Kernel};
use crate::error::{Error, Result};
use crate::numeric::least_squares;
use crate::sample::{DistributionModel, SampleSequence};

/// z for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Likelihood,
    Mmd,
    Ks,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Likelihood => "likelihood",
            TestKind::Mmd => "mmd",
            TestKind::Ks => "ks",
        }
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "likelihood" => Ok(TestKind::Likelihood),
            "mmd" => Ok(TestKind::Mmd),
            "ks" => Ok(TestKind::Ks),
            other => Err(Error::InvalidArgument(format!("unknown test `{other}`"))),
        }
    }
}

/// Training length `γ_m(n)` as a function of the test length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum TrainLengths {
    #[default]
    Equal,
    Fixed {
        length: usize,
    },
    /// `ceil(factor * n)`.
    Proportional {
        factor: f64,
    },
}

impl TrainLengths {
    pub fn length(&self, n: usize) -> usize {
        match *self {
            TrainLengths::Equal => n,
            TrainLengths::Fixed { length } => length,
            TrainLengths::Proportional { factor } => {
                // guard against 0.5 * 10 landing on 5.000000000000001
                let v = factor * n as f64;
                let r = v.round();
                if (v - r).abs() < 1e-9 {
                    r as usize
                } else {
                    v.ceil() as usize
                }
            }
        }
    }
}

/// How the member generating the test sequence is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TestPrior {
    /// Uniform over all `(cluster, member)` pairs.
    #[default]
    MemberUniform,
    /// Uniform over clusters, then uniform over the chosen cluster's members.
    ClusterUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub clusters: Vec<Vec<DistributionModel>>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub tests: Vec<TestKind>,
    pub kernel: Kernel,
    pub seed: u64,
    pub train_lengths: TrainLengths,
    pub test_prior: TestPrior,
}

impl ExperimentConfig {
    /// Checks the structural invariants. Errors name the offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.clusters.len() < 2 {
            return Err((
                "clusters",
                format!("need clusters ≥ 2, got {}", self.clusters.len()),
            ));
        }
        let dim = match self.clusters.iter().flatten().next() {
            Some(m) => m.dim(),
            None => return Err(("clusters", "no members".into())),
        };
        for (i, c) in self.clusters.iter().enumerate() {
            if c.is_empty() {
                return Err(("clusters", format!("cluster {} has no members", i + 1)));
            }
            for m in c {
                m.validate()
                    .map_err(|e| ("clusters", format!("cluster {}: {e}", i + 1)))?;
                if m.dim() != dim {
                    return Err((
                        "clusters",
                        format!("cluster {}: dimension {} != {dim}", i + 1, m.dim()),
                    ));
                }
            }
        }
        if self.n_grid.is_empty() {
            return Err(("n_grid", "must be nonempty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(("n_grid", "must be strictly ascending".into()));
        }
        if self.n_grid[0] == 0 {
            return Err(("n_grid", "sample sizes must be positive".into()));
        }
        if self.trials == 0 {
            return Err(("trials", "need trials ≥ 1".into()));
        }
        if self.tests.is_empty() {
            return Err(("tests", "select at least one test".into()));
        }
        let mut seen = self.tests.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.tests.len() {
            return Err(("tests", "duplicate test".into()));
        }
        self.kernel
            .validate()
            .map_err(|e| ("kernel", e.to_string()))?;
        match self.train_lengths {
            TrainLengths::Proportional { factor } if !(factor > 0.0 && factor.is_finite()) => {
                return Err((
                    "train_lengths",
                    format!("factor must be positive, got {factor}"),
                ))
            }
            TrainLengths::Fixed { length: 0 } => {
                return Err(("train_lengths", "length must be positive".into()))
            }
            _ => {}
        }
        for &t in &self.tests {
            match t {
                TestKind::Ks if dim != 1 => {
                    return Err(("tests", "ks requires scalar data".into()));
                }
                TestKind::Likelihood if self.clusters.iter().any(|c| c.len() != 1) => {
                    return Err((
                        "tests",
                        "likelihood requires exactly one member per cluster".into(),
                    ));
                }
                TestKind::Mmd => {
                    let n0 = self.n_grid[0];
                    if n0 < 2 || self.train_lengths.length(n0) < 2 {
                        return Err(("n_grid", "mmd needs test and training lengths ≥ 2".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn checked(&self) -> Result<()> {
        self.validate()
            .map_err(|(field, msg)| Error::InvalidArgument(format!("{field}: {msg}")))
    }
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_words(words: impl IntoIterator<Item = u64>) -> u64 {
    words
        .into_iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, w| mix64(acc ^ mix64(w)))
}

fn model_key(m: &DistributionModel) -> u64 {
    let g = m.as_gaussian();
    hash_words(
        std::iter::once(g.mean.len() as u64)
            .chain(g.mean.iter().map(|v| v.to_bits()))
            .chain(std::iter::once(g.variance.to_bits())),
    )
}

const TEST_STREAM: u64 = 0x7465_7374;

/// Content-derived keys fixing each member's random stream, plus a canonical
/// layout (clusters and members sorted by key) used for test selection and
/// scoring so that exact score ties resolve independently of config order.
#[derive(Debug, Clone)]
struct StreamPlan {
    /// `member_keys[c][m]`
    member_keys: Vec<Vec<u64>>,
    /// `layout[i] = (cluster, members in canonical order)`
    layout: Vec<(usize, Vec<usize>)>,
    /// Position of each config cluster / member within `layout`.
    cluster_pos: Vec<usize>,
    member_pos: Vec<Vec<usize>>,
}

impl StreamPlan {
    fn new(clusters: &[Vec<DistributionModel>]) -> Self {
        let mut occurrences = std::collections::HashMap::new();
        let member_keys: Vec<Vec<u64>> = clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|m| {
                        let k = model_key(m);
                        let seen = occurrences.entry(k).or_insert(0u64);
                        *seen += 1;
                        hash_words([k, *seen])
                    })
                    .collect()
            })
            .collect();
        let mut keyed: Vec<(u64, usize, Vec<usize>)> = member_keys
            .iter()
            .enumerate()
            .map(|(c, ks)| {
                let mut members: Vec<usize> = (0..ks.len()).collect();
                members.sort_unstable_by_key(|&m| ks[m]);
                (hash_words(members.iter().map(|&m| ks[m])), c, members)
            })
            .collect();
        keyed.sort_unstable_by_key(|(k, _, _)| *k);
        let layout: Vec<(usize, Vec<usize>)> =
            keyed.into_iter().map(|(_, c, ms)| (c, ms)).collect();
        let mut cluster_pos = vec![0; clusters.len()];
        let mut member_pos: Vec<Vec<usize>> = clusters.iter().map(|c| vec![0; c.len()]).collect();
        for (i, (c, ms)) in layout.iter().enumerate() {
            cluster_pos[*c] = i;
            for (j, &m) in ms.iter().enumerate() {
                member_pos[*c][m] = j;
            }
        }
        Self {
            member_keys,
            layout,
            cluster_pos,
            member_pos,
        }
    }

    fn total_members(&self) -> usize {
        self.layout.iter().map(|(_, ms)| ms.len()).sum()
    }
}

/// One Monte Carlo draw: training data, test sequence and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub train: TrainingSet,
    pub test: SampleSequence,
    /// Cluster that generated `test` (zero-based).
    pub truth: usize,
    pub truth_member: usize,
}

fn stream(seed: u64, n: usize, trial: u64, key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash_words([seed, n as u64, trial, key]))
}

/// Draws a trial. With `canonical` the training set and the truth indices
/// follow the plan's canonical layout, otherwise the config order.
fn draw_trial(
    cfg: &ExperimentConfig,
    plan: &StreamPlan,
    n: usize,
    trial: u64,
    canonical: bool,
) -> Result<Trial> {
    let train_len = cfg.train_lengths.length(n);
    let draw_cluster =
        |c: usize, members: &mut dyn Iterator<Item = usize>| -> Vec<SampleSequence> {
            members
                .map(|m| {
                    let key = plan.member_keys[c][m];
                    cfg.clusters[c][m].sample(&mut stream(cfg.seed, n, trial, key), train_len)
                })
                .collect()
        };
    let clusters: Vec<Vec<SampleSequence>> = if canonical {
        plan.layout
            .iter()
            .map(|(c, ms)| draw_cluster(*c, &mut ms.iter().copied()))
            .collect()
    } else {
        (0..cfg.clusters.len())
            .map(|c| draw_cluster(c, &mut (0..cfg.clusters[c].len())))
            .collect()
    };
    let train = TrainingSet::new(clusters)?;

    let mut rng = stream(cfg.seed, n, trial, TEST_STREAM);
    let (pos_c, pos_m) = match cfg.test_prior {
        TestPrior::MemberUniform => {
            let mut i = rng.random_range(0..plan.total_members());
            let mut pos = (0, 0);
            for (ci, (_, ms)) in plan.layout.iter().enumerate() {
                if i < ms.len() {
                    pos = (ci, i);
                    break;
                }
                i -= ms.len();
            }
            pos
        }
        TestPrior::ClusterUniform => {
            let ci = rng.random_range(0..plan.layout.len());
            (ci, rng.random_range(0..plan.layout[ci].1.len()))
        }
    };
    let (c, m) = (plan.layout[pos_c].0, plan.layout[pos_c].1[pos_m]);
    let test = cfg.clusters[c][m].sample(&mut rng, n);
    let (truth, truth_member) = if canonical {
        (plan.cluster_pos[c], plan.member_pos[c][m])
    } else {
        (c, m)
    };
    Ok(Trial {
        train,
        test,
        truth,
        truth_member,
    })
}

/// Deterministically draws trial `trial_index` at test length `n`. Indices
/// follow the config's cluster and member order.
pub fn generate_trial(cfg: &ExperimentConfig, n: usize, trial_index: u64) -> Result<Trial> {
    cfg.checked()?;
    draw_trial(cfg, &StreamPlan::new(&cfg.clusters), n, trial_index, false)
}

/// Classifies one trial with every enabled test; bit `i` of the result is set
/// when `cfg.tests[i]` misclassified.
fn score_trial(
    cfg: &ExperimentConfig,
    models: Option<&[DistributionModel]>,
    t: &Trial,
) -> Result<u32> {
    let mut wrong = 0u32;
    let mut ks_cdfs = None;
    for (i, test) in cfg.tests.iter().enumerate() {
        let verdict = match test {
            TestKind::Mmd => classify_mmd(&t.train, &t.test, &cfg.kernel)?,
            TestKind::Ks => {
                let cdfs = match &ks_cdfs {
                    Some(c) => c,
                    None => ks_cdfs.insert(
                        t.train
                            .iter()
                            .map(|(c, m, x)| Ok((c, m, EmpiricalCdf::from_sequence(x)?)))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                };
                classify_ks_prepared(cdfs, &EmpiricalCdf::from_sequence(&t.test)?)?
            }
            TestKind::Likelihood => classify_likelihood(
                models.expect("likelihood validated against composite clusters"),
                &t.test,
            )?,
        };
        if verdict.cluster != t.truth {
            wrong |= 1 << i;
        }
    }
    Ok(wrong)
}

/// Monte Carlo error estimate at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPoint {
    pub n: usize,
    pub errors: u64,
    pub trials: u64,
    pub estimate: f64,
    /// Wilson 95% half-width.
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ErrorPoint {
    pub fn new(n: usize, errors: u64, trials: u64) -> Self {
        let (lower, upper) = wilson_interval(errors, trials);
        Self {
            n,
            errors,
            trials,
            estimate: errors as f64 / trials as f64,
            half_width: 0.5 * (upper - lower),
            lower,
            upper,
        }
    }
}

/// Wilson score interval at 95%, clamped to `[0, 1]`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lower, upper)
}

/// Least-squares fit of `-log2 P_e(n)` against `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Bits per sample.
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Slope of `-log2 P_e` on `n` over the points with `P_e > 0`.
pub fn fit_exponent(points: &[(usize, f64)]) -> Result<ExponentFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|&(n, p)| (n as f64, -p.log2()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::InsufficientFitPoints(x.len()));
    }
    let fit = least_squares(&x, &y).ok_or(Error::InsufficientFitPoints(x.len()))?;
    Ok(ExponentFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        points: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExponentEstimate {
    Fitted(ExponentFit),
    /// Too few nonzero error estimates to regress. The exponent is at least
    /// `-log2(P̂)/n` at the last nonzero point, or `log2(trials)/n_max` if no
    /// error was observed at all.
    LowerBound {
        exponent: f64,
    },
}

impl ExponentEstimate {
    pub fn exponent(&self) -> f64 {
        match self {
            ExponentEstimate::Fitted(f) => f.exponent,
            ExponentEstimate::LowerBound { exponent } => *exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorCurve {
    pub test: TestKind,
    pub points: Vec<ErrorPoint>,
    pub exponent: ExponentEstimate,
}

impl ErrorCurve {
    pub fn from_points(test: TestKind, points: Vec<ErrorPoint>) -> Self {
        let pairs: Vec<(usize, f64)> = points.iter().map(|p| (p.n, p.estimate)).collect();
        let exponent = match fit_exponent(&pairs) {
            Ok(fit) => ExponentEstimate::Fitted(fit),
            Err(_) => {
                let last = points.iter().rev().find(|p| p.errors > 0);
                let exponent = match (last, points.last()) {
                    (Some(p), _) => -p.estimate.log2() / p.n as f64,
                    (None, Some(p)) => (p.trials as f64).log2() / p.n as f64,
                    (None, None) => 0.0,
                };
                ExponentEstimate::LowerBound { exponent }
            }
        };
        Self {
            test,
            points,
            exponent,
        }
    }

    pub fn at(&self, n: usize) -> Option<&ErrorPoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub curves: Vec<ErrorCurve>,
}

impl ExperimentResult {
    pub fn curve(&self, test: TestKind) -> Option<&ErrorCurve> {
        self.curves.iter().find(|c| c.test == test)
    }
}

/// Runs the experiment on the global rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.checked()?;
    run_inner(cfg)
}

/// Runs the experiment on a dedicated pool of `workers` threads (0 picks the
/// rayon default). Output is identical for every worker count.
pub fn run_experiment_with_workers(
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentResult> {
    cfg.checked()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(cfg))
}

fn run_inner(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let plan = StreamPlan::new(&cfg.clusters);
    // canonical order, matching the training sets scored below
    let models: Option<Vec<DistributionModel>> = plan
        .layout
        .iter()
        .map(|(c, ms)| (ms.len() == 1).then(|| cfg.clusters[*c][ms[0]].clone()))
        .collect();
    let k = cfg.tests.len();
    let mut per_test: Vec<Vec<ErrorPoint>> = vec![Vec::with_capacity(cfg.n_grid.len()); k];
    for &n in &cfg.n_grid {
        let counts = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let t = draw_trial(cfg, &plan, n, trial, true)?;
                let wrong = score_trial(cfg, models.as_deref(), &t)?;
                Ok((0..k)
                    .map(|i| u64::from(wrong >> i & 1))
                    .collect::<Vec<_>>())
            })
            .try_reduce(
                || vec![0u64; k],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )?;
        for (i, errors) in counts.into_iter().enumerate() {
            per_test[i].push(ErrorPoint::new(n, errors, cfg.trials as u64));
        }
    }
    Ok(ExperimentResult {
        name: cfg.name.clone(),
        curves: cfg
            .tests
            .iter()
            .zip(per_test)
            .map(|(&t, pts)| ErrorCurve::from_points(t, pts))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal(m: f64, v: f64) -> DistributionModel {
        DistributionModel::normal(m, v).unwrap()
    }

    fn config(clusters: Vec<Vec<DistributionModel>>, tests: Vec<TestKind>) -> ExperimentConfig {
        ExperimentConfig {
            name: "test".into(),
            clusters,
            n_grid: vec![5, 10, 15],
            trials: 200,
            tests,
            kernel: Kernel::default(),
            seed: 7,
            train_lengths: TrainLengths::Equal,
            test_prior: TestPrior::MemberUniform,
        }
    }

    fn figure2(trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            ..config(
                (-2..=2).map(|m| vec![normal(m as f64, 1.0)]).collect(),
                vec![TestKind::Likelihood, TestKind::Mmd, TestKind::Ks],
            )
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = figure2(10);
        assert_eq!(
            generate_trial(&cfg, 20, 3).unwrap(),
            generate_trial(&cfg, 20, 3).unwrap()
        );
        assert_ne!(
            generate_trial(&cfg, 20, 3).unwrap().test,
            generate_trial(&cfg, 20, 4).unwrap().test
        );
    }

    #[test]
    fn truth_is_uniform_over_singletons() {
        let cfg = figure2(1);
        let plan = StreamPlan::new(&cfg.clusters);
        let trials = 10_000u64;
        let mut counts = [0u64; 5];
        for t in 0..trials {
            counts[draw_trial(&cfg, &plan, 2, t, false).unwrap().truth] += 1;
        }
        let expected = trials as f64 / 5.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square(4) upper 0.001 quantile
        assert!(chi2 < 18.467, "chi2 {chi2} counts {counts:?}");
    }

    #[test]
    fn proportional_training_length() {
        let mut cfg = figure2(1);
        cfg.train_lengths = TrainLengths::Proportional { factor: 0.5 };
        for n in [5, 10, 11, 45] {
            let t = generate_trial(&cfg, n, 0).unwrap();
            assert!(t.train.iter().all(|(_, _, s)| s.len() == n.div_ceil(2)));
            assert_eq!(t.test.len(), n);
        }
        assert_eq!(TrainLengths::Fixed { length: 9 }.length(100), 9);
        assert_eq!(TrainLengths::Proportional { factor: 0.25 }.length(5), 2);
    }

    #[test]
    fn cluster_uniform_prior_weights_clusters_equally() {
        let mut cfg = config(
            vec![
                vec![normal(0.0, 1.0), normal(0.1, 1.0), normal(0.2, 1.0)],
                vec![normal(5.0, 1.0)],
            ],
            vec![TestKind::Ks],
        );
        let plan = StreamPlan::new(&cfg.clusters);
        let count = |cfg: &ExperimentConfig| {
            (0..4000)
                .filter(|&t| draw_trial(cfg, &plan, 3, t, false).unwrap().truth == 1)
                .count() as f64
                / 4000.0
        };
        assert!((count(&cfg) - 0.25).abs() < 0.03);
        cfg.test_prior = TestPrior::ClusterUniform;
        assert!((count(&cfg) - 0.5).abs() < 0.03);
    }

    #[test]
    fn validation_names_fields() {
        let mut cfg = figure2(1);
        cfg.clusters.truncate(1);
        let (field, msg) = cfg.validate().unwrap_err();
        assert_eq!(field, "clusters");
        assert!(msg.contains("clusters ≥ 2"));

        let mut cfg = figure2(1);
        cfg.n_grid = vec![10, 5];
        assert_eq!(cfg.validate().unwrap_err().0, "n_grid");

        let mut cfg = figure2(1);
        cfg.trials = 0;
        assert_eq!(cfg.validate().unwrap_err().0, "trials");

        let mut cfg = figure2(1);
        cfg.clusters[0].push(normal(3.0, 1.0));
        assert_eq!(cfg.validate().unwrap_err().0, "tests");
    }

    #[test]
    fn wilson_behaviour() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert!((hi - lo) / 2.0 > 0.09 && (hi - lo) / 2.0 < 0.1);
        let p = ErrorPoint::new(10, 100, 100);
        assert_eq!(p.upper, 1.0);
        assert!(p.estimate - p.half_width >= 0.0);
    }

    #[test]
    fn exact_log_linear_fit() {
        let pts: Vec<(usize, f64)> = (1..=9)
            .map(|i| (5 * i, 2f64.powf(-0.1 * (5 * i) as f64)))
            .collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.exponent - 0.1).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_log_linear_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<(usize, f64)> = (1..=9)
            .map(|i| {
                let n = 5 * i;
                (n, 2f64.powf(-0.1 * n as f64) * rng.random_range(0.9..1.1))
            })
            .collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.exponent - 0.1).abs() < 0.02, "{}", fit.exponent);
    }

    #[test]
    fn fit_needs_three_positive_points() {
        let pts = [(5, 0.1), (10, 0.0), (15, 0.01), (20, 0.0)];
        assert_eq!(
            fit_exponent(&pts).unwrap_err(),
            Error::InsufficientFitPoints(2)
        );
        let curve = ErrorCurve::from_points(
            TestKind::Mmd,
            vec![ErrorPoint::new(5, 10, 100), ErrorPoint::new(10, 0, 100)],
        );
        let expected = -(0.1f64).log2() / 5.0;
        assert_eq!(
            curve.exponent,
            ExponentEstimate::LowerBound { exponent: expected }
        );
        let clean = ErrorCurve::from_points(TestKind::Mmd, vec![ErrorPoint::new(20, 0, 1024)]);
        assert_eq!(clean.exponent.exponent(), 0.5);
    }

    #[test]
    fn identical_clusters_are_a_coin_flip() {
        let mut cfg = config(
            vec![vec![normal(0.0, 1.0)], vec![normal(0.0, 1.0)]],
            vec![TestKind::Mmd, TestKind::Ks],
        );
        cfg.trials = 2000;
        let r = run_experiment(&cfg).unwrap();
        for c in &r.curves {
            for p in &c.points {
                assert!(
                    (p.estimate - 0.5).abs() <= 2.0 * p.half_width,
                    "{:?} {p:?}",
                    c.test
                );
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = figure2(300);
        let a = run_experiment_with_workers(&cfg, 1).unwrap();
        let b = run_experiment_with_workers(&cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cluster_order_does_not_change_results() {
        let cfg = ExperimentConfig {
            tests: vec![TestKind::Mmd, TestKind::Ks],
            clusters: vec![
                vec![normal(-1.0, 1.0), normal(-0.9, 1.0)],
                vec![normal(0.0, 1.0), normal(0.1, 1.0)],
                vec![normal(1.0, 1.0), normal(1.1, 1.0)],
            ],
            ..figure2(300)
        };
        let mut swapped = cfg.clone();
        swapped.clusters.reverse();
        swapped.clusters[1].reverse();
        let (a, b) = (
            run_experiment(&cfg).unwrap(),
            run_experiment(&swapped).unwrap(),
        );
        for (ca, cb) in a.curves.iter().zip(&b.curves) {
            let ea: Vec<_> = ca.points.iter().map(|p| p.errors).collect();
            let eb: Vec<_> = cb.points.iter().map(|p| p.errors).collect();
            assert_eq!(ea, eb, "{}", ca.test);
        }
    }

    #[test]
    fn likelihood_beats_chance_on_figure2() {
        let r = run_experiment(&figure2(500)).unwrap();
        for c in &r.curves {
            let last = c.points.last().unwrap();
            assert!(last.estimate < 0.8, "{} {last:?}", c.test);
        }
    }
}
