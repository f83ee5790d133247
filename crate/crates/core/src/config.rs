//! Declarative experiment configuration.
//!
//! Configs are TOML documents with `schema_version = 1`; see
//! `docs/formats.md` for the full schema. The bundled presets live in
//! `presets/` and are embedded into the binary.

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::distances::Kernel;
use crate::sample::DistributionModel;
use crate::simulate::{ExperimentConfig, TestKind, TestPrior, TrainLengths};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MeanSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberSpec {
    mean: MeanSpec,
    variance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterSpec {
    #[serde(default)]
    #[allow(dead_code)]
    label: Option<String>,
    members: Vec<MemberSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GridSpec {
    List(Vec<i64>),
    Range { start: i64, stop: i64, step: i64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSpec {
    family: String,
    #[serde(default)]
    bandwidth: Option<f64>,
    #[serde(default)]
    level: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainLengthSpec {
    rule: String,
    #[serde(default)]
    length: Option<i64>,
    #[serde(default)]
    factor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    seed: u64,
    #[serde(default)]
    trials: Option<i64>,
    tests: Vec<String>,
    n_grid: GridSpec,
    #[serde(default)]
    kernel: Option<KernelSpec>,
    #[serde(default)]
    train_lengths: Option<TrainLengthSpec>,
    #[serde(default)]
    test_prior: Option<String>,
    #[serde(default)]
    clusters: Vec<ClusterSpec>,
}

/// Desk-scale Monte Carlo run count when a config does not set `trials`.
pub const DEFAULT_TRIALS: usize = 10_000;

/// Parses and validates a TOML experiment config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(invalid(
            "schema_version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                raw.schema_version
            ),
        ));
    }
    let trials = match raw.trials {
        None => DEFAULT_TRIALS,
        Some(t) if t >= 1 => t as usize,
        Some(t) => return Err(invalid("trials", format!("need trials ≥ 1, got {t}"))),
    };
    let tests = raw
        .tests
        .iter()
        .map(|t| {
            t.parse::<TestKind>()
                .map_err(|e| invalid("tests", e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n_grid: Vec<i64> = match raw.n_grid {
        GridSpec::List(v) => v,
        GridSpec::Range { start, stop, step } => {
            if step <= 0 {
                return Err(invalid("n_grid.step", "must be positive"));
            }
            (start..=stop).step_by(step as usize).collect()
        }
    };
    if let Some(bad) = n_grid.iter().find(|&&n| n <= 0) {
        return Err(invalid(
            "n_grid",
            format!("sample sizes must be positive, got {bad}"),
        ));
    }
    let n_grid = n_grid.into_iter().map(|n| n as usize).collect();

    let kernel = match raw.kernel {
        None => Kernel::default(),
        Some(k) => match k.family.as_str() {
            "gaussian-rbf" | "gaussian" => Kernel::GaussianRbf {
                bandwidth: k.bandwidth.unwrap_or(1.0),
            },
            "constant" => Kernel::Constant {
                level: k
                    .level
                    .ok_or_else(|| invalid("kernel.level", "required for constant kernel"))?,
            },
            other => {
                return Err(invalid(
                    "kernel.family",
                    format!("unknown family `{other}`"),
                ))
            }
        },
    };

    let train_lengths = match raw.train_lengths {
        None => TrainLengths::Equal,
        Some(t) => match t.rule.as_str() {
            "equal" => TrainLengths::Equal,
            "fixed" => match t.length {
                Some(l) if l > 0 => TrainLengths::Fixed { length: l as usize },
                _ => return Err(invalid("train_lengths.length", "positive integer required")),
            },
            "proportional" => TrainLengths::Proportional {
                factor: t
                    .factor
                    .ok_or_else(|| invalid("train_lengths.factor", "required"))?,
            },
            other => {
                return Err(invalid(
                    "train_lengths.rule",
                    format!("unknown rule `{other}`"),
                ))
            }
        },
    };

    let test_prior = match raw.test_prior.as_deref() {
        None | Some("member-uniform") => TestPrior::MemberUniform,
        Some("cluster-uniform") => TestPrior::ClusterUniform,
        Some(other) => return Err(invalid("test_prior", format!("unknown prior `{other}`"))),
    };

    let clusters = raw
        .clusters
        .into_iter()
        .enumerate()
        .map(|(ci, c)| {
            c.members
                .into_iter()
                .enumerate()
                .map(|(mi, m)| {
                    let mean = match m.mean {
                        MeanSpec::Scalar(v) => vec![v],
                        MeanSpec::Vector(v) => v,
                    };
                    DistributionModel::gaussian(mean, m.variance).map_err(|e| {
                        invalid(format!("clusters[{ci}].members[{mi}]"), e.to_string())
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let cfg = ExperimentConfig {
        name: raw.name.unwrap_or_else(|| "experiment".into()),
        clusters,
        n_grid,
        trials,
        tests,
        kernel,
        seed: raw.seed,
        train_lengths,
        test_prior,
    };
    cfg.validate().map_err(|(field, msg)| invalid(field, msg))?;
    Ok(cfg)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModels {
    schema_version: u32,
    models: Vec<MemberSpec>,
}

/// Parses a model spec: one `[[models]]` table per cluster, in the same
/// order as the training clusters.
pub fn parse_models(text: &str) -> Result<Vec<DistributionModel>, ConfigError> {
    let raw: RawModels = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(invalid(
            "schema_version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                raw.schema_version
            ),
        ));
    }
    if raw.models.is_empty() {
        return Err(invalid("models", "need at least one model"));
    }
    raw.models
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let mean = match m.mean {
                MeanSpec::Scalar(v) => vec![v],
                MeanSpec::Vector(v) => v,
            };
            DistributionModel::gaussian(mean, m.variance)
                .map_err(|e| invalid(format!("models[{i}]"), e.to_string()))
        })
        .collect()
}

/// SHA-256 of the resolved config's canonical JSON form. Independent of key
/// order, comments and whitespace in the source document.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serialises");
    hex::encode(Sha256::digest(json.as_bytes()))
}

pub const PRESETS: &[(&str, &str)] = &[
    ("figure2", include_str!("../presets/figure2.toml")),
    ("figure3", include_str!("../presets/figure3.toml")),
    ("table1", include_str!("../presets/table1.toml")),
    (
        "figure5-composite-means",
        include_str!("../presets/figure5-composite-means.toml"),
    ),
    (
        "figure6-composite-variances",
        include_str!("../presets/figure6-composite-variances.toml"),
    ),
    ("m10", include_str!("../presets/m10.toml")),
    ("m15", include_str!("../presets/m15.toml")),
];

pub fn preset_source(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| *src)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config(preset_source(name)?)
}
