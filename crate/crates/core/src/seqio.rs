//! Numeric-text sequence files.
//!
//! One observation per line. Scalars are written bare; vectors as
//! comma-separated coordinates. Blank lines and lines starting with `#` are
//! skipped.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classify::TrainingSet;
use crate::sample::SampleSequence;

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SeqError {
    /// I/O failures map to a different exit status than bad data.
    pub fn is_io(&self) -> bool {
        matches!(self, SeqError::Io { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SeqError + '_ {
    move |source| SeqError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses a sequence from text. `origin` is used in error messages.
pub fn parse_sequence(text: &str, origin: &str) -> Result<SampleSequence, SeqError> {
    let mut data = Vec::new();
    let mut dim = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |message: String| SeqError::Malformed {
            path: origin.to_string(),
            line: idx + 1,
            message,
        };
        let mut count = 0;
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| malformed(format!("not a number: `{field}`")))?;
            if !v.is_finite() {
                return Err(malformed(format!("non-finite value `{field}`")));
            }
            data.push(v);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(malformed(format!(
                    "dimension mismatch: expected {d}, got {count}"
                )))
            }
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| SeqError::Invalid {
        path: origin.to_string(),
        message: "no observations".into(),
    })?;
    SampleSequence::from_flat(data, dim).map_err(|e| SeqError::Invalid {
        path: origin.to_string(),
        message: e.to_string(),
    })
}

pub fn read_sequence(path: &Path) -> Result<SampleSequence, SeqError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_sequence(&text, &path.display().to_string())
}

fn visible_entries(dir: &Path) -> Result<Vec<PathBuf>, SeqError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

/// A training set read from disk with the names of its clusters and members.
#[derive(Debug)]
pub struct LoadedTraining {
    pub train: TrainingSet,
    /// `labels[c] = (cluster name, member names)`
    pub labels: Vec<(String, Vec<String>)>,
}

/// Loads training data from `dir`, sorted by name. Each subdirectory is one
/// cluster whose files are its members; each plain file is a singleton
/// cluster.
pub fn load_training_dir(dir: &Path) -> Result<LoadedTraining, SeqError> {
    let name = |p: &Path| {
        p.file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned()
    };
    let mut clusters = Vec::new();
    let mut labels = Vec::new();
    for path in visible_entries(dir)? {
        if path.is_dir() {
            let files: Vec<_> = visible_entries(&path)?
                .into_iter()
                .filter(|p| p.is_file())
                .collect();
            if files.is_empty() {
                return Err(SeqError::Invalid {
                    path: path.display().to_string(),
                    message: "cluster directory has no sequence files".into(),
                });
            }
            let seqs = files
                .iter()
                .map(|f| read_sequence(f))
                .collect::<Result<Vec<_>, _>>()?;
            labels.push((name(&path), files.iter().map(|f| name(f)).collect()));
            clusters.push(seqs);
        } else {
            clusters.push(vec![read_sequence(&path)?]);
            labels.push((name(&path), vec![name(&path)]));
        }
    }
    if clusters.is_empty() {
        return Err(SeqError::Invalid {
            path: dir.display().to_string(),
            message: "no training sequences".into(),
        });
    }
    let train = TrainingSet::new(clusters).map_err(|e| SeqError::Invalid {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(LoadedTraining { train, labels })
}
