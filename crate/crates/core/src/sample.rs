//! Observation sequences and the parametric models that generate them.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered list of `d`-dimensional observations stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSequence {
    data: Vec<f64>,
    dim: usize,
}

impl SampleSequence {
    /// Builds a sequence from a flat row-major buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::Empty("sample sequence"));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "buffer of {} values is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample sequence"));
        }
        Ok(Self { data, dim })
    }

    pub fn from_scalars(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(values, 1)
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points
            .first()
            .ok_or(Error::Empty("sample sequence"))?
            .as_ref()
            .len();
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(data, dim)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// The raw values when `d = 1`.
    pub fn scalars(&self) -> Result<&[f64]> {
        if self.dim != 1 {
            return Err(Error::NotScalar(self.dim));
        }
        Ok(&self.data)
    }

    /// Applies `f` to every coordinate.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_flat(self.data.iter().map(|&v| f(v)).collect(), self.dim)
    }
}

/// Isotropic Gaussian `N(mean, variance * I_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// A known parametric distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DistributionModel {
    Gaussian(Gaussian),
}

impl DistributionModel {
    pub fn gaussian(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let model = Self::Gaussian(Gaussian { mean, variance });
        model.validate()?;
        Ok(model)
    }

    /// Scalar `N(mean, variance)`.
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Self::gaussian(vec![mean], variance)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian(g) => {
                if g.mean.is_empty() {
                    return Err(Error::Empty("gaussian mean"));
                }
                if g.mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::NonFinite("gaussian mean"));
                }
                if g.variance.is_nan() || g.variance <= 0.0 || !g.variance.is_finite() {
                    return Err(Error::NonPositiveVariance(g.variance));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.mean.len(),
        }
    }

    pub fn as_gaussian(&self) -> &Gaussian {
        match self {
            Self::Gaussian(g) => g,
        }
    }

    /// Log density at `x`, in nats.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            Self::Gaussian(g) => {
                let d = g.mean.len() as f64;
                let sq: f64 = x.iter().zip(&g.mean).map(|(a, m)| (a - m) * (a - m)).sum();
                -0.5 * d * (2.0 * std::f64::consts::PI * g.variance).ln() - sq / (2.0 * g.variance)
            }
        }
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            Self::Gaussian(g) => {
                let sd = g.variance.sqrt();
                for &m in &g.mean {
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(m + sd * z);
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> SampleSequence {
        let mut data = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            self.sample_point(rng, &mut data);
        }
        SampleSequence {
            data,
            dim: self.dim(),
        }
    }
}
