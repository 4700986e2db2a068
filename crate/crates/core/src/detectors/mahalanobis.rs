use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::pooling::Embeddings;
use crate::{CoreError, Result};

/// Ridge is `RIDGE_SCALE * trace(cov) / d`, or `RIDGE_SCALE` when the trace is 0.
pub const RIDGE_SCALE: f64 = 1e-6;

/// Ridge added to the shared covariance before inversion.
pub fn ridge_for_trace(trace: f64, dim: usize) -> f64 {
    if trace > 0.0 {
        RIDGE_SCALE * trace / dim as f64
    } else {
        RIDGE_SCALE
    }
}

/// Class-conditional Gaussians with one shared covariance.
///
/// Means and the shared covariance are the maximum-likelihood estimates
/// (covariance divisor `N`, pooled over classes). The stored precision is
/// `(cov + ridge * I)^-1`, computed through a symmetric eigendecomposition
/// so that it is symmetric positive definite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDiscriminantModel {
    dim: usize,
    class_means: Vec<f64>,
    precision: Vec<f64>,
    class_counts: Vec<u64>,
    total_count: u64,
    ridge: f64,
}

/// Per-class means and the pooled within-class covariance, before regularization.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStatistics {
    pub dim: usize,
    /// `C x d`, row-major. Rows of absent classes are zero.
    pub means: Vec<f64>,
    pub counts: Vec<u64>,
    /// `d x d`, row-major, divisor `N`.
    pub covariance: Vec<f64>,
}

impl ClassStatistics {
    pub fn compute(embeddings: &Embeddings, labels: &[usize]) -> Result<Self> {
        let n = embeddings.rows();
        let d = embeddings.dim();
        if labels.len() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                actual: labels.len(),
            });
        }
        if n < 2 {
            return Err(CoreError::TooFewSamples {
                required: 2,
                actual: n,
            });
        }
        if embeddings.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("embeddings"));
        }
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);

        let mut counts = vec![0u64; num_classes];
        let mut means = vec![0.0; num_classes * d];
        for (row, &c) in embeddings.iter_rows().zip(labels) {
            counts[c] += 1;
            for (m, v) in means[c * d..(c + 1) * d].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let count = count as f64;
                means[c * d..(c + 1) * d]
                    .iter_mut()
                    .for_each(|m| *m /= count);
            }
        }

        let mut covariance = vec![0.0; d * d];
        let mut centered = vec![0.0; d];
        for (row, &c) in embeddings.iter_rows().zip(labels) {
            let mean = &means[c * d..(c + 1) * d];
            for ((z, v), m) in centered.iter_mut().zip(row).zip(mean) {
                *z = v - m;
            }
            for i in 0..d {
                let zi = centered[i];
                let cov_row = &mut covariance[i * d..(i + 1) * d];
                for j in i..d {
                    cov_row[j] += zi * centered[j];
                }
            }
        }
        let total = n as f64;
        for i in 0..d {
            for j in i..d {
                let v = covariance[i * d + j] / total;
                covariance[i * d + j] = v;
                covariance[j * d + i] = v;
            }
        }
        Ok(Self {
            dim: d,
            means,
            counts,
            covariance,
        })
    }
}

impl GaussianDiscriminantModel {
    /// Fits class means and the regularized shared precision.
    ///
    /// `labels[k]` is the class of row `k`; the class count is `max(label) + 1`
    /// and classes without samples are ignored at scoring time.
    pub fn fit(embeddings: &Embeddings, labels: &[usize]) -> Result<Self> {
        let stats = ClassStatistics::compute(embeddings, labels)?;
        let d = stats.dim;
        let trace: f64 = (0..d).map(|i| stats.covariance[i * d + i]).sum();
        let ridge = ridge_for_trace(trace, d);

        let mut reg = DMatrix::from_row_slice(d, d, &stats.covariance);
        for i in 0..d {
            reg[(i, i)] += ridge;
        }
        let eigen = SymmetricEigen::new(reg);
        let inv_vals: Vec<f64> = eigen
            .eigenvalues
            .iter()
            .map(|&l| 1.0 / l.max(ridge))
            .collect();
        let vecs = &eigen.eigenvectors;
        let mut precision = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for (k, w) in inv_vals.iter().enumerate() {
                    acc += vecs[(i, k)] * w * vecs[(j, k)];
                }
                precision[i * d + j] = acc;
                precision[j * d + i] = acc;
            }
        }

        Ok(Self {
            dim: d,
            class_means: stats.means,
            precision,
            total_count: stats.counts.iter().sum(),
            class_counts: stats.counts,
            ridge,
        })
    }

    /// Reassembles a model from stored parts, re-checking its invariants.
    pub fn from_parts(
        dim: usize,
        class_means: Vec<f64>,
        precision: Vec<f64>,
        class_counts: Vec<u64>,
        ridge: f64,
    ) -> Result<Self> {
        let c = class_counts.len();
        if dim == 0 || class_means.len() != c * dim {
            return Err(CoreError::DimensionMismatch {
                expected: c * dim,
                actual: class_means.len(),
            });
        }
        if precision.len() != dim * dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim * dim,
                actual: precision.len(),
            });
        }
        if class_means.iter().chain(&precision).any(|v| !v.is_finite()) || !ridge.is_finite() {
            return Err(CoreError::NonFinite("model parameters"));
        }
        if ridge < 0.0 {
            return Err(model_invariant("ridge", format!("{ridge} < 0")));
        }
        if !class_counts.iter().any(|&n| n > 0) {
            return Err(model_invariant(
                "class_counts",
                "no class has samples".into(),
            ));
        }
        let scale = precision.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in i + 1..dim {
                let (a, b) = (precision[i * dim + j], precision[j * dim + i]);
                if (a - b).abs() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
                    return Err(model_invariant(
                        "precision",
                        format!("asymmetric at ({i}, {j})"),
                    ));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, &precision)).eigenvalues;
        let max_eig = eig.iter().fold(f64::MIN, |m, &v| m.max(v));
        if eig.iter().any(|&v| v < -1e-9 * max_eig.abs()) {
            return Err(model_invariant(
                "precision",
                "not positive semi-definite".into(),
            ));
        }
        Ok(Self {
            dim,
            class_means,
            precision,
            total_count: class_counts.iter().sum(),
            class_counts,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn class_mean(&self, class: usize) -> &[f64] {
        &self.class_means[class * self.dim..(class + 1) * self.dim]
    }

    /// All class means, `C x d` row-major.
    pub fn class_means(&self) -> &[f64] {
        &self.class_means
    }

    /// `d x d` row-major.
    pub fn precision(&self) -> &[f64] {
        &self.precision
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Squared Mahalanobis distance to the mean of `class`.
    pub fn squared_distance(&self, embedding: &[f64], class: usize) -> f64 {
        let d = self.dim;
        let mean = self.class_mean(class);
        let mut z = vec![0.0; d];
        for ((z, x), m) in z.iter_mut().zip(embedding).zip(mean) {
            *z = x - m;
        }
        let mut q = 0.0;
        for (i, zi) in z.iter().enumerate() {
            let row = &self.precision[i * d..(i + 1) * d];
            let pz: f64 = row.iter().zip(&z).map(|(p, zj)| p * zj).sum();
            q += zi * pz;
        }
        q.max(0.0)
    }

    /// `max_c -(x - mu_c)^T P (x - mu_c)` over classes with samples. Always `<= 0`.
    pub fn score(&self, embedding: &[f64]) -> Result<f64> {
        if embedding.len() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                actual: embedding.len(),
            });
        }
        if embedding.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("embedding"));
        }
        Ok(self
            .present_classes()
            .map(|c| -self.squared_distance(embedding, c))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Class with the highest score (nearest mean).
    pub fn predict(&self, embedding: &[f64]) -> Result<usize> {
        self.score(embedding)?;
        let mut best = (usize::MAX, f64::INFINITY);
        for c in self.present_classes() {
            let q = self.squared_distance(embedding, c);
            if q < best.1 {
                best = (c, q);
            }
        }
        Ok(best.0)
    }

    pub fn score_all(&self, embeddings: &Embeddings) -> Result<Vec<f64>> {
        embeddings.iter_rows().map(|r| self.score(r)).collect()
    }

    fn present_classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.class_counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(c, _)| c)
    }
}

fn model_invariant(field: &'static str, detail: alloc::string::String) -> CoreError {
    CoreError::Invariant {
        record: None,
        field,
        detail,
    }
}
