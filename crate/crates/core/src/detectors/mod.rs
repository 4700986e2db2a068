//! Confidence scorers. Every detector returns scores where higher means
//! more in-distribution.

mod ensemble;
mod fitted;
mod lof;
mod logits;
mod mahalanobis;

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

pub use ensemble::{fit_ensemble, EnsembleModel};
pub use fitted::FittedDetector;
pub use lof::{effective_k, LofModel, DEFAULT_LOF_K, LRD_EPSILON};
pub use logits::{score_energy, score_msp};
pub use mahalanobis::{ridge_for_trace, ClassStatistics, GaussianDiscriminantModel, RIDGE_SCALE};

use crate::{CoreError, Result};

/// Detector choice plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorSpec {
    Mahalanobis,
    Msp,
    Energy {
        temperature: f64,
    },
    /// `k = None` means the default neighborhood size, clamped to the training size.
    Lof {
        k: Option<usize>,
    },
    Ensemble,
}

impl DetectorSpec {
    /// Parses a detector name with default hyperparameters.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "mahalanobis" => Ok(Self::Mahalanobis),
            "msp" => Ok(Self::Msp),
            "energy" => Ok(Self::Energy { temperature: 1.0 }),
            "lof" => Ok(Self::Lof { k: None }),
            "ensemble" => Ok(Self::Ensemble),
            other => Err(CoreError::UnknownName {
                kind: "detector",
                name: other.to_string(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mahalanobis => "mahalanobis",
            Self::Msp => "msp",
            Self::Energy { .. } => "energy",
            Self::Lof { .. } => "lof",
            Self::Ensemble => "ensemble",
        }
    }

    /// Whether the detector reads classifier logits rather than hidden states.
    pub fn needs_logits(&self) -> bool {
        matches!(self, Self::Msp | Self::Energy { .. })
    }
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Energy { temperature } if *temperature != 1.0 => {
                write!(f, "energy(T={temperature})")
            }
            Self::Lof { k: Some(k) } => write!(f, "lof(k={k})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Per-record confidence scores for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    scores: Vec<f64>,
}

impl ScoredDataset {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(CoreError::NonFinite("scores"));
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Converts dump labels to class indices, rejecting unlabeled rows.
pub fn class_labels(labels: &[i32]) -> Result<Vec<usize>> {
    labels
        .iter()
        .enumerate()
        .map(|(row, &l)| {
            usize::try_from(l).map_err(|_| CoreError::LabelOutOfRange {
                row,
                label: i64::from(l),
                num_classes: 0,
            })
        })
        .collect()
}
