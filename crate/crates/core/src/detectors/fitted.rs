use alloc::vec::Vec;

use super::{
    class_labels, effective_k, fit_ensemble, score_energy, score_msp, DetectorSpec, EnsembleModel,
    GaussianDiscriminantModel, LofModel, ScoredDataset,
};
use crate::dump::DatasetDump;
use crate::pooling::{pool_dataset, PoolingSpec};
use crate::{CoreError, Result};

/// A detector fitted on an ID training dump, ready to score other dumps
/// through the same pooling pipeline.
#[derive(Debug, Clone)]
pub enum FittedDetector {
    Mahalanobis {
        pooling: PoolingSpec,
        model: GaussianDiscriminantModel,
    },
    Lof {
        pooling: PoolingSpec,
        model: LofModel,
    },
    Msp,
    Energy {
        temperature: f64,
    },
    Ensemble(EnsembleModel),
}

impl FittedDetector {
    /// Fits `detector` on `train`. Logit detectors only check that logits exist.
    ///
    /// For the ensemble, `pooling.intra` is the per-layer mode and
    /// `pooling.layers` the set of layers to sum over.
    pub fn fit(
        detector: &DetectorSpec,
        pooling: &PoolingSpec,
        train: &DatasetDump,
    ) -> Result<Self> {
        if detector.needs_logits() && train.num_classes() < 2 {
            return Err(CoreError::LogitsRequired(train.num_classes()));
        }
        Ok(match *detector {
            DetectorSpec::Mahalanobis => {
                let embeddings = pool_dataset(train, pooling)?;
                let labels = class_labels(&train.labels())?;
                Self::Mahalanobis {
                    pooling: pooling.clone(),
                    model: GaussianDiscriminantModel::fit(&embeddings, &labels)?,
                }
            }
            DetectorSpec::Lof { k } => {
                let embeddings = pool_dataset(train, pooling)?;
                let k = effective_k(k, embeddings.rows());
                Self::Lof {
                    pooling: pooling.clone(),
                    model: LofModel::fit(embeddings, k)?,
                }
            }
            DetectorSpec::Msp => Self::Msp,
            DetectorSpec::Energy { temperature } => {
                if !(temperature > 0.0 && temperature.is_finite()) {
                    return Err(CoreError::InvalidTemperature(temperature));
                }
                Self::Energy { temperature }
            }
            DetectorSpec::Ensemble => {
                let labels = class_labels(&train.labels())?;
                Self::Ensemble(fit_ensemble(
                    train,
                    &labels,
                    pooling.intra,
                    &pooling.layers,
                )?)
            }
        })
    }

    pub fn score_dump(&self, dump: &DatasetDump) -> Result<ScoredDataset> {
        let scores: Vec<f64> = match self {
            Self::Mahalanobis { pooling, model } => {
                model.score_all(&pool_dataset(dump, pooling)?)?
            }
            Self::Lof { pooling, model } => pool_dataset(dump, pooling)?
                .iter_rows()
                .map(|r| model.score(r))
                .collect::<Result<_>>()?,
            Self::Msp => dump
                .records()
                .iter()
                .map(|r| score_msp(r.logits()))
                .collect::<Result<_>>()?,
            Self::Energy { temperature } => dump
                .records()
                .iter()
                .map(|r| score_energy(r.logits(), *temperature))
                .collect::<Result<_>>()?,
            Self::Ensemble(model) => dump
                .records()
                .iter()
                .map(|r| model.score(r))
                .collect::<Result<_>>()?,
        };
        ScoredDataset::new(scores)
    }

    pub fn gaussian_model(&self) -> Option<&GaussianDiscriminantModel> {
        match self {
            Self::Mahalanobis { model, .. } => Some(model),
            _ => None,
        }
    }
}
