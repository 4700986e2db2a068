use alloc::vec::Vec;

use super::GaussianDiscriminantModel;
use crate::dump::{DatasetDump, HiddenStateRecord};
use crate::pooling::{pool_dataset, pool_sentence, IntraPool, LayerSet, PoolingSpec};
use crate::{CoreError, Result};

/// One Gaussian model per layer; the score is the unweighted sum of
/// per-layer Mahalanobis scores.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    intra: IntraPool,
    layers: Vec<(usize, GaussianDiscriminantModel)>,
}

/// Fits a Gaussian model on each layer of `layers`, pooling that layer alone with `intra`.
pub fn fit_ensemble(
    dump: &DatasetDump,
    labels: &[usize],
    intra: IntraPool,
    layers: &LayerSet,
) -> Result<EnsembleModel> {
    let num_layers = dump.num_hidden_layers();
    let mut models = Vec::with_capacity(layers.len());
    for &layer in layers.as_slice() {
        let spec = PoolingSpec::new(intra, LayerSet::single(layer, num_layers)?);
        let embeddings = pool_dataset(dump, &spec)?;
        models.push((layer, GaussianDiscriminantModel::fit(&embeddings, labels)?));
    }
    if models.is_empty() {
        return Err(CoreError::Empty("ensemble layer set"));
    }
    Ok(EnsembleModel {
        intra,
        layers: models,
    })
}

impl EnsembleModel {
    pub fn intra(&self) -> IntraPool {
        self.intra
    }

    /// `(layer, model)` pairs in ascending layer order.
    pub fn layer_models(&self) -> &[(usize, GaussianDiscriminantModel)] {
        &self.layers
    }

    /// Per-layer scores, in ascending layer order.
    pub fn layer_scores(&self, record: &HiddenStateRecord) -> Result<Vec<f64>> {
        let num_layers = record.num_hidden_layers();
        self.layers
            .iter()
            .map(|(layer, model)| {
                let spec = PoolingSpec::new(self.intra, LayerSet::single(*layer, num_layers)?);
                model.score(pool_sentence(record, &spec)?.as_slice())
            })
            .collect()
    }

    pub fn score(&self, record: &HiddenStateRecord) -> Result<f64> {
        let scores = self.layer_scores(record)?;
        // reduce, not sum: a single layer must come back unchanged, sign of zero included.
        Ok(scores
            .into_iter()
            .reduce(|a, b| a + b)
            .expect("non-empty layer set"))
    }
}
