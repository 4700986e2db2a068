//! Sentence embeddings from per-layer token hidden states.
//!
//! Each layer `i` in the selected set `M` is first reduced to one vector
//! `P_i` (either the first token, or the mean of all `n` stored tokens), and
//! the `P_i` are then averaged with uniform weight `1/|M|`. Token averaging
//! over every layer `1..=L` is the Avg-Avg embedding; CLS on layer `L` alone
//! is the usual last-layer classifier token.
//!
//! All accumulation is in `f64`, sequentially in token order and then in
//! ascending layer order, so results are reproducible bit-for-bit.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dump::{DatasetDump, HiddenStateRecord};
use crate::{CoreError, Result};

/// How one layer's token vectors are reduced to a single vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntraPool {
    /// First token (`h_i^1`).
    Cls,
    /// Mean over all stored tokens, special tokens included.
    TokenAverage,
}

impl FromStr for IntraPool {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cls" => Ok(Self::Cls),
            "avg" => Ok(Self::TokenAverage),
            other => Err(CoreError::UnknownName {
                kind: "intra pooling",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for IntraPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cls => "cls",
            Self::TokenAverage => "avg",
        })
    }
}

/// A layer selection as written by a user, before the model depth is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSelection {
    /// `{1, ..., L}`
    All,
    /// `{1, L}`
    FirstLast,
    /// `{L}`
    Last,
    /// Explicit 1-based indices.
    Explicit(Vec<usize>),
}

impl LayerSelection {
    /// Resolves against a model with `num_layers` hidden layers.
    pub fn resolve(&self, num_layers: usize) -> Result<LayerSet> {
        if num_layers == 0 {
            return Err(CoreError::LayerOutOfRange { layer: 1, max: 0 });
        }
        match self {
            Self::All => LayerSet::new((1..=num_layers).collect(), num_layers),
            Self::FirstLast => LayerSet::new(vec![1, num_layers], num_layers),
            Self::Last => LayerSet::new(vec![num_layers], num_layers),
            Self::Explicit(layers) => LayerSet::new(layers.clone(), num_layers),
        }
    }
}

impl FromStr for LayerSelection {
    type Err = CoreError;

    /// Accepts `all`, `first-last`, `last` or a comma list such as `1,5,12`.
    /// Layer 0 is rejected here already.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "all" => return Ok(Self::All),
            "first-last" => return Ok(Self::FirstLast),
            "last" => return Ok(Self::Last),
            _ => {}
        }
        let mut layers = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let layer: usize = part.parse().map_err(|_| CoreError::UnknownName {
                kind: "layer selection",
                name: s.to_string(),
            })?;
            if layer == 0 {
                return Err(CoreError::LayerOutOfRange {
                    layer: 0,
                    max: usize::MAX,
                });
            }
            layers.push(layer);
        }
        if layers.is_empty() {
            return Err(CoreError::Empty("layer selection"));
        }
        Ok(Self::Explicit(layers))
    }
}

impl fmt::Display for LayerSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => f.write_str("all"),
            Self::FirstLast => f.write_str("first-last"),
            Self::Last => f.write_str("last"),
            Self::Explicit(layers) => {
                for (i, l) in layers.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
        }
    }
}

/// A validated, sorted, duplicate-free set of 1-based layer indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerSet(Vec<usize>);

impl LayerSet {
    pub fn new(mut layers: Vec<usize>, num_layers: usize) -> Result<Self> {
        layers.sort_unstable();
        layers.dedup();
        if layers.is_empty() {
            return Err(CoreError::Empty("layer set"));
        }
        if let Some(&bad) = layers.iter().find(|&&l| l == 0 || l > num_layers) {
            return Err(CoreError::LayerOutOfRange {
                layer: bad,
                max: num_layers,
            });
        }
        Ok(Self(layers))
    }

    pub fn single(layer: usize, num_layers: usize) -> Result<Self> {
        Self::new(vec![layer], num_layers)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("layer set is non-empty")
    }
}

/// Intra-layer mode plus the layer set `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PoolingSpec {
    pub intra: IntraPool,
    pub layers: LayerSet,
}

impl PoolingSpec {
    pub fn new(intra: IntraPool, layers: LayerSet) -> Self {
        Self { intra, layers }
    }

    /// Token average over every layer.
    pub fn avg_avg(num_layers: usize) -> Result<Self> {
        Ok(Self::new(
            IntraPool::TokenAverage,
            LayerSelection::All.resolve(num_layers)?,
        ))
    }

    /// First token of the last layer.
    pub fn last_cls(num_layers: usize) -> Result<Self> {
        Ok(Self::new(
            IntraPool::Cls,
            LayerSelection::Last.resolve(num_layers)?,
        ))
    }

    fn check(&self, record: &HiddenStateRecord) -> Result<()> {
        let max = record.num_hidden_layers();
        if self.layers.max() > max {
            return Err(CoreError::LayerOutOfRange {
                layer: self.layers.max(),
                max,
            });
        }
        Ok(())
    }
}

/// A pooled sentence vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledEmbedding(pub Vec<f64>);

impl PooledEmbedding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Row-major `N x d` matrix of embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    dim: usize,
    data: Vec<f64>,
}

impl Embeddings {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if !data.len().is_multiple_of(dim) {
            return Err(CoreError::DimensionMismatch {
                expected: (data.len() / dim + 1) * dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Applies `f` to each row in place.
    pub fn map_rows(&mut self, f: impl FnMut(&mut [f64])) {
        self.data.chunks_exact_mut(self.dim).for_each(f);
    }
}

/// Pools layer `layer` (1-based, `1..=L`) of `record`.
pub fn pool_intra(
    record: &HiddenStateRecord,
    layer: usize,
    mode: IntraPool,
) -> Result<PooledEmbedding> {
    let max = record.num_hidden_layers();
    if layer == 0 || layer > max {
        return Err(CoreError::LayerOutOfRange { layer, max });
    }
    let mut out = vec![0.0; record.hidden_dim()];
    accumulate_intra(record, layer, mode, &mut out);
    Ok(PooledEmbedding(out))
}

// Writes P_layer into `out` (overwrites).
fn accumulate_intra(record: &HiddenStateRecord, layer: usize, mode: IntraPool, out: &mut [f64]) {
    match mode {
        IntraPool::Cls => {
            for (o, &v) in out.iter_mut().zip(record.token(layer, 0)) {
                *o = f64::from(v);
            }
        }
        IntraPool::TokenAverage => {
            out.iter_mut().for_each(|o| *o = 0.0);
            let n = record.token_count();
            for token in record.layer(layer).chunks_exact(record.hidden_dim()) {
                for (o, &v) in out.iter_mut().zip(token) {
                    *o += f64::from(v);
                }
            }
            let n = n as f64;
            out.iter_mut().for_each(|o| *o /= n);
        }
    }
}

/// Combines per-layer pooled vectors with uniform weight: `sum(P_i) / |M|`.
///
/// Layers are summed in iteration order. Every layer-combination path in the
/// workspace goes through this function so that results agree bit-for-bit.
pub fn combine_layers<'a>(per_layer: impl IntoIterator<Item = &'a [f64]>, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let mut count = 0usize;
    for p in per_layer {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
        count += 1;
    }
    let count = count as f64;
    out.iter_mut().for_each(|o| *o /= count);
}

/// Sentence embedding `P` for `record` under `spec`.
pub fn pool_sentence(record: &HiddenStateRecord, spec: &PoolingSpec) -> Result<PooledEmbedding> {
    spec.check(record)?;
    let d = record.hidden_dim();
    let layers = spec.layers.as_slice();
    let mut per_layer = vec![0.0; layers.len() * d];
    for (slot, &layer) in per_layer.chunks_exact_mut(d).zip(layers) {
        accumulate_intra(record, layer, spec.intra, slot);
    }
    let mut out = vec![0.0; d];
    combine_layers(per_layer.chunks_exact(d), &mut out);
    Ok(PooledEmbedding(out))
}

/// Pools every record of `dump`; row `k` is record `k`.
pub fn pool_dataset(dump: &DatasetDump, spec: &PoolingSpec) -> Result<Embeddings> {
    let d = dump.hidden_dim();
    let mut out = Embeddings::zeros(dump.len(), d);
    for (i, record) in dump.records().iter().enumerate() {
        let p = pool_sentence(record, spec)?;
        out.row_mut(i).copy_from_slice(&p.0);
    }
    Ok(out)
}

/// Intra-pooled vectors for each layer `1..=L`, one matrix per layer.
///
/// `result[l - 1]` holds layer `l`. Combining a subset of these with
/// [`combine_layers`] in ascending layer order reproduces
/// [`pool_dataset`] exactly.
pub fn pool_dataset_per_layer(dump: &DatasetDump, intra: IntraPool) -> Vec<Embeddings> {
    let d = dump.hidden_dim();
    let num_layers = dump.num_hidden_layers();
    let mut out: Vec<Embeddings> = (0..num_layers)
        .map(|_| Embeddings::zeros(dump.len(), d))
        .collect();
    for (i, record) in dump.records().iter().enumerate() {
        for (l, m) in out.iter_mut().enumerate() {
            accumulate_intra(record, l + 1, intra, m.row_mut(i));
        }
    }
    out
}
