//! Hidden-state records as they come out of a transformer forward pass.
//!
//! A record holds `L + 1` layers (layer 0 is the static token embedding
//! layer), `n` tokens and `d` dimensions, stored layer-major, then
//! token-major, as 32-bit floats. Layer 0 is kept so that dumps are faithful
//! to the model's full hidden-state series, but it is never eligible for
//! pooling.

use alloc::format;
use alloc::vec::Vec;

use crate::{CoreError, Result};

/// Four-byte tag at the start of every dump.
pub const HSD_MAGIC: [u8; 4] = *b"HSD1";
/// The only dump version this crate understands.
pub const HSD_VERSION: u16 = 1;
/// Encoded size of [`DumpHeader`] in bytes.
pub const HEADER_LEN: usize = 24;
/// Label used for unlabeled and OOD records.
pub const UNLABELED: i32 = -1;

/// Fixed-size dump header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DumpHeader {
    pub magic: [u8; 4],
    pub version: u16,
    pub num_examples: u64,
    /// `L + 1`: hidden layers plus the static embedding layer.
    pub num_layers_total: u16,
    pub hidden_dim: u32,
    /// Logit width; 0 when the dump carries no logits.
    pub num_classes: u32,
}

impl DumpHeader {
    pub fn new(
        num_examples: u64,
        num_layers_total: u16,
        hidden_dim: u32,
        num_classes: u32,
    ) -> Self {
        Self {
            magic: HSD_MAGIC,
            version: HSD_VERSION,
            num_examples,
            num_layers_total,
            hidden_dim,
            num_classes,
        }
    }

    /// Number of transformer layers `L` (excludes layer 0).
    pub fn num_hidden_layers(&self) -> usize {
        usize::from(self.num_layers_total).saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.magic != HSD_MAGIC {
            return Err(invariant(None, "magic", format!("{:?}", self.magic)));
        }
        if self.num_layers_total < 2 {
            return Err(invariant(
                None,
                "num_layers_total",
                format!("{} < 2", self.num_layers_total),
            ));
        }
        if self.hidden_dim < 1 {
            return Err(invariant(None, "hidden_dim", "must be >= 1".into()));
        }
        Ok(())
    }
}

/// One example: label, optional logits and the full hidden-state tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStateRecord {
    label: i32,
    num_layers_total: usize,
    token_count: usize,
    hidden_dim: usize,
    logits: Vec<f32>,
    hidden: Vec<f32>,
}

impl HiddenStateRecord {
    /// Builds a record and checks its shape and finiteness.
    ///
    /// `hidden` must have `num_layers_total * token_count * hidden_dim`
    /// values in layer, token, dimension order.
    pub fn new(
        label: i32,
        num_layers_total: usize,
        token_count: usize,
        hidden_dim: usize,
        logits: Vec<f32>,
        hidden: Vec<f32>,
    ) -> Result<Self> {
        let record = Self {
            label,
            num_layers_total,
            token_count,
            hidden_dim,
            logits,
            hidden,
        };
        record.check_shape(None)?;
        record.check_finite(None)?;
        Ok(record)
    }

    fn check_shape(&self, index: Option<usize>) -> Result<()> {
        if self.token_count < 1 {
            return Err(invariant(index, "token_count", "must be >= 1".into()));
        }
        if self.num_layers_total < 2 {
            return Err(invariant(index, "num_layers_total", "must be >= 2".into()));
        }
        if self.hidden_dim < 1 {
            return Err(invariant(index, "hidden_dim", "must be >= 1".into()));
        }
        let expected = self.num_layers_total * self.token_count * self.hidden_dim;
        if self.hidden.len() != expected {
            return Err(invariant(
                index,
                "hidden",
                format!("expected {expected} values, got {}", self.hidden.len()),
            ));
        }
        Ok(())
    }

    fn check_finite(&self, index: Option<usize>) -> Result<()> {
        if let Some(pos) = self.logits.iter().position(|v| !v.is_finite()) {
            return Err(invariant(
                index,
                "logits",
                format!("non-finite value at {pos}"),
            ));
        }
        if let Some(pos) = self.hidden.iter().position(|v| !v.is_finite()) {
            return Err(invariant(
                index,
                "hidden",
                format!("non-finite value at {pos}"),
            ));
        }
        Ok(())
    }

    pub fn label(&self) -> i32 {
        self.label
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn num_layers_total(&self) -> usize {
        self.num_layers_total
    }

    /// `L`, the number of layers eligible for pooling.
    pub fn num_hidden_layers(&self) -> usize {
        self.num_layers_total - 1
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn logits(&self) -> &[f32] {
        &self.logits
    }

    /// Raw hidden tensor, layer-major.
    pub fn hidden(&self) -> &[f32] {
        &self.hidden
    }

    /// All token vectors of `layer` (0-based over the full `L + 1` series),
    /// `token_count * hidden_dim` values.
    pub fn layer(&self, layer: usize) -> &[f32] {
        let len = self.token_count * self.hidden_dim;
        &self.hidden[layer * len..(layer + 1) * len]
    }

    /// Hidden vector of token `token` (0-based) at `layer`.
    pub fn token(&self, layer: usize, token: usize) -> &[f32] {
        let start = (layer * self.token_count + token) * self.hidden_dim;
        &self.hidden[start..start + self.hidden_dim]
    }

    /// Replaces every hidden value through `f`. Used by tests and data generators.
    pub fn map_hidden(mut self, f: impl Fn(f32) -> f32) -> Result<Self> {
        self.hidden.iter_mut().for_each(|v| *v = f(*v));
        self.check_finite(None)?;
        Ok(self)
    }
}

/// A header plus its records, all sharing one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDump {
    header: DumpHeader,
    records: Vec<HiddenStateRecord>,
}

impl DatasetDump {
    /// Builds a dump, deriving the header and validating every record against it.
    pub fn new(
        num_layers_total: u16,
        hidden_dim: u32,
        num_classes: u32,
        records: Vec<HiddenStateRecord>,
    ) -> Result<Self> {
        let header = DumpHeader::new(
            records.len() as u64,
            num_layers_total,
            hidden_dim,
            num_classes,
        );
        Self::from_parts(header, records)
    }

    /// Joins a header with records, checking all invariants.
    pub fn from_parts(header: DumpHeader, records: Vec<HiddenStateRecord>) -> Result<Self> {
        header.validate()?;
        if header.version != HSD_VERSION {
            return Err(invariant(None, "version", format!("{}", header.version)));
        }
        if header.num_examples != records.len() as u64 {
            return Err(invariant(
                None,
                "num_examples",
                format!(
                    "header says {}, got {} records",
                    header.num_examples,
                    records.len()
                ),
            ));
        }
        for (i, r) in records.iter().enumerate() {
            validate_record(&header, i, r)?;
        }
        Ok(Self { header, records })
    }

    pub fn header(&self) -> &DumpHeader {
        &self.header
    }

    pub fn records(&self) -> &[HiddenStateRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<HiddenStateRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_hidden_layers(&self) -> usize {
        self.header.num_hidden_layers()
    }

    pub fn hidden_dim(&self) -> usize {
        self.header.hidden_dim as usize
    }

    pub fn num_classes(&self) -> usize {
        self.header.num_classes as usize
    }

    pub fn labels(&self) -> Vec<i32> {
        self.records.iter().map(|r| r.label).collect()
    }
}

/// Checks one record against a header: geometry, logits width, label range, finiteness.
pub fn validate_record(header: &DumpHeader, index: usize, r: &HiddenStateRecord) -> Result<()> {
    let at = Some(index);
    r.check_shape(at)?;
    if r.num_layers_total != usize::from(header.num_layers_total) {
        return Err(invariant(
            at,
            "num_layers_total",
            format!(
                "{} != header {}",
                r.num_layers_total, header.num_layers_total
            ),
        ));
    }
    if r.hidden_dim != header.hidden_dim as usize {
        return Err(invariant(
            at,
            "hidden_dim",
            format!("{} != header {}", r.hidden_dim, header.hidden_dim),
        ));
    }
    let classes = header.num_classes as usize;
    if r.logits.len() != classes {
        return Err(invariant(
            at,
            "logits",
            format!("expected {classes} logits, got {}", r.logits.len()),
        ));
    }
    let label_ok = if classes > 0 {
        r.label == UNLABELED || (r.label >= 0 && (r.label as usize) < classes)
    } else {
        r.label >= UNLABELED
    };
    if !label_ok {
        return Err(invariant(
            at,
            "label",
            format!("{} invalid for C={classes}", r.label),
        ));
    }
    r.check_finite(at)
}

fn invariant(
    record: Option<usize>,
    field: &'static str,
    detail: alloc::string::String,
) -> CoreError {
    CoreError::Invariant {
        record,
        field,
        detail,
    }
}
