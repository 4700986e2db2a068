use alloc::string::String;

/// Errors raised by the scoring core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    /// A type invariant does not hold. `record` is the offending record index, if any.
    #[error("invariant violated{}: {field}: {detail}", fmt_record(.record))]
    Invariant {
        record: Option<usize>,
        field: &'static str,
        detail: String,
    },
    #[error("layer {layer} is not eligible for pooling (valid range 1..={max})")]
    LayerOutOfRange { layer: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("label {label} out of range for {num_classes} classes (row {row})")]
    LabelOutOfRange {
        row: usize,
        label: i64,
        num_classes: usize,
    },
    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("neighborhood size k={k} invalid for {n} training points (need 1 <= k < n)")]
    InvalidNeighborhood { k: usize, n: usize },
    #[error("all training points are identical; local densities are undefined")]
    DegenerateTraining,
    #[error("detector needs at least 2 logits, got {0}")]
    LogitsRequired(usize),
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unknown {kind} name {name:?}")]
    UnknownName { kind: &'static str, name: String },
}

fn fmt_record(record: &Option<usize>) -> String {
    match record {
        Some(i) => alloc::format!(" in record {i}"),
        None => String::new(),
    }
}
