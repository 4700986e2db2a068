//! Plain-text `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, list values are
//! comma-separated. `ood` may repeat. Relative paths are resolved against
//! the manifest's directory.
//!
//! ```text
//! id_train   = sst2_train.hsd
//! id_test    = sst2_test.hsd
//! ood        = 20ng.hsd
//! ood        = trec.hsd, wmt16.hsd
//! intra_pool = avg
//! layers     = all
//! detector   = mahalanobis
//! output     = markdown
//! seed       = 7
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use layerood_core::detectors::DetectorSpec;
use layerood_core::pooling::{IntraPool, LayerSelection};
use layerood_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: unknown {kind} {name:?}")]
    UnknownName {
        line: usize,
        kind: &'static str,
        name: String,
    },
    #[error("line {line}: invalid {field}: {reason}")]
    Invalid {
        line: usize,
        field: &'static str,
        reason: String,
    },
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits `text` into entries, skipping blanks and `#` comments.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ManifestError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ManifestError::Syntax {
                line,
                text: raw.to_string(),
            })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ManifestError::Syntax {
                line,
                text: raw.to_string(),
            });
        }
        out.push(Entry {
            line,
            key: key.to_ascii_lowercase(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

/// Parses a numeric field, mapping failures to [`ManifestError::Invalid`].
pub fn parse_field<T: FromStr>(entry: &Entry, field: &'static str) -> Result<T, ManifestError>
where
    T::Err: fmt::Display,
{
    entry
        .value
        .parse()
        .map_err(|e: T::Err| ManifestError::Invalid {
            line: entry.line,
            field,
            reason: e.to_string(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            _ => Err(()),
        }
    }
}

/// A parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub id_train: PathBuf,
    pub id_test: PathBuf,
    pub ood: Vec<PathBuf>,
    pub intra: IntraPool,
    /// Resolved against the dumps' depth at run time.
    pub layers: LayerSelection,
    pub detector: DetectorSpec,
    pub output: OutputFormat,
    pub seed: u64,
    /// Where to save the fitted Gaussian model (Mahalanobis only).
    pub model_out: Option<PathBuf>,
}

impl BenchmarkConfig {
    /// Parses manifest text; relative paths are taken relative to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ManifestError> {
        let mut id_train = None;
        let mut id_test = None;
        let mut ood = Vec::new();
        let mut intra = IntraPool::TokenAverage;
        let mut layers = LayerSelection::All;
        let mut detector_name: Option<Entry> = None;
        let mut temperature: Option<Entry> = None;
        let mut lof_k: Option<Entry> = None;
        let mut output = OutputFormat::Markdown;
        let mut seed = 0u64;
        let mut model_out = None;
        let mut seen: Vec<String> = Vec::new();

        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };

        for e in parse_entries(text)? {
            if e.key != "ood" {
                if seen.contains(&e.key) {
                    return Err(ManifestError::Duplicate {
                        line: e.line,
                        key: e.key,
                    });
                }
                seen.push(e.key.clone());
            }
            match e.key.as_str() {
                "id_train" => id_train = Some(resolve(&e.value)),
                "id_test" => id_test = Some(resolve(&e.value)),
                "ood" => {
                    for part in e.value.split(',').map(str::trim) {
                        if part.is_empty() {
                            return Err(ManifestError::Invalid {
                                line: e.line,
                                field: "ood",
                                reason: "empty path".into(),
                            });
                        }
                        ood.push(resolve(part));
                    }
                }
                "intra_pool" => {
                    intra = e.value.parse().map_err(|_| ManifestError::UnknownName {
                        line: e.line,
                        kind: "intra pooling",
                        name: e.value.clone(),
                    })?;
                }
                "layers" => {
                    layers = e.value.parse().map_err(|err| match err {
                        CoreError::LayerOutOfRange { layer, .. } => ManifestError::Invalid {
                            line: e.line,
                            field: "layers",
                            reason: format!("layer {layer} is not eligible (layers are 1-based)"),
                        },
                        _ => ManifestError::UnknownName {
                            line: e.line,
                            kind: "layer selection",
                            name: e.value.clone(),
                        },
                    })?;
                }
                "detector" => detector_name = Some(e),
                "temperature" => temperature = Some(e),
                "k" => lof_k = Some(e),
                "output" => {
                    output = e.value.parse().map_err(|_| ManifestError::UnknownName {
                        line: e.line,
                        kind: "output format",
                        name: e.value.clone(),
                    })?;
                }
                "seed" => seed = parse_field(&e, "seed")?,
                "model_out" => model_out = Some(resolve(&e.value)),
                _ => {
                    return Err(ManifestError::UnknownKey {
                        line: e.line,
                        key: e.key,
                    })
                }
            }
        }

        let mut detector = match &detector_name {
            Some(e) => {
                DetectorSpec::from_name(&e.value).map_err(|_| ManifestError::UnknownName {
                    line: e.line,
                    kind: "detector",
                    name: e.value.clone(),
                })?
            }
            None => DetectorSpec::Mahalanobis,
        };
        match (&mut detector, temperature, lof_k) {
            (DetectorSpec::Energy { temperature: t }, Some(e), None) => {
                let value: f64 = parse_field(&e, "temperature")?;
                if !(value > 0.0 && value.is_finite()) {
                    return Err(ManifestError::Invalid {
                        line: e.line,
                        field: "temperature",
                        reason: "must be positive".into(),
                    });
                }
                *t = value;
            }
            (DetectorSpec::Lof { k }, None, Some(e)) => {
                let value: usize = parse_field(&e, "k")?;
                if value == 0 {
                    return Err(ManifestError::Invalid {
                        line: e.line,
                        field: "k",
                        reason: "must be >= 1".into(),
                    });
                }
                *k = Some(value);
            }
            (_, None, None) => {}
            (d, t, k) => {
                let e = t.or(k).expect("one hyperparameter present");
                return Err(ManifestError::Invalid {
                    line: e.line,
                    field: "detector",
                    reason: format!("{:?} does not apply to detector {}", e.key, d.name()),
                });
            }
        }

        if ood.is_empty() {
            return Err(ManifestError::Missing("ood"));
        }
        Ok(Self {
            id_train: id_train.ok_or(ManifestError::Missing("id_train"))?,
            id_test: id_test.ok_or(ManifestError::Missing("id_test"))?,
            ood,
            intra,
            layers,
            detector,
            output,
            seed,
            model_out,
        })
    }
}

/// Reads and parses a manifest file.
pub fn read_manifest(path: &Path) -> Result<BenchmarkConfig, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    BenchmarkConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
}
