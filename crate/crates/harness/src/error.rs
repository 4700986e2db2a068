use std::io;
use std::path::{Path, PathBuf};

use layerood_core::CoreError;

use crate::hsd::HsdError;
use crate::manifest::ManifestError;
use crate::model_file::ModelFileError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{}: {source}", .path.display())]
    Dump { path: PathBuf, source: HsdError },
    #[error("{}: {source}", .path.display())]
    Model {
        path: PathBuf,
        source: ModelFileError,
    },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("dumps are inconsistent: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    Validation(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn hsd(path: &Path, source: HsdError) -> Self {
        Self::Dump {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. }
            | Self::Dump {
                source: HsdError::Io(_),
                ..
            }
            | Self::Model {
                source: ModelFileError::Io(_),
                ..
            }
            | Self::Manifest(ManifestError::Io { .. }) => 2,
            _ => 1,
        }
    }
}
