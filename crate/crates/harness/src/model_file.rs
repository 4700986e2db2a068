//! Binary sidecar for fitted Gaussian models.
//!
//! ```text
//! "OODM" | version u16 | C u32 | d u32
//! | means C*d f64 | precision d*d f64 | counts C f64 | ridge f64
//! ```
//! All little-endian, matrices row-major.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use layerood_core::detectors::GaussianDiscriminantModel;
use layerood_core::CoreError;

pub const MODEL_MAGIC: [u8; 4] = *b"OODM";
pub const MODEL_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("bad magic {0:?}, expected \"OODM\"")]
    BadMagic([u8; 4]),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u16),
    #[error("model file truncated")]
    Truncated,
    #[error("class count {0} is not a non-negative integer")]
    BadCount(f64),
    #[error(transparent)]
    Invalid(#[from] CoreError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

pub fn write_model<W: Write>(model: &GaussianDiscriminantModel, sink: W) -> io::Result<()> {
    let mut w = sink;
    w.write_all(&MODEL_MAGIC)?;
    w.write_u16::<LittleEndian>(MODEL_VERSION)?;
    w.write_u32::<LittleEndian>(model.num_classes() as u32)?;
    w.write_u32::<LittleEndian>(model.dim() as u32)?;
    for &v in model.class_means().iter().chain(model.precision()) {
        w.write_f64::<LittleEndian>(v)?;
    }
    for &n in model.class_counts() {
        w.write_f64::<LittleEndian>(n as f64)?;
    }
    w.write_f64::<LittleEndian>(model.ridge())?;
    w.flush()
}

pub fn read_model<R: Read>(source: R) -> Result<GaussianDiscriminantModel, ModelFileError> {
    let mut r = source;
    let eof = |e: io::Error| match e.kind() {
        io::ErrorKind::UnexpectedEof => ModelFileError::Truncated,
        _ => ModelFileError::Io(e),
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(eof)?;
    if magic != MODEL_MAGIC {
        return Err(ModelFileError::BadMagic(magic));
    }
    let version = r.read_u16::<LittleEndian>().map_err(eof)?;
    if version != MODEL_VERSION {
        return Err(ModelFileError::UnsupportedVersion(version));
    }
    let classes = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
    let dim = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
    let mut read_vec = |len: usize| -> Result<Vec<f64>, ModelFileError> {
        let mut buf = Vec::new();
        (&mut r).take(len as u64 * 8).read_to_end(&mut buf)?;
        if buf.len() != len * 8 {
            return Err(ModelFileError::Truncated);
        }
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    };
    let means = read_vec(classes * dim)?;
    let precision = read_vec(dim * dim)?;
    let counts = read_vec(classes)?
        .into_iter()
        .map(|c| {
            if c >= 0.0 && c.fract() == 0.0 && c <= u64::MAX as f64 {
                Ok(c as u64)
            } else {
                Err(ModelFileError::BadCount(c))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ridge = read_vec(1)?[0];
    Ok(GaussianDiscriminantModel::from_parts(
        dim, means, precision, counts, ridge,
    )?)
}

pub fn write_model_file(model: &GaussianDiscriminantModel, path: &Path) -> io::Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn read_model_file(path: &Path) -> Result<GaussianDiscriminantModel, ModelFileError> {
    read_model(BufReader::new(File::open(path)?))
}
