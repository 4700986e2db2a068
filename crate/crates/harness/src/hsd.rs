//! Reader and writer for HSD (hidden-state dump) files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! header  : "HSD1" | version u16 | num_examples u64 | num_layers_total u16
//!           | hidden_dim u32 | num_classes u32                 (24 bytes)
//! record  : label i32 | token_count u32 | logits C x f32
//!           | hidden (L+1) * n * d x f32   (layer, then token, then dim)
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use layerood_core::dump::{
    validate_record, DatasetDump, DumpHeader, HiddenStateRecord, HSD_MAGIC, HSD_VERSION,
};
use layerood_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HsdError {
    #[error("bad magic {0:?}, expected \"HSD1\"")]
    BadMagic([u8; 4]),
    #[error("unsupported HSD version {0}")]
    UnsupportedVersion(u16),
    #[error("stream truncated in {}", match .record { Some(i) => format!("record {i}"), None => "header".to_string() })]
    Truncated { record: Option<usize> },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite {field} value in record {record} at offset {offset}")]
    NonFinite {
        record: usize,
        field: &'static str,
        offset: usize,
    },
    #[error("{0} trailing bytes after the last record")]
    TrailingBytes(u64),
    #[error(transparent)]
    Invariant(#[from] CoreError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// Serializes `dump`, returning the number of bytes written.
pub fn write_dump<W: Write>(dump: &DatasetDump, sink: W) -> Result<u64, HsdError> {
    let header = dump.header();
    for (i, r) in dump.records().iter().enumerate() {
        validate_record(header, i, r)?;
    }
    let mut w = CountingWriter {
        inner: sink,
        count: 0,
    };
    w.write_all(&header.magic)?;
    w.write_u16::<LittleEndian>(header.version)?;
    w.write_u64::<LittleEndian>(header.num_examples)?;
    w.write_u16::<LittleEndian>(header.num_layers_total)?;
    w.write_u32::<LittleEndian>(header.hidden_dim)?;
    w.write_u32::<LittleEndian>(header.num_classes)?;
    for r in dump.records() {
        w.write_i32::<LittleEndian>(r.label())?;
        w.write_u32::<LittleEndian>(r.token_count() as u32)?;
        write_f32s(&mut w, r.logits())?;
        write_f32s(&mut w, r.hidden())?;
    }
    w.flush()?;
    Ok(w.count)
}

fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

struct CountingWriter<W> {
    inner: W,
    count: u64,
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.count += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn truncated_at(record: Option<usize>) -> impl Fn(io::Error) -> HsdError {
    move |e| match e.kind() {
        io::ErrorKind::UnexpectedEof => HsdError::Truncated { record },
        _ => HsdError::Io(e),
    }
}

/// Reads exactly `count` f32 values without trusting `count` for preallocation.
fn read_f32s<R: Read>(r: &mut R, count: usize, record: usize) -> Result<Vec<f32>, HsdError> {
    let bytes = count.checked_mul(4).ok_or_else(|| {
        HsdError::DimensionMismatch(format!("record {record}: tensor size overflows"))
    })?;
    let mut buf = Vec::new();
    r.by_ref().take(bytes as u64).read_to_end(&mut buf)?;
    if buf.len() != bytes {
        return Err(HsdError::Truncated {
            record: Some(record),
        });
    }
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn read_header<R: Read>(r: &mut R) -> Result<DumpHeader, HsdError> {
    let eof = truncated_at(None);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(&eof)?;
    if magic != HSD_MAGIC {
        return Err(HsdError::BadMagic(magic));
    }
    let version = r.read_u16::<LittleEndian>().map_err(&eof)?;
    if version != HSD_VERSION {
        return Err(HsdError::UnsupportedVersion(version));
    }
    let header = DumpHeader {
        magic,
        version,
        num_examples: r.read_u64::<LittleEndian>().map_err(&eof)?,
        num_layers_total: r.read_u16::<LittleEndian>().map_err(&eof)?,
        hidden_dim: r.read_u32::<LittleEndian>().map_err(&eof)?,
        num_classes: r.read_u32::<LittleEndian>().map_err(&eof)?,
    };
    if header.num_layers_total < 2 {
        return Err(HsdError::DimensionMismatch(format!(
            "num_layers_total {} < 2",
            header.num_layers_total
        )));
    }
    if header.hidden_dim < 1 {
        return Err(HsdError::DimensionMismatch("hidden_dim is 0".into()));
    }
    Ok(header)
}

/// Parses and validates a dump. Trailing bytes after the last record are rejected.
pub fn read_dump<R: Read>(source: R) -> Result<DatasetDump, HsdError> {
    let mut r = source;
    let header = read_header(&mut r)?;
    let layers = usize::from(header.num_layers_total);
    let dim = header.hidden_dim as usize;
    let classes = header.num_classes as usize;

    let mut records = Vec::new();
    for index in 0..header.num_examples as usize {
        let eof = truncated_at(Some(index));
        let label = r.read_i32::<LittleEndian>().map_err(&eof)?;
        let token_count = r.read_u32::<LittleEndian>().map_err(&eof)? as usize;
        if token_count == 0 {
            return Err(HsdError::DimensionMismatch(format!(
                "record {index}: token_count is 0"
            )));
        }
        let logits = read_f32s(&mut r, classes, index)?;
        let hidden_len = layers
            .checked_mul(token_count)
            .and_then(|v| v.checked_mul(dim))
            .ok_or_else(|| {
                HsdError::DimensionMismatch(format!("record {index}: tensor size overflows"))
            })?;
        let hidden = read_f32s(&mut r, hidden_len, index)?;
        for (field, values) in [("logits", &logits), ("hidden", &hidden)] {
            if let Some(offset) = values.iter().position(|v| !v.is_finite()) {
                return Err(HsdError::NonFinite {
                    record: index,
                    field,
                    offset,
                });
            }
        }
        let record = HiddenStateRecord::new(label, layers, token_count, dim, logits, hidden)?;
        validate_record(&header, index, &record)?;
        records.push(record);
    }

    let trailing = io::copy(&mut r, &mut io::sink())?;
    if trailing > 0 {
        return Err(HsdError::TrailingBytes(trailing));
    }
    Ok(DatasetDump::from_parts(header, records)?)
}

pub fn read_dump_file(path: &Path) -> Result<DatasetDump, HsdError> {
    read_dump(BufReader::new(File::open(path)?))
}

pub fn write_dump_file(dump: &DatasetDump, path: &Path) -> Result<u64, HsdError> {
    write_dump(dump, BufWriter::new(File::create(path)?))
}
