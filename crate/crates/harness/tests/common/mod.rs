//! Shared fixtures for the harness integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use layerood::hsd::write_dump_file;
use layerood::synth::{write_synthetic, SyntheticSpec};
use layerood_core::dump::{DatasetDump, HiddenStateRecord, HEADER_LEN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A dump with random geometry, labels and values (including -0.0 and subnormals).
pub fn random_dump(seed: u64) -> DatasetDump {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers_total = rng.random_range(2..6usize);
    let dim = rng.random_range(1..6usize);
    let classes = rng.random_range(0..4usize);
    let count = rng.random_range(0..8usize);
    let records = (0..count)
        .map(|_| {
            let n = rng.random_range(1..6usize);
            let label = if classes == 0 || rng.random_bool(0.2) {
                -1
            } else {
                rng.random_range(0..classes as i32)
            };
            let value = |rng: &mut ChaCha8Rng| match rng.random_range(0..10) {
                0 => -0.0,
                1 => f32::MIN_POSITIVE / 4.0,
                2 => f32::MAX,
                _ => {
                    f32::from_bits(rng.random::<u32>() & 0x3fff_ffff)
                        * if rng.random() { 1.0 } else { -1.0 }
                }
            };
            let logits = (0..classes).map(|_| value(&mut rng)).collect();
            let hidden = (0..layers_total * n * dim)
                .map(|_| value(&mut rng))
                .collect();
            HiddenStateRecord::new(label, layers_total, n, dim, logits, hidden).unwrap()
        })
        .collect();
    DatasetDump::new(layers_total as u16, dim as u32, classes as u32, records).unwrap()
}

/// Byte offset of record `index`'s hidden block.
pub fn hidden_offset(dump: &DatasetDump, index: usize) -> usize {
    let c = dump.num_classes();
    let lt = dump.header().num_layers_total as usize;
    let d = dump.hidden_dim();
    let mut offset = HEADER_LEN;
    for r in &dump.records()[..index] {
        offset += 8 + 4 * c + 4 * lt * r.token_count() * d;
    }
    offset + 8 + 4 * c
}

pub fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        classes: 3,
        layers: 3,
        dim: 6,
        train_count: 120,
        test_count: 60,
        ood_count: 60,
        seed,
        ..SyntheticSpec::default()
    }
}

/// Writes a synthetic suite to `dir` and returns its manifest path.
pub fn synth_into(dir: &Path, spec: &SyntheticSpec) -> PathBuf {
    write_synthetic(spec, dir).unwrap()
}

/// Writes a manifest in `dir` from `key = value` lines.
pub fn manifest(dir: &Path, name: &str, lines: &[&str]) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

pub fn write_dump(dir: &Path, name: &str, dump: &DatasetDump) -> PathBuf {
    let path = dir.join(name);
    write_dump_file(dump, &path).unwrap();
    path
}
