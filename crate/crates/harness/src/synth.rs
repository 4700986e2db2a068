//! Synthetic hidden-state dumps with a known ID/OOD structure.
//!
//! Every token vector of class `c` at layer `l` is `mu[c][l] + noise_std * z`
//! with `z` standard normal, independently per token and layer. Class means
//! have norm `class_separation`. OOD records pick a random ID class and add
//! `ood_shift * noise_std * u[l]` to its means on the shifted layers, where
//! `u[l]` is a fixed random unit direction per layer.
//!
//! Logits are a noisy linear readout of the last layer's token mean.

use std::fs;
use std::path::{Path, PathBuf};

use layerood_core::dump::{DatasetDump, HiddenStateRecord, UNLABELED};
use layerood_core::pooling::LayerSelection;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hsd::write_dump_file;
use crate::manifest::{parse_entries, parse_field, ManifestError};
use crate::HarnessError;

/// Which layers carry the OOD mean shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShiftLayers {
    Selection(LayerSelection),
    /// Layers `1..=L/2`.
    FirstHalf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub layers: usize,
    pub dim: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub class_separation: f64,
    /// In units of `noise_std`.
    pub ood_shift: f64,
    pub noise_std: f64,
    pub shift_layers: ShiftLayers,
    pub train_count: usize,
    pub test_count: usize,
    pub ood_count: usize,
    /// Write logits (`C` per record); when false the dumps have `C = 0`.
    pub logits: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 2,
            layers: 4,
            dim: 8,
            min_tokens: 4,
            max_tokens: 12,
            class_separation: 4.0,
            ood_shift: 10.0,
            noise_std: 1.0,
            shift_layers: ShiftLayers::Selection(LayerSelection::All),
            train_count: 200,
            test_count: 200,
            ood_count: 200,
            logits: true,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: &str| Err(HarnessError::Validation(format!("synthetic spec: {msg}")));
        if self.classes < 1 || self.layers < 1 || self.dim < 1 {
            return fail("classes, layers and dim must be >= 1");
        }
        if self.layers + 1 > usize::from(u16::MAX) {
            return fail("too many layers");
        }
        if self.min_tokens < 1 || self.max_tokens < self.min_tokens {
            return fail("need 1 <= min_tokens <= max_tokens");
        }
        if self.train_count < 1 || self.test_count < 1 || self.ood_count < 1 {
            return fail("sample counts must be >= 1");
        }
        if !(self.ood_shift >= 0.0 && self.ood_shift.is_finite()) {
            return fail("ood_shift must be >= 0");
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return fail("noise_std must be > 0");
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return fail("class_separation must be >= 0");
        }
        self.shifted_layers()?;
        Ok(())
    }

    fn shifted_layers(&self) -> Result<Vec<usize>, HarnessError> {
        match &self.shift_layers {
            ShiftLayers::FirstHalf => Ok((1..=(self.layers / 2).max(1)).collect()),
            ShiftLayers::Selection(sel) => Ok(sel.resolve(self.layers)?.as_slice().to_vec()),
        }
    }

    /// Parses a `key = value` spec file. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut spec = Self::default();
        for e in parse_entries(text)? {
            match e.key.as_str() {
                "classes" => spec.classes = parse_field(&e, "classes")?,
                "layers" => spec.layers = parse_field(&e, "layers")?,
                "dim" => spec.dim = parse_field(&e, "dim")?,
                "min_tokens" => spec.min_tokens = parse_field(&e, "min_tokens")?,
                "max_tokens" => spec.max_tokens = parse_field(&e, "max_tokens")?,
                "tokens" => {
                    let (lo, hi) = e.value.split_once("..").unwrap_or((&e.value, &e.value));
                    spec.min_tokens = lo.trim().parse().map_err(|_| invalid(&e, "tokens"))?;
                    spec.max_tokens = hi.trim().parse().map_err(|_| invalid(&e, "tokens"))?;
                }
                "class_separation" => spec.class_separation = parse_field(&e, "class_separation")?,
                "ood_shift" => spec.ood_shift = parse_field(&e, "ood_shift")?,
                "noise_std" => spec.noise_std = parse_field(&e, "noise_std")?,
                "shift_layers" => {
                    spec.shift_layers = if e.value.eq_ignore_ascii_case("first-half") {
                        ShiftLayers::FirstHalf
                    } else {
                        ShiftLayers::Selection(
                            e.value.parse().map_err(|_| invalid(&e, "shift_layers"))?,
                        )
                    };
                }
                "train" => spec.train_count = parse_field(&e, "train")?,
                "test" => spec.test_count = parse_field(&e, "test")?,
                "ood" => spec.ood_count = parse_field(&e, "ood")?,
                "logits" => spec.logits = parse_field(&e, "logits")?,
                "seed" => spec.seed = parse_field(&e, "seed")?,
                _ => {
                    return Err(ManifestError::UnknownKey {
                        line: e.line,
                        key: e.key,
                    })
                }
            }
        }
        Ok(spec)
    }
}

fn invalid(e: &crate::manifest::Entry, field: &'static str) -> ManifestError {
    ManifestError::Invalid {
        line: e.line,
        field,
        reason: format!("cannot parse {:?}", e.value),
    }
}

/// The three generated splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDumps {
    pub id_train: DatasetDump,
    pub id_test: DatasetDump,
    pub ood_test: DatasetDump,
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    /// `[class][layer]` over layers `0..=L`, each of length `d`.
    means: Vec<Vec<Vec<f64>>>,
    /// Per layer `0..=L`; zero on unshifted layers.
    shift: Vec<Vec<f64>>,
    readout_noise: f64,
}

impl Generator<'_> {
    fn record(
        &self,
        rng: &mut ChaCha8Rng,
        class: usize,
        label: i32,
        ood: bool,
    ) -> Result<HiddenStateRecord, HarnessError> {
        let s = self.spec;
        let n = rng.random_range(s.min_tokens..=s.max_tokens);
        let mut hidden = Vec::with_capacity((s.layers + 1) * n * s.dim);
        let mut last_mean = vec![0.0; s.dim];
        for layer in 0..=s.layers {
            let mean = &self.means[class][layer];
            for _ in 0..n {
                for k in 0..s.dim {
                    let mut v = mean[k] + s.noise_std * rng.sample::<f64, _>(StandardNormal);
                    if ood {
                        v += self.shift[layer][k];
                    }
                    if layer == s.layers {
                        last_mean[k] += v / n as f64;
                    }
                    hidden.push(v as f32);
                }
            }
        }
        let logits = if s.logits {
            let scale = s.class_separation.max(1.0);
            (0..s.classes)
                .map(|c| {
                    let dot: f64 = self.means[c][s.layers]
                        .iter()
                        .zip(&last_mean)
                        .map(|(a, b)| a * b)
                        .sum();
                    (dot / scale + self.readout_noise * rng.sample::<f64, _>(StandardNormal)) as f32
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(HiddenStateRecord::new(
            label,
            s.layers + 1,
            n,
            s.dim,
            logits,
            hidden,
        )?)
    }
}

/// Generates `(id_train, id_test, ood_test)`, reproducible from `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDumps, HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let means = (0..spec.classes)
        .map(|_| {
            (0..=spec.layers)
                .map(|_| {
                    unit_vector(&mut rng, spec.dim)
                        .into_iter()
                        .map(|v| v * spec.class_separation)
                        .collect()
                })
                .collect()
        })
        .collect();
    let shifted = spec.shifted_layers()?;
    let shift = (0..=spec.layers)
        .map(|layer| {
            let u = unit_vector(&mut rng, spec.dim);
            if shifted.contains(&layer) {
                u.into_iter()
                    .map(|v| v * spec.ood_shift * spec.noise_std)
                    .collect()
            } else {
                vec![0.0; spec.dim]
            }
        })
        .collect();
    let gen = Generator {
        spec,
        means,
        shift,
        readout_noise: 0.1,
    };

    let layers_total = (spec.layers + 1) as u16;
    let dim = spec.dim as u32;
    let classes = if spec.logits { spec.classes as u32 } else { 0 };
    let id_split = |rng: &mut ChaCha8Rng, count: usize| -> Result<DatasetDump, HarnessError> {
        let records = (0..count)
            .map(|i| {
                let c = i % spec.classes;
                gen.record(rng, c, c as i32, false)
            })
            .collect::<Result<_, _>>()?;
        Ok(DatasetDump::new(layers_total, dim, classes, records)?)
    };
    let id_train = id_split(&mut rng, spec.train_count)?;
    let id_test = id_split(&mut rng, spec.test_count)?;
    let ood_records = (0..spec.ood_count)
        .map(|_| {
            let c = rng.random_range(0..spec.classes);
            gen.record(&mut rng, c, UNLABELED, true)
        })
        .collect::<Result<_, _>>()?;
    let ood_test = DatasetDump::new(layers_total, dim, classes, ood_records)?;
    Ok(SyntheticDumps {
        id_train,
        id_test,
        ood_test,
    })
}

/// Writes the three dumps and a ready-to-run manifest into `out_dir`.
///
/// Returns the manifest path.
pub fn write_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<PathBuf, HarnessError> {
    let dumps = generate_synthetic(spec)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    for (name, dump) in [
        ("id_train.hsd", &dumps.id_train),
        ("id_test.hsd", &dumps.id_test),
        ("ood.hsd", &dumps.ood_test),
    ] {
        let path = out_dir.join(name);
        write_dump_file(dump, &path).map_err(|e| HarnessError::hsd(&path, e))?;
    }
    let manifest = out_dir.join("manifest.txt");
    let text = format!(
        "# generated by `layerood synth`\nid_train = id_train.hsd\nid_test = id_test.hsd\nood = ood.hsd\nintra_pool = avg\nlayers = all\ndetector = mahalanobis\noutput = markdown\nseed = {}\n",
        spec.seed
    );
    fs::write(&manifest, text).map_err(|e| HarnessError::io(&manifest, e))?;
    Ok(manifest)
}
