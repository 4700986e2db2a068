//! Benchmark runs and layer-subset sweeps.

use std::collections::HashSet;
use std::path::Path;
use std::thread;

use layerood_core::detectors::{
    class_labels, DetectorSpec, FittedDetector, GaussianDiscriminantModel,
};
use layerood_core::dump::DatasetDump;
use layerood_core::metrics::{evaluate, macro_average, MetricReport};
use layerood_core::pooling::{
    combine_layers, pool_dataset_per_layer, Embeddings, IntraPool, LayerSelection, PoolingSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hsd::read_dump_file;
use crate::manifest::BenchmarkConfig;
use crate::model_file::write_model_file;
use crate::report::{BenchmarkTable, ReportRow, SweepRow, SweepTable};
use crate::HarnessError;

/// ID train/test dumps and named OOD dumps sharing one geometry.
#[derive(Debug, Clone)]
pub struct Suite {
    pub id_train: DatasetDump,
    pub id_test: DatasetDump,
    pub ood: Vec<(String, DatasetDump)>,
}

impl Suite {
    pub fn new(
        id_train: DatasetDump,
        id_test: DatasetDump,
        ood: Vec<(String, DatasetDump)>,
    ) -> Result<Self, HarnessError> {
        if ood.is_empty() {
            return Err(HarnessError::Validation(
                "at least one OOD dump is required".into(),
            ));
        }
        let geometry = |d: &DatasetDump| {
            (
                d.header().num_layers_total,
                d.header().hidden_dim,
                d.header().num_classes,
            )
        };
        let expected = geometry(&id_train);
        let others =
            std::iter::once(("id_test", &id_test)).chain(ood.iter().map(|(n, d)| (n.as_str(), d)));
        for (name, dump) in others {
            let got = geometry(dump);
            if got != expected {
                return Err(HarnessError::Inconsistent(format!(
                    "{name} has (L+1, d, C) = {got:?}, id_train has {expected:?}"
                )));
            }
        }
        Ok(Self {
            id_train,
            id_test,
            ood,
        })
    }

    pub fn load(config: &BenchmarkConfig) -> Result<Self, HarnessError> {
        let read = |p: &Path| read_dump_file(p).map_err(|e| HarnessError::hsd(p, e));
        let ood = config
            .ood
            .iter()
            .map(|p| Ok((ood_name(p), read(p)?)))
            .collect::<Result<_, HarnessError>>()?;
        Self::new(read(&config.id_train)?, read(&config.id_test)?, ood)
    }

    pub fn num_hidden_layers(&self) -> usize {
        self.id_train.num_hidden_layers()
    }
}

fn ood_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads the dumps named by `config` and runs it.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkTable, HarnessError> {
    let suite = Suite::load(config)?;
    let (table, fitted) = evaluate_suite(&suite, config.intra, &config.layers, &config.detector)?;
    if let Some(path) = &config.model_out {
        let model = fitted.gaussian_model().ok_or_else(|| {
            HarnessError::Validation(format!(
                "model_out is only supported for mahalanobis, not {}",
                config.detector
            ))
        })?;
        write_model_file(model, path).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(table)
}

/// Fits `detector` on the ID train split once, then scores ID test and every OOD split.
pub fn evaluate_suite(
    suite: &Suite,
    intra: IntraPool,
    layers: &LayerSelection,
    detector: &DetectorSpec,
) -> Result<(BenchmarkTable, FittedDetector), HarnessError> {
    let pooling = PoolingSpec::new(intra, layers.resolve(suite.num_hidden_layers())?);
    let fitted = FittedDetector::fit(detector, &pooling, &suite.id_train)?;
    let id_scores = fitted.score_dump(&suite.id_test)?;

    let ood_scores = thread::scope(|s| {
        let handles: Vec<_> = suite
            .ood
            .iter()
            .map(|(_, dump)| s.spawn(|| fitted.score_dump(dump)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scoring thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let rows = suite
        .ood
        .iter()
        .zip(&ood_scores)
        .map(|((name, _), scores)| {
            Ok(ReportRow {
                ood_set: name.clone(),
                report: evaluate(id_scores.scores(), scores.scores())?,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let reports: Vec<MetricReport> = rows.iter().map(|r| r.report).collect();
    let pooling_label = if detector.needs_logits() {
        "logits".to_string()
    } else {
        format!("{} / {}", intra, layers)
    };
    let table = BenchmarkTable {
        detector: detector.to_string(),
        pooling: pooling_label,
        macro_average: macro_average(&reports)?,
        rows,
    };
    Ok((table, fitted))
}

/// Sweeps Mahalanobis over layer subsets of size `1..=max_k` as configured.
pub fn sweep_layer_subsets(
    config: &BenchmarkConfig,
    max_k: usize,
    budget: usize,
) -> Result<SweepTable, HarnessError> {
    if config.detector != DetectorSpec::Mahalanobis {
        return Err(HarnessError::Validation(format!(
            "sweep requires detector = mahalanobis, got {}",
            config.detector
        )));
    }
    // Fail on a bad budget before reading any dump.
    check_sweep_args(max_k, budget, usize::MAX)?;
    let suite = Suite::load(config)?;
    sweep_suite(&suite, config.intra, max_k, budget, config.seed)
}

fn check_sweep_args(max_k: usize, budget: usize, num_layers: usize) -> Result<(), HarnessError> {
    if budget < 1 {
        return Err(HarnessError::Validation("budget must be >= 1".into()));
    }
    if max_k < 1 || max_k > num_layers {
        return Err(HarnessError::Validation(format!(
            "max-k must be in 1..={num_layers}, got {max_k}"
        )));
    }
    Ok(())
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `1..=n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut current: Vec<usize> = (1..=k).collect();
    loop {
        out.push(current.clone());
        let Some(i) = (0..k).rev().find(|&i| current[i] < n - (k - 1 - i)) else {
            return out;
        };
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Up to `budget` subsets of size `k`: all of them when they fit, otherwise
/// `budget` distinct subsets drawn uniformly without replacement.
pub fn candidate_subsets(
    num_layers: usize,
    k: usize,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<usize>>, bool) {
    if binomial(num_layers, k) <= budget as u128 {
        return (combinations(num_layers, k), true);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(budget);
    while out.len() < budget {
        let mut subset: Vec<usize> = rand::seq::index::sample(rng, num_layers, k)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        subset.sort_unstable();
        if seen.insert(subset.clone()) {
            out.push(subset);
        }
    }
    (out, false)
}

fn combine_subset(per_layer: &[Embeddings], subset: &[usize]) -> Embeddings {
    let rows = per_layer[0].rows();
    let mut out = Embeddings::zeros(rows, per_layer[0].dim());
    for i in 0..rows {
        combine_layers(
            subset.iter().map(|&l| per_layer[l - 1].row(i)),
            out.row_mut(i),
        );
    }
    out
}

/// Sweep over an already loaded suite.
pub fn sweep_suite(
    suite: &Suite,
    intra: IntraPool,
    max_k: usize,
    budget: usize,
    seed: u64,
) -> Result<SweepTable, HarnessError> {
    let num_layers = suite.num_hidden_layers();
    check_sweep_args(max_k, budget, num_layers)?;
    let labels = class_labels(&suite.id_train.labels())?;
    let train = pool_dataset_per_layer(&suite.id_train, intra);
    let test = pool_dataset_per_layer(&suite.id_test, intra);
    let oods: Vec<Vec<Embeddings>> = suite
        .ood
        .iter()
        .map(|(_, d)| pool_dataset_per_layer(d, intra))
        .collect();

    let evaluate_subset = |subset: &[usize]| -> Result<MetricReport, HarnessError> {
        let model = GaussianDiscriminantModel::fit(&combine_subset(&train, subset), &labels)?;
        let id_scores = model.score_all(&combine_subset(&test, subset))?;
        let reports = oods
            .iter()
            .map(|per_layer| {
                Ok(evaluate(
                    &id_scores,
                    &model.score_all(&combine_subset(per_layer, subset))?,
                )?)
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Ok(macro_average(&reports)?)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(max_k);
    for k in 1..=max_k {
        let (subsets, exhaustive) = candidate_subsets(num_layers, k, budget, &mut rng);
        let mut best: Option<(Vec<usize>, MetricReport)> = None;
        for subset in &subsets {
            let report = evaluate_subset(subset)?;
            if best.as_ref().is_none_or(|(_, b)| report.auroc > b.auroc) {
                best = Some((subset.clone(), report));
            }
        }
        let (best_layers, macro_average) = best.expect("at least one subset per size");
        rows.push(SweepRow {
            size: k,
            evaluated: subsets.len(),
            exhaustive,
            best_layers,
            macro_average,
        });
    }
    Ok(SweepTable {
        intra: intra.to_string(),
        rows,
    })
}
