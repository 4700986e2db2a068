mod fixtures;
mod oracles;

use layerood_core::detectors::{
    effective_k, fit_ensemble, score_energy, score_msp, ClassStatistics, DetectorSpec,
    FittedDetector, GaussianDiscriminantModel, LofModel, LRD_EPSILON,
};
use layerood_core::dump::{DatasetDump, HiddenStateRecord};
use layerood_core::pooling::{Embeddings, IntraPool, LayerSet, PoolingSpec};
use layerood_core::CoreError;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fixtures::{affine_deviation, gaussian, labeled_cloud};

#[test]
fn covariance_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let d = rng.random_range(1..=16);
        let n = rng.random_range(2..=200);
        let c = rng.random_range(1..=4);
        let (rows, labels) = labeled_cloud(&mut rng, n, d, c);
        let stats =
            ClassStatistics::compute(&Embeddings::from_rows(d, &rows).unwrap(), &labels).unwrap();
        let (means, cov) = oracles::naive_class_stats(&rows, &labels);
        let flat: Vec<f64> = cov.concat();
        assert!(oracles::max_rel_diff(&stats.covariance, &flat) < 1e-12);
        for (class, mean) in means.iter().enumerate() {
            if stats.counts[class] > 0 {
                assert!(
                    oracles::max_rel_diff(&stats.means[class * d..(class + 1) * d], mean) < 1e-12
                );
            }
        }
    }
}

#[test]
fn precision_is_symmetric_and_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // N < d: singular scatter, only the ridge keeps it invertible.
    let (rows, labels) = labeled_cloud(&mut rng, 5, 12, 2);
    let m = GaussianDiscriminantModel::fit(&Embeddings::from_rows(12, &rows).unwrap(), &labels)
        .unwrap();
    let p = m.precision();
    for i in 0..12 {
        for j in 0..12 {
            assert_eq!(p[i * 12 + j], p[j * 12 + i]);
        }
    }
    assert_eq!(m.total_count(), 5);
    assert_eq!(m.class_counts(), &[3, 2]);
    for r in &rows {
        assert!(m.score(r).unwrap() <= 0.0);
    }
}

#[test]
fn mahalanobis_affine_invariance() {
    // Condition number <= 1.2, any global scale and translation.
    let worst = affine_deviation(3, 20, 0.26);
    assert!(worst < 1e-6, "worst relative deviation {worst:e}");
}

#[test]
fn affine_deviation_is_bounded_by_the_ridge() {
    // The trace-scaled ridge is not invariant under anisotropic maps; the
    // deviation it causes grows like RIDGE_SCALE * cond(A)^2.
    let worst = affine_deviation(8, 20, 2.0);
    assert!(
        worst < 4.0 * 16.0 * layerood_core::detectors::RIDGE_SCALE,
        "{worst:e}"
    );
    assert!(
        worst > 1e-8,
        "a cond-4 map should expose the ridge bias, got {worst:e}"
    );
}

#[test]
fn lof_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..20 {
        let d = rng.random_range(1..=5);
        let n = rng.random_range(2..=100);
        let requested = [Some(1), Some(4), None][case % 3];
        let k = effective_k(requested, n).clamp(1, n - 1);
        let train: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| gaussian(&mut rng)).collect())
            .collect();
        let model = LofModel::fit(Embeddings::from_rows(d, &train).unwrap(), k).unwrap();
        let mut queries: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..d).map(|_| 2.0 * gaussian(&mut rng)).collect())
            .collect();
        queries.push(train[0].clone());
        for q in &queries {
            let got = model.local_outlier_factor(q).unwrap();
            let want = oracles::brute_lof(&train, k, q, LRD_EPSILON);
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                "case {case}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn lof_grows_radially_outside_the_cloud() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let train: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..2).map(|_| gaussian(&mut rng)).collect())
        .collect();
    let model = LofModel::fit(Embeddings::from_rows(2, &train).unwrap(), 5).unwrap();
    let diameter = train
        .iter()
        .flat_map(|a| {
            train
                .iter()
                .map(move |b| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
        })
        .fold(0.0, f64::max);
    let dir = [0.6, 0.8];
    let mut prev = 0.0;
    for step in 1..20 {
        let r = diameter * (1.0 + step as f64);
        let lof = model
            .local_outlier_factor(&[dir[0] * r, dir[1] * r])
            .unwrap();
        assert!(
            lof > prev,
            "LOF must increase with distance ({prev} -> {lof})"
        );
        prev = lof;
    }
}

#[test]
fn lof_on_dense_interior_is_near_one() {
    let rows: Vec<[f64; 2]> = (0..20)
        .flat_map(|x| (0..20).map(move |y| [x as f64, y as f64]))
        .collect();
    let model = LofModel::fit(Embeddings::from_rows(2, &rows).unwrap(), 8).unwrap();
    for x in 5..15 {
        for y in 5..15 {
            let q = [x as f64 + 0.5, y as f64 + 0.5];
            let lof = model.local_outlier_factor(&q).unwrap();
            assert!((0.8..=1.2).contains(&lof), "{q:?}: {lof}");
        }
    }
}

proptest! {
    #[test]
    fn logit_shift_identities(
        logits in prop::collection::vec((-200i32..200).prop_map(|q| q as f32 / 4.0), 2..8),
        shift in -100i32..100,
    ) {
        // Quarter-step logits and integer shifts keep the shifted f32 values exact.
        let a = shift as f32;
        let shifted: Vec<f32> = logits.iter().map(|v| v + a).collect();
        let e0 = score_energy(&logits, 1.0).unwrap();
        let e1 = score_energy(&shifted, 1.0).unwrap();
        prop_assert!((e1 - (e0 + f64::from(a))).abs() <= 1e-12 * (1.0 + e0.abs() + f64::from(a).abs()));
        let m0 = score_msp(&logits).unwrap();
        let m1 = score_msp(&shifted).unwrap();
        prop_assert!((m0 - m1).abs() <= 1e-12);
        prop_assert!(m0 > 0.0 && m0 <= 1.0);
    }

    #[test]
    fn mahalanobis_score_never_positive(seed in 0u64..1000, qx in -20.0f64..20.0, qy in -20.0f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, labels) = labeled_cloud(&mut rng, 20, 2, 2);
        let m = GaussianDiscriminantModel::fit(&Embeddings::from_rows(2, &rows).unwrap(), &labels).unwrap();
        prop_assert!(m.score(&[qx, qy]).unwrap() <= 0.0);
        prop_assert!(m.score(m.class_mean(1)).unwrap().abs() < 1e-9);
    }
}

fn random_dump(rng: &mut ChaCha8Rng, n: usize, layers: usize, d: usize) -> DatasetDump {
    let records = (0..n)
        .map(|i| {
            let tokens = rng.random_range(1..5);
            let hidden = (0..(layers + 1) * tokens * d)
                .map(|_| (gaussian(rng) + (i % 2) as f64) as f32)
                .collect();
            HiddenStateRecord::new(
                (i % 2) as i32,
                layers + 1,
                tokens,
                d,
                vec![0.0, 1.0],
                hidden,
            )
            .unwrap()
        })
        .collect();
    DatasetDump::new((layers + 1) as u16, d as u32, 2, records).unwrap()
}

#[test]
fn ensemble_single_layer_equals_mahalanobis() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let train = random_dump(&mut rng, 40, 3, 3);
    let test = random_dump(&mut rng, 10, 3, 3);
    let labels: Vec<usize> = train.labels().iter().map(|&l| l as usize).collect();
    for intra in [IntraPool::Cls, IntraPool::TokenAverage] {
        for layer in 1..=3 {
            let set = LayerSet::single(layer, 3).unwrap();
            let ens = fit_ensemble(&train, &labels, intra, &set).unwrap();
            let spec = PoolingSpec::new(intra, set);
            let single = FittedDetector::fit(&DetectorSpec::Mahalanobis, &spec, &train).unwrap();
            let a = FittedDetector::Ensemble(ens).score_dump(&test).unwrap();
            let b = single.score_dump(&test).unwrap();
            let bits = |s: &[f64]| s.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a.scores()), bits(b.scores()));
        }
    }
}

#[test]
fn ensemble_sums_hand_set_layers() {
    // L = 2, d = 1, one class; layer means 0 and 10, both with variance 1/4
    // per pooled value (points mean +- 0.5).
    let mk =
        |l1: f32, l2: f32| HiddenStateRecord::new(0, 3, 1, 1, vec![], vec![0.0, l1, l2]).unwrap();
    let train = DatasetDump::new(3, 1, 0, vec![mk(-0.5, 9.5), mk(0.5, 10.5)]).unwrap();
    let ens = fit_ensemble(
        &train,
        &[0, 0],
        IntraPool::TokenAverage,
        &LayerSet::new(vec![1, 2], 2).unwrap(),
    )
    .unwrap();
    let ridge = 1e-6 * 0.25;
    let per_layer = |z: f64| -(z * z) / (0.25 + ridge);
    let got = ens.score(&mk(1.0, 9.0)).unwrap();
    let want = per_layer(1.0) + per_layer(-1.0);
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    assert_eq!(ens.score(&mk(0.0, 10.0)).unwrap(), 0.0);
    assert_eq!(ens.layer_scores(&mk(1.0, 10.0)).unwrap()[1], 0.0);
}

#[test]
fn fitted_detector_requires_logits() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dump = random_dump(&mut rng, 6, 2, 2);
    let no_logits = DatasetDump::new(
        3,
        2,
        0,
        dump.records()
            .iter()
            .map(|r| {
                HiddenStateRecord::new(
                    r.label(),
                    3,
                    r.token_count(),
                    2,
                    vec![],
                    r.hidden().to_vec(),
                )
                .unwrap()
            })
            .collect(),
    )
    .unwrap();
    let spec = PoolingSpec::avg_avg(2).unwrap();
    for det in [DetectorSpec::Msp, DetectorSpec::Energy { temperature: 1.0 }] {
        assert!(matches!(
            FittedDetector::fit(&det, &spec, &no_logits),
            Err(CoreError::LogitsRequired(0))
        ));
        assert!(FittedDetector::fit(&det, &spec, &dump).is_ok());
    }
    assert!(FittedDetector::fit(&DetectorSpec::Lof { k: None }, &spec, &no_logits).is_ok());
    let unlabeled = DatasetDump::new(
        3,
        2,
        0,
        no_logits
            .records()
            .iter()
            .map(|r| {
                HiddenStateRecord::new(-1, 3, r.token_count(), 2, vec![], r.hidden().to_vec())
                    .unwrap()
            })
            .collect(),
    )
    .unwrap();
    assert!(matches!(
        FittedDetector::fit(&DetectorSpec::Mahalanobis, &spec, &unlabeled),
        Err(CoreError::LabelOutOfRange { .. })
    ));
}
