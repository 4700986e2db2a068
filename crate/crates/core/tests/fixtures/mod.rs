//! Random data generators shared by integration and acceptance tests.
#![allow(dead_code)]

use layerood_core::detectors::GaussianDiscriminantModel;
use layerood_core::pooling::Embeddings;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; keeps the test free of extra distribution crates.
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn labeled_cloud(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    classes: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..d).map(|_| 3.0 * gaussian(rng)).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let rows = labels
        .iter()
        .map(|&c| centers[c].iter().map(|m| m + gaussian(rng)).collect())
        .collect();
    (rows, labels)
}

/// x -> A x + b with A = c Q1 diag(s) Q2.
pub struct Affine {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    // Gram-Schmidt on a Gaussian matrix.
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        for u in &q {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    q
}

/// `s` spans `2^[-log2_spread/2, log2_spread/2]`, so the condition number of A
/// is at most `2^log2_spread`; the global scale `c` spans two decades.
pub fn random_affine(rng: &mut ChaCha8Rng, d: usize, log2_spread: f64) -> Affine {
    let q1 = random_orthogonal(rng, d);
    let q2 = random_orthogonal(rng, d);
    let c = 10f64.powf(rng.random_range(-1.0..1.0));
    let half = log2_spread / 2.0;
    let s: Vec<f64> = (0..d)
        .map(|_| c * 2f64.powf(rng.random_range(-half..=half)))
        .collect();
    let a = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| q1[i][k] * s[k] * q2[k][j]).sum())
                .collect()
        })
        .collect();
    let b = (0..d).map(|_| 5.0 * gaussian(rng)).collect();
    Affine { a, b }
}

impl Affine {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, b)| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect()
    }
}

/// Worst relative score deviation after refitting on mapped data, over `maps` random maps.
pub fn affine_deviation(seed: u64, maps: usize, log2_spread: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..maps {
        let d = rng.random_range(2..=8);
        let (rows, labels) = labeled_cloud(&mut rng, 150, d, 3);
        let (queries, _) = labeled_cloud(&mut rng, 40, d, 2);
        let map = random_affine(&mut rng, d, log2_spread);
        let base =
            GaussianDiscriminantModel::fit(&Embeddings::from_rows(d, &rows).unwrap(), &labels)
                .unwrap();
        let mapped_rows: Vec<Vec<f64>> = rows.iter().map(|r| map.apply(r)).collect();
        let mapped = GaussianDiscriminantModel::fit(
            &Embeddings::from_rows(d, &mapped_rows).unwrap(),
            &labels,
        )
        .unwrap();
        for q in queries.iter().chain(&rows[..10]) {
            let s0 = base.score(q).unwrap();
            let s1 = mapped.score(&map.apply(q)).unwrap();
            worst = worst.max((s0 - s1).abs() / s0.abs().max(1e-12));
            assert_eq!(
                base.predict(q).unwrap(),
                mapped.predict(&map.apply(q)).unwrap()
            );
        }
    }
    worst
}
