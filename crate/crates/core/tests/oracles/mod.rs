//! Brute-force reference implementations, written straight from the
//! definitions and sharing no code with the library paths they check.
#![allow(dead_code, clippy::needless_range_loop)]

use layerood_core::dump::HiddenStateRecord;

/// O(m * n) pairwise AUROC with half credit for ties.
pub fn pairwise_auroc(id: &[f64], ood: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &i in id {
        for &o in ood {
            if i > o {
                wins += 1.0;
            } else if i == o {
                wins += 0.5;
            }
        }
    }
    wins / (id.len() * ood.len()) as f64
}

/// Per-class means and the shared covariance with divisor N, one entry at a time.
pub fn naive_class_stats(rows: &[Vec<f64>], labels: &[usize]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d = rows[0].len();
    let c = labels.iter().max().unwrap() + 1;
    let mut means = vec![vec![0.0; d]; c];
    for class in 0..c {
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == class)
            .map(|(r, _)| r)
            .collect();
        if members.is_empty() {
            continue;
        }
        for k in 0..d {
            means[class][k] = members.iter().map(|r| r[k]).sum::<f64>() / members.len() as f64;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for (r, &l) in rows.iter().zip(labels) {
                acc += (r[i] - means[l][i]) * (r[j] - means[l][j]);
            }
            cov[i][j] = acc / rows.len() as f64;
        }
    }
    (means, cov)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// k-distance of `x` over `train`, skipping index `skip`: the smallest
/// radius that contains at least `k` points.
fn k_distance(train: &[Vec<f64>], x: &[f64], skip: Option<usize>, k: usize) -> f64 {
    let ds: Vec<f64> = train
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(_, p)| dist(x, p))
        .collect();
    let mut best = f64::INFINITY;
    for &r in &ds {
        if r < best && ds.iter().filter(|&&v| v <= r).count() >= k {
            best = r;
        }
    }
    best
}

fn neighbors(train: &[Vec<f64>], x: &[f64], skip: Option<usize>, k: usize) -> Vec<usize> {
    let r = k_distance(train, x, skip, k);
    (0..train.len())
        .filter(|&j| Some(j) != skip && dist(x, &train[j]) <= r)
        .collect()
}

fn lrd(train: &[Vec<f64>], x: &[f64], skip: Option<usize>, k: usize, eps: f64) -> f64 {
    let nb = neighbors(train, x, skip, k);
    let reach: f64 = nb
        .iter()
        .map(|&o| dist(x, &train[o]).max(k_distance(train, &train[o], Some(o), k)))
        .sum();
    1.0 / (reach / nb.len() as f64 + eps)
}

/// Novelty-mode LOF of `query` against `train`.
pub fn brute_lof(train: &[Vec<f64>], k: usize, query: &[f64], eps: f64) -> f64 {
    let nb = neighbors(train, query, None, k);
    let mean_lrd: f64 = nb
        .iter()
        .map(|&o| lrd(train, &train[o], Some(o), k, eps))
        .sum::<f64>()
        / nb.len() as f64;
    mean_lrd / lrd(train, query, None, k, eps)
}

/// Token average of every layer 1..=L, then the mean of those L vectors.
pub fn avg_avg_double_loop(r: &HiddenStateRecord) -> Vec<f64> {
    let l = r.num_hidden_layers();
    let n = r.token_count();
    let d = r.hidden_dim();
    let mut out = vec![0.0; d];
    for k in 0..d {
        let mut layer_sum = 0.0;
        for layer in 1..=l {
            let mut tok_sum = 0.0;
            for j in 0..n {
                tok_sum += f64::from(r.hidden()[(layer * n + j) * d + k]);
            }
            layer_sum += tok_sum / n as f64;
        }
        out[k] = layer_sum / l as f64;
    }
    out
}

/// Max over i, j of |a - b| divided by max |b| (or 1 when b is all zero).
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}
