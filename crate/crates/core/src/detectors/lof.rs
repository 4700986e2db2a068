//! Local outlier factor in novelty mode.
//!
//! Training points get their k-distance and local reachability density
//! (lrd) cached at fit time. A query's neighborhood is taken among the
//! training points only, so a query never counts itself. Neighborhoods
//! include every point tied with the k-th distance.

use alloc::vec::Vec;

use crate::pooling::Embeddings;
use crate::{CoreError, Result};

/// Neighborhood size used when none is configured.
pub const DEFAULT_LOF_K: usize = 20;

/// Added to the mean reachability distance before inverting it, so that
/// exact duplicates give a large but finite density.
pub const LRD_EPSILON: f64 = 1e-10;

/// `requested` (or the default), clamped to `n - 1`.
pub fn effective_k(requested: Option<usize>, n: usize) -> usize {
    requested.unwrap_or(DEFAULT_LOF_K).min(n.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LofModel {
    train: Embeddings,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// k-distance and the `(index, distance)` pairs within it.
fn neighborhood(mut dists: Vec<(usize, f64)>, k: usize) -> (f64, Vec<(usize, f64)>) {
    dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let k_dist = dists[k - 1].1;
    dists.retain(|&(_, d)| d <= k_dist);
    (k_dist, dists)
}

impl LofModel {
    pub fn fit(train: Embeddings, k: usize) -> Result<Self> {
        let n = train.rows();
        if k < 1 || k >= n {
            return Err(CoreError::InvalidNeighborhood { k, n });
        }
        if train.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("embeddings"));
        }
        let first = train.row(0);
        if train.iter_rows().all(|r| r == first) {
            return Err(CoreError::DegenerateTraining);
        }

        let mut k_distance = Vec::with_capacity(n);
        let mut neighbors = Vec::with_capacity(n);
        for i in 0..n {
            let p = train.row(i);
            let dists = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, euclidean(p, train.row(j))))
                .collect();
            let (kd, nb) = neighborhood(dists, k);
            k_distance.push(kd);
            neighbors.push(nb);
        }
        let lrd = neighbors
            .iter()
            .map(|nb| Self::density(nb, &k_distance))
            .collect();
        Ok(Self {
            train,
            k,
            k_distance,
            lrd,
        })
    }

    fn density(neighbors: &[(usize, f64)], k_distance: &[f64]) -> f64 {
        let total: f64 = neighbors.iter().map(|&(o, d)| d.max(k_distance[o])).sum();
        1.0 / (total / neighbors.len() as f64 + LRD_EPSILON)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn k_distances(&self) -> &[f64] {
        &self.k_distance
    }

    pub fn densities(&self) -> &[f64] {
        &self.lrd
    }

    pub fn train(&self) -> &Embeddings {
        &self.train
    }

    /// Local outlier factor of `query` against the training set (~1 for inliers).
    pub fn local_outlier_factor(&self, query: &[f64]) -> Result<f64> {
        if query.len() != self.train.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.train.dim(),
                actual: query.len(),
            });
        }
        if query.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("query"));
        }
        let dists = self
            .train
            .iter_rows()
            .enumerate()
            .map(|(j, r)| (j, euclidean(query, r)))
            .collect();
        let (_, nb) = neighborhood(dists, self.k);
        let lrd_q = Self::density(&nb, &self.k_distance);
        let mean_lrd: f64 = nb.iter().map(|&(o, _)| self.lrd[o]).sum::<f64>() / nb.len() as f64;
        Ok(mean_lrd / lrd_q)
    }

    /// `-LOF(query)`: higher means more in-distribution.
    pub fn score(&self, query: &[f64]) -> Result<f64> {
        self.local_outlier_factor(query).map(|lof| -lof)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid() -> Embeddings {
        let rows: Vec<[f64; 2]> = (0..10)
            .flat_map(|x| (0..10).map(move |y| [x as f64, y as f64]))
            .collect();
        Embeddings::from_rows(2, &rows).unwrap()
    }

    #[test]
    fn grid_interior_and_far_query() {
        let m = LofModel::fit(grid(), 4).unwrap();
        let inner = m.local_outlier_factor(&[5.0, 5.0]).unwrap();
        assert!((0.9..=1.1).contains(&inner), "{inner}");
        assert!(m.score(&[1000.0, 1000.0]).unwrap() < -10.0);
    }

    #[test]
    fn two_points_midpoint() {
        let train = Embeddings::from_rows(1, &[[0.0], [2.0]]).unwrap();
        let m = LofModel::fit(train, 1).unwrap();
        // k-distances are both 2, so reach-dist from the midpoint is 2 for either
        // neighbor and every density is 1 / (2 + eps).
        assert_eq!(m.k_distances(), &[2.0, 2.0]);
        let lof = m.local_outlier_factor(&[1.0]).unwrap();
        assert!(lof.is_finite());
        assert!((lof - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_enter_the_neighborhood() {
        let train = Embeddings::from_rows(
            2,
            &[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [5.0, 5.0]],
        )
        .unwrap();
        let m = LofModel::fit(train, 1).unwrap();
        // Point 0 has three neighbors tied at distance 1.
        assert_eq!(m.k_distances()[0], 1.0);
        let dists = vec![(1, 1.0), (2, 1.0), (3, 1.0), (4, 7.0)];
        assert_eq!(neighborhood(dists, 1).1.len(), 3);
    }

    #[test]
    fn fit_errors() {
        let same = Embeddings::from_rows(1, &[[1.0], [1.0], [1.0]]).unwrap();
        assert_eq!(LofModel::fit(same, 1), Err(CoreError::DegenerateTraining));
        assert!(matches!(
            LofModel::fit(grid(), 100),
            Err(CoreError::InvalidNeighborhood { k: 100, n: 100 })
        ));
        assert!(LofModel::fit(grid(), 0).is_err());
        assert_eq!(effective_k(None, 8), 7);
        assert_eq!(effective_k(None, 500), 20);
        assert_eq!(effective_k(Some(4), 500), 4);
    }
}
