//! Exact flat L2 nearest-neighbor search.
//!
//! [`FlatIndex`] stores rows verbatim and answers k-NN queries by brute
//! force. Distances are *squared* L2 throughout (cheaper, same ordering);
//! [`NeighborTable::squared`] records that so nobody has to remember.
//!
//! Two contract points that matter for reproducibility:
//!
//! * Ties are broken by the lower stored row index. Sorting is by the pair
//!   `(distance, index)`, so results are a pure function of the data, never
//!   of iteration order or thread count. With exact duplicate rows this can
//!   mean a query's own row is *not* its first neighbor under
//!   `include_self = true`; the duplicate with the smaller index wins.
//! * `include_self = false` excludes by row identity, not by zero distance.
//!   That is only meaningful when the queries *are* the indexed matrix, so
//!   the query matrix must have the same row count and row `i` is taken to
//!   be stored row `i`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/////////////////////////////////////////////////////////////////////////////
// Index
/////////////////////////////////////////////////////////////////////////////

/// Brute-force index over the rows of one matrix.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    data: DataMatrix,
}

/// Builds a [`FlatIndex`] over `x` (rows are copied in).
pub fn build_index(x: &DataMatrix) -> Result<FlatIndex> {
    Ok(FlatIndex { data: x.clone() })
}

/// Free-function form of [`FlatIndex::search`].
pub fn search_knn(
    index: &FlatIndex,
    queries: &DataMatrix,
    k: usize,
    include_self: bool,
) -> Result<NeighborTable> {
    index.search(queries, k, include_self)
}

/// Free-function form of [`FlatIndex::reconstruct`].
pub fn reconstruct(index: &FlatIndex, i: usize) -> Result<Vec<f64>> {
    index.reconstruct(i)
}

impl FlatIndex {
    pub fn len(&self) -> usize {
        self.data.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires a non-empty matrix
    }

    pub fn dim(&self) -> usize {
        self.data.n_cols()
    }

    /// Returns stored row `i` exactly as it went in.
    pub fn reconstruct(&self, i: usize) -> Result<Vec<f64>> {
        if i >= self.len() {
            return Err(Error::contract(format!(
                "row {i} out of bounds for index of {} rows",
                self.len()
            )));
        }
        Ok(self.data.row_slice(i).to_vec())
    }

    /// k nearest stored rows for every query row, squared L2.
    ///
    /// `include_self = true` ranks all stored rows; `include_self = false`
    /// drops stored row `i` from query `i`'s candidates and therefore
    /// requires `queries.n_rows() == self.len()`. `k` must not exceed the
    /// number of candidates.
    pub fn search(
        &self,
        queries: &DataMatrix,
        k: usize,
        include_self: bool,
    ) -> Result<NeighborTable> {
        let n = self.len();
        let d = self.dim();
        if queries.n_cols() != d {
            return Err(Error::contract(format!(
                "query dimension {} does not match index dimension {d}",
                queries.n_cols()
            )));
        }
        if !include_self && queries.n_rows() != n {
            return Err(Error::contract(format!(
                "self-exclusion requires queries to be the indexed matrix: \
                 {} query rows vs {n} stored rows",
                queries.n_rows()
            )));
        }
        let candidates = if include_self { n } else { n - 1 };
        if k == 0 || k > candidates {
            return Err(Error::contract(format!(
                "k = {k} outside valid range 1..={candidates} \
                 (n = {n}, include_self = {include_self})"
            )));
        }

        let nq = queries.n_rows();
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..nq)
            .into_par_iter()
            .map(|qi| {
                let q = queries.row_slice(qi);
                let skip = if include_self { usize::MAX } else { qi };
                let mut cand: Vec<(f64, usize)> = Vec::with_capacity(candidates);
                for si in 0..n {
                    if si == skip {
                        continue;
                    }
                    cand.push((sq_dist(q, self.data.row_slice(si)), si));
                }
                // (distance, index) lexicographic; distances are finite so
                // the comparison is total.
                let by_pair = |a: &(f64, usize), b: &(f64, usize)| {
                    a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
                };
                if k < cand.len() {
                    cand.select_nth_unstable_by(k - 1, by_pair);
                    cand.truncate(k);
                }
                cand.sort_unstable_by(by_pair);
                (
                    cand.iter().map(|&(_, i)| i).collect(),
                    cand.iter().map(|&(dist, _)| dist).collect(),
                )
            })
            .collect();

        let mut indices = Vec::with_capacity(nq * k);
        let mut distances = Vec::with_capacity(nq * k);
        for (idx, dst) in rows {
            indices.extend(idx);
            distances.extend(dst);
        }
        Ok(NeighborTable {
            n_queries: nq,
            k,
            squared: true,
            indices,
            distances,
        })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

/////////////////////////////////////////////////////////////////////////////
// Results
/////////////////////////////////////////////////////////////////////////////

/// Neighbor ids and distances for a batch of queries, row-major `n x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    n_queries: usize,
    k: usize,
    /// Always true for [`FlatIndex`]: distances are squared L2.
    pub squared: bool,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborTable {
    pub fn n_queries(&self) -> usize {
        self.n_queries
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Neighbor ids of query `q`, nearest first.
    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.indices[q * self.k..(q + 1) * self.k]
    }

    /// Squared distances aligned with [`NeighborTable::neighbors`].
    pub fn distances(&self, q: usize) -> &[f64] {
        &self.distances[q * self.k..(q + 1) * self.k]
    }
}
