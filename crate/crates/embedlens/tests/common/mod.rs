//! Reference implementations for the acceptance tests.
//!
//! Everything here recomputes the metrics from their definitions with the
//! plainest possible code: full distance matrices, full sorts, explicit
//! set differences, and nalgebra (LU inverse / SVD pseudo-inverse) for the
//! linear algebra. None of it shares a code path with the library.

use embedlens::DataMatrix;
use nalgebra::DMatrix;

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

// all rows except q, sorted by (squared distance to q, index)
fn others_by_distance(m: &DataMatrix, q: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m.n_rows()).filter(|&j| j != q).collect();
    idx.sort_by(|&a, &b| {
        let da = sq_dist(m.row_slice(q), m.row_slice(a));
        let db = sq_dist(m.row_slice(q), m.row_slice(b));
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    idx
}

// 1-based position of `target` in `order`
fn rank_in(order: &[usize], target: usize) -> usize {
    order.iter().position(|&j| j == target).unwrap() + 1
}

pub struct OracleRanks {
    pub ar: f64,
    pub anr: f64,
    pub mrr: f64,
    pub trustworthiness: f64,
    pub continuity: f64,
}

pub fn oracle_rank_metrics(x: &DataMatrix, z: &DataMatrix, k: usize) -> OracleRanks {
    let n = x.n_rows();
    let x_order: Vec<Vec<usize>> = (0..n).map(|i| others_by_distance(x, i)).collect();
    let z_order: Vec<Vec<usize>> = (0..n).map(|i| others_by_distance(z, i)).collect();

    let mut ar = 0.0;
    let mut anr = 0.0;
    let mut mrr = 0.0;
    for i in 0..n {
        let mut rank_sum = 0.0;
        for &j in &x_order[i][..k] {
            rank_sum += rank_in(&z_order[i], j) as f64;
        }
        ar += rank_sum / k as f64;
        anr += rank_sum / (k as f64 * n as f64);
        mrr += 1.0 / rank_in(&z_order[i], x_order[i][0]) as f64;
    }
    ar /= n as f64;
    anr /= n as f64;
    mrr /= n as f64;

    // trustworthiness penalizes embedding neighbors that are not original
    // neighbors by their original rank excess; continuity is the mirror
    let scale = 2.0 / (n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0));
    let mut t_sum = 0.0;
    let mut c_sum = 0.0;
    for i in 0..n {
        for &j in &z_order[i][..k] {
            if !x_order[i][..k].contains(&j) {
                t_sum += (rank_in(&x_order[i], j) - k) as f64;
            }
        }
        for &j in &x_order[i][..k] {
            if !z_order[i][..k].contains(&j) {
                c_sum += (rank_in(&z_order[i], j) - k) as f64;
            }
        }
    }

    OracleRanks {
        ar,
        anr,
        mrr,
        trustworthiness: 1.0 - scale * t_sum,
        continuity: 1.0 - scale * c_sum,
    }
}

// covariance of the rows of `x`, n - 1 divisor, via nalgebra
fn covariance_matrix(x: &DataMatrix) -> DMatrix<f64> {
    let (n, d) = (x.n_rows(), x.n_cols());
    let mut centered = DMatrix::zeros(n, d);
    for c in 0..d {
        let mean: f64 = (0..n).map(|i| x.row_slice(i)[c]).sum::<f64>() / n as f64;
        for i in 0..n {
            centered[(i, c)] = x.row_slice(i)[c] - mean;
        }
    }
    centered.transpose() * centered / (n as f64 - 1.0)
}

// LU inverse when it exists, SVD pseudo-inverse otherwise
fn invert_or_pinv(s: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(inv) = s.clone().try_inverse() {
        // LU succeeds on some numerically singular matrices; only trust it
        // when it actually inverts
        let eye = DMatrix::<f64>::identity(s.nrows(), s.ncols());
        if ((s * &inv) - &eye).norm() < 1e-6 * (1.0 + s.norm()) {
            return inv;
        }
    }
    let sigma_max = s.clone().svd(false, false).singular_values.max();
    s.clone()
        .pseudo_inverse(1e-10 * sigma_max)
        .expect("SVD pseudo-inverse")
}

fn mahalanobis(a: &[f64], b: &[f64], inv: &DMatrix<f64>) -> f64 {
    let d = a.len();
    let diff = DMatrix::from_fn(d, 1, |r, _| a[r] - b[r]);
    let q = (diff.transpose() * inv * diff)[(0, 0)];
    q.max(0.0).sqrt()
}

// k nearest rows by (squared L2, index), the query row itself included as
// a candidate when asked (it then leads with distance 0)
fn knn_with_self(m: &DataMatrix, q: usize, k: usize, include_self: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m.n_rows())
        .filter(|&j| include_self || j != q)
        .collect();
    idx.sort_by(|&a, &b| {
        let da = sq_dist(m.row_slice(q), m.row_slice(a));
        let db = sq_dist(m.row_slice(q), m.row_slice(b));
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

pub fn oracle_idpe(
    x: &DataMatrix,
    z: &DataMatrix,
    k: usize,
    consistent: bool,
    include_self: bool,
) -> f64 {
    let n = x.n_rows();
    let inv = invert_or_pinv(&covariance_matrix(x));
    let mut acc = 0.0;
    for i in 0..n {
        let x_nbrs = knn_with_self(x, i, k, include_self);
        let z_nbrs = knn_with_self(z, i, k, include_self);
        for pos in 0..k {
            if consistent {
                let da = mahalanobis(x.row_slice(i), x.row_slice(x_nbrs[pos]), &inv);
                let db = mahalanobis(x.row_slice(i), x.row_slice(z_nbrs[pos]), &inv);
                acc += (da - db).abs();
            } else {
                let true_d = sq_dist(x.row_slice(i), x.row_slice(x_nbrs[pos]));
                let md = mahalanobis(x.row_slice(i), x.row_slice(z_nbrs[pos]), &inv);
                acc += (true_d - md) * (true_d - md);
            }
        }
    }
    if consistent {
        acc / n as f64
    } else {
        acc / (n * k) as f64
    }
}

/// The reference IDPE procedure, step for step: index the original data,
/// take each point's k nearest with itself included, do the same in the
/// embedding, then accumulate squared differences between the original
/// k-NN distances (squared L2, as the index reports them) and the
/// Mahalanobis distances from each point to its embedding neighbors.
pub fn box1_reference(x: &DataMatrix, z: &DataMatrix, k: usize) -> f64 {
    let n = x.n_rows();

    let mut truth_distances = Vec::with_capacity(n);
    let mut test_indexes = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = knn_with_self(x, i, k, true);
        truth_distances.push(
            nbrs.iter()
                .map(|&j| sq_dist(x.row_slice(i), x.row_slice(j)))
                .collect::<Vec<f64>>(),
        );
        test_indexes.push(knn_with_self(z, i, k, true));
    }

    let s = covariance_matrix(x);
    let s_inv = invert_or_pinv(&s);

    let mut total = 0.0;
    for i in 0..n {
        for j in 0..k {
            let md = mahalanobis(
                x.row_slice(i),
                x.row_slice(test_indexes[i][j]),
                &s_inv,
            );
            let diff = truth_distances[i][j] - md;
            total += diff * diff;
        }
    }
    total / (n * k) as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Relative closeness with a floor of 1 on the reference magnitude.
pub fn close_rel(actual: f64, reference: f64, tol: f64) -> bool {
    (actual - reference).abs() <= tol * reference.abs().max(1.0)
}
