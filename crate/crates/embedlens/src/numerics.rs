//! Covariance estimation, guarded inversion, Mahalanobis distance, and
//! column standardization.
//!
//! The inversion path is the part that deserves care. Sample covariance of
//! wide data (more columns than rows) is singular by construction, and
//! near-duplicate columns push the condition number past what a plain
//! inverse can stomach. [`invert_covariance`] therefore takes an explicit
//! [`InversionPolicy`] and records which [`InversionStrategy`] was actually
//! used, so downstream reports can surface it instead of silently returning
//! garbage.
//!
//! All decompositions are symmetric eigendecompositions; the inverse is
//! reconstructed as `V diag(1/lambda) V^T` over the retained spectrum. For
//! positive spectra the model also carries a whitening map `W` with
//! `W^T W = inv`, which turns Mahalanobis distances into plain Euclidean
//! ones after a single matrix product. Batch callers use that; the scalar
//! [`mahalanobis_distance`] sticks to the quadratic form.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Condition numbers at or above this route `Auto` away from the exact
/// inverse.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative eigenvalue cutoff for the pseudo-inverse: components with
/// `|lambda| <= cutoff * max|lambda|` are treated as null directions.
pub const PSEUDO_RELATIVE_CUTOFF: f64 = 1e-10;

/// How a covariance matrix should be inverted.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionPolicy {
    /// Exact inverse when the condition number is below
    /// [`CONDITION_LIMIT`], otherwise fall back to the pseudo-inverse.
    Auto,
    /// Exact inverse or an error; no fallback.
    Exact,
    /// Always the eigenvalue-truncated pseudo-inverse.
    Pseudo,
    /// Invert `S + lambda I` instead of `S`.
    Ridge { lambda: f64 },
}

impl Default for InversionPolicy {
    fn default() -> Self {
        InversionPolicy::Auto
    }
}

/// What [`invert_covariance`] actually did.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionStrategy {
    Exact,
    /// `rank` is the number of retained eigenvalues.
    PseudoInverse { rank: usize },
    Ridge { lambda: f64 },
}

impl std::fmt::Display for InversionStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InversionStrategy::Exact => write!(f, "exact"),
            InversionStrategy::PseudoInverse { .. } => write!(f, "pseudo_inverse"),
            InversionStrategy::Ridge { .. } => write!(f, "ridge"),
        }
    }
}

/// A covariance matrix together with its (pseudo-)inverse and the metadata
/// needed to interpret distances computed against it.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    cov: Array2<f64>,
    inv: Array2<f64>,
    strategy: InversionStrategy,
    condition: f64,
    // Rows of W are scaled eigenvectors; W^T W equals `inv`. Present only
    // when the retained spectrum is strictly positive.
    whitener: Option<Array2<f64>>,
}

impl CovarianceModel {
    /// Covariance of `x`'s columns followed by [`invert_covariance`].
    pub fn fit(x: &DataMatrix, policy: InversionPolicy) -> Result<Self> {
        let cov = covariance(x)?;
        invert_covariance(&cov, policy)
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn covariance(&self) -> &Array2<f64> {
        &self.cov
    }

    pub fn inverse(&self) -> &Array2<f64> {
        &self.inv
    }

    pub fn strategy(&self) -> InversionStrategy {
        self.strategy
    }

    /// Ratio of the largest to smallest eigenvalue magnitude of the input
    /// covariance; `f64::INFINITY` for exactly singular input.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Maps rows of `m` into the space where Euclidean distance equals the
    /// Mahalanobis distance under this model. Returns an `n x r` array with
    /// `r` the retained rank. `None` when the retained spectrum is not
    /// strictly positive (then only the quadratic form is defined).
    pub fn whiten(&self, m: &DataMatrix) -> Option<Array2<f64>> {
        let w = self.whitener.as_ref()?;
        if m.n_cols() != self.dim() {
            return None;
        }
        Some(m.values().dot(&w.t()))
    }
}

/// Sample covariance of the columns of `x`, divisor `n - 1`.
///
/// Needs at least two rows. The result is exactly symmetric (the upper
/// triangle is computed and mirrored).
pub fn covariance(x: &DataMatrix) -> Result<Array2<f64>> {
    let n = x.n_rows();
    let d = x.n_cols();
    if n < 2 {
        return Err(Error::contract(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let data = x.as_slice();
    let mut means = vec![0.0f64; d];
    for row in data.chunks_exact(d) {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in means.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = Array2::<f64>::zeros((d, d));
    let mut centered = vec![0.0f64; d];
    for row in data.chunks_exact(d) {
        for j in 0..d {
            centered[j] = row[j] - means[j];
        }
        for p in 0..d {
            let cp = centered[p];
            let dest = &mut cov.as_slice_mut().unwrap()[p * d..(p + 1) * d];
            for q in p..d {
                dest[q] += cp * centered[q];
            }
        }
    }
    let denom = (n - 1) as f64;
    for p in 0..d {
        for q in p..d {
            let v = cov[[p, q]] / denom;
            cov[[p, q]] = v;
            cov[[q, p]] = v;
        }
    }
    Ok(cov)
}

/// Inverts a symmetric matrix under the given policy.
///
/// The input must be square and symmetric (checked to a relative tolerance
/// of 1e-8). The returned model records the strategy that was used:
///
/// * `Auto` picks the exact inverse while the condition number stays below
///   [`CONDITION_LIMIT`] and the matrix is numerically full rank, otherwise
///   the pseudo-inverse.
/// * `Exact` returns [`Error::Singular`] instead of falling back.
/// * `Pseudo` always truncates: eigenvalues with magnitude at most
///   [`PSEUDO_RELATIVE_CUTOFF`] times the largest are dropped.
/// * `Ridge` inverts `S + lambda I`; `lambda` must be positive and large
///   enough to make the shifted spectrum strictly positive.
pub fn invert_covariance(s: &Array2<f64>, policy: InversionPolicy) -> Result<CovarianceModel> {
    let d = s.nrows();
    if d == 0 || s.ncols() != d {
        return Err(Error::contract(format!(
            "expected a non-empty square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let mut max_abs = 0.0f64;
    for v in s.iter() {
        if !v.is_finite() {
            return Err(Error::degenerate("matrix contains non-finite entries"));
        }
        max_abs = max_abs.max(v.abs());
    }
    let sym_tol = 1e-8 * max_abs.max(1.0);
    for p in 0..d {
        for q in (p + 1)..d {
            if (s[[p, q]] - s[[q, p]]).abs() > sym_tol {
                return Err(Error::contract(format!(
                    "matrix is not symmetric at ({p}, {q})"
                )));
            }
        }
    }

    let dm = DMatrix::from_fn(d, d, |r, c| s[[r, c]]);
    let eig = SymmetricEigen::try_new(dm, f64::EPSILON, 0)
        .ok_or_else(|| Error::Convergence("symmetric eigendecomposition".into()))?;
    let lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let sigma_max = lambdas.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let sigma_min = lambdas
        .iter()
        .fold(f64::INFINITY, |a, &l| a.min(l.abs()));
    let condition = if sigma_min == 0.0 {
        f64::INFINITY
    } else {
        sigma_max / sigma_min
    };

    // (eigenvalue of the matrix actually inverted, eigenvector index)
    let (strategy, inverted): (InversionStrategy, Vec<(f64, usize)>) = match policy {
        InversionPolicy::Auto | InversionPolicy::Exact => {
            if sigma_min > 0.0 && condition < CONDITION_LIMIT {
                (
                    InversionStrategy::Exact,
                    lambdas.iter().copied().zip(0..d).collect(),
                )
            } else if matches!(policy, InversionPolicy::Exact) {
                return Err(Error::Singular(format!(
                    "condition number {condition:.3e} is at or above {CONDITION_LIMIT:.0e}"
                )));
            } else {
                pseudo_strategy(&lambdas, sigma_max)
            }
        }
        InversionPolicy::Pseudo => pseudo_strategy(&lambdas, sigma_max),
        InversionPolicy::Ridge { lambda } => {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(Error::contract(format!(
                    "ridge lambda must be positive and finite, got {lambda}"
                )));
            }
            let shifted: Vec<(f64, usize)> =
                lambdas.iter().map(|&l| l + lambda).zip(0..d).collect();
            if shifted.iter().any(|&(l, _)| l <= 0.0) {
                return Err(Error::Singular(format!(
                    "spectrum not positive after ridge shift {lambda:.3e}"
                )));
            }
            (InversionStrategy::Ridge { lambda }, shifted)
        }
    };

    if inverted.is_empty() {
        return Err(Error::Singular(
            "no eigenvalues survive the pseudo-inverse cutoff".into(),
        ));
    }

    // inv = sum over retained components of v (1/lambda) v^T
    let r = inverted.len();
    let mut scaled = DMatrix::<f64>::zeros(d, r);
    for (col, &(l, idx)) in inverted.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        for row in 0..d {
            scaled[(row, col)] = v[row] / l;
        }
    }
    let mut basis = DMatrix::<f64>::zeros(d, r);
    for (col, &(_, idx)) in inverted.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(idx));
    }
    let inv_dm = &scaled * basis.transpose();
    let inv = Array2::from_shape_fn((d, d), |(p, q)| {
        // mirror to kill round-off asymmetry from the matrix product
        0.5 * (inv_dm[(p, q)] + inv_dm[(q, p)])
    });

    let whitener = if inverted.iter().all(|&(l, _)| l > 0.0) {
        let mut w = Array2::<f64>::zeros((r, d));
        for (row, &(l, idx)) in inverted.iter().enumerate() {
            let scale = (1.0 / l).sqrt();
            for c in 0..d {
                w[[row, c]] = eig.eigenvectors[(c, idx)] * scale;
            }
        }
        Some(w)
    } else {
        None
    };

    Ok(CovarianceModel {
        cov: s.clone(),
        inv,
        strategy,
        condition,
        whitener,
    })
}

fn pseudo_strategy(lambdas: &[f64], sigma_max: f64) -> (InversionStrategy, Vec<(f64, usize)>) {
    let cutoff = PSEUDO_RELATIVE_CUTOFF * sigma_max;
    let kept: Vec<(f64, usize)> = lambdas
        .iter()
        .copied()
        .zip(0..lambdas.len())
        .filter(|&(l, _)| l.abs() > cutoff)
        .collect();
    (
        InversionStrategy::PseudoInverse { rank: kept.len() },
        kept,
    )
}

/// Mahalanobis distance `sqrt((a-b)^T inv (a-b))` under `model`.
///
/// Quadratic forms that round off slightly negative under a pseudo-inverse
/// are clamped to zero before the square root, so the result is always a
/// finite non-negative number.
pub fn mahalanobis_distance(a: &[f64], b: &[f64], model: &CovarianceModel) -> Result<f64> {
    let d = model.dim();
    if a.len() != d || b.len() != d {
        return Err(Error::contract(format!(
            "point dimensions {} and {} do not match model dimension {d}",
            a.len(),
            b.len()
        )));
    }
    let inv = model.inv.as_slice().expect("inverse is owned row-major");
    let mut q = 0.0f64;
    for p in 0..d {
        let dp = a[p] - b[p];
        if dp == 0.0 {
            continue;
        }
        let row = &inv[p * d..(p + 1) * d];
        let mut acc = 0.0f64;
        for c in 0..d {
            acc += row[c] * (a[c] - b[c]);
        }
        q += dp * acc;
    }
    Ok(q.max(0.0).sqrt())
}

/// Centers every column to mean zero and scales to unit population standard
/// deviation (divisor `n`).
///
/// Columns whose std is numerically zero (at or below `1e-12 * max(1, |mean|)`)
/// are centered but left unscaled, so constant columns come out as zeros
/// rather than NaN. Labels pass through untouched.
pub fn standardize(x: &DataMatrix) -> Result<DataMatrix> {
    let n = x.n_rows();
    let d = x.n_cols();
    if n < 2 {
        return Err(Error::contract(format!(
            "standardize needs at least 2 rows, got {n}"
        )));
    }
    let data = x.as_slice();
    let mut means = vec![0.0f64; d];
    for row in data.chunks_exact(d) {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in means.iter_mut() {
        *m /= n as f64;
    }
    let mut vars = vec![0.0f64; d];
    for row in data.chunks_exact(d) {
        for j in 0..d {
            let c = row[j] - means[j];
            vars[j] += c * c;
        }
    }
    let mut scales = vec![1.0f64; d];
    for j in 0..d {
        let std = (vars[j] / n as f64).sqrt();
        scales[j] = if std <= 1e-12 * means[j].abs().max(1.0) {
            1.0
        } else {
            std
        };
    }
    let mut out = Vec::with_capacity(n * d);
    for row in data.chunks_exact(d) {
        for j in 0..d {
            out.push((row[j] - means[j]) / scales[j]);
        }
    }
    let values = Array2::from_shape_vec((n, d), out).expect("same shape as input");
    DataMatrix::new(values, x.labels().map(|l| l.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DataMatrix;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: Vec<Vec<f64>>) -> DataMatrix {
        DataMatrix::from_rows(rows, None).unwrap()
    }

    // Hand-computed: columns (0,2,4) and (1,3,8).
    // means 2 and 4; devs (-2,0,2) and (-3,-1,4).
    // var0 = (4+0+4)/2 = 4, var1 = (9+1+16)/2 = 13, cov = (6+0+8)/2 = 7.
    #[test]
    fn covariance_matches_hand_example() {
        let x = mat(vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 8.0]]);
        let s = covariance(&x).unwrap();
        assert_eq!(s, array![[4.0, 7.0], [7.0, 13.0]]);
    }

    #[test]
    fn covariance_needs_two_rows() {
        let x = mat(vec![vec![1.0, 2.0]]);
        assert!(matches!(covariance(&x), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn exact_inverse_on_diagonal() {
        let s = array![[2.0, 0.0], [0.0, 0.5]];
        let m = invert_covariance(&s, InversionPolicy::Auto).unwrap();
        assert_eq!(m.strategy(), InversionStrategy::Exact);
        let inv = m.inverse();
        assert!((inv[[0, 0]] - 0.5).abs() < 1e-12);
        assert!((inv[[1, 1]] - 2.0).abs() < 1e-12);
        assert!(inv[[0, 1]].abs() < 1e-12);
        let d = mahalanobis_distance(&[1.0, 0.0], &[0.0, 0.0], &m).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
    }

    // Singular S = [[1,1],[1,1]]: eigenpairs (2, (1,1)/sqrt2) and (0, ...).
    // Pseudo-inverse is [[0.25,0.25],[0.25,0.25]] and the quadratic form of
    // diff (1,1) against it is exactly 1.
    #[test]
    fn pseudo_inverse_on_rank_deficient() {
        let s = array![[1.0, 1.0], [1.0, 1.0]];
        let m = invert_covariance(&s, InversionPolicy::Auto).unwrap();
        assert_eq!(m.strategy(), InversionStrategy::PseudoInverse { rank: 1 });
        assert!(m.condition_number().is_infinite() || m.condition_number() >= CONDITION_LIMIT);
        for p in 0..2 {
            for q in 0..2 {
                assert!((m.inverse()[[p, q]] - 0.25).abs() < 1e-12);
            }
        }
        let d = mahalanobis_distance(&[1.0, 1.0], &[0.0, 0.0], &m).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_policy_refuses_singular() {
        let s = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(matches!(
            invert_covariance(&s, InversionPolicy::Exact),
            Err(crate::Error::Singular(_))
        ));
    }

    #[test]
    fn ridge_shifts_spectrum() {
        let s = array![[1.0, 1.0], [1.0, 1.0]];
        let m = invert_covariance(&s, InversionPolicy::Ridge { lambda: 1.0 }).unwrap();
        assert_eq!(m.strategy(), InversionStrategy::Ridge { lambda: 1.0 });
        // (S + I)^-1 = [[2,1],[1,2]]^-1 = 1/3 [[2,-1],[-1,2]]
        assert!((m.inverse()[[0, 0]] - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.inverse()[[0, 1]] + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_rejects_nonpositive_lambda() {
        let s = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(invert_covariance(&s, InversionPolicy::Ridge { lambda: 0.0 }).is_err());
    }

    #[test]
    fn rejects_asymmetric_input() {
        let s = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(
            invert_covariance(&s, InversionPolicy::Auto),
            Err(crate::Error::Contract(_))
        ));
    }

    // Dual route: the eigen-reconstructed inverse must agree with nalgebra's
    // LU inverse on well-conditioned input.
    #[test]
    fn exact_inverse_matches_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let d = rng.gen_range(2..6);
            let a = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0f64));
            let s_dm = &a * a.transpose() + nalgebra::DMatrix::identity(d, d) * 0.5;
            let s = Array2::from_shape_fn((d, d), |(p, q)| s_dm[(p, q)]);
            let m = invert_covariance(&s, InversionPolicy::Auto).unwrap();
            assert_eq!(m.strategy(), InversionStrategy::Exact);
            let lu = s_dm.clone().try_inverse().unwrap();
            for p in 0..d {
                for q in 0..d {
                    assert!(
                        (m.inverse()[[p, q]] - lu[(p, q)]).abs() < 1e-9 * lu[(p, q)].abs().max(1.0),
                        "mismatch at ({p},{q})"
                    );
                }
            }
        }
    }

    // The whitened representation must reproduce the quadratic-form distance
    // on both the exact and pseudo-inverse branches.
    #[test]
    fn whitened_distance_matches_quadratic_form()  {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, d) in &[(30usize, 4usize), (6, 10)] {
            let x = DataMatrix::from_rows(
                (0..n)
                    .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect(),
                None,
            )
            .unwrap();
            let m = CovarianceModel::fit(&x, InversionPolicy::Auto).unwrap();
            let w = m.whiten(&x).expect("covariance spectra are nonnegative");
            for _ in 0..20 {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                let direct = mahalanobis_distance(x.row_slice(i), x.row_slice(j), &m).unwrap();
                let mut acc = 0.0;
                for c in 0..w.ncols() {
                    let diff = w[[i, c]] - w[[j, c]];
                    acc += diff * diff;
                }
                let fast = acc.sqrt();
                assert!(
                    (direct - fast).abs() <= 1e-10 * direct.max(1.0),
                    "whitened {fast} vs quadratic {direct}"
                );
            }
        }
    }

    #[test]
    fn mahalanobis_of_identical_points_is_zero() {
        let x = mat(vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 8.0]]);
        let m = CovarianceModel::fit(&x, InversionPolicy::Auto).unwrap();
        assert_eq!(
            mahalanobis_distance(x.row_slice(1), x.row_slice(1), &m).unwrap(),
            0.0
        );
    }

    #[test]
    fn mahalanobis_checks_dimensions() {
        let x = mat(vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 8.0]]);
        let m = CovarianceModel::fit(&x, InversionPolicy::Auto).unwrap();
        assert!(mahalanobis_distance(&[1.0], &[0.0, 0.0], &m).is_err());
    }

    // Column (1,2,3): mean 2, population std sqrt(2/3).
    #[test]
    fn standardize_hand_example() {
        let x = mat(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let z = standardize(&x).unwrap();
        let s = (2.0f64 / 3.0).sqrt();
        assert!((z.values()[[0, 0]] + 1.0 / s).abs() < 1e-12);
        assert!((z.values()[[1, 0]]).abs() < 1e-12);
        assert!((z.values()[[2, 0]] - 1.0 / s).abs() < 1e-12);
    }

    #[test]
    fn standardize_constant_column_centers_only() {
        let x = mat(vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]]);
        let z = standardize(&x).unwrap();
        for i in 0..3 {
            assert_eq!(z.values()[[i, 0]], 0.0);
        }
    }

    #[test]
    fn standardize_postconditions_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let d = 5;
        let x = DataMatrix::from_rows(
            (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-3.0..9.0)).collect())
                .collect(),
            Some((0..n as i64).collect()),
        )
        .unwrap();
        let z = standardize(&x).unwrap();
        assert_eq!(z.labels(), x.labels());
        for j in 0..d {
            let col: Vec<f64> = (0..n).map(|i| z.values()[[i, j]]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-12, "column {j} mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-12, "column {j} std");
        }
    }

    // Deliberate asymmetry with the covariance estimator: standardize
    // divides by n, covariance by n - 1.
    #[test]
    fn standardized_covariance_is_n_over_n_minus_1() {
        let x = mat(vec![vec![1.0], vec![2.0], vec![4.0]]);
        let z = standardize(&x).unwrap();
        let s = covariance(&z).unwrap();
        let n = 3.0f64;
        assert!((s[[0, 0]] - n / (n - 1.0)).abs() < 1e-12);
    }
}
