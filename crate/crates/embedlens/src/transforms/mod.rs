//! Dimensionality-reduction baselines and the logistic accuracy probe.
//!
//! Three reducers with very different characters: PCA (linear, variance-
//! maximizing, deterministic), Gaussian random projection (linear, oblivious,
//! distance-preserving in expectation), and exact t-SNE (nonlinear, local-
//! structure-seeking, iterative). [`logistic_accuracy`] is the extrinsic
//! counterpart: how well a linear classifier separates the labeled classes
//! in the embedded space.
//!
//! All transforms carry row labels through unchanged, keep rows aligned with
//! the input, and are deterministic given `(input, spec, seed)`.

mod logistic;
mod tsne;

pub use logistic::logistic_accuracy;
pub use tsne::{tsne_fit, tsne_fit_transform, TsneParams, TsneResult, EXAGGERATION_PHASE_ITERS};

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Pca,
    Grp,
    Tsne,
}

impl TransformKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransformKind::Pca => "pca",
            TransformKind::Grp => "grp",
            TransformKind::Tsne => "tsne",
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pca" => TransformKind::Pca,
            "grp" => TransformKind::Grp,
            "tsne" => TransformKind::Tsne,
            other => return Err(Error::contract(format!("unknown transform '{other}'"))),
        })
    }
}

fn default_d_out() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    #[serde(default = "default_d_out")]
    pub d_out: usize,
    /// Only read when `kind` is t-SNE.
    #[serde(default, skip_serializing_if = "is_default_tsne")]
    pub tsne: TsneParams,
}

fn is_default_tsne(p: &TsneParams) -> bool {
    *p == TsneParams::default()
}

impl TransformSpec {
    pub fn new(kind: TransformKind, d_out: usize) -> Self {
        TransformSpec {
            kind,
            d_out,
            tsne: TsneParams::default(),
        }
    }
}

/// Runs the configured transform. PCA ignores `seed`; GRP uses it for the
/// projection matrix, t-SNE for its initialization.
pub fn apply_transform(x: &DataMatrix, spec: &TransformSpec, seed: u64) -> Result<DataMatrix> {
    match spec.kind {
        TransformKind::Pca => pca_fit_transform(x, spec.d_out),
        TransformKind::Grp => grp_transform(x, spec.d_out, seed),
        TransformKind::Tsne => tsne_fit_transform(x, &spec.tsne, spec.d_out, seed),
    }
}

/////////////////////////////////////////////////////////////////////////////
// PCA
/////////////////////////////////////////////////////////////////////////////

/// Projects onto the top `d_out` principal components.
///
/// Columns are centered and the centered matrix is decomposed by SVD (not
/// an eigendecomposition of the covariance; the SVD keeps its accuracy at
/// d = 512). Components are ordered by descending singular value, ties by
/// the original component index, and each component's largest-magnitude
/// loading is flipped positive (first such loading on exact magnitude
/// ties), so the output is deterministic down to the bit.
pub fn pca_fit_transform(x: &DataMatrix, d_out: usize) -> Result<DataMatrix> {
    let n = x.n_rows();
    let d = x.n_cols();
    if n < 2 {
        return Err(Error::contract(format!("PCA needs at least 2 rows, got {n}")));
    }
    if d_out == 0 || d_out > n.min(d) {
        return Err(Error::contract(format!(
            "d_out = {d_out} outside valid range 1..={} (n = {n}, d = {d})",
            n.min(d)
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
    let centered = DMatrix::from_fn(n, d, |r, c| data[r * d + c] - means[c]);

    let svd = centered
        .clone()
        .try_svd(false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Convergence("SVD of the centered matrix".into()))?;
    let v_t = svd.v_t.expect("requested right singular vectors");
    let r = svd.singular_values.len();

    // descending singular value, stable on exact ties
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    // components[c] = c-th principal axis in input space, sign-fixed
    let mut components = vec![vec![0.0f64; d]; d_out];
    for (c, &src) in order.iter().take(d_out).enumerate() {
        let mut axis: Vec<f64> = (0..d).map(|j| v_t[(src, j)]).collect();
        let mut pivot = 0usize;
        for j in 1..d {
            if axis[j].abs() > axis[pivot].abs() {
                pivot = j;
            }
        }
        if axis[pivot] < 0.0 {
            for v in axis.iter_mut() {
                *v = -*v;
            }
        }
        components[c] = axis;
    }

    let mut rows = Vec::with_capacity(n);
    for row in data.chunks_exact(d) {
        let mut out = Vec::with_capacity(d_out);
        for axis in &components {
            let mut acc = 0.0;
            for j in 0..d {
                acc += (row[j] - means[j]) * axis[j];
            }
            out.push(acc);
        }
        rows.push(out);
    }
    DataMatrix::from_rows(rows, x.labels().map(|l| l.to_vec()))
}

/////////////////////////////////////////////////////////////////////////////
// Gaussian random projection
/////////////////////////////////////////////////////////////////////////////

/// `Z = X R` with `R` a `d x d_out` matrix of i.i.d. `N(0, 1/d_out)`
/// entries, so squared distances are preserved in expectation. Entries are
/// drawn row-major from a ChaCha8 stream seeded with `seed`.
pub fn grp_transform(x: &DataMatrix, d_out: usize, seed: u64) -> Result<DataMatrix> {
    if d_out == 0 {
        return Err(Error::contract("d_out must be at least 1"));
    }
    let d = x.n_cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (d_out as f64).sqrt();
    let mut r = vec![0.0f64; d * d_out];
    for v in r.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = scale * z;
    }

    let n = x.n_rows();
    let data = x.as_slice();
    let mut rows = Vec::with_capacity(n);
    for row in data.chunks_exact(d) {
        let mut out = vec![0.0f64; d_out];
        for (j, &v) in row.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let rrow = &r[j * d_out..(j + 1) * d_out];
            for (o, &w) in out.iter_mut().zip(rrow) {
                *o += v * w;
            }
        }
        rows.push(out);
    }
    DataMatrix::from_rows(rows, x.labels().map(|l| l.to_vec()))
}
