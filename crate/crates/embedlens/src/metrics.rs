//! Embedding-quality metrics.
//!
//! All of these compare a high-dimensional matrix `X` ("original") against
//! a paired low-dimensional matrix `Z` ("embedding") with the same number
//! of rows. Ranks are 1-based and never count a point as its own neighbor;
//! ties in distance are broken toward the lower row index everywhere, so
//! every value here is a pure function of the two matrices.
//!
//! | metric                    | range      | reads as                          |
//! |---------------------------|------------|-----------------------------------|
//! | `average_rank`            | `[1, n-1]` | lower is better                   |
//! | `average_normalized_rank` | `(0, 1)`   | lower is better                   |
//! | `mean_reciprocal_rank`    | `(0, 1]`   | higher is better                  |
//! | `trustworthiness`         | `[0, 1]`   | higher: fewer intruders in `Z`    |
//! | `continuity`              | `[0, 1]`   | higher: fewer neighbors lost      |
//! | `idpe`                    | `[0, inf)` | lower is better                   |
//!
//! IDPE (intrinsic distance preservation error) is distance-based rather
//! than rank-based: it asks how well original-space Mahalanobis distances
//! of embedding-neighbor pairs line up with true distances. It comes in two
//! modes, [`IdpeMode::Box1`] and [`IdpeMode::Consistent`]; see [`idpe`].

use ndarray::Array2;
use once_cell::unsync::OnceCell;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::build_index;
use crate::matrix::DataMatrix;
use crate::numerics::{
    mahalanobis_distance, CovarianceModel, InversionPolicy, InversionStrategy,
};

/////////////////////////////////////////////////////////////////////////////
// Names and reports
/////////////////////////////////////////////////////////////////////////////

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    AverageRank,
    AverageNormalizedRank,
    MeanReciprocalRank,
    Trustworthiness,
    Continuity,
    Idpe,
    /// Computed by the logistic probe in [`crate::transforms`], named here
    /// so reports and result rows share one vocabulary.
    Accuracy,
}

impl MetricName {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::AverageRank => "average_rank",
            MetricName::AverageNormalizedRank => "average_normalized_rank",
            MetricName::MeanReciprocalRank => "mean_reciprocal_rank",
            MetricName::Trustworthiness => "trustworthiness",
            MetricName::Continuity => "continuity",
            MetricName::Idpe => "idpe",
            MetricName::Accuracy => "accuracy",
        }
    }
}

impl std::fmt::Display for MetricName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "average_rank" | "ar" => MetricName::AverageRank,
            "average_normalized_rank" | "anr" => MetricName::AverageNormalizedRank,
            "mean_reciprocal_rank" | "mrr" => MetricName::MeanReciprocalRank,
            "trustworthiness" => MetricName::Trustworthiness,
            "continuity" => MetricName::Continuity,
            "idpe" => MetricName::Idpe,
            "accuracy" => MetricName::Accuracy,
            other => return Err(Error::contract(format!("unknown metric '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdpeMode {
    /// Squared-L2 true distances vs. Mahalanobis distances of embedding
    /// neighbors, mean squared difference over all `n * k` entries.
    Box1,
    /// Mahalanobis on both sides, original-space neighbors vs.
    /// embedding-space neighbors paired by rank, summed absolute
    /// differences divided by `n`.
    Consistent,
}

impl IdpeMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdpeMode::Box1 => "box1",
            IdpeMode::Consistent => "consistent",
        }
    }

    /// Whether a point counts as its own neighbor when the caller does not
    /// say: the reference listing keeps self in, the consistent variant
    /// drops it.
    pub fn default_include_self(&self) -> bool {
        matches!(self, IdpeMode::Box1)
    }
}

impl std::fmt::Display for IdpeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IdpeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "box1" => IdpeMode::Box1,
            "consistent" => IdpeMode::Consistent,
            other => return Err(Error::contract(format!("unknown IDPE mode '{other}'"))),
        })
    }
}

/// One computed metric value plus everything needed to interpret it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricReport {
    pub metric: MetricName,
    pub value: f64,
    /// Neighborhood size the metric was computed at (1 for
    /// `mean_reciprocal_rank`, which only looks at the single true nearest
    /// neighbor).
    pub k: usize,
    pub n: usize,
    /// IDPE only.
    pub mode: Option<IdpeMode>,
    /// IDPE only: whether points counted as their own neighbors.
    pub include_self: Option<bool>,
    /// IDPE only: how the covariance was inverted.
    pub inversion_strategy: Option<InversionStrategy>,
}

impl MetricReport {
    fn rank_based(metric: MetricName, value: f64, k: usize, n: usize) -> Self {
        MetricReport {
            metric,
            value,
            k,
            n,
            mode: None,
            include_self: None,
            inversion_strategy: None,
        }
    }
}

/////////////////////////////////////////////////////////////////////////////
// Rank context
/////////////////////////////////////////////////////////////////////////////

/// Full neighbor ordering of one matrix: for every row, all other rows
/// sorted by (squared L2 distance, index), plus the inverse permutation so
/// `rank(i, j)` is O(1).
///
/// Ranks are 1-based over the `n - 1` candidates; `rank(i, i)` is
/// undefined and asserted against.
#[derive(Clone)]
pub struct RankContext {
    n: usize,
    // row i holds the n-1 other indices in rank order
    order: Vec<u32>,
    // rank_of[i * n + j] = 1-based rank of j for query i; 0 on the diagonal
    rank_of: Vec<u32>,
}

impl RankContext {
    pub fn build(x: &DataMatrix) -> Result<Self> {
        let n = x.n_rows();
        if n < 2 {
            return Err(Error::contract(format!(
                "rank context needs at least 2 rows, got {n}"
            )));
        }
        if n - 1 > u32::MAX as usize {
            return Err(Error::contract("matrix too large for u32 ranks"));
        }
        let d = x.n_cols();
        let rows: Vec<(Vec<u32>, Vec<u32>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let qi = x.row_slice(i);
                let mut cand: Vec<(f64, u32)> = Vec::with_capacity(n - 1);
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let rj = x.row_slice(j);
                    let mut acc = 0.0;
                    for c in 0..d {
                        let diff = qi[c] - rj[c];
                        acc += diff * diff;
                    }
                    cand.push((acc, j as u32));
                }
                cand.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                let order_row: Vec<u32> = cand.iter().map(|&(_, j)| j).collect();
                let mut rank_row = vec![0u32; n];
                for (pos, &j) in order_row.iter().enumerate() {
                    rank_row[j as usize] = (pos + 1) as u32;
                }
                (order_row, rank_row)
            })
            .collect();
        let mut order = Vec::with_capacity(n * (n - 1));
        let mut rank_of = Vec::with_capacity(n * n);
        for (o, r) in rows {
            order.extend(o);
            rank_of.extend(r);
        }
        Ok(RankContext { n, order, rank_of })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-based rank of `j` among the neighbors of `i`.
    pub fn rank(&self, i: usize, j: usize) -> usize {
        debug_assert_ne!(i, j, "rank of a point against itself is undefined");
        self.rank_of[i * self.n + j] as usize
    }

    /// The `k` nearest neighbors of `i`, self excluded, nearest first.
    pub fn neighbors(&self, i: usize, k: usize) -> &[u32] {
        &self.order[i * (self.n - 1)..i * (self.n - 1) + k]
    }
}

/////////////////////////////////////////////////////////////////////////////
// Pair evaluator
/////////////////////////////////////////////////////////////////////////////

/// Evaluates many metrics for one `(X, Z)` pair while sharing the expensive
/// intermediates (full rank orderings, the covariance model of `X`).
///
/// The free functions below each build a fresh evaluator; sweeps and any
/// caller computing more than one metric should hold onto one of these.
pub struct PairEvaluator<'a> {
    x: &'a DataMatrix,
    z: &'a DataMatrix,
    policy: InversionPolicy,
    ctx_x: OnceCell<RankContext>,
    ctx_z: OnceCell<RankContext>,
    cov: OnceCell<CovarianceModel>,
    whitened_x: OnceCell<Option<Array2<f64>>>,
}

impl<'a> PairEvaluator<'a> {
    pub fn new(x: &'a DataMatrix, z: &'a DataMatrix) -> Result<Self> {
        Self::with_policy(x, z, InversionPolicy::Auto)
    }

    pub fn with_policy(
        x: &'a DataMatrix,
        z: &'a DataMatrix,
        policy: InversionPolicy,
    ) -> Result<Self> {
        if x.n_rows() != z.n_rows() {
            return Err(Error::contract(format!(
                "row counts differ: original has {}, embedding has {}",
                x.n_rows(),
                z.n_rows()
            )));
        }
        if x.n_rows() < 2 {
            return Err(Error::contract(format!(
                "metrics need at least 2 rows, got {}",
                x.n_rows()
            )));
        }
        Ok(PairEvaluator {
            x,
            z,
            policy,
            ctx_x: OnceCell::new(),
            ctx_z: OnceCell::new(),
            cov: OnceCell::new(),
            whitened_x: OnceCell::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.n_rows()
    }

    // Seed the lazy X-side intermediates from values computed elsewhere
    // over the same matrix (and, for the covariance, the same policy); the
    // sweep uses these to share one rank ordering / covariance model /
    // whitening across every transform of a cell. No-ops if already built.
    pub(crate) fn preload_ranks_x(&self, ctx: RankContext) {
        let _ = self.ctx_x.set(ctx);
    }

    pub(crate) fn preload_covariance(
        &self,
        model: CovarianceModel,
        whitened: Option<Array2<f64>>,
    ) {
        let _ = self.cov.set(model);
        let _ = self.whitened_x.set(whitened);
    }

    /// Rank ordering of the original space (built on first use).
    pub fn context_x(&self) -> Result<&RankContext> {
        self.ctx_x.get_or_try_init(|| RankContext::build(self.x))
    }

    /// Rank ordering of the embedding space (built on first use).
    pub fn context_z(&self) -> Result<&RankContext> {
        self.ctx_z.get_or_try_init(|| RankContext::build(self.z))
    }

    fn model(&self) -> Result<&CovarianceModel> {
        self.cov
            .get_or_try_init(|| CovarianceModel::fit(self.x, self.policy))
    }

    fn whitened(&self) -> Result<&Option<Array2<f64>>> {
        let model = self.model()?;
        Ok(self
            .whitened_x
            .get_or_init(|| model.whiten(self.x)))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        let n = self.n();
        if k == 0 || k > n - 1 {
            return Err(Error::contract(format!(
                "k = {k} outside valid range 1..={} for n = {n}",
                n - 1
            )));
        }
        Ok(())
    }

    /// Mean over queries of the mean embedding-space rank of the original
    /// k nearest neighbors. 1-based ranks, self excluded; `(k + 1) / 2` for
    /// a perfect embedding.
    pub fn average_rank(&self, k: usize) -> Result<MetricReport> {
        self.check_k(k)?;
        let (ctx_x, ctx_z) = (self.context_x()?, self.context_z()?);
        let n = self.n();
        let mut total = 0.0f64;
        for i in 0..n {
            let mut sum = 0.0f64;
            for &j in ctx_x.neighbors(i, k) {
                sum += ctx_z.rank(i, j as usize) as f64;
            }
            total += sum / k as f64;
        }
        Ok(MetricReport::rank_based(
            MetricName::AverageRank,
            total / n as f64,
            k,
            n,
        ))
    }

    /// [`PairEvaluator::average_rank`] divided by `n`, which equals the
    /// doubly normalized form `(1/n) sum_i (1/k) sum_j rank(j)/n` exactly.
    pub fn average_normalized_rank(&self, k: usize) -> Result<MetricReport> {
        let ar = self.average_rank(k)?;
        Ok(MetricReport::rank_based(
            MetricName::AverageNormalizedRank,
            ar.value / self.n() as f64,
            k,
            self.n(),
        ))
    }

    /// Mean reciprocal embedding-space rank of the single true nearest
    /// neighbor; 1.0 iff every point keeps its nearest neighbor first.
    pub fn mean_reciprocal_rank(&self) -> Result<MetricReport> {
        self.check_k(1)?;
        let (ctx_x, ctx_z) = (self.context_x()?, self.context_z()?);
        let n = self.n();
        let mut total = 0.0f64;
        for i in 0..n {
            let j = ctx_x.neighbors(i, 1)[0] as usize;
            total += 1.0 / ctx_z.rank(i, j) as f64;
        }
        Ok(MetricReport::rank_based(
            MetricName::MeanReciprocalRank,
            total / n as f64,
            1,
            n,
        ))
    }

    /// 1 - 2/(nk(2n-3k-1)) * sum over points of sum over *intruders* (rows
    /// in the embedding k-NN but not the original k-NN) of how far past `k`
    /// their original-space rank is. Requires `2n - 3k - 1 > 0`.
    pub fn trustworthiness(&self, k: usize) -> Result<MetricReport> {
        let value = self.venna_kaski(k, /* intruders= */ true)?;
        Ok(MetricReport::rank_based(
            MetricName::Trustworthiness,
            value,
            k,
            self.n(),
        ))
    }

    /// Mirror image of trustworthiness: penalizes original neighbors that
    /// fall out of the embedding k-NN, by their embedding-space rank.
    /// `continuity(x, z, k)` equals `trustworthiness(z, x, k)`.
    pub fn continuity(&self, k: usize) -> Result<MetricReport> {
        let value = self.venna_kaski(k, /* intruders= */ false)?;
        Ok(MetricReport::rank_based(
            MetricName::Continuity,
            value,
            k,
            self.n(),
        ))
    }

    fn venna_kaski(&self, k: usize, intruders: bool) -> Result<f64> {
        self.check_k(k)?;
        let n = self.n();
        let norm = 2.0 * n as f64 - 3.0 * k as f64 - 1.0;
        if norm <= 0.0 {
            return Err(Error::contract(format!(
                "normalizer 2n - 3k - 1 = {norm} must be positive (n = {n}, k = {k})"
            )));
        }
        let (ctx_x, ctx_z) = (self.context_x()?, self.context_z()?);
        // intruders: walk embedding neighbors, penalize by original rank;
        // escapees: walk original neighbors, penalize by embedding rank.
        let (walk, penal) = if intruders {
            (ctx_z, ctx_x)
        } else {
            (ctx_x, ctx_z)
        };
        let mut sum = 0.0f64;
        for i in 0..n {
            for &j in walk.neighbors(i, k) {
                let r = penal.rank(i, j as usize);
                if r > k {
                    sum += (r - k) as f64;
                }
            }
        }
        Ok(1.0 - 2.0 / (n as f64 * k as f64 * norm) * sum)
    }

    /// Intrinsic distance preservation error. See [`idpe`].
    pub fn idpe(&self, params: &IdpeParams) -> Result<MetricReport> {
        let n = self.n();
        let k = params.k;
        let include_self = params
            .include_self
            .unwrap_or_else(|| params.mode.default_include_self());
        let candidates = if include_self { n } else { n - 1 };
        if k == 0 || k > candidates {
            return Err(Error::contract(format!(
                "k = {k} outside valid range 1..={candidates} \
                 (n = {n}, include_self = {include_self})"
            )));
        }
        if self.x.n_cols() < 1 {
            return Err(Error::degenerate("original matrix has no columns"));
        }
        let model = self.model()?;
        let whitened = self.whitened()?;

        let idx_z = build_index(self.z)?;
        let emb = idx_z.search(self.z, k, include_self)?;

        let value = match params.mode {
            IdpeMode::Box1 => {
                let idx_x = build_index(self.x)?;
                let orig = idx_x.search(self.x, k, include_self)?;
                let mut acc = 0.0f64;
                for i in 0..n {
                    let true_d = orig.distances(i); // squared L2
                    let ids = emb.neighbors(i);
                    for (pos, &j) in ids.iter().enumerate() {
                        let dm = self.mahal(i, j, model, whitened)?;
                        let diff = true_d[pos] - dm;
                        acc += diff * diff;
                    }
                }
                acc / (n * k) as f64
            }
            IdpeMode::Consistent => {
                let idx_x = build_index(self.x)?;
                let orig = idx_x.search(self.x, k, include_self)?;
                let mut acc = 0.0f64;
                for i in 0..n {
                    let a = orig.neighbors(i);
                    let b = emb.neighbors(i);
                    for pos in 0..k {
                        let da = self.mahal(i, a[pos], model, whitened)?;
                        let db = self.mahal(i, b[pos], model, whitened)?;
                        acc += (da - db).abs();
                    }
                }
                acc / n as f64
            }
        };
        if !value.is_finite() {
            return Err(Error::degenerate("IDPE accumulated a non-finite value"));
        }
        Ok(MetricReport {
            metric: MetricName::Idpe,
            value,
            k,
            n,
            mode: Some(params.mode),
            include_self: Some(include_self),
            inversion_strategy: Some(model.strategy()),
        })
    }

    // Original-space Mahalanobis between rows i and j, via the whitened
    // coordinates when the model admits them.
    fn mahal(
        &self,
        i: usize,
        j: usize,
        model: &CovarianceModel,
        whitened: &Option<Array2<f64>>,
    ) -> Result<f64> {
        if let Some(w) = whitened {
            let mut acc = 0.0f64;
            let wi = w.row(i);
            let wj = w.row(j);
            for c in 0..w.ncols() {
                let diff = wi[c] - wj[c];
                acc += diff * diff;
            }
            Ok(acc.sqrt())
        } else {
            mahalanobis_distance(self.x.row_slice(i), self.x.row_slice(j), model)
        }
    }
}

/////////////////////////////////////////////////////////////////////////////
// Free functions
/////////////////////////////////////////////////////////////////////////////

/// Parameters for [`idpe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdpeParams {
    pub k: usize,
    pub mode: IdpeMode,
    /// `None` picks the mode's convention: `true` for [`IdpeMode::Box1`],
    /// `false` for [`IdpeMode::Consistent`].
    pub include_self: Option<bool>,
    pub policy: InversionPolicy,
}

impl Default for IdpeParams {
    fn default() -> Self {
        IdpeParams {
            k: 5,
            mode: IdpeMode::Box1,
            include_self: None,
            policy: InversionPolicy::Auto,
        }
    }
}

pub fn average_rank(x: &DataMatrix, z: &DataMatrix, k: usize) -> Result<MetricReport> {
    PairEvaluator::new(x, z)?.average_rank(k)
}

pub fn average_normalized_rank(x: &DataMatrix, z: &DataMatrix, k: usize) -> Result<MetricReport> {
    PairEvaluator::new(x, z)?.average_normalized_rank(k)
}

pub fn mean_reciprocal_rank(x: &DataMatrix, z: &DataMatrix) -> Result<MetricReport> {
    PairEvaluator::new(x, z)?.mean_reciprocal_rank()
}

pub fn trustworthiness(x: &DataMatrix, z: &DataMatrix, k: usize) -> Result<MetricReport> {
    PairEvaluator::new(x, z)?.trustworthiness(k)
}

pub fn continuity(x: &DataMatrix, z: &DataMatrix, k: usize) -> Result<MetricReport> {
    PairEvaluator::new(x, z)?.continuity(k)
}

/// Intrinsic distance preservation error of embedding `z` against original
/// `x`.
///
/// Both modes start from k-nearest-neighbor queries with deterministic
/// tie-breaking and measure distances *in the original space* under the
/// Mahalanobis metric of `x`'s column covariance (inverted per
/// `params.policy`; the strategy actually used lands in the report).
///
/// * [`IdpeMode::Box1`]: true squared-L2 self-neighborhood distances of `x`
///   versus Mahalanobis distances to the *embedding's* neighbors, paired
///   positionally by rank, averaged as a mean squared error over all
///   `n * k` entries.
/// * [`IdpeMode::Consistent`]: Mahalanobis on both sides (original
///   neighbors vs. embedding neighbors, paired by rank), absolute
///   differences summed and divided by `n`. Zero iff neighbor orderings
///   coincide, so the identity embedding scores exactly 0.
pub fn idpe(x: &DataMatrix, z: &DataMatrix, params: &IdpeParams) -> Result<MetricReport> {
    PairEvaluator::with_policy(x, z, params.policy)?.idpe(params)
}
