use std::path::PathBuf;

use crate::datasets::{DatasetKind, DatasetSpec};
use crate::error::{Error, Result};
use crate::metrics::{IdpeMode, MetricName};
use crate::numerics::InversionPolicy;
use crate::transforms::{TransformKind, TransformSpec};

/// One metric request inside an [`ExperimentConfig`] or an `evaluate` call.
///
/// `k` defaults to 5 where a neighborhood size applies; mean reciprocal
/// rank is pinned to its single true neighbor (`k = 1`) and the accuracy
/// probe takes no neighborhood at all (`k` reported as 0). `mode` and
/// `include_self` are IDPE-only.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub name: MetricName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<IdpeMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_self: Option<bool>,
}

impl MetricSpec {
    pub fn named(name: MetricName) -> Self {
        MetricSpec {
            name,
            k: None,
            mode: None,
            include_self: None,
        }
    }

    pub fn with_k(name: MetricName, k: usize) -> Self {
        MetricSpec {
            k: Some(k),
            ..MetricSpec::named(name)
        }
    }

    pub fn idpe(mode: IdpeMode, k: usize) -> Self {
        MetricSpec {
            name: MetricName::Idpe,
            k: Some(k),
            mode: Some(mode),
            include_self: None,
        }
    }

    /// The neighborhood size this spec will actually run at.
    pub fn effective_k(&self) -> usize {
        match self.name {
            MetricName::MeanReciprocalRank => 1,
            MetricName::Accuracy => 0,
            _ => self.k.unwrap_or(5),
        }
    }

    /// `Some` only for IDPE, defaulting to [`IdpeMode::Box1`].
    pub fn effective_mode(&self) -> Option<IdpeMode> {
        (self.name == MetricName::Idpe).then(|| self.mode.unwrap_or(IdpeMode::Box1))
    }

    // Field-applicability rules, independent of any data.
    pub(crate) fn check_shape(&self) -> Result<()> {
        let reject = |what: &str| {
            Err(Error::Config(format!(
                "metric '{}' does not take {what}",
                self.name
            )))
        };
        if self.mode.is_some() && self.name != MetricName::Idpe {
            return reject("a mode");
        }
        if self.include_self.is_some() && self.name != MetricName::Idpe {
            return reject("include_self");
        }
        match self.name {
            MetricName::Accuracy if self.k.is_some() => reject("a k"),
            MetricName::MeanReciprocalRank if self.k.is_some() && self.k != Some(1) => {
                reject("a k other than 1")
            }
            _ if self.k == Some(0) => Err(Error::Config(format!(
                "metric '{}' needs k >= 1",
                self.name
            ))),
            _ => Ok(()),
        }
    }

    // Preconditions against the smallest matrix the grid will produce.
    fn check_against_n(&self, min_n: usize) -> Result<()> {
        let k = self.effective_k();
        let fail = |msg: String| Err(Error::Config(msg));
        match self.name {
            MetricName::Accuracy => Ok(()),
            MetricName::Idpe => {
                let include_self = self
                    .include_self
                    .unwrap_or_else(|| self.effective_mode().unwrap().default_include_self());
                let candidates = if include_self { min_n } else { min_n - 1 };
                if k > candidates {
                    return fail(format!(
                        "idpe k = {k} exceeds the {candidates} candidates of the \
                         smallest configured dataset (n = {min_n})"
                    ));
                }
                Ok(())
            }
            MetricName::Trustworthiness | MetricName::Continuity => {
                if k > min_n - 1 {
                    return fail(format!(
                        "{} k = {k} exceeds n - 1 = {} for the smallest dataset",
                        self.name,
                        min_n - 1
                    ));
                }
                if 2 * min_n <= 3 * k + 1 {
                    return fail(format!(
                        "{} needs 2n - 3k - 1 > 0; n = {min_n}, k = {k}",
                        self.name
                    ));
                }
                Ok(())
            }
            _ => {
                if k > min_n - 1 {
                    return fail(format!(
                        "{} k = {k} exceeds n - 1 = {} for the smallest dataset",
                        self.name,
                        min_n - 1
                    ));
                }
                Ok(())
            }
        }
    }
}

fn default_dims() -> Vec<usize> {
    vec![2]
}

fn default_repetitions() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}

/// The full grid definition for one sweep.
///
/// Dataset templates contribute their `kind`, `n_samples`, and
/// `standardize` flag; their `noise`, `dim`, and `seed` fields are
/// overridden per cell by `noise_levels`, `dims`, and
/// `base_seed + repetition`. `dims` applies to blobs only; the shape
/// datasets are natively 2- or 3-dimensional.
///
/// `record_timing` fills the `wall_time_ms` column with each metric's
/// evaluation time. It defaults to off because timings vary run to run and
/// would break the byte-identical-output guarantee.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub noise_levels: Vec<f64>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    pub transforms: Vec<TransformSpec>,
    pub metrics: Vec<MetricSpec>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output")]
    pub output_path: PathBuf,
    /// Covariance inversion policy shared by every IDPE evaluation.
    #[serde(default)]
    pub inversion_policy: InversionPolicy,
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// The blobs benchmark grid used throughout the examples: n = 500 in
    /// two clusters, noise {0.6, 1.0, 1.5} x dims {2, 128, 512} x
    /// {pca, grp, tsne} x 10 repetitions x 7 metrics = 1890 rows.
    pub fn blobs_suite() -> Self {
        ExperimentConfig {
            datasets: vec![DatasetSpec::new(DatasetKind::Blobs, 500, 0.0, 0)],
            noise_levels: vec![0.6, 1.0, 1.5],
            dims: vec![2, 128, 512],
            transforms: vec![
                TransformSpec::new(TransformKind::Pca, 2),
                TransformSpec::new(TransformKind::Grp, 2),
                TransformSpec::new(TransformKind::Tsne, 2),
            ],
            metrics: vec![
                MetricSpec::named(MetricName::Accuracy),
                MetricSpec::named(MetricName::AverageRank),
                MetricSpec::named(MetricName::AverageNormalizedRank),
                MetricSpec::named(MetricName::MeanReciprocalRank),
                MetricSpec::named(MetricName::Trustworthiness),
                MetricSpec::named(MetricName::Continuity),
                MetricSpec::idpe(IdpeMode::Box1, 5),
            ],
            repetitions: 10,
            base_seed: 0,
            output_path: PathBuf::from("blobs_suite.csv"),
            inversion_policy: InversionPolicy::Auto,
            record_timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The dimension values a dataset kind actually sweeps over.
    pub fn dims_for(&self, kind: DatasetKind) -> Vec<usize> {
        match kind.native_dim() {
            None => self.dims.clone(),
            Some(d) => vec![d],
        }
    }

    /// Row count a successful sweep will emit.
    pub fn expected_rows(&self) -> usize {
        self.datasets
            .iter()
            .map(|d| self.dims_for(d.kind).len())
            .sum::<usize>()
            * self.noise_levels.len()
            * self.transforms.len()
            * self.repetitions
            * self.metrics.len()
    }

    fn min_n(&self) -> usize {
        self.datasets.iter().map(|d| d.n_samples).min().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));

        if self.datasets.is_empty() {
            return fail("datasets must be non-empty".into());
        }
        let mut kinds: Vec<DatasetKind> = self.datasets.iter().map(|d| d.kind).collect();
        kinds.sort_by_key(|k| k.as_str());
        kinds.dedup();
        if kinds.len() != self.datasets.len() {
            return fail("dataset kinds must be unique (the kind names the result rows)".into());
        }
        for d in &self.datasets {
            if d.n_samples < 4 {
                return fail(format!("dataset {} needs n_samples >= 4", d.kind));
            }
        }

        if self.noise_levels.is_empty() {
            return fail("noise_levels must be non-empty".into());
        }
        for &nl in &self.noise_levels {
            if !nl.is_finite() || nl < 0.0 {
                return fail(format!("noise level {nl} must be finite and nonnegative"));
            }
        }
        if has_duplicate(&self.noise_levels, |a, b| a == b) {
            return fail("noise_levels must be unique".into());
        }

        let sweeps_blobs = self.datasets.iter().any(|d| d.kind == DatasetKind::Blobs);
        if sweeps_blobs {
            if self.dims.is_empty() {
                return fail("dims must be non-empty when blobs are configured".into());
            }
            for &dim in &self.dims {
                if dim < 2 {
                    return fail(format!("blobs need dim >= 2, got {dim}"));
                }
            }
            if has_duplicate(&self.dims, |a, b| a == b) {
                return fail("dims must be unique".into());
            }
        }

        let min_n = self.min_n();
        let min_dim = self
            .datasets
            .iter()
            .flat_map(|d| self.dims_for(d.kind))
            .min()
            .expect("datasets checked non-empty");

        if self.transforms.is_empty() {
            return fail("transforms must be non-empty".into());
        }
        if has_duplicate(&self.transforms, |a, b| a.kind == b.kind) {
            return fail("transform kinds must be unique (the kind names the result rows)".into());
        }
        for t in &self.transforms {
            if t.d_out == 0 {
                return fail(format!("transform {} needs d_out >= 1", t.kind));
            }
            match t.kind {
                TransformKind::Pca => {
                    let cap = min_n.min(min_dim);
                    if t.d_out > cap {
                        return fail(format!(
                            "pca d_out = {} exceeds min(n, dim) = {cap} over the grid",
                            t.d_out
                        ));
                    }
                }
                TransformKind::Tsne => {
                    if min_n < 10 {
                        return fail(format!(
                            "t-SNE needs n >= 10; smallest configured dataset has {min_n}"
                        ));
                    }
                    let p = t.tsne.perplexity;
                    let cap = (min_n as f64 - 1.0) / 3.0;
                    if !(p > 0.0) || p >= cap {
                        return fail(format!(
                            "t-SNE perplexity {p} outside (0, {cap}) for the smallest dataset"
                        ));
                    }
                    if t.tsne.iterations == 0 {
                        return fail("t-SNE iterations must be >= 1".into());
                    }
                    if !(t.tsne.learning_rate > 0.0) || !t.tsne.learning_rate.is_finite() {
                        return fail(format!(
                            "t-SNE learning_rate {} must be positive and finite",
                            t.tsne.learning_rate
                        ));
                    }
                    if !(t.tsne.early_exaggeration >= 1.0)
                        || !t.tsne.early_exaggeration.is_finite()
                    {
                        return fail(format!(
                            "t-SNE early_exaggeration {} must be >= 1 and finite",
                            t.tsne.early_exaggeration
                        ));
                    }
                }
                TransformKind::Grp => {}
            }
        }

        if self.metrics.is_empty() {
            return fail("metrics must be non-empty".into());
        }
        for m in &self.metrics {
            m.check_shape()?;
            m.check_against_n(min_n)?;
        }
        // (metric, mode, k) names a results column triple; collisions would
        // break row uniqueness
        if has_duplicate(&self.metrics, |a, b| {
            a.name == b.name && a.effective_mode() == b.effective_mode()
                && a.effective_k() == b.effective_k()
        }) {
            return fail("metric (name, mode, k) triples must be unique".into());
        }
        if self.metrics.iter().any(|m| m.name == MetricName::Accuracy) {
            for d in &self.datasets {
                if !d.kind.has_labels() {
                    return fail(format!(
                        "accuracy probe requested but dataset {} has no labels",
                        d.kind
                    ));
                }
                // the probe needs >= 5 rows per class; generators split
                // samples evenly in two
                if d.n_samples < 10 {
                    return fail(format!(
                        "accuracy probe needs n_samples >= 10, dataset {} has {}",
                        d.kind, d.n_samples
                    ));
                }
            }
        }

        if self.repetitions == 0 {
            return fail("repetitions must be >= 1".into());
        }
        if let InversionPolicy::Ridge { lambda } = self.inversion_policy {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return fail(format!("ridge lambda {lambda} must be positive and finite"));
            }
        }
        Ok(())
    }
}

fn has_duplicate<T>(items: &[T], same: impl Fn(&T, &T) -> bool) -> bool {
    items
        .iter()
        .enumerate()
        .any(|(i, a)| items[..i].iter().any(|b| same(a, b)))
}
