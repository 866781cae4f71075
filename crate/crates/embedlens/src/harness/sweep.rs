use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;

use crate::datasets::{generate, DatasetSpec};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, MetricSpec};
use crate::harness::results::ResultRow;
use crate::matrix::DataMatrix;
use crate::metrics::{
    IdpeParams, MetricName, MetricReport, PairEvaluator, RankContext,
};
use crate::numerics::{CovarianceModel, InversionPolicy};
use crate::transforms::{apply_transform, logistic_accuracy};

/// Runs the whole grid on `jobs` worker threads and returns the rows in
/// lexicographic cell order: dataset, noise, dim, transform, repetition,
/// metric (each by its position in the config).
///
/// One unit of work is a (dataset, noise, dim, repetition) cell: the
/// generated matrix, its rank ordering, and its covariance model are
/// computed once there and shared across every transform. Failed
/// evaluations become `NaN` marker rows (reason on stderr) without
/// stopping the sweep. Output is byte-identical for any `jobs` value.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<Vec<ResultRow>> {
    config.validate()?;
    if jobs == 0 {
        return Err(Error::contract("jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {jobs}-thread pool: {e}")))?;

    let mut units = Vec::new();
    for (di, dataset) in config.datasets.iter().enumerate() {
        for ni in 0..config.noise_levels.len() {
            for (dmi, dim) in config.dims_for(dataset.kind).into_iter().enumerate() {
                for rep in 0..config.repetitions {
                    units.push(Unit { di, ni, dmi, dim, rep });
                }
            }
        }
    }

    let mut keyed: Vec<(SortKey, ResultRow)> = pool
        .install(|| {
            units
                .par_iter()
                .map(|u| run_unit(config, u))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    debug_assert!(keyed.windows(2).all(|w| w[0].0 != w[1].0), "duplicate cell keys");
    Ok(keyed.into_iter().map(|(_, row)| row).collect())
}

struct Unit {
    di: usize,
    ni: usize,
    dmi: usize,
    dim: usize,
    rep: usize,
}

// (dataset, noise, dim, transform, repetition, metric), all config indices
type SortKey = (usize, usize, usize, usize, usize, usize);

fn run_unit(config: &ExperimentConfig, u: &Unit) -> Vec<(SortKey, ResultRow)> {
    let template = &config.datasets[u.di];
    let noise = config.noise_levels[u.ni];
    let seed = config.base_seed.wrapping_add(u.rep as u64);
    let policy = config.inversion_policy;

    let blank = ResultRow {
        dataset: template.kind.as_str().to_string(),
        noise,
        dim: u.dim,
        transform: String::new(),
        metric: String::new(),
        mode: String::new(),
        k: 0,
        repetition: u.rep,
        seed,
        value: f64::NAN,
        inversion_strategy: String::new(),
        wall_time_ms: 0,
    };
    let key = |ti: usize, mi: usize| (u.di, u.ni, u.dmi, ti, u.rep, mi);
    let mut rows = Vec::with_capacity(config.transforms.len() * config.metrics.len());

    // a closure has one type per call site; errors funnel through this fn
    fn report(blank: &ResultRow, tname: &str, m: &MetricSpec, err: &str) -> ResultRow {
        let row = marker_row(blank, tname, m);
        eprintln!(
            "sweep: {}/{}/dim {}/rep {}: {} failed: {err}",
            row.dataset, tname, row.dim, row.repetition, row.metric
        );
        row
    }

    let spec = DatasetSpec {
        kind: template.kind,
        n_samples: template.n_samples,
        noise,
        dim: u.dim,
        seed,
        standardize: template.standardize,
    };
    let x = match generate(&spec) {
        Ok(x) => x,
        Err(e) => {
            let err = e.to_string();
            for (ti, t) in config.transforms.iter().enumerate() {
                for (mi, m) in config.metrics.iter().enumerate() {
                    rows.push((key(ti, mi), report(&blank, t.kind.as_str(), m, &err)));
                }
            }
            return rows;
        }
    };

    // per-unit shared work; failures are remembered as messages so each
    // affected metric row can carry on independently
    let needs_ranks = config.metrics.iter().any(|m| {
        !matches!(m.name, MetricName::Idpe | MetricName::Accuracy)
    });
    let shared_ranks: Option<std::result::Result<RankContext, String>> =
        needs_ranks.then(|| RankContext::build(&x).map_err(|e| e.to_string()));
    let needs_cov = config.metrics.iter().any(|m| m.name == MetricName::Idpe);
    type CovPieces = (CovarianceModel, Option<Array2<f64>>);
    let shared_cov: Option<std::result::Result<CovPieces, String>> = needs_cov.then(|| {
        CovarianceModel::fit(&x, policy)
            .map(|model| {
                let whitened = model.whiten(&x);
                (model, whitened)
            })
            .map_err(|e| e.to_string())
    });

    for (ti, tspec) in config.transforms.iter().enumerate() {
        let tname = tspec.kind.as_str();
        let z = match apply_transform(&x, tspec, seed) {
            Ok(z) => z,
            Err(e) => {
                let err = e.to_string();
                for (mi, m) in config.metrics.iter().enumerate() {
                    rows.push((key(ti, mi), report(&blank, tname, m, &err)));
                }
                continue;
            }
        };
        let eval = PairEvaluator::with_policy(&x, &z, policy)
            .expect("transform output is row-aligned with its input");
        if let Some(Ok(ctx)) = &shared_ranks {
            eval.preload_ranks_x(ctx.clone());
        }
        if let Some(Ok((model, whitened))) = &shared_cov {
            eval.preload_covariance(model.clone(), whitened.clone());
        }

        for (mi, mspec) in config.metrics.iter().enumerate() {
            let started = config.record_timing.then(Instant::now);
            let value = compute_metric(mspec, &eval, &z, seed, &shared_ranks, &shared_cov);
            let wall_time_ms = started.map_or(0, |t| t.elapsed().as_millis() as u64);
            let row = match value {
                Ok((value, inversion_strategy)) => ResultRow {
                    transform: tname.to_string(),
                    metric: mspec.name.as_str().to_string(),
                    mode: mode_column(mspec),
                    k: mspec.effective_k(),
                    value,
                    inversion_strategy,
                    wall_time_ms,
                    ..blank.clone()
                },
                Err(e) => report(&blank, tname, mspec, &e.to_string()),
            };
            rows.push((key(ti, mi), row));
        }
    }
    rows
}

fn compute_metric(
    mspec: &MetricSpec,
    eval: &PairEvaluator,
    z: &DataMatrix,
    seed: u64,
    shared_ranks: &Option<std::result::Result<RankContext, String>>,
    shared_cov: &Option<std::result::Result<(CovarianceModel, Option<Array2<f64>>), String>>,
) -> Result<(f64, String)> {
    // shared precomputations fail deterministically; don't redo them per
    // transform just to fail again
    if let Some(Err(msg)) = shared_cov {
        if mspec.name == MetricName::Idpe {
            return Err(Error::Degenerate(msg.clone()));
        }
    }
    if let Some(Err(msg)) = shared_ranks {
        if !matches!(mspec.name, MetricName::Idpe | MetricName::Accuracy) {
            return Err(Error::Degenerate(msg.clone()));
        }
    }

    let k = mspec.effective_k();
    let strip = |r: MetricReport| (r.value, String::new());
    match mspec.name {
        MetricName::Accuracy => logistic_accuracy(z, seed).map(|v| (v, String::new())),
        MetricName::AverageRank => eval.average_rank(k).map(strip),
        MetricName::AverageNormalizedRank => eval.average_normalized_rank(k).map(strip),
        MetricName::MeanReciprocalRank => eval.mean_reciprocal_rank().map(strip),
        MetricName::Trustworthiness => eval.trustworthiness(k).map(strip),
        MetricName::Continuity => eval.continuity(k).map(strip),
        MetricName::Idpe => {
            let params = IdpeParams {
                k,
                mode: mspec.effective_mode().expect("idpe spec"),
                include_self: mspec.include_self,
                policy: InversionPolicy::Auto, // evaluator's policy governs
            };
            eval.idpe(&params).map(|r| {
                let strategy = r
                    .inversion_strategy
                    .map(|s| s.to_string())
                    .unwrap_or_default();
                (r.value, strategy)
            })
        }
    }
}

fn mode_column(mspec: &MetricSpec) -> String {
    mspec
        .effective_mode()
        .map(|m| m.as_str().to_string())
        .unwrap_or_default()
}

fn marker_row(blank: &ResultRow, tname: &str, mspec: &MetricSpec) -> ResultRow {
    ResultRow {
        transform: tname.to_string(),
        metric: mspec.name.as_str().to_string(),
        mode: mode_column(mspec),
        k: mspec.effective_k(),
        value: f64::NAN,
        inversion_strategy: "error".to_string(),
        ..blank.clone()
    }
}

/// Computes the requested metrics for an already-loaded `(X, Z)` pair, in
/// request order. Unlike [`run_experiment`] this fails fast: the first
/// metric that cannot be computed aborts the call.
///
/// `seed` only feeds the accuracy probe's train/test split; `z` must carry
/// labels if that probe is requested.
pub fn evaluate_pair(
    x: &DataMatrix,
    z: &DataMatrix,
    metrics: &[MetricSpec],
    policy: InversionPolicy,
    seed: u64,
) -> Result<Vec<MetricReport>> {
    if metrics.is_empty() {
        return Err(Error::contract("no metrics requested"));
    }
    for m in metrics {
        m.check_shape()?;
    }
    let eval = PairEvaluator::with_policy(x, z, policy)?;
    metrics
        .iter()
        .map(|mspec| match mspec.name {
            MetricName::Accuracy => logistic_accuracy(z, seed).map(|value| MetricReport {
                metric: MetricName::Accuracy,
                value,
                k: 0,
                n: z.n_rows(),
                mode: None,
                include_self: None,
                inversion_strategy: None,
            }),
            MetricName::AverageRank => eval.average_rank(mspec.effective_k()),
            MetricName::AverageNormalizedRank => {
                eval.average_normalized_rank(mspec.effective_k())
            }
            MetricName::MeanReciprocalRank => eval.mean_reciprocal_rank(),
            MetricName::Trustworthiness => eval.trustworthiness(mspec.effective_k()),
            MetricName::Continuity => eval.continuity(mspec.effective_k()),
            MetricName::Idpe => eval.idpe(&IdpeParams {
                k: mspec.effective_k(),
                mode: mspec.effective_mode().expect("idpe spec"),
                include_self: mspec.include_self,
                policy,
            }),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::DatasetKind;
    use crate::harness::results::results_to_csv;
    use crate::metrics::IdpeMode;
    use crate::transforms::{TransformKind, TransformSpec};
    use std::path::PathBuf;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            datasets: vec![DatasetSpec::new(DatasetKind::Blobs, 40, 0.0, 0)],
            noise_levels: vec![0.5, 1.0],
            dims: vec![2, 4],
            transforms: vec![
                TransformSpec::new(TransformKind::Pca, 2),
                TransformSpec::new(TransformKind::Grp, 2),
            ],
            metrics: vec![
                MetricSpec::named(MetricName::Trustworthiness),
                MetricSpec::named(MetricName::MeanReciprocalRank),
                MetricSpec::idpe(IdpeMode::Consistent, 5),
                MetricSpec::named(MetricName::Accuracy),
            ],
            repetitions: 2,
            base_seed: 7,
            output_path: PathBuf::from("results.csv"),
            inversion_policy: InversionPolicy::Auto,
            record_timing: false,
        }
    }

    #[test]
    fn emits_the_full_sorted_grid() {
        let config = tiny_config();
        let rows = run_experiment(&config, 1).unwrap();
        assert_eq!(rows.len(), config.expected_rows());
        assert!(rows.iter().all(|r| !r.is_error()));

        // spot-check ordering: noise then dim then transform then rep
        assert_eq!(
            (rows[0].noise, rows[0].dim, rows[0].transform.as_str(), rows[0].repetition),
            (0.5, 2, "pca", 0)
        );
        let m = config.metrics.len();
        assert_eq!(rows[m].repetition, 1, "repetition varies before transform");
        assert_eq!(rows[2 * m].transform, "grp");
        let per_noise = rows.len() / 2;
        assert_eq!(rows[per_noise].noise, 1.0);
        assert_eq!(rows[per_noise / 2].dim, 4);

        // seeds derive from base_seed + repetition
        assert!(rows.iter().all(|r| r.seed == 7 + r.repetition as u64));

        // row keys are unique
        let mut keys: Vec<_> = rows
            .iter()
            .map(|r| {
                (
                    r.dataset.clone(),
                    r.noise.to_bits(),
                    r.dim,
                    r.transform.clone(),
                    r.metric.clone(),
                    r.mode.clone(),
                    r.k,
                    r.repetition,
                )
            })
            .collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), rows.len());
    }

    #[test]
    fn single_cell_run_emits_one_row_per_metric() {
        let mut config = tiny_config();
        config.noise_levels = vec![0.5];
        config.dims = vec![2];
        config.transforms.truncate(1);
        config.repetitions = 1;
        let rows = run_experiment(&config, 1).unwrap();
        assert_eq!(rows.len(), config.metrics.len());
    }

    #[test]
    fn output_is_identical_across_job_counts_and_reruns() {
        let config = tiny_config();
        let a = run_experiment(&config, 1).unwrap();
        let b = run_experiment(&config, 4).unwrap();
        let c = run_experiment(&config, 1).unwrap();
        assert_eq!(results_to_csv(&a), results_to_csv(&b));
        assert_eq!(results_to_csv(&a), results_to_csv(&c));
    }

    // n = 20 rows in 64 dimensions: the covariance has rank <= 19, so the
    // exact policy must fail. Those failures mark only the IDPE rows.
    #[test]
    fn exact_policy_failures_are_isolated_to_their_rows() {
        let mut config = tiny_config();
        config.datasets = vec![DatasetSpec::new(DatasetKind::Blobs, 20, 0.0, 0)];
        config.noise_levels = vec![0.5];
        config.dims = vec![64];
        config.transforms = vec![TransformSpec::new(TransformKind::Pca, 2)];
        config.inversion_policy = InversionPolicy::Exact;
        config.repetitions = 1;
        let rows = run_experiment(&config, 1).unwrap();
        assert_eq!(rows.len(), config.metrics.len());
        for r in &rows {
            if r.metric == "idpe" {
                assert!(r.is_error());
                assert_eq!(r.inversion_strategy, "error");
            } else {
                assert!(!r.is_error(), "{} should have survived", r.metric);
            }
        }
    }

    #[test]
    fn evaluate_pair_on_identity_is_perfect() {
        let spec = DatasetSpec::new(DatasetKind::Blobs, 30, 0.8, 1);
        let x = generate(&spec).unwrap();
        let reports = evaluate_pair(
            &x,
            &x,
            &[
                MetricSpec::named(MetricName::Trustworthiness),
                MetricSpec::named(MetricName::Continuity),
                MetricSpec::idpe(IdpeMode::Consistent, 5),
            ],
            InversionPolicy::Auto,
            0,
        )
        .unwrap();
        assert_eq!(reports[0].value, 1.0);
        assert_eq!(reports[1].value, 1.0);
        assert!(reports[2].value.abs() < 1e-9);
    }

    #[test]
    fn evaluate_pair_rejects_mismatched_rows() {
        let x = generate(&DatasetSpec::new(DatasetKind::Blobs, 30, 0.8, 1)).unwrap();
        let z = generate(&DatasetSpec::new(DatasetKind::Blobs, 20, 0.8, 1)).unwrap();
        let err = evaluate_pair(
            &x,
            &z,
            &[MetricSpec::named(MetricName::Continuity)],
            InversionPolicy::Auto,
            0,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("30") && err.contains("20"), "{err}");
    }
}
