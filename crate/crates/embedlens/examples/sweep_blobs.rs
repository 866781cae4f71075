//! A small end-to-end sweep: noise grid x transforms x repetitions, one
//! results CSV, one JSON summary. The shipped configs/ directory holds the
//! full-size versions of this grid.
//!
//!     cargo run --release --example sweep_blobs

use embedlens::datasets::{DatasetKind, DatasetSpec};
use embedlens::harness::{
    run_experiment, summarize, summary_to_json, write_results, ExperimentConfig, MetricSpec,
    OutputFormat,
};
use embedlens::metrics::{IdpeMode, MetricName};
use embedlens::numerics::InversionPolicy;
use embedlens::transforms::{TransformKind, TransformSpec};

fn main() -> embedlens::Result<()> {
    let mut tsne = TransformSpec::new(TransformKind::Tsne, 2);
    tsne.tsne.perplexity = 20.0;
    tsne.tsne.iterations = 350;

    let config = ExperimentConfig {
        datasets: vec![DatasetSpec::new(DatasetKind::Blobs, 120, 0.0, 0)],
        noise_levels: vec![0.6, 1.5, 3.0],
        dims: vec![2, 16],
        transforms: vec![
            TransformSpec::new(TransformKind::Pca, 2),
            TransformSpec::new(TransformKind::Grp, 2),
            tsne,
        ],
        metrics: vec![
            MetricSpec::named(MetricName::Accuracy),
            MetricSpec::named(MetricName::Trustworthiness),
            MetricSpec::named(MetricName::Continuity),
            MetricSpec::idpe(IdpeMode::Box1, 5),
        ],
        repetitions: 3,
        base_seed: 0,
        output_path: std::env::temp_dir().join("embedlens_sweep.csv"),
        inversion_policy: InversionPolicy::Auto,
        record_timing: false,
    };

    println!("running {} rows worth of grid...", config.expected_rows());
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows = run_experiment(&config, jobs)?;
    write_results(&rows, &config, &config.output_path, OutputFormat::Csv)?;
    println!("wrote {}", config.output_path.display());

    let summary = summarize(&rows);
    let summary_path = std::env::temp_dir().join("embedlens_sweep_summary.json");
    std::fs::write(&summary_path, summary_to_json(&summary))?;
    println!("wrote {} ({} cells)\n", summary_path.display(), summary.cells.len());

    // eyeball one trend: accuracy under growing noise, dim 16
    println!("accuracy, dim 16 (mean over 3 repetitions):");
    println!("{:>8} {:>8} {:>8} {:>8}", "noise", "pca", "grp", "tsne");
    for &noise in &config.noise_levels {
        let mean = |t: &str| {
            summary
                .cells
                .iter()
                .find(|c| {
                    c.metric == "accuracy" && c.dim == 16 && c.noise == noise && c.transform == t
                })
                .map_or(f64::NAN, |c| c.mean)
        };
        println!(
            "{noise:>8.1} {:>8.3} {:>8.3} {:>8.3}",
            mean("pca"),
            mean("grp"),
            mean("tsne")
        );
    }
    Ok(())
}
