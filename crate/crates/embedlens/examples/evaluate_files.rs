//! Score an externally produced embedding: everything goes through matrix
//! CSV files, so the embedding can come from any tool.
//!
//!     cargo run --release --example evaluate_files

use embedlens::datasets::{generate, DatasetKind, DatasetSpec};
use embedlens::harness::{evaluate_pair, MetricSpec};
use embedlens::io::{read_matrix_csv, write_matrix_csv};
use embedlens::metrics::{IdpeMode, MetricName};
use embedlens::numerics::InversionPolicy;
use embedlens::transforms::pca_fit_transform;

fn main() -> embedlens::Result<()> {
    let dir = std::env::temp_dir();
    let x_path = dir.join("embedlens_original.csv");
    let z_path = dir.join("embedlens_embedding.csv");

    // stand-in for "some other tool produced these files"
    let spec = DatasetSpec {
        dim: 12,
        ..DatasetSpec::new(DatasetKind::Blobs, 120, 1.0, 4)
    };
    let x = generate(&spec)?;
    write_matrix_csv(&x_path, &x)?;
    write_matrix_csv(&z_path, &pca_fit_transform(&x, 2)?)?;

    let original = read_matrix_csv(&x_path)?;
    let embedding = read_matrix_csv(&z_path)?;
    let reports = evaluate_pair(
        &original,
        &embedding,
        &[
            MetricSpec::named(MetricName::Trustworthiness),
            MetricSpec::named(MetricName::Continuity),
            MetricSpec::idpe(IdpeMode::Box1, 5),
            MetricSpec::named(MetricName::Accuracy), // labels came through the CSV
        ],
        InversionPolicy::Auto,
        0,
    )?;

    println!("{} against {}\n", z_path.display(), x_path.display());
    for r in &reports {
        print!("{:<18} = {:.6}", r.metric.to_string(), r.value);
        if let Some(strategy) = r.inversion_strategy {
            print!("   (covariance inverted via {strategy})");
        }
        println!();
    }

    // the same files through the CLI:
    //   embedlens evaluate original.csv embedding.csv --metric all --k 5
    Ok(())
}
