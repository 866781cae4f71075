//! All six comparison metrics on one dataset, PCA against GRP.
//!
//!     cargo run --release --example metrics_tour

use embedlens::datasets::{generate, DatasetKind, DatasetSpec};
use embedlens::metrics::{IdpeMode, IdpeParams, PairEvaluator};
use embedlens::transforms::{apply_transform, TransformKind, TransformSpec};

fn main() -> embedlens::Result<()> {
    let spec = DatasetSpec {
        dim: 16,
        ..DatasetSpec::new(DatasetKind::Blobs, 200, 1.0, 3)
    };
    let x = generate(&spec)?;
    println!("blobs 200 x 16, noise 1.0, embedded to 2 dimensions\n");
    println!(
        "{:<26} {:>10} {:>10}   better is",
        "metric", "pca", "grp"
    );

    let k = 5;
    let mut values = Vec::new();
    for kind in [TransformKind::Pca, TransformKind::Grp] {
        let z = apply_transform(&x, &TransformSpec::new(kind, 2), 0)?;
        // one evaluator per pair shares the rank orderings and covariance
        // across all six metrics
        let eval = PairEvaluator::new(&x, &z)?;
        values.push([
            eval.average_rank(k)?.value,
            eval.average_normalized_rank(k)?.value,
            eval.mean_reciprocal_rank()?.value,
            eval.trustworthiness(k)?.value,
            eval.continuity(k)?.value,
            eval.idpe(&IdpeParams { k, mode: IdpeMode::Consistent, ..Default::default() })?.value,
        ]);
    }

    let rows = [
        ("average_rank (k=5)", "lower"),
        ("average_normalized_rank", "lower"),
        ("mean_reciprocal_rank", "higher"),
        ("trustworthiness (k=5)", "higher"),
        ("continuity (k=5)", "higher"),
        ("idpe (consistent, k=5)", "lower"),
    ];
    for (i, (name, direction)) in rows.iter().enumerate() {
        println!(
            "{name:<26} {:>10.4} {:>10.4}   {direction}",
            values[0][i], values[1][i]
        );
    }
    Ok(())
}
