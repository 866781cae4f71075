//! The two IDPE modes side by side, including the rank-deficient case.
//!
//!     cargo run --release --example idpe_modes

use embedlens::datasets::{generate, DatasetKind, DatasetSpec};
use embedlens::metrics::{idpe, IdpeMode, IdpeParams};
use embedlens::transforms::{grp_transform, pca_fit_transform};

fn main() -> embedlens::Result<()> {
    let spec = DatasetSpec {
        dim: 8,
        ..DatasetSpec::new(DatasetKind::Blobs, 150, 1.0, 11)
    };
    let x = generate(&spec)?;

    let box1 = IdpeParams { mode: IdpeMode::Box1, ..Default::default() };
    let consistent = IdpeParams { mode: IdpeMode::Consistent, ..Default::default() };

    // box1 compares squared L2 against Mahalanobis, so identity is not 0;
    // consistent measures pure neighbor disagreement, so identity is 0
    println!("identity embedding:");
    println!("  box1       = {:.6}", idpe(&x, &x, &box1)?.value);
    println!("  consistent = {:.6}", idpe(&x, &x, &consistent)?.value);

    println!("\npca -> 2 vs grp -> 2 (lower preserves distances better):");
    let pca = pca_fit_transform(&x, 2)?;
    let grp = grp_transform(&x, 2, 0)?;
    for (name, z) in [("pca", &pca), ("grp", &grp)] {
        println!(
            "  {name}: box1 = {:>9.4}  consistent = {:>7.4}",
            idpe(&x, z, &box1)?.value,
            idpe(&x, z, &consistent)?.value,
        );
    }

    // more columns than rows: the covariance is singular, the auto policy
    // falls back to the pseudo-inverse, and the report says so
    let wide = generate(&DatasetSpec {
        dim: 64,
        ..DatasetSpec::new(DatasetKind::Blobs, 30, 1.0, 2)
    })?;
    let report = idpe(&wide, &pca_fit_transform(&wide, 2)?, &consistent)?;
    println!(
        "\n30 x 64 (singular covariance): idpe = {:.4}, inversion = {}",
        report.value,
        report.inversion_strategy.expect("idpe always records one"),
    );
    Ok(())
}
