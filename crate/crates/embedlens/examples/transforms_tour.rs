//! PCA, GRP, and t-SNE on the moons shape, scored three ways.
//!
//!     cargo run --release --example transforms_tour

use embedlens::datasets::{generate, DatasetKind, DatasetSpec};
use embedlens::metrics::{IdpeMode, IdpeParams, PairEvaluator};
use embedlens::transforms::{tsne_fit, TransformKind, TransformSpec, TsneParams};
use embedlens::transforms::apply_transform;

fn main() -> embedlens::Result<()> {
    // 3-D s-curve down to 2-D: enough structure that the transforms differ
    let x = generate(&DatasetSpec::new(DatasetKind::SCurve, 300, 0.05, 9))?;

    println!("s_curve 300 x 3 -> 2\n");
    println!("{:<6} {:>8} {:>8} {:>8}", "", "trust", "cont", "idpe_c");
    for kind in [TransformKind::Pca, TransformKind::Grp, TransformKind::Tsne] {
        let mut spec = TransformSpec::new(kind, 2);
        spec.tsne.iterations = 400; // plenty for n = 300
        let z = apply_transform(&x, &spec, 1)?;
        let eval = PairEvaluator::new(&x, &z)?;
        println!(
            "{:<6} {:>8.4} {:>8.4} {:>8.4}",
            kind.to_string(),
            eval.trustworthiness(5)?.value,
            eval.continuity(5)?.value,
            eval.idpe(&IdpeParams { mode: IdpeMode::Consistent, ..Default::default() })?.value,
        );
    }

    // the full t-SNE result also carries its diagnostics
    let r = tsne_fit(
        &x,
        &TsneParams { iterations: 400, ..TsneParams::default() },
        2,
        1,
    )?;
    let perp = r.realized_perplexities;
    let spread = perp.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
        (lo.min(p), hi.max(p))
    });
    println!(
        "\nt-SNE calibration: realized perplexity in [{:.5}, {:.5}] (target 30)",
        spread.0, spread.1
    );
    let (first, last) = (r.kl_trace.first().unwrap(), r.kl_trace.last().unwrap());
    println!(
        "KL(P||Q): {:.3} at iteration {} -> {:.3} at iteration {}",
        first.1, first.0, last.1, last.0
    );
    Ok(())
}
