//! Generate each synthetic dataset and show what comes out.
//!
//!     cargo run --example generate_datasets

use embedlens::datasets::{generate, DatasetKind, DatasetSpec};
use embedlens::io::write_matrix_csv;

fn main() -> embedlens::Result<()> {
    let kinds = [
        DatasetKind::Blobs,
        DatasetKind::Circles,
        DatasetKind::Moons,
        DatasetKind::SCurve,
        DatasetKind::SwissRoll,
    ];

    for kind in kinds {
        let mut spec = DatasetSpec::new(kind, 200, 0.05, 42);
        if kind == DatasetKind::Blobs {
            spec.dim = 4;
            spec.noise = 0.8;
        }
        let m = generate(&spec)?;
        println!(
            "{:<10} {} x {}  labels: {}",
            kind.to_string(),
            m.n_rows(),
            m.n_cols(),
            match m.labels() {
                Some(l) => format!("{{0: {}, 1: {}}}", count(l, 0), count(l, 1)),
                None => "none".to_string(),
            }
        );
        for i in 0..2 {
            let row: Vec<String> = m.row_slice(i).iter().map(|v| format!("{v:+.3}")).collect();
            println!("           [{}]", row.join(", "));
        }
    }

    // same spec, same seed -> same bytes; that's the whole reproducibility story
    let spec = DatasetSpec::new(DatasetKind::SwissRoll, 200, 0.05, 42);
    assert_eq!(generate(&spec)?, generate(&spec)?);

    let path = std::env::temp_dir().join("embedlens_blobs.csv");
    write_matrix_csv(&path, &generate(&DatasetSpec::new(DatasetKind::Blobs, 100, 1.0, 0))?)?;
    println!("\nwrote a matrix CSV to {}", path.display());
    Ok(())
}

fn count(labels: &[i64], class: i64) -> usize {
    labels.iter().filter(|&&l| l == class).count()
}
