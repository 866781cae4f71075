//! Exact k-nearest-neighbor search with the flat L2 index.
//!
//!     cargo run --release --example knn_search

use std::time::Instant;

use embedlens::datasets::{generate, DatasetKind, DatasetSpec};
use embedlens::knn::build_index;
use embedlens::DataMatrix;

fn main() -> embedlens::Result<()> {
    // Tie-breaking is part of the contract: equal distances resolve to the
    // lower row index. Point 2.0 sits exactly between 1.0 and 3.0.
    let line = DataMatrix::from_rows(
        vec![vec![1.0], vec![2.0], vec![3.0], vec![10.0]],
        None,
    )?;
    let index = build_index(&line)?;
    let table = index.search(&line, 2, false)?;
    println!("neighbors of 2.0 (self excluded): {:?}", table.neighbors(1));
    assert_eq!(table.neighbors(1), &[0, 2]);

    // distances come back squared; k includes the query itself only when asked
    let with_self = index.search(&line, 1, true)?;
    assert_eq!(with_self.neighbors(1), &[1]);
    assert_eq!(with_self.distances(1), &[0.0]);

    // exhaustive search stays practical well past toy sizes
    let spec = DatasetSpec {
        dim: 512,
        ..DatasetSpec::new(DatasetKind::Blobs, 1000, 2.0, 7)
    };
    let big = generate(&spec)?;
    let start = Instant::now();
    let index = build_index(&big)?;
    let table = index.search(&big, 5, false)?;
    println!(
        "1000 x 512, k=5: {:.1} ms, first row's neighbors {:?}",
        start.elapsed().as_secs_f64() * 1e3,
        table.neighbors(0)
    );
    Ok(())
}
