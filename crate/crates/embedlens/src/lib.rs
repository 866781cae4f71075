//! embedlens: measures how faithfully a low-dimensional embedding preserves
//! the structure of the high-dimensional data it came from.
//!
//! The crate covers the full loop of a small evaluation study:
//!
//! * [`datasets`]: seeded synthetic generators (Gaussian blobs, circles,
//!   moons, an S-curve, a swiss roll)
//! * [`transforms`]: PCA, Gaussian random projection, exact t-SNE, and a
//!   logistic-regression accuracy probe
//! * [`knn`]: exact flat L2 nearest-neighbor search with deterministic
//!   tie-breaking
//! * [`numerics`]: covariance, guarded inversion, Mahalanobis distance,
//!   standardization
//! * [`metrics`]: IDPE plus five neighborhood-preservation metrics
//!   (average rank, average normalized rank, mean reciprocal rank,
//!   trustworthiness, continuity)
//! * [`harness`]: config-driven sweeps over dataset x noise x dimension x
//!   transform grids with deterministic, byte-stable output
//!
//! Everything seeded is reproducible: the same seed gives the same bytes,
//! regardless of thread count. See the `examples/` directory for runnable
//! tours of each area.

pub mod datasets;
pub mod error;
pub mod harness;
pub mod io;
pub mod knn;
pub mod matrix;
pub mod metrics;
pub mod numerics;
pub mod transforms;

pub use error::{Error, Result};
pub use matrix::DataMatrix;
