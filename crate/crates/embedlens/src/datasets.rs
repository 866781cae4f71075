//! Seeded synthetic dataset generators.
//!
//! Five generators, two labeled and three manifold-shaped:
//!
//! * `blobs`: two isotropic Gaussian clusters in `dim` dimensions, labels
//!   0/1
//! * `circles`: concentric circles of radius 1.0 (label 0) and 0.8
//!   (label 1)
//! * `moons`: two interleaved half-circles, labels 0/1
//! * `s_curve`: the classic 3-D S-shaped sheet, unlabeled
//! * `swiss_roll`: the classic 3-D rolled sheet, unlabeled
//!
//! Everything is driven by a ChaCha8 stream seeded with `spec.seed` via
//! `seed_from_u64`, so a spec reproduces its matrix bit-for-bit on any
//! platform. Draw order is part of each generator's contract and is
//! documented on the function; changing it is a breaking change.
//!
//! Shape noise is additive per-coordinate `N(0, noise^2)` applied to the
//! clean geometry *before* any standardization. All normal draws go through
//! `StandardNormal` scaled by `noise`, so `noise = 0` consumes the same
//! stream positions and reproduces the clean geometry exactly.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::numerics::standardize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Blobs,
    Circles,
    Moons,
    SCurve,
    SwissRoll,
}

impl DatasetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetKind::Blobs => "blobs",
            DatasetKind::Circles => "circles",
            DatasetKind::Moons => "moons",
            DatasetKind::SCurve => "s_curve",
            DatasetKind::SwissRoll => "swiss_roll",
        }
    }

    /// Native feature count; `None` for blobs, whose dimension is free.
    pub fn native_dim(&self) -> Option<usize> {
        match self {
            DatasetKind::Blobs => None,
            DatasetKind::Circles | DatasetKind::Moons => Some(2),
            DatasetKind::SCurve | DatasetKind::SwissRoll => Some(3),
        }
    }

    pub fn has_labels(&self) -> bool {
        matches!(
            self,
            DatasetKind::Blobs | DatasetKind::Circles | DatasetKind::Moons
        )
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "blobs" => DatasetKind::Blobs,
            "circles" => DatasetKind::Circles,
            "moons" => DatasetKind::Moons,
            "s_curve" => DatasetKind::SCurve,
            "swiss_roll" => DatasetKind::SwissRoll,
            other => return Err(Error::contract(format!("unknown dataset kind '{other}'"))),
        })
    }
}

fn default_dim() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n_samples: usize,
    #[serde(default)]
    pub noise: f64,
    /// Feature count; only meaningful for blobs (shapes are natively 2-D or
    /// 3-D and ignore it).
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Standardize columns (mean 0, population std 1) after generation.
    #[serde(default)]
    pub standardize: bool,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind, n_samples: usize, noise: f64, seed: u64) -> Self {
        DatasetSpec {
            kind,
            n_samples,
            noise,
            dim: kind.native_dim().unwrap_or(default_dim()),
            seed,
            standardize: false,
        }
    }

    fn validate(&self, expected: DatasetKind) -> Result<()> {
        if self.kind != expected {
            return Err(Error::contract(format!(
                "spec kind is {}, generator expects {expected}",
                self.kind
            )));
        }
        if self.n_samples < 4 {
            return Err(Error::contract(format!(
                "n_samples must be at least 4, got {}",
                self.n_samples
            )));
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::contract(format!(
                "noise must be finite and nonnegative, got {}",
                self.noise
            )));
        }
        if self.kind == DatasetKind::Blobs && self.dim < 2 {
            return Err(Error::contract(format!(
                "blobs need dim >= 2, got {}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &DatasetSpec) -> Result<DataMatrix> {
    match spec.kind {
        DatasetKind::Blobs => make_blobs(spec),
        DatasetKind::Circles => make_circles(spec),
        DatasetKind::Moons => make_moons(spec),
        DatasetKind::SCurve => make_s_curve(spec),
        DatasetKind::SwissRoll => make_swiss_roll(spec),
    }
}

/////////////////////////////////////////////////////////////////////////////
// Blobs
/////////////////////////////////////////////////////////////////////////////

/// Center placement diagnostics from [`make_blobs_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlobsDetails {
    pub centers: [Vec<f64>; 2],
    /// How many center draws it took (1 = first draw accepted).
    pub attempts: usize,
    /// Euclidean distance between the accepted centers.
    pub separation: f64,
    /// Whether `separation >= 6 * noise` was achieved. With large noise in
    /// few dimensions the target can exceed the diameter of the center box,
    /// so after [`MAX_CENTER_ATTEMPTS`] draws the best-separated pair is
    /// kept and this is false.
    pub separation_met: bool,
}

/// Center draws are capped so impossible separation targets terminate.
pub const MAX_CENTER_ATTEMPTS: usize = 64;

pub fn make_blobs(spec: &DatasetSpec) -> Result<DataMatrix> {
    make_blobs_detailed(spec).map(|(m, _)| m)
}

/// Two Gaussian clusters of `n/2` samples each (the extra sample goes to
/// cluster 0 when `n` is odd), each sample `center + noise * z` with `z`
/// standard normal per coordinate. Labels are the cluster id.
///
/// Centers are uniform on `[-10, 10]^dim` and re-drawn (both together)
/// until they are at least `6 * noise` apart, keeping clusters clearly
/// separated at every configured noise level; see [`BlobsDetails`] for the
/// cap. Draw order: per attempt, center 0's coordinates then center 1's;
/// then row-major standard normals, cluster 0 rows first.
pub fn make_blobs_detailed(spec: &DatasetSpec) -> Result<(DataMatrix, BlobsDetails)> {
    spec.validate(DatasetKind::Blobs)?;
    let n = spec.n_samples;
    let dim = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let target = 6.0 * spec.noise;
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut attempts = 0;
    while attempts < MAX_CENTER_ATTEMPTS {
        attempts += 1;
        let c0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let c1: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let sep = c0
            .iter()
            .zip(&c1)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let better = best.as_ref().map_or(true, |&(_, _, s)| sep > s);
        if better {
            best = Some((c0, c1, sep));
        }
        if sep >= target {
            break;
        }
    }
    let (c0, c1, separation) = best.expect("at least one attempt");

    let n1 = n / 2;
    let n0 = n - n1;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (count, center, label) in [(n0, &c0, 0i64), (n1, &c1, 1i64)] {
        for _ in 0..count {
            let row: Vec<f64> = center
                .iter()
                .map(|&c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + spec.noise * z
                })
                .collect();
            rows.push(row);
            labels.push(label);
        }
    }
    let details = BlobsDetails {
        centers: [c0, c1],
        attempts,
        separation,
        separation_met: separation >= target,
    };
    let m = DataMatrix::from_rows(rows, Some(labels))?;
    Ok((maybe_standardize(m, spec)?, details))
}

/////////////////////////////////////////////////////////////////////////////
// Circles and moons
/////////////////////////////////////////////////////////////////////////////

/// `n - n/2` points on the unit circle (label 0) and `n/2` on a concentric
/// circle of radius 0.8 (label 1). Angles sit on regular grids
/// `2 pi j / count` with the endpoint excluded (0 and 2 pi coincide), then
/// `N(0, noise^2)` is added per coordinate in row-major order, outer circle
/// rows first.
pub fn make_circles(spec: &DatasetSpec) -> Result<DataMatrix> {
    spec.validate(DatasetKind::Circles)?;
    let n = spec.n_samples;
    let n_in = n / 2;
    let n_out = n - n_in;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n_out {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n_out as f64;
        rows.push(vec![theta.cos(), theta.sin()]);
        labels.push(0);
    }
    for j in 0..n_in {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n_in as f64;
        rows.push(vec![0.8 * theta.cos(), 0.8 * theta.sin()]);
        labels.push(1);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    add_noise(&mut rows, spec.noise, &mut rng);
    maybe_standardize(DataMatrix::from_rows(rows, Some(labels))?, spec)
}

/// Outer half-circle `(cos t, sin t)` (label 0) against the inner moon
/// `(1 - cos t, 0.5 - sin t)` (label 1), `t` on the inclusive grid over
/// `[0, pi]`. Row split and noise order are as in [`make_circles`].
pub fn make_moons(spec: &DatasetSpec) -> Result<DataMatrix> {
    spec.validate(DatasetKind::Moons)?;
    let n = spec.n_samples;
    let n_in = n / 2;
    let n_out = n - n_in;
    let grid = |j: usize, count: usize| {
        if count <= 1 {
            0.0
        } else {
            std::f64::consts::PI * j as f64 / (count - 1) as f64
        }
    };
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n_out {
        let t = grid(j, n_out);
        rows.push(vec![t.cos(), t.sin()]);
        labels.push(0);
    }
    for j in 0..n_in {
        let t = grid(j, n_in);
        rows.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
        labels.push(1);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    add_noise(&mut rows, spec.noise, &mut rng);
    maybe_standardize(DataMatrix::from_rows(rows, Some(labels))?, spec)
}

/////////////////////////////////////////////////////////////////////////////
// S-curve and swiss roll
/////////////////////////////////////////////////////////////////////////////

pub fn make_s_curve(spec: &DatasetSpec) -> Result<DataMatrix> {
    make_s_curve_detailed(spec).map(|(m, _)| m)
}

/// Points `(sin t, 2u, sign(t) (cos t - 1))` with `t ~ U(-3pi/2, 3pi/2)`
/// and `u ~ U(0, 1)`; unlabeled. The returned vector holds each row's `t`,
/// the position along the curve.
///
/// Draw order: all `n` values of `t`, then all `n` values of `u`, then
/// row-major noise. Coordinate ranges at zero noise: the first is
/// `[-1, 1]`; the third spans `[-2, 2]`, since `t > 0` gives
/// `cos t - 1` in `[-2, 0]` while `t < 0` flips it to `1 - cos t` in
/// `[0, 2]`.
pub fn make_s_curve_detailed(spec: &DatasetSpec) -> Result<(DataMatrix, Vec<f64>)> {
    spec.validate(DatasetKind::SCurve)?;
    let n = spec.n_samples;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ts: Vec<f64> = (0..n)
        .map(|_| 3.0 * std::f64::consts::PI * (rng.gen::<f64>() - 0.5))
        .collect();
    let us: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut rows: Vec<Vec<f64>> = ts
        .iter()
        .zip(&us)
        .map(|(&t, &u)| vec![t.sin(), 2.0 * u, t.signum() * (t.cos() - 1.0)])
        .collect();
    add_noise(&mut rows, spec.noise, &mut rng);
    let m = maybe_standardize(DataMatrix::from_rows(rows, None)?, spec)?;
    Ok((m, ts))
}

pub fn make_swiss_roll(spec: &DatasetSpec) -> Result<DataMatrix> {
    make_swiss_roll_detailed(spec).map(|(m, _)| m)
}

/// Points `(t cos t, 21 v, t sin t)` with `t = 1.5 pi (1 + 2u)` and
/// `u, v ~ U(0, 1)`; unlabeled. The returned vector holds each row's `t`.
/// At zero noise `sqrt(x^2 + z^2)` recovers `t` exactly (up to rounding).
/// Draw order as in [`make_s_curve_detailed`]: all `t`, all `v`, noise.
pub fn make_swiss_roll_detailed(spec: &DatasetSpec) -> Result<(DataMatrix, Vec<f64>)> {
    spec.validate(DatasetKind::SwissRoll)?;
    let n = spec.n_samples;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ts: Vec<f64> = (0..n)
        .map(|_| 1.5 * std::f64::consts::PI * (1.0 + 2.0 * rng.gen::<f64>()))
        .collect();
    let vs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut rows: Vec<Vec<f64>> = ts
        .iter()
        .zip(&vs)
        .map(|(&t, &v)| vec![t * t.cos(), 21.0 * v, t * t.sin()])
        .collect();
    add_noise(&mut rows, spec.noise, &mut rng);
    let m = maybe_standardize(DataMatrix::from_rows(rows, None)?, spec)?;
    Ok((m, ts))
}

fn add_noise(rows: &mut [Vec<f64>], noise: f64, rng: &mut ChaCha8Rng) {
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += noise * z;
        }
    }
}

fn maybe_standardize(m: DataMatrix, spec: &DatasetSpec) -> Result<DataMatrix> {
    if spec.standardize {
        standardize(&m)
    } else {
        Ok(m)
    }
}
