//! Downstream-task probe: binary logistic regression on an embedding.
//!
//! The probe is intentionally plain. A stratified 80/20 split, feature
//! standardization fitted on the training fold, and 500 full-batch gradient
//! steps at a fixed rate with a small L2 penalty (bias excluded). The
//! returned number is test-fold accuracy: a blunt but honest measure of how
//! linearly separable the classes stayed after embedding.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

const ITERATIONS: usize = 500;
const LEARNING_RATE: f64 = 0.1;
const L2_PENALTY: f64 = 1e-4;
const TEST_FRACTION: f64 = 0.2;
const MIN_CLASS_SIZE: usize = 5;

/// Trains the probe on `z` and returns held-out accuracy in `[0, 1]`.
///
/// `z` must carry labels with exactly two distinct values, each backed by
/// at least [`MIN_CLASS_SIZE`] rows. The split shuffles each class's row
/// indices with a ChaCha8 stream on `seed` (lower label value first) and
/// holds out the first `max(1, round(0.2 * class size))` of each.
pub fn logistic_accuracy(z: &DataMatrix, seed: u64) -> Result<f64> {
    let labels = z
        .labels()
        .ok_or_else(|| Error::contract("accuracy probe needs labeled data"))?;
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::contract(format!(
            "accuracy probe needs exactly 2 classes, got {}",
            classes.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for &class in &classes {
        let mut idx: Vec<usize> = (0..z.n_rows()).filter(|&i| labels[i] == class).collect();
        if idx.len() < MIN_CLASS_SIZE {
            return Err(Error::degenerate(format!(
                "class {class} has {} rows, need at least {MIN_CLASS_SIZE}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let held = ((TEST_FRACTION * idx.len() as f64).round() as usize).max(1);
        test.extend(idx[..held].iter().copied());
        train.extend(idx[held..].iter().copied());
    }

    let d = z.n_cols();
    let binary = |i: usize| -> f64 {
        if labels[i] == classes[1] {
            1.0
        } else {
            0.0
        }
    };

    // standardization fitted on the training fold only
    let mut mean = vec![0.0f64; d];
    for &i in &train {
        for (m, &v) in mean.iter_mut().zip(z.row_slice(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= train.len() as f64;
    }
    let mut scale = vec![0.0f64; d];
    for &i in &train {
        for (c, &v) in z.row_slice(i).iter().enumerate() {
            let diff = v - mean[c];
            scale[c] += diff * diff;
        }
    }
    for (c, s) in scale.iter_mut().enumerate() {
        let std = (*s / train.len() as f64).sqrt();
        *s = if std <= 1e-12 * mean[c].abs().max(1.0) {
            1.0
        } else {
            std
        };
    }
    let feature = |i: usize, c: usize| (z.row_slice(i)[c] - mean[c]) / scale[c];

    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    let m_inv = 1.0 / train.len() as f64;
    let mut grad = vec![0.0f64; d];
    for _ in 0..ITERATIONS {
        grad.fill(0.0);
        let mut grad_b = 0.0;
        for &i in &train {
            let mut t = b;
            for c in 0..d {
                t += w[c] * feature(i, c);
            }
            let err = sigmoid(t) - binary(i);
            for c in 0..d {
                grad[c] += err * feature(i, c);
            }
            grad_b += err;
        }
        for c in 0..d {
            w[c] -= LEARNING_RATE * (grad[c] * m_inv + L2_PENALTY * w[c]);
        }
        b -= LEARNING_RATE * grad_b * m_inv;
    }

    let mut correct = 0usize;
    for &i in &test {
        let mut t = b;
        for c in 0..d {
            t += w[c] * feature(i, c);
        }
        let predicted = if sigmoid(t) >= 0.5 { 1.0 } else { 0.0 };
        if predicted == binary(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

// overflow-safe in both tails
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
