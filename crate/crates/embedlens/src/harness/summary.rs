use std::collections::BTreeMap;

use crate::harness::results::ResultRow;

/// Aggregate of one grid cell over its repetitions.
///
/// `count` is the number of successful repetitions; `failed` the number of
/// error-marker rows folded into the cell. Statistics cover successful
/// values only: `std` is the sample standard deviation (n - 1 divisor, 0
/// when fewer than two values), and all four statistics are `NaN` when
/// every repetition failed.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SummaryCell {
    pub dataset: String,
    pub noise: f64,
    pub dim: usize,
    pub transform: String,
    pub metric: String,
    pub mode: String,
    pub k: usize,
    pub count: usize,
    pub failed: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Summary {
    pub cells: Vec<SummaryCell>,
    pub total_rows: usize,
    pub failed_rows: usize,
}

/// Collapses long-format rows over the repetition axis. Cells come out
/// sorted by (dataset, noise, dim, transform, metric, mode, k).
pub fn summarize(rows: &[ResultRow]) -> Summary {
    // noise >= 0 always, so its bit pattern orders like the value
    type Key = (String, u64, usize, String, String, String, usize);
    let mut cells: BTreeMap<Key, (Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let key = (
            r.dataset.clone(),
            r.noise.to_bits(),
            r.dim,
            r.transform.clone(),
            r.metric.clone(),
            r.mode.clone(),
            r.k,
        );
        let entry = cells.entry(key).or_default();
        if r.is_error() {
            entry.1 += 1;
        } else {
            entry.0.push(r.value);
        }
    }

    let failed_rows = cells.values().map(|(_, f)| f).sum();
    let cells = cells
        .into_iter()
        .map(|((dataset, noise, dim, transform, metric, mode, k), (values, failed))| {
            let count = values.len();
            let (mean, std, min, max) = if count == 0 {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            } else {
                let mean = values.iter().sum::<f64>() / count as f64;
                let std = if count < 2 {
                    0.0
                } else {
                    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
                    (ss / (count - 1) as f64).sqrt()
                };
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (mean, std, min, max)
            };
            SummaryCell {
                dataset,
                noise: f64::from_bits(noise),
                dim,
                transform,
                metric,
                mode,
                k,
                count,
                failed,
                mean,
                std,
                min,
                max,
            }
        })
        .collect();

    Summary {
        cells,
        total_rows: rows.len(),
        failed_rows,
    }
}

/// Pretty JSON rendering; `NaN` statistics come out as `null`.
pub fn summary_to_json(summary: &Summary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serialization cannot fail")
}
