use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;

/// Exact header of a results CSV.
pub const RESULTS_HEADER: &str =
    "dataset,noise,dim,transform,metric,mode,k,repetition,seed,value,inversion_strategy,wall_time_ms";

/// One metric evaluation in long format.
///
/// `mode` is empty except for IDPE rows; `inversion_strategy` is empty for
/// metrics that never touch the covariance, the strategy name for IDPE
/// rows, and the literal `error` on marker rows. Marker rows also carry a
/// `NaN` value (the reason is logged to stderr by the sweep). `k` follows
/// the [`super::MetricSpec`] conventions: 1 for mean reciprocal rank, 0 for
/// the accuracy probe.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResultRow {
    pub dataset: String,
    pub noise: f64,
    pub dim: usize,
    pub transform: String,
    pub metric: String,
    pub mode: String,
    pub k: usize,
    pub repetition: usize,
    pub seed: u64,
    pub value: f64,
    pub inversion_strategy: String,
    pub wall_time_ms: u64,
}

impl ResultRow {
    /// Marker rows stand in for failed evaluations.
    pub fn is_error(&self) -> bool {
        self.value.is_nan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => return Err(Error::contract(format!("unknown output format '{other}'"))),
        })
    }
}

/// Renders rows as CSV: the exact [`RESULTS_HEADER`], LF endings, reals as
/// `{:.16e}` so parsing and re-serializing is byte-identical.
pub fn results_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.16e},{},{},{},{},{},{},{},{:.16e},{},{}",
            r.dataset,
            r.noise,
            r.dim,
            r.transform,
            r.metric,
            r.mode,
            r.k,
            r.repetition,
            r.seed,
            r.value,
            r.inversion_strategy,
            r.wall_time_ms
        );
    }
    out
}

/// Renders rows as a JSON document `{"config": ..., "rows": [...]}` so a
/// results file carries the grid that produced it. Non-finite values (the
/// error markers) serialize as `null`.
pub fn results_to_json(rows: &[ResultRow], config: &ExperimentConfig) -> String {
    #[derive(serde::Serialize)]
    struct Document<'a> {
        config: &'a ExperimentConfig,
        rows: &'a [ResultRow],
    }
    serde_json::to_string_pretty(&Document { config, rows })
        .expect("result serialization cannot fail")
}

pub fn write_results(
    rows: &[ResultRow],
    config: &ExperimentConfig,
    path: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::contract("refusing to write an empty results file"));
    }
    let text = match format {
        OutputFormat::Csv => results_to_csv(rows),
        OutputFormat::Json => results_to_json(rows, config),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_results_csv(&text, &path.display().to_string())
}

pub fn parse_results_csv(text: &str, source: &str) -> Result<Vec<ResultRow>> {
    let fail = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == RESULTS_HEADER => {}
        Some((_, header)) => {
            return Err(fail(1, format!("unexpected header '{header}'")));
        }
        None => return Err(fail(1, "empty file".to_string())),
    }

    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 12 {
            return Err(fail(
                lineno,
                format!("expected 12 fields, found {}", fields.len()),
            ));
        }
        let real = |i: usize, name: &str| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| fail(lineno, format!("{name}: invalid real '{}'", fields[i])))
        };
        let int = |i: usize, name: &str| -> Result<usize> {
            fields[i]
                .parse()
                .map_err(|_| fail(lineno, format!("{name}: invalid integer '{}'", fields[i])))
        };
        rows.push(ResultRow {
            dataset: fields[0].to_string(),
            noise: real(1, "noise")?,
            dim: int(2, "dim")?,
            transform: fields[3].to_string(),
            metric: fields[4].to_string(),
            mode: fields[5].to_string(),
            k: int(6, "k")?,
            repetition: int(7, "repetition")?,
            seed: fields[8]
                .parse()
                .map_err(|_| fail(lineno, format!("seed: invalid integer '{}'", fields[8])))?,
            value: real(9, "value")?,
            inversion_strategy: fields[10].to_string(),
            wall_time_ms: fields[11]
                .parse()
                .map_err(|_| fail(lineno, format!("wall_time_ms: invalid integer '{}'", fields[11])))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ResultRow {
        ResultRow {
            dataset: "blobs".into(),
            // both reals exactly representable, so the expected text below
            // can be written by hand
            noise: 0.5,
            dim: 2,
            transform: "pca".into(),
            metric: "trustworthiness".into(),
            mode: String::new(),
            k: 5,
            repetition: 0,
            seed: 0,
            value: 0.984375,
            inversion_strategy: String::new(),
            wall_time_ms: 0,
        }
    }

    #[test]
    fn one_row_gives_a_two_line_file() {
        let text = results_to_csv(&[sample_row()]);
        assert_eq!(
            text,
            format!(
                "{RESULTS_HEADER}\nblobs,5.0000000000000000e-1,2,pca,trustworthiness,,5,0,0,\
                 9.8437500000000000e-1,,0\n"
            )
        );
    }

    #[test]
    fn parse_and_reserialize_is_byte_identical() {
        let mut rows = vec![sample_row()];
        rows.push(ResultRow {
            metric: "idpe".into(),
            mode: "box1".into(),
            value: 1.2345678901234567e-3,
            inversion_strategy: "pseudo_inverse".into(),
            repetition: 3,
            seed: 3,
            ..sample_row()
        });
        rows.push(ResultRow {
            value: f64::NAN,
            inversion_strategy: "error".into(),
            repetition: 4,
            seed: 4,
            ..sample_row()
        });
        let text = results_to_csv(&rows);
        let parsed = parse_results_csv(&text, "t.csv").unwrap();
        assert_eq!(results_to_csv(&parsed), text);
        assert!(parsed[2].is_error());
    }

    #[test]
    fn json_echoes_the_config_field_for_field() {
        let config = ExperimentConfig::blobs_suite();
        let doc: serde_json::Value =
            serde_json::from_str(&results_to_json(&[sample_row()], &config)).unwrap();
        assert_eq!(doc["config"], serde_json::to_value(&config).unwrap());
        assert_eq!(doc["rows"][0]["metric"], "trustworthiness");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_results_csv("dataset,nope\n", "t.csv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");

        let text = format!("{RESULTS_HEADER}\nblobs,0.5,2,pca,ar,,5,0,0\n");
        let err = parse_results_csv(&text, "t.csv").unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("expected 12 fields"), "{msg}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }
}
