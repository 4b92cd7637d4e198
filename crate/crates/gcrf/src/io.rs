//! File formats: numeric matrix CSV, the model JSON document and the
//! per-iteration trace CSV.
//!
//! * Data CSV: plain comma-separated numbers, one sample per row, optional
//!   header row (detected by failing to parse as numbers).
//! * Model JSON: `{"n", "p", "lambda", "theta"}` with row-major arrays;
//!   values survive a write/read round trip bit-exactly.
//! * Trace CSV: `iter,objective,grad_norm,primal_residual,dual_residual,mu,elapsed_ms`
//!   with empty fields for columns a solver does not produce.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::solver::TraceRecord;

/// Reads a numeric matrix; rows are samples. A leading row that does not
/// parse as numbers is treated as a header and skipped.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut first_content_line = true;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::parse(path, line_no, "non-finite value"));
                }
                match width {
                    None => width = Some(values.len()),
                    Some(w) if values.len() != w => {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!("expected {} columns, got {}", w, values.len()),
                        ));
                    }
                    _ => {}
                }
                rows.push(values);
            }
            Err(_) if first_content_line => {
                // header row
            }
            Err(_) => {
                return Err(Error::parse(path, line_no, "non-numeric cell"));
            }
        }
        first_content_line = false;
    }

    let ncols = width.unwrap_or(0);
    if rows.is_empty() {
        return Err(Error::Degenerate(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(flat.len() / ncols, ncols, &flat))
}

/// Writes a matrix as plain CSV without a header. The shortest
/// round-trippable decimal form is used, so re-reading reproduces every
/// value bit-exactly and re-running produces byte-identical files.
pub fn write_matrix_csv(path: impl AsRef<Path>, matrix: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", matrix[(i, j)]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    n: usize,
    p: usize,
    lambda: Vec<f64>,
    theta: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn write_model_json(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    let path = path.as_ref();
    let file = ModelFile {
        n: params.input_dim(),
        p: params.output_dim(),
        lambda: row_major(params.lambda()),
        theta: row_major(params.theta()),
    };
    let mut body = serde_json::to_string(&file).map_err(|e| Error::ModelFormat {
        path: path.into(),
        msg: e.to_string(),
    })?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_model_json(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::ModelFormat {
        path: path.into(),
        msg: e.to_string(),
    })?;
    if file.lambda.len() != file.p * file.p {
        return Err(Error::ModelFormat {
            path: path.into(),
            msg: format!(
                "lambda has {} entries, expected {}",
                file.lambda.len(),
                file.p * file.p
            ),
        });
    }
    if file.theta.len() != file.n * file.p {
        return Err(Error::ModelFormat {
            path: path.into(),
            msg: format!(
                "theta has {} entries, expected {}",
                file.theta.len(),
                file.n * file.p
            ),
        });
    }
    let lambda = DMatrix::from_row_slice(file.p, file.p, &file.lambda);
    let theta = DMatrix::from_row_slice(file.n, file.p, &file.theta);
    ModelParams::new(lambda, theta)
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &[TraceRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out =
        String::from("iter,objective,grad_norm,primal_residual,dual_residual,mu,elapsed_ms\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for rec in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            rec.iteration,
            rec.objective,
            opt(rec.grad_norm),
            opt(rec.primal_residual),
            opt(rec.dual_residual),
            opt(rec.mu),
            rec.elapsed_ms
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("gcrf_io_{}_{}", std::process::id(), name))
    }

    #[test]
    fn matrix_csv_round_trip_is_bit_exact() {
        let m = DMatrix::from_row_slice(
            2,
            3,
            &[
                1.0 / 3.0,
                -std::f64::consts::E,
                1e-300,
                0.1 + 0.2,
                -0.0,
                12345.6789,
            ],
        );
        let path = temp("roundtrip.csv");
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(back.nrows(), 2);
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn matrix_csv_skips_header() {
        let path = temp("header.csv");
        std::fs::write(&path, "a,b\n1.0,2.0\n3.0,4.0\n").unwrap();
        let m = read_matrix_csv(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(m.nrows(), 2);
        assert_eq!(m[(1, 1)], 4.0);
    }

    #[test]
    fn matrix_csv_ragged_row_is_an_error() {
        let path = temp("ragged.csv");
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        let err = read_matrix_csv(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_error_names_path() {
        let err = read_matrix_csv("/nonexistent/gcrf.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/gcrf.csv"));
    }

    #[test]
    fn model_json_round_trip_is_bit_exact() {
        let params = ModelParams::new(
            DMatrix::from_row_slice(2, 2, &[1.0 + 1e-16, 0.1, 0.1, 2.0 / 3.0]),
            DMatrix::from_row_slice(3, 2, &[0.1, -0.2, 1e-17, 0.4, -0.5, 0.6]),
        )
        .unwrap();
        let path = temp("model.json");
        write_model_json(&path, &params).unwrap();
        let back = read_model_json(&path).unwrap();
        std::fs::remove_file(&path).ok();
        for (a, b) in params.lambda().iter().zip(back.lambda().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in params.theta().iter().zip(back.theta().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn model_json_rejects_wrong_array_length() {
        let path = temp("bad_model.json");
        std::fs::write(&path, r#"{"n":1,"p":2,"lambda":[1.0],"theta":[0.0,0.0]}"#).unwrap();
        let err = read_model_json(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, Error::ModelFormat { .. }));
    }

    #[test]
    fn trace_csv_has_schema_header_and_empty_fields() {
        let trace = vec![TraceRecord {
            iteration: 0,
            objective: 2.5,
            grad_norm: Some(0.1),
            primal_residual: None,
            dual_residual: None,
            mu: None,
            elapsed_ms: 0.0,
        }];
        let path = temp("trace.csv");
        write_trace_csv(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::remove_file(&path).ok();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iter,objective,grad_norm,primal_residual,dual_residual,mu,elapsed_ms"
        );
        assert_eq!(lines.next().unwrap(), "0,2.5,0.1,,,,0");
    }
}
