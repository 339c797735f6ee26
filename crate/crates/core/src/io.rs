//! Matrix files and result schemas.
//!
//! Matrix JSON form: an array of rows, each entry either a string in the
//! scalar grammar ("p/q", "p/q+r/si", floats with a '.') or an object
//! {"re": ..., "im": ...} of such strings. Exact entries round-trip
//! bit-exactly. CSV uses the same entry grammar, comma-separated.

use serde_json::{json, Value};

use crate::engine::{CongruenceWitness, WitnessMode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::reduction::{TransformationChain, TransformationStep};
use crate::scalar::{parse_scalar, Scalar};
use crate::solver::{Decision, DecisionStatus, VerifyReport};

pub fn matrix_to_json(m: &Matrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| {
            let row: Vec<Value> = (0..m.cols())
                .map(|j| Value::String(m[(i, j)].to_string()))
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

fn entry_from_json(v: &Value, row: usize, col: usize) -> Result<Scalar> {
    let fail = |msg: String| Error::Io(format!("entry ({row},{col}): {msg}"));
    match v {
        Value::String(s) => parse_scalar(s).map_err(|e| fail(e.to_string())),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Scalar::from_int(i))
            } else {
                Ok(Scalar::float(num_complex::Complex64::new(
                    n.as_f64().ok_or_else(|| fail("unreadable number".into()))?,
                    0.0,
                )))
            }
        }
        Value::Object(o) => {
            let part = |key: &str| -> Result<Scalar> {
                match o.get(key) {
                    None => Ok(Scalar::zero()),
                    Some(v) => entry_from_json(v, row, col),
                }
            };
            let re = part("re")?;
            let im = part("im")?;
            Ok(&re + &(&im * &Scalar::i()))
        }
        _ => Err(fail("expected a string, number or {re, im} object".into())),
    }
}

pub fn matrix_from_json(v: &Value) -> Result<Matrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Io("matrix JSON must be an array of rows".into()))?;
    let mut data = Vec::new();
    let mut cols: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Io(format!("row {i} is not an array")))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Io(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )))
            }
            _ => {}
        }
        for (j, entry) in row.iter().enumerate() {
            data.push(entry_from_json(entry, i, j)?);
        }
    }
    let cols = cols.unwrap_or(0);
    Matrix::new(rows.len(), cols, data)
}

pub fn read_matrix_json(text: &str) -> Result<Matrix> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Io(format!("invalid JSON: {e}")))?;
    matrix_from_json(&v)
}

pub fn write_matrix_json(m: &Matrix) -> String {
    matrix_to_json(m).to_string()
}

pub fn read_matrix_csv(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (j, cell) in line.split(',').enumerate() {
            let s = parse_scalar(cell.trim())
                .map_err(|e| Error::Io(format!("row {i}, column {j}: {e}")))?;
            row.push(s);
        }
        rows.push(row);
    }
    Matrix::from_rows(rows)
}

pub fn write_matrix_csv(m: &Matrix) -> String {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| m[(i, j)].to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn mode_str(mode: WitnessMode) -> &'static str {
    match mode {
        WitnessMode::Exact => "exact",
        WitnessMode::Numeric => "numeric",
    }
}

pub fn step_to_json(step: &TransformationStep) -> Value {
    json!({
        "source": step.source.to_string(),
        "target": step.target.to_string(),
        "justification": serde_json::to_value(step.justification).expect("serializable tag"),
        "X": matrix_to_json(&step.x),
        "residual": step.residual,
        "mode": mode_str(step.mode),
    })
}

pub fn chain_to_json(chain: &TransformationChain) -> Value {
    Value::Array(chain.steps().iter().map(step_to_json).collect())
}

pub fn status_str(status: DecisionStatus) -> &'static str {
    match status {
        DecisionStatus::Consistent => "Consistent",
        DecisionStatus::Inconsistent => "Inconsistent",
        DecisionStatus::Undecided => "Undecided",
    }
}

/// Decision JSON: {status, m, tau, upsilon, min_bound, notes[], chain?,
/// X?, certificate?{X0, d}, residual, seed}.
pub fn decision_to_json(d: &Decision) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("status".into(), json!(status_str(d.status)));
    obj.insert("m".into(), json!(d.m));
    obj.insert("tau".into(), json!(d.tau));
    obj.insert("upsilon".into(), json!(d.upsilon));
    obj.insert("min_bound".into(), json!(d.min_bound));
    obj.insert("notes".into(), json!(d.notes));
    if let Some(chain) = &d.chain {
        obj.insert("chain".into(), chain_to_json(chain));
    }
    if let Some(x) = &d.x {
        obj.insert("X".into(), matrix_to_json(x));
    }
    if let Some(cert) = &d.certificate {
        obj.insert(
            "certificate".into(),
            json!({
                "X0": matrix_to_json(&cert.x0),
                "d": cert.d.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            }),
        );
    }
    obj.insert("residual".into(), json!(d.residual));
    obj.insert("seed".into(), json!(d.seed));
    Value::Object(obj)
}

pub fn witness_to_json(w: &CongruenceWitness) -> Value {
    json!({
        "P": matrix_to_json(&w.p),
        "residual": w.residual,
        "mode": mode_str(w.mode),
        "seed": w.seed,
    })
}

pub fn verify_report_to_json(r: &VerifyReport) -> Value {
    json!({
        "pass": r.pass,
        "residual": r.residual,
        "exact": r.exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_exact() {
        let m = Matrix::from_rows(vec![
            vec![Scalar::from_ratio(1, 2), Scalar::from_ints(3, -4)],
            vec![Scalar::zero(), Scalar::i()],
        ])
        .unwrap();
        let text = write_matrix_json(&m);
        let back = read_matrix_json(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_accepts_objects_and_numbers() {
        let text = r#"[[{"re": "1/2", "im": "3/4"}, 2], ["0", "1"]]"#;
        let m = read_matrix_json(text).unwrap();
        assert_eq!(m[(0, 0)], Scalar::Exact(crate::scalar::GaussianRational::new(
            crate::scalar::Rational::new(1.into(), 2.into()),
            crate::scalar::Rational::new(3.into(), 4.into()),
        )));
        assert_eq!(m[(0, 1)], Scalar::from_int(2));
    }

    #[test]
    fn csv_roundtrip() {
        let text = "1/2+3/4i, 0\n-i, 7";
        let m = read_matrix_csv(text).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        let back = read_matrix_csv(&write_matrix_csv(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_entries_report_position() {
        let err = read_matrix_csv("1, x").unwrap_err();
        assert!(matches!(err, Error::Io(msg) if msg.contains("row 0, column 1")));
        let err = read_matrix_json("[[\"1\"],[\"2\",\"3\"]]").unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn empty_rows_preserved() {
        let m = Matrix::zeros(3, 0);
        let text = write_matrix_json(&m);
        assert_eq!(text, "[[],[],[]]");
        let back = read_matrix_json(&text).unwrap();
        assert_eq!((back.rows(), back.cols()), (3, 0));
    }
}
