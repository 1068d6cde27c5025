//! JSON files for boxes and functionals, and fixed-width number formatting.
//!
//! Box files hold `{"n", "m", "probs"}` with `probs` nested as
//! `[x][y][a][b]` (tripartite files add a trailing `[g]` axis).
//! Functional files hold either `{"n", "m", "correlators": [[..]]}` or
//! `{"n", "m", "coeffs": [x][y][a][b]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bell::BellFunctional;
use crate::boxes::{BipartiteBox, TripartiteBox, NS_TOL};
use crate::error::{Error, Result};

/// Significant digits used for every printed number.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` like C's `%.12g`.
pub fn format_sig(x: f64) -> String {
    format_sig_digits(x, SIG_DIGITS)
}

pub fn format_sig_digits(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    n: usize,
    m: usize,
    probs: Value,
}

/// Flattens a nested array of the given shape, naming the first bad
/// index in the error.
fn flatten(value: &Value, shape: &[usize], path: &mut String, out: &mut Vec<f64>) -> Result<()> {
    match shape.split_first() {
        None => match value.as_f64() {
            Some(v) => {
                out.push(v);
                Ok(())
            }
            None => Err(Error::validation(path.clone(), format!("expected a number, found {value}"))),
        },
        Some((&len, rest)) => {
            let items = value
                .as_array()
                .ok_or_else(|| Error::validation(path.clone(), "expected an array"))?;
            if items.len() != len {
                return Err(Error::validation(
                    path.clone(),
                    format!("expected {len} entries, found {}", items.len()),
                ));
            }
            for (i, item) in items.iter().enumerate() {
                let mark = path.len();
                path.push_str(&format!("[{i}]"));
                flatten(item, rest, path, out)?;
                path.truncate(mark);
            }
            Ok(())
        }
    }
}

fn nest(flat: &[f64], shape: &[usize]) -> Value {
    match shape.split_first() {
        None => Value::from(flat[0]),
        Some((&len, rest)) => {
            let stride = flat.len() / len;
            Value::Array((0..len).map(|i| nest(&flat[i * stride..(i + 1) * stride], rest)).collect())
        }
    }
}

fn read_table(text: &str, trailing: &[usize]) -> Result<(usize, usize, Vec<f64>)> {
    let file: TableFile = serde_json::from_str(text)?;
    let mut shape = vec![file.n, file.m];
    shape.extend_from_slice(trailing);
    let mut probs = Vec::with_capacity(shape.iter().product());
    flatten(&file.probs, &shape, &mut "probs".to_string(), &mut probs)?;
    Ok((file.n, file.m, probs))
}

pub fn parse_box(text: &str) -> Result<BipartiteBox> {
    parse_box_with_tolerance(text, NS_TOL)
}

pub fn parse_box_with_tolerance(text: &str, tol: f64) -> Result<BipartiteBox> {
    let (n, m, probs) = read_table(text, &[2, 2])?;
    BipartiteBox::with_tolerance(n, m, probs, tol)
}

pub fn read_box(path: &Path, tol: f64) -> Result<BipartiteBox> {
    parse_box_with_tolerance(&read_text(path)?, tol).map_err(|e| in_file(path, e))
}

pub fn box_to_json(p: &BipartiteBox) -> String {
    let (n, m) = (p.n_inputs_a(), p.n_inputs_b());
    to_pretty(n, m, nest(p.probs(), &[n, m, 2, 2]))
}

pub fn write_box(path: &Path, p: &BipartiteBox) -> Result<()> {
    Ok(fs::write(path, box_to_json(p))?)
}

pub fn parse_tripartite(text: &str) -> Result<TripartiteBox> {
    parse_tripartite_with_tolerance(text, NS_TOL)
}

pub fn parse_tripartite_with_tolerance(text: &str, tol: f64) -> Result<TripartiteBox> {
    let (n, m, probs) = read_table(text, &[2, 2, 2])?;
    TripartiteBox::with_tolerance(n, m, probs, tol)
}

pub fn read_tripartite(path: &Path, tol: f64) -> Result<TripartiteBox> {
    parse_tripartite_with_tolerance(&read_text(path)?, tol).map_err(|e| in_file(path, e))
}

pub fn tripartite_to_json(t: &TripartiteBox) -> String {
    let (n, m) = (t.n_inputs_a(), t.n_inputs_b());
    to_pretty(n, m, nest(t.probs(), &[n, m, 2, 2, 2]))
}

pub fn write_tripartite(path: &Path, t: &TripartiteBox) -> Result<()> {
    Ok(fs::write(path, tripartite_to_json(t))?)
}

fn to_pretty(n: usize, m: usize, probs: Value) -> String {
    let file = TableFile { n, m, probs };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable table");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Validation { field, reason } => Error::Validation {
            field: format!("{}: {field}", path.display()),
            reason,
        },
        Error::Json(j) => Error::validation(path.display().to_string(), j.to_string()),
        Error::Input(reason) => Error::validation(path.display().to_string(), reason),
        other => other,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionalFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    correlators: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeffs: Option<Value>,
}

pub fn parse_functional(text: &str) -> Result<BellFunctional> {
    let file: FunctionalFile = serde_json::from_str(text)?;
    match (&file.correlators, &file.coeffs) {
        (Some(rows), None) => {
            let outer = rows
                .as_array()
                .ok_or_else(|| Error::validation("correlators", "expected an array of rows"))?;
            let n = file.n.unwrap_or(outer.len());
            let m = file
                .m
                .or_else(|| outer.first().and_then(Value::as_array).map(Vec::len))
                .unwrap_or(0);
            let mut flat = Vec::with_capacity(n * m);
            flatten(rows, &[n, m], &mut "correlators".to_string(), &mut flat)?;
            let rows: Vec<Vec<f64>> = flat.chunks(m.max(1)).map(<[f64]>::to_vec).collect();
            BellFunctional::from_correlators(&rows)
        }
        (None, Some(table)) => {
            let (n, m) = match (file.n, file.m) {
                (Some(n), Some(m)) => (n, m),
                _ => return Err(Error::validation("coeffs", "the coefficient form needs explicit n and m")),
            };
            let mut flat = Vec::with_capacity(n * m * 4);
            flatten(table, &[n, m, 2, 2], &mut "coeffs".to_string(), &mut flat)?;
            BellFunctional::from_coeffs(n, m, flat)
        }
        _ => Err(Error::validation(
            "functional",
            "exactly one of \"correlators\" or \"coeffs\" must be present",
        )),
    }
}

pub fn read_functional(path: &Path) -> Result<BellFunctional> {
    parse_functional(&read_text(path)?).map_err(|e| in_file(path, e))
}

/// Correlation-form functionals are written with `correlators`, others
/// with `coeffs`.
pub fn functional_to_json(f: &BellFunctional) -> String {
    let (n, m) = (f.n(), f.m());
    let file = match f.correlator_matrix() {
        Some(rows) => FunctionalFile {
            n: Some(n),
            m: Some(m),
            correlators: Some(serde_json::to_value(rows).expect("serializable matrix")),
            coeffs: None,
        },
        None => FunctionalFile {
            n: Some(n),
            m: Some(m),
            correlators: None,
            coeffs: Some(nest(f.coeffs(), &[n, m, 2, 2])),
        },
    };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable functional");
    s.push('\n');
    s
}

pub fn write_functional(path: &Path, f: &BellFunctional) -> Result<()> {
    Ok(fs::write(path, functional_to_json(f))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chain, chsh};
    use crate::boxes::make_pr_box;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(4.0), "4");
        assert_eq!(format_sig(2.0 * 2f64.sqrt()), "2.82842712475");
        assert_eq!(format_sig(0.1 + 0.2), "0.3");
        assert_eq!(format_sig(-0.185786437627), "-0.185786437627");
        assert_eq!(format_sig(1e-7), "1e-07");
        assert_eq!(format_sig(1.5e-5), "1.5e-05");
        assert_eq!(format_sig(0.0001), "0.0001");
        assert_eq!(format_sig(1e12), "1e+12");
        assert_eq!(format_sig(123456789012.0), "123456789012");
        assert_eq!(format_sig(9.9999999999999), "10");
        assert_eq!(format_sig_digits(0.29289321881, 3), "0.293");
    }

    #[test]
    fn box_round_trip() {
        let p = make_pr_box();
        let back = parse_box(&box_to_json(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn box_diagnostics() {
        let bad_shape = r#"{"n": 1, "m": 1, "probs": [[[[0.5, 0.5], [0.0]]]]}"#;
        match parse_box(bad_shape) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "probs[0][0][1]"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_sum = r#"{"n": 1, "m": 1, "probs": [[[[0.5, 0.5], [0.5, 0.0]]]]}"#;
        match parse_box(bad_sum) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "probs[0][0]"),
            other => panic!("unexpected {other:?}"),
        }
        let not_number = r#"{"n": 1, "m": 1, "probs": [[[[0.5, "x"], [0.5, 0.0]]]]}"#;
        assert!(matches!(parse_box(not_number), Err(Error::Validation { .. })));
        match parse_box("{\n  \"n\": 1,\n  \"m\": \n}") {
            Err(Error::Json(e)) => assert_eq!(e.line(), 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_box(r#"{"n":1,"m":1,"probs":[],"extra":1}"#), Err(Error::Json(_))));
    }

    #[test]
    fn tripartite_round_trip() {
        let t = TripartiteBox::product(&make_pr_box(), [0.3, 0.7]).unwrap();
        assert_eq!(parse_tripartite(&tripartite_to_json(&t)).unwrap(), t);
    }

    #[test]
    fn functional_forms() {
        let f = parse_functional(r#"{"n": 2, "m": 2, "correlators": [[1, 1], [1, -1]]}"#).unwrap();
        assert_eq!(f, chsh());
        let g = parse_functional(&functional_to_json(&chain(4).unwrap())).unwrap();
        assert_eq!(g, chain(4).unwrap());

        let coeffs = r#"{"n": 1, "m": 1, "coeffs": [[[[1, 0], [0, 2]]]]}"#;
        let h = parse_functional(coeffs).unwrap();
        assert!(h.correlator_matrix().is_none());
        assert_eq!(parse_functional(&functional_to_json(&h)).unwrap(), h);

        assert!(parse_functional(r#"{"n": 2, "m": 2}"#).is_err());
        assert!(parse_functional(r#"{"coeffs": [[[[1, 0], [0, 1]]]]}"#).is_err());
        assert!(parse_functional(r#"{"n": 2, "correlators": [[1, 1], [1]]}"#).is_err());
    }
}
