//! Delimited-text sample files: one observation per line, x columns then y columns.
//!
//! Fields may be separated by commas, semicolons, tabs or spaces. Blank lines
//! and lines starting with `#` are ignored; a first line that does not parse
//! as numbers is treated as a header.

use std::fmt::Write as _;
use std::path::Path;

use kshrink::kernels::SampleSet;

use crate::error::{AppError, AppResult};

pub fn parse_samples(text: &str, x_cols: Option<usize>) -> AppResult<(SampleSet, SampleSet)> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c == ';' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(AppError::Input(format!("line {}: non-finite value", lineno + 1)));
                }
                if let Some(first) = rows.first() {
                    if first.len() != v.len() {
                        return Err(AppError::Input(format!(
                            "line {}: expected {} columns, found {}",
                            lineno + 1,
                            first.len(),
                            v.len()
                        )));
                    }
                }
                rows.push(v);
            }
            Err(_) if rows.is_empty() => continue,
            Err(e) => return Err(AppError::Input(format!("line {}: {e}", lineno + 1))),
        }
    }
    let ncols = rows.first().map(Vec::len).ok_or_else(|| AppError::Input("no observations in input".into()))?;
    let split = match x_cols {
        Some(k) => k,
        None if ncols % 2 == 0 => ncols / 2,
        None => return Err(AppError::Input(format!("{ncols} columns cannot be split evenly; pass --x-cols"))),
    };
    if split == 0 || split >= ncols {
        return Err(AppError::Input(format!("--x-cols must lie in 1..{ncols}, got {split}")));
    }
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r[..split].to_vec()).collect();
    let y: Vec<Vec<f64>> = rows.iter().map(|r| r[split..].to_vec()).collect();
    Ok((SampleSet::new(x)?, SampleSet::new(y)?))
}

pub fn read_samples(path: &Path, x_cols: Option<usize>) -> AppResult<(SampleSet, SampleSet)> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_samples(&text, x_cols)
}

/// Comma-separated text with `x1..xp,y1..yq` header.
pub fn format_samples(x: &SampleSet, y: &SampleSet) -> String {
    let mut out = String::new();
    let names: Vec<String> =
        (1..=x.dim()).map(|i| format!("x{i}")).chain((1..=y.dim()).map(|i| format!("y{i}"))).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for (a, b) in x.iter().zip(y.iter()) {
        let fields: Vec<String> = a.iter().chain(b).map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let x = SampleSet::new(vec![vec![1.0, 2.0], vec![3.5, -1.0]]).unwrap();
        let y = SampleSet::from_scalars(&[0.25, 1e-17]).unwrap();
        let text = format_samples(&x, &y);
        assert!(text.starts_with("x1,x2,y1\n"));
        let (x2, y2) = parse_samples(&text, Some(2)).unwrap();
        assert_eq!((x, y), (x2, y2));
    }

    #[test]
    fn mixed_separators_and_default_split() {
        let (x, y) = parse_samples("# comment\n1 2\n3\t4\n\n5;6\n", None).unwrap();
        assert_eq!(x.as_flat(), &[1.0, 3.0, 5.0]);
        assert_eq!(y.as_flat(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_samples("1,2,3\n", None).is_err());
        assert!(parse_samples("1,2\n3\n", None).is_err());
        assert!(parse_samples("1,2\n3,x\n", None).is_err());
        assert!(parse_samples("", None).is_err());
        assert!(parse_samples("1,2\n", Some(2)).is_err());
    }
}
