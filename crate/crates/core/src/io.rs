//! Reading and writing tensors.
//!
//! Two formats are supported:
//!
//! * tensor files: a header line `dims: p_1 p_2 ... p_K` followed by one value
//!   per line in mode-1-fastest order. Blank lines and lines starting with `#`
//!   are ignored.
//! * CSV matrices: one row per line, rows indexing mode 1. A first line that
//!   does not parse as numbers is treated as a column header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LanovaError, Result};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorFormat {
    Csv,
    Tensor,
}

impl TensorFormat {
    /// `.csv` files are CSV, everything else is a tensor file.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TensorFormat::Csv,
            _ => TensorFormat::Tensor,
        }
    }
}

fn parse_value(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| LanovaError::Parse {
        line,
        message: format!("not a number: {:?}", s.trim()),
    })?;
    if !v.is_finite() {
        return Err(LanovaError::Parse {
            line,
            message: format!("non-finite value {v}"),
        });
    }
    Ok(v)
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(LanovaError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let rest = header.strip_prefix("dims:").ok_or_else(|| LanovaError::Parse {
        line: hline,
        message: format!("expected header \"dims: p_1 ... p_K\", got {header:?}"),
    })?;
    let dims = rest
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .ok()
                .filter(|&p| p > 0)
                .ok_or_else(|| LanovaError::Parse {
                    line: hline,
                    message: format!("bad dimension {t:?}"),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    if dims.is_empty() {
        return Err(LanovaError::Parse {
            line: hline,
            message: "header lists no dimensions".into(),
        });
    }

    let values = lines
        .map(|(i, l)| parse_value(l, i))
        .collect::<Result<Vec<_>>>()?;
    DenseTensor::new(dims, values)
}

pub fn parse_csv(text: &str) -> Result<DenseTensor> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| LanovaError::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>> = record.iter().map(|f| parse_value(f, line)).collect();
        match parsed {
            Ok(row) => rows.push(row),
            // Tolerate a single header line.
            Err(_) if rows.is_empty() && i == 0 => continue,
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(LanovaError::Parse {
            line: 1,
            message: "no numeric rows".into(),
        });
    }
    DenseTensor::from_rows(&rows)
}

pub fn read_tensor(path: &Path, format: Option<TensorFormat>) -> Result<DenseTensor> {
    let text = fs::read_to_string(path)?;
    match format.unwrap_or_else(|| TensorFormat::from_path(path)) {
        TensorFormat::Csv => parse_csv(&text),
        TensorFormat::Tensor => parse_tensor(&text),
    }
}

/// Serializes in tensor-file format with shortest round-trip float formatting.
pub fn format_tensor(t: &DenseTensor) -> String {
    let mut s = String::with_capacity(t.len() * 12 + 32);
    s.push_str("dims:");
    for p in t.dims() {
        let _ = write!(s, " {p}");
    }
    s.push('\n');
    for v in t.values() {
        let _ = writeln!(s, "{v:?}");
    }
    s
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    fs::write(path, format_tensor(t))?;
    Ok(())
}

/// Elementwise `ln(x / (1 - x))`; every entry must lie strictly inside (0, 1).
pub fn logit(t: &DenseTensor) -> Result<DenseTensor> {
    if let Some(i) = t.values().iter().position(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(LanovaError::InvalidArgument(format!(
            "logit needs values in (0, 1); entry {i} is {}",
            t.values()[i]
        )));
    }
    Ok(t.map(|v| (v / (1.0 - v)).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tensor_file_parses() {
        let t = parse_tensor("# comment\ndims: 2 3\n1\n2\n3\n4\n\n5\n6\n").unwrap();
        assert_eq!(t.dims(), &[2, 3]);
        assert_eq!(t.at(1, 0), 2.0);
        assert_eq!(t.at(0, 2), 5.0);
    }

    #[test]
    fn tensor_file_errors() {
        assert!(matches!(parse_tensor(""), Err(LanovaError::Parse { .. })));
        assert!(matches!(parse_tensor("2 3\n1\n"), Err(LanovaError::Parse { line: 1, .. })));
        assert!(matches!(parse_tensor("dims: 2 x\n"), Err(LanovaError::Parse { .. })));
        assert!(matches!(
            parse_tensor("dims: 2 2\n1\n2\n3\n"),
            Err(LanovaError::DimensionMismatch { expected: 4, actual: 3, .. })
        ));
        assert!(matches!(parse_tensor("dims: 2\n1\nNaN\n"), Err(LanovaError::Parse { line: 3, .. })));
        assert!(matches!(parse_tensor("dims: 2\n1\ninf\n"), Err(LanovaError::Parse { .. })));
    }

    #[test]
    fn csv_parses_with_header() {
        let t = parse_csv("a,b,c\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!(t.dims(), &[2, 3]);
        assert_eq!(t.at(1, 2), 6.0);
        assert!(parse_csv("1,2\n3\n").is_err());
        assert!(parse_csv("1,2\n3,x\n").is_err());
    }

    #[test]
    fn logit_checks_range() {
        let t = DenseTensor::new(vec![2], vec![0.5, 0.75]).unwrap();
        let l = logit(&t).unwrap();
        assert_eq!(l.values()[0], 0.0);
        assert!((l.values()[1] - 3f64.ln()).abs() < 1e-15);
        assert!(logit(&DenseTensor::new(vec![2], vec![0.0, 0.5]).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn tensor_format_round_trips(
            dims in prop::collection::vec(1usize..4, 1..4),
            seed in any::<u64>(),
        ) {
            let mut s = seed;
            let t = DenseTensor::from_fn(&dims, |_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                f64::from_bits((s >> 2) | 0x3000_0000_0000_0000) * if s & 1 == 0 { 1.0 } else { -1.0 }
            });
            prop_assert_eq!(parse_tensor(&format_tensor(&t)).unwrap(), t);
        }
    }
}
