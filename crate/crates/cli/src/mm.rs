//! Matrix Market reader and writer for dense real data.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::CliError;

fn malformed(msg: impl Into<String>) -> CliError {
    CliError::Format(msg.into())
}

/// Parses Matrix Market `array` or `coordinate` text into a dense matrix.
/// Only the `real` and `integer` fields with `general` symmetry are accepted.
pub fn parse_matrix_market(text: &str) -> Result<DMatrix<f64>, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| malformed("empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(malformed(format!("bad header '{header}'")));
    }
    let coordinate = match words[2].as_str() {
        "array" => false,
        "coordinate" => true,
        f => return Err(malformed(format!("unknown format '{f}'"))),
    };
    if words[3] != "real" && words[3] != "integer" {
        return Err(malformed(format!("unsupported field '{}'", words[3])));
    }
    if words[4] != "general" {
        return Err(malformed(format!("unsupported symmetry '{}'", words[4])));
    }
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size_line) = body.next().ok_or_else(|| malformed("missing size line"))?;
    let sizes = size_line
        .split_whitespace()
        .map(|w| {
            w.parse::<usize>()
                .map_err(|_| malformed(format!("line {}: bad size '{w}'", size_no + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let expected = if coordinate { 3 } else { 2 };
    if sizes.len() != expected {
        return Err(malformed(format!("line {}: expected {expected} sizes", size_no + 1)));
    }
    let (rows, cols) = (sizes[0], sizes[1]);
    let total = rows
        .checked_mul(cols)
        .filter(|&t| t <= isize::MAX as usize / 8)
        .ok_or_else(|| malformed(format!("size {rows} x {cols} overflows")))?;
    let value = |no: usize, w: &str| -> Result<f64, CliError> {
        let v: f64 = w
            .parse()
            .map_err(|_| malformed(format!("line {}: bad value '{w}'", no + 1)))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(malformed(format!("line {}: non-finite value '{w}'", no + 1)))
        }
    };
    let mut m = DMatrix::zeros(rows, cols);
    if coordinate {
        let nnz = sizes[2];
        if nnz > total {
            return Err(malformed(format!("{nnz} entries exceed {rows} x {cols}")));
        }
        let mut seen = HashSet::with_capacity(nnz);
        let mut count = 0;
        for (no, line) in body {
            let w: Vec<&str> = line.split_whitespace().collect();
            if w.len() != 3 {
                return Err(malformed(format!("line {}: expected 'row col value'", no + 1)));
            }
            let index = |s: &str, bound: usize| -> Result<usize, CliError> {
                match s.parse::<usize>() {
                    Ok(i) if i >= 1 && i <= bound => Ok(i - 1),
                    _ => Err(malformed(format!("line {}: index '{s}' out of range", no + 1))),
                }
            };
            let (i, j) = (index(w[0], rows)?, index(w[1], cols)?);
            if !seen.insert((i, j)) {
                return Err(malformed(format!(
                    "line {}: duplicate entry ({}, {})",
                    no + 1,
                    i + 1,
                    j + 1
                )));
            }
            m[(i, j)] = value(no, w[2])?;
            count += 1;
        }
        if count != nnz {
            return Err(malformed(format!("expected {nnz} entries, found {count}")));
        }
    } else {
        let mut k = 0;
        for (no, line) in body {
            for w in line.split_whitespace() {
                if k == total {
                    return Err(malformed(format!("line {}: more than {total} values", no + 1)));
                }
                // column-major
                m[(k % rows.max(1), k / rows.max(1))] = value(no, w)?;
                k += 1;
            }
        }
        if k != total {
            return Err(malformed(format!("expected {total} values, found {k}")));
        }
    }
    Ok(m)
}

/// Array-format text with shortest round-trip values.
pub fn format_matrix_market(m: &DMatrix<f64>) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for v in m.iter() {
        let _ = writeln!(s, "{v:?}");
    }
    s
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix_market(&text).map_err(|e| e.in_file(path))
}

/// Reads a single-column (or single-row) file as a vector.
pub fn read_vector(path: &Path) -> Result<DVector<f64>, CliError> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 && m.nrows() != 1 {
        return Err(malformed(format!(
            "{}: expected a vector, got {} x {}",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(DVector::from_iterator(m.len(), m.iter().copied()))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    fs::write(path, format_matrix_market(m)).map_err(|e| CliError::io(path, e))
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<(), CliError> {
    write_matrix(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_values_are_column_major() {
        let m = parse_matrix_market(
            "%%MatrixMarket matrix array real general\n% comment\n2 2\n1.5\n-2\n3e-1\n4\n",
        )
        .unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.5, 0.3, -2.0, 4.0]));
    }

    #[test]
    fn coordinate_fills_zeros() {
        let m = parse_matrix_market(
            "%%MatrixMarket matrix coordinate real general\n2 3 2\n1 3 5\n2 1 -1\n",
        )
        .unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 5.0, -1.0, 0.0, 0.0]));
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            ("", "empty"),
            ("%%MatrixMarket matrix array complex general\n1 1\n1\n", "field"),
            ("%%MatrixMarket matrix array real symmetric\n1 1\n1\n", "symmetry"),
            ("%%MatrixMarket matrix array real general\n2 1\n1\n", "expected 2"),
            ("%%MatrixMarket matrix array real general\n1 1\n1\n2\n", "more than"),
            ("%%MatrixMarket matrix array real general\n1 1\nnan\n", "non-finite"),
            ("%%MatrixMarket matrix array real general\n1 1\n1e999\n", "non-finite"),
            ("%%MatrixMarket matrix array real general\n99999999999 99999999999\n", "overflows"),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n", "out of range"),
        ];
        for (text, needle) in cases {
            let err = parse_matrix_market(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{err} lacks {needle}");
        }
    }
}
