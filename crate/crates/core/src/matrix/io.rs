//! Matrix Market coordinate files and plain weight vectors.

use super::{ConstraintMatrix, WeightVector};
use crate::error::{Error, Result};
use std::fmt::Write;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Raw contents of a `coordinate real general` file, indices 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinates {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

pub fn parse_matrix_market(text: &str) -> Result<Coordinates> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(perr(hl, "expected '%%MatrixMarket matrix coordinate real general'"));
    }
    if h[2] != "coordinate" || h[3] != "real" || h[4] != "general" {
        return Err(perr(hl, "only 'coordinate real general' is supported"));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (ln, raw) in lines {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('%') {
            continue;
        }
        let tok: Vec<&str> = l.split_whitespace().collect();
        match size {
            None => {
                if tok.len() != 3 {
                    return Err(perr(ln, "size line needs 'rows cols nnz'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| perr(ln, format!("bad integer '{s}'")));
                size = Some((p(tok[0])?, p(tok[1])?, p(tok[2])?));
            }
            Some((r, c, _)) => {
                if tok.len() != 3 {
                    return Err(perr(ln, "entry line needs 'row col value'"));
                }
                let i: usize = tok[0].parse().map_err(|_| perr(ln, format!("bad row '{}'", tok[0])))?;
                let j: usize = tok[1].parse().map_err(|_| perr(ln, format!("bad column '{}'", tok[1])))?;
                let v: f64 = tok[2].parse().map_err(|_| perr(ln, format!("bad value '{}'", tok[2])))?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(perr(ln, format!("index ({i}, {j}) outside {r} x {c}")));
                }
                if !v.is_finite() {
                    return Err(perr(ln, "value is not finite"));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| perr(hl, "missing size line"))?;
    if entries.len() != nnz {
        return Err(perr(text.lines().count().max(1), format!("expected {nnz} entries, found {}", entries.len())));
    }
    Ok(Coordinates { rows, cols, entries })
}

pub fn read_constraint_matrix(text: &str) -> Result<ConstraintMatrix> {
    let c = parse_matrix_market(text)?;
    ConstraintMatrix::from_triplets(c.rows, c.cols, &c.entries)
}

pub fn write_matrix_market(a: &ConstraintMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.entries() {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    s
}

/// One value per line; blank lines and lines starting with `#` or `%` are
/// skipped.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with('%') {
            continue;
        }
        let v: f64 = l.parse().map_err(|_| perr(i + 1, format!("bad value '{l}'")))?;
        if !v.is_finite() {
            return Err(perr(i + 1, "value is not finite"));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn parse_weights(text: &str) -> Result<WeightVector> {
    WeightVector::new(parse_vector(text)?)
}

pub fn write_vector(v: &[f64]) -> String {
    let mut s = String::new();
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "%%MatrixMarket matrix coordinate real general\n% comment\n3 2 4\n1 1 1\n2 2 1\n3 1 1\n3 2 1\n";

    #[test]
    fn round_trip() {
        let a = read_constraint_matrix(SMALL).unwrap();
        assert_eq!((a.nrows(), a.ncols(), a.nnz()), (3, 2, 4));
        let b = read_constraint_matrix(&write_matrix_market(&a)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_cite_lines() {
        let bad = SMALL.replace("2 2 1", "2 x 1");
        match parse_matrix_market(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let oob = SMALL.replace("3 2 1\n", "3 3 1\n");
        assert!(matches!(parse_matrix_market(&oob), Err(Error::Parse { line: 7, .. })));
    }

    #[test]
    fn weights_parse() {
        let w = parse_weights("1\n# c\n\n2.5\n").unwrap();
        assert_eq!(w.as_slice(), &[1.0, 2.5]);
        assert!(matches!(parse_weights("1\n-1\n"), Err(Error::NonPositiveWeights(1))));
    }
}
