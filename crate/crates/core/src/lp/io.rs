//! Plain text LP files.
//!
//! ```text
//! # comment
//! 2 3            d n
//! 1 1 1.0        entries of A, 1-based (row, column, value)
//! 1 2 1.0
//! 2 3 -1.0
//! b 1 -0.5
//! c 1 0 0
//! l 0 0 0
//! u 1 1 1
//! x0 0.5 0.5 0.5
//! ```
//!
//! `l` and `u` are optional (defaults 0 and 1). `x0` is required.

use super::LpProblem;
use crate::error::{Error, Result};
use nalgebra::DVector;
use std::fmt::Write;
use std::path::Path;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn floats(ln: usize, tok: &[&str], want: usize, what: &str) -> Result<DVector<f64>> {
    if tok.len() != want {
        return Err(perr(ln, format!("'{what}' needs {want} values, found {}", tok.len())));
    }
    let mut v = DVector::zeros(want);
    for (k, t) in tok.iter().enumerate() {
        let x: f64 = t.parse().map_err(|_| perr(ln, format!("bad value '{t}'")))?;
        if x.is_nan() {
            return Err(perr(ln, "value is NaN"));
        }
        v[k] = x;
    }
    Ok(v)
}

pub fn parse_lp(text: &str) -> Result<LpProblem> {
    let mut size: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    let (mut b, mut c, mut l, mut u, mut x0) = (None, None, None, None, None);
    let mut last = 1;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        last = ln;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let Some((d, n)) = size else {
            if tok.len() != 2 {
                return Err(perr(ln, "header needs 'd n'"));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|_| perr(ln, format!("bad integer '{s}'")));
            size = Some((p(tok[0])?, p(tok[1])?));
            continue;
        };
        let slot = match tok[0] {
            "b" => Some((&mut b, d)),
            "c" => Some((&mut c, n)),
            "l" => Some((&mut l, n)),
            "u" => Some((&mut u, n)),
            "x0" => Some((&mut x0, n)),
            _ => None,
        };
        if let Some((dst, len)) = slot {
            if dst.is_some() {
                return Err(perr(ln, format!("'{}' given twice", tok[0])));
            }
            *dst = Some(floats(ln, &tok[1..], len, tok[0])?);
            continue;
        }
        if tok.len() != 3 {
            return Err(perr(ln, "entry line needs 'row col value'"));
        }
        let r: usize = tok[0].parse().map_err(|_| perr(ln, format!("bad row '{}'", tok[0])))?;
        let k: usize = tok[1].parse().map_err(|_| perr(ln, format!("bad column '{}'", tok[1])))?;
        let v: f64 = tok[2].parse().map_err(|_| perr(ln, format!("bad value '{}'", tok[2])))?;
        if r == 0 || k == 0 || r > d || k > n {
            return Err(perr(ln, format!("index ({r}, {k}) outside {d} x {n}")));
        }
        if !v.is_finite() {
            return Err(perr(ln, "value is not finite"));
        }
        entries.push((r - 1, k - 1, v));
    }
    let (d, n) = size.ok_or_else(|| perr(last, "missing header"))?;
    let need = |v: Option<DVector<f64>>, what: &str| v.ok_or_else(|| perr(last, format!("missing '{what}' line")));
    let b = need(b, "b")?;
    let c = need(c, "c")?;
    let x0 = need(x0, "x0")?;
    let l = l.unwrap_or_else(|| DVector::zeros(n));
    let u = u.unwrap_or_else(|| DVector::from_element(n, 1.0));
    LpProblem::new(d, n, &entries, b, c, l, u, x0)
}

pub fn read_lp(path: impl AsRef<Path>) -> Result<LpProblem> {
    parse_lp(&std::fs::read_to_string(path)?)
}

pub fn write_lp(p: &LpProblem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", p.d(), p.n());
    for (j, i, v) in p.at.entries() {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    for (name, v) in [("b", &p.b), ("c", &p.c), ("l", &p.l), ("u", &p.u), ("x0", &p.x0)] {
        s.push_str(name);
        for x in v.iter() {
            let _ = write!(s, " {x:e}");
        }
        s.push('\n');
    }
    s
}
