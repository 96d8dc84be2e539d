//! MacKay's alist sparse-matrix format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based row indices of each column, zero padded>
//! <m lines: 1-based column indices of each row, zero padded>
//! ```
//!
//! The reader works on whitespace-separated tokens, so files that wrap
//! lists differently still parse; errors report the line of the offending
//! token.

use std::fmt::Write as _;
use std::path::Path;

use super::ParityCheckMatrix;
use crate::{Error, Result};

pub fn to_alist(h: &ParityCheckMatrix) -> String {
    let max_col = h.cols().iter().map(Vec::len).max().unwrap_or(0);
    let max_row = h.rows().iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    let join = |it: &mut dyn Iterator<Item = usize>| {
        it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "{} {}", h.n(), h.m());
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut h.cols().iter().map(Vec::len)));
    let _ = writeln!(out, "{}", join(&mut h.rows().iter().map(Vec::len)));
    for (lists, width) in [(h.cols(), max_col), (h.rows(), max_row)] {
        for list in lists {
            let padded = list
                .iter()
                .map(|&v| v as usize + 1)
                .chain(std::iter::repeat_n(0, width - list.len()));
            let _ = writeln!(out, "{}", join(&mut padded.into_iter()));
        }
    }
    out
}

pub fn write_alist(h: &ParityCheckMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_alist(h)).map_err(|e| Error::io(path, e))
}

pub fn read_alist(path: impl AsRef<Path>) -> Result<ParityCheckMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_alist(&text, path)
}

struct Tokens<'a> {
    path: &'a Path,
    toks: Vec<(usize, &'a str)>,
    next: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, path: &'a Path) -> Self {
        let toks: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Self {
            path,
            toks,
            next: 0,
            last_line: text.lines().count().max(1),
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn line(&self) -> usize {
        self.toks.get(self.next.saturating_sub(1)).map_or(1, |t| t.0)
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let Some(&(line, tok)) = self.toks.get(self.next) else {
            return Err(self.err(self.last_line, format!("unexpected end of file reading {what}")));
        };
        self.next += 1;
        tok.parse()
            .map_err(|_| self.err(line, format!("expected {what}, found {tok:?}")))
    }

    /// A zero-padded list of 1-based indices; returns them 0-based.
    fn index_list(&mut self, width: usize, degree: usize, bound: usize, what: &str) -> Result<Vec<u32>> {
        let mut list = Vec::with_capacity(degree);
        for slot in 0..width {
            let v = self.usize(what)?;
            let line = self.line();
            if slot < degree {
                if v == 0 || v > bound {
                    return Err(self.err(line, format!("{what} {v} out of range 1..={bound}")));
                }
                list.push((v - 1) as u32);
            } else if v != 0 {
                return Err(self.err(line, format!("expected zero padding after {degree} entries, found {v}")));
            }
        }
        Ok(list)
    }
}

pub fn parse_alist(text: &str, path: &Path) -> Result<ParityCheckMatrix> {
    let mut t = Tokens::new(text, path);
    let n = t.usize("n")?;
    let m = t.usize("m")?;
    if n == 0 {
        return Err(t.err(1, "n must be positive"));
    }
    let max_col = t.usize("max column degree")?;
    let max_row = t.usize("max row degree")?;

    let mut degrees = |count: usize, max: usize, what: &str| -> Result<Vec<usize>> {
        (0..count)
            .map(|_| {
                let d = t.usize(what)?;
                if d > max {
                    return Err(t.err(t.line(), format!("{what} {d} exceeds declared maximum {max}")));
                }
                Ok(d)
            })
            .collect()
    };
    let col_deg = degrees(n, max_col, "column degree")?;
    let row_deg = degrees(m, max_row, "row degree")?;

    let mut cols = Vec::with_capacity(n);
    for &d in &col_deg {
        cols.push(t.index_list(max_col, d, m, "row index")?);
    }
    let mut rows = Vec::with_capacity(m);
    for &d in &row_deg {
        rows.push(t.index_list(max_row, d, n, "column index")?);
    }
    if t.next != t.toks.len() {
        let line = t.toks[t.next].0;
        return Err(t.err(line, "trailing data after row lists"));
    }

    let h = ParityCheckMatrix::from_rows(n, rows).map_err(|e| t.err(t.last_line, e.to_string()))?;
    for (c, listed) in cols.iter_mut().enumerate() {
        listed.sort_unstable();
        if listed.as_slice() != h.col(c) {
            return Err(t.err(
                t.last_line,
                format!("column {} list disagrees with the row lists", c + 1),
            ));
        }
    }
    Ok(h)
}
