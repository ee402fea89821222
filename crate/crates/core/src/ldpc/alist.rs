//! MacKay's alist text format.
//!
//! ```text
//! n m
//! max_col_weight max_row_weight
//! <n column weights>
//! <m row weights>
//! <n lines: 1-based row indices of each column>
//! <m lines: 1-based column indices of each row>
//! ```

use std::fmt::Write;

use super::matrix::ParityMatrix;
use crate::{Error, Result};

fn join(values: impl Iterator<Item = usize>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn to_alist(h: &ParityMatrix) -> String {
    let mut s = String::new();
    let max_col = h.cols().iter().map(Vec::len).max().unwrap_or(0);
    let max_row = h.rows().iter().map(Vec::len).max().unwrap_or(0);
    let _ = writeln!(s, "{} {}", h.n(), h.m());
    let _ = writeln!(s, "{max_col} {max_row}");
    let _ = writeln!(s, "{}", join(h.cols().iter().map(Vec::len)));
    let _ = writeln!(s, "{}", join(h.rows().iter().map(Vec::len)));
    for col in h.cols() {
        let _ = writeln!(s, "{}", join(col.iter().map(|r| r + 1)));
    }
    for row in h.rows() {
        let _ = writeln!(s, "{}", join(row.iter().map(|c| c + 1)));
    }
    s
}

/// Parses an alist file. Only the row section is used to build the matrix;
/// the column section is checked for consistency.
pub fn parse_alist(text: &str) -> Result<ParityMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut offset = 0u64;
    let mut next_nums = |what: &str| -> Result<Vec<usize>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::format(offset, format!("missing {what}")))?;
        offset += line.len() as u64 + 1;
        line.split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::format(offset, format!("bad number {t:?} in {what}")))
            })
            .collect()
    };
    let header = next_nums("header")?;
    let [n, m] = header[..] else {
        return Err(Error::format(0, "header must be `n m`"));
    };
    next_nums("max weights")?;
    let col_w = next_nums("column weights")?;
    let row_w = next_nums("row weights")?;
    if col_w.len() != n || row_w.len() != m {
        return Err(Error::format(0, "weight lists do not match n and m"));
    }
    let mut cols = Vec::with_capacity(n);
    for (j, &w) in col_w.iter().enumerate() {
        let c = next_nums("column list")?;
        // some writers pad with zeros up to the max weight
        let c: Vec<usize> = c.into_iter().filter(|&v| v != 0).collect();
        if c.len() != w {
            return Err(Error::format(0, format!("column {j} lists {} entries, expected {w}", c.len())));
        }
        cols.push(c);
    }
    let mut rows = Vec::with_capacity(m);
    for (i, &w) in row_w.iter().enumerate() {
        let r: Vec<usize> = next_nums("row list")?.into_iter().filter(|&v| v != 0).collect();
        if r.len() != w {
            return Err(Error::format(0, format!("row {i} lists {} entries, expected {w}", r.len())));
        }
        rows.push(r.into_iter().map(|c| c - 1).collect::<Vec<_>>());
    }
    let h = ParityMatrix::from_rows(n, rows)?;
    for (j, c) in cols.iter().enumerate() {
        let mut listed: Vec<usize> = c.iter().map(|r| r - 1).collect();
        listed.sort_unstable();
        let mut actual = h.cols()[j].clone();
        actual.sort_unstable();
        if listed != actual {
            return Err(Error::format(0, format!("column {j} disagrees with row lists")));
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{construct_regular_code, CodeSpec};

    #[test]
    fn alist_round_trip() {
        let h = construct_regular_code(&CodeSpec::default()).unwrap();
        let text = to_alist(&h);
        assert!(text.starts_with("900 600\n2 3\n"));
        assert_eq!(parse_alist(&text).unwrap(), h);
    }

    #[test]
    fn inconsistent_alist_is_rejected() {
        let h = construct_regular_code(&CodeSpec { n: 6, dv: 2, dc: 3, seed: 1 }).unwrap();
        let text = to_alist(&h);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[4] = "1 1".into();
        assert!(parse_alist(&lines.join("\n")).is_err());
        assert!(parse_alist("6").is_err());
    }
}
