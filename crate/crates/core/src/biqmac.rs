//! Sparse triple format used by the BiqMac instance library.
//!
//! ```text
//! n nnz
//! i j c      (nnz lines, 1-based, i and j in 1..=n)
//! ```
//!
//! Each line sets `R_ij = R_ji = c` (or `R_ii = c`). Files describe
//! maximization problems; [`parse`] negates them so the result is minimized.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::model::QuboInstance;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected header `n nnz`")]
    MalformedHeader { line: usize },

    #[error("line {line}: expected `i j c`")]
    MalformedEntry { line: usize },

    #[error("line {line}: index ({i}, {j}) outside 1..={n}")]
    IndexOutOfRange { line: usize, i: i64, j: i64, n: usize },

    #[error("line {line}: entry ({i}, {j}) given twice")]
    DuplicateEntry { line: usize, i: usize, j: usize },

    #[error("header announces {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },

    #[error("{0}")]
    Io(String),
}

/// Lines that carry content, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses the text of an instance and negates it.
pub fn parse(text: &str) -> Result<QuboInstance, ParseError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(ParseError::MalformedHeader { line: 1 })?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| ParseError::MalformedHeader { line: hline })?;
    let [n, nnz] = nums[..] else {
        return Err(ParseError::MalformedHeader { line: hline });
    };

    let mut inst = QuboInstance::zeros(n);
    let mut seen = vec![false; n * n];
    let mut found = 0;
    for (line, text) in lines {
        let fields: Vec<i64> = text
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| ParseError::MalformedEntry { line })?;
        let [i, j, c] = fields[..] else {
            return Err(ParseError::MalformedEntry { line });
        };
        let in_range = |v: i64| v >= 1 && v as u64 <= n as u64;
        if !in_range(i) || !in_range(j) {
            return Err(ParseError::IndexOutOfRange { line, i, j, n });
        }
        let (i, j) = ((i - 1) as usize, (j - 1) as usize);
        let (a, b) = (i.min(j), i.max(j));
        if std::mem::replace(&mut seen[a * n + b], true) {
            return Err(ParseError::DuplicateEntry { line, i: i + 1, j: j + 1 });
        }
        inst.set(i, j, -c);
        found += 1;
    }
    if found != nnz {
        return Err(ParseError::EntryCount { expected: nnz, found });
    }
    Ok(inst)
}

pub fn read(path: impl AsRef<Path>) -> Result<QuboInstance, ParseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// Writes `inst` back in the file convention (sign flipped to maximization),
/// one line per nonzero of the upper triangle. The constant is not
/// representable and is dropped.
pub fn write(inst: &QuboInstance) -> String {
    let m = inst.m();
    let entries: Vec<(usize, usize, i64)> = (0..m)
        .flat_map(|i| (i..m).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, inst.r(i, j)))
        .filter(|&(_, _, c)| c != 0)
        .collect();
    let mut out = format!("{m} {}\n", entries.len());
    for (i, j, c) in entries {
        writeln!(out, "{} {} {}", i + 1, j + 1, -c).expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_example() {
        let inst = parse("3 2\n1 1 5\n1 2 -3\n").unwrap();
        assert_eq!(inst.m(), 3);
        assert_eq!(inst.r(0, 0), -5);
        assert_eq!(inst.r(0, 1), 3);
        assert_eq!(inst.r(1, 0), 3);
        assert_eq!(inst.r(2, 2), 0);
    }

    #[test]
    fn index_errors() {
        assert!(matches!(parse("3 1\n0 1 2\n"), Err(ParseError::IndexOutOfRange { line: 2, i: 0, .. })));
        assert!(matches!(parse("3 1\n1 4 2\n"), Err(ParseError::IndexOutOfRange { .. })));
    }

    #[test]
    fn duplicate_in_either_order() {
        assert!(matches!(parse("3 2\n1 2 1\n2 1 1\n"), Err(ParseError::DuplicateEntry { line: 3, .. })));
    }

    #[test]
    fn header_and_count() {
        assert!(matches!(parse(""), Err(ParseError::MalformedHeader { .. })));
        assert!(matches!(parse("3\n"), Err(ParseError::MalformedHeader { .. })));
        assert!(matches!(parse("x 1\n"), Err(ParseError::MalformedHeader { .. })));
        assert!(matches!(parse("3 2\n1 1 1\n"), Err(ParseError::EntryCount { expected: 2, found: 1 })));
        assert!(matches!(parse("3 1\n1 1\n"), Err(ParseError::MalformedEntry { line: 2 })));
    }

    #[test]
    fn round_trip() {
        let inst = parse("4 4\n1 1 5\n1 2 -3\n4 3 7\n2 2 -1\n").unwrap();
        let again = parse(&write(&inst)).unwrap();
        assert_eq!(again, inst);
    }
}
