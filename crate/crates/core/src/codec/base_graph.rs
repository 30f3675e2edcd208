//! Quasi-cyclic base graphs and their lifting.

use super::{CodecError, ParityCheckMatrix};

/// Exponent matrix of a quasi-cyclic code. `None` marks an all-zero block;
/// `Some(e)` a `Z x Z` identity cyclically shifted right by `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseGraph {
    z: usize,
    exponents: Vec<Vec<Option<usize>>>,
}

impl BaseGraph {
    /// Entries below zero mean "no block"; the rest are reduced modulo `z`.
    pub fn new(z: usize, entries: Vec<Vec<i64>>) -> Result<Self, CodecError> {
        if z == 0 {
            return Err(CodecError::Parse { line: 0, msg: "lifting size must be at least 1".into() });
        }
        let cols = entries.first().map_or(0, Vec::len);
        if let Some(r) = entries.iter().position(|r| r.len() != cols) {
            return Err(CodecError::Parse { line: 0, msg: format!("base graph row {r} has {} entries, expected {cols}", entries[r].len()) });
        }
        let exponents = entries
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|e| (e >= 0).then(|| e as usize % z))
                    .collect()
            })
            .collect();
        Ok(Self { z, exponents })
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn rows(&self) -> usize {
        self.exponents.len()
    }

    pub fn cols(&self) -> usize {
        self.exponents.first().map_or(0, Vec::len)
    }

    pub fn exponent(&self, row: usize, col: usize) -> Option<usize> {
        self.exponents[row][col]
    }
}

/// Parses `rows cols Z` followed by one line of exponents per base row.
/// Lines starting with `#` are comments.
pub fn parse_base_graph(text: &str) -> Result<BaseGraph, CodecError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_line = |line: usize, l: &str| -> Result<Vec<i64>, CodecError> {
        l.split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| CodecError::Parse { line, msg: format!("'{t}' is not an integer") }))
            .collect()
    };
    let (hline, header) = lines
        .next()
        .ok_or(CodecError::Parse { line: 1, msg: "missing 'rows cols Z' header".into() })?;
    let header = parse_line(hline, header)?;
    if header.len() != 3 || header.iter().any(|&x| x < 1) {
        return Err(CodecError::Parse { line: hline, msg: "header must be three positive integers 'rows cols Z'".into() });
    }
    let (rows, cols, z) = (header[0] as usize, header[1] as usize, header[2] as usize);
    let mut entries = Vec::with_capacity(rows);
    let mut last = hline;
    for _ in 0..rows {
        let (line, l) = lines
            .next()
            .ok_or(CodecError::Parse { line: last + 1, msg: format!("expected {rows} exponent rows") })?;
        last = line;
        let row = parse_line(line, l)?;
        if row.len() != cols {
            return Err(CodecError::Parse { line, msg: format!("expected {cols} exponents, found {}", row.len()) });
        }
        entries.push(row);
    }
    if let Some((line, _)) = lines.next() {
        return Err(CodecError::Parse { line, msg: "unexpected content after the exponent rows".into() });
    }
    BaseGraph::new(z, entries)
}

/// Lifts every base entry into a `Z x Z` block: zero for an empty entry, the
/// identity cyclically shifted right by the exponent otherwise.
pub fn expand_base_graph(bg: &BaseGraph) -> ParityCheckMatrix {
    let z = bg.z();
    let mut rows = Vec::with_capacity(bg.rows() * z);
    for base_row in &bg.exponents {
        for r in 0..z {
            let row = base_row
                .iter()
                .enumerate()
                .filter_map(|(j, e)| e.map(|e| j * z + (r + e) % z))
                .collect();
            rows.push(row);
        }
    }
    ParityCheckMatrix::new(bg.cols() * z, rows).expect("lifted rows are in range")
}
