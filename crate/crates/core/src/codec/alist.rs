//! The alist sparse-matrix text format.
//!
//! ```text
//! N M
//! max_col_degree max_row_degree
//! <N column degrees>
//! <M row degrees>
//! <N lines: 1-based check indices of each column, zero padding allowed>
//! <M lines: 1-based bit indices of each row, zero padding allowed>
//! ```

use std::collections::BTreeSet;
use std::fmt::Write;

use super::{CodecError, ParityCheckMatrix};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next line as numbers. Blank lines are skipped unless `allow_blank`,
    /// which lets a zero-degree adjacency line be empty.
    fn numbers(&mut self, what: &str, allow_blank: bool) -> Result<(usize, Vec<usize>), CodecError> {
        let (line, text) = loop {
            let Some((i, text)) = self.inner.next() else {
                return Err(CodecError::Parse { line: self.last + 1, msg: format!("unexpected end of file, expected {what}") });
            };
            if allow_blank || !text.trim().is_empty() {
                break (i + 1, text);
            }
        };
        self.last = line;
        let nums = text
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| CodecError::Parse { line, msg: format!("'{t}' is not a non-negative integer") })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((line, nums))
    }

    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>), CodecError> {
        self.numbers(what, false)
    }

    fn expect_len(&mut self, what: &str, len: usize) -> Result<(usize, Vec<usize>), CodecError> {
        let (line, nums) = self.next_numbers(what)?;
        if nums.len() != len {
            return Err(CodecError::Parse { line, msg: format!("expected {len} values for {what}, found {}", nums.len()) });
        }
        Ok((line, nums))
    }
}

/// Reads the non-zero 1-based indices of one adjacency line, checking them
/// against the declared degree and the index bound.
fn adjacency(line: usize, nums: &[usize], degree: usize, bound: usize, kind: &str) -> Result<Vec<usize>, CodecError> {
    let idx: Vec<usize> = nums.iter().copied().filter(|&x| x != 0).collect();
    if idx.len() != degree {
        return Err(CodecError::Parse { line, msg: format!("{kind} lists {} entries but its declared degree is {degree}", idx.len()) });
    }
    let mut seen = BTreeSet::new();
    for &x in &idx {
        if x > bound {
            return Err(CodecError::Parse { line, msg: format!("index {x} out of range 1..={bound}") });
        }
        if !seen.insert(x) {
            return Err(CodecError::Parse { line, msg: format!("index {x} repeated") });
        }
    }
    Ok(idx.into_iter().map(|x| x - 1).collect())
}

pub fn parse_alist(text: &str) -> Result<ParityCheckMatrix, CodecError> {
    let mut lines = Lines::new(text);
    let (_, dims) = lines.expect_len("the dimensions N M", 2)?;
    let (n, m) = (dims[0], dims[1]);
    let (max_line, maxes) = lines.expect_len("the maximum degrees", 2)?;
    let (col_line, col_deg) = lines.expect_len("the column degrees", n)?;
    let (row_line, row_deg) = lines.expect_len("the row degrees", m)?;
    if let Some(&d) = col_deg.iter().find(|&&d| d > maxes[0]) {
        return Err(CodecError::Parse { line: col_line, msg: format!("column degree {d} exceeds the maximum {}", maxes[0]) });
    }
    if let Some(&d) = row_deg.iter().find(|&&d| d > maxes[1]) {
        return Err(CodecError::Parse { line: row_line, msg: format!("row degree {d} exceeds the maximum {}", maxes[1]) });
    }
    if col_deg.iter().sum::<usize>() != row_deg.iter().sum::<usize>() {
        return Err(CodecError::Parse { line: max_line + 2, msg: "column and row degrees have different totals".into() });
    }

    let mut from_cols = BTreeSet::new();
    for (c, &deg) in col_deg.iter().enumerate() {
        let (line, nums) = lines.numbers("a column adjacency line", deg == 0)?;
        for r in adjacency(line, &nums, deg, m, "column")? {
            from_cols.insert((r, c));
        }
    }
    let mut rows = Vec::with_capacity(m);
    for (r, &deg) in row_deg.iter().enumerate() {
        let (line, nums) = lines.numbers("a row adjacency line", deg == 0)?;
        let row = adjacency(line, &nums, deg, n, "row")?;
        if let Some(&c) = row.iter().find(|&&c| !from_cols.contains(&(r, c))) {
            return Err(CodecError::Parse {
                line,
                msg: format!("row {} lists column {} but that column does not list the row", r + 1, c + 1),
            });
        }
        rows.push(row);
    }
    ParityCheckMatrix::new(n, rows).map_err(|e| CodecError::Parse { line: lines.last, msg: e.to_string() })
}

pub fn write_alist(h: &ParityCheckMatrix) -> String {
    let cols = h.columns();
    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = h.rows().iter().map(Vec::len).max().unwrap_or(0);
    writeln!(out, "{} {}", h.n_cols(), h.n_rows()).unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    writeln!(out, "{}", join(&mut cols.iter().map(Vec::len))).unwrap();
    writeln!(out, "{}", join(&mut h.rows().iter().map(Vec::len))).unwrap();
    for col in &cols {
        writeln!(out, "{}", join(&mut col.iter().map(|r| r + 1))).unwrap();
    }
    for row in h.rows() {
        writeln!(out, "{}", join(&mut row.iter().map(|c| c + 1))).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_check() {
        let h = parse_alist("2 1\n1 2\n1 1\n2\n1\n1\n1 2\n").unwrap();
        assert_eq!(h.n_cols(), 2);
        assert_eq!(h.rows(), &[vec![0, 1]]);
    }

    #[test]
    fn zero_padding_is_accepted() {
        let h = parse_alist("3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n").unwrap();
        assert_eq!(h.rows(), &[vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn out_of_range_column_reports_line() {
        // zero-degree columns written as blank lines
        let text = "7 1\n1 4\n1 1 1 0 1 0 0\n4\n1\n1\n1\n\n1\n\n\n1 2 3 9\n";
        assert_eq!(
            parse_alist(text).unwrap_err(),
            CodecError::Parse { line: 12, msg: "index 9 out of range 1..=7".into() }
        );

        let text = "7 1\n1 4\n1 1 1 0 1 0 0\n4\n1\n1\n1\n0\n1\n0\n0\n1 2 3 9\n";
        assert_eq!(
            parse_alist(text).unwrap_err(),
            CodecError::Parse { line: 12, msg: "index 9 out of range 1..=7".into() }
        );
    }

    #[test]
    fn inconsistent_adjacency() {
        let text = "2 1\n1 2\n1 1\n2\n1\n1\n1 3\n";
        assert!(matches!(parse_alist(text), Err(CodecError::Parse { line: 7, .. })));
        let text = "3 1\n1 2\n1 1 0\n2\n1\n1\n0\n1 3\n";
        assert_eq!(
            parse_alist(text).unwrap_err(),
            CodecError::Parse { line: 8, msg: "row 1 lists column 3 but that column does not list the row".into() }
        );
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(parse_alist("3 1\n1 2\n1 1\n"), Err(CodecError::Parse { line: 3, .. })));
        assert!(matches!(parse_alist("2 1\n1 2\n1 1\n2\n1\n"), Err(CodecError::Parse { line: 6, .. })));
        assert!(matches!(parse_alist("2 x\n"), Err(CodecError::Parse { line: 1, .. })));
    }

    #[test]
    fn write_then_parse() {
        let h = ParityCheckMatrix::new(7, vec![vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]]).unwrap();
        assert_eq!(parse_alist(&write_alist(&h)).unwrap(), h);
    }
}
