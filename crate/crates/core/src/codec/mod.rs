//! Parity-check matrices and the codes they define.

mod alist;
mod base_graph;
mod encoder;

pub use alist::{parse_alist, write_alist};
pub use base_graph::{expand_base_graph, parse_base_graph, BaseGraph};
pub use encoder::{Codeword, Encoder};

use thiserror::Error;

use crate::factor::{make_parity_factor, DiscreteFactor, VariableId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("check {row} has no bits")]
    EmptyRow { row: usize },
    #[error("check {row} refers to bit {col}, but the code has {n_cols} bits")]
    ColumnOutOfRange { row: usize, col: usize, n_cols: usize },
    #[error("check {row} lists bit {col} twice")]
    DuplicateColumn { row: usize, col: usize },
    #[error("check {row} is linearly dependent on the checks before it")]
    RankDeficient { row: usize },
    #[error("cannot take {rows} checks over {cols} bits from a {have_rows}x{have_cols} matrix")]
    SubmatrixTooLarge { rows: usize, cols: usize, have_rows: usize, have_cols: usize },
    #[error("invalid code parameters K={k}, N={n}")]
    InvalidParameters { k: usize, n: usize },
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bit values must be 0 or 1, found {0}")]
    NotABit(u8),
}

/// Message length, codeword length and rate of a linear block code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParameters {
    pub k: usize,
    pub n: usize,
}

impl CodeParameters {
    pub fn new(k: usize, n: usize) -> Result<Self, CodecError> {
        if k == 0 || k >= n {
            return Err(CodecError::InvalidParameters { k, n });
        }
        Ok(Self { k, n })
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

/// Sparse binary parity-check matrix H, stored as the sorted bit indices of
/// each check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_cols: usize,
    rows: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    pub fn new(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self, CodecError> {
        let mut sorted = Vec::with_capacity(rows.len());
        for (r, mut row) in rows.into_iter().enumerate() {
            if row.is_empty() {
                return Err(CodecError::EmptyRow { row: r });
            }
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(CodecError::DuplicateColumn { row: r, col: w[0] });
            }
            if let Some(&col) = row.last().filter(|&&c| c >= n_cols) {
                return Err(CodecError::ColumnOutOfRange { row: r, col, n_cols });
            }
            sorted.push(row);
        }
        Ok(Self { n_cols, rows: sorted })
    }

    /// Builds H from dense 0/1 rows.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self, CodecError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let sparse = rows
            .iter()
            .map(|r| {
                if r.len() != n_cols {
                    return Err(CodecError::LengthMismatch { expected: n_cols, got: r.len() });
                }
                Ok(r.iter().enumerate().filter(|(_, &b)| b != 0).map(|(c, _)| c).collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n_cols, sparse)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r]
    }

    /// Sorted check indices touching each bit.
    pub fn columns(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                cols[c].push(r);
            }
        }
        cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row].binary_search(&col).is_ok()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|row| {
                let mut d = vec![0u8; self.n_cols];
                row.iter().for_each(|&c| d[c] = 1);
                d
            })
            .collect()
    }

    /// K = N - M, assuming full row rank.
    pub fn parameters(&self) -> Result<CodeParameters, CodecError> {
        CodeParameters::new(self.n_cols.saturating_sub(self.rows.len()), self.n_cols)
    }

    /// Rank over GF(2). The first row found to depend on earlier rows is
    /// reported as an error.
    pub fn check_full_rank(&self) -> Result<(), CodecError> {
        let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
        for r in 0..self.n_rows() {
            let mut bits = self.row_bits(r);
            for (pivot, b) in &basis {
                if get_bit(&bits, *pivot) {
                    xor_into(&mut bits, b);
                }
            }
            match first_bit(&bits) {
                Some(pivot) => basis.push((pivot, bits)),
                None => return Err(CodecError::RankDeficient { row: r }),
            }
        }
        Ok(())
    }

    pub(crate) fn row_bits(&self, r: usize) -> Vec<u64> {
        let mut bits = vec![0u64; self.n_cols.div_ceil(64)];
        for &c in &self.rows[r] {
            bits[c / 64] |= 1 << (c % 64);
        }
        bits
    }
}

pub(crate) fn get_bit(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

pub(crate) fn xor_into(dst: &mut [u64], src: &[u64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
}

fn first_bit(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// XOR of the bits touched by each check. All zeros iff `bits` is a codeword.
pub fn syndrome(h: &ParityCheckMatrix, bits: &[u8]) -> Result<Vec<u8>, CodecError> {
    if bits.len() != h.n_cols() {
        return Err(CodecError::LengthMismatch { expected: h.n_cols(), got: bits.len() });
    }
    Ok(h.rows()
        .iter()
        .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)))
        .collect())
}

/// The top-left `(n - k) x n` block of `h_full`, validated as a full-rank
/// parity-check matrix with no empty checks.
pub fn derive_rate_half_subcode(h_full: &ParityCheckMatrix, k: usize, n: usize) -> Result<ParityCheckMatrix, CodecError> {
    CodeParameters::new(k, n)?;
    let m = n - k;
    if m > h_full.n_rows() || n > h_full.n_cols() {
        return Err(CodecError::SubmatrixTooLarge { rows: m, cols: n, have_rows: h_full.n_rows(), have_cols: h_full.n_cols() });
    }
    let rows = h_full.rows()[..m]
        .iter()
        .map(|row| row.iter().copied().filter(|&c| c < n).collect())
        .collect();
    let sub = ParityCheckMatrix::new(n, rows)?;
    sub.check_full_rank()?;
    Ok(sub)
}

/// One even-parity factor per check, in row order.
pub fn parity_factors_from_h(h: &ParityCheckMatrix) -> Vec<DiscreteFactor> {
    h.rows()
        .iter()
        .map(|row| {
            let scope: Vec<VariableId> = row.iter().map(|&c| VariableId::from(c)).collect();
            make_parity_factor(&scope).expect("rows are non-empty and duplicate free")
        })
        .collect()
}
