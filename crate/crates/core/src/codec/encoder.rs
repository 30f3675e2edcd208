//! Systematic encoding by Gauss-Jordan elimination over GF(2).

use super::{get_bit, xor_into, CodeParameters, CodecError, ParityCheckMatrix};

/// A codeword in the original column order of H.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    pub bits: Vec<u8>,
}

/// Encoder for a full-rank H. Elimination picks pivot columns from the right
/// so that, when the trailing `M` columns are invertible, the message sits in
/// the leading `K` positions.
#[derive(Debug, Clone)]
pub struct Encoder {
    params: CodeParameters,
    message_positions: Vec<usize>,
    // (pivot column, reduced row) pairs
    checks: Vec<(usize, Vec<u64>)>,
}

impl Encoder {
    pub fn new(h: &ParityCheckMatrix) -> Result<Self, CodecError> {
        let n = h.n_cols();
        let m = h.n_rows();
        let params = h.parameters()?;
        let mut rows: Vec<Vec<u64>> = (0..m).map(|r| h.row_bits(r)).collect();
        let mut pivots: Vec<usize> = Vec::with_capacity(m);
        for col in (0..n).rev() {
            if pivots.len() == m {
                break;
            }
            let done = pivots.len();
            let Some(found) = (done..m).find(|&r| get_bit(&rows[r], col)) else {
                continue;
            };
            rows.swap(done, found);
            let pivot_row = rows[done].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != done && get_bit(row, col) {
                    xor_into(row, &pivot_row);
                }
            }
            pivots.push(col);
        }
        if pivots.len() < m {
            // the row that ended up all-zero is the dependent one
            h.check_full_rank()?;
            return Err(CodecError::RankDeficient { row: m - 1 });
        }
        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&p| is_pivot[p] = true);
        let message_positions = (0..n).filter(|&c| !is_pivot[c]).collect();
        let checks = pivots.into_iter().zip(rows).collect();
        Ok(Self { params, message_positions, checks })
    }

    pub fn parameters(&self) -> CodeParameters {
        self.params
    }

    /// Columns that carry the message bits, ascending.
    pub fn message_positions(&self) -> &[usize] {
        &self.message_positions
    }

    pub fn encode(&self, message: &[u8]) -> Result<Codeword, CodecError> {
        if message.len() != self.params.k {
            return Err(CodecError::LengthMismatch { expected: self.params.k, got: message.len() });
        }
        if let Some(&b) = message.iter().find(|&&b| b > 1) {
            return Err(CodecError::NotABit(b));
        }
        let mut bits = vec![0u8; self.params.n];
        for (&pos, &b) in self.message_positions.iter().zip(message) {
            bits[pos] = b;
        }
        for (pivot, row) in &self.checks {
            bits[*pivot] = self
                .message_positions
                .iter()
                .filter(|&&c| get_bit(row, c))
                .fold(0, |acc, &c| acc ^ bits[c]);
        }
        Ok(Codeword { bits })
    }

    /// The message bits carried by a codeword.
    pub fn extract_message(&self, bits: &[u8]) -> Vec<u8> {
        self.message_positions.iter().map(|&p| bits[p]).collect()
    }
}
