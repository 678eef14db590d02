//! Dense GF(2) matrices and the small linear-algebra toolbox used by the
//! kernel and construction machinery.
//!
//! Matrices are stored row-major with 64 columns packed per word. Sizes stay
//! modest throughout the crate (kernels are at most 20x20, dense generators
//! are guarded at 2^14), so a dense representation is the right tool; the
//! word packing keeps row combination and invertibility checks cheap.
//!
//! The external text format is one line per row of `'0'`/`'1'` characters,
//! which round-trips losslessly through [`BitMatrix`]'s `Display`/`FromStr`
//! implementations.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::{Error, Result};

/// Maximum number of rows [`row_space`] will enumerate (2^20 codewords).
pub const ROW_SPACE_MAX_ROWS: usize = 20;

/// A dense matrix over GF(2) with bit-packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64).max(1);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of `0`/`1` entries.
    ///
    /// Rejects empty input, ragged rows, and entries other than 0 or 1.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Dimension("matrix must be non-empty".into()));
        }
        let cols = rows[0].len();
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {}",
                    r,
                    row.len(),
                    cols
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m.set(r, c, true),
                    _ => {
                        return Err(Error::Parse(format!(
                            "entry ({r},{c}) is {v}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Whether the matrix is square.
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entry at `(r, c)`.
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        let w = self.bits[r * self.words_per_row + c / 64];
        (w >> (c % 64)) & 1 == 1
    }

    /// Sets the entry at `(r, c)`.
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        let w = &mut self.bits[r * self.words_per_row + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    /// Row `r` as a bit mask (bit `c` holds the entry in column `c`).
    ///
    /// # Panics
    ///
    /// Panics if the matrix has more than 64 columns.
    pub fn row_mask(&self, r: usize) -> u64 {
        assert!(
            self.cols <= 64,
            "row_mask requires at most 64 columns, got {}",
            self.cols
        );
        assert!(r < self.rows, "row out of bounds");
        self.bits[r * self.words_per_row]
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for a in 0..self.rows {
            for b in 0..self.cols {
                if !self.get(a, b) {
                    continue;
                }
                for c in 0..other.rows {
                    for d in 0..other.cols {
                        if other.get(c, d) {
                            out.set(a * other.rows + c, b * other.cols + d, true);
                        }
                    }
                }
            }
        }
        out
    }

    /// Whether the matrix is invertible over GF(2).
    ///
    /// Errors on non-square input.
    pub fn is_invertible(&self) -> Result<bool> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        // Row-reduce a working copy; full rank iff a pivot exists in every
        // column.
        let mut work = self.bits.clone();
        let wpr = self.words_per_row;
        let mut pivot_row = 0;
        for col in 0..self.cols {
            let (w, b) = (col / 64, col % 64);
            let mut found = None;
            for r in pivot_row..self.rows {
                if (work[r * wpr + w] >> b) & 1 == 1 {
                    found = Some(r);
                    break;
                }
            }
            let Some(r) = found else {
                return Ok(false);
            };
            for k in 0..wpr {
                work.swap(pivot_row * wpr + k, r * wpr + k);
            }
            for r2 in 0..self.rows {
                if r2 != pivot_row && (work[r2 * wpr + w] >> b) & 1 == 1 {
                    for k in 0..wpr {
                        let v = work[pivot_row * wpr + k];
                        work[r2 * wpr + k] ^= v;
                    }
                }
            }
            pivot_row += 1;
        }
        Ok(true)
    }

    /// Row vector times matrix: `u * self` over GF(2).
    ///
    /// `u` must have one 0/1 entry per matrix row; the result has one entry
    /// per column.
    pub fn mul_vec(&self, u: &[u8]) -> Result<Vec<u8>> {
        if u.len() != self.rows {
            return Err(Error::Dimension(format!(
                "vector length {} does not match row count {}",
                u.len(),
                self.rows
            )));
        }
        let mut acc = vec![0u64; self.words_per_row];
        for (r, &bit) in u.iter().enumerate() {
            match bit {
                0 => {}
                1 => {
                    for (a, w) in acc.iter_mut().zip(self.row_words(r)) {
                        *a ^= w;
                    }
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "vector entry {bit} is not a bit"
                    )))
                }
            }
        }
        Ok((0..self.cols)
            .map(|c| ((acc[c / 64] >> (c % 64)) & 1) as u8)
            .collect())
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix {}x{}:\n{}", self.rows, self.cols, self)
    }
}

impl FromStr for BitMatrix {
    type Err = Error;

    /// Parses the text format: one line per row of `'0'`/`'1'` characters.
    fn from_str(s: &str) -> Result<Self> {
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(line.len());
            for ch in line.chars() {
                match ch {
                    '0' => row.push(0),
                    '1' => row.push(1),
                    _ => {
                        return Err(Error::Parse(format!(
                            "line {}: unexpected character {ch:?}",
                            lineno + 1
                        )))
                    }
                }
            }
            rows.push(row);
        }
        BitMatrix::from_rows(&rows)
    }
}

/// All GF(2) linear combinations of the selected rows of `m`, as bit masks
/// (bit `c` of a mask holds the codeword entry in column `c`).
///
/// The empty selection yields the zero word alone. The result is sorted,
/// deduplicated, and has exactly `2^rank` elements.
///
/// Errors if the matrix has more than 64 columns or the selection has more
/// than [`ROW_SPACE_MAX_ROWS`] rows.
pub fn row_space(m: &BitMatrix, rows: Range<usize>) -> Result<Vec<u64>> {
    if m.cols() > 64 {
        return Err(Error::Dimension(format!(
            "row_space supports at most 64 columns, got {}",
            m.cols()
        )));
    }
    if rows.end > m.rows() || rows.start > rows.end {
        return Err(Error::Dimension(format!(
            "row range {rows:?} out of bounds for {} rows",
            m.rows()
        )));
    }
    let count = rows.end - rows.start;
    if count > ROW_SPACE_MAX_ROWS {
        return Err(Error::GuardExceeded {
            what: "row_space enumeration",
            needed: 1u128 << count,
            limit: 1u128 << ROW_SPACE_MAX_ROWS,
        });
    }
    let mut words = vec![0u64];
    for r in rows {
        let mask = m.row_mask(r);
        let prev = words.len();
        for i in 0..prev {
            words.push(words[i] ^ mask);
        }
    }
    words.sort_unstable();
    words.dedup();
    Ok(words)
}
