//! Block interleaving: `k` physical blocks of `b` bins become `b` logical
//! blocks of `k` uses, `(t, ℓ) ↔ (ℓ, t)`.

use crate::error::{Error, Result};

/// Row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> BlockMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!("block matrix dimensions {rows}×{cols} must be positive")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { what: "block matrix data", expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { what: "block matrix row", expected: cols, got: r.len() });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols).map(<[T]>::to_vec).collect()
    }

    /// Zero-copy view of column `c`.
    pub fn column(&self, c: usize) -> Column<'_, T> {
        assert!(c < self.cols);
        Column { matrix: self, col: c }
    }

    fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            data.extend((0..self.rows).map(|r| self.get(r, c)));
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    /// `k × b` physical blocks → `b × k` logical blocks.
    pub fn interleave(&self) -> Self {
        self.transpose()
    }

    /// `b × k` logical blocks → `k × b` physical blocks.
    pub fn deinterleave(&self) -> Self {
        self.transpose()
    }
}

/// Strided view of one column; for a `k × b` physical matrix this is logical
/// block `ℓ` without copying.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a, T> {
    matrix: &'a BlockMatrix<T>,
    col: usize,
}

impl<T: Copy> Column<'_, T> {
    pub fn len(&self) -> usize {
        self.matrix.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> T {
        self.matrix.get(i, self.col)
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.iter().collect()
    }
}

pub fn interleave<T: Copy>(m: &BlockMatrix<T>) -> BlockMatrix<T> {
    m.interleave()
}

pub fn deinterleave<T: Copy>(m: &BlockMatrix<T>) -> BlockMatrix<T> {
    m.deinterleave()
}
