//! Row-major `f32` matrices.
//!
//! Storage is single precision; every reduction (matrix products, column sums)
//! accumulates in `f64` and rounds once on the way out.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                None,
                alloc::format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a `0 x 0` matrix.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape(
                    None,
                    alloc::format!("row {i} has {} values, expected {cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f32) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Gathers the given rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hstack(blocks: &[&DenseMatrix]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::shape(
                None,
                alloc::format!("hstack of blocks with {} and {rows} rows", b.rows),
            ));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(r));
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f32) -> Self {
        self.map(|v| v * s)
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::shape(
                None,
                alloc::format!("matmul {}x{} by {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = Self::zeros(n, m);
        let mut acc = vec![0.0f64; m];
        for i in 0..n {
            acc.iter_mut().for_each(|a| *a = 0.0);
            let a_row = &self.data[i * k..(i + 1) * k];
            for (kk, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let a = a as f64;
                let b_row = &rhs.data[kk * m..(kk + 1) * m];
                for (acc_j, &b) in acc.iter_mut().zip(b_row) {
                    *acc_j += a * b as f64;
                }
            }
            for (o, &a) in out.data[i * m..(i + 1) * m].iter_mut().zip(&acc) {
                *o = a as f32;
            }
        }
        Ok(out)
    }

    /// `self * rhs^T`.
    pub fn matmul_transb(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::shape(
                None,
                alloc::format!(
                    "matmul {}x{} by transposed {}x{}",
                    self.rows,
                    self.cols,
                    rhs.rows,
                    rhs.cols
                ),
            ));
        }
        self.matmul(&rhs.transpose())
    }

    /// `self^T * rhs`.
    pub fn matmul_transa(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::shape(
                None,
                alloc::format!("transposed {}x{} by {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut acc = vec![0.0f64; k * m];
        for s in 0..n {
            let a_row = &self.data[s * k..(s + 1) * k];
            let b_row = &rhs.data[s * m..(s + 1) * m];
            for (kk, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let a = a as f64;
                for (acc_j, &b) in acc[kk * m..(kk + 1) * m].iter_mut().zip(b_row) {
                    *acc_j += a * b as f64;
                }
            }
        }
        Ok(Self {
            rows: k,
            cols: m,
            data: acc.into_iter().map(|v| v as f32).collect(),
        })
    }

    /// Adds `bias` to every row.
    pub fn add_row_vector(&mut self, bias: &[f32]) -> Result<()> {
        if bias.len() != self.cols {
            return Err(Error::shape(
                None,
                alloc::format!("bias of length {} on {} columns", bias.len(), self.cols),
            ));
        }
        for r in 0..self.rows {
            for (v, &b) in self.row_mut(r).iter_mut().zip(bias) {
                *v += b;
            }
        }
        Ok(())
    }

    pub fn column_sums(&self) -> Vec<f32> {
        let mut acc = vec![0.0f64; self.cols];
        for r in 0..self.rows {
            for (a, &v) in acc.iter_mut().zip(self.row(r)) {
                *a += v as f64;
            }
        }
        acc.into_iter().map(|v| v as f32).collect()
    }

    pub fn hadamard_in_place(&mut self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                None,
                alloc::format!("elementwise product of {:?} and {:?}", self.shape(), other.shape()),
            ));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a *= b;
        }
        Ok(())
    }

    pub fn add_in_place(&mut self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                None,
                alloc::format!("sum of {:?} and {:?}", self.shape(), other.shape()),
            ));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }
}
