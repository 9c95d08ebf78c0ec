//! Compressed sparse row matrices assembled from triplets.

use std::io::{self, Write};

use nalgebra::DMatrix;

/// Accumulates `(row, col, value)` contributions; duplicates are summed on build.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            entries: Vec::with_capacity(n),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn build(self, nrows: usize, ncols: usize) -> CsrMatrix {
        CsrMatrix::from_triplets(nrows, ncols, self.entries)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds a matrix from unsorted triplets, summing duplicates.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        for &(r, c, _) in &triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of range");
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = TripletBuilder::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.add(i, j, m[(i, j)]);
                }
            }
        }
        t.build(m.nrows(), m.ncols())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in mat-vec");
        assert_eq!(y.len(), self.nrows, "dimension mismatch in mat-vec");
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v)).collect(),
        )
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `Σ αₖ Aₖ` over matrices of identical shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Self {
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let mut t = TripletBuilder::new();
        for &(alpha, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols), "shape mismatch");
            for (i, j, v) in m.triplets() {
                t.add(i, j, alpha * v);
            }
        }
        t.build(nrows, ncols)
    }

    /// Submatrix `A[rows, cols]` where the index lists give old indices in new order.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut t = TripletBuilder::new();
        for (new_r, &old_r) in rows.iter().enumerate() {
            for (old_c, v) in self.row(old_r) {
                let new_c = col_map[old_c];
                if new_c != usize::MAX {
                    t.add(new_r, new_c, v);
                }
            }
        }
        t.build(rows.len(), cols.len())
    }

    /// Assembles `[[a11, a12], [a21, a22]]`.
    pub fn block2x2(a11: &Self, a12: &Self, a21: &Self, a22: &Self) -> Self {
        assert_eq!(a11.nrows, a12.nrows);
        assert_eq!(a21.nrows, a22.nrows);
        assert_eq!(a11.ncols, a21.ncols);
        assert_eq!(a12.ncols, a22.ncols);
        let (r0, c0) = (a11.nrows, a11.ncols);
        let mut t = TripletBuilder::with_capacity(a11.nnz() + a12.nnz() + a21.nnz() + a22.nnz());
        for (i, j, v) in a11.triplets() {
            t.add(i, j, v);
        }
        for (i, j, v) in a12.triplets() {
            t.add(i, c0 + j, v);
        }
        for (i, j, v) in a21.triplets() {
            t.add(r0 + i, j, v);
        }
        for (i, j, v) in a22.triplets() {
            t.add(r0 + i, c0 + j, v);
        }
        t.build(r0 + a21.nrows, c0 + a12.ncols)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// Writes the lower triangle as `row col value` lines under a `symmetric N nnz` header.
    pub fn write_symmetric_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        let lower: Vec<_> = self.triplets().filter(|&(i, j, _)| j <= i).collect();
        writeln!(out, "symmetric {} {}", self.nrows, lower.len())?;
        for (i, j, v) in lower {
            writeln!(out, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "dimension mismatch in dot product");
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn restrict_and_blocks() {
        let m = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 1.0), (0, 2, 2.0), (2, 0, 2.0), (2, 2, 5.0), (1, 1, 7.0)],
        );
        let r = m.restrict(&[2, 0], &[2, 0]);
        assert_eq!(r.to_dense(), DMatrix::from_row_slice(2, 2, &[5.0, 2.0, 2.0, 1.0]));
        let b = CsrMatrix::block2x2(&r, &r, &r, &r);
        assert_eq!(b.nrows(), 4);
        assert_eq!(b.get(3, 2), 2.0);
        assert_eq!(b.max_asymmetry(), 0.0);
    }

    #[test]
    fn products() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![4.0, 7.0]);
        assert_eq!(m.quad_form(&[1.0, 2.0]), 18.0);
        assert_eq!(m.bilinear(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn coordinate_dump_header() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0)]);
        let mut buf = Vec::new();
        m.write_symmetric_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("symmetric 2 2"));
        assert_eq!(lines.count(), 2);
    }
}
