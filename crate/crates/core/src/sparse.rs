//! Compressed sparse row storage: binary adjacency and weighted square operators.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};

/// Binary adjacency in CSR form. Rows are source nodes, columns destination
/// nodes. Column indices are strictly increasing within a row; parallel edges
/// collapse to a single entry.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SparseAdj {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl SparseAdj {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
        }
    }

    pub fn from_edges(rows: usize, cols: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut counts = vec![0usize; rows + 1];
        for (k, &(r, c)) in edges.iter().enumerate() {
            if r >= rows || c >= cols {
                return Err(Error::Shape(format!(
                    "edge #{k} ({r}, {c}) outside a {rows}x{cols} adjacency"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut raw = vec![0usize; edges.len()];
        for &(r, c) in edges {
            raw[fill[r]] = c;
            fill[r] += 1;
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::with_capacity(edges.len());
        indptr.push(0);
        for i in 0..rows {
            let row = &mut raw[counts[i]..counts[i + 1]];
            row.sort_unstable();
            let mut last = None;
            for &c in row.iter() {
                if last != Some(c) {
                    indices.push(c);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
        })
    }

    /// Builds from raw CSR arrays, validating every structural invariant.
    pub fn from_csr(rows: usize, cols: usize, indptr: Vec<usize>, indices: Vec<usize>) -> Result<Self> {
        if indptr.len() != rows + 1 || indptr[0] != 0 || indptr[rows] != indices.len() {
            return Err(Error::Shape("malformed CSR row pointer".into()));
        }
        for i in 0..rows {
            if indptr[i] > indptr[i + 1] {
                return Err(Error::Shape(format!("row pointer decreases at row {i}")));
            }
            let row = &indices[indptr[i]..indptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Shape(format!("row {i} columns not strictly increasing")));
            }
            if row.last().is_some_and(|&c| c >= cols) {
                return Err(Error::Shape(format!("row {i} has a column index >= {cols}")));
            }
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
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
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.rows && self.row(i).binary_search(&j).is_ok()
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        (0..self.rows).map(|i| self.degree(i)).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    pub fn transpose(&self) -> SparseAdj {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let mut fill = counts.clone();
        let mut indices = vec![0usize; self.indices.len()];
        // Rows are visited in order, so each transposed row comes out sorted.
        for i in 0..self.rows {
            for &c in self.row(i) {
                indices[fill[c]] = i;
                fill[c] += 1;
            }
        }
        SparseAdj {
            rows: self.cols,
            cols: self.rows,
            indptr: counts,
            indices,
        }
    }

    /// Boolean product: entry `(i, k)` is set iff some `j` has `(i, j)` in
    /// `self` and `(j, k)` in `other`.
    pub fn bool_product(&self, other: &SparseAdj) -> Result<SparseAdj> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut marker = vec![usize::MAX; other.cols];
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for i in 0..self.rows {
            let start = indices.len();
            for &j in self.row(i) {
                for &k in other.row(j) {
                    if marker[k] != i {
                        marker[k] = i;
                        indices.push(k);
                    }
                }
            }
            indices[start..].sort_unstable();
            indptr.push(indices.len());
        }
        Ok(SparseAdj {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
        })
    }

    /// Grows the matrix to `rows x cols` and appends `extra` edges.
    pub fn extended(&self, rows: usize, cols: usize, extra: &[(usize, usize)]) -> Result<SparseAdj> {
        if rows < self.rows || cols < self.cols {
            return Err(Error::Shape("extension cannot shrink an adjacency".into()));
        }
        let mut edges: Vec<(usize, usize)> = self.edges().collect();
        edges.extend_from_slice(extra);
        SparseAdj::from_edges(rows, cols, &edges)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for (i, j) in self.edges() {
            m.set(i, j, 1.0);
        }
        m
    }
}

/// Real-valued CSR matrix; used for normalized propagation operators.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 || indices.len() != values.len() || indptr[rows] != indices.len() {
            return Err(Error::Shape("malformed CSR arrays".into()));
        }
        if indices.iter().any(|&c| c >= cols) {
            return Err(Error::Shape(format!("column index >= {cols}")));
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(m: &Matrix) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            indptr,
            indices,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn mul_dense(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.rows(), self.cols);
        let mut out = Matrix::zeros(self.rows, x.cols());
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                axpy(v, x.row(j), out.row_mut(i));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                m.set(i, j, m.get(i, j) + v);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_edges_sorts_and_collapses_duplicates() {
        let a = SparseAdj::from_edges(2, 4, &[(0, 3), (0, 1), (0, 3), (1, 0)]).unwrap();
        assert_eq!(a.row(0), &[1, 3]);
        assert_eq!(a.row(1), &[0]);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn out_of_bounds_edge_is_rejected() {
        assert!(SparseAdj::from_edges(2, 2, &[(0, 2)]).is_err());
    }

    #[test]
    fn from_csr_validates_order() {
        assert!(SparseAdj::from_csr(1, 3, vec![0, 2], vec![2, 1]).is_err());
        assert!(SparseAdj::from_csr(1, 3, vec![0, 2], vec![1, 2]).is_ok());
    }

    #[test]
    fn bool_product_collapses_multiplicities() {
        // two distinct middle nodes connect (0, 0)
        let a = SparseAdj::from_edges(1, 2, &[(0, 0), (0, 1)]).unwrap();
        let b = SparseAdj::from_edges(2, 1, &[(0, 0), (1, 0)]).unwrap();
        let p = a.bool_product(&b).unwrap();
        assert_eq!(p.to_dense().as_slice(), &[1.0]);
        assert!(b.bool_product(&b).is_err());
    }

    #[test]
    fn csr_matvec() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]).unwrap();
        let s = CsrMatrix::from_dense(&m);
        assert_eq!(s.mul_vec(&[3.0, 5.0]), vec![10.0, 3.0]);
        assert_eq!(s.mul_dense(&Matrix::identity(2)), m);
    }
}
