//! Compressed sparse row matrices sized for the spatial operators: a few
//! hundred thousand rows with at most nine entries each. Hand-rolled so the
//! multigrid smoother can sweep rows directly.

use faer::{Mat, MatRef};

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows];
        for &(r, _, _) in triplets {
            debug_assert!(r < nrows);
            counts[r] += 1;
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        for i in 0..nrows {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let mut col_idx = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut cursor = row_ptr.clone();
        for &(r, c, v) in triplets {
            debug_assert!(c < ncols);
            col_idx[cursor[r]] = c;
            vals[cursor[r]] = v;
            cursor[r] += 1;
        }
        // Sort each row by column and merge duplicates.
        let mut out_col = Vec::with_capacity(col_idx.len());
        let mut out_val = Vec::with_capacity(vals.len());
        let mut out_ptr = vec![0usize; nrows + 1];
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            scratch.clear();
            for k in row_ptr[r]..row_ptr[r + 1] {
                scratch.push((col_idx[k], vals[k]));
            }
            scratch.sort_unstable_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < scratch.len() {
                let c = scratch[i].0;
                let mut v = scratch[i].1;
                let mut j = i + 1;
                while j < scratch.len() && scratch[j].0 == c {
                    v += scratch[j].1;
                    j += 1;
                }
                out_col.push(c);
                out_val.push(v);
                i = j;
            }
            out_ptr[r + 1] = out_col.len();
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr: out_ptr,
            col_idx: out_col,
            vals: out_val,
        }
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let triplets: Vec<_> = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .collect();
        Self::from_triplets(diag.len(), diag.len(), &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.vals[range])
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// Applies the operator to every column of a dense matrix.
    pub fn apply_mat(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        debug_assert_eq!(x.nrows(), self.ncols);
        let mut y = Mat::zeros(self.nrows, x.ncols());
        for j in 0..x.ncols() {
            for r in 0..self.nrows {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * x[(self.col_idx[k], j)];
                }
                y[(r, j)] = acc;
            }
        }
        y
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    d[r] = self.vals[k];
                }
            }
        }
        d
    }

    /// One forward Gauss–Seidel sweep on `A x = b`.
    pub fn gauss_seidel_forward(&self, x: &mut [f64], b: &[f64], diag: &[f64]) {
        for r in 0..self.nrows {
            let mut acc = b[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if c != r {
                    acc -= self.vals[k] * x[c];
                }
            }
            x[r] = acc / diag[r];
        }
    }

    /// One backward Gauss–Seidel sweep.
    pub fn gauss_seidel_backward(&self, x: &mut [f64], b: &[f64], diag: &[f64]) {
        for r in (0..self.nrows).rev() {
            let mut acc = b[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if c != r {
                    acc -= self.vals[k] * x[c];
                }
            }
            x[r] = acc / diag[r];
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] = self.vals[k];
            }
        }
        m
    }

    /// Largest |A - A^T| entry.
    pub fn asymmetry(&self) -> f64 {
        let mut max = 0.0f64;
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let v = self.vals[k];
                let vt = self.get(c, r);
                max = max.max((v - vt).abs());
            }
        }
        max
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                return self.vals[k];
            }
        }
        0.0
    }

    /// Sum of scaled matrices with identical shape: `sum_i c_i A_i`.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        assert!(!terms.is_empty());
        let nrows = terms[0].1.nrows;
        let ncols = terms[0].1.ncols;
        let mut triplets = Vec::new();
        for (c, m) in terms {
            assert_eq!(m.nrows, nrows);
            assert_eq!(m.ncols, ncols);
            for r in 0..nrows {
                for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                    triplets.push((r, m.col_idx[k], c * m.vals[k]));
                }
            }
        }
        CsrMatrix::from_triplets(nrows, ncols, &triplets)
    }

    /// Transpose, used to build restriction from prolongation.
    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                triplets.push((self.col_idx[k], r, self.vals[k]));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, &triplets)
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.vals {
            *v *= c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 0, 2.0), (0, 1, 3.0), (1, 1, 5.0)]);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.nnz(), 3);
        let (cols, _) = a.row(0);
        assert_eq!(cols, &[0, 1]);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 2, -1.0), (1, 1, 3.0), (2, 0, 1.0), (2, 2, 4.0)]);
        let x = [1.0, 2.0, 3.0];
        let y = a.matvec_alloc(&x);
        assert_eq!(y, vec![-1.0, 6.0, 13.0]);
        let d = a.to_dense();
        assert_eq!(d[(2, 2)], 4.0);
    }

    #[test]
    fn gs_sweep_solves_diagonal() {
        let a = CsrMatrix::from_diag(&[2.0, 4.0]);
        let mut x = vec![0.0, 0.0];
        let d = a.diag();
        a.gauss_seidel_forward(&mut x, &[2.0, 8.0], &d);
        assert_eq!(x, vec![1.0, 2.0]);
    }
}
