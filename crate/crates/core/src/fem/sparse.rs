//! Compressed sparse row matrices and the direct solver.
//!
//! Factorization is delegated to faer's sparse LU (partial pivoting with a
//! fill-reducing column ordering).

use std::fmt::Write as _;

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use thiserror::Error;

/// Residual threshold every accepted solve must meet
pub const SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("matrix is singular to working precision (relative residual {residual:e})")]
    SingularMatrix { residual: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, right-hand side has {rhs} entries")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
}

/// Square or rectangular CSR matrix without duplicate entries
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    /// Compresses triplets; duplicates are summed in insertion order so the
    /// result is independent of how the caller grouped its contributions.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "entry ({i}, {j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { nrows, ncols, row_ptr, col_idx, values }
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
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)).collect())
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`
    pub fn add_scaled(&self, other: &SparseMatrix, s: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(other.triplets().map(|(i, j, v)| (i, j, s * v)));
        SparseMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Coordinate text dump, one `row col value` line per stored entry
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, j, v) in self.triplets() {
            let _ = writeln!(out, "{i} {j} {v:.16e}");
        }
        out
    }
}

/// Accumulates triplets, optionally placing sub-matrices at block offsets
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.entries.push((i, j, v));
    }

    pub fn add_block(&mut self, block: &SparseMatrix, row_offset: usize, col_offset: usize, scale: f64) {
        self.entries.extend(block.triplets().map(|(i, j, v)| (i + row_offset, j + col_offset, scale * v)));
    }

    /// Replaces the rows and columns of the flagged unknowns by identity
    /// rows (homogeneous essential conditions).
    pub fn constrain(&mut self, fixed: &[bool]) {
        self.entries.retain(|&(i, j, _)| !fixed[i] && !fixed[j]);
        for (i, _) in fixed.iter().enumerate().filter(|(_, &f)| f) {
            self.entries.push((i, i, 1.0));
        }
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

/// Outcome of a successful solve
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    /// `‖Ax − b‖₂ / max(‖b‖₂, 1)`
    pub relative_residual: f64,
    pub refinement_steps: usize,
}

/// Reusable LU factorization of a square sparse matrix
pub struct LuFactor {
    matrix: SparseMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for LuFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactor").field("n", &self.matrix.nrows).finish()
    }
}

impl LuFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self, SolveError> {
        if a.nrows != a.ncols {
            return Err(SolveError::DimensionMismatch { rows: a.nrows, cols: a.ncols, rhs: a.nrows });
        }
        let t: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &t)
            .expect("triplets are in range");
        let lu = csc.sp_lu().map_err(|_| SolveError::SingularMatrix { residual: f64::INFINITY })?;
        Ok(LuFactor { matrix: a.clone(), lu })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Solves `A x = b` with up to three steps of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport), SolveError> {
        let a = &self.matrix;
        if b.len() != a.nrows {
            return Err(SolveError::DimensionMismatch { rows: a.nrows, cols: a.ncols, rhs: b.len() });
        }
        let scale = norm2(b).max(1.0);
        let mut x = self.raw_solve(b);
        let mut steps = 0;
        loop {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(SolveError::SingularMatrix { residual: f64::INFINITY });
            }
            let r: Vec<f64> = a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
            let residual = norm2(&r) / scale;
            if residual <= SOLVE_TOLERANCE {
                return Ok((x, SolveReport { relative_residual: residual, refinement_steps: steps }));
            }
            if steps == 3 {
                return Err(SolveError::SingularMatrix { residual });
            }
            let dx = self.raw_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            steps += 1;
        }
    }
}

/// One-shot sparse solve
pub fn solve_sparse(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport), SolveError> {
    if b.len() != a.nrows || a.nrows != a.ncols {
        return Err(SolveError::DimensionMismatch { rows: a.nrows, cols: a.ncols, rhs: b.len() });
    }
    LuFactor::new(a)?.solve(b)
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, -1.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 2.0]), vec![1.0, 3.0]);
        assert_eq!(a.transpose().get(2, 1), 1.5);
    }

    #[test]
    fn identity_solve() {
        let b = vec![1.0, -2.0, 3.5];
        let (x, rep) = solve_sparse(&SparseMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
        assert!(rep.relative_residual <= SOLVE_TOLERANCE);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(solve_sparse(&a, &[1.0, 2.0]), Err(SolveError::SingularMatrix { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        assert!(matches!(solve_sparse(&a, &[1.0]), Err(SolveError::DimensionMismatch { .. })));
        let r = SparseMatrix::zeros(2, 3);
        assert!(matches!(LuFactor::new(&r), Err(SolveError::DimensionMismatch { .. })));
    }

    #[test]
    fn constrain_replaces_rows_and_columns() {
        let mut b = TripletBuilder::new(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                b.push(i, j, 1.0 + (i * 3 + j) as f64);
            }
        }
        b.constrain(&[false, true, false]);
        let m = b.build();
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.get(2, 2), 9.0);
    }

    #[test]
    fn indefinite_saddle_point() {
        // [[2, 1], [1, 0]] is nonsingular but indefinite
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0)]);
        let (x, _) = solve_sparse(&a, &[3.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }
}
