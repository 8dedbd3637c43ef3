//! Small linear-algebra utilities: a lightweight CSR matrix used for the
//! cached discretisation operators, a dense local solver for interaction
//! region systems, and the faer-backed sparse LU used for the global Newton
//! updates.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("singular local system (condition estimate {cond:.3e})")]
    SingularLocalSystem { cond: f64 },
    #[error("global sparse factorisation failed: {0}")]
    FactorisationFailed(String),
    #[error("non-finite entries in linear system")]
    NonFinite,
}

/// Sparse direct solve hook, implemented per concrete scalar type on top of
/// faer's supernodal LU.
pub trait SparseLu: Sized + Copy {
    /// Solves the `n`-by-`n` system given by `triplets` (duplicates are
    /// summed) in place of `rhs`.
    fn sparse_lu_solve(
        n: usize,
        triplets: &[(usize, usize, Self)],
        rhs: &mut [Self],
    ) -> Result<(), LinalgError>;
}

macro_rules! impl_sparse_lu {
    ($t:ty) => {
        impl SparseLu for $t {
            fn sparse_lu_solve(
                n: usize,
                triplets: &[(usize, usize, Self)],
                rhs: &mut [Self],
            ) -> Result<(), LinalgError> {
                use faer::prelude::Reborrow;
                use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
                use faer::sparse::{SparseColMat, Triplet};

                if triplets.iter().any(|t| !t.2.is_finite())
                    || rhs.iter().any(|v| !v.is_finite())
                {
                    return Err(LinalgError::NonFinite);
                }
                let entries: Vec<Triplet<usize, usize, $t>> = triplets
                    .iter()
                    .map(|&(r, c, v)| Triplet::new(r, c, v))
                    .collect();
                let mat = SparseColMat::try_new_from_triplets(n, n, &entries)
                    .map_err(|e| LinalgError::FactorisationFailed(format!("{e:?}")))?;
                let symbolic = SymbolicLu::try_new(mat.symbolic())
                    .map_err(|e| LinalgError::FactorisationFailed(format!("{e:?}")))?;
                let lu = Lu::try_new_with_symbolic(symbolic, mat.rb())
                    .map_err(|e| LinalgError::FactorisationFailed(format!("{e:?}")))?;
                let mut b = faer::Mat::<$t>::zeros(n, 1);
                for (i, v) in rhs.iter().enumerate() {
                    b[(i, 0)] = *v;
                }
                use faer::linalg::solvers::Solve;
                let x = lu.solve(&b);
                for (i, v) in rhs.iter_mut().enumerate() {
                    *v = x[(i, 0)];
                }
                if rhs.iter().any(|v| !v.is_finite()) {
                    return Err(LinalgError::FactorisationFailed(
                        "non-finite solution (singular matrix?)".into(),
                    ));
                }
                Ok(())
            }
        }
    };
}

impl_sparse_lu!(f32);
impl_sparse_lu!(f64);

/// Compressed sparse row matrix with summed duplicates.
#[derive(Debug, Clone)]
pub struct CsrMatrix<F> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<F>,
}

impl<F: Scalar> CsrMatrix<F> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, F)>,
    ) -> Self {
        let mut per_row: Vec<Vec<(usize, F)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    let n = values.len();
                    values[n - 1] += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
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

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, F)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or_else(F::zero)
    }

    /// y += alpha * A x
    pub fn mul_add(&self, alpha: F, x: &[F], y: &mut [F]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let mut acc = F::zero();
            for (c, v) in self.row(i) {
                acc += v * x[c];
            }
            y[i] += alpha * acc;
        }
    }

    pub fn mul_vec(&self, x: &[F]) -> Vec<F> {
        let mut y = vec![F::zero(); self.nrows];
        self.mul_add(F::one(), x, &mut y);
        y
    }

    /// Dot product of row `i` with `x`.
    pub fn row_dot(&self, i: usize, x: &[F]) -> F {
        let mut acc = F::zero();
        for (c, v) in self.row(i) {
            acc += v * x[c];
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<F> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (c, v) in self.row(i) {
                m[(i, c)] += v;
            }
        }
        m
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, F)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(c, v)| (i, c, v)))
    }
}

/// Dense LU solve with partial pivoting for the interaction-region systems.
/// Returns the solution of `a X = b` or a singularity error when the pivot
/// ratio exceeds `1e14`.
pub fn solve_dense<F: Scalar>(
    mut a: DMatrix<F>,
    mut b: DMatrix<F>,
) -> Result<DMatrix<F>, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let nrhs = b.ncols();
    let mut max_piv = F::zero();
    let mut min_piv = F::max_value().unwrap();
    for k in 0..n {
        // partial pivot
        let mut p = k;
        let mut best = a[(k, k)].abs();
        for i in (k + 1)..n {
            let v = a[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if p != k {
            a.swap_rows(k, p);
            b.swap_rows(k, p);
        }
        let piv = a[(k, k)];
        let apiv = piv.abs();
        if apiv > max_piv {
            max_piv = apiv;
        }
        if apiv < min_piv {
            min_piv = apiv;
        }
        if apiv == F::zero() {
            return Err(LinalgError::SingularLocalSystem { cond: f64::INFINITY });
        }
        for i in (k + 1)..n {
            let factor = a[(i, k)] / piv;
            if factor == F::zero() {
                continue;
            }
            a[(i, k)] = F::zero();
            for j in (k + 1)..n {
                let akj = a[(k, j)];
                a[(i, j)] -= factor * akj;
            }
            for j in 0..nrhs {
                let bkj = b[(k, j)];
                b[(i, j)] -= factor * bkj;
            }
        }
    }
    let cond = (max_piv / min_piv)
        .to_subset()
        .map(|c: f64| c)
        .unwrap_or(f64::INFINITY);
    if cond > 1e14 {
        return Err(LinalgError::SingularLocalSystem { cond });
    }
    // back substitution
    for j in 0..nrhs {
        for k in (0..n).rev() {
            let mut acc = b[(k, j)];
            for m in (k + 1)..n {
                acc -= a[(k, m)] * b[(m, j)];
            }
            b[(k, j)] = acc / a[(k, k)];
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_sums_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn dense_solve_roundtrip() {
        let a = DMatrix::<f64>::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let x_true = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 3.0]);
        let b = &a * &x_true;
        let x = solve_dense(a, b).unwrap();
        for i in 0..3 {
            assert!((x[(i, 0)] - x_true[(i, 0)]).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_solve_flags_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert!(solve_dense(a, b).is_err());
    }

    #[test]
    fn sparse_lu_small_system() {
        let triplets = vec![(0, 0, 2.0f64), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)];
        let mut rhs = vec![3.0, 4.0];
        f64::sparse_lu_solve(2, &triplets, &mut rhs).unwrap();
        assert!((rhs[0] - 1.0).abs() < 1e-14);
        assert!((rhs[1] - 1.0).abs() < 1e-14);
    }
}
