//! Compressed-sparse-row matrices and Jacobi-preconditioned conjugate
//! gradients for the symmetric positive-definite systems of the solver.

use crate::parallel::{self, Exec};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Columns within a row must
    /// be strictly increasing.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                debug_assert!(c < n);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix::from_rows((0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        let mut s = 0.0;
        for k in lo..hi {
            s += self.vals[k] * x[self.cols[k]];
        }
        s
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_with(Exec::default(), x, y)
    }

    pub fn matvec_with(&self, exec: Exec, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        parallel::fill_with(exec, y, |i| self.row_dot(i, x));
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Exact (bitwise) symmetry of the stored entries.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i).to_bits() == v.to_bits()))
    }

    /// Positive diagonal, non-positive off-diagonal, weakly diagonally
    /// dominant rows.
    pub fn is_m_matrix(&self) -> bool {
        (0..self.n).all(|i| {
            let mut diag = 0.0;
            let mut off = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    diag = v;
                } else if v > 0.0 {
                    return false;
                } else {
                    off -= v;
                }
            }
            diag > 0.0 && diag >= off
        })
    }
}

/// `A x = b` with `A` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.mul(x);
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri = bi - *ri;
        }
        r
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        norm(&self.residual(x))
    }

    /// `‖A x − b‖ / ‖b‖`, or the absolute residual when `b = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let b = norm(&self.rhs);
        let r = self.residual_norm(x);
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    dot_with(Exec::default(), a, b)
}

pub fn dot_with(exec: Exec, a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    parallel::sum_by_with(exec, a.len(), |i| a[i] * b[i])
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b − A x‖₂` recomputed from the returned iterate.
    pub residual: f64,
    pub rhs_norm: f64,
    pub converged: bool,
}

impl CgSolution {
    pub fn relative_residual(&self) -> f64 {
        if self.rhs_norm > 0.0 {
            self.residual / self.rhs_norm
        } else {
            self.residual
        }
    }
}

/// Jacobi-preconditioned conjugate gradients from `x0` until
/// `‖b − A x‖ ≤ rel_tol ‖b‖`. Hitting `max_iter` is reported through
/// `converged = false`, not as an error.
pub fn cg_solve(sys: &SparseSystem, x0: Vec<f64>, rel_tol: f64, max_iter: usize) -> CgSolution {
    let a = &sys.matrix;
    let b = &sys.rhs;
    let n = a.n();
    assert_eq!(x0.len(), n);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            rhs_norm: 0.0,
            converged: true,
        };
    }
    let target = rel_tol * b_norm;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();

    let mut x = x0;
    let mut r = sys.residual(&x);
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    // The recursive residual drifts from the true one; restart from the
    // true residual until it meets the target too.
    for _restart in 0..4 {
        if norm(&r) <= target {
            break;
        }
        parallel::fill(&mut z, |i| inv_diag[i] * r[i]);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            a.matvec(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap.is_nan() || pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            parallel::for_each_mut(&mut x, |i, xi| *xi += alpha * p[i]);
            parallel::for_each_mut(&mut r, |i, ri| *ri -= alpha * ap[i]);
            iterations += 1;
            if norm(&r) <= target {
                break;
            }
            parallel::fill(&mut z, |i| inv_diag[i] * r[i]);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            parallel::for_each_mut(&mut p, |i, pi| *pi = z[i] + beta * *pi);
        }
        r = sys.residual(&x);
        if iterations >= max_iter {
            break;
        }
    }
    let residual = norm(&r);
    CgSolution {
        converged: residual <= target,
        x,
        iterations,
        residual,
        rhs_norm: b_norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        CsrMatrix::from_rows(
            (0..n)
                .map(|i| {
                    let mut row = Vec::new();
                    if i > 0 {
                        row.push((i - 1, -1.0));
                    }
                    row.push((i, 2.0));
                    if i + 1 < n {
                        row.push((i + 1, -1.0));
                    }
                    row
                })
                .collect(),
        )
    }

    #[test]
    fn identity_solves_in_one_step() {
        let sys = SparseSystem {
            matrix: CsrMatrix::identity(4),
            rhs: vec![1.0, -2.0, 3.0, 0.5],
        };
        let sol = cg_solve(&sys, vec![0.0; 4], 1e-12, 10);
        assert!(sol.iterations <= 1);
        assert_eq!(sol.x, sys.rhs);
    }

    #[test]
    fn three_by_three_laplacian_matches_elimination() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = (1, 0, 0) has x = (3/4, 1/2, 1/4).
        let sys = SparseSystem {
            matrix: laplace_1d(3),
            rhs: vec![1.0, 0.0, 0.0],
        };
        let sol = cg_solve(&sys, vec![0.0; 3], 1e-14, 10);
        for (xi, ei) in sol.x.iter().zip([0.75, 0.5, 0.25]) {
            assert!((xi - ei).abs() < 1e-12);
        }
        assert!(sol.converged);
    }

    #[test]
    fn max_iter_is_reported() {
        let sys = SparseSystem {
            matrix: laplace_1d(200),
            rhs: vec![1.0; 200],
        };
        let sol = cg_solve(&sys, vec![0.0; 200], 1e-12, 3);
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let sys = SparseSystem {
            matrix: laplace_1d(5),
            rhs: vec![0.0; 5],
        };
        let sol = cg_solve(&sys, vec![1.0; 5], 1e-10, 100);
        assert_eq!(sol.x, vec![0.0; 5]);
    }

    #[test]
    fn structure_checks() {
        let a = laplace_1d(6);
        assert!(a.is_symmetric());
        assert!(a.is_m_matrix());
        let b = CsrMatrix::from_rows(vec![vec![(0, 1.0), (1, 0.5)], vec![(0, 0.5), (1, 1.0)]]);
        assert!(b.is_symmetric());
        assert!(!b.is_m_matrix());
    }

    #[test]
    fn matvec_policies_agree() {
        let a = laplace_1d(5000);
        let x: Vec<f64> = (0..5000).map(|i| (i as f64).sqrt()).collect();
        let mut y1 = vec![0.0; 5000];
        let mut y2 = vec![0.0; 5000];
        a.matvec_with(Exec::Sequential, &x, &mut y1);
        a.matvec_with(Exec::Parallel, &x, &mut y2);
        assert_eq!(y1, y2);
        assert_eq!(
            dot_with(Exec::Sequential, &x, &y1).to_bits(),
            dot_with(Exec::Parallel, &x, &y1).to_bits()
        );
    }
}
