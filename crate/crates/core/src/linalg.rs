//! Sparse assembly, factorization and eigen-solvers used by the solver.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

use crate::error::{Error, Result};

/// Triplet accumulator for a square sparse matrix.
#[derive(Debug, Clone)]
pub struct Triplets {
    n: usize,
    coo: CooMatrix<f64>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            coo: CooMatrix::new(n, n),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.coo.push(i, j, v);
        }
    }

    /// Add `v` to (i,i), (j,j) and `-v` to (i,j), (j,i).
    pub fn add_edge(&mut self, i: usize, j: usize, v: f64) {
        self.add(i, i, v);
        self.add(j, j, v);
        self.add(i, j, -v);
        self.add(j, i, -v);
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn to_csr(&self) -> CsrMatrix<f64> {
        CsrMatrix::from(&self.coo)
    }
}

pub fn matvec(a: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for (i, row) in a.row_iter().enumerate() {
        let mut s = 0.0;
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            s += v * x[j];
        }
        y[i] = s;
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest |a_ij − a_ji| relative to the largest entry.
pub fn asymmetry(a: &CsrMatrix<f64>) -> f64 {
    let t = a.transpose();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, row) in a.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            scale = scale.max(v.abs());
            let w = t.get_entry(i, j).map(|e| e.into_value()).unwrap_or(0.0);
            worst = worst.max((v - w).abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Conjugate gradients with a Jacobi preconditioner.
pub fn pcg(a: &CsrMatrix<f64>, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<usize> {
    let n = b.len();
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            a.get_entry(i, i)
                .map(|e| e.into_value())
                .filter(|d| *d > 0.0)
                .unwrap_or(1.0)
        })
        .collect();
    let ax = matvec(a, x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let bnorm = dot(b, b).sqrt().max(1e-300);
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        if dot(&r, &r).sqrt() <= rel_tol * bnorm {
            return Ok(it);
        }
        let ap = matvec(a, &p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical("CG hit a non-positive direction".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if dot(&r, &r).sqrt() <= rel_tol * bnorm {
        Ok(max_iter)
    } else {
        Err(Error::Numerical(format!("CG did not reach {rel_tol:e} in {max_iter} iterations")))
    }
}

/// Reverse Cuthill–McKee ordering of the sparsity graph of `a`.
pub fn rcm_ordering(a: &CsrMatrix<f64>) -> Vec<usize> {
    let n = a.nrows();
    let deg: Vec<usize> = (0..n).map(|i| a.row(i).nnz()).collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&i| deg[i]);
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = a
                .row(v)
                .col_indices()
                .iter()
                .copied()
                .filter(|&u| !seen[u])
                .collect();
            nb.sort_by_key(|&u| deg[u]);
            for u in nb {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Sparse Cholesky factor of a symmetric positive definite matrix, with an
/// RCM permutation to limit fill.
pub struct Cholesky {
    perm: Vec<usize>,
    factor: CscCholesky<f64>,
}

impl Cholesky {
    pub fn new(a: &CsrMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let perm = rcm_ordering(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut coo = CooMatrix::new(n, n);
        for (i, row) in a.row_iter().enumerate() {
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                coo.push(inv[i], inv[j], v);
            }
        }
        let csc = CscMatrix::from(&coo);
        let factor = CscCholesky::factor(&csc)
            .map_err(|e| Error::Numerical(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(Self { perm, factor })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let pb = DVector::from_iterator(n, self.perm.iter().map(|&o| b[o]));
        let y = self.factor.solve(&pb);
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[(new, 0)];
        }
        x
    }
}

/// Smallest eigenpair of K x = λ M x with K symmetric and M diagonal positive.
///
/// K + τM is factored with τ increased until it is positive definite; Lanczos
/// with full reorthogonalization then finds the top of M^{1/2}(K+τM)^{-1}M^{1/2}.
pub fn smallest_generalized_eigen(
    k: &CsrMatrix<f64>,
    m: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = m.len();
    if n == 0 {
        return Err(Error::Numerical("empty eigenproblem".into()));
    }
    if m.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Numerical("mass matrix must be positive".into()));
    }
    let mut tau = 0.0;
    let scale = {
        let mut s: f64 = 0.0;
        for i in 0..n {
            s = s.max(k.get_entry(i, i).map(|e| e.into_value()).unwrap_or(0.0).abs() / m[i]);
        }
        s.max(1.0)
    };
    let chol = loop {
        let mut shifted = Triplets::new(n);
        for (i, row) in k.row_iter().enumerate() {
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                shifted.add(i, j, v);
            }
            shifted.add(i, i, tau * m[i]);
        }
        match Cholesky::new(&shifted.to_csr()) {
            Ok(c) => break c,
            Err(_) => {
                tau = if tau == 0.0 { 1e-3 * scale } else { tau * 4.0 };
                if tau > 1e6 * scale {
                    return Err(Error::Numerical("could not find a positive definite shift".into()));
                }
            }
        }
    };
    let msq: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    let op = |y: &[f64]| -> Vec<f64> {
        let rhs: Vec<f64> = y.iter().zip(&msq).map(|(a, b)| a * b).collect();
        let x = chol.solve(&rhs);
        x.iter().zip(&msq).map(|(a, b)| a * b).collect()
    };
    let (mu, y) = lanczos_largest(op, n, max_iter.min(n), tol)?;
    let lambda = 1.0 / mu - tau;
    let x: Vec<f64> = y.iter().zip(&msq).map(|(a, b)| a / b).collect();
    Ok((lambda, x))
}

/// Largest eigenpair of a symmetric positive semidefinite operator.
pub fn lanczos_largest(
    op: impl Fn(&[f64]) -> Vec<f64>,
    n: usize,
    max_iter: usize,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    // deterministic start with all modes present
    let mut q0: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i as f64) * 0.7548776662).fract()).collect();
    let nrm = dot(&q0, &q0).sqrt();
    q0.iter_mut().for_each(|v| *v /= nrm);
    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev_theta = f64::NAN;
    for j in 0..max_iter.max(1) {
        let mut w = op(&basis[j]);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        for q in &basis {
            let c = dot(&w, q);
            w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
        }
        for q in &basis {
            let c = dot(&w, q);
            w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
        }
        let b = dot(&w, &w).sqrt();
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let resid = b * eig.eigenvectors[(m - 1, imax)].abs();
        let done = resid <= tol * theta.abs().max(1e-300)
            || (theta - prev_theta).abs() <= 1e-2 * tol * theta.abs()
            || b < 1e-14 * theta.abs().max(1e-300)
            || j + 1 == max_iter.max(1)
            || m == n;
        prev_theta = theta;
        if done {
            let mut y = vec![0.0; n];
            for (i, q) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(i, imax)];
                y.iter_mut().zip(q).for_each(|(yi, qi)| *yi += c * qi);
            }
            return Ok((theta, y));
        }
        beta.push(b);
        basis.push(w.into_iter().map(|v| v / b).collect());
    }
    unreachable!()
}

/// Dense generalized eigen-decomposition; returns eigenvalues in ascending
/// order with M-orthonormal eigenvectors as columns.
pub fn dense_generalized_eigen(k: &DMatrix<f64>, m: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.len();
    let isq: Vec<f64> = m.iter().map(|v| 1.0 / v.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * isq[i] * isq[j]);
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])] * isq[r]);
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix<f64> {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.add(i, i, 2.0);
            if i + 1 < n {
                t.add(i, i + 1, -1.0);
                t.add(i + 1, i, -1.0);
            }
        }
        t.to_csr()
    }

    #[test]
    fn cg_and_cholesky_agree() {
        let a = path_laplacian(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 50];
        pcg(&a, &b, &mut x, 1e-12, 500).unwrap();
        let y = Cholesky::new(&a).unwrap().solve(&b);
        for i in 0..50 {
            assert!((x[i] - y[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn smallest_eigenvalue_of_path() {
        let n = 40;
        let a = path_laplacian(n);
        let m = vec![1.0; n];
        let (l, _) = smallest_generalized_eigen(&a, &m, 200, 1e-12).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((l - exact).abs() < 1e-10 * exact.max(1.0), "{l} vs {exact}");
    }

    #[test]
    fn indefinite_shift() {
        let n = 30;
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.add(i, i, 2.0 - 3.0);
            if i + 1 < n {
                t.add(i, i + 1, -1.0);
                t.add(i + 1, i, -1.0);
            }
        }
        let (l, _) = smallest_generalized_eigen(&t.to_csr(), &vec![1.0; n], 200, 1e-12).unwrap();
        let exact = -1.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((l - exact).abs() < 1e-8, "{l} vs {exact}");
    }
}
