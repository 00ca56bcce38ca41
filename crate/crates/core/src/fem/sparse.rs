//! Row-compressed sparse matrices, Dirichlet elimination and the linear
//! solvers (Jacobi-preconditioned conjugate gradients plus a dense LU
//! fallback).

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form with a fixed pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given (sorted, deduplicated) column pattern per row.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix { n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    pub fn identity(n: usize) -> Self {
        let rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut m = Self::from_pattern(&rows);
        m.values.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<usize>> =
            a.iter().map(|r| (0..r.len()).filter(|&j| r[j] != 0.0).collect()).collect();
        let mut m = Self::from_pattern(&rows);
        for (i, r) in a.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    m.add(i, j, v);
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].binary_search(&j).ok().map(|p| s + p)
    }

    /// Adds `v` to entry `(i, j)`, which must be part of the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside the sparsity pattern"));
        self.values[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn add_to_diagonal(&mut self, d: &[f64]) {
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                self.add(i, i, v);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s * other` for matrices with identical patterns.
    pub fn axpy(&mut self, s: f64, other: &CsrMatrix) {
        assert_eq!(self.col_idx, other.col_idx, "patterns differ");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                rows[j].push(i);
            }
        }
        let mut t = CsrMatrix::from_pattern(&rows);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.add(j, i, v);
            }
        }
        t
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        a
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Matrix, right-hand side and the nodes fixed by Dirichlet conditions.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    constrained: Vec<Option<f64>>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != matrix.dim() {
            return Err(Error::Mismatch(format!(
                "rhs of length {} for matrix of dimension {}",
                rhs.len(),
                matrix.dim()
            )));
        }
        let n = rhs.len();
        Ok(SparseSystem { matrix, rhs, constrained: vec![None; n] })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn constrained(&self) -> &[Option<f64>] {
        &self.constrained
    }
}

/// Imposes `x[node] = value` by row and column elimination. Constrained rows
/// become identity rows; the eliminated columns move to the right-hand side so
/// a symmetric matrix stays symmetric.
pub fn apply_dirichlet(mut system: SparseSystem, nodes: &[usize], values: &[f64]) -> Result<SparseSystem> {
    if nodes.len() != values.len() {
        return Err(Error::Mismatch(format!("{} nodes but {} values", nodes.len(), values.len())));
    }
    if nodes.is_empty() {
        return Ok(system);
    }
    let n = system.dim();
    let mut fresh = vec![None; n];
    for (&node, &value) in nodes.iter().zip(values) {
        if node >= n {
            return Err(Error::InvalidParameter(format!("Dirichlet node {node} out of range {n}")));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("Dirichlet value at node {node}")));
        }
        for slot in [&system.constrained[node], &fresh[node]] {
            if let Some(prev) = *slot {
                if prev != value {
                    return Err(Error::ConflictingDirichlet { node, first: prev, second: value });
                }
            }
        }
        fresh[node] = Some(value);
    }

    let m = &mut system.matrix;
    for i in 0..n {
        let (s, e) = (m.row_ptr[i], m.row_ptr[i + 1]);
        if let Some(g) = fresh[i] {
            for p in s..e {
                m.values[p] = if m.col_idx[p] == i { 1.0 } else { 0.0 };
            }
            if m.position(i, i).is_none() {
                panic!("row {i} has no diagonal entry in the pattern");
            }
            system.rhs[i] = g;
        } else if system.constrained[i].is_none() {
            for p in s..e {
                if let Some(g) = fresh[m.col_idx[p]] {
                    system.rhs[i] -= m.values[p] * g;
                    m.values[p] = 0.0;
                }
            }
        }
    }
    for (slot, f) in system.constrained.iter_mut().zip(fresh) {
        if f.is_some() {
            *slot = f;
        }
    }
    Ok(system)
}

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD matrices, stopping at
/// `||Ax - b|| <= tol * ||b||` or after `max_iter` iterations.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.dim();
    let bnorm = norm2(b);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = a.mul(&x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm2(&r) / bnorm;
    let mut it = 0;
    while res > tol {
        if it >= max_iter {
            return Err(Error::LinearSolver { iterations: it, residual: res });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolver { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm2(&r) / bnorm;
        it += 1;
        // refresh the recursive residual now and then
        if it % 200 == 0 {
            a.matvec(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            res = norm2(&r) / bnorm;
        }
    }
    Ok((x, SolveStats { iterations: it, relative_residual: res }))
}

/// Solves a system with conjugate gradients (iteration cap `10 N`).
pub fn solve_sparse(system: &SparseSystem, tol: f64) -> Result<Vec<f64>> {
    let n = system.dim();
    // constrained rows are decoupled identity rows: starting from their values
    // keeps them exact throughout the iteration
    let x0: Vec<f64> = system.constrained.iter().map(|c| c.unwrap_or(0.0)).collect();
    let (mut x, _) = conjugate_gradient(&system.matrix, &system.rhs, Some(&x0), tol, (10 * n).max(100))?;
    for (xi, c) in x.iter_mut().zip(&system.constrained) {
        if let Some(v) = c {
            *xi = *v;
        }
    }
    Ok(x)
}

/// Largest system handed to the dense fallback when conjugate gradients fail.
const DENSE_FALLBACK_MAX: usize = 2500;

/// Imposes Dirichlet values and solves, falling back to dense LU for small
/// systems on which conjugate gradients stall (for instance non-symmetric
/// coefficient data).
pub fn solve_dirichlet(matrix: CsrMatrix, rhs: Vec<f64>, nodes: &[usize], values: &[f64], tol: f64) -> Result<Vec<f64>> {
    let system = apply_dirichlet(SparseSystem::new(matrix, rhs)?, nodes, values)?;
    match solve_sparse(&system, tol) {
        Ok(x) => Ok(x),
        Err(e @ Error::LinearSolver { .. }) => {
            if system.dim() <= DENSE_FALLBACK_MAX {
                let mut x = solve_dense(&system.matrix, &system.rhs)?;
                for (xi, c) in x.iter_mut().zip(&system.constrained) {
                    if let Some(v) = c {
                        *xi = *v;
                    }
                }
                Ok(x)
            } else {
                Err(e)
            }
        }
        Err(e) => Err(e),
    }
}

/// Dense LU with partial pivoting. Intended for small systems and tests.
pub fn solve_dense(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut m = a.to_dense();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if m[piv][k].abs() < 1e-300 {
            return Err(Error::LinearSolver { iterations: k, residual: f64::INFINITY });
        }
        m.swap(k, piv);
        x.swap(k, piv);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    Ok(x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 2.0 } else if i.abs_diff(j) == 1 { -1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        CsrMatrix::from_dense(&a)
    }

    #[test]
    fn identity_solve() {
        let sys = SparseSystem::new(CsrMatrix::identity(4), vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(solve_sparse(&sys, 1e-12).unwrap(), vec![1.0, -2.0, 3.0, 0.5]);
    }

    #[test]
    fn diagonal_spd() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 3.0]]);
        let sys = SparseSystem::new(a.clone(), vec![2.0, 3.0]).unwrap();
        let x = solve_sparse(&sys, 1e-14).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert_eq!(solve_dense(&a, &[2.0, 3.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn cg_matches_dense() {
        let a = laplace_1d(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let x = solve_sparse(&SparseSystem::new(a.clone(), b.clone()).unwrap(), 1e-13).unwrap();
        let y = solve_dense(&a, &b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_reports_non_convergence() {
        let a = laplace_1d(50);
        let b = vec![1.0; 50];
        assert!(matches!(
            conjugate_gradient(&a, &b, None, 1e-14, 3),
            Err(Error::LinearSolver { iterations: 3, .. })
        ));
    }

    #[test]
    fn dirichlet_elimination_keeps_symmetry() {
        let a = laplace_1d(6);
        let sys = SparseSystem::new(a, vec![1.0; 6]).unwrap();
        let sys = apply_dirichlet(sys, &[0, 3], &[2.0, -1.0]).unwrap();
        assert_eq!(sys.matrix.max_asymmetry(), 0.0);
        let x = solve_sparse(&sys, 1e-14).unwrap();
        assert_eq!(x[0], 2.0);
        assert_eq!(x[3], -1.0);
        // reference: solve the reduced problem densely
        let full = laplace_1d(6);
        let r = full.mul(&x);
        for i in [1, 2, 4, 5] {
            assert!((r[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_edge_cases() {
        let sys = SparseSystem::new(laplace_1d(4), vec![1.0; 4]).unwrap();
        let same = apply_dirichlet(sys.clone(), &[], &[]).unwrap();
        assert_eq!(same.matrix, sys.matrix);
        assert_eq!(same.rhs, sys.rhs);

        let all = apply_dirichlet(sys.clone(), &[0, 1, 2, 3], &[0.0; 4]).unwrap();
        assert_eq!(solve_sparse(&all, 1e-12).unwrap(), vec![0.0; 4]);

        let err = apply_dirichlet(sys.clone(), &[1, 1], &[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::ConflictingDirichlet { node: 1, .. }));
        let twice = apply_dirichlet(sys.clone(), &[1], &[0.5]).unwrap();
        assert!(apply_dirichlet(twice.clone(), &[1], &[0.5]).is_ok());
        assert!(apply_dirichlet(twice, &[1], &[0.25]).is_err());
        assert!(apply_dirichlet(sys, &[9], &[0.0]).is_err());
    }
}
