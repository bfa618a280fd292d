//! Sparse matrices and Krylov solvers (CG, BiCGStab) with Jacobi
//! preconditioning.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col, val }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[k] == i {
                    d[i] += self.val[k];
                }
            }
        }
        d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .filter(|&k| self.col[k] == j)
            .map(|k| self.val[k])
            .sum()
    }

    /// Dense row-major copy, for tests and small oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i * self.n + self.col[k]] += self.val[k];
            }
        }
        d
    }

    /// True when off-diagonals are ≤ 0 and every column is weakly
    /// diagonally dominant with a positive diagonal.
    pub fn is_m_matrix(&self) -> bool {
        let mut colsum = vec![0.0; self.n];
        let mut diag = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k];
                if i == j {
                    diag[j] += self.val[k];
                } else {
                    if self.val[k] > 0.0 {
                        return false;
                    }
                    colsum[j] += self.val[k].abs();
                }
            }
        }
        diag.iter()
            .zip(&colsum)
            .all(|(d, s)| *d > 0.0 && *d >= *s * (1.0 - 1e-14))
    }
}

/// Iteration controls. `max_iter = None` means 10·√n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub rel_tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            rel_tol: 1e-10,
            max_iter: None,
        }
    }
}

impl SolverSettings {
    pub fn iterations(&self, n: usize) -> usize {
        self.max_iter
            .unwrap_or_else(|| (libm::ceil(10.0 * sqrt(n as f64)) as usize).max(10))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

fn jacobi(a: &CsrMatrix) -> Result<Vec<f64>> {
    let d = a.diagonal();
    if d.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return Err(Error::Singular("zero diagonal entry"));
    }
    Ok(d.iter().map(|x| 1.0 / x).collect())
}

/// Preconditioned conjugate gradients for symmetric positive definite `a`.
pub fn cg(a: &CsrMatrix, b: &[f64], x: &mut [f64], settings: &SolverSettings) -> Result<SolveStats> {
    let n = a.n;
    let minv = jacobi(a)?;
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, rel_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = settings.iterations(n);
    let mut res = norm(&r) / bn;
    if res <= settings.rel_tol {
        return Ok(SolveStats { iterations: 0, rel_residual: res });
    }
    for it in 1..=max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Singular("CG found a non-positive curvature direction"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / bn;
        if res <= settings.rel_tol {
            return Ok(SolveStats { iterations: it, rel_residual: res });
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        solver: "CG",
        iterations: max_iter,
        residual: res,
    })
}

/// Right-preconditioned BiCGStab for general nonsingular `a`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], settings: &SolverSettings) -> Result<SolveStats> {
    let n = a.n;
    let minv = jacobi(a)?;
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, rel_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = norm(&r) / bn;
    if res <= settings.rel_tol {
        return Ok(SolveStats { iterations: 0, rel_residual: res });
    }
    let r0 = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut s = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let max_iter = settings.iterations(n);
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * minv[i];
        }
        a.mul(&y, &mut v);
        let r0v = dot(&r0, &v);
        if r0v == 0.0 {
            break;
        }
        alpha = rho / r0v;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bn <= settings.rel_tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(SolveStats { iterations: it, rel_residual: norm(&s) / bn });
        }
        for i in 0..n {
            zs[i] = s[i] * minv[i];
        }
        a.mul(&zs, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / bn;
        if res <= settings.rel_tol {
            return Ok(SolveStats { iterations: it, rel_residual: res });
        }
        if omega == 0.0 {
            break;
        }
    }
    // true residual for the report
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    res = norm(&r) / bn;
    Err(Error::SolverDiverged {
        solver: "BiCGStab",
        iterations: max_iter,
        residual: res,
    })
}
