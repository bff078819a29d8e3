//! Exact diagonalization by cyclic Jacobi rotations.

use crate::encode::HamiltonianMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MAX_ED_DIM: usize = 256;
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Matrix,
}

impl EigenResult {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.eigenvectors.rows();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }
}

pub fn exact_diagonalize(h: &HamiltonianMatrix) -> Result<EigenResult> {
    symmetric_eigen(h.matrix())
}

/// Full spectrum of a real symmetric matrix.
pub fn symmetric_eigen(m: &Matrix) -> Result<EigenResult> {
    if !m.is_square() {
        return Err(Error::Size(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    let n = m.rows();
    if n > MAX_ED_DIM {
        return Err(Error::Resource(format!("dimension {n} above {MAX_ED_DIM}")));
    }
    if !m.all_finite() {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Precondition(format!("matrix asymmetry {asym:e} above {SYMMETRY_TOL:e}")));
    }
    let mut a = m.clone();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = Matrix::identity(n);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        // fix the sign so the largest component is positive
        let mut big = 0;
        for i in 0..n {
            if v[(i, src)].abs() > v[(big, src)].abs() {
                big = i;
            }
        }
        let sign = if v[(big, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sign * v[(i, src)];
        }
    }
    Ok(EigenResult { eigenvalues, eigenvectors: vectors })
}

/// Generalized eigenvalues of `(h, s)` for positive definite `s`, by Cholesky reduction.
pub fn generalized_eigenvalues(h: &Matrix, s: &Matrix) -> Result<Vec<f64>> {
    let n = s.rows();
    if h.rows() != n || !h.is_square() || !s.is_square() {
        return Err(Error::Size("h and S must be square with equal dimension".into()));
    }
    let l = cholesky(s)?;
    let linv = lower_inverse(&l);
    let mut c = linv.matmul(h).matmul(&linv.transpose());
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(symmetric_eigen(&c)?.eigenvalues)
}

/// Lower Cholesky factor; a non-positive pivot is a precondition error.
pub fn cholesky(s: &Matrix) -> Result<Matrix> {
    let n = s.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::Precondition(format!("matrix not positive definite at pivot {j}")));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Ok(l)
}

fn lower_inverse(l: &Matrix) -> Matrix {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut v = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                v -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = v / l[(i, i)];
        }
    }
    inv
}
