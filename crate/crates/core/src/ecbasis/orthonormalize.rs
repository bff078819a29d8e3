//! Modified Gram-Schmidt in the overlap metric.

use crate::encode::HamiltonianMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relative residual norm below which a basis vector counts as dependent.
pub const DROP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Orthonormalized {
    /// `X^T h X`.
    pub hamiltonian: HamiltonianMatrix,
    /// Columns are the kept S-orthonormal vectors in the original basis.
    pub transform: Matrix,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

fn s_inner(s: &Matrix, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        let row = s.row(i);
        let mut r = 0.0;
        for j in 0..n {
            r += row[j] * b[j];
        }
        acc += a[i] * r;
    }
    acc
}

pub fn gram_schmidt_orthonormalize(h: &Matrix, s: &Matrix, r_bohr: f64) -> Result<Orthonormalized> {
    let n = s.rows();
    if !s.is_square() || !h.is_square() || h.rows() != n {
        return Err(Error::Size(format!(
            "h is {}x{}, S is {}x{}",
            h.rows(),
            h.cols(),
            s.rows(),
            s.cols()
        )));
    }
    if !s.all_finite() || !h.all_finite() {
        return Err(Error::Input("non-finite matrix entries".into()));
    }
    let scale = s.max_abs().max(f64::MIN_POSITIVE);
    if s.asymmetry() > 1e-12 * scale || h.asymmetry() > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::Input("h and S must be symmetric".into()));
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for k in 0..n {
        let n0 = s[(k, k)];
        if !(n0 > 0.0) {
            return Err(Error::Input(format!("overlap diagonal {k} is {n0}, S not positive semidefinite")));
        }
        let n0 = n0.sqrt();
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for _pass in 0..2 {
            for q in &basis {
                let c = s_inner(s, q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let nn = s_inner(s, &v, &v);
        if nn < -(DROP_TOL * n0).powi(2) {
            return Err(Error::Input(format!("negative residual norm {nn:e} for vector {k}, S not positive semidefinite")));
        }
        let norm = nn.max(0.0).sqrt();
        if norm < DROP_TOL * n0 {
            dropped.push(k);
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
        kept.push(k);
    }
    let m = basis.len();
    let mut x = Matrix::zeros(n, m);
    for (c, v) in basis.iter().enumerate() {
        for i in 0..n {
            x[(i, c)] = v[i];
        }
    }
    let hx = h.matmul(&x);
    let ht = x.transpose().matmul(&hx);
    let hamiltonian = HamiltonianMatrix::new(ht, r_bohr, "sigma_g+", "kw-orthonormal")?;
    Ok(Orthonormalized { hamiltonian, transform: x, kept, dropped })
}
