//! Binary encoding of a real symmetric Hamiltonian matrix as a Pauli sum.
//!
//! Basis function `i` maps to the computational basis state `|bin(i)>`, so an
//! `N = 2^n` dimensional matrix becomes an `n`-qubit operator
//! `H = sum_P c_P P` with `c_P = Tr(P H) / 2^n`.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Matrix};
use crate::pauli::{pauli_matrix, PauliString, PauliSum, Phase};

/// Coefficients below this magnitude are dropped from an encoding.
pub const COEFF_THRESHOLD: f64 = 1e-12;

/// Diagonal offset (Ha) above the largest physical diagonal used for padding.
pub const PAD_OFFSET: f64 = 10.0;

/// Largest register for [`pauli_reconstruct`].
pub const MAX_RECONSTRUCT_QUBITS: usize = 8;

/// Real symmetric Hamiltonian matrix plus the metadata that travels with it.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    matrix: Matrix,
    /// Internuclear distance in bohr.
    pub r_bohr: f64,
    pub symmetry: String,
    pub basis: String,
    /// Leading levels that carry physics; trailing ones are padding.
    physical_dim: usize,
}

impl HamiltonianMatrix {
    /// Symmetrizes `m` as `(m + m^T) / 2`. Rejects non-square or non-finite input.
    pub fn new(m: Matrix, r_bohr: f64, symmetry: impl Into<String>, basis: impl Into<String>) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::Size(format!(
                "Hamiltonian must be square and nonempty, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.all_finite() {
            return Err(Error::Input("Hamiltonian has non-finite entries".into()));
        }
        let n = m.rows();
        let mut sym = m.clone();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                sym[(i, j)] = v;
                sym[(j, i)] = v;
            }
        }
        Ok(Self { matrix: sym, r_bohr, symmetry: symmetry.into(), basis: basis.into(), physical_dim: n })
    }

    /// Bare matrix with default metadata.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        Self::new(m, 0.0, "none", "none")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn physical_dim(&self) -> usize {
        self.physical_dim
    }

    /// Marks the trailing `dim - physical` levels as padding.
    pub fn with_physical_dim(mut self, physical: usize) -> Result<Self> {
        if physical == 0 || physical > self.dim() {
            return Err(Error::Argument(format!(
                "physical dimension {physical} outside 1..={}",
                self.dim()
            )));
        }
        self.physical_dim = physical;
        Ok(self)
    }

    /// `log2(dim)` when the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        let n = self.dim();
        n.is_power_of_two().then(|| n.trailing_zeros() as usize)
    }
}

/// Qubits needed to hold `dim` levels.
pub fn qubits_for(dim: usize) -> usize {
    dim.next_power_of_two().trailing_zeros() as usize
}

/// Embeds `h` in the next power-of-two dimension. Padding levels get the
/// diagonal value `max_i h_ii + 10` and no coupling.
pub fn pad_to_power_of_two(h: &HamiltonianMatrix) -> HamiltonianMatrix {
    pad_to_dimension(h, h.dim().next_power_of_two())
}

/// Embeds `h` in a `target`-dimensional matrix with the same padding rule as
/// [`pad_to_power_of_two`]. Returns `h` unchanged when `target <= dim`.
pub fn pad_to_dimension(h: &HamiltonianMatrix, target: usize) -> HamiltonianMatrix {
    let n = h.dim();
    if target <= n {
        return h.clone();
    }
    let pad = h.matrix.diagonal().into_iter().fold(f64::NEG_INFINITY, f64::max) + PAD_OFFSET;
    let mut m = Matrix::zeros(target, target);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = h.matrix[(i, j)];
        }
    }
    for i in n..target {
        m[(i, i)] = pad;
    }
    HamiltonianMatrix {
        matrix: m,
        r_bohr: h.r_bohr,
        symmetry: h.symmetry.clone(),
        basis: h.basis.clone(),
        physical_dim: h.physical_dim.min(n),
    }
}

/// Pauli decomposition `c_P = Tr(P H) / 2^n` over all `4^n` strings.
pub fn pauli_decompose(h: &HamiltonianMatrix) -> Result<PauliSum> {
    let n_qubits = h.n_qubits().ok_or_else(|| {
        Error::Precondition(format!(
            "dimension {} is not a power of two; pad the matrix first (pad_to_power_of_two)",
            h.dim()
        ))
    })?;
    let dim = h.dim();
    let n_qubits = n_qubits.max(1);
    // A 1x1 matrix is encoded on one qubit as c * I.
    let m = if dim == 1 {
        let mut m = Matrix::zeros(2, 2);
        m[(0, 0)] = h.get(0, 0);
        m[(1, 1)] = h.get(0, 0);
        m
    } else {
        h.matrix.clone()
    };
    let dim = m.rows();
    let scale = 1.0 / dim as f64;
    let mut terms = Vec::new();
    for x in 0..dim as u64 {
        for z in 0..dim as u64 {
            let p = PauliString::from_masks(n_qubits, x, z)?;
            // Tr(P H) = sum_j <j|P|j^x> H[j^x][j]
            let mut acc = 0.0;
            for j in 0..dim {
                let k = j ^ x as usize;
                let sign = if (k as u64 & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * m[(k, j)];
            }
            // Remaining factor i^{y}; odd y would give an imaginary coefficient,
            // which vanishes for a symmetric matrix.
            let c = match Phase::from_exponent(p.y_count() as i64) {
                Phase::One => acc * scale,
                Phase::MinusOne => -acc * scale,
                Phase::I | Phase::MinusI => {
                    if (acc * scale).abs() >= COEFF_THRESHOLD {
                        return Err(Error::Consistency(format!(
                            "imaginary coefficient {} on {p}",
                            acc * scale
                        )));
                    }
                    0.0
                }
            };
            if c.abs() >= COEFF_THRESHOLD {
                terms.push((c, p));
            }
        }
    }
    PauliSum::from_terms(n_qubits, terms)
}

/// Dense real matrix `sum_P c_P P`.
pub fn pauli_reconstruct(s: &PauliSum) -> Result<Matrix> {
    let n = s.n_qubits();
    if n > MAX_RECONSTRUCT_QUBITS {
        return Err(Error::Resource(format!(
            "reconstruction on {n} qubits exceeds the limit of {MAX_RECONSTRUCT_QUBITS}"
        )));
    }
    let dim = 1usize << n;
    let mut acc = ComplexMatrix::zeros(dim);
    for (c, p) in s.terms() {
        let pm = pauli_matrix(p)?;
        for i in 0..dim {
            for j in 0..dim {
                acc[(i, j)] += pm[(i, j)] * *c;
            }
        }
    }
    let (re, imag) = acc.split_real();
    if imag >= COEFF_THRESHOLD {
        return Err(Error::Consistency(format!(
            "reconstructed matrix has imaginary residue {imag:e}"
        )));
    }
    Ok(re)
}
