//! Statevector simulation of products of Pauli rotations `exp(i theta P)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pauli::{CompiledPauliSum, PauliString, PauliSum};

/// Imaginary residue tolerated in quantities that must be real.
pub const REALITY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Normalized `n`-qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|bin(index)>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Argument(format!("basis index {index} outside 0..{dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes the given amplitudes. The length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::Size(format!("{} amplitudes is not 2^n", amps.len())));
        }
        let norm = amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Argument("cannot normalize a zero or non-finite vector".into()));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        Ok(Self { n_qubits, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Largest imaginary amplitude magnitude.
    pub fn max_imag(&self) -> f64 {
        self.amps.iter().fold(0.0, |m, a| m.max(a.im.abs()))
    }

    fn rotate(&mut self, p: &PauliString, theta: f64) {
        rotate_in_place(&mut self.amps, p, theta);
    }
}

/// `exp(i theta P)` applied in place: `cos(theta) psi + i sin(theta) P psi`.
fn rotate_in_place(amps: &mut [Complex64], p: &PauliString, theta: f64) {
    let (s, c) = theta.sin_cos();
    let is = Complex64::new(0.0, s);
    let x = p.x_mask() as usize;
    if x == 0 {
        for (j, a) in amps.iter_mut().enumerate() {
            let (phase, _) = p.apply_to_basis(j);
            *a *= c + is * phase;
        }
        return;
    }
    // Pairs (j, j^x) with the lower index leading.
    let lead = 1usize << (usize::BITS - 1 - x.leading_zeros());
    for j in 0..amps.len() {
        if j & lead != 0 {
            continue;
        }
        let k = j ^ x;
        let (pj, _) = p.apply_to_basis(j); // P|j> = pj |k>
        let (pk, _) = p.apply_to_basis(k); // P|k> = pk |j>
        let aj = amps[j];
        let ak = amps[k];
        amps[j] = c * aj + is * pk * ak;
        amps[k] = c * ak + is * pj * aj;
    }
}

/// `sum_j conj(a_j) (P b)_j`.
pub(crate) fn pauli_braket(a: &[Complex64], p: &PauliString, b: &[Complex64]) -> Complex64 {
    let mut acc = ZERO;
    for (j, &bj) in b.iter().enumerate() {
        let (phase, k) = p.apply_to_basis(j);
        acc += a[k].conj() * phase * bj;
    }
    acc
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Hermitian operator that can act on state vectors.
pub trait Observable: Sync {
    fn n_qubits(&self) -> usize;

    /// `out = H * input`; both slices have length `2^n`.
    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]);

    /// Diagonal entries `<j|H|j>`.
    fn diagonal(&self) -> Vec<f64>;

    fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; input.len()];
        self.apply_into(input, &mut out);
        out
    }
}

impl Observable for CompiledPauliSum {
    fn n_qubits(&self) -> usize {
        CompiledPauliSum::n_qubits(self)
    }

    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        CompiledPauliSum::apply_into(self, input, out);
    }

    fn diagonal(&self) -> Vec<f64> {
        CompiledPauliSum::diagonal(self)
    }
}

/// Dense real symmetric matrix acting on `n = log2(dim)` qubits.
#[derive(Debug, Clone)]
pub struct DenseObservable {
    n_qubits: usize,
    matrix: Matrix,
}

impl DenseObservable {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() || !matrix.rows().is_power_of_two() || matrix.rows() < 2 {
            return Err(Error::Size(format!(
                "dense observable needs a square 2^n matrix with n >= 1, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { n_qubits: matrix.rows().trailing_zeros() as usize, matrix })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

impl Observable for DenseObservable {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.matrix.row(i).iter().zip(input).map(|(&h, &v)| v * h).sum();
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal()
    }
}

/// A Pauli sum can be used directly; it is compiled on each call, so prefer
/// [`PauliSum::compile`] in loops.
impl Observable for PauliSum {
    fn n_qubits(&self) -> usize {
        PauliSum::n_qubits(self)
    }

    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        self.compile().apply_into(input, out);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.compile().diagonal()
    }
}

/// Deflation term `beta |phi><phi|`.
#[derive(Debug, Clone)]
pub struct Deflation {
    pub beta: f64,
    pub state: StateVector,
}

/// `H + sum_i beta_i |phi_i><phi_i|`, the effective operator of a deflated run.
pub struct Deflated<'a> {
    base: &'a dyn Observable,
    terms: &'a [Deflation],
}

impl<'a> Deflated<'a> {
    pub fn new(base: &'a dyn Observable, terms: &'a [Deflation]) -> Result<Self> {
        for t in terms {
            if t.state.n_qubits() != base.n_qubits() {
                return Err(Error::Size("deflation state size differs from the Hamiltonian".into()));
            }
        }
        Ok(Self { base, terms })
    }

    /// `sum_i beta_i |<phi_i|psi>|^2`.
    pub fn penalty(&self, psi: &StateVector) -> f64 {
        self.terms
            .iter()
            .map(|t| t.beta * inner(&t.state.amps, &psi.amps).norm_sqr())
            .sum()
    }
}

impl Observable for Deflated<'_> {
    fn n_qubits(&self) -> usize {
        self.base.n_qubits()
    }

    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        self.base.apply_into(input, out);
        for t in self.terms {
            let ov = inner(&t.state.amps, input) * t.beta;
            for (o, &phi) in out.iter_mut().zip(&t.state.amps) {
                *o += phi * ov;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = self.base.diagonal();
        for t in self.terms {
            for (dj, a) in d.iter_mut().zip(&t.state.amps) {
                *dj += t.beta * a.norm_sqr();
            }
        }
        d
    }
}

/// Product of Pauli rotations on a basis reference state:
/// `|psi> = exp(i theta_M P_M) ... exp(i theta_1 P_1) |bin(reference)>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    n_qubits: usize,
    reference_index: usize,
    ops: Vec<(PauliString, f64)>,
}

impl Ansatz {
    pub fn new(n_qubits: usize, reference_index: usize) -> Result<Self> {
        if reference_index >= 1usize << n_qubits {
            return Err(Error::Argument(format!(
                "reference index {reference_index} outside a {n_qubits}-qubit register"
            )));
        }
        Ok(Self { n_qubits, reference_index, ops: Vec::new() })
    }

    pub fn with_ops(n_qubits: usize, reference_index: usize, ops: Vec<(PauliString, f64)>) -> Result<Self> {
        let mut a = Self::new(n_qubits, reference_index)?;
        for (p, t) in ops {
            a.push(p, t)?;
        }
        Ok(a)
    }

    /// Appends an operator; it becomes the outermost factor.
    pub fn push(&mut self, p: PauliString, theta: f64) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::Size(format!(
                "operator {p} does not act on {} qubits",
                self.n_qubits
            )));
        }
        self.ops.push((p, theta));
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn ops(&self) -> &[(PauliString, f64)] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.ops.iter().map(|(_, t)| *t).collect()
    }

    pub fn set_thetas(&mut self, thetas: &[f64]) {
        assert_eq!(thetas.len(), self.ops.len(), "parameter count mismatch");
        for ((_, t), &v) in self.ops.iter_mut().zip(thetas) {
            *t = v;
        }
    }
}

pub fn prepare(a: &Ansatz) -> StateVector {
    let mut state = StateVector::basis(a.n_qubits, a.reference_index)
        .expect("reference index validated at construction");
    for (p, theta) in &a.ops {
        state.rotate(p, *theta);
    }
    state
}

pub fn apply_pauli_rotation(state: &StateVector, p: &PauliString, theta: f64) -> Result<StateVector> {
    if p.n_qubits() != state.n_qubits {
        return Err(Error::Size(format!(
            "operator {p} does not act on {} qubits",
            state.n_qubits
        )));
    }
    let mut out = state.clone();
    out.rotate(p, theta);
    Ok(out)
}

/// `<psi|H|psi>`, with the imaginary part checked against [`REALITY_TOL`].
pub fn expectation(state: &StateVector, h: &dyn Observable) -> Result<f64> {
    if h.n_qubits() != state.n_qubits {
        return Err(Error::Size(format!(
            "{}-qubit observable on a {}-qubit state",
            h.n_qubits(),
            state.n_qubits
        )));
    }
    let hpsi = h.apply(&state.amps);
    let e = inner(&state.amps, &hpsi);
    if e.im.abs() >= REALITY_TOL {
        return Err(Error::Consistency(format!("expectation has imaginary part {:e}", e.im)));
    }
    Ok(e.re)
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::Size("overlap of states with different qubit counts".into()));
    }
    Ok(inner(&a.amps, &b.amps))
}

/// Energy `<psi|H|psi> + sum_i beta_i |<phi_i|psi>|^2` and its gradient with
/// respect to every ansatz angle.
///
/// Reverse accumulation: keep `psi_k` and the adjoint `lambda_k = U_{k+1}^dag
/// ... U_M^dag H_eff psi`, then `dE/dtheta_k = 2 Re <lambda_k| i P_k |psi_k>
/// = -2 Im <lambda_k|P_k|psi_k>` while un-rotating both vectors from `k = M`
/// down to 1.
pub fn energy_and_gradient(a: &Ansatz, h: &dyn Observable, deflation: &[Deflation]) -> Result<(f64, Vec<f64>)> {
    if h.n_qubits() != a.n_qubits {
        return Err(Error::Size(format!(
            "{}-qubit observable with a {}-qubit ansatz",
            h.n_qubits(),
            a.n_qubits
        )));
    }
    let heff = Deflated::new(h, deflation)?;
    let psi = prepare(a);
    let lambda = heff.apply(&psi.amps);
    let e = inner(&psi.amps, &lambda);
    if e.im.abs() >= REALITY_TOL {
        return Err(Error::Consistency(format!("energy has imaginary part {:e}", e.im)));
    }
    let mut psi = psi.amps;
    let mut lambda = lambda;
    let mut grad = vec![0.0; a.ops.len()];
    for (k, (p, theta)) in a.ops.iter().enumerate().rev() {
        grad[k] = -2.0 * pauli_braket(&lambda, p, &psi).im;
        rotate_in_place(&mut psi, p, -theta);
        rotate_in_place(&mut lambda, p, -theta);
    }
    Ok((e.re, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use crate::pauli::pauli_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
        let amps = (0..1usize << n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn random_string(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
        let full = (1u64 << n) - 1;
        PauliString::from_masks(n, rng.gen::<u64>() & full, rng.gen::<u64>() & full).unwrap()
    }

    /// Taylor series of `exp(A)` for the oracle.
    fn expm(a: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::identity(a.dim());
        let mut term = ComplexMatrix::identity(a.dim());
        for k in 1..40 {
            term = term.matmul(a).scale(c(1.0 / k as f64, 0.0));
            out = out.add(&term);
        }
        out
    }

    #[test]
    fn prepare_trivial_cases() {
        let a = Ansatz::new(3, 0).unwrap();
        assert_eq!(prepare(&a), StateVector::basis(3, 0).unwrap());
        let a = Ansatz::with_ops(2, 2, vec![(ps("XY"), 0.0), (ps("YZ"), 0.0)]).unwrap();
        assert_eq!(prepare(&a), StateVector::basis(2, 2).unwrap());
        assert!(Ansatz::new(2, 4).is_err());
    }

    #[test]
    fn single_qubit_y_rotation() {
        let theta = 0.37;
        let psi = prepare(&Ansatz::with_ops(1, 0, vec![(ps("Y"), theta)]).unwrap());
        let amps = psi.amplitudes();
        assert!((amps[0] - c(theta.cos(), 0.0)).norm() < 1e-15);
        assert!((amps[1] - c(-theta.sin(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rotation_special_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(&mut rng, 3);
        let p = ps("XZY");
        assert_eq!(apply_pauli_rotation(&psi, &p, 0.0).unwrap(), psi);
        let rotated = apply_pauli_rotation(&psi, &p, std::f64::consts::FRAC_PI_2).unwrap();
        let ip = pauli_matrix(&p).unwrap().scale(c(0.0, 1.0)).matvec(psi.amplitudes());
        for (a, b) in rotated.amplitudes().iter().zip(&ip) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn rotation_matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=4 {
            for _ in 0..10 {
                let psi = random_state(&mut rng, n);
                let p = random_string(&mut rng, n);
                let u = expm(&pauli_matrix(&p).unwrap().scale(c(0.0, 0.3)));
                let expect = u.matvec(psi.amplitudes());
                let got = apply_pauli_rotation(&psi, &p, 0.3).unwrap();
                for (a, b) in got.amplitudes().iter().zip(&expect) {
                    assert!((a - b).norm() < 1e-12, "{p}");
                }
                assert!((got.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let z = PauliSum::from_terms(1, [(1.0, ps("Z"))]).unwrap();
        let zero = StateVector::basis(1, 0).unwrap();
        assert!((expectation(&zero, &z).unwrap() - 1.0).abs() < 1e-15);
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();
        assert!(expectation(&plus, &z).unwrap().abs() < 1e-15);
    }

    #[test]
    fn expectation_pauli_sum_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let terms: Vec<(f64, PauliString)> =
            (0..12).map(|_| (rng.gen_range(-1.0..1.0), random_string(&mut rng, n))).collect();
        let sum = PauliSum::from_terms(n, terms).unwrap();
        let mut dense = ComplexMatrix::zeros(8);
        for (k, p) in sum.terms() {
            dense = dense.add(&pauli_matrix(p).unwrap().scale(c(*k, 0.0)));
        }
        let psi = random_state(&mut rng, n);
        let hpsi = dense.matvec(psi.amplitudes());
        let oracle: Complex64 = psi.amplitudes().iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum();
        let e = expectation(&psi, &sum.compile()).unwrap();
        assert!((e - oracle.re).abs() < 1e-12);
    }

    #[test]
    fn overlap_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_state(&mut rng, 3);
        let b = random_state(&mut rng, 3);
        assert!((overlap(&a, &a).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        let z0 = StateVector::basis(1, 0).unwrap();
        let z1 = StateVector::basis(1, 1).unwrap();
        assert_eq!(overlap(&z0, &z1).unwrap(), c(0.0, 0.0));
        let mut oracle = c(0.0, 0.0);
        for k in 0..8 {
            oracle += a.amplitudes()[k].conj() * b.amplitudes()[k];
        }
        let got = overlap(&a, &b).unwrap();
        assert!((got - oracle).norm() < 1e-15);
        assert!(got.norm() <= 1.0);
    }

    #[test]
    fn gradient_of_empty_ansatz() {
        let h = DenseObservable::new(Matrix::from_diagonal(&[0.5, -0.25, 2.0, 1.0])).unwrap();
        let a = Ansatz::new(2, 1).unwrap();
        let (e, g) = energy_and_gradient(&a, &h, &[]).unwrap();
        assert_eq!(e, -0.25);
        assert!(g.is_empty());
    }

    #[test]
    fn gradient_single_qubit_closed_form() {
        let h = PauliSum::from_terms(1, [(1.0, ps("X"))]).unwrap().compile();
        for &theta in &[0.0, 0.3, 1.1] {
            let a = Ansatz::with_ops(1, 0, vec![(ps("Y"), theta)]).unwrap();
            let (e, g) = energy_and_gradient(&a, &h, &[]).unwrap();
            assert!((e + (2.0 * theta).sin()).abs() < 1e-15);
            assert!((g[0] + 2.0 * (2.0 * theta).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_with_deflation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 3;
        let mut m = Matrix::zeros(8, 8);
        for i in 0..8 {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let h = DenseObservable::new(m).unwrap();
        let defl = vec![
            Deflation { beta: 3.0, state: random_state(&mut rng, n) },
            Deflation { beta: 1.5, state: random_state(&mut rng, n) },
        ];
        let ops = (0..10).map(|_| (random_string(&mut rng, n), rng.gen_range(-3.0..3.0))).collect();
        let a = Ansatz::with_ops(n, 5, ops).unwrap();
        let (e, g) = energy_and_gradient(&a, &h, &defl).unwrap();
        let heff = Deflated::new(&h, &defl).unwrap();
        let psi = prepare(&a);
        let direct = expectation(&psi, &h).unwrap() + heff.penalty(&psi);
        assert!((e - direct).abs() < 1e-12);
        let step = 1e-5;
        for k in 0..a.len() {
            let mut th = a.thetas();
            th[k] += step;
            let mut ap = a.clone();
            ap.set_thetas(&th);
            th[k] -= 2.0 * step;
            let mut am = a.clone();
            am.set_thetas(&th);
            let fd = (energy_and_gradient(&ap, &h, &defl).unwrap().0
                - energy_and_gradient(&am, &h, &defl).unwrap().0)
                / (2.0 * step);
            assert!((fd - g[k]).abs() < 1e-7, "k={k} fd={fd} an={}", g[k]);
        }
    }

    #[test]
    fn odd_y_rotations_keep_real_states_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut state = StateVector::basis(4, 3).unwrap();
        for _ in 0..50 {
            let p = loop {
                let p = random_string(&mut rng, 4);
                if p.y_count() % 2 == 1 {
                    break p;
                }
            };
            state = apply_pauli_rotation(&state, &p, rng.gen_range(-3.0..3.0)).unwrap();
            assert!(state.max_imag() < 1e-12);
        }
        assert!((state.norm() - 1.0).abs() < 1e-12);
    }
}
