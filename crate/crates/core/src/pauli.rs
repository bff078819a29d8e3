//! Pauli strings in symplectic (X-mask, Z-mask) form, weighted Pauli sums and
//! the Lie closure of a set of strings.
//!
//! Qubit 1 is the most significant bit of a basis-state index and the leftmost
//! character of the text form, so `"ZI"` acts as `Z` on the high bit.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Largest register handled by the bitmask representation.
pub const MAX_QUBITS: usize = 32;

/// Largest register for which dense matrices are materialized.
pub const MAX_DENSE_QUBITS: usize = 10;

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A power of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    I,
    MinusOne,
    MinusI,
}

impl Phase {
    /// `i^k` for any integer `k`.
    pub fn from_exponent(k: i64) -> Phase {
        match k.rem_euclid(4) {
            0 => Phase::One,
            1 => Phase::I,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn exponent(self) -> u32 {
        match self {
            Phase::One => 0,
            Phase::I => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::One => Complex64::new(1.0, 0.0),
            Phase::I => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

/// Hermitian Pauli string `i^{|x&z|} X^x Z^z`.
///
/// Bit `b` of a mask refers to qubit `n - b` (qubit 1 is the top bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::from_masks(n_qubits, 0, 0)
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Argument(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let full = (1u64 << n_qubits) - 1;
        if x & !full != 0 || z & !full != 0 {
            return Err(Error::Argument("mask has bits beyond the register".into()));
        }
        Ok(Self { n_qubits, x, z })
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Result<Self> {
        let n = paulis.len();
        let mut x = 0u64;
        let mut z = 0u64;
        for (k, p) in paulis.iter().enumerate() {
            let (bx, bz) = p.bits();
            let bit = 1u64 << (n - 1 - k);
            if bx {
                x |= bit;
            }
            if bz {
                z |= bit;
            }
        }
        Self::from_masks(n, x, z)
    }

    /// String acting as `p` on the given 1-based qubits and identity elsewhere.
    pub fn with_factors(n_qubits: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut paulis = vec![Pauli::I; n_qubits];
        for &(q, p) in factors {
            if q == 0 || q > n_qubits {
                return Err(Error::Argument(format!("qubit {q} outside 1..={n_qubits}")));
            }
            paulis[q - 1] = p;
        }
        Self::from_paulis(&paulis)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of `Y` factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Factor on 1-based qubit `q`.
    pub fn factor(&self, q: usize) -> Pauli {
        let bit = 1u64 << (self.n_qubits - q);
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Action on a basis state: `P|j> = phase |j ^ x>`.
    #[inline]
    pub fn apply_to_basis(&self, j: usize) -> (Complex64, usize) {
        let k = self.y_count() as i64 + 2 * ((j as u64 & self.z).count_ones() as i64);
        (Phase::from_exponent(k).to_complex(), j ^ self.x as usize)
    }

    fn check_same_size(&self, other: &PauliString) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Size(format!(
                "Pauli strings on {} and {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 1..=self.n_qubits {
            write!(f, "{}", self.factor(q).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let paulis = s
            .trim()
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Argument(format!("invalid Pauli character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_paulis(&paulis)
    }
}

/// Product `p * q = phase * result`.
pub fn pauli_mul(p: &PauliString, q: &PauliString) -> Result<(Phase, PauliString)> {
    p.check_same_size(q)?;
    let x = p.x ^ q.x;
    let z = p.z ^ q.z;
    // i^{y(p)} X^xp Z^zp i^{y(q)} X^xq Z^zq = i^{y(p)+y(q)} (-1)^{|zp & xq|} X^x Z^z
    let k = p.y_count() as i64 + q.y_count() as i64 + 2 * (p.z & q.x).count_ones() as i64
        - (x & z).count_ones() as i64;
    Ok((Phase::from_exponent(k), PauliString { n_qubits: p.n_qubits, x, z }))
}

/// Dense `2^n x 2^n` matrix of a string.
pub fn pauli_matrix(p: &PauliString) -> Result<ComplexMatrix> {
    if p.n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::Resource(format!(
            "dense Pauli matrix on {} qubits exceeds the limit of {MAX_DENSE_QUBITS}",
            p.n_qubits
        )));
    }
    let dim = 1usize << p.n_qubits;
    let mut m = ComplexMatrix::zeros(dim);
    for j in 0..dim {
        let (phase, i) = p.apply_to_basis(j);
        m[(i, j)] = phase;
    }
    Ok(m)
}

/// Dimension of the real Lie algebra generated by `{iP}` under commutation.
///
/// Commutators of Pauli strings are again strings (or zero), so the closure is a
/// set of strings and its dimension is the number of distinct members.
pub fn lie_closure_dim(pool: &[PauliString]) -> Result<usize> {
    Ok(lie_closure(pool)?.len())
}

/// Pauli strings spanning the Lie algebra generated by `i P` for `P` in
/// `pool`, in breadth-first discovery order.
pub fn lie_closure(pool: &[PauliString]) -> Result<Vec<PauliString>> {
    let first = pool
        .first()
        .ok_or_else(|| Error::Argument("Lie closure of an empty pool".into()))?;
    for p in pool {
        first.check_same_size(p)?;
    }
    let mut seen: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut members: Vec<PauliString> = Vec::new();
    let mut queue: VecDeque<PauliString> = VecDeque::new();
    for p in pool {
        if seen.insert((p.x, p.z)) {
            queue.push_back(*p);
        }
    }
    while let Some(p) = queue.pop_front() {
        for m in &members {
            if !p.commutes_with(m) {
                let (_, prod) = pauli_mul(&p, m)?;
                if seen.insert((prod.x, prod.z)) {
                    queue.push_back(prod);
                }
            }
        }
        members.push(p);
    }
    Ok(members)
}

/// Real linear combination of Pauli strings with merged duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    /// Builds a sum, merging repeated strings. Term order follows first occurrence.
    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let mut index: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        let mut merged: Vec<(f64, PauliString)> = Vec::new();
        for (c, p) in terms {
            if p.n_qubits != n_qubits {
                return Err(Error::Size(format!(
                    "term {p} has {} qubits, sum has {n_qubits}",
                    p.n_qubits
                )));
            }
            match index.get(&(p.x, p.z)) {
                Some(&k) => merged[k].0 += c,
                None => {
                    index.insert((p.x, p.z), merged.len());
                    merged.push((c, p));
                }
            }
        }
        Ok(Self { n_qubits, terms: merged })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms
            .iter()
            .find(|(_, q)| q == p)
            .map_or(0.0, |(c, _)| *c)
    }

    /// Groups terms by X-mask into per-basis-state coefficient vectors so that
    /// applying the sum costs one pass per distinct X-mask.
    pub fn compile(&self) -> CompiledPauliSum {
        let dim = 1usize << self.n_qubits;
        let mut blocks: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
        for (c, p) in &self.terms {
            let block = blocks
                .entry(p.x)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
            for (j, slot) in block.iter_mut().enumerate() {
                let (phase, _) = p.apply_to_basis(j);
                *slot += phase * *c;
            }
        }
        CompiledPauliSum { n_qubits: self.n_qubits, blocks: blocks.into_iter().collect() }
    }
}

/// Pauli sum prepared for repeated application to state vectors.
#[derive(Debug, Clone)]
pub struct CompiledPauliSum {
    n_qubits: usize,
    blocks: Vec<(u64, Vec<Complex64>)>,
}

impl CompiledPauliSum {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `out = H * input`.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (x, coeffs) in &self.blocks {
            let x = *x as usize;
            for (j, (&a, &c)) in input.iter().zip(coeffs).enumerate() {
                out[j ^ x] += c * a;
            }
        }
    }

    /// Diagonal entries `<j|H|j>`.
    pub fn diagonal(&self) -> Vec<f64> {
        let dim = 1usize << self.n_qubits;
        match self.blocks.iter().find(|(x, _)| *x == 0) {
            Some((_, c)) => c.iter().map(|v| v.re).collect(),
            None => vec![0.0; dim],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn text_round_trip_and_bit_order() {
        let p = ps("XIZY");
        assert_eq!(p.to_string(), "XIZY");
        assert_eq!(p.factor(1), Pauli::X);
        assert_eq!(p.factor(4), Pauli::Y);
        // qubit 1 is the top bit
        assert_eq!(p.x_mask(), 0b1001);
        assert_eq!(p.z_mask(), 0b0011);
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(pauli_mul(&ps("X"), &ps("Y")).unwrap(), (Phase::I, ps("Z")));
        assert_eq!(pauli_mul(&ps("Y"), &ps("X")).unwrap(), (Phase::MinusI, ps("Z")));
        assert_eq!(pauli_mul(&ps("Z"), &ps("X")).unwrap(), (Phase::I, ps("Y")));
        for s in ["XZ", "YY", "IZ", "ZYXI"] {
            let (ph, r) = pauli_mul(&ps(s), &ps(s)).unwrap();
            assert_eq!(ph, Phase::One);
            assert!(r.is_identity());
        }
    }

    #[test]
    fn two_qubit_product_against_dense_matrices() {
        let (ph, r) = pauli_mul(&ps("XZ"), &ps("YY")).unwrap();
        assert_eq!((ph, r), (Phase::One, ps("ZX")));
        let lhs = pauli_matrix(&ps("XZ")).unwrap().matmul(&pauli_matrix(&ps("YY")).unwrap());
        let rhs = pauli_matrix(&r).unwrap().scale(ph.to_complex());
        assert_eq!(lhs.max_abs_diff(&rhs), 0.0);
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        assert!(matches!(pauli_mul(&ps("X"), &ps("XX")), Err(Error::Size(_))));
    }

    #[test]
    fn dense_matrices_follow_qubit_order() {
        let y = pauli_matrix(&ps("Y")).unwrap();
        assert_eq!(y[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], Complex64::new(0.0, 1.0));
        let zi = pauli_matrix(&ps("ZI")).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| zi[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        let xx = pauli_matrix(&ps("XX")).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx[(i, j)], Complex64::new(expect, 0.0));
            }
        }
        let big = PauliString::identity(11).unwrap();
        assert!(matches!(pauli_matrix(&big), Err(Error::Resource(_))));
    }

    #[test]
    fn closure_dimensions() {
        assert_eq!(lie_closure_dim(&[ps("Y")]).unwrap(), 1);
        assert_eq!(lie_closure_dim(&[ps("X"), ps("Y")]).unwrap(), 3);
        assert!(matches!(lie_closure_dim(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn closure_matches_dense_commutator_fixpoint() {
        // Oracle: grow a list of dense matrices by commutators and count the
        // rank of the span using Gram-Schmidt on vectorized matrices.
        let pool = [ps("YI"), ps("ZY")];
        let mut mats: Vec<ComplexMatrix> =
            pool.iter().map(|p| pauli_matrix(p).unwrap()).collect();
        let mut basis: Vec<Vec<Complex64>> = Vec::new();
        let flatten = |m: &ComplexMatrix| -> Vec<Complex64> {
            (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|ij| m[ij]).collect()
        };
        let try_add = |v: Vec<Complex64>, basis: &mut Vec<Vec<Complex64>>| -> bool {
            let mut v = v;
            for b in basis.iter() {
                let c: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
            let n: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if n > 1e-9 {
                basis.push(v.into_iter().map(|x| x / n).collect());
                true
            } else {
                false
            }
        };
        for m in &mats {
            try_add(flatten(m), &mut basis);
        }
        loop {
            let mut grew = false;
            let snapshot = mats.clone();
            for a in &snapshot {
                for b in &snapshot {
                    let c = a.matmul(b).add(&b.matmul(a).scale(Complex64::new(-1.0, 0.0)));
                    if try_add(flatten(&c), &mut basis) {
                        mats.push(c);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        assert_eq!(lie_closure_dim(&pool).unwrap(), basis.len());
        assert_eq!(basis.len(), 3);
    }

    #[test]
    fn commutation_rule_matches_matrices_for_all_pairs() {
        for n in 1..=3usize {
            let count = 1u64 << n;
            let all: Vec<PauliString> = (0..count)
                .flat_map(|x| (0..count).map(move |z| (x, z)))
                .map(|(x, z)| PauliString::from_masks(n, x, z).unwrap())
                .collect();
            for p in &all {
                let mp = pauli_matrix(p).unwrap();
                for q in &all {
                    let mq = pauli_matrix(q).unwrap();
                    let comm = mp.matmul(&mq).max_abs_diff(&mq.matmul(&mp));
                    assert_eq!(p.commutes_with(q), comm == 0.0, "{p} vs {q}");
                }
            }
        }
    }

    #[test]
    fn pauli_sum_merges_duplicates() {
        let s = PauliSum::from_terms(2, [(0.5, ps("XI")), (0.25, ps("ZZ")), (0.5, ps("XI"))]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.coefficient(&ps("XI")), 1.0);
        assert!(PauliSum::from_terms(2, [(1.0, ps("X"))]).is_err());
    }

    #[test]
    fn compiled_sum_matches_dense_application() {
        let s = PauliSum::from_terms(2, [(0.3, ps("XY")), (-1.1, ps("ZI")), (0.7, ps("YY"))]).unwrap();
        let compiled = s.compile();
        let mut dense = ComplexMatrix::zeros(4);
        for (c, p) in s.terms() {
            dense = dense.add(&pauli_matrix(p).unwrap().scale(Complex64::new(*c, 0.0)));
        }
        let v: Vec<Complex64> = (0..4).map(|k| Complex64::new(k as f64 + 0.5, 1.0 - k as f64)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); 4];
        compiled.apply_into(&v, &mut out);
        let expect = dense.matvec(&v);
        for (a, b) in out.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-14);
        }
        let d = compiled.diagonal();
        for (k, dk) in d.iter().enumerate() {
            assert!((dk - dense[(k, k)].re).abs() < 1e-15);
        }
    }
}
