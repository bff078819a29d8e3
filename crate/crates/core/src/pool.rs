//! Operator pools: construction from a small catalog, certification, and the
//! gradient-based selection rule.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adapt::{grow_ansatz, AdaptConfig, GrowthOptions};
use crate::error::{Error, Result};
use crate::pauli::{lie_closure, lie_closure_dim, Pauli, PauliString, PauliSum};
use crate::sim::{pauli_braket, Deflation, Observable, StateVector};

/// Target fidelity for pool verification.
pub const FIDELITY_TARGET: f64 = 1.0 - 1e-6;
/// Largest qubit count verified by optimization.
pub const MAX_VERIFY_QUBITS: usize = 4;
/// Largest qubit count accepted by the algebraic transitivity check.
pub const MAX_CERTIFY_QUBITS: usize = 7;
/// Random restarts after the zero-initialized attempt.
pub const RESTARTS: usize = 3;
pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_SEED: u64 = 0x00ad_a9f7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolFamily {
    /// `{Y_k, k < n} + {Z_k Y_(k+1)}`.
    SingleYAndZY,
    /// `{Y_k Z_(k+1)} + {Y_k, k > 1}`.
    YZAndSingleY,
    /// Every weight-1 or weight-2 string with exactly one Y and otherwise Z.
    Overcomplete,
    Custom,
}

impl PoolFamily {
    pub const CATALOG: [PoolFamily; 3] =
        [PoolFamily::SingleYAndZY, PoolFamily::YZAndSingleY, PoolFamily::Overcomplete];

    pub fn members(self, n: usize) -> Result<Vec<PauliString>> {
        let s = |f: &[(usize, Pauli)]| PauliString::with_factors(n, f);
        let mut out = Vec::new();
        match self {
            PoolFamily::SingleYAndZY => {
                for k in 1..n {
                    out.push(s(&[(k, Pauli::Y)])?);
                }
                for k in 1..n {
                    out.push(s(&[(k, Pauli::Z), (k + 1, Pauli::Y)])?);
                }
            }
            PoolFamily::YZAndSingleY => {
                for k in 1..n {
                    out.push(s(&[(k, Pauli::Y), (k + 1, Pauli::Z)])?);
                }
                for k in 2..=n {
                    out.push(s(&[(k, Pauli::Y)])?);
                }
            }
            PoolFamily::Overcomplete => {
                for k in 1..=n {
                    out.push(s(&[(k, Pauli::Y)])?);
                }
                for k in 1..=n {
                    for j in (1..=n).filter(|&j| j != k) {
                        out.push(s(&[(j, Pauli::Z), (k, Pauli::Y)])?);
                    }
                }
            }
            PoolFamily::Custom => {
                return Err(Error::Argument("custom pools have no catalog members".into()));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for PoolFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolFamily::SingleYAndZY => "Y_k + Z_k Y_k+1",
            PoolFamily::YZAndSingleY => "Y_k Z_k+1 + Y_k",
            PoolFamily::Overcomplete => "overcomplete single-Y",
            PoolFamily::Custom => "custom",
        })
    }
}

/// How a pool was certified to reach every real state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certification {
    /// Greedy fidelity maximization reached every random target.
    Optimization,
    /// The generated group acts transitively on the real unit sphere.
    Transitivity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPool {
    n_qubits: usize,
    members: Vec<PauliString>,
    family: PoolFamily,
    certification: Option<Certification>,
}

impl OperatorPool {
    /// Unverified pool; members must be distinct, act on `n` qubits and
    /// carry an odd number of Y factors.
    pub fn new(n_qubits: usize, members: Vec<PauliString>) -> Result<Self> {
        Self::with_family(n_qubits, members, PoolFamily::Custom)
    }

    fn with_family(n_qubits: usize, members: Vec<PauliString>, family: PoolFamily) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Argument("empty operator pool".into()));
        }
        for (i, p) in members.iter().enumerate() {
            if p.n_qubits() != n_qubits {
                return Err(Error::Size(format!("pool member {p} does not act on {n_qubits} qubits")));
            }
            if p.y_count() % 2 == 0 {
                return Err(Error::Argument(format!("pool member {p} has an even number of Y factors")));
            }
            if members[..i].contains(p) {
                return Err(Error::Argument(format!("duplicate pool member {p}")));
            }
        }
        Ok(Self { n_qubits, members, family, certification: None })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn members(&self) -> &[PauliString] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn family(&self) -> PoolFamily {
        self.family
    }

    pub fn is_verified(&self) -> bool {
        self.certification.is_some()
    }

    pub fn certification(&self) -> Option<Certification> {
        self.certification
    }

    /// Certifies the pool with [`verify_pool`] for `n <= 4`, otherwise with
    /// [`transitivity_certificate`]. Fails with a construction error.
    pub fn certify(mut self, trials: usize, seed: u64) -> Result<Self> {
        let how = if self.n_qubits <= MAX_VERIFY_QUBITS {
            verify_pool(&self, trials, seed)?.passed.then_some(Certification::Optimization)
        } else {
            transitivity_certificate(&self)?.then_some(Certification::Transitivity)
        };
        match how {
            Some(c) => {
                self.certification = Some(c);
                Ok(self)
            }
            None => Err(Error::Construction(format!(
                "{} pool on {} qubits failed certification",
                self.family, self.n_qubits
            ))),
        }
    }
}

/// First catalog family that passes certification on `n` qubits.
pub fn minimal_pool(n: usize) -> Result<OperatorPool> {
    minimal_pool_with(n, DEFAULT_TRIALS, DEFAULT_SEED)
}

pub fn minimal_pool_with(n: usize, trials: usize, seed: u64) -> Result<OperatorPool> {
    if n < 2 {
        return Err(Error::Argument(format!("minimal pools need at least 2 qubits, got {n}")));
    }
    for family in PoolFamily::CATALOG {
        let pool = OperatorPool::with_family(n, family.members(n)?, family)?;
        match pool.certify(trials, seed) {
            Ok(p) => return Ok(p),
            Err(Error::Construction(msg)) => log::info!("{msg}"),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Construction(format!("no catalog pool family certifies on {n} qubits")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolVerification {
    pub passed: bool,
    /// Best fidelity reached per target.
    pub fidelities: Vec<f64>,
    /// Dimension of the Lie closure of the pool, a diagnostic.
    pub closure_dim: usize,
}

impl PoolVerification {
    pub fn worst_fidelity(&self) -> f64 {
        self.fidelities.iter().copied().fold(1.0, f64::min)
    }
}

fn random_real_target(rng: &mut ChaCha8Rng, dim: usize) -> Result<StateVector> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    StateVector::from_real(&v)
}

/// Operational reachability test for `n <= 4`: for each seeded random real
/// target, grow an ansatz greedily against `-|t><t|` for up to `4 * 2^n`
/// rounds and check the fidelity.
pub fn verify_pool(pool: &OperatorPool, trials: usize, seed: u64) -> Result<PoolVerification> {
    let n = pool.n_qubits;
    if n > MAX_VERIFY_QUBITS {
        return Err(Error::Precondition(format!(
            "pool verification by optimization supports at most {MAX_VERIFY_QUBITS} qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = PauliSum::new(n).compile();
    let mut fidelities = Vec::with_capacity(trials);
    let cfg = AdaptConfig { bfgs_tol: 1e-9, ..AdaptConfig::default() };
    for _ in 0..trials {
        let target = random_real_target(&mut rng, dim)?;
        let amps = target.amplitudes();
        let reference = (0..dim)
            .max_by(|&a, &b| amps[a].norm().total_cmp(&amps[b].norm()).then(b.cmp(&a)))
            .unwrap_or(0);
        let deflation = [Deflation { beta: -1.0, state: target.clone() }];
        let mut best = 0.0f64;
        for attempt in 0..=RESTARTS {
            let opts = GrowthOptions {
                rounds: 4 * dim,
                stop_energy: Some(-FIDELITY_TARGET),
                fallback: Vec::new(),
                init_seed: (attempt > 0).then(|| rng.gen()),
            };
            let run = grow_ansatz(&zero, pool.members(), &cfg, &deflation, reference, &opts)?;
            best = best.max(-run.energy);
            if best >= FIDELITY_TARGET {
                break;
            }
        }
        fidelities.push(best);
    }
    let closure_dim = lie_closure_dim(pool.members())?;
    let passed = fidelities.iter().all(|&f| f >= FIDELITY_TARGET);
    Ok(PoolVerification { passed, fidelities, closure_dim })
}

const PRIME: u64 = 2_147_483_647;

fn rank_mod_p(mut rows: Vec<Vec<u64>>, cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = pow_mod(rows[rank][c], PRIME - 2);
        for v in rows[rank].iter_mut() {
            *v = *v * inv % PRIME;
        }
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[c] == 0 {
                continue;
            }
            let f = row[c];
            for (x, &y) in row.iter_mut().zip(&pivot) {
                *x = (*x + PRIME - f * y % PRIME) % PRIME;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    b %= PRIME;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

/// Exact check that the group generated by `exp(i theta P_k)` acts
/// transitively on the real unit sphere: the tangent vectors `iP v` for `P`
/// in the Lie closure span the full complement of a fixed integer vector `v`
/// (rank computed modulo a prime, a lower bound on the rational rank).
pub fn transitivity_certificate(pool: &OperatorPool) -> Result<bool> {
    let n = pool.n_qubits;
    if n > MAX_CERTIFY_QUBITS {
        return Err(Error::Resource(format!("transitivity check supports at most {MAX_CERTIFY_QUBITS} qubits")));
    }
    let dim = 1usize << n;
    let closure = lie_closure(pool.members())?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let v: Vec<u64> = (0..dim).map(|_| rng.gen_range(1..1_000_000)).collect();
    let rows: Vec<Vec<u64>> = closure
        .iter()
        .map(|p| {
            let mut row = vec![0u64; dim];
            for (j, &vj) in v.iter().enumerate() {
                // i P |j> = i * phase |k>, real for odd Y-count
                let (phase, k) = p.apply_to_basis(j);
                let s = Complex64::new(0.0, 1.0) * phase;
                row[k] = if s.re > 0.0 { vj } else { PRIME - vj };
            }
            row
        })
        .collect();
    Ok(rank_mod_p(rows, dim) == dim - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// `None` when the gradient norm is below the threshold.
    pub index: Option<usize>,
    pub grads: Vec<f64>,
    pub norm: f64,
}

/// `i <psi|[H, P_k]|psi> = -2 Im <H psi|P_k psi>` for every member.
pub fn pool_gradients(state: &StateVector, h_eff: &dyn Observable, members: &[PauliString]) -> Result<Vec<f64>> {
    if h_eff.n_qubits() != state.n_qubits() {
        return Err(Error::Size("observable and state differ in qubit count".into()));
    }
    if let Some(p) = members.iter().find(|p| p.n_qubits() != state.n_qubits()) {
        return Err(Error::Size(format!("pool member {p} does not match the state")));
    }
    let psi = state.amplitudes();
    let hpsi = h_eff.apply(psi);
    Ok(members.par_iter().map(|p| -2.0 * pauli_braket(&hpsi, p, psi).im).collect())
}

pub(crate) fn select_from(
    state: &StateVector,
    h_eff: &dyn Observable,
    members: &[PauliString],
    threshold: f64,
) -> Result<Selection> {
    let grads = pool_gradients(state, h_eff, members)?;
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    let mut index = None;
    if norm >= threshold {
        let mut best = 0;
        for (k, g) in grads.iter().enumerate() {
            if g.abs() > grads[best].abs() {
                best = k;
            }
        }
        index = Some(best);
    }
    Ok(Selection { index, grads, norm })
}

/// Largest-magnitude pool gradient; ties go to the lowest index.
pub fn select_operator(state: &StateVector, h_eff: &dyn Observable, pool: &OperatorPool, threshold: f64) -> Result<Selection> {
    if !pool.is_verified() {
        return Err(Error::Precondition("operator pool is not verified".into()));
    }
    select_from(state, h_eff, pool.members(), threshold)
}
