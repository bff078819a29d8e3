//! Batch drivers behind the command-line tool: Hamiltonian generation over an
//! R grid, ADAPT/VQD runs with ED comparison, and spectrum listings.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::adapt::{dense_observable, exact_diagonalize, vqd_run, AdaptConfig, AdaptResult};
use crate::ecbasis::{
    compute_integrals, gram_schmidt_orthonormalize, GeometryConfig, GridLevel, QuadratureGrid, Spin, DEFAULT_LEVEL,
};
use crate::encode::{pad_to_dimension, HamiltonianMatrix};
use crate::error::{Error, Result};
use crate::io::{read_hamx, read_kwb_lenient, write_hamx, HamxFile};
use crate::linalg::Matrix;
use crate::pauli::lie_closure_dim;
use crate::pool::{minimal_pool_with, transitivity_certificate, verify_pool, OperatorPool, PoolFamily, MAX_VERIFY_QUBITS};

/// Inclusive grid `start, start + step, ...` up to `stop` (bohr).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RGrid {
    pub fn single(r: f64) -> Self {
        Self { start: r, stop: r, step: 1.0 }
    }

    /// Grid points; an error when the grid is empty or malformed.
    pub fn points(&self) -> Result<Vec<f64>> {
        let RGrid { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || !(step > 0.0) {
            return Err(Error::Argument(format!("invalid R grid {self}")));
        }
        if stop < start {
            return Err(Error::Argument(format!("empty R grid {self}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let pts: Vec<f64> = (0..count).map(|k| start + k as f64 * step).collect();
        if let Some(r) = pts.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::Argument(format!("R grid point {r} is not positive")));
        }
        Ok(pts)
    }
}

impl fmt::Display for RGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// `R` or `start:stop:step`.
impl FromStr for RGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| -> Result<f64> {
            t.trim().parse().map_err(|_| Error::Argument(format!("bad R grid value '{t}'")))
        };
        match parts.as_slice() {
            [r] => Ok(RGrid::single(num(r)?)),
            [a, b, c] => Ok(RGrid { start: num(a)?, stop: num(b)?, step: num(c)? }),
            _ => Err(Error::Argument(format!("R grid '{s}' is neither R nor start:stop:step"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    /// KWB file for `hamgen`; HAMX files or directories of them for `run`.
    pub inputs: Vec<PathBuf>,
    pub r_grid: RGrid,
    pub states: usize,
    pub config: AdaptConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub grid_level: GridLevel,
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
}

impl RunManifest {
    pub fn new(inputs: Vec<PathBuf>, output_dir: PathBuf) -> Self {
        Self {
            inputs,
            r_grid: RGrid::single(1.4),
            states: 1,
            config: AdaptConfig::default(),
            output_dir,
            seed: crate::pool::DEFAULT_SEED,
            grid_level: DEFAULT_LEVEL,
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.states == 0 {
            return Err(Error::Argument("number of states must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Argument("--jobs must be at least 1".into()));
        }
        self.r_grid.points()?;
        self.config.validate()
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            b = b.num_threads(j);
        }
        let pool = b.build().map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// `1.4` -> `R1.4000`.
fn r_tag(r: f64) -> String {
    format!("R{r:.4}")
}

#[derive(Debug, Clone)]
pub struct HamgenOutcome {
    pub r_bohr: f64,
    pub path: Option<PathBuf>,
    pub kept: usize,
    pub dropped: Vec<usize>,
    pub error: Option<String>,
}

fn hamgen_one(
    bs: &crate::ecbasis::BasisSet,
    grid: &QuadratureGrid,
    r: f64,
    digest: &str,
    out_dir: &Path,
) -> Result<(PathBuf, usize, Vec<usize>)> {
    let geom = GeometryConfig::new(r)?;
    let ints = compute_integrals(bs, grid, geom)?;
    let h = ints.hamiltonian();
    let orth = gram_schmidt_orthonormalize(&h, &ints.overlap, r)?;
    let mut ham = orth.hamiltonian;
    ham.symmetry = match bs.terms()[0].spin {
        Spin::Singlet => "singlet_sigma".into(),
        Spin::Triplet => "triplet_sigma".into(),
    };
    let file = HamxFile {
        hamiltonian: ham,
        overlap: Some(ints.overlap),
        raw_hamiltonian: Some(h),
        kept: Some(orth.kept.clone()),
        grid: Some(grid.level()),
        basis_sha256: Some(digest.to_string()),
    };
    let path = out_dir.join(format!("h2_{}.hamx", r_tag(r)));
    write_hamx(&path, &file)?;
    Ok((path, orth.kept.len(), orth.dropped))
}

/// One HAMX file per grid point from the KWB basis in `inputs[0]`. A failure
/// at one R is logged and recorded; the other points proceed.
pub fn cmd_hamgen(m: &RunManifest) -> Result<Vec<HamgenOutcome>> {
    m.validate()?;
    let [basis_path] = m.inputs.as_slice() else {
        return Err(Error::Argument("hamgen takes exactly one basis file".into()));
    };
    let text = fs::read(basis_path)?;
    let (bs, repeats) = read_kwb_lenient(basis_path)?;
    for line in &repeats {
        log::warn!("{}:{line}: repeated basis term; orthonormalization will drop it", basis_path.display());
    }
    let digest = hex::encode(Sha256::digest(&text));
    let grid = QuadratureGrid::new(m.grid_level)?;
    let points = m.r_grid.points()?;
    fs::create_dir_all(&m.output_dir)?;
    let outcomes = m.install(|| {
        points
            .par_iter()
            .map(|&r| match hamgen_one(&bs, &grid, r, &digest, &m.output_dir) {
                Ok((path, kept, dropped)) => {
                    if !dropped.is_empty() {
                        log::warn!("R = {r}: dropped dependent basis functions {dropped:?}");
                    }
                    HamgenOutcome { r_bohr: r, path: Some(path), kept, dropped, error: None }
                }
                Err(e) => {
                    log::error!("R = {r}: {e}");
                    HamgenOutcome { r_bohr: r, path: None, kept: 0, dropped: vec![], error: Some(e.to_string()) }
                }
            })
            .collect()
    })?;
    Ok(outcomes)
}

/// Smallest qubit register (at least two qubits) holding `h`, padded per the
/// encoding rule.
pub fn qubit_register(h: &HamiltonianMatrix) -> HamiltonianMatrix {
    pad_to_dimension(h, h.dim().next_power_of_two().max(4))
}

/// HAMX paths from files and directories, sorted within each directory.
pub fn collect_hamx(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut v: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "hamx"))
                .collect();
            v.sort();
            out.extend(v);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::Argument("no HAMX inputs".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub r_bohr: f64,
    pub state_index: usize,
    pub energy: f64,
    pub ed_energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CurveRow {
    pub fn abs_err(&self) -> f64 {
        (self.energy - self.ed_energy).abs()
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<CurveRow>,
    pub curves: PathBuf,
    pub traces: Vec<PathBuf>,
}

impl RunSummary {
    pub fn unconverged(&self) -> usize {
        self.rows.iter().filter(|r| !r.converged).count()
    }
}

pub const CURVES_HEADER: [&str; 7] =
    ["R_bohr", "state_index", "energy_ha", "ed_energy_ha", "abs_err_ha", "iterations", "converged"];
pub const TRACE_HEADER: [&str; 5] = ["iter", "op_string", "grad_norm", "energy_ha", "err_vs_ed_ha"];

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Consistency(format!("csv: {other:?}")),
    }
}

/// Trace CSV text for one state; energies are physical, without penalties.
pub fn trace_csv(r: &AdaptResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for row in &r.trace {
        let op = row.operator.map_or_else(|| "ref".to_string(), |p| p.to_string());
        let err = row.error_vs_ed.map_or_else(String::new, num);
        w.write_record([row.iteration.to_string(), op, num(row.grad_norm), num(row.physical_energy), err])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn curves_csv(rows: &[CurveRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVES_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            num(r.r_bohr),
            r.state_index.to_string(),
            num(r.energy),
            num(r.ed_energy),
            num(r.abs_err()),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

struct Task {
    path: PathBuf,
    stem: String,
    file: HamxFile,
}

/// VQD for `states` states on every input HAMX file, compared with ED of the
/// physical block. Writes `curves.csv` and `<stem>_state<k>.csv` traces.
pub fn cmd_run(m: &RunManifest) -> Result<RunSummary> {
    m.validate()?;
    let mut tasks = Vec::new();
    for path in collect_hamx(&m.inputs)? {
        let file = read_hamx(&path)?;
        let phys = file.hamiltonian.physical_dim();
        if m.states > phys {
            return Err(Error::Argument(format!(
                "{} states requested but {} has {phys} physical levels",
                m.states,
                path.display()
            )));
        }
        let stem = path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned());
        if tasks.iter().any(|t: &Task| t.stem == stem) {
            return Err(Error::Argument(format!("two inputs share the name '{stem}'")));
        }
        tasks.push(Task { path, stem, file });
    }
    tasks.sort_by(|a, b| a.file.hamiltonian.r_bohr.total_cmp(&b.file.hamiltonian.r_bohr).then(a.stem.cmp(&b.stem)));

    // one certified pool per register size, built before the parallel phase
    let mut pools: BTreeMap<usize, OperatorPool> = BTreeMap::new();
    for t in &tasks {
        let n = qubit_register(&t.file.hamiltonian).n_qubits().unwrap_or(2);
        if !pools.contains_key(&n) {
            pools.insert(n, minimal_pool_with(n, crate::pool::DEFAULT_TRIALS, m.seed)?);
        }
    }

    fs::create_dir_all(&m.output_dir)?;
    let results: Vec<Result<(Vec<CurveRow>, Vec<(String, Vec<u8>)>)>> = m.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let h = &t.file.hamiltonian;
                let reg = qubit_register(h);
                let n = reg.n_qubits().unwrap_or(2);
                let phys = h.physical_dim();
                let block = HamiltonianMatrix::from_matrix(h.matrix().leading_block(phys))?;
                let ed = exact_diagonalize(&block)?.eigenvalues;
                let obs = dense_observable(&reg)?;
                let mut runs = vqd_run(&obs, &pools[&n], &m.config, m.states)?;
                let mut rows = Vec::new();
                let mut traces = Vec::new();
                for (k, run) in runs.iter_mut().enumerate() {
                    run.set_reference_energy(ed[k]);
                    rows.push(CurveRow {
                        r_bohr: h.r_bohr,
                        state_index: k,
                        energy: run.physical_energy,
                        ed_energy: ed[k],
                        iterations: run.iterations(),
                        converged: run.converged,
                    });
                    traces.push((format!("{}_state{k}.csv", t.stem), trace_csv(run)?));
                }
                log::info!("{}: {} states done", t.path.display(), runs.len());
                Ok((rows, traces))
            })
            .collect()
    })?;

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for r in results {
        let (rs, ts) = r?;
        rows.extend(rs);
        for (name, bytes) in ts {
            let p = m.output_dir.join(name);
            fs::write(&p, bytes)?;
            traces.push(p);
        }
    }
    let curves = m.output_dir.join("curves.csv");
    fs::write(&curves, curves_csv(&rows)?)?;
    Ok(RunSummary { rows, curves, traces })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub padding: bool,
}

/// Ascending spectrum of a HAMX file. When the padding block is decoupled,
/// physical and padding levels are diagonalized separately, so the tags are
/// exact; otherwise the highest `dim - phys` levels are tagged.
pub fn spectrum(h: &HamiltonianMatrix) -> Result<Vec<Level>> {
    let n = h.dim();
    let p = h.physical_dim();
    let m = h.matrix();
    let coupled = (p..n).any(|i| (0..p).any(|j| m[(i, j)] != 0.0));
    let mut levels: Vec<Level> = if p < n && !coupled {
        let phys = exact_diagonalize(&HamiltonianMatrix::from_matrix(m.leading_block(p))?)?.eigenvalues;
        let idx: Vec<usize> = (p..n).collect();
        let pad = exact_diagonalize(&HamiltonianMatrix::from_matrix(m.submatrix(&idx))?)?.eigenvalues;
        phys.into_iter()
            .map(|e| Level { energy: e, padding: false })
            .chain(pad.into_iter().map(|e| Level { energy: e, padding: true }))
            .collect()
    } else {
        exact_diagonalize(h)?
            .eigenvalues
            .into_iter()
            .enumerate()
            .map(|(k, e)| Level { energy: e, padding: k >= p })
            .collect()
    };
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.padding.cmp(&b.padding)));
    Ok(levels)
}

/// One line per level: 17 significant digits, padding levels tagged `pad`.
pub fn cmd_ed(path: &Path) -> Result<Vec<String>> {
    let f = read_hamx(path)?;
    Ok(spectrum(&f.hamiltonian)?
        .iter()
        .map(|l| {
            let v = format!("{:.16e}", l.energy);
            if l.padding { format!("{v}  pad") } else { v }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub family: PoolFamily,
    pub size: usize,
    pub closure_dim: usize,
    pub passed: bool,
    /// Only for optimization-based verification.
    pub worst_fidelity: Option<f64>,
}

/// Certification report for each catalog family, in catalog order, stopping
/// after the first family that passes.
pub fn cmd_pool_verify(n: usize, trials: usize, seed: u64) -> Result<Vec<FamilyReport>> {
    if n < 2 {
        return Err(Error::Argument(format!("pools need at least 2 qubits, got {n}")));
    }
    let mut out = Vec::new();
    for family in PoolFamily::CATALOG {
        let pool = OperatorPool::new(n, family.members(n)?)?;
        let report = if n <= MAX_VERIFY_QUBITS {
            let v = verify_pool(&pool, trials, seed)?;
            FamilyReport {
                family,
                size: pool.len(),
                closure_dim: v.closure_dim,
                passed: v.passed,
                worst_fidelity: Some(v.worst_fidelity()),
            }
        } else {
            FamilyReport {
                family,
                size: pool.len(),
                closure_dim: lie_closure_dim(pool.members())?,
                passed: transitivity_certificate(&pool)?,
                worst_fidelity: None,
            }
        };
        let passed = report.passed;
        out.push(report);
        if passed {
            break;
        }
    }
    Ok(out)
}

/// Seeded random real symmetric Hamiltonian with entries uniform in
/// `[-1, 1)`, or a diagonal one with sorted diagonal when `diagonal` is set.
pub fn random_hamiltonian(dim: usize, seed: u64, diagonal: bool) -> Result<HamiltonianMatrix> {
    if dim == 0 {
        return Err(Error::Argument("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Matrix::zeros(dim, dim);
    if diagonal {
        let mut d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        d.sort_by(f64::total_cmp);
        m = Matrix::from_diagonal(&d);
    } else {
        for i in 0..dim {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    HamiltonianMatrix::new(m, 0.0, "none", format!("random_seed{seed}"))
}
