//! `ecadapt` command-line driver.
//!
//! Exit codes: 0 on success (unconverged runs still produce data), 1 on an
//! internal or input error, 2 on a usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecadapt::adapt::AdaptConfig;
use ecadapt::ecbasis::{GridLevel, DEFAULT_LEVEL};
use ecadapt::io::{write_hamx, HamxFile};
use ecadapt::pipeline::{cmd_ed, cmd_hamgen, cmd_pool_verify, cmd_run, random_hamiltonian, RGrid, RunManifest};
use ecadapt::pool::{DEFAULT_SEED, DEFAULT_TRIALS};
use ecadapt::Error;

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

#[derive(Parser)]
#[command(name = "ecadapt", version, about = "Qubit-ADAPT / VQD for explicitly correlated H2 Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build orthonormalized Hamiltonians from a KWB basis over an R grid.
    Hamgen {
        #[arg(long)]
        basis: PathBuf,
        /// Bond length(s) in bohr: `R` or `start:stop:step`.
        #[arg(long = "r", default_value = "1.4")]
        r_grid: RGrid,
        /// Quadrature level `n_xi,n_eta,n_phi`.
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        grid: GridLevel,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// ADAPT/VQD on HAMX files or directories of them.
    Run(RunArgs),
    /// Print the exact spectrum of a HAMX file.
    Ed { path: PathBuf },
    #[command(subcommand)]
    Pool(PoolCommand),
    /// Write a seeded random symmetric Hamiltonian as HAMX.
    Randham {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        diagonal: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    states: usize,
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e-7)]
    bfgs_tol: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    /// Exit with status 1 if any state is unconverged.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PoolCommand {
    /// Certify the catalog families for a register size.
    Verify {
        #[arg(long)]
        qubits: usize,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Argument(_) => USAGE,
                _ => FAILURE,
            })
        }
    }
}

fn execute(command: Command) -> ecadapt::Result<u8> {
    match command {
        Command::Hamgen { basis, r_grid, grid, out, jobs } => {
            let mut m = RunManifest::new(vec![basis], out);
            m.r_grid = r_grid;
            m.grid_level = grid;
            m.jobs = jobs;
            let outcomes = cmd_hamgen(&m)?;
            let mut failed = false;
            for o in &outcomes {
                match (&o.path, &o.error) {
                    (Some(p), _) => println!("R={:.4} kept={} -> {}", o.r_bohr, o.kept, p.display()),
                    (None, e) => {
                        failed = true;
                        println!("R={:.4} failed: {}", o.r_bohr, e.as_deref().unwrap_or("unknown"));
                    }
                }
            }
            Ok(if failed { FAILURE } else { 0 })
        }
        Command::Run(a) => {
            let mut m = RunManifest::new(a.inputs, a.out);
            m.states = a.states;
            m.config = AdaptConfig {
                grad_threshold: a.grad_tol,
                bfgs_tol: a.bfgs_tol,
                max_iterations: a.max_iters,
                ..AdaptConfig::default()
            };
            m.seed = a.seed;
            m.jobs = a.jobs;
            let summary = cmd_run(&m)?;
            for r in &summary.rows {
                println!(
                    "R={:.4} state={} E={:.12} ED={:.12} err={:.3e} iters={} converged={}",
                    r.r_bohr,
                    r.state_index,
                    r.energy,
                    r.ed_energy,
                    r.abs_err(),
                    r.iterations,
                    r.converged
                );
            }
            println!("wrote {}", summary.curves.display());
            let unconverged = summary.unconverged();
            if unconverged > 0 {
                log::warn!("{unconverged} state(s) unconverged");
            }
            Ok(if a.strict && unconverged > 0 { FAILURE } else { 0 })
        }
        Command::Ed { path } => {
            for line in cmd_ed(&path)? {
                println!("{line}");
            }
            Ok(0)
        }
        Command::Pool(PoolCommand::Verify { qubits, trials, seed }) => {
            let reports = cmd_pool_verify(qubits, trials, seed)?;
            for r in &reports {
                let fid = r.worst_fidelity.map_or_else(|| "transitivity".to_string(), |f| format!("worst fidelity {f:.9}"));
                println!(
                    "family '{}' size {} closure dim {} {}: {}",
                    r.family,
                    r.size,
                    r.closure_dim,
                    fid,
                    if r.passed { "PASS" } else { "FAIL" }
                );
            }
            match reports.last() {
                Some(r) if r.passed => {
                    println!("chosen: '{}' ({} members)", r.family, r.size);
                    Ok(0)
                }
                _ => {
                    println!("no catalog family passed");
                    Ok(FAILURE)
                }
            }
        }
        Command::Randham { dim, seed, diagonal, out } => {
            let h = random_hamiltonian(dim, seed, diagonal)?;
            write_hamx(&out, &HamxFile::new(h))?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}
