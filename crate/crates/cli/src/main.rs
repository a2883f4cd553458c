use clap::{Args, Parser, Subcommand};
use holed_potential::harness::{
    run_identity_suite, run_solve, run_sweep, run_verify_relation, write_csv, Config, ConfigError, HarnessError, Report,
};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Potential-theory experiments on disks and disks with circular holes.
#[derive(Parser)]
#[command(name = "holed-potential", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the Dirichlet/Neumann gradient relation formulas against finite differences.
    VerifyRelation(Common),
    /// Kernel and Green's-function identities and the trace inequality.
    Identities(Common),
    /// Regularity scaling sweep; writes CSV.
    Sweep(Common),
    /// Solve the configured instance and report probe values.
    Solve(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; the built-in default is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (report text, or CSV for `sweep` and `solve`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the primary tolerance of the subcommand.
    #[arg(long)]
    tol: Option<f64>,
}

fn load(c: &Common) -> Result<Config, HarnessError> {
    let mut cfg = match &c.config {
        Some(p) => Config::from_path(p)?,
        None => Config::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<(), HarnessError>) -> Result<(), HarnessError> {
    let out = |e: std::io::Error| HarnessError::Output(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(out)?);
    f(&mut w)?;
    w.flush().map_err(out)
}

fn report(r: &Report, out: Option<&Path>) -> Result<i32, HarnessError> {
    print!("{r}");
    if let Some(p) = out {
        write_file(p, |w| w.write_all(r.to_string().as_bytes()).map_err(|e| HarnessError::Output(e.to_string())))?;
    }
    Ok(r.exit_code())
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.cmd {
        Cmd::VerifyRelation(c) => {
            let mut cfg = load(&c)?;
            if let Some(t) = c.tol {
                cfg.relation.tol = t;
                cfg.relation.rotation_tol = cfg.relation.rotation_tol.min(t);
            }
            report(&run_verify_relation(&cfg)?, c.out.as_deref())
        }
        Cmd::Identities(c) => {
            let mut cfg = load(&c)?;
            if let Some(t) = c.tol {
                let id = &mut cfg.identities;
                id.poisson_tol = t;
                id.reflection_tol = t;
                id.boundary_tol = t;
            }
            report(&run_identity_suite(&cfg)?, c.out.as_deref())
        }
        Cmd::Sweep(c) => {
            let mut cfg = load(&c)?;
            if let Some(t) = c.tol {
                cfg.solver.residual_tol = t;
            }
            let res = run_sweep(&cfg);
            print!("{}", res.summary());
            match &c.out {
                Some(p) => write_file(p, |w| write_csv(&res, w))?,
                None => write_csv(&res, std::io::stdout().lock())?,
            }
            Ok(res.exit_code())
        }
        Cmd::Solve(c) => {
            let mut cfg = load(&c)?;
            if let Some(t) = c.tol {
                cfg.solver.residual_tol = t;
            }
            let res = run_solve(&cfg)?;
            print!("{}", res.summary());
            if let Some(p) = &c.out {
                write_file(p, |w| res.write_csv(w))?;
            }
            Ok(res.exit_code())
        }
    }
}

fn init_threads() -> Result<(), HarnessError> {
    let Ok(v) = std::env::var("POTENTIAL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| HarnessError::Config(ConfigError::Invalid(format!("POTENTIAL_THREADS={v} is not a count"))))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| HarnessError::Solver(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = init_threads().and_then(|_| run(cli)).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
