use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;

use tiar::wtiar::Solver;
use tiar_bench::{
    parse_complex, refine_study, run, timing_study, BenchError, GeometrySource, RunConfig,
};

#[derive(Parser)]
#[command(name = "tiar-bench", about = "Waveguide eigenvalue benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on one grid.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        nx: usize,
        #[arg(long, default_value_t = 11)]
        nz: usize,
    },
    /// Solve on successively refined grids and report convergence ratios.
    Refine {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        nx: usize,
        #[arg(long, default_value_t = 11)]
        nz: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Time the solver over several grid sizes.
    Timing {
        #[command(flatten)]
        common: Common,
        /// Comma-separated grids, each `NX` (meaning NX×(NX+1)) or `NXxNZ`.
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_size)]
        sizes: Vec<(usize, usize)>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, conflicts_with = "geometry", default_value = "benchmark")]
    preset: String,
    /// Geometry file in JSON.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Cayley shift γ₀ as `RE,IM`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    shift: C64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = Solver::Wtiar)]
    solver: Solver,
    /// Residual threshold for reported eigenvalues.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeded random start vector instead of normalized all-ones.
    #[arg(long)]
    seed: Option<u64>,
    /// Report every Ritz value regardless of residual or region.
    #[arg(long)]
    all_ritz: bool,
}

impl Common {
    fn config(self, n_x: usize, n_z: usize) -> RunConfig {
        RunConfig {
            geometry: match self.geometry {
                Some(path) => GeometrySource::File(path),
                None => GeometrySource::Preset(self.preset),
            },
            n_x,
            n_z,
            shift: self.shift,
            m: self.iters,
            solver: self.solver,
            tol: self.tol,
            out: self.out,
            seed: self.seed,
            all_ritz: self.all_ritz,
            ..RunConfig::default()
        }
    }
}

fn parse_size(text: &str) -> Result<(usize, usize), String> {
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("'{s}': {e}"));
    match text.split_once('x') {
        Some((nx, nz)) => Ok((parse(nx)?, parse(nz)?)),
        None => parse(text).map(|nx| (nx, nx + 1)),
    }
}

fn fmt_gamma(re: f64, im: f64) -> String {
    format!("{re:+.9} {im:+.9}i")
}

fn execute(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Solve { common, nx, nz } => {
            let report = run(&common.config(nx, nz))?;
            println!(
                "n = {}, {} iterations, shift {}",
                report.n,
                report.iterations,
                fmt_gamma(report.config.shift.re, report.config.shift.im)
            );
            if let Some(b) = report.breakdown {
                println!("breakdown: {b:?}");
            }
            for e in &report.eigenvalues {
                let res = e.residual.map_or("-".into(), |r| format!("{r:.2e}"));
                println!("{}  E = {res}", fmt_gamma(e.gamma_re, e.gamma_im));
            }
            println!(
                "iteration {:.3} s, total {:.3} s",
                report.timing.iteration_s, report.timing.total_s
            );
        }
        Command::Refine {
            common,
            nx,
            nz,
            levels,
        } => {
            let table = refine_study(&common.config(nx, nz), levels)?;
            for r in &table.rows {
                println!(
                    "track {} {:>4}x{:<4} {}",
                    r.track,
                    r.n_x,
                    r.n_z,
                    fmt_gamma(r.gamma_re, r.gamma_im)
                );
            }
            for r in &table.ratios {
                println!("track {} level {} ratio {:.3}", r.track, r.level, r.ratio);
            }
        }
        Command::Timing { common, sizes } => {
            let first = sizes[0];
            let study = timing_study(&common.config(first.0, first.1), &sizes)?;
            for r in &study.rows {
                println!(
                    "n = {:>7}  iteration {:>9.3} s  steps {:>9.3} s  basis {} complex",
                    r.n,
                    r.iteration_s,
                    r.step_s(),
                    r.basis_complex
                );
            }
            println!(
                "exponent: iteration {:.3}, steps {:.3}",
                study.iteration_exponent, study.step_exponent
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
