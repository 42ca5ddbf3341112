//! Experiment harness for the waveguide solvers: single runs, refinement
//! tables and timing studies, written as CSV and JSON.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use tiar::arnoldi::{sort_ritz, ArnoldiOptions, Breakdown, PhaseTimes, RitzValue};
use tiar::waveguide::{DiscretizationGrid, WaveguideGeometry, WaveguideProblem};
use tiar::wtiar::{solve_waveguide, CayleyNep, Omega, RunOptions, Solver};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(tiar::Error),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            Self::Io { .. } => 1,
        }
    }

    fn setup(e: tiar::Error) -> Self {
        use tiar::Error as E;
        match e {
            E::Geometry(_) | E::Grid(_) | E::InvalidShift(_) | E::InvalidInput(_) => {
                Self::Config(e.to_string())
            }
            other => Self::Solver(other),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometrySource {
    Preset(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub geometry: GeometrySource,
    pub n_x: usize,
    pub n_z: usize,
    #[serde(serialize_with = "complex")]
    pub shift: C64,
    pub m: usize,
    pub solver: Solver,
    /// Residual threshold for reported eigenvalues.
    pub tol: f64,
    pub out: Option<PathBuf>,
    /// Seeded random start vector instead of the normalized all-ones vector.
    pub seed: Option<u64>,
    /// Report every Ritz value, whatever its residual or location.
    pub all_ritz: bool,
    pub omega: Omega,
    /// Record Ritz values and residuals at every iteration.
    pub history: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometrySource::Preset("benchmark".into()),
            n_x: 10,
            n_z: 11,
            shift: C64::new(-3.0, -std::f64::consts::PI),
            m: 100,
            solver: Solver::Wtiar,
            tol: 1e-8,
            out: None,
            seed: None,
            all_ritz: false,
            omega: Omega::default(),
            history: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_z.is_multiple_of(2) || self.n_z < 3 {
            return Err(BenchError::Config(format!(
                "n_z = {} must be odd and at least 3",
                self.n_z
            )));
        }
        if self.n_x < 2 {
            return Err(BenchError::Config(format!(
                "n_x = {} must be at least 2",
                self.n_x
            )));
        }
        if self.m == 0 {
            return Err(BenchError::Config(
                "the number of iterations must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(BenchError::Config(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if !(self.shift.re.is_finite() && self.shift.im.is_finite()) {
            return Err(BenchError::Config("shift must be finite".into()));
        }
        Ok(())
    }

    pub fn load_geometry(&self) -> Result<WaveguideGeometry> {
        match &self.geometry {
            GeometrySource::Preset(name) => WaveguideGeometry::preset(name),
            GeometrySource::File(path) => WaveguideGeometry::load(path),
        }
        .map_err(BenchError::setup)
    }

    pub fn grid(&self, geometry: &WaveguideGeometry) -> Result<DiscretizationGrid> {
        DiscretizationGrid::for_geometry(geometry, self.n_x, self.n_z).map_err(BenchError::setup)
    }
}

/// Parses `RE,IM`.
pub fn parse_complex(text: &str) -> std::result::Result<C64, String> {
    let (re, im) = text
        .split_once(',')
        .ok_or_else(|| format!("expected RE,IM but got '{text}'"))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("'{s}': {e}"));
    Ok(C64::new(parse(re)?, parse(im)?))
}

/// Normalized all-ones vector, or a seeded random unit vector.
pub fn start_vector(n: usize, seed: Option<u64>) -> DVector<C64> {
    let v = match seed {
        None => DVector::from_element(n, C64::new(1.0, 0.0)),
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            DVector::from_fn(n, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        }
    };
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenRow {
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub index: usize,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingReport {
    pub setup_s: f64,
    pub y_block_s: f64,
    pub y1_solve_s: f64,
    pub orthogonalization_s: f64,
    pub hessenberg_eig_s: f64,
    /// Iteration wall time: the four phases above.
    pub iteration_s: f64,
    pub total_s: f64,
}

impl TimingReport {
    fn new(setup: Duration, t: &PhaseTimes, total: Duration) -> Self {
        Self {
            setup_s: setup.as_secs_f64(),
            y_block_s: t.y_block.as_secs_f64(),
            y1_solve_s: t.y1_solve.as_secs_f64(),
            orthogonalization_s: t.orthogonalization.as_secs_f64(),
            hessenberg_eig_s: t.hessenberg_eig.as_secs_f64(),
            iteration_s: t.total().as_secs_f64(),
            total_s: total.as_secs_f64(),
        }
    }
}

/// Krylov basis storage in complex numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StorageReport {
    pub n: usize,
    pub k: usize,
    pub basis_complex: usize,
    pub basis_bytes: usize,
    /// `k·n + k³`, the tensor representation.
    pub tensor_complex: usize,
    /// `n·k(k+1)/2`, the block-triangular representation of IAR.
    pub triangular_complex: usize,
}

impl StorageReport {
    fn new(n: usize, k: usize, basis_complex: usize) -> Self {
        Self {
            n,
            k,
            basis_complex,
            basis_bytes: basis_complex * std::mem::size_of::<C64>(),
            tensor_complex: k * n + k * k * k,
            triangular_complex: n * k * (k + 1) / 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub config: RunConfig,
    pub n: usize,
    pub iterations: usize,
    pub breakdown: Option<Breakdown>,
    pub eigenvalues: Vec<EigenRow>,
    pub history: Vec<HistoryRow>,
    pub timing: TimingReport,
    pub storage: StorageReport,
    /// Ritz values of the last iteration, unfiltered.
    #[serde(skip)]
    pub ritz: Vec<RitzValue>,
}

impl BenchReport {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .map(|e| C64::new(e.gamma_re, e.gamma_im))
            .collect()
    }
}

/// Builds the problem, runs the configured solver and, if `out` is set,
/// writes `eigenvalues.csv`, `history.csv` and `timing.json`.
pub fn run(config: &RunConfig) -> Result<BenchReport> {
    config.validate()?;
    let start = Instant::now();
    let geometry = config.load_geometry()?;
    let grid = config.grid(&geometry)?;
    let problem = WaveguideProblem::new(&geometry, &grid).map_err(BenchError::setup)?;
    let n = problem.dim();
    let nep = CayleyNep::new(problem, config.shift, config.m).map_err(BenchError::setup)?;
    let setup = start.elapsed();

    let x1 = start_vector(n, config.seed);
    let opts = RunOptions {
        arnoldi: ArnoldiOptions::default(),
        history: config.history,
        residual_region: if config.all_ritz {
            None
        } else {
            Some(config.omega)
        },
    };
    let result =
        solve_waveguide(&nep, config.solver, &x1, config.m, &opts).map_err(BenchError::Solver)?;
    let total = start.elapsed();

    let mut ritz = result.report.values.clone();
    sort_ritz(&mut ritz);
    let eigenvalues = ritz
        .iter()
        .filter(|v| {
            config.all_ritz
                || (v.residual.is_some_and(|r| r < config.tol) && config.omega.contains(v.target()))
        })
        .map(|v| EigenRow {
            gamma_re: v.target().re,
            gamma_im: v.target().im,
            residual: v.residual,
        })
        .collect();
    let history = result
        .report
        .history
        .records
        .iter()
        .flat_map(|rec| {
            rec.ritz
                .iter()
                .enumerate()
                .map(move |(index, v)| HistoryRow {
                    iteration: rec.iteration,
                    index,
                    gamma_re: v.target().re,
                    gamma_im: v.target().im,
                    residual: v.residual,
                })
        })
        .collect();
    let report = BenchReport {
        config: config.clone(),
        n,
        iterations: result.iterations(),
        breakdown: result.breakdown,
        eigenvalues,
        history,
        timing: TimingReport::new(setup, &result.times, total),
        storage: StorageReport::new(n, result.basis_columns, result.basis_storage),
        ritz,
    };
    if let Some(dir) = &config.out {
        write_report(&report, dir)?;
    }
    Ok(report)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::io(path, e))?;
    if rows.is_empty() {
        w.write_record(header)
            .map_err(|e| BenchError::io(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| BenchError::io(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| BenchError::io(path, e))?;
    fs::write(path, text + "\n").map_err(|e| BenchError::io(path, e))
}

pub fn write_report(report: &BenchReport, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_csv(
        &dir.join("eigenvalues.csv"),
        &report.eigenvalues,
        &["gamma_re", "gamma_im", "residual"],
    )?;
    write_csv(
        &dir.join("history.csv"),
        &report.history,
        &["iteration", "index", "gamma_re", "gamma_im", "residual"],
    )?;
    #[derive(Serialize)]
    struct Timing<'a> {
        config: &'a RunConfig,
        n: usize,
        iterations: usize,
        breakdown: Option<Breakdown>,
        timing: &'a TimingReport,
        storage: &'a StorageReport,
    }
    write_json(
        &dir.join("timing.json"),
        &Timing {
            config: &report.config,
            n: report.n,
            iterations: report.iterations,
            breakdown: report.breakdown,
            timing: &report.timing,
            storage: &report.storage,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineRow {
    pub level: usize,
    pub n_x: usize,
    pub n_z: usize,
    pub n: usize,
    pub track: usize,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub track: usize,
    /// Finest of the three levels entering the ratio.
    pub level: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RefineTable {
    pub rows: Vec<RefineRow>,
    pub ratios: Vec<RatioRow>,
}

impl RefineTable {
    /// Values of one track ordered by level.
    pub fn track(&self, track: usize) -> Vec<C64> {
        self.rows
            .iter()
            .filter(|r| r.track == track)
            .map(|r| C64::new(r.gamma_re, r.gamma_im))
            .collect()
    }
}

/// `|γ_h − γ_{h/2}| / |γ_{h/2} − γ_{h/4}|` over consecutive triples.
pub fn convergence_ratios(values: &[C64]) -> Vec<f64> {
    values
        .windows(3)
        .map(|w| (w[0] - w[1]).norm() / (w[1] - w[2]).norm())
        .collect()
}

/// Runs the configured solver on `levels` grids, refining `n_x → 2n_x`,
/// `n_z → 2n_z − 1`, and follows every eigenvalue of the coarsest level
/// through the finer ones by proximity. Tracks that lose their partner are
/// dropped.
pub fn refine_study(config: &RunConfig, levels: usize) -> Result<RefineTable> {
    if levels == 0 {
        return Err(BenchError::Config(
            "at least one refinement level is required".into(),
        ));
    }
    let mut cfg = config.clone();
    cfg.out = None;
    let mut per_level = Vec::with_capacity(levels);
    for _ in 0..levels {
        let report = run(&cfg)?;
        per_level.push((cfg.n_x, cfg.n_z, report.n, report.eigenvalues.clone()));
        cfg.n_x *= 2;
        cfg.n_z = 2 * cfg.n_z - 1;
    }

    let mut tracks: Vec<Vec<EigenRow>> = per_level[0].3.iter().map(|e| vec![*e]).collect();
    for (_, _, _, found) in &per_level[1..] {
        tracks.retain_mut(|t| {
            let last = t.last().unwrap();
            let here = C64::new(last.gamma_re, last.gamma_im);
            let best = found.iter().min_by(|a, b| {
                let da = (C64::new(a.gamma_re, a.gamma_im) - here).norm();
                let db = (C64::new(b.gamma_re, b.gamma_im) - here).norm();
                da.total_cmp(&db)
            });
            match best {
                Some(b)
                    if (C64::new(b.gamma_re, b.gamma_im) - here).norm()
                        < 0.1 * here.norm().max(1.0) =>
                {
                    t.push(*b);
                    true
                }
                _ => false,
            }
        });
    }
    tracks.sort_by(|a, b| b[0].gamma_im.total_cmp(&a[0].gamma_im));

    let mut table = RefineTable::default();
    for (track, values) in tracks.iter().enumerate() {
        for (level, e) in values.iter().enumerate() {
            let (n_x, n_z, n, _) = per_level[level];
            table.rows.push(RefineRow {
                level,
                n_x,
                n_z,
                n,
                track,
                gamma_re: e.gamma_re,
                gamma_im: e.gamma_im,
                residual: e.residual,
            });
        }
        let gammas: Vec<C64> = values
            .iter()
            .map(|e| C64::new(e.gamma_re, e.gamma_im))
            .collect();
        for (i, ratio) in convergence_ratios(&gammas).into_iter().enumerate() {
            table.ratios.push(RatioRow {
                track,
                level: i + 2,
                ratio,
            });
        }
    }
    if let Some(dir) = &config.out {
        create_dir(dir)?;
        write_csv(
            &dir.join("refine.csv"),
            &table.rows,
            &[
                "level", "n_x", "n_z", "n", "track", "gamma_re", "gamma_im", "residual",
            ],
        )?;
        write_csv(
            &dir.join("ratios.csv"),
            &table.ratios,
            &["track", "level", "ratio"],
        )?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingRow {
    pub n_x: usize,
    pub n_z: usize,
    pub n: usize,
    pub iterations: usize,
    pub setup_s: f64,
    pub y_block_s: f64,
    pub y1_solve_s: f64,
    pub orthogonalization_s: f64,
    pub hessenberg_eig_s: f64,
    pub iteration_s: f64,
    pub total_s: f64,
    pub basis_complex: usize,
}

impl TimingRow {
    /// Time in the phases that build the Krylov space, without Ritz
    /// extraction.
    pub fn step_s(&self) -> f64 {
        self.y_block_s + self.y1_solve_s + self.orthogonalization_s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingStudy {
    pub solver: Solver,
    pub rows: Vec<TimingRow>,
    /// Least-squares slope of `log t` against `log n` for the iteration time.
    pub iteration_exponent: f64,
    /// Same for the y-block, y₁ and orthogonalization phases, which exclude
    /// the Ritz extraction.
    pub step_exponent: f64,
}

/// Slope of the least-squares line through `(log x, log y)`.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the configured solver on each `(n_x, n_z)` in turn without
/// per-iteration history, and fits scaling exponents in `n`.
pub fn timing_study(config: &RunConfig, sizes: &[(usize, usize)]) -> Result<TimingStudy> {
    if sizes.len() < 2 {
        return Err(BenchError::Config(
            "a timing study needs at least two grid sizes".into(),
        ));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &(n_x, n_z) in sizes {
        let cfg = RunConfig {
            n_x,
            n_z,
            out: None,
            history: false,
            ..config.clone()
        };
        let report = run(&cfg)?;
        rows.push(TimingRow {
            n_x,
            n_z,
            n: report.n,
            iterations: report.iterations,
            setup_s: report.timing.setup_s,
            y_block_s: report.timing.y_block_s,
            y1_solve_s: report.timing.y1_solve_s,
            orthogonalization_s: report.timing.orthogonalization_s,
            hessenberg_eig_s: report.timing.hessenberg_eig_s,
            iteration_s: report.timing.iteration_s,
            total_s: report.timing.total_s,
            basis_complex: report.storage.basis_complex,
        });
    }
    let n: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let it: Vec<f64> = rows.iter().map(|r| r.iteration_s).collect();
    let step: Vec<f64> = rows.iter().map(TimingRow::step_s).collect();
    let study = TimingStudy {
        solver: config.solver,
        iteration_exponent: fit_exponent(&n, &it),
        step_exponent: fit_exponent(&n, &step),
        rows,
    };
    if let Some(dir) = &config.out {
        create_dir(dir)?;
        write_csv(&dir.join("timing.csv"), &study.rows, &[])?;
        write_json(&dir.join("timing_study.json"), &study)?;
    }
    Ok(study)
}

fn complex<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}
