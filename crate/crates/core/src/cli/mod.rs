//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code:
//! 0 success, 1 I/O or parse error, 2 capability or precondition error,
//! 3 verification failure.

pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::blocks::{embed_narrow, is_block, to_block, to_block_linear, BlockSide};
use crate::error::{Error, Result};
use crate::globalmin::{brute_force_min, outer_layer_solve, OracleResult};
use crate::netcore::{forward_batch, ActivationKind, Architecture, Dataset, NetworkParams};
use crate::objective::{constraint_value, empirical_risk, ConstraintSpec, LossKind};
use crate::paths::{build_escape_path, EscapeOptions};
use crate::verify::{verify_path_with_profile, LossProfile, Tolerances, VerificationReport};
use io::{BruteForceConfig, RunConfig};

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 1;
const EXIT_CAPABILITY: i32 = 2;
const EXIT_VERIFY: i32 = 3;

/// Draws of random inner layers tried when looking for full-rank features.
const OUTER_SOLVE_DRAWS: usize = 32;

#[derive(Parser, Debug)]
#[command(
    name = "lossescape",
    version,
    about = "Non-increasing loss paths between network parameters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reparametrize parameters into a block along a constant-loss path.
    Sparsify {
        #[arg(long)]
        config: PathBuf,
        /// Parameter file; defaults to the config's `start`.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value = "upper")]
        side: BlockSide,
        /// Merge layers (identity activations only).
        #[arg(long)]
        linear: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify a path from the start to a target.
    Escape {
        #[arg(long)]
        config: PathBuf,
        /// Where the target comes from; defaults to `file` when the config
        /// names one and `outer-solve` otherwise.
        #[arg(long, value_enum)]
        target: Option<TargetMode>,
        #[arg(long)]
        linear: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        tol_mono: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a stored path.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol_mono: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a low-risk reference point.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "outer-solve")]
        method: OracleChoice,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a small random instance and run `escape` on it.
    Demo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        width: usize,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long)]
        linear: bool,
        /// Defaults to relu, or identity with `--linear`.
        #[arg(long, value_enum)]
        activation: Option<DemoActivation>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value = "demo_out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TargetMode {
    File,
    OuterSolve,
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleChoice {
    OuterSolve,
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DemoActivation {
    Identity,
    Relu,
    LeakyRelu,
    Sigmoid,
}

impl DemoActivation {
    fn kind(self) -> ActivationKind {
        match self {
            DemoActivation::Identity => ActivationKind::Identity,
            DemoActivation::Relu => ActivationKind::Relu,
            DemoActivation::LeakyRelu => ActivationKind::LeakyRelu { c: 0.1 },
            DemoActivation::Sigmoid => ActivationKind::Sigmoid,
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Structural(_) | Error::Io { .. } | Error::Parse(_) => EXIT_INPUT,
        Error::Domain(_)
        | Error::Parameter(_)
        | Error::Precondition(_)
        | Error::Capability(_)
        | Error::ReductionFailure(_) => EXIT_CAPABILITY,
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Sparsify {
            config,
            params,
            side,
            linear,
            out,
        } => sparsify(&config, params.as_deref(), side, linear, out),
        Command::Escape {
            config,
            target,
            linear,
            seed,
            grid,
            tol_mono,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let overrides = Overrides {
                seed,
                grid,
                tol_mono,
            };
            escape(&cfg, target, linear, &overrides, out)
        }
        Command::Verify {
            config,
            path,
            grid,
            seed,
            tol_mono,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            verify(
                &cfg,
                &path,
                &Overrides {
                    seed,
                    grid,
                    tol_mono,
                },
                out,
            )
        }
        Command::Oracle {
            config,
            method,
            seed,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            oracle(&cfg, method, seed, out)
        }
        Command::Demo {
            seed,
            width,
            depth,
            linear,
            activation,
            grid,
            out,
        } => {
            let act = activation.unwrap_or(if linear {
                DemoActivation::Identity
            } else {
                DemoActivation::Relu
            });
            demo(seed, width, depth, linear, act.kind(), grid, &out)
        }
    }
}

struct Overrides {
    seed: Option<u64>,
    grid: Option<usize>,
    tol_mono: Option<f64>,
}

impl Overrides {
    fn seed(&self, cfg: &RunConfig) -> u64 {
        self.seed.unwrap_or(cfg.seed)
    }

    fn grid(&self, cfg: &RunConfig) -> usize {
        self.grid.unwrap_or(cfg.grid)
    }

    fn tolerances(&self, cfg: &RunConfig) -> Tolerances {
        let mut t = cfg.tolerances;
        if let Some(m) = self.tol_mono {
            t.monotone = m;
        }
        t
    }
}

fn out_dir(cli: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    cli.or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Scales `params` down until `r ≤ 1`; positive homogeneity of every term
/// makes a single division enough.
fn make_feasible(params: NetworkParams, spec: &ConstraintSpec) -> NetworkParams {
    let r = constraint_value(&params, spec);
    if r > 1.0 {
        params.scaled(1.0 / r)
    } else {
        params
    }
}

fn check_arch(found: &Architecture, cfg: &RunConfig, what: &str) -> Result<()> {
    if found != &cfg.architecture {
        return Err(Error::structural(format!(
            "{what} has architecture {:?}, the config has {:?}",
            found.dims(),
            cfg.architecture.dims()
        )));
    }
    Ok(())
}

fn load_params_for(path: &Path, cfg: &RunConfig) -> Result<NetworkParams> {
    let (arch, params) = io::load_params(path)?;
    check_arch(&arch, cfg, &path.display().to_string())?;
    Ok(params)
}

/// The config's start file, or a seeded random draw scaled into the
/// feasible set.
fn start_params(cfg: &RunConfig, seed: u64) -> Result<NetworkParams> {
    match &cfg.start {
        Some(path) => load_params_for(path, cfg),
        None => {
            let mut rng = rng_for(seed, 0);
            let p = NetworkParams::random(&cfg.architecture, &mut rng, 0.5);
            Ok(make_feasible(p, &cfg.constraint))
        }
    }
}

/// Minimizes over the outer layer for seeded random inner layers, redrawing
/// until the features reach rank `n` (or the draws run out; the best draw
/// is kept).
fn outer_solve_target(cfg: &RunConfig, data: &Dataset, seed: u64) -> Result<OracleResult> {
    if !cfg.constraint.is_unconstrained() {
        return Err(Error::precondition(
            "outer-solve ignores the constraint; use brute-force or a target file for constrained runs",
        ));
    }
    let mut rng = rng_for(seed, 1);
    let l = cfg.architecture.depth();
    let mut best: Option<OracleResult> = None;
    for _ in 0..OUTER_SOLVE_DRAWS {
        let mut inner = NetworkParams::random(&cfg.architecture, &mut rng, 1.0).into_matrices();
        inner.truncate(l);
        let res = outer_layer_solve(&cfg.architecture, &inner, data, cfg.loss)?;
        let rank = res.rank.unwrap_or(0);
        let better = best.as_ref().is_none_or(|b| rank > b.rank.unwrap_or(0));
        if better {
            best = Some(res);
        }
        if rank >= data.n() {
            break;
        }
    }
    Ok(best.expect("at least one draw"))
}

/// Brute force on a narrow copy of the architecture, zero-padded back.
fn brute_force_target(cfg: &RunConfig, data: &Dataset) -> Result<OracleResult> {
    let bf = cfg.brute_force.clone().unwrap_or_default();
    let BruteForceConfig {
        resolution,
        bound,
        width,
    } = bf;
    let narrow = cfg.architecture.with_hidden_width(width)?;
    let mut res = brute_force_min(&narrow, data, cfg.loss, &cfg.constraint, resolution, bound)?;
    res.params = embed_narrow(&res.params, &cfg.architecture)?;
    Ok(res)
}

#[derive(Serialize)]
struct SparsifySummary {
    side: BlockSide,
    linear: bool,
    s: usize,
    steps: Vec<String>,
    risk_before: f64,
    risk_after: f64,
    max_output_deviation: f64,
    constraint_before: f64,
    constraint_after: f64,
    is_block: bool,
}

fn sparsify(
    config: &Path,
    params: Option<&Path>,
    side: BlockSide,
    linear: bool,
    out: Option<PathBuf>,
) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let data = cfg.dataset()?;
    let arch = &cfg.architecture;
    let start = match params {
        Some(p) => load_params_for(p, &cfg)?,
        None => start_params(&cfg, cfg.seed)?,
    };
    let reparam = if linear { to_block_linear } else { to_block };
    let block = reparam(arch, &start, &data, &cfg.constraint, side)?;

    let before = forward_batch(arch, &start, data.x().view())?;
    let after = forward_batch(arch, &block.params, data.x().view())?;
    let scale = before.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let dev = (&before - &after)
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        / scale;
    let summary = SparsifySummary {
        side,
        linear,
        s: block.s,
        steps: block
            .steps
            .iter()
            .map(|s| format!("{:?} on matrix {}", s.kind, s.layer))
            .collect(),
        risk_before: empirical_risk(arch, &start, &data, cfg.loss)?,
        risk_after: empirical_risk(arch, &block.params, &data, cfg.loss)?,
        max_output_deviation: dev,
        constraint_before: constraint_value(&start, &cfg.constraint),
        constraint_after: constraint_value(&block.params, &cfg.constraint),
        is_block: is_block(&block.params, block.s, side),
    };
    let dir = out_dir(out, &cfg);
    io::save_params(&dir.join("block.json"), arch, &block.params)?;
    io::write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "block size s = {}, {} steps, risk {:.6e} -> {:.6e}, output deviation {:.3e}",
        summary.s,
        summary.steps.len(),
        summary.risk_before,
        summary.risk_after,
        summary.max_output_deviation
    );
    Ok(EXIT_OK)
}

fn write_profile(path: &Path, profile: &LossProfile) -> Result<()> {
    let mut text = String::from("t\tloss\n");
    for (t, v) in profile {
        text.push_str(&format!("{t}\t{v}\n"));
    }
    io::write_text(path, &text)
}

fn report_line(report: &VerificationReport) -> String {
    let f = report.overall;
    format!(
        "{} segments: constant={} convex={} monotone={} feasible={} continuous={} evaluated={} -> {}",
        report.segments.len(),
        f.constant,
        f.convex,
        f.monotone,
        f.feasible,
        f.continuous,
        f.evaluated,
        if f.pass { "PASS" } else { "FAIL" }
    )
}

fn escape(
    cfg: &RunConfig,
    target: Option<TargetMode>,
    linear: bool,
    ov: &Overrides,
    out: Option<PathBuf>,
) -> Result<i32> {
    let data = cfg.dataset()?;
    let arch = &cfg.architecture;
    let seed = ov.seed(cfg);
    let grid = ov.grid(cfg);
    let tols = ov.tolerances(cfg);
    let start = start_params(cfg, seed)?;
    let mode = target.unwrap_or(if cfg.target.is_some() {
        TargetMode::File
    } else {
        TargetMode::OuterSolve
    });
    let target = match mode {
        TargetMode::File => {
            let path = cfg.target.as_ref().ok_or_else(|| {
                Error::Parse("--target file needs a `target` entry in the config".into())
            })?;
            load_params_for(path, cfg)?
        }
        TargetMode::OuterSolve => outer_solve_target(cfg, &data, seed)?.params,
        TargetMode::BruteForce => brute_force_target(cfg, &data)?.params,
    };

    let options = EscapeOptions {
        linear,
        grid_size: grid,
        tol: tols.convex,
    };
    let esc = build_escape_path(
        arch,
        &start,
        &target,
        &data,
        cfg.loss,
        &cfg.constraint,
        options,
    )?;
    let (report, profile) = verify_path_with_profile(
        &esc.path,
        arch,
        &data,
        cfg.loss,
        &cfg.constraint,
        grid,
        tols,
        Some(seed),
    )?;

    let dir = out_dir(out, cfg);
    io::save_path(&dir.join("path.json"), arch, &esc.path)?;
    io::save_params(&dir.join("target.json"), arch, &target)?;
    io::write_json(&dir.join("report.json"), &report)?;
    write_profile(&dir.join("profile.tsv"), &profile)?;

    let target_risk = empirical_risk(arch, &target, &data, cfg.loss)?;
    println!(
        "block size s = {}, restriction c = {}, reached target: {}",
        esc.s, esc.c, esc.reached_target
    );
    println!(
        "risk: start {}, end {}, target {target_risk:.6e}",
        fmt_opt(report.start_loss),
        fmt_opt(report.end_loss)
    );
    println!("{}", report_line(&report));
    println!("wrote {}", dir.display());
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"))
}

fn verify(cfg: &RunConfig, path: &Path, ov: &Overrides, out: Option<PathBuf>) -> Result<i32> {
    let data = cfg.dataset()?;
    let (arch, composite) = io::load_path(path)?;
    check_arch(&arch, cfg, &path.display().to_string())?;
    let (report, profile) = verify_path_with_profile(
        &composite,
        &arch,
        &data,
        cfg.loss,
        &cfg.constraint,
        ov.grid(cfg),
        ov.tolerances(cfg),
        Some(ov.seed(cfg)),
    )?;
    let dir = out_dir(out, cfg);
    io::write_json(&dir.join("report.json"), &report)?;
    write_profile(&dir.join("profile.tsv"), &profile)?;
    println!("{}", report_line(&report));
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

#[derive(Serialize)]
struct OracleSummary {
    method: crate::globalmin::OracleMethod,
    achieved_risk: f64,
    certificate: f64,
    rank: Option<usize>,
    constraint_value: f64,
}

fn oracle(
    cfg: &RunConfig,
    method: OracleChoice,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<i32> {
    let data = cfg.dataset()?;
    let res = match method {
        OracleChoice::OuterSolve => outer_solve_target(cfg, &data, seed.unwrap_or(cfg.seed))?,
        OracleChoice::BruteForce => brute_force_target(cfg, &data)?,
    };
    let summary = OracleSummary {
        method: res.method,
        achieved_risk: res.achieved_risk,
        certificate: res.certificate,
        rank: res.rank,
        constraint_value: constraint_value(&res.params, &cfg.constraint),
    };
    let dir = out_dir(out, cfg);
    io::write_json(&dir.join("oracle.json"), &summary)?;
    io::save_params(
        &dir.join("oracle_params.json"),
        &cfg.architecture,
        &res.params,
    )?;
    println!(
        "{:?}: risk {:.6e} (certificate {:.3e}{})",
        res.method,
        res.achieved_risk,
        res.certificate,
        res.rank.map_or(String::new(), |r| format!(", rank {r}"))
    );
    Ok(EXIT_OK)
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// Writes a squared-loss instance with `m = 1`, `n = 3`, `d = 2` and runs
/// [`escape`] on it with an outer-solve target.
fn demo(
    seed: u64,
    width: usize,
    depth: usize,
    linear: bool,
    activation: ActivationKind,
    grid: Option<usize>,
    out: &Path,
) -> Result<i32> {
    let (d, n, m) = (2, 3, 1);
    let mut dims = vec![d];
    dims.extend(std::iter::repeat_n(width, depth));
    dims.push(m);
    let arch = Architecture::uniform(dims, activation)?;
    let mut rng = rng_for(seed, 2);
    io::write_matrix_csv(&out.join("x.csv"), &gaussian(d, n, &mut rng))?;
    io::write_matrix_csv(&out.join("y.csv"), &gaussian(m, n, &mut rng))?;
    let cfg = RunConfig {
        architecture: arch,
        loss: LossKind::Squared,
        constraint: ConstraintSpec::unconstrained(),
        data: io::DataPaths {
            x: "x.csv".into(),
            y: "y.csv".into(),
        },
        start: None,
        target: None,
        seed,
        grid: grid.unwrap_or(2001),
        tolerances: Tolerances::default(),
        brute_force: None,
        output: Some(".".into()),
    };
    let cfg_path = out.join("config.json");
    io::write_json(&cfg_path, &cfg)?;
    let cfg = RunConfig::load(&cfg_path)?;
    let ov = Overrides {
        seed: None,
        grid: None,
        tol_mono: None,
    };
    escape(&cfg, Some(TargetMode::OuterSolve), linear, &ov, None)
}
