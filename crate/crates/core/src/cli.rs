//! The `rdiff` command line.
//!
//! Exit codes: 0 success, 1 numerical failure during a run, 2 invalid input,
//! 3 path exploded, 4 path left the chart, 5 a verdict or verification failed.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ModelKind, Overrides, RunConfig, VerdictRequest};
use crate::curvature::{
    chart_curvature, default_t_grid, perfect_fluid_decompose, scalar_sign_check, sectional_sign_check,
    weak_energy_check, EnergyConditionReport,
};
use crate::ensemble::{
    run_ensemble, test_afunc_divergence, test_energy_dichotomy, test_space_convergence, test_tdot_to_one,
    EnsembleStats, Verdict,
};
use crate::error::Error;
use crate::io::{footer_path, to_json, write_csv, Footer};
use crate::manifold::ModelSpec;
use crate::sde::{simulate_path, DiffusionKind, DiffusionSpec, PathStatus, RecordPlan, Scheme};
use crate::verify::{run_verify, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_EXPLODED: i32 = 3;
pub const EXIT_CHART_EXIT: i32 = 4;
pub const EXIT_FAILED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "rdiff", version, about = "Relativistic diffusions on warped-product spacetimes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curvature tensors and sign checks at a chart point, as JSON.
    Curvature(Common),
    /// Integrate a geodesic and write it as CSV.
    Geodesic(Common),
    /// Simulate one diffusion path and write it as CSV.
    Simulate(Common),
    /// Run a path ensemble and its verdicts, as JSON.
    Ensemble(Common),
    /// Run the self-check suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<i32>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long = "s-max", allow_negative_numbers = true)]
    pub s_max: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub stride: Option<u64>,
    /// Comma-separated chart point, t first.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub point: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub tdot: Option<f64>,
    /// Comma-separated snapshot proper times for `ensemble`.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum KindArg {
    Geodesic,
    Basic,
    R,
    Energy,
    Sectional,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SchemeArg {
    Euler,
    Boost,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model,
            c: self.c,
            k: self.k,
            rho: self.rho,
            kind: self.kind.map(|k| match k {
                KindArg::Geodesic => DiffusionKind::Geodesic,
                KindArg::Basic => DiffusionKind::Basic,
                KindArg::R => DiffusionKind::R,
                KindArg::Energy => DiffusionKind::Energy,
                KindArg::Sectional => DiffusionKind::Sectional,
            }),
            h: self.h,
            s_max: self.s_max,
            scheme: self.scheme.map(|s| match s {
                SchemeArg::Euler => Scheme::Euler,
                SchemeArg::Boost => Scheme::Boost,
            }),
            seed: self.seed,
            paths: self.paths,
            threads: self.threads,
            out: self.out.clone(),
            stride: self.stride,
            point: self.point.clone(),
            tdot: self.tdot,
            snapshots: self.snapshots.clone(),
        }
    }

    fn config(&self) -> crate::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides())?;
        Ok(cfg)
    }
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    fn invalid(error: Error) -> Self {
        Failure { code: EXIT_INVALID, error }
    }

    fn runtime(error: Error) -> Self {
        Failure { code: EXIT_RUNTIME, error }
    }

    pub fn json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Doc { error: self.error.kind(), message: self.error.to_string(), exit_code: self.code })
            .expect("plain struct serializes")
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` and runs the command; returns the process exit code. Normal
/// output goes to `stdout`, error documents to `stderr`.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(stdout, "{e}");
            } else {
                let f = Failure::invalid(Error::invalid(e.to_string().trim().to_string()));
                let _ = writeln!(stderr, "{}", f.json());
            }
            return code;
        }
    };
    match dispatch(&cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.json());
            f.code
        }
    }
}

pub fn main_entry() -> i32 {
    let out = std::io::stdout();
    let err = std::io::stderr();
    run_from(std::env::args_os(), &mut out.lock(), &mut err.lock())
}

fn dispatch(cmd: &Command, stdout: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Curvature(c) => cmd_curvature(c, stdout),
        Command::Geodesic(c) => cmd_simulate(c, true, stdout),
        Command::Simulate(c) => cmd_simulate(c, false, stdout),
        Command::Ensemble(c) => cmd_ensemble(c, stdout),
        Command::Verify { suite, seed, out } => cmd_verify(*suite, *seed, out.as_deref(), stdout),
    }
}

fn io_fail(e: std::io::Error) -> Failure {
    Failure::runtime(Error::invalid(format!("i/o error: {e}")))
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_fail),
        None => stdout.write_all(text.as_bytes()).map_err(io_fail),
    }
}

#[derive(Serialize)]
struct RiemannEntry {
    index: [usize; 4],
    value: f64,
}

#[derive(Serialize)]
struct FluidDoc {
    q: f64,
    p: f64,
    is_perfect: bool,
}

#[derive(Serialize)]
struct ChecksDoc {
    wec: EnergyConditionReport,
    scalar_sign: bool,
    sectional_sign: bool,
}

#[derive(Serialize)]
struct CurvatureDoc {
    model: ModelSpec,
    point: Vec<f64>,
    metric: Vec<Vec<f64>>,
    christoffel: Vec<Vec<Vec<f64>>>,
    riemann: Vec<RiemannEntry>,
    ricci: Vec<Vec<f64>>,
    scalar: f64,
    energy_momentum: Vec<Vec<f64>>,
    fluid: FluidDoc,
    checks: ChecksDoc,
}

/// Unit velocities at `p` with ṫ ∈ {1, 1.5, 3, 10} along each coordinate axis.
fn probe_velocities(model: &ModelSpec, p: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (mut points, mut vels) = (Vec::new(), Vec::new());
    let d = model.dim();
    for tdot in [1.0, 1.5, 3.0, 10.0] {
        for axis in 0..d {
            let mut dir = vec![0.0; d];
            dir[axis] = 1.0;
            if let Ok(ph) = crate::sde::PhaseState::from_tdot(model, p, tdot, Some(&dir)) {
                points.push(p.to_vec());
                vels.push(ph.velocity[..d + 1].to_vec());
            }
        }
    }
    (points, vels)
}

fn cmd_curvature(args: &Common, stdout: &mut dyn Write) -> Outcome {
    let cfg = args.config().map_err(Failure::invalid)?;
    let model = cfg.model().map_err(Failure::invalid)?;
    let point = cfg.point.clone().unwrap_or_else(|| crate::config::default_point(&model));
    let pack = chart_curvature(&model, &point).map_err(Failure::invalid)?;
    let n = pack.n;
    let mat = |m: &crate::tensor::Mat4| (0..n).map(|i| m[i][..n].to_vec()).collect::<Vec<_>>();
    let mut riemann = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v = pack.riemann[a][b][c][d];
                    if v != 0.0 {
                        riemann.push(RiemannEntry { index: [a, b, c, d], value: v });
                    }
                }
            }
        }
    }
    let fluid = perfect_fluid_decompose(&pack);
    let (pts, vels) = probe_velocities(&model, &point);
    let doc = CurvatureDoc {
        point: point.clone(),
        metric: mat(&pack.metric),
        christoffel: (0..n).map(|k| mat(&pack.christoffel[k])).collect(),
        riemann,
        ricci: mat(&pack.ricci),
        scalar: pack.scalar,
        energy_momentum: mat(&pack.energy_momentum),
        fluid: FluidDoc { q: fluid.q, p: fluid.p, is_perfect: fluid.is_perfect },
        checks: ChecksDoc {
            wec: weak_energy_check(&model, &pts, &vels),
            scalar_sign: scalar_sign_check(&model, &default_t_grid(&model)),
            sectional_sign: sectional_sign_check(&model),
        },
        model,
    };
    emit(&to_json(&doc), cfg.output.path.as_deref(), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &Common, geodesic: bool, stdout: &mut dyn Write) -> Outcome {
    let mut cfg = args.config().map_err(Failure::invalid)?;
    if geodesic {
        cfg.diffusion = Some(DiffusionSpec::new(DiffusionKind::Geodesic, 0.0));
    }
    let model = cfg.model().map_err(Failure::invalid)?;
    let spec = cfg.diffusion(&model).map_err(Failure::invalid)?;
    let step = cfg.step().map_err(Failure::invalid)?;
    let init = cfg.init(&model).map_err(Failure::invalid)?;
    if cfg.output.stride == 0 {
        return Err(Failure::invalid(Error::invalid("output stride must be at least 1")));
    }
    let state = init.frame_state(&model).map_err(Failure::invalid)?;
    let seed = cfg.seed();
    let series = simulate_path(&model, &spec, &state, &step, &RecordPlan::every(cfg.output.stride), seed)
        .map_err(Failure::runtime)?;
    let mut csv = Vec::new();
    write_csv(&series, &mut csv).map_err(io_fail)?;
    match &cfg.output.path {
        Some(p) => {
            std::fs::write(p, &csv).map_err(io_fail)?;
            std::fs::write(footer_path(p), to_json(&Footer::of(&series, Some(seed)))).map_err(io_fail)?;
        }
        None => stdout.write_all(&csv).map_err(io_fail)?,
    }
    Ok(match series.status {
        PathStatus::Completed { .. } => EXIT_OK,
        PathStatus::Exploded { .. } => EXIT_EXPLODED,
        PathStatus::ChartExit { .. } => EXIT_CHART_EXIT,
    })
}

#[derive(Serialize)]
struct EnsembleDoc<'a> {
    #[serde(flatten)]
    stats: &'a EnsembleStats,
    verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    settling_scenario: Option<EnsembleStats>,
}

fn cmd_ensemble(args: &Common, stdout: &mut dyn Write) -> Outcome {
    let cfg = args.config().map_err(Failure::invalid)?;
    let (ens, requests) = cfg.ensemble_config().map_err(Failure::invalid)?;
    // Validate the secondary scenario before spending time on the first.
    let mut secondary = None;
    for r in &requests {
        if let VerdictRequest::EnergyDichotomy { b_init, b_step, .. } = r {
            let mut b = ens.clone();
            b.init = b_init.clone();
            b.step = *b_step;
            b.snapshots.retain(|s| *s <= b_step.s_max);
            b.validate().map_err(Failure::invalid)?;
            secondary = Some(b);
        }
    }
    let stats = run_ensemble(&ens).map_err(Failure::runtime)?;
    let settling = secondary.map(|b| run_ensemble(&b)).transpose().map_err(Failure::runtime)?;
    let verdicts: Vec<Verdict> = requests
        .iter()
        .map(|r| match r {
            VerdictRequest::TdotToOne { band } => test_tdot_to_one(&stats, *band),
            VerdictRequest::AfuncDivergence => test_afunc_divergence(&stats),
            VerdictRequest::SpaceConvergence { shrink } => test_space_convergence(&stats, *shrink),
            VerdictRequest::EnergyDichotomy { gates, .. } => {
                test_energy_dichotomy(&stats, settling.as_ref().expect("built above"), gates)
            }
        })
        .collect();
    let ok = verdicts.iter().all(Verdict::ok);
    let doc = EnsembleDoc { stats: &stats, verdicts, settling_scenario: settling };
    emit(&to_json(&doc), cfg.output.path.as_deref(), stdout)?;
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_verify(suite: Suite, seed: u64, out: Option<&Path>, stdout: &mut dyn Write) -> Outcome {
    let report = run_verify(suite, seed).map_err(Failure::runtime)?;
    let text = report.render();
    stdout.write_all(text.as_bytes()).map_err(io_fail)?;
    if let Some(p) = out {
        std::fs::write(p, &text).map_err(io_fail)?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
}
