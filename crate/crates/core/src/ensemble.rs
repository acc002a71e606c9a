//! Monte Carlo ensembles of paths, their snapshot statistics and the verdict
//! rules that turn asymptotic statements into finite checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ModelSpec;
use crate::rng::PathRng;
use crate::sde::{
    simulate_path_with, DiffusionKind, DiffusionSpec, InitSpec, PathSeries, PathStatus, RecordPlan, Sample,
    StepConfig,
};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// a_s below this counts as hitting zero.
pub const AFUNC_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub model: ModelSpec,
    pub diffusion: DiffusionSpec,
    pub init: InitSpec,
    pub step: StepConfig,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    /// Worker count; `None` or 0 means one per core. `RDIFF_THREADS` caps it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.diffusion.validate(&self.model)?;
        self.step.validate()?;
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths must be at least 1"));
        }
        if self.snapshots.iter().any(|s| !(s.is_finite() && *s > 0.0 && *s <= self.step.s_max)) {
            return Err(Error::invalid("snapshot times must lie in (0, s_max]"));
        }
        if self.snapshots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("snapshot times must be strictly increasing"));
        }
        self.init.frame_state(&self.model)?;
        Ok(())
    }
}

/// Worker count after applying `RDIFF_THREADS` as a cap (0 or unset = no cap).
pub fn effective_threads(requested: Option<usize>) -> usize {
    let auto = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut n = match requested {
        Some(k) if k > 0 => k,
        _ => auto,
    };
    if let Some(cap) = std::env::var("RDIFF_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if cap > 0 {
            n = n.min(cap);
        }
    }
    n.max(1)
}

/// Quantiles and mean of one observable across the paths alive at a snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let mut v: Vec<f64> = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        Summary {
            q05: quantile_sorted(&v, 0.05),
            q25: quantile_sorted(&v, 0.25),
            q50: quantile_sorted(&v, 0.50),
            q75: quantile_sorted(&v, 0.75),
            q95: quantile_sorted(&v, 0.95),
            mean,
        }
    }
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            if lo + 1 >= n {
                return sorted[n - 1];
            }
            sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
        }
    }
}

/// Wilson score interval for `count` successes in `n` trials.
pub fn wilson_interval(count: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotStats {
    pub s: f64,
    pub n_alive: u64,
    pub tdot: Summary,
    pub energy: Summary,
    pub lambda: Summary,
    pub a_func: Summary,
    /// Euclidean chart distance of the spatial point from the previous snapshot
    /// (from the start for the first one), over paths alive at both.
    pub displacement: Summary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExplosionStats {
    pub count: u64,
    pub fraction: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathOutcome {
    pub index: u64,
    #[serde(flatten)]
    pub status: PathStatus,
    pub terminal_tdot: f64,
    pub terminal_lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub config: EnsembleConfig,
    pub snapshots: Vec<SnapshotStats>,
    pub explosion: ExplosionStats,
    pub chart_exits: u64,
    /// Smallest a_s reached by any path at any step.
    pub min_a_func: f64,
    pub paths: Vec<PathOutcome>,
    /// Per path and snapshot: (ṫ, displacement since the previous snapshot).
    /// Only kept by [`run_ensemble_keep`].
    #[serde(skip)]
    pub per_path: Option<Vec<Vec<Option<(f64, f64)>>>>,
}

impl EnsembleStats {
    pub fn medians<F: Fn(&SnapshotStats) -> &Summary>(&self, field: F) -> Vec<f64> {
        self.snapshots.iter().map(|s| field(s).q50).collect()
    }

    /// Fraction of paths whose terminal ṫ is below `1 + band`.
    pub fn fraction_near_one(&self, band: f64) -> f64 {
        let hits = self.paths.iter().filter(|p| p.terminal_tdot < 1.0 + band).count();
        hits as f64 / self.paths.len().max(1) as f64
    }
}

/// The per-path record the aggregation needs.
#[derive(Clone, Debug)]
struct PathResult {
    start: Sample,
    snapshots: Vec<Option<Sample>>,
    terminal: Sample,
    status: PathStatus,
    min_a_func: f64,
}

fn run_one(config: &EnsembleConfig, index: u64) -> Result<PathResult> {
    let init = config.init.frame_state(&config.model)?;
    let plan = RecordPlan { stride: 0, snapshots: config.snapshots.clone() };
    let mut rng = PathRng::new(config.seed, index);
    let series: PathSeries =
        simulate_path_with(&config.model, &config.diffusion, &init, &config.step, &plan, &mut rng)?;
    Ok(PathResult {
        start: series.samples[0],
        terminal: *series.samples.last().expect("at least the initial sample"),
        snapshots: series.snapshots,
        status: series.status,
        min_a_func: series.min_a_func,
    })
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleStats> {
    run(config, false)
}

/// [`run_ensemble`] that also retains per-path snapshot values.
pub fn run_ensemble_keep(config: &EnsembleConfig) -> Result<EnsembleStats> {
    run(config, true)
}

fn run(config: &EnsembleConfig, keep: bool) -> Result<EnsembleStats> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_threads(config.threads))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<PathResult>> =
        pool.install(|| (0..config.n_paths).into_par_iter().map(|i| run_one(config, i)).collect());
    let results: Vec<PathResult> = results.into_iter().collect::<Result<_>>()?;
    let mut stats = aggregate(config, &results);
    if keep {
        stats.per_path = Some(
            results
                .iter()
                .map(|r| {
                    (0..r.snapshots.len())
                        .map(|j| {
                            let here = r.snapshots[j].as_ref()?;
                            let prev = if j == 0 { Some(&r.start) } else { r.snapshots[j - 1].as_ref() }?;
                            Some((here.hyp_angle, spatial_distance(here, prev)))
                        })
                        .collect()
                })
                .collect(),
        );
    }
    Ok(stats)
}

fn spatial_distance(a: &Sample, b: &Sample) -> f64 {
    (1..a.n).map(|k| (a.point[k] - b.point[k]).powi(2)).sum::<f64>().sqrt()
}

fn aggregate(config: &EnsembleConfig, results: &[PathResult]) -> EnsembleStats {
    let mut snapshots = Vec::with_capacity(config.snapshots.len());
    for (j, &s) in config.snapshots.iter().enumerate() {
        let alive: Vec<&Sample> = results.iter().filter_map(|r| r.snapshots[j].as_ref()).collect();
        let col = |f: fn(&Sample) -> f64| Summary::of(&alive.iter().map(|x| f(x)).collect::<Vec<_>>());
        let disp: Vec<f64> = results
            .iter()
            .filter_map(|r| {
                let here = r.snapshots[j].as_ref()?;
                let prev = if j == 0 { Some(&r.start) } else { r.snapshots[j - 1].as_ref() }?;
                Some(spatial_distance(here, prev))
            })
            .collect();
        snapshots.push(SnapshotStats {
            s,
            n_alive: alive.len() as u64,
            tdot: col(|x| x.hyp_angle),
            energy: col(|x| x.energy),
            lambda: col(|x| x.lambda),
            a_func: col(|x| x.a_func),
            displacement: Summary::of(&disp),
        });
    }
    let n = results.len() as u64;
    let count = results.iter().filter(|r| matches!(r.status, PathStatus::Exploded { .. })).count() as u64;
    let chart_exits = results.iter().filter(|r| matches!(r.status, PathStatus::ChartExit { .. })).count() as u64;
    let (wilson_low, wilson_high) = wilson_interval(count, n, WILSON_Z);
    let paths = results
        .iter()
        .enumerate()
        .map(|(i, r)| PathOutcome {
            index: i as u64,
            status: r.status,
            terminal_tdot: r.terminal.hyp_angle,
            terminal_lambda: r.terminal.lambda,
        })
        .collect();
    EnsembleStats {
        config: config.clone(),
        snapshots,
        explosion: ExplosionStats { count, fraction: count as f64 / n as f64, wilson_low, wilson_high },
        chart_exits,
        min_a_func: results.iter().map(|r| r.min_a_func).fold(f64::INFINITY, f64::min),
        paths,
        per_path: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub outcome: Outcome,
    /// Set when a pass carries no evidence for the claim under test.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Verdict {
            name: name.into(),
            outcome: if pass { Outcome::Pass } else { Outcome::Fail },
            label: None,
            detail,
        }
    }

    fn skipped(name: &str, detail: &str) -> Self {
        Verdict { name: name.into(), outcome: Outcome::Skipped, label: None, detail: detail.into() }
    }

    /// Skipped verdicts do not fail a run.
    pub fn ok(&self) -> bool {
        self.outcome != Outcome::Fail
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(", ")
}

/// Median ṫ non-increasing across snapshots (one inversion tolerated) and the
/// last median within `band` of 1.
pub fn test_tdot_to_one(stats: &EnsembleStats, band: f64) -> Verdict {
    let med = stats.medians(|s| &s.tdot);
    let name = "tdot_to_one";
    if med.is_empty() || med.iter().any(|m| m.is_nan()) {
        return Verdict::new(name, false, "no surviving paths at some snapshot".into());
    }
    let inversions = med.windows(2).filter(|w| w[1] > w[0]).count();
    let last = med[med.len() - 1] - 1.0;
    Verdict::new(
        name,
        inversions <= 1 && last < band,
        format!("medians [{}], inversions {inversions}, final median - 1 = {last:.6e}, band {band:.6e}", fmt_list(&med)),
    )
}

/// Median a_s strictly increasing and no path reaching zero.
pub fn test_afunc_divergence(stats: &EnsembleStats) -> Verdict {
    let name = "afunc_divergence";
    if stats.config.model.eds_exponent() == Some(0.5) {
        return Verdict::skipped(name, "c = 1/2: a_s is conserved by the geodesic flow");
    }
    let med = stats.medians(|s| &s.a_func);
    if med.len() < 2 || med.iter().any(|m| m.is_nan()) {
        return Verdict::new(name, false, "need at least two populated snapshots".into());
    }
    let increasing = med.windows(2).all(|w| w[1] > w[0]);
    let floor_ok = stats.min_a_func > AFUNC_FLOOR;
    let mut v = Verdict::new(
        name,
        increasing && floor_ok,
        format!("medians [{}], min a_s over all paths {:.6e}", fmt_list(&med), stats.min_a_func),
    );
    if stats.config.diffusion.kind != DiffusionKind::R {
        v.label = Some("non_discriminating".into());
    }
    v
}

/// Median displacement over each of the last three snapshot gaps at most
/// `shrink` times the previous one.
pub fn test_space_convergence(stats: &EnsembleStats, shrink: f64) -> Verdict {
    let name = "space_convergence";
    let med = stats.medians(|s| &s.displacement);
    if med.len() < 3 {
        return Verdict::skipped(name, "need at least three snapshot gaps");
    }
    let last = &med[med.len() - 3..];
    let ratios: Vec<f64> = last.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = ratios.iter().all(|r| r.is_finite() && *r <= shrink);
    Verdict::new(
        name,
        pass,
        format!("gap medians [{}], ratios [{}], shrink gate {shrink:.6e}", fmt_list(last), fmt_list(&ratios)),
    )
}

/// Threshold m with ṫ₀ ≥ n·m·t₀ for the explosion branch.
pub fn dichotomy_m(c: f64, rho: f64) -> f64 {
    2.0 + (1.0 + c) / (3.0 * rho * rho * c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyGates {
    /// The n of the 1 − 1/n explosion bound.
    pub n: f64,
    pub slack: f64,
    pub band: f64,
    pub level: f64,
}

/// Scenario A must explode with Wilson lower bound ≥ 1 − 1/n − slack; scenario
/// B must settle with ṫ < 1 + band on at least a `level` fraction of paths.
pub fn test_energy_dichotomy(a: &EnsembleStats, b: &EnsembleStats, gates: &DichotomyGates) -> Verdict {
    let need = 1.0 - 1.0 / gates.n - gates.slack;
    let frac_b = b.fraction_near_one(gates.band);
    let pass_a = a.explosion.wilson_low >= need;
    let pass_b = frac_b >= gates.level;
    Verdict::new(
        "energy_dichotomy",
        pass_a && pass_b,
        format!(
            "A: exploded {}/{} wilson_low {:.6e} (need {need:.6e}); B: fraction below 1+{:.3e} = {frac_b:.6e} (need {:.6e})",
            a.explosion.count,
            a.paths.len(),
            a.explosion.wilson_low,
            gates.band,
            gates.level
        ),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QvFit {
    pub slope: f64,
    pub r_squared: f64,
    pub n_increments: usize,
    pub n_windows: usize,
    pub realized_total: f64,
    pub predicted_total: f64,
}

/// Minimum number of increments for a meaningful fit.
pub const QV_MIN_INCREMENTS: usize = 10_000;

/// Regresses windowed realized quadratic variation of ṫ on the predicted
/// Σ (ṫ² − 1) Ξ h, through the origin. Needs consecutive samples (stride 1).
pub fn qv_regression(path: &PathSeries, window: usize) -> Result<QvFit> {
    let samples = &path.samples;
    let inc = samples.len().saturating_sub(1);
    if inc < QV_MIN_INCREMENTS {
        return Err(Error::InsufficientSamples { got: inc, need: QV_MIN_INCREMENTS });
    }
    if window == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    let mut realized = Vec::new();
    let mut predicted = Vec::new();
    for chunk in samples.windows(2).collect::<Vec<_>>().chunks(window) {
        if chunk.len() < window {
            break;
        }
        let mut r = 0.0;
        let mut p = 0.0;
        for pair in chunk {
            let (a, b) = (&pair[0], &pair[1]);
            let ds = b.s - a.s;
            r += (b.hyp_angle - a.hyp_angle).powi(2);
            p += (a.hyp_angle * a.hyp_angle - 1.0) * a.xi * ds;
        }
        realized.push(r);
        predicted.push(p);
    }
    let sxy: f64 = realized.iter().zip(&predicted).map(|(r, p)| r * p).sum();
    let sxx: f64 = predicted.iter().map(|p| p * p).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mean_r = realized.iter().sum::<f64>() / realized.len() as f64;
    let ss_res: f64 = realized.iter().zip(&predicted).map(|(r, p)| (r - slope * p).powi(2)).sum();
    let ss_tot: f64 = realized.iter().map(|r| (r - mean_r).powi(2)).sum();
    Ok(QvFit {
        slope,
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
        n_increments: inc,
        n_windows: realized.len(),
        realized_total: realized.iter().sum(),
        predicted_total: predicted.iter().sum(),
    })
}
