//! Self-checks behind `rdiff verify`. Each check reports its worst measured
//! discrepancy against a tolerance; the report is a pure function of
//! (suite, seed).

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::algebra::{
    basis, eta_ij, eta_inner_bivec, gram_schmidt_g, so_bracket, wedge_action, Bivector, Frame,
};
use crate::curvature::{
    chart_curvature, chart_curvature_fd, energy_at, energy_momentum_at, frame_components, perfect_fluid_decompose,
    CurvaturePack, FD_STEP,
};
use crate::ensemble::qv_regression;
use crate::error::Result;
use crate::io::fmt_f64;
use crate::manifold::{Chart, ExpansionFactor, Interval, ModelSpec};
use crate::rng::PathRng;
use crate::sde::{
    geodesic_integrate, psd_factor, rk4_step, sectional_coefficients, sectional_increment,
    simulate_path, xi_coefficients, xi_step, DiffusionKind, DiffusionSpec, FrameState, GeodesicConfig, PhaseState,
    RecordPlan, StepConfig,
};
use crate::tensor::{max_abs_rank4, quad, Mat4, Vec4, MAX_N, ZERO_MAT, ZERO_VEC};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Curvature,
    Geodesic,
    Coefficients,
    Sectional,
    Identities,
    Moments,
    Pseudonorm,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Algebra,
        Suite::Curvature,
        Suite::Geodesic,
        Suite::Coefficients,
        Suite::Sectional,
        Suite::Identities,
        Suite::Moments,
        Suite::Pseudonorm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Curvature => "curvature",
            Suite::Geodesic => "geodesic",
            Suite::Coefficients => "coefficients",
            Suite::Sectional => "sectional",
            Suite::Identities => "identities",
            Suite::Moments => "moments",
            Suite::Pseudonorm => "pseudonorm",
            Suite::All => "all",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub suite: &'static str,
    pub check: String,
    /// Worst measured discrepancy (or the measured statistic for range checks).
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, check: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.check == check)
    }

    /// Fixed-width table, one line per check.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<13} {:<36} {:>24} {:>24}  result", "suite", "check", "value", "tolerance");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<13} {:<36} {:>24} {:>24}  {}",
                r.suite,
                r.check,
                fmt_f64(r.value),
                fmt_f64(r.tolerance),
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        let _ = writeln!(out, "seed {}: {} checks, {} failed", self.seed, self.rows.len(), failed);
        out
    }
}

struct Rows {
    suite: &'static str,
    rows: Vec<CheckRow>,
}

impl Rows {
    /// Passes when `value <= tol` (NaN fails).
    fn at_most(&mut self, check: &str, value: f64, tol: f64) {
        self.rows.push(CheckRow { suite: self.suite, check: check.into(), value, tolerance: tol, pass: value <= tol });
    }

    fn flag(&mut self, check: &str, ok: bool) {
        let value = if ok { 0.0 } else { 1.0 };
        self.rows.push(CheckRow { suite: self.suite, check: check.into(), value, tolerance: 0.0, pass: ok });
    }
}

pub fn run_verify(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let mut rows = Vec::new();
    for s in suites {
        // Each suite has its own stream so that selecting one does not change another.
        let stream = Suite::EACH.iter().position(|x| *x == s).unwrap_or(0) as u64;
        let mut rng = PathRng::new(seed, stream);
        let mut r = Rows { suite: s.name(), rows: Vec::new() };
        match s {
            Suite::Algebra => algebra_checks(&mut r, &mut rng)?,
            Suite::Curvature => curvature_checks(&mut r, &mut rng)?,
            Suite::Geodesic => geodesic_checks(&mut r)?,
            Suite::Coefficients => coefficient_checks(&mut r, &mut rng)?,
            Suite::Sectional => sectional_checks(&mut r, &mut rng)?,
            Suite::Identities => identity_checks(&mut r, &mut rng)?,
            Suite::Moments => moment_checks(&mut r, seed)?,
            Suite::Pseudonorm => pseudonorm_checks(&mut r, seed)?,
            Suite::All => unreachable!(),
        }
        rows.extend(r.rows);
    }
    Ok(VerifyReport { seed, rows })
}

// ---------------------------------------------------------------- sampling

/// Unit future-directed velocity with time component `tdot` along a uniformly
/// random spatial direction (orthonormal with respect to the diagonal metric).
pub fn random_velocity(model: &ModelSpec, p: &[f64], tdot: f64, rng: &mut PathRng) -> Result<PhaseState> {
    let n = model.n();
    let g = model.metric_at(p)?.g;
    let mut u = [0.0; MAX_N];
    loop {
        rng.fill_normal(&mut u[1..n], 1.0);
        let norm = u[1..n].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            u.iter_mut().for_each(|x| *x /= norm);
            break;
        }
    }
    let s = (tdot * tdot - 1.0).sqrt();
    let mut v = ZERO_VEC;
    v[0] = tdot;
    for k in 1..n {
        v[k] = s * u[k] / (-g[k][k]).sqrt();
    }
    PhaseState::new(model, p, &v[..n])
}

fn eds_cartesian_point(rng: &mut PathRng, t: (f64, f64)) -> [f64; 4] {
    [rng.uniform(t.0, t.1), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)]
}

fn spherical_point(rng: &mut PathRng, t: (f64, f64), r_max: f64) -> [f64; 4] {
    [rng.uniform(t.0, t.1), rng.uniform(0.1 * r_max, 0.9 * r_max), rng.uniform(0.3, PI - 0.3), rng.uniform(0.0, 2.0 * PI)]
}

fn eds_spherical(c: f64) -> ModelSpec {
    ModelSpec::Eds { c, chart: Chart::Spherical }
}

pub fn rw_model(k: i32) -> ModelSpec {
    ModelSpec::Rw { k, alpha: ExpansionFactor::Power { c: 2.0 / 3.0 }, chart: Chart::Spherical, interval: Interval::default() }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- algebra

fn random_bivector(rng: &mut PathRng, n: usize) -> Bivector {
    let mut acc = Bivector::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            acc = acc.add(&Bivector::basis(n, i, j).scale(rng.uniform(-1.0, 1.0))).expect("same dimension");
        }
    }
    acc
}

fn algebra_checks(r: &mut Rows, rng: &mut PathRng) -> Result<()> {
    let n = 4;
    let lhs = so_bracket(&Bivector::basis(n, 0, 1), &Bivector::basis(n, 0, 2))?;
    r.at_most("bracket_e01_e02", lhs.sub(&Bivector::basis(n, 1, 2))?.max_abs(), 1e-15);

    let (mut jacobi, mut invariance, mut action) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (x, y, z) = (random_bivector(rng, n), random_bivector(rng, n), random_bivector(rng, n));
        let j = so_bracket(&x, &so_bracket(&y, &z)?)?
            .add(&so_bracket(&y, &so_bracket(&z, &x)?)?)?
            .add(&so_bracket(&z, &so_bracket(&x, &y)?)?)?;
        jacobi = jacobi.max(j.max_abs());
        let inv = eta_inner_bivec(&so_bracket(&x, &y)?, &z)? + eta_inner_bivec(&y, &so_bracket(&x, &z)?)?;
        invariance = invariance.max(inv.abs());
        let mut u = crate::algebra::MinkVector::zeros(n);
        let mut v = crate::algebra::MinkVector::zeros(n);
        let mut w = crate::algebra::MinkVector::zeros(n);
        for k in 0..n {
            u[k] = rng.uniform(-1.0, 1.0);
            v[k] = rng.uniform(-1.0, 1.0);
            w[k] = rng.uniform(-1.0, 1.0);
        }
        let direct = wedge_action(&u, &v, &w)?;
        let via_op = Bivector::wedge(&u, &v)?.act(&w)?;
        action = action.max((direct - via_op).amax());
    }
    r.at_most("jacobi_identity", jacobi, 1e-12);
    r.at_most("bracket_invariance", invariance, 1e-12);
    r.at_most("wedge_action_matches_operator", action, 1e-13);
    let mut basis_err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let ip = crate::algebra::eta_inner(&basis(n, i), &basis(n, j))?;
            basis_err = basis_err.max((ip - if i == j { eta_ij(i, i) } else { 0.0 }).abs());
        }
    }
    r.at_most("basis_is_orthonormal", basis_err, 0.0);

    let model = ModelSpec::eds(2.0 / 3.0);
    let (mut gs, mut boosted) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = eds_cartesian_point(rng, (0.5, 3.0));
        let ph = random_velocity(&model, &p, rng.uniform(1.0, 5.0), rng)?;
        let mut vectors = [ZERO_VEC; MAX_N];
        vectors[0] = ph.velocity;
        for (j, v) in vectors.iter_mut().enumerate().skip(1) {
            for x in v.iter_mut() {
                *x = rng.uniform(-1.0, 1.0);
            }
            v[j] += 2.0;
        }
        let frame = gram_schmidt_g(&Frame::new(n, vectors, model.metric_at(&p)?.g)?)?;
        gs = gs.max(frame.orthonormality_error());
        let moved = frame.rotated(&random_bivector(rng, n), 0.3)?;
        boosted = boosted.max(moved.orthonormality_error());
    }
    r.at_most("gram_schmidt_orthonormal", gs, 1e-12);
    r.at_most("frame_action_preserves_orthonormality", boosted, 1e-11);
    Ok(())
}

// ---------------------------------------------------------------- curvature

/// Max over index tuples of the Riemann symmetry and first Bianchi defects.
pub fn riemann_symmetry_defect(pack: &CurvaturePack) -> f64 {
    let n = pack.n;
    let r = &pack.riemann;
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    worst = worst
                        .max((r[a][b][c][d] + r[b][a][c][d]).abs())
                        .max((r[a][b][c][d] + r[a][b][d][c]).abs())
                        .max((r[a][b][c][d] - r[c][d][a][b]).abs())
                        .max((r[a][b][c][d] + r[a][c][d][b] + r[a][d][b][c]).abs());
                }
            }
        }
    }
    worst / max_abs_rank4(r, n).max(f64::MIN_POSITIVE)
}

fn curvature_checks(r: &mut Rows, rng: &mut PathRng) -> Result<()> {
    let models: [(&str, ModelSpec, f64); 6] = [
        ("eds_c0.5", ModelSpec::eds(0.5), 0.0),
        ("eds_c0.667", ModelSpec::eds(2.0 / 3.0), 0.0),
        ("eds_c1", ModelSpec::eds(1.0), 0.0),
        ("rw_k-1", rw_model(-1), -1.0),
        ("rw_k0", rw_model(0), 0.0),
        ("rw_k1", rw_model(1), 1.0),
    ];
    for (name, model, k) in &models {
        let (mut fd, mut sym, mut trace) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..100 {
            let p = match model {
                ModelSpec::Eds { .. } => eds_cartesian_point(rng, (0.5, 3.0)),
                _ => spherical_point(rng, (0.5, 3.0), if *k > 0.0 { 1.0 } else { 2.0 }),
            };
            let closed = chart_curvature(model, &p)?;
            let numeric = chart_curvature_fd(model, &p, FD_STEP)?;
            let scale = max_abs_rank4(&closed.riemann, 4).max(1e-300);
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        for d in 0..4 {
                            fd = fd.max(rel(numeric.riemann[a][b][c][d], closed.riemann[a][b][c][d], scale));
                        }
                    }
                }
            }
            sym = sym.max(riemann_symmetry_defect(&closed));
            let tr: f64 = (0..4).map(|i| (0..4).map(|j| closed.inverse[i][j] * closed.energy_momentum[j][i]).sum::<f64>()).sum();
            trace = trace.max(rel(tr, -closed.scalar, closed.scalar.abs().max(crate::tensor::max_abs_mat(&closed.energy_momentum, 4))));
        }
        r.at_most(&format!("fd_oracle_{name}"), fd, 1e-6);
        r.at_most(&format!("symmetries_bianchi_{name}"), sym, 1e-12);
        r.at_most(&format!("trace_identity_{name}"), trace, 1e-10);
    }

    // Diagonal Ricci of a Robertson-Walker model in the spherical chart.
    let mut ricci = 0.0f64;
    for k in [-1, 0, 1] {
        let model = rw_model(k);
        for _ in 0..50 {
            let p = spherical_point(rng, (0.5, 3.0), if k > 0 { 1.0 } else { 2.0 });
            let pack = chart_curvature(&model, &p)?;
            let (a, a1, a2) = model.alpha_at(p[0]);
            let big_a = a * a2 + 2.0 * a1 * a1 + 2.0 * k as f64;
            let (rr, phi) = (p[1], p[2]);
            let want = [-3.0 * a2 / a, big_a / (1.0 - k as f64 * rr * rr), big_a * rr * rr, big_a * rr * rr * phi.sin().powi(2)];
            let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for i in 0..4 {
                for j in 0..4 {
                    let w = if i == j { want[i] } else { 0.0 };
                    ricci = ricci.max(rel(pack.ricci[i][j], w, scale));
                }
            }
        }
    }
    r.at_most("rw_ricci_diagonal", ricci, 1e-10);

    // Closed-form EdS scalars through the generic pipeline.
    let (mut worst_r, mut worst_q, mut worst_p, mut worst_e) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let c = rng.uniform(0.3, 1.5);
        let t = rng.uniform(0.2, 5.0);
        let tdot = rng.uniform(1.0, 6.0);
        let model = ModelSpec::eds(c);
        let p = [t, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        let pack = chart_curvature(&model, &p)?;
        let fl = perfect_fluid_decompose(&pack);
        let ph = random_velocity(&model, &p, tdot, rng)?;
        let e = energy_at(&pack, &ph.velocity[..4])?;
        let t2 = t * t;
        let want_r = -6.0 * c * (2.0 * c - 1.0) / t2;
        let want_q = 2.0 * c / t2;
        let want_p = (2.0 - 3.0 * c) * c / t2;
        let want_e = c / t2 * (2.0 * tdot * tdot + 3.0 * c - 2.0);
        let scale = c / t2 * (6.0 * c + 6.0);
        worst_r = worst_r.max(rel(pack.scalar, want_r, scale));
        worst_q = worst_q.max(rel(fl.q, want_q, scale));
        worst_p = worst_p.max(rel(fl.p, want_p, scale));
        worst_e = worst_e.max(rel(e, want_e, scale * tdot * tdot));
    }
    r.at_most("eds_scalar_curvature", worst_r, 1e-12);
    r.at_most("eds_fluid_density", worst_q, 1e-12);
    r.at_most("eds_fluid_pressure", worst_p, 1e-12);
    r.at_most("eds_energy", worst_e, 1e-12);
    Ok(())
}

// ---------------------------------------------------------------- geodesics

/// s(t) − s(t₀) along a c = 1/2 geodesic with constant a = √t √(ṫ² − 1).
pub fn half_power_proper_time(t: f64, a: f64) -> f64 {
    let a2 = a * a;
    (t * (t + a2)).sqrt() - a2 * (t.sqrt() + (t + a2).sqrt()).ln()
}

fn geodesic_checks(r: &mut Rows) -> Result<()> {
    let cfg = GeodesicConfig { h: 1e-3, s_max: 100.0, stride: 100 };

    let model = ModelSpec::eds(0.5);
    let init = PhaseState::from_tdot(&model, &[1.0, 0.0, 0.0, 0.0], 2.0, Some(&[1.0, 1.0, 0.0]))?;
    let path = geodesic_integrate(&model, &init, &cfg)?;
    let a = init.t().sqrt() * (init.tdot().powi(2) - 1.0).sqrt();
    let f0 = half_power_proper_time(init.t(), a);
    let mut closed = 0.0f64;
    for smp in path.samples.iter().skip(1) {
        closed = closed.max(rel(half_power_proper_time(smp.t(), a) - f0, smp.s, smp.s));
    }
    r.at_most("half_power_closed_form", closed, 1e-8);

    for c in [0.5, 2.0 / 3.0, 0.9] {
        let model = ModelSpec::eds(c);
        let init = PhaseState::from_tdot(&model, &[1.0, 0.3, 0.0, -0.2], 3.0, Some(&[0.0, 1.0, 1.0]))?;
        let path = geodesic_integrate(&model, &init, &cfg)?;
        let a0 = path.samples[0].a_func;
        let drift = path.samples.iter().filter(|s| s.s >= 1.0).fold(0.0f64, |m, s| m.max((s.a_func / a0 - 1.0).abs()));
        // The closed-form case is held to the tight bound; elsewhere RK4 truncation near t = 1 dominates.
        let tol = if c == 0.5 { 1e-9 } else { 1e-7 };
        r.at_most(&format!("afunc_conserved_c{c:.3}"), drift, tol);
        let pn = path.samples.iter().fold(0.0f64, |m, s| m.max(s.pnorm_err.abs()));
        r.at_most(&format!("pseudo_norm_per_unit_s_c{c:.3}"), pn / cfg.s_max, 1e-10);
    }

    let mink = ModelSpec::minkowski(3);
    let init = PhaseState::from_tdot(&mink, &[0.0, 1.0, 2.0, 3.0], 1.7, Some(&[0.2, -0.4, 0.1]))?;
    let path = geodesic_integrate(&mink, &init, &GeodesicConfig { h: 1e-2, s_max: 10.0, stride: 10 })?;
    let mut line = 0.0f64;
    for smp in &path.samples {
        for k in 0..4 {
            line = line.max((smp.point[k] - (init.point[k] + smp.s * init.velocity[k])).abs());
        }
    }
    r.at_most("minkowski_straight_line", line, 1e-12);
    Ok(())
}

// ---------------------------------------------------------------- coefficient oracles

/// Explicit coefficients of the (ṫ, ṙ) sub-diffusion in the spherical EdS
/// chart: drifts and the noise loadings on (w, w̃), each with a magnitude
/// scale for relative comparison.
#[derive(Clone, Copy, Debug)]
pub struct RadialCoefficients {
    pub tdot_drift: f64,
    pub r_drift: f64,
    /// Loading of dṫ on w.
    pub tdot_noise: f64,
    /// Loadings of dṙ on w and w̃.
    pub r_noise: (f64, f64),
    pub tdot_scale: f64,
    pub r_scale: f64,
}

/// (t, ṫ, r, ṙ) → explicit EdS coefficients for the basic, R and energy diffusions.
pub fn radial_coefficients(kind: DiffusionKind, c: f64, rho: f64, t: f64, tdot: f64, r: f64, rdot: f64) -> RadialCoefficients {
    let w = tdot * tdot - 1.0;
    let t2c = t.powf(2.0 * c);
    let transverse = (1.0 / t2c - rdot * rdot / w).max(0.0).sqrt();
    let centrifugal = (w / t2c - rdot * rdot) / r;
    let friction_t = c / t * w;
    let friction_r = 2.0 * c / t * tdot * rdot;
    let (amp, drift_t, drift_r) = match kind {
        DiffusionKind::Basic => (rho, 1.5 * rho * rho * tdot, 1.5 * rho * rho * rdot),
        DiffusionKind::R => {
            let k = 6.0 * c * (2.0 * c - 1.0);
            (rho * k.sqrt() / t, 9.0 * rho * rho * c * (2.0 * c - 1.0) / (t * t) * tdot, 9.0 * rho * rho * c * (2.0 * c - 1.0) / (t * t) * rdot)
        }
        DiffusionKind::Energy => {
            let k = 2.0 * tdot * tdot - 2.0 + 3.0 * c;
            (
                rho * c.sqrt() / t * k.sqrt(),
                c * 5.0 * rho * rho * (w + 0.9 * c) * tdot / (t * t),
                rho * rho * c * (5.0 * tdot * tdot - 3.0 + 4.5 * c) * rdot / (t * t),
            )
        }
        _ => (0.0, 0.0, 0.0),
    };
    RadialCoefficients {
        tdot_drift: drift_t - friction_t,
        r_drift: drift_r + centrifugal - friction_r,
        tdot_noise: amp * w.sqrt(),
        r_noise: (amp * tdot * rdot / w.sqrt(), amp * transverse),
        tdot_scale: drift_t.abs() + friction_t.abs(),
        r_scale: drift_r.abs() + centrifugal.abs() + friction_r.abs() + (w / t2c + rdot * rdot) / r,
    }
}

/// Max relative discrepancy between the generic coefficients and the explicit
/// radial equations at `count` random spherical EdS phase points.
pub fn coefficient_oracle(kind: DiffusionKind, c: f64, rho: f64, count: usize, rng: &mut PathRng) -> Result<f64> {
    let model = eds_spherical(c);
    let spec = DiffusionSpec::new(kind, rho);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let p = spherical_point(rng, (0.5, 3.0), 2.0);
        let ph = random_velocity(&model, &p, rng.uniform(1.05, 4.0), rng)?;
        let fs = FrameState::from_phase(&model, &ph)?;
        let co = xi_coefficients(&model, &spec, &fs)?;
        let cov = co.velocity_covariance();
        let (t, tdot, r, rdot) = (p[0], ph.velocity[0], p[1], ph.velocity[1]);
        let want = radial_coefficients(kind, c, rho, t, tdot, r, rdot);
        let vt = want.tdot_noise * want.tdot_noise;
        let vr = want.r_noise.0 * want.r_noise.0 + want.r_noise.1 * want.r_noise.1;
        let ctr = want.tdot_noise * want.r_noise.0;
        let noise_scale = vt.max(vr).max(f64::MIN_POSITIVE);
        for (got, exp, scale) in [
            (co.velocity_drift[0], want.tdot_drift, want.tdot_scale),
            (co.velocity_drift[1], want.r_drift, want.r_scale),
            (cov[0][0], vt, vt),
            (cov[1][1], vr, vr),
            (cov[0][1], ctr, noise_scale),
        ] {
            worst = worst.max(rel(got, exp, scale));
        }
    }
    Ok(worst)
}

fn coefficient_checks(r: &mut Rows, rng: &mut PathRng) -> Result<()> {
    for (name, kind) in [("basic", DiffusionKind::Basic), ("r", DiffusionKind::R), ("energy", DiffusionKind::Energy)] {
        let mut worst = 0.0f64;
        for _ in 0..4 {
            let c = rng.uniform(0.5, 1.0);
            let rho = rng.uniform(0.3, 2.0);
            worst = worst.max(coefficient_oracle(kind, c, rho, 25, rng)?);
        }
        r.at_most(&format!("radial_equations_{name}"), worst, 1e-9);
    }

    // Vertical drift of the energy diffusion against 2ρ²c t⁻² (ṫ ξ̇ − U) ṫ.
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c = rng.uniform(0.5, 1.0);
        let rho = rng.uniform(0.3, 2.0);
        let model = ModelSpec::eds(c);
        let p = eds_cartesian_point(rng, (0.5, 3.0));
        let ph = random_velocity(&model, &p, rng.uniform(1.0, 4.0), rng)?;
        let fs = FrameState::from_phase(&model, &ph)?;
        let pack = chart_curvature(&model, &p)?;
        let got = crate::sde::xi_vertical_drift(&DiffusionSpec::new(DiffusionKind::Energy, rho), &pack, &fs)?;
        let (t, tdot) = (p[0], ph.velocity[0]);
        let k = 2.0 * rho * rho * c / (t * t) * tdot;
        for i in 0..4 {
            let u = if i == 0 { 1.0 } else { 0.0 };
            let want = k * (tdot * ph.velocity[i] - u);
            worst = worst.max(rel(got[i], want, k * tdot * tdot));
        }
    }
    r.at_most("energy_vertical_drift", worst, 1e-12);
    Ok(())
}

// ---------------------------------------------------------------- sectional

/// Explicit EdS (Cartesian) sectional generator: drift and the displayed
/// second-order blocks (ṫṫ and spatial). Returned as (b, a) with a = 2 × the
/// operator's second-order coefficient.
pub fn eds_sectional_generator(c: f64, rho: f64, t: f64, v: &Vec4) -> (Vec4, f64, Mat4) {
    let rho2 = rho * rho;
    let tdot = v[0];
    let mut b = ZERO_VEC;
    b[0] = -c / t * (tdot * tdot - 1.0) - 1.5 * rho2 * c / (t * t) * (c - 1.0) * tdot;
    for j in 1..4 {
        b[j] = -2.0 * c / t * tdot * v[j] - rho2 * c * (3.0 * c - 1.0) / (2.0 * t * t) * v[j];
    }
    let a_tt = rho2 * c * (1.0 - c) / (t * t) * (tdot * tdot - 1.0);
    let mut a_xx = ZERO_MAT;
    for i in 1..4 {
        for j in 1..4 {
            let lap = if i == j { rho2 * c / t.powf(2.0 * c + 2.0) * (tdot * tdot - c) } else { 0.0 };
            a_xx[i][j] = lap - rho2 * c * c / (t * t) * v[i] * v[j];
        }
    }
    (b, a_tt, a_xx)
}

fn sectional_checks(r: &mut Rows, rng: &mut PathRng) -> Result<()> {
    let c = 2.0 / 3.0;
    let model = ModelSpec::eds(c);
    let (mut drift, mut tt, mut xx, mut kernel) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let rho = rng.uniform(0.3, 2.0);
        let p = eds_cartesian_point(rng, (0.5, 3.0));
        let ph = random_velocity(&model, &p, rng.uniform(1.0, 4.0), rng)?;
        let pack = chart_curvature(&model, &p)?;
        let (b, a) = sectional_coefficients(&pack, &ph, rho);
        let (wb, wtt, wxx) = eds_sectional_generator(c, rho, p[0], &ph.velocity);
        let bscale = wb.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for k in 0..4 {
            drift = drift.max(rel(b[k], wb[k], bscale));
        }
        let ascale = (1..4).fold(wtt.abs(), |m, i| m.max(wxx[i][i].abs()));
        tt = tt.max(rel(a[0][0], wtt, ascale));
        for i in 1..4 {
            for j in 1..4 {
                xx = xx.max(rel(a[i][j], wxx[i][j], ascale));
            }
        }
        // The velocity covector spans the kernel of a.
        let gv: Vec<f64> = (0..4).map(|k| pack.metric[k][k] * ph.velocity[k]).collect();
        for i in 0..4 {
            let s: f64 = (0..4).map(|j| a[i][j] * gv[j]).sum();
            kernel = kernel.max(s.abs() / (ascale * ph.velocity[0] * ph.velocity[0]));
        }
    }
    r.at_most("generator_drift", drift, 1e-10);
    r.at_most("generator_tdot_tdot", tt, 1e-10);
    r.at_most("generator_spatial_block", xx, 1e-10);
    r.at_most("covariance_kernel_is_velocity", kernel, 1e-10);

    let bad = ModelSpec::eds(1.2);
    r.flag("rejects_c1.2", DiffusionSpec::checked(DiffusionKind::Sectional, 1.0, &bad).is_err());
    let mut psd = false;
    for i in 0..50 {
        let st = PhaseState::from_tdot(&bad, &[1.0, 0.0, 0.0, 0.0], 1.01 + 9.0 * i as f64 / 49.0, None)?;
        let pack = chart_curvature(&bad, &st.point[..4])?;
        let (_, a) = sectional_coefficients(&pack, &st, 1.0);
        if psd_factor(&a, 4, None).is_err() {
            psd = true;
            break;
        }
    }
    r.flag("psd_error_for_c1.2", psd);
    Ok(())
}

// ---------------------------------------------------------------- identities

fn energy_of(model: &ModelSpec, p: &Vec4, v: &Vec4) -> f64 {
    let t = energy_momentum_at(model, &p[..4]).expect("point in chart");
    quad(&t, v, v, 4)
}

/// Covariant derivative ∇_ξ̇ E, by differencing E along the geodesic through
/// (p, v) integrated with RK4 a short proper time each way.
pub fn energy_along_geodesic(model: &ModelSpec, state: &PhaseState, eps: f64) -> Result<f64> {
    let fwd = rk4_step(model, state, eps)?;
    let bwd = rk4_step(model, state, -eps)?;
    Ok((energy_of(model, &fwd.point, &fwd.velocity) - energy_of(model, &bwd.point, &bwd.velocity)) / (2.0 * eps))
}

/// Generator of a Ξ-diffusion applied to E at (p, frame), by finite differences:
/// ξ̇·∂ₓE + b·∂_ξ̇E + ½ Ξ Σⱼ eⱼeⱼ : ∂²_ξ̇E.
pub fn generator_on_energy(model: &ModelSpec, spec: &DiffusionSpec, fs: &FrameState) -> Result<f64> {
    let co = xi_coefficients(model, spec, fs)?;
    let p = fs.point;
    let v = *fs.velocity();
    let shift = |base: &Vec4, dir: &Vec4, s: f64| -> Vec4 {
        let mut o = *base;
        for k in 0..4 {
            o[k] += s * dir[k];
        }
        o
    };
    let hx = 1e-5 * p[0];
    let transport = (energy_of(model, &shift(&p, &v, hx), &v) - energy_of(model, &shift(&p, &v, -hx), &v)) / (2.0 * hx);
    let hv = 1e-3;
    let drift = (energy_of(model, &p, &shift(&v, &co.velocity_drift, hv)) - energy_of(model, &p, &shift(&v, &co.velocity_drift, -hv))) / (2.0 * hv);
    let e0 = energy_of(model, &p, &v);
    let mut second = 0.0;
    for j in 1..4 {
        let ej = &fs.frame.vectors[j];
        second += (energy_of(model, &p, &shift(&v, ej, hv)) - 2.0 * e0 + energy_of(model, &p, &shift(&v, ej, -hv))) / (hv * hv);
    }
    Ok(transport + drift + 0.5 * co.xi * second)
}

/// g(T̃ξ̇, T̃ξ̇) with T̃ξ̇ a covector raised by g⁻¹.
pub fn tv_norm(pack: &CurvaturePack, v: &Vec4) -> f64 {
    let tv = crate::tensor::mat_vec(&pack.energy_momentum, v, 4);
    quad(&pack.inverse, &tv, &tv, 4)
}

fn identity_checks(r: &mut Rows, rng: &mut PathRng) -> Result<()> {
    let d = 3.0;
    let (mut frame_rule, mut boost_sum, mut vje) = (0.0f64, 0.0f64, 0.0f64);
    let (mut drift_basic, mut drift_energy, mut qv_min) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let c = rng.uniform(0.5, 1.0);
        let rho = rng.uniform(0.3, 2.0);
        let model = ModelSpec::eds(c);
        let p = eds_cartesian_point(rng, (0.5, 3.0));
        let ph = random_velocity(&model, &p, rng.uniform(1.0, 4.0), rng)?;
        let fs = FrameState::from_phase(&model, &ph)?;
        let pack = chart_curvature(&model, &p)?;
        let comps = frame_components(&pack, &fs.frame)?;
        let e = comps.t00;

        // Frame derivatives: V_qp acts by u ↦ u·exp(ε e_q∧e_p).
        let eps = 1e-5;
        let rscale = max_abs_rank4(&comps.riemann, 4);
        for q in 0..4 {
            for pp in 0..4 {
                if q == pp {
                    continue;
                }
                let x = Bivector::basis(4, q, pp);
                let plus = frame_components(&pack, &fs.frame.rotated(&x, eps)?)?;
                let minus = frame_components(&pack, &fs.frame.rotated(&x, -eps)?)?;
                let rr = &comps.riemann;
                let low3 = |i: usize, j: usize, m: usize, l: usize| rr[i][j][m][l] * eta_ij(m, m);
                for i in 0..4 {
                    for j in 0..4 {
                        for k in 0..4 {
                            for l in 0..4 {
                                let fd = (plus.riemann[i][j][k][l] - minus.riemann[i][j][k][l]) / (2.0 * eps);
                                let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                                let want = eta_ij(q, i) * rr[pp][j][k][l] - eta_ij(i, pp) * rr[q][j][k][l]
                                    + eta_ij(q, j) * rr[i][pp][k][l]
                                    - eta_ij(j, pp) * rr[i][q][k][l]
                                    + dl(q, k) * low3(i, j, pp, l)
                                    - dl(pp, k) * low3(i, j, q, l)
                                    - dl(q, l) * low3(i, j, pp, k)
                                    + dl(pp, l) * low3(i, j, q, k);
                                frame_rule = frame_rule.max(rel(fd, want, rscale));
                            }
                        }
                    }
                }
            }
        }

        let h2 = 1e-4;
        let mut sum2 = 0.0;
        for j in 1..4 {
            let x = Bivector::basis(4, 0, j);
            let ep = frame_components(&pack, &fs.frame.rotated(&x, h2)?)?.t00;
            let em = frame_components(&pack, &fs.frame.rotated(&x, -h2)?)?.t00;
            sum2 += (ep - 2.0 * e + em) / (h2 * h2);
            let ep1 = frame_components(&pack, &fs.frame.rotated(&x, eps)?)?.t00;
            let em1 = frame_components(&pack, &fs.frame.rotated(&x, -eps)?)?.t00;
            let r0j = comps.ricci[0][j] * eta_ij(j, j);
            vje = vje.max(rel((ep1 - em1) / (2.0 * eps), 2.0 * r0j, e.abs().max(comps.ricci[0][0].abs())));
        }
        let want = 2.0 * (d + 1.0) * e + (d - 1.0) * pack.scalar;
        boost_sum = boost_sum.max(rel(sum2, want, 2.0 * (d + 1.0) * e.abs() + (d - 1.0) * pack.scalar.abs()));

        // Energy drift under the generator.
        let nabla = energy_along_geodesic(&model, &ph, 1e-4)?;
        let basic = DiffusionSpec::new(DiffusionKind::Basic, rho);
        let lhs = generator_on_energy(&model, &basic, &fs)?;
        let rho2 = rho * rho;
        let rhs = nabla + rho2 * ((d + 1.0) * e + 0.5 * (d - 1.0) * pack.scalar);
        let scale = nabla.abs() + rho2 * ((d + 1.0) * e.abs() + 0.5 * (d - 1.0) * pack.scalar.abs());
        drift_basic = drift_basic.max(rel(lhs, rhs, scale));

        let energy = DiffusionSpec::new(DiffusionKind::Energy, rho);
        let lhs = generator_on_energy(&model, &energy, &fs)?;
        let tt = tv_norm(&pack, &ph.velocity);
        let rhs = energy_drift_full(nabla, rho, e, pack.scalar, tt, d);
        let scale = nabla.abs() + rho2 * ((d + 3.0) * e * e + 0.5 * (d - 1.0) * (e * pack.scalar).abs() + 2.0 * tt.abs());
        drift_energy = drift_energy.max(rel(lhs, rhs, scale));
        qv_min = qv_min.min(4.0 * rho2 * (e * e - tt) * e);
    }
    r.at_most("frame_derivative_of_curvature", frame_rule, 1e-5);
    r.at_most("sum_of_second_boosts_of_energy", boost_sum, 1e-4);
    r.at_most("boost_of_energy_is_twice_ricci", vje, 1e-6);
    r.at_most("energy_drift_basic", drift_basic, 1e-4);
    r.at_most("energy_drift_energy_diffusion", drift_energy, 1e-4);
    r.at_most("energy_qv_coefficient_negative_part", (-qv_min).max(0.0), 1e-12);
    Ok(())
}

/// Drift of E_s under the energy diffusion, including the second-order term
/// ½ Ξ (2E + (d−1)R) that the vertical Laplacian contributes.
pub fn energy_drift_full(nabla: f64, rho: f64, e: f64, scalar: f64, tt: f64, d: f64) -> f64 {
    let rho2 = rho * rho;
    nabla + (d + 3.0) * rho2 * e * e + 0.5 * (d - 1.0) * rho2 * e * scalar - 2.0 * rho2 * tt
}

// ---------------------------------------------------------------- moments

/// Sample mean and covariance of `count` one-step velocity increments.
pub fn one_step_moments<F>(count: usize, rng: &mut PathRng, dim_noise: usize, h: f64, mut step: F) -> Result<(Vec4, Mat4)>
where
    F: FnMut(&[f64]) -> Result<Vec4>,
{
    let mut mean = ZERO_VEC;
    let mut m2 = ZERO_MAT;
    let mut noise = [0.0; MAX_N];
    for i in 0..count {
        rng.fill_normal(&mut noise[..dim_noise], h.sqrt());
        let dv = step(&noise[..dim_noise])?;
        // Welford update.
        let k = (i + 1) as f64;
        let mut delta = ZERO_VEC;
        for a in 0..4 {
            delta[a] = dv[a] - mean[a];
            mean[a] += delta[a] / k;
        }
        for a in 0..4 {
            for b in 0..4 {
                m2[a][b] += delta[a] * (dv[b] - mean[b]);
            }
        }
    }
    for row in m2.iter_mut() {
        for x in row.iter_mut() {
            *x /= (count - 1) as f64;
        }
    }
    Ok((mean, m2))
}

/// (max drift error / ‖μ‖∞, max covariance error / √(C_kk C_ll)).
pub fn moment_errors(mean: &Vec4, cov: &Mat4, want_mean: &Vec4, want_cov: &Mat4) -> (f64, f64) {
    let mscale = want_mean.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let drift = (0..4).fold(0.0f64, |m, k| m.max((mean[k] - want_mean[k]).abs() / mscale));
    let mut c = 0.0f64;
    for k in 0..4 {
        for l in 0..4 {
            let s = (want_cov[k][k] * want_cov[l][l]).sqrt();
            if s > 0.0 {
                c = c.max((cov[k][l] - want_cov[k][l]).abs() / s);
            }
        }
    }
    (drift, c)
}

/// Fixed phase points at which the one-step checks resolve the drift.
pub fn moment_scenarios() -> [(&'static str, DiffusionKind, f64, f64, f64, f64); 4] {
    // (name, kind, c, rho, t, tdot)
    [
        ("basic", DiffusionKind::Basic, 2.0 / 3.0, 2.0, 10.0, 2.0),
        ("r", DiffusionKind::R, 0.7, 2.0, 1.0, 1.5),
        ("energy", DiffusionKind::Energy, 2.0 / 3.0, 2.0, 1.0, 1.5),
        ("sectional", DiffusionKind::Sectional, 2.0 / 3.0, 2.0, 1.0, 1.05),
    ]
}

fn moment_checks(r: &mut Rows, seed: u64) -> Result<()> {
    let h = 0.1;
    let count = 100_000;
    for (i, (name, kind, c, rho, t, tdot)) in moment_scenarios().into_iter().enumerate() {
        let model = ModelSpec::eds(c);
        let ph = PhaseState::from_tdot(&model, &[t, 0.1, 0.2, 0.3], tdot, Some(&[0.6, 0.0, 0.8]))?;
        let mut rng = PathRng::new(seed, 100 + i as u64);
        let (mean, cov, want_mean, want_cov) = if kind == DiffusionKind::Sectional {
            let pack = chart_curvature(&model, &ph.point[..4])?;
            let (b, a) = sectional_coefficients(&pack, &ph, rho);
            let (mean, cov) = one_step_moments(count, &mut rng, 4, h, |nz| {
                let next = sectional_increment(&model, &ph, rho, h, nz, None)?;
                Ok(std::array::from_fn(|k| next.velocity[k] - ph.velocity[k]))
            })?;
            (mean, cov, b.map(|x| x * h), a.map(|row| row.map(|x| x * h)))
        } else {
            let spec = DiffusionSpec::new(kind, rho);
            let fs = FrameState::from_phase(&model, &ph)?;
            let co = xi_coefficients(&model, &spec, &fs)?;
            let (mean, cov) = one_step_moments(count, &mut rng, 3, h, |nz| {
                let next = xi_step(&model, &spec, &fs, h, nz, false)?;
                Ok(std::array::from_fn(|k| next.velocity()[k] - fs.velocity()[k]))
            })?;
            let ginv = model.metric_at(&ph.point[..4])?.inv;
            let want_cov = std::array::from_fn(|k| {
                std::array::from_fn(|l| co.xi * (ph.velocity[k] * ph.velocity[l] - ginv[k][l]) * h)
            });
            (mean, cov, co.velocity_drift.map(|x| x * h), want_cov)
        };
        let (dm, dc) = moment_errors(&mean, &cov, &want_mean, &want_cov);
        r.at_most(&format!("one_step_drift_{name}"), dm, 0.02);
        r.at_most(&format!("one_step_covariance_{name}"), dc, 0.02);
    }

    let model = ModelSpec::eds(2.0 / 3.0);
    let spec = DiffusionSpec::new(DiffusionKind::Basic, 0.5);
    let init = PhaseState::from_tdot(&model, &[1.0, 0.0, 0.0, 0.0], 2.0, None)?;
    let fs = FrameState::from_phase(&model, &init)?;
    let path = simulate_path(&model, &spec, &fs, &StepConfig::new(1e-4, 10.0), &RecordPlan::every(1), seed)?;
    let fit = qv_regression(&path, 100)?;
    r.at_most("qv_slope_basic", (fit.slope - 1.0).abs(), 0.05);
    Ok(())
}

// ---------------------------------------------------------------- pseudo-norm

/// Configuration of the step-halving check on the unrenormalized pseudo-norm.
pub const PNORM_C: f64 = 0.7;
pub const PNORM_TDOT: f64 = 5.0;
pub const PNORM_H: f64 = 1e-2;
pub const PNORM_HORIZON: f64 = 10.0;

/// max_s |g(ξ̇,ξ̇) − 1| over [0, horizon] for R-diffusion Euler paths at h and
/// h/2 driven by the same Brownian path; returns one pair per seed.
pub fn pseudonorm_drifts(seed: u64, n_seeds: u64) -> Result<Vec<(f64, f64)>> {
    let model = ModelSpec::eds(PNORM_C);
    let spec = DiffusionSpec::new(DiffusionKind::R, 1.0);
    let init = FrameState::from_phase(&model, &PhaseState::from_tdot(&model, &[1.0, 0.0, 0.0, 0.0], PNORM_TDOT, None)?)?;
    let fine_h = PNORM_H / 2.0;
    let n_fine = (PNORM_HORIZON / fine_h).round() as usize;
    let mut out = Vec::new();
    for k in 0..n_seeds {
        let mut rng = PathRng::new(seed, 1000 + k);
        let mut fine = vec![[0.0; 3]; n_fine];
        for w in fine.iter_mut() {
            rng.fill_normal(w, fine_h.sqrt());
        }
        let run = |h: f64, group: usize| -> Result<f64> {
            let mut st = init.clone();
            let mut worst = 0.0f64;
            for chunk in fine.chunks(group) {
                let mut nz = [0.0; 3];
                for w in chunk {
                    for j in 0..3 {
                        nz[j] += w[j];
                    }
                }
                st = xi_step(&model, &spec, &st, h, &nz, false)?;
                worst = worst.max(st.pnorm_err().abs());
            }
            Ok(worst)
        };
        out.push((run(PNORM_H, 2)?, run(fine_h, 1)?));
    }
    Ok(out)
}

fn pseudonorm_checks(r: &mut Rows, seed: u64) -> Result<()> {
    let pairs = pseudonorm_drifts(seed, 20)?;
    let coarse: f64 = pairs.iter().map(|p| p.0).sum();
    let fine: f64 = pairs.iter().map(|p| p.1).sum();
    let ratio = fine / coarse;
    r.rows.push(CheckRow {
        suite: r.suite,
        check: "halving_ratio_in_0.3_0.7".into(),
        value: ratio,
        tolerance: 0.7,
        pass: (0.3..=0.7).contains(&ratio),
    });

    // With renormalization every step the constraint holds to round-off.
    let model = ModelSpec::eds(0.7);
    let spec = DiffusionSpec::new(DiffusionKind::R, 1.0);
    let mut st = FrameState::from_phase(&model, &PhaseState::from_tdot(&model, &[1.0, 0.1, 0.2, 0.3], 3.0, Some(&[1.0, -1.0, 0.5]))?)?;
    let mut rng = PathRng::new(seed, 2000);
    let (mut pn, mut consistency) = (0.0f64, 0.0f64);
    let mut nz = [0.0; 3];
    for _ in 0..2000 {
        rng.fill_normal(&mut nz, 0.01f64.sqrt());
        st = xi_step(&model, &spec, &st, 0.01, &nz, true)?;
        pn = pn.max(st.pnorm_err().abs());
        let ginv = model.metric_at(&st.point[..4])?.inv;
        let e = &st.frame.vectors;
        let scale = e[0][0] * e[0][0];
        for k in 0..4 {
            for l in 0..4 {
                let lhs: f64 = (1..4).map(|j| e[j][k] * e[j][l]).sum();
                consistency = consistency.max((lhs - (e[0][k] * e[0][l] - ginv[k][l])).abs() / scale);
            }
        }
    }
    r.at_most("renormalized_pseudo_norm", pn, 1e-12);
    r.at_most("frame_consistency", consistency, 1e-10);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_are_reproducible_and_pass() {
        let a = run_verify(Suite::Sectional, 3).unwrap();
        let b = run_verify(Suite::Sectional, 3).unwrap();
        assert_eq!(a.render(), b.render());
        assert!(a.passed(), "{}", a.render());
    }

    #[test]
    fn half_power_closed_form_is_monotone() {
        let a = 1.5;
        assert!(half_power_proper_time(2.0, a) > half_power_proper_time(1.0, a));
    }
}
