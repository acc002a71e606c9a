//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line and
//! fails when the criterion does. Oracles here are written out independently
//! of the library's own checks.

use std::f64::consts::PI;

use rdiff::curvature::{chart_curvature, chart_curvature_fd, energy_at, perfect_fluid_decompose, FD_STEP};
use rdiff::ensemble::{
    qv_regression, run_ensemble, test_afunc_divergence, test_energy_dichotomy, test_space_convergence,
    test_tdot_to_one,
};
use rdiff::gates;
use rdiff::manifold::{Chart, ExpansionFactor, Interval, ModelSpec};
use rdiff::rng::PathRng;
use rdiff::sde::{
    geodesic_integrate, sectional_coefficients, simulate_path, xi_coefficients, xi_step, DiffusionKind,
    DiffusionSpec, FrameState, GeodesicConfig, PhaseState, RecordPlan, StepConfig,
};
use rdiff::tensor::{Mat4, Vec4};
use rdiff::verify::{pseudonorm_drifts, run_verify, Suite};

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale
}

/// Unit velocity with time component `tdot` along a random spatial direction,
/// built from the diagonal metric.
fn random_phase(model: &ModelSpec, p: &[f64], tdot: f64, rng: &mut PathRng) -> PhaseState {
    let g = model.metric_at(p).unwrap().g;
    let mut u = [0.0; 3];
    rng.fill_normal(&mut u, 1.0);
    let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let s = (tdot * tdot - 1.0).sqrt();
    let mut v = [tdot, 0.0, 0.0, 0.0];
    for k in 1..4 {
        v[k] = s * u[k - 1] / norm / (-g[k][k]).sqrt();
    }
    PhaseState::new(model, p, &v).unwrap()
}

fn cartesian_point(rng: &mut PathRng) -> [f64; 4] {
    [rng.uniform(0.5, 3.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)]
}

#[test]
fn criterion_01_curvature_oracle() {
    let rw = |k| ModelSpec::Rw {
        k,
        alpha: ExpansionFactor::Power { c: 2.0 / 3.0 },
        chart: Chart::Spherical,
        interval: Interval::default(),
    };
    let models = [ModelSpec::eds(0.5), ModelSpec::eds(2.0 / 3.0), ModelSpec::eds(1.0), rw(-1), rw(0), rw(1)];
    let mut rng = PathRng::new(101, 0);
    let mut worst = 0.0f64;
    for model in &models {
        for _ in 0..100 {
            let p = match model {
                ModelSpec::Rw { k: 1, .. } => [rng.uniform(0.5, 3.0), rng.uniform(0.1, 0.9), rng.uniform(0.3, PI - 0.3), 1.0],
                ModelSpec::Rw { .. } => [rng.uniform(0.5, 3.0), rng.uniform(0.2, 2.0), rng.uniform(0.3, PI - 0.3), 1.0],
                _ => cartesian_point(&mut rng),
            };
            let a = chart_curvature(model, &p).unwrap();
            let b = chart_curvature_fd(model, &p, FD_STEP).unwrap();
            let scale = a.riemann.iter().flatten().flatten().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            for (x, y) in a.riemann.iter().flatten().flatten().flatten().zip(b.riemann.iter().flatten().flatten().flatten()) {
                worst = worst.max(rel(*x, *y, scale));
            }
        }
    }
    report(1, worst < 1e-6, format!("max relative error {worst:.3e} over 600 points"));
}

#[test]
fn criterion_02_eds_scalars() {
    let mut rng = PathRng::new(102, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (c, t, tdot) = (rng.uniform(0.3, 1.5), rng.uniform(0.2, 5.0), rng.uniform(1.0, 6.0));
        let model = ModelSpec::eds(c);
        let p = [t, 0.3, -0.2, 0.1];
        let pack = chart_curvature(&model, &p).unwrap();
        let fluid = perfect_fluid_decompose(&pack);
        let v = PhaseState::from_tdot(&model, &p, tdot, Some(&[1.0, 2.0, -1.0])).unwrap();
        let e = energy_at(&pack, &v.velocity).unwrap();
        let t2 = t * t;
        let pairs = [
            (pack.scalar, -6.0 * c * (2.0 * c - 1.0) / t2, 6.0 * c * (2.0 * c + 1.0) / t2),
            (fluid.q, 2.0 * c / t2, 2.0 * c / t2),
            (fluid.p, (2.0 - 3.0 * c) * c / t2, (2.0 + 3.0 * c) * c / t2),
            (e, c / t2 * (2.0 * tdot * tdot + 3.0 * c - 2.0), c / t2 * (2.0 * tdot * tdot + 3.0 * c + 2.0)),
        ];
        for (got, want, scale) in pairs {
            worst = worst.max(rel(got, want, scale));
        }
    }
    report(2, worst < 1e-12, format!("max relative error {worst:.3e} over 1000 samples"));
}

#[test]
fn criterion_03_geodesic_closed_form() {
    let model = ModelSpec::eds(0.5);
    let init = PhaseState::from_tdot(&model, &[1.0, 0.0, 0.0, 0.0], 3.0, Some(&[1.0, 0.0, 1.0])).unwrap();
    let path = geodesic_integrate(&model, &init, &GeodesicConfig { h: 1e-3, s_max: 100.0, stride: 50 }).unwrap();
    let a = init.t().sqrt() * (init.tdot().powi(2) - 1.0).sqrt();
    let f = |t: f64| (t * (t + a * a)).sqrt() - a * a * (t.sqrt() + (t + a * a).sqrt()).ln();
    let (mut worst_s, mut worst_a) = (0.0f64, 0.0f64);
    for smp in path.samples.iter().skip(1) {
        worst_s = worst_s.max(rel(f(smp.t()) - f(init.t()), smp.s, smp.s));
        let a_s = smp.t().sqrt() * (smp.tdot().powi(2) - 1.0).sqrt();
        worst_a = worst_a.max(rel(a_s, a, a));
    }
    report(
        3,
        worst_s <= 1e-8 && worst_a <= 1e-9,
        format!("proper time error {worst_s:.3e}, a_s drift {worst_a:.3e}"),
    );
}

/// Drifts and noise loadings of the (ṫ, ṙ) equations in the spherical chart.
fn radial_oracle(kind: DiffusionKind, c: f64, rho: f64, t: f64, tdot: f64, r: f64, rdot: f64) -> ([f64; 2], [f64; 3], [f64; 2]) {
    let w = tdot * tdot - 1.0;
    let t2c = t.powf(2.0 * c);
    let geo_t = -c / t * w;
    let geo_r = (w / t2c - rdot * rdot) / r - 2.0 * c / t * tdot * rdot;
    let r2 = rho * rho;
    let (amp, dt, dr) = match kind {
        DiffusionKind::Basic => (rho, 1.5 * r2 * tdot, 1.5 * r2 * rdot),
        DiffusionKind::R => {
            let f = 9.0 * r2 * c * (2.0 * c - 1.0) / (t * t);
            (rho * (6.0 * c * (2.0 * c - 1.0)).sqrt() / t, f * tdot, f * rdot)
        }
        DiffusionKind::Energy => (
            rho * c.sqrt() / t * (2.0 * w + 3.0 * c).sqrt(),
            5.0 * r2 * c * (w + 0.9 * c) * tdot / (t * t),
            r2 * c * (5.0 * tdot * tdot - 3.0 + 4.5 * c) * rdot / (t * t),
        ),
        _ => unreachable!(),
    };
    // dṫ = amp √w dw; dṙ = amp [ṫṙ/√w dw + √(t^{-2c} − ṙ²/w) dw̃].
    let n_t = amp * w.sqrt();
    let n_r1 = amp * tdot * rdot / w.sqrt();
    let n_r2 = amp * (1.0 / t2c - rdot * rdot / w).sqrt();
    let scale_t = dt.abs() + geo_t.abs();
    let scale_r = dr.abs() + geo_r.abs() + (w / t2c + rdot * rdot) / r;
    ([dt + geo_t, dr + geo_r], [n_t * n_t, n_t * n_r1, n_r1 * n_r1 + n_r2 * n_r2], [scale_t, scale_r])
}

#[test]
fn criterion_04_coefficient_oracles() {
    let mut rng = PathRng::new(104, 0);
    let mut worst = [0.0f64; 3];
    for (i, kind) in [DiffusionKind::Basic, DiffusionKind::R, DiffusionKind::Energy].into_iter().enumerate() {
        for _ in 0..100 {
            let c = rng.uniform(0.5, 1.0);
            let rho = rng.uniform(0.3, 2.0);
            let model = ModelSpec::Eds { c, chart: Chart::Spherical };
            let p = [rng.uniform(0.5, 3.0), rng.uniform(0.2, 2.0), rng.uniform(0.3, PI - 0.3), rng.uniform(0.0, 6.0)];
            let ph = random_phase(&model, &p, rng.uniform(1.05, 4.0), &mut rng);
            let co = xi_coefficients(&model, &DiffusionSpec::new(kind, rho), &FrameState::from_phase(&model, &ph).unwrap()).unwrap();
            let cov = co.velocity_covariance();
            let (drift, noise, scale) = radial_oracle(kind, c, rho, p[0], ph.velocity[0], p[1], ph.velocity[1]);
            let nscale = noise[0].max(noise[2]);
            for (got, want, s) in [
                (co.velocity_drift[0], drift[0], scale[0]),
                (co.velocity_drift[1], drift[1], scale[1]),
                (cov[0][0], noise[0], noise[0]),
                (cov[0][1], noise[1], nscale),
                (cov[1][1], noise[2], noise[2]),
            ] {
                worst[i] = worst[i].max(rel(got, want, s));
            }
        }
    }
    let pass = worst.iter().all(|w| *w <= 1e-9);
    report(4, pass, format!("basic {:.3e}, R {:.3e}, energy {:.3e}", worst[0], worst[1], worst[2]));
}

#[test]
fn criterion_05_sectional_generator() {
    let c = 2.0 / 3.0;
    let model = ModelSpec::eds(c);
    let mut rng = PathRng::new(105, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let rho = rng.uniform(0.3, 2.0);
        let p = cartesian_point(&mut rng);
        let ph = random_phase(&model, &p, rng.uniform(1.0, 4.0), &mut rng);
        let (b, a) = sectional_coefficients(&chart_curvature(&model, &p).unwrap(), &ph, rho);
        let (t, v, r2) = (p[0], ph.velocity, rho * rho);
        let tdot = v[0];
        let mut want_b = [0.0; 4];
        want_b[0] = -c / t * (tdot * tdot - 1.0) - 1.5 * r2 * c / (t * t) * (c - 1.0) * tdot;
        for j in 1..4 {
            want_b[j] = -2.0 * c / t * tdot * v[j] - r2 * c * (3.0 * c - 1.0) / (2.0 * t * t) * v[j];
        }
        let bscale = want_b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for k in 0..4 {
            worst = worst.max(rel(b[k], want_b[k], bscale));
        }
        let a_tt = r2 * c * (1.0 - c) / (t * t) * (tdot * tdot - 1.0);
        let lap = r2 * c / t.powf(2.0 * c + 2.0) * (tdot * tdot - c);
        let ascale = a_tt.abs().max(lap.abs());
        worst = worst.max(rel(a[0][0], a_tt, ascale));
        for i in 1..4 {
            for j in 1..4 {
                let want = if i == j { lap } else { 0.0 } - r2 * c * c / (t * t) * v[i] * v[j];
                worst = worst.max(rel(a[i][j], want, ascale));
            }
        }
        // Mixed ṫẋ block: fixed by the velocity covector lying in the kernel.
        for j in 1..4 {
            worst = worst.max(rel(a[0][j], r2 * c * (1.0 - c) * tdot * v[j] / (t * t), ascale));
        }
    }
    let rejected = DiffusionSpec::checked(DiffusionKind::Sectional, 1.0, &ModelSpec::eds(1.2)).is_err();
    report(5, worst <= 1e-10 && rejected, format!("max relative error {worst:.3e}, c = 1.2 rejected: {rejected}"));
}

/// Expected one-step drift of ξ̇ per unit time at an EdS phase point.
fn expected_drift(kind: DiffusionKind, c: f64, rho: f64, p: &[f64; 4], v: &Vec4) -> (Vec4, f64) {
    let t = p[0];
    let r2 = rho * rho;
    let x2: f64 = v[1..].iter().map(|x| x * x).sum();
    let mut geo = [-c * t.powf(2.0 * c - 1.0) * x2, 0.0, 0.0, 0.0];
    for j in 1..4 {
        geo[j] = -2.0 * c / t * v[0] * v[j];
    }
    let q = 2.0 * c / (t * t);
    let pr = (2.0 - 3.0 * c) * c / (t * t);
    let energy = q * v[0] * v[0] - pr;
    let (xi, extra): (f64, Vec4) = match kind {
        DiffusionKind::Basic => (r2, std::array::from_fn(|k| 1.5 * r2 * v[k])),
        DiffusionKind::R => {
            let xi = r2 * 6.0 * c * (2.0 * c - 1.0) / (t * t);
            (xi, std::array::from_fn(|k| 1.5 * xi * v[k]))
        }
        DiffusionKind::Energy => {
            // (d/2 + 1) ρ²E ξ̇ − ρ² T̃ξ̇ with T̃ξ̇ = q ṫ ∂_t − p ξ̇.
            (r2 * energy, std::array::from_fn(|k| 2.5 * r2 * energy * v[k] - r2 * ((if k == 0 { q * v[0] } else { 0.0 }) - pr * v[k])))
        }
        _ => unreachable!(),
    };
    (std::array::from_fn(|k| geo[k] + extra[k]), xi)
}

#[test]
fn criterion_06_one_step_moments() {
    let h: f64 = 0.1;
    let count = 100_000;
    let cases = [
        (DiffusionKind::Basic, 2.0 / 3.0, 2.0, 10.0, 2.0),
        (DiffusionKind::R, 0.7, 2.0, 1.0, 1.5),
        (DiffusionKind::Energy, 2.0 / 3.0, 2.0, 1.0, 1.5),
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for (i, (kind, c, rho, t, tdot)) in cases.into_iter().enumerate() {
        let model = ModelSpec::eds(c);
        let p = [t, 0.1, 0.2, 0.3];
        let ph = PhaseState::from_tdot(&model, &p, tdot, Some(&[0.6, 0.0, 0.8])).unwrap();
        let fs = FrameState::from_phase(&model, &ph).unwrap();
        let spec = DiffusionSpec::new(kind, rho);
        let mut rng = PathRng::new(106, i as u64);
        let (mut s1, mut s2) = ([0.0; 4], [[0.0; 4]; 4]);
        let mut nz = [0.0; 3];
        for _ in 0..count {
            rng.fill_normal(&mut nz, h.sqrt());
            let next = xi_step(&model, &spec, &fs, h, &nz, false).unwrap();
            let dv: Vec4 = std::array::from_fn(|k| next.velocity()[k] - ph.velocity[k]);
            for a in 0..4 {
                s1[a] += dv[a];
                for b in 0..4 {
                    s2[a][b] += dv[a] * dv[b];
                }
            }
        }
        let n = count as f64;
        let mean: Vec4 = s1.map(|x| x / n);
        let cov: Mat4 = std::array::from_fn(|a| std::array::from_fn(|b| (s2[a][b] - n * mean[a] * mean[b]) / (n - 1.0)));
        let (drift, xi) = expected_drift(kind, c, rho, &p, &ph.velocity);
        let ginv_diag = [1.0, -t.powf(-2.0 * c), -t.powf(-2.0 * c), -t.powf(-2.0 * c)];
        let want_cov: Mat4 = std::array::from_fn(|a| {
            std::array::from_fn(|b| xi * h * (ph.velocity[a] * ph.velocity[b] - if a == b { ginv_diag[a] } else { 0.0 }))
        });
        let mscale = drift.iter().fold(0.0f64, |m, x| m.max(x.abs())) * h;
        let dm = (0..4).fold(0.0f64, |m, k| m.max((mean[k] - drift[k] * h).abs() / mscale));
        let mut dc = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                dc = dc.max((cov[a][b] - want_cov[a][b]).abs() / (want_cov[a][a] * want_cov[b][b]).sqrt());
            }
        }
        pass &= dm <= 0.02 && dc <= 0.02;
        lines.push(format!("{}: drift {dm:.3e} cov {dc:.3e}", kind.name()));
    }
    report(6, pass, lines.join("; "));
}

#[test]
fn criterion_07_qv_regression() {
    let model = ModelSpec::eds(2.0 / 3.0);
    let spec = DiffusionSpec::new(DiffusionKind::Basic, 0.5);
    let init = FrameState::from_phase(&model, &PhaseState::from_tdot(&model, &[1.0, 0.0, 0.0, 0.0], 2.0, None).unwrap()).unwrap();
    let path = simulate_path(&model, &spec, &init, &StepConfig::new(1e-4, 10.0), &RecordPlan::every(1), 107).unwrap();
    let fit = qv_regression(&path, 100).unwrap();
    report(
        7,
        (0.95..=1.05).contains(&fit.slope),
        format!("slope {:.4} over {} increments, r^2 {:.3}", fit.slope, fit.n_increments, fit.r_squared),
    );
}

/// E at an EdS point for a not-necessarily-unit chart vector: q ṫ² − p g(v, v).
fn energy_offshell(c: f64, p: &Vec4, v: &Vec4) -> f64 {
    let t = p[0];
    let q = 2.0 * c / (t * t);
    let pr = (2.0 - 3.0 * c) * c / (t * t);
    let gvv = v[0] * v[0] - t.powf(2.0 * c) * (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    q * v[0] * v[0] - pr * gvv
}

/// Generator of the diffusion applied to E by central differences.
fn generator_fd(model: &ModelSpec, c: f64, spec: &DiffusionSpec, fs: &FrameState) -> f64 {
    let co = xi_coefficients(model, spec, fs).unwrap();
    let (p, v) = (fs.point, *fs.velocity());
    let e = |p: &Vec4, v: &Vec4| energy_offshell(c, p, v);
    let mv = |a: &Vec4, d: &Vec4, s: f64| -> Vec4 { std::array::from_fn(|k| a[k] + s * d[k]) };
    let hx = 1e-5 * p[0];
    let hv = 1e-3;
    let mut out = (e(&mv(&p, &v, hx), &v) - e(&mv(&p, &v, -hx), &v)) / (2.0 * hx);
    out += (e(&p, &mv(&v, &co.velocity_drift, hv)) - e(&p, &mv(&v, &co.velocity_drift, -hv))) / (2.0 * hv);
    for j in 1..4 {
        let ej = fs.frame.vectors[j];
        out += 0.5 * co.xi * (e(&p, &mv(&v, &ej, hv)) - 2.0 * e(&p, &v) + e(&p, &mv(&v, &ej, -hv))) / (hv * hv);
    }
    out
}

#[test]
fn criterion_08_energy_drift_identities() {
    let d = 3.0;
    let mut rng = PathRng::new(108, 0);
    let (mut basic, mut energy_stated, mut qv_min) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let c = rng.uniform(0.5, 1.0);
        let rho = rng.uniform(0.3, 2.0);
        let r2 = rho * rho;
        let model = ModelSpec::eds(c);
        let p = cartesian_point(&mut rng);
        let ph = random_phase(&model, &p, rng.uniform(1.0, 4.0), &mut rng);
        let fs = FrameState::from_phase(&model, &ph).unwrap();
        let (t, tdot) = (p[0], ph.velocity[0]);
        let e = c / (t * t) * (2.0 * tdot * tdot + 3.0 * c - 2.0);
        let scalar = -6.0 * c * (2.0 * c - 1.0) / (t * t);
        // Along a geodesic ṫ' = −(c/t)(ṫ² − 1).
        let nabla = -2.0 * c / t.powi(3) * (2.0 * tdot * tdot + 3.0 * c - 2.0) * tdot
            + 4.0 * c * tdot / (t * t) * (-(c / t) * (tdot * tdot - 1.0));
        // g(T̃ξ̇, T̃ξ̇) with T̃ξ̇ = q ṫ ∂_t − p ξ̇.
        let (q, pr) = (2.0 * c / (t * t), (2.0 - 3.0 * c) * c / (t * t));
        let tt = q * q * tdot * tdot - 2.0 * q * pr * tdot * tdot + pr * pr;

        let lhs = generator_fd(&model, c, &DiffusionSpec::new(DiffusionKind::Basic, rho), &fs);
        let rhs = nabla + r2 * ((d + 1.0) * e + 0.5 * (d - 1.0) * scalar);
        basic = basic.max(rel(lhs, rhs, nabla.abs() + r2 * ((d + 1.0) * e + 0.5 * (d - 1.0) * scalar.abs())));

        let lhs = generator_fd(&model, c, &DiffusionSpec::new(DiffusionKind::Energy, rho), &fs);
        let stated = nabla + (d + 2.0) * r2 * e * e - 2.0 * r2 * tt;
        energy_stated = energy_stated.max(rel(lhs, stated, nabla.abs() + r2 * ((d + 2.0) * e * e + 2.0 * tt)));
        qv_min = qv_min.min(4.0 * r2 * (e * e - tt) * e);
    }
    let pass = basic <= 1e-4 && energy_stated <= 1e-4 && qv_min >= -1e-12;
    report(
        8,
        pass,
        format!("basic drift {basic:.3e}, energy drift vs stated form {energy_stated:.3e}, min QV coefficient {qv_min:.3e}"),
    );
}

#[test]
fn criterion_09_r_diffusion_asymptotics() {
    let stats = run_ensemble(&gates::r_long_run(gates::GROUP_SIZE, gates::ENFORCED_SEED)).unwrap();
    let verdicts = [
        test_tdot_to_one(&stats, gates::R_TDOT_BAND),
        test_afunc_divergence(&stats),
        test_space_convergence(&stats, gates::R_SHRINK),
    ];
    let pass = verdicts.iter().all(|v| v.ok()) && verdicts[1].label.is_none();
    let detail = verdicts.iter().map(|v| format!("{} {:?}: {}", v.name, v.outcome, v.detail)).collect::<Vec<_>>().join("; ");
    report(9, pass, detail);
}

#[test]
fn criterion_10_energy_dichotomy() {
    let a = run_ensemble(&gates::dichotomy_explode(400, gates::ENFORCED_SEED)).unwrap();
    let b = run_ensemble(&gates::dichotomy_settle(400, gates::ENFORCED_SEED)).unwrap();
    let v = test_energy_dichotomy(&a, &b, &gates::dichotomy_gates());
    report(10, v.ok() && a.explosion.wilson_low >= 0.70, v.detail);
}

#[test]
fn criterion_11_step_halving() {
    let pairs = pseudonorm_drifts(111, 20).unwrap();
    let coarse: f64 = pairs.iter().map(|p| p.0).sum();
    let fine: f64 = pairs.iter().map(|p| p.1).sum();
    let ratio = fine / coarse;
    report(11, (0.3..=0.7).contains(&ratio), format!("mean max drift ratio {ratio:.4} over 20 seeds"));
}

#[test]
fn criterion_12_determinism() {
    let a = run_verify(Suite::All, 7).unwrap().render();
    let b = run_verify(Suite::All, 7).unwrap().render();
    let mut cfg = gates::r_long_run(24, 12);
    cfg.step.s_max = 20.0;
    cfg.snapshots = vec![5.0, 10.0, 20.0];
    cfg.threads = Some(1);
    let one = rdiff::io::to_json(&run_ensemble(&cfg).unwrap());
    cfg.threads = Some(3);
    let three = rdiff::io::to_json(&run_ensemble(&cfg).unwrap());
    // The config echo records the worker count, so compare everything else.
    let strip = |s: &str| s.lines().filter(|l| !l.contains("\"threads\"")).collect::<Vec<_>>().join("\n");
    let same_report = a == b;
    let same_ensemble = strip(&one) == strip(&three);
    report(12, same_report && same_ensemble, format!("verify reports identical: {same_report}, ensembles identical across 1 and 3 workers: {same_ensemble}"));
}
