//! Chart curvature of the catalog models.
//!
//! Convention: R̃_{mnpq} = g_{mr}(Γ^r_{ps}Γ^s_{nq} − Γ^r_{qs}Γ^s_{np} + ∂_pΓ^r_{nq} − ∂_qΓ^r_{np}),
//! Ricci R̃_{mp} = R̃_{mnpq} g^{nq}, scalar R = R̃_{ij} g^{ij} and energy-momentum
//! T̃ = Ric − ½ R g. With signature (+,−,…,−) this makes the energy density of
//! an expanding dust universe positive.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{eta_ij, Frame};
use crate::error::{Error, Result};
use crate::manifold::{inverse_metric, ModelSpec, RiemannFactor};
use crate::tensor::{
    quad, Gamma, Mat4, Rank4, Vec4, ZERO_GAMMA, ZERO_MAT, ZERO_RANK4, ZERO_VEC,
};

/// Default step of the finite-difference curvature path.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct CurvaturePack {
    pub n: usize,
    pub point: Vec4,
    pub metric: Mat4,
    pub inverse: Mat4,
    pub christoffel: Gamma,
    pub riemann: Rank4,
    pub ricci: Mat4,
    pub scalar: f64,
    pub energy_momentum: Mat4,
}

fn assemble(n: usize, point: Vec4, metric: Mat4, inverse: Mat4, christoffel: Gamma, riemann: Rank4) -> CurvaturePack {
    let mut ricci = ZERO_MAT;
    for m in 0..n {
        for p in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += riemann[m][a][p][b] * inverse[a][b];
                }
            }
            ricci[m][p] = acc;
        }
    }
    let mut scalar = 0.0;
    for i in 0..n {
        for j in 0..n {
            scalar += ricci[i][j] * inverse[i][j];
        }
    }
    let energy_momentum = einstein(&ricci, scalar, &metric, n);
    CurvaturePack { n, point, metric, inverse, christoffel, riemann, ricci, scalar, energy_momentum }
}

fn einstein(ricci: &Mat4, scalar: f64, metric: &Mat4, n: usize) -> Mat4 {
    let mut t = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            t[i][j] = ricci[i][j] - 0.5 * scalar * metric[i][j];
        }
    }
    t
}

/// Curvature at a chart point from the warped-product closed forms.
pub fn chart_curvature(model: &ModelSpec, p: &[f64]) -> Result<CurvaturePack> {
    let m = model.metric_at(p)?;
    let point = crate::manifold::point(p);
    let gamma = model.christoffel_unchecked(p);
    let riemann = model.riemann_closed(p);
    Ok(assemble(m.n, point, m.g, m.inv, gamma, riemann))
}

/// Curvature assembled from Christoffel symbols and their central differences.
pub fn chart_curvature_fd(model: &ModelSpec, p: &[f64], step: f64) -> Result<CurvaturePack> {
    let m = model.metric_at(p)?;
    let n = m.n;
    let point = crate::manifold::point(p);
    let gamma = model.christoffel_unchecked(p);
    // dgamma[s][r][i][j] = ∂_s Γ^r_{ij}
    let mut dgamma = [ZERO_GAMMA; 4];
    for s in 0..n {
        let mut plus = point;
        let mut minus = point;
        let hstep = step * p[s].abs().max(1.0);
        plus[s] += hstep;
        minus[s] -= hstep;
        let gp = model.christoffel_unchecked(&plus[..n]);
        let gm = model.christoffel_unchecked(&minus[..n]);
        for r in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dgamma[s][r][i][j] = (gp[r][i][j] - gm[r][i][j]) / (2.0 * hstep);
                }
            }
        }
    }
    let riemann = riemann_from_connection(n, &m.g, &gamma, &dgamma);
    Ok(assemble(n, point, m.g, m.inv, gamma, riemann))
}

fn riemann_from_connection(n: usize, g: &Mat4, gamma: &Gamma, dgamma: &[Gamma; 4]) -> Rank4 {
    // Mixed tensor R^r_{npq} first.
    let mut mixed = ZERO_RANK4;
    for r in 0..n {
        for nn in 0..n {
            for p in 0..n {
                for q in 0..n {
                    let mut acc = dgamma[p][r][nn][q] - dgamma[q][r][nn][p];
                    for s in 0..n {
                        acc += gamma[r][p][s] * gamma[s][nn][q] - gamma[r][q][s] * gamma[s][nn][p];
                    }
                    mixed[r][nn][p][q] = acc;
                }
            }
        }
    }
    let mut out = ZERO_RANK4;
    for m in 0..n {
        for nn in 0..n {
            for p in 0..n {
                for q in 0..n {
                    let mut acc = 0.0;
                    for r in 0..n {
                        acc += g[m][r] * mixed[r][nn][p][q];
                    }
                    out[m][nn][p][q] = acc;
                }
            }
        }
    }
    out
}

/// Christoffel symbols from central differences of the metric alone.
pub fn christoffel_fd(model: &ModelSpec, p: &[f64], step: f64) -> Result<Gamma> {
    let m = model.metric_at(p)?;
    let n = m.n;
    let point = crate::manifold::point(p);
    let mut dg = [ZERO_MAT; 4];
    for s in 0..n {
        let mut plus = point;
        let mut minus = point;
        let hstep = step * p[s].abs().max(1.0);
        plus[s] += hstep;
        minus[s] -= hstep;
        let gp = model.metric_matrix(&plus[..n]);
        let gm = model.metric_matrix(&minus[..n]);
        for i in 0..n {
            for j in 0..n {
                dg[s][i][j] = (gp[i][j] - gm[i][j]) / (2.0 * hstep);
            }
        }
    }
    let inv = inverse_metric(&m.g, n)?;
    let mut out = ZERO_GAMMA;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += inv[k][l] * (dg[i][l][j] + dg[j][i][l] - dg[l][i][j]);
                }
                out[k][i][j] = 0.5 * acc;
            }
        }
    }
    Ok(out)
}

/// Ricci tensor without building the full Riemann tensor.
pub fn ricci_at(model: &ModelSpec, p: &[f64]) -> Result<Mat4> {
    model.check_point(p)?;
    Ok(model.ricci_closed(p))
}

pub fn scalar_at(model: &ModelSpec, p: &[f64]) -> Result<f64> {
    model.check_point(p)?;
    Ok(model.scalar_closed(p[0]))
}

/// Energy-momentum tensor T̃ without building the full Riemann tensor.
pub fn energy_momentum_at(model: &ModelSpec, p: &[f64]) -> Result<Mat4> {
    let m = model.metric_at(p)?;
    Ok(einstein(&model.ricci_closed(p), model.scalar_closed(p[0]), &m.g, m.n))
}

/// Unit-speed tolerance of [`energy_at`].
pub const UNIT_TOL: f64 = 1e-8;

/// E = T̃(ξ̇, ξ̇) for a g-unit velocity.
pub fn energy_at(pack: &CurvaturePack, xdot: &[f64]) -> Result<f64> {
    if xdot.len() != pack.n {
        return Err(Error::DimensionMismatch { expected: pack.n, got: xdot.len() });
    }
    let v = crate::manifold::point(xdot);
    let nrm = quad(&pack.metric, &v, &v, pack.n) - 1.0;
    if nrm.abs() > UNIT_TOL {
        return Err(Error::NotUnitVelocity(nrm));
    }
    Ok(quad(&pack.energy_momentum, &v, &v, pack.n))
}

/// Curvature in a pseudo-orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameComponents {
    pub n: usize,
    /// R_{ij}^{kl}, indexed `[i][j][k][l]`.
    pub riemann: Rank4,
    /// R_{ijab} with all indices down.
    pub riemann_lower: Rank4,
    /// R_i^k.
    pub ricci: Mat4,
    pub t00: f64,
}

pub fn frame_components(pack: &CurvaturePack, frame: &Frame) -> Result<FrameComponents> {
    let n = pack.n;
    if frame.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: frame.n });
    }
    let scale = crate::tensor::max_abs_mat(&pack.metric, n).max(1.0);
    for i in 0..n {
        for j in 0..n {
            if (frame.metric[i][j] - pack.metric[i][j]).abs() > 1e-12 * scale {
                return Err(Error::FrameMismatch);
            }
        }
    }
    let e = &frame.vectors;
    // Contract one index at a time.
    let mut t1 = ZERO_RANK4;
    for i in 0..n {
        for l in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += pack.riemann[k][l][r][s] * e[i][k];
                    }
                    t1[i][l][r][s] = acc;
                }
            }
        }
    }
    let mut t2 = ZERO_RANK4;
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += t1[i][l][r][s] * e[j][l];
                    }
                    t2[i][j][r][s] = acc;
                }
            }
        }
    }
    let mut t3 = ZERO_RANK4;
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for s in 0..n {
                    let mut acc = 0.0;
                    for r in 0..n {
                        acc += t2[i][j][r][s] * e[a][r];
                    }
                    t3[i][j][a][s] = acc;
                }
            }
        }
    }
    let mut lower = ZERO_RANK4;
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut acc = 0.0;
                    for s in 0..n {
                        acc += t3[i][j][a][s] * e[b][s];
                    }
                    lower[i][j][a][b] = acc;
                }
            }
        }
    }
    let mut raised = ZERO_RANK4;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    raised[i][j][k][l] = lower[i][j][k][l] * eta_ij(k, k) * eta_ij(l, l);
                }
            }
        }
    }
    let mut ricci = ZERO_MAT;
    for i in 0..n {
        for k in 0..n {
            ricci[i][k] = (0..n).map(|j| raised[i][j][k][j]).sum();
        }
    }
    let t00 = quad(&pack.energy_momentum, &e[0], &e[0], n);
    Ok(FrameComponents { n, riemann: raised, riemann_lower: lower, ricci, t00 })
}

/// Outcome of splitting T̃ as q U⊗U − p g.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluidDecomposition {
    pub q: f64,
    pub p: f64,
    pub p_tilde: f64,
    /// Fluid velocity, chart components (g-unit, future directed).
    pub u: Vec<f64>,
    pub is_perfect: bool,
}

/// Relative eigenvalue spread beyond which T̃ is not a perfect fluid.
pub const FLUID_SPREAD_TOL: f64 = 1e-8;

pub fn perfect_fluid_decompose(pack: &CurvaturePack) -> FluidDecomposition {
    let n = pack.n;
    let d = (n - 1) as f64;
    let t = &pack.energy_momentum;
    let g = &pack.metric;
    let ginv = &pack.inverse;
    let comoving = {
        let mut u = vec![0.0; n];
        u[0] = 1.0 / g[0][0].sqrt();
        u
    };
    let p_tilde = |q: f64, p: f64| if n > 2 { (2.0 * p - q) / (d - 1.0) } else { 0.0 };

    let mixed = DMatrix::from_fn(n, n, |k, l| (0..n).map(|r| ginv[k][r] * t[r][l]).sum::<f64>());
    // Schur on an exactly zero matrix never converges, and a bounded iteration
    // count keeps pathological inputs from spinning.
    let eig = match (mixed.amax() > 0.0)
        .then(|| nalgebra::linalg::Schur::try_new(mixed, f64::EPSILON, 10_000))
        .flatten()
    {
        Some(schur) => schur.complex_eigenvalues(),
        None => nalgebra::DVector::zeros(n),
    };
    let scale = eig.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return FluidDecomposition { q: 0.0, p: 0.0, p_tilde: 0.0, u: comoving, is_perfect: true };
    }
    let complex = eig.iter().any(|z| z.im.abs() > FLUID_SPREAD_TOL * scale);
    let mut re: Vec<f64> = eig.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let spread = |s: &[f64]| s.last().unwrap() - s.first().unwrap();
    let (isolated, cluster) = if n == 2 {
        // Either eigenvalue may be the timelike one; the cluster is a singleton.
        (re[1], &re[..1])
    } else if spread(&re[1..]) <= spread(&re[..n - 1]) {
        (re[0], &re[1..])
    } else {
        (re[n - 1], &re[..n - 1])
    };
    let cluster_spread = spread(cluster) / scale;
    let p = -cluster.iter().sum::<f64>() / cluster.len() as f64;
    let mut q = isolated + p;

    if q.abs() <= 1e-12 * scale {
        // T̃ = −p g: every unit timelike vector is a fluid velocity.
        return FluidDecomposition {
            q: 0.0,
            p,
            p_tilde: p_tilde(0.0, p),
            u: comoving,
            is_perfect: !complex && cluster_spread <= FLUID_SPREAD_TOL,
        };
    }

    // T̃ + p g = q U♭⊗U♭; raise its largest column to recover U.
    let mut qmat = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            qmat[i][j] = t[i][j] + p * g[i][j];
        }
    }
    let col = (0..n)
        .max_by(|&a, &b| {
            let na: f64 = (0..n).map(|i| qmat[i][a] * qmat[i][a]).sum();
            let nb: f64 = (0..n).map(|i| qmat[i][b] * qmat[i][b]).sum();
            na.partial_cmp(&nb).unwrap()
        })
        .unwrap();
    let mut u = ZERO_VEC;
    for k in 0..n {
        u[k] = (0..n).map(|l| ginv[k][l] * qmat[l][col]).sum();
    }
    let nu = quad(g, &u, &u, n);
    let mut timelike = nu > 0.0;
    if timelike {
        let s = nu.sqrt() * if u[0] < 0.0 { -1.0 } else { 1.0 };
        for x in u.iter_mut().take(n) {
            *x /= s;
        }
        q = quad(&qmat, &u, &u, n);
        let ul: Vec<f64> = (0..n).map(|k| (0..n).map(|l| g[k][l] * u[l]).sum()).collect();
        let tscale = crate::tensor::max_abs_mat(t, n);
        let mut resid = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                resid = resid.max((t[i][j] - (q * ul[i] * ul[j] - p * g[i][j])).abs());
            }
        }
        timelike = resid <= 1e-9 * tscale.max(f64::MIN_POSITIVE);
    }
    FluidDecomposition {
        q,
        p,
        p_tilde: p_tilde(q, p),
        u: if timelike { u[..n].to_vec() } else { comoving },
        is_perfect: timelike && !complex && cluster_spread <= FLUID_SPREAD_TOL,
    }
}

/// Logarithmic grid over the model interval (clipped to [1e-2, 1e3]).
pub fn default_t_grid(model: &ModelSpec) -> Vec<f64> {
    let iv = model.warp().interval;
    let lo = iv.lo.map_or(1e-2, |l| (l + 1e-9).max(1e-2));
    let hi = iv.hi.map_or(1e3, |h| (h - 1e-9).min(1e3));
    let m = 200;
    (0..m)
        .map(|i| {
            let f = i as f64 / (m - 1) as f64;
            (lo.ln() + f * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyConditionReport {
    pub holds: bool,
    /// Smallest slack of the analytic bounds over the grid (negative when violated).
    pub worst_margin: f64,
    /// Smallest energy over the sampled line elements, when any were given.
    pub sampled_min_energy: Option<f64>,
}

/// Weak energy condition: E ≥ 0 on the unit tangent bundle.
pub fn weak_energy_check(model: &ModelSpec, points: &[Vec<f64>], velocities: &[Vec<f64>]) -> EnergyConditionReport {
    let mut sampled = None;
    let mut sampled_ok = true;
    for (p, v) in points.iter().zip(velocities) {
        if let Ok(pack) = chart_curvature(model, p) {
            if let Ok(e) = energy_at(&pack, v) {
                let speed2: f64 = v.iter().map(|x| x * x).sum();
                let scale = crate::tensor::max_abs_mat(&pack.energy_momentum, pack.n) * speed2;
                sampled = Some(sampled.map_or(e, |m: f64| m.min(e)));
                if e < -1e-10 * scale.max(1.0) {
                    sampled_ok = false;
                }
            }
        }
    }
    let (analytic, margin) = match model {
        ModelSpec::Minkowski { .. } => (true, 0.0),
        ModelSpec::Eds { c, .. } => {
            // α′² + k − (αα″)⁺ = t^{2c−2}(c² − (c(c−1))⁺) > 0.
            let c = *c;
            (true, c * c - (c * (c - 1.0)).max(0.0))
        }
        _ => {
            let w = model.warp();
            let grid = default_t_grid(model);
            let d = model.dim() as f64;
            if let RiemannFactor::ConstantCurvature { k } = w.factor {
                let m = grid
                    .iter()
                    .map(|&t| {
                        let (a, a1, a2) = w.alpha.eval(t);
                        a1 * a1 + k - (a * a2).max(0.0)
                    })
                    .fold(f64::INFINITY, f64::min);
                (m >= -1e-12, m)
            } else {
                let sup = grid
                    .iter()
                    .map(|&t| {
                        let (a, a1, a2) = w.alpha.eval(t);
                        a * a2 - a1 * a1
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let inf_a1sq = grid
                    .iter()
                    .map(|&t| w.alpha.eval(t).1.powi(2))
                    .fold(f64::INFINITY, f64::min);
                let m1 = w.factor.ricci_lower_bound() - (d - 1.0) * sup;
                let m2 = w.factor.scalar() + d * (d - 1.0) * inf_a1sq;
                let m = m1.min(m2);
                (m >= -1e-12, m)
            }
        }
    };
    EnergyConditionReport { holds: analytic && sampled_ok, worst_margin: margin, sampled_min_energy: sampled }
}

/// R ≤ 0 on the grid.
pub fn scalar_sign_check(model: &ModelSpec, t_grid: &[f64]) -> bool {
    match model {
        ModelSpec::Minkowski { .. } => true,
        ModelSpec::Eds { c, .. } => *c >= 0.5,
        _ => {
            let w = model.warp();
            t_grid
                .iter()
                .filter(|&&t| w.interval.contains(t))
                .all(|&t| model.scalar_closed(t) <= 1e-12 * (1.0 + model.hubble(t).powi(2)))
        }
    }
}

/// ⟨R(u∧v), u∧v⟩ ≤ 0 for timelike u and spacelike v, through its warped-product
/// sufficient form: α″ ≤ 0 and inf sectional(h) ≥ sup(αα″ − α′²).
pub fn sectional_sign_check(model: &ModelSpec) -> bool {
    match model {
        ModelSpec::Minkowski { .. } => true,
        ModelSpec::Eds { c, .. } => *c <= 1.0,
        _ => {
            let w = model.warp();
            let grid = default_t_grid(model);
            let concave = grid.iter().all(|&t| w.alpha.eval(t).2 <= 0.0);
            let sup = grid
                .iter()
                .map(|&t| {
                    let (a, a1, a2) = w.alpha.eval(t);
                    a * a2 - a1 * a1
                })
                .fold(f64::NEG_INFINITY, f64::max);
            concave && w.factor.sectional_lower_bound() >= sup
        }
    }
}
