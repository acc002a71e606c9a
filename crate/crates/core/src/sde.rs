//! Integrators for the geodesic flow, the Ξ-diffusions on the frame bundle and
//! the sectional diffusion on the unit tangent bundle.
//!
//! Ξ-diffusions are stepped in their Itô form with Euler–Maruyama:
//!
//! ```text
//! dξ    = ξ̇ ds
//! dξ̇^k  = √Ξ e_j^k dw^j − Γ^k_{il} ξ̇^i ξ̇^l ds + (d/2) Ξ ξ̇^k ds + ½ (ξ̇^k ξ̇^l − g^{kl}) ∂Ξ/∂ξ̇^l ds
//! de_j^k = √Ξ ξ̇^k dw^j − Γ^k_{il} ξ̇^i e_j^l ds + ½ Ξ e_j^k ds + ½ (V_j Ξ) ξ̇^k ds
//! ```
//!
//! with Ξ = ρ² (basic), −ρ²R (R-diffusion) or ρ²E (energy diffusion). The
//! geodesic flow uses classical RK4.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::algebra::{gram_schmidt_g, Frame};
use crate::curvature::{
    default_t_grid, energy_momentum_at, scalar_sign_check, sectional_sign_check, weak_energy_check,
    CurvaturePack, UNIT_TOL,
};
use crate::error::{Error, Result};
use crate::manifold::ModelSpec;
use crate::rng::PathRng;
use crate::tensor::{contract_gamma, mat_vec, quad, Mat4, Vec4, MAX_N, ZERO_MAT, ZERO_VEC};

/// How a Ξ-diffusion step is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Plain Euler–Maruyama on the chart components of point and frame.
    #[default]
    Euler,
    /// Euler transport of the frame followed by an exact Lorentz boost with
    /// rapidities √Ξ Δw_j + ½ (V_jΞ) h. Same one-step moments to leading order,
    /// but the frame stays pseudo-orthonormal at any boost, which the Euler
    /// update loses once ṫ is large.
    Boost,
}

/// Values of Ξ in [−XI_CLAMP, 0) are read as zero; anything lower is an error.
pub const XI_CLAMP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    Geodesic,
    Basic,
    R,
    Energy,
    Sectional,
}

impl DiffusionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DiffusionKind::Geodesic => "geodesic",
            DiffusionKind::Basic => "basic",
            DiffusionKind::R => "r",
            DiffusionKind::Energy => "energy",
            DiffusionKind::Sectional => "sectional",
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSpec {
    pub kind: DiffusionKind,
    #[serde(default = "one")]
    pub rho: f64,
}

impl DiffusionSpec {
    pub fn new(kind: DiffusionKind, rho: f64) -> Self {
        DiffusionSpec { kind, rho }
    }

    /// Builds a spec and checks the sign condition its kind needs on `model`.
    pub fn checked(kind: DiffusionKind, rho: f64, model: &ModelSpec) -> Result<Self> {
        let spec = Self::new(kind, rho);
        spec.validate(model)?;
        Ok(spec)
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::invalid("rho must be a non-negative number"));
        }
        if self.kind != DiffusionKind::Geodesic && self.rho == 0.0 {
            return Err(Error::invalid("rho must be positive"));
        }
        match self.kind {
            DiffusionKind::R if !scalar_sign_check(model, &default_t_grid(model)) => Err(Error::invalid(
                "scalar sign condition fails: the R-diffusion needs R <= 0",
            )),
            DiffusionKind::Energy if !weak_energy_check(model, &[], &[]).holds => Err(Error::invalid(
                "weak energy condition fails: the energy diffusion needs E >= 0",
            )),
            DiffusionKind::Sectional if !sectional_sign_check(model) => Err(Error::invalid(
                "sectional sign condition fails: the sectional diffusion needs non-positive timelike sectional curvature",
            )),
            _ => Ok(()),
        }
    }
}

fn default_renorm() -> u64 {
    1
}
fn default_explosion() -> f64 {
    1e6
}
fn default_t_min() -> f64 {
    0.1
}
fn default_max_xi_h() -> Option<f64> {
    Some(0.05)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub h: f64,
    pub s_max: f64,
    #[serde(default = "default_renorm")]
    pub renorm_every: u64,
    #[serde(default = "default_explosion")]
    pub explosion_tdot: f64,
    /// Absolute eigenvalue clamp for the sectional covariance; `None` means 1e-10·‖a‖.
    #[serde(default)]
    pub psd_clamp: Option<f64>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    /// Ξ-diffusion steps are split so that Ξ times each substep stays below this;
    /// `None` turns splitting off.
    #[serde(default = "default_max_xi_h")]
    pub max_xi_h: Option<f64>,
    #[serde(default)]
    pub scheme: Scheme,
}

impl StepConfig {
    pub fn new(h: f64, s_max: f64) -> Self {
        StepConfig {
            h,
            s_max,
            renorm_every: default_renorm(),
            explosion_tdot: default_explosion(),
            psd_clamp: None,
            t_min: default_t_min(),
            max_xi_h: default_max_xi_h(),
            scheme: Scheme::Euler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 0.1) {
            return Err(Error::invalid("h must lie in (0, 0.1]"));
        }
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return Err(Error::invalid("s_max must be positive"));
        }
        if self.renorm_every == 0 {
            return Err(Error::invalid("renorm_every must be at least 1"));
        }
        if !(self.explosion_tdot >= 1e3) {
            return Err(Error::invalid("explosion_tdot must be at least 1e3"));
        }
        if let Some(c) = self.psd_clamp {
            if !(c >= 0.0) {
                return Err(Error::invalid("psd_clamp must be non-negative"));
            }
        }
        if let Some(m) = self.max_xi_h {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::invalid("max_xi_h must be positive"));
            }
        }
        if !(self.t_min > 0.0) {
            return Err(Error::invalid("t_min must be positive"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.s_max / self.h).round() as u64
    }
}

/// A point of the unit tangent bundle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseState {
    pub n: usize,
    pub point: Vec4,
    pub velocity: Vec4,
}

impl PhaseState {
    /// Validated state: point in the chart, g(ξ̇,ξ̇) = 1, ξ̇ future directed.
    pub fn new(model: &ModelSpec, point: &[f64], velocity: &[f64]) -> Result<Self> {
        let n = model.n();
        if velocity.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: velocity.len() });
        }
        let m = model.metric_at(point)?;
        let v = crate::manifold::point(velocity);
        let nrm = quad(&m.g, &v, &v, n) - 1.0;
        if nrm.abs() > UNIT_TOL {
            return Err(Error::NotUnitVelocity(nrm));
        }
        if !(v[0] > 0.0) {
            return Err(Error::invalid("velocity must be future directed"));
        }
        Ok(PhaseState { n, point: crate::manifold::point(point), velocity: v })
    }

    /// Unit velocity with time component `tdot` and spatial part along `direction`
    /// (chart components; defaults to the first spatial axis).
    pub fn from_tdot(model: &ModelSpec, point: &[f64], tdot: f64, direction: Option<&[f64]>) -> Result<Self> {
        let n = model.n();
        if !(tdot >= 1.0 && tdot.is_finite()) {
            return Err(Error::invalid("tdot must be at least 1"));
        }
        let m = model.metric_at(point)?;
        let mut dir = ZERO_VEC;
        match direction {
            Some(d) => {
                if d.len() != n - 1 {
                    return Err(Error::DimensionMismatch { expected: n - 1, got: d.len() });
                }
                dir[1..n].copy_from_slice(d);
            }
            None => dir[1] = 1.0,
        }
        let dn = -quad(&m.g, &dir, &dir, n);
        if !(dn > 0.0) {
            return Err(Error::invalid("direction must be a nonzero spatial vector"));
        }
        let scale = ((tdot * tdot - 1.0) / dn).sqrt();
        let mut v = ZERO_VEC;
        v[0] = tdot;
        for k in 1..n {
            v[k] = dir[k] * scale;
        }
        Self::new(model, point, &v[..n])
    }

    pub fn t(&self) -> f64 {
        self.point[0]
    }

    pub fn tdot(&self) -> f64 {
        self.velocity[0]
    }
}

/// Serializable initial condition: chart point, ṫ and an optional spatial direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub point: Vec<f64>,
    pub tdot: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

impl InitSpec {
    pub fn new(point: &[f64], tdot: f64) -> Self {
        InitSpec { point: point.to_vec(), tdot, direction: None }
    }

    pub fn phase(&self, model: &ModelSpec) -> Result<PhaseState> {
        PhaseState::from_tdot(model, &self.point, self.tdot, self.direction.as_deref())
    }

    pub fn frame_state(&self, model: &ModelSpec) -> Result<FrameState> {
        FrameState::from_phase(model, &self.phase(model)?)
    }
}

/// A point of the frame bundle; e_0 is the velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameState {
    pub point: Vec4,
    pub frame: Frame,
}

impl FrameState {
    /// Completes the velocity of `phase` with the coordinate directions and
    /// pseudo-orthonormalizes.
    pub fn from_phase(model: &ModelSpec, phase: &PhaseState) -> Result<Self> {
        let n = phase.n;
        let m = model.metric_at(&phase.point[..n])?;
        let mut vectors = [ZERO_VEC; MAX_N];
        vectors[0] = phase.velocity;
        for (j, v) in vectors.iter_mut().enumerate().take(n).skip(1) {
            v[j] = 1.0;
        }
        let frame = gram_schmidt_g(&Frame::new(n, vectors, m.g)?)?;
        Ok(FrameState { point: phase.point, frame })
    }

    pub fn n(&self) -> usize {
        self.frame.n
    }

    pub fn velocity(&self) -> &Vec4 {
        &self.frame.vectors[0]
    }

    pub fn phase(&self) -> PhaseState {
        PhaseState { n: self.frame.n, point: self.point, velocity: self.frame.vectors[0] }
    }

    /// g(ξ̇, ξ̇) − 1.
    pub fn pnorm_err(&self) -> f64 {
        let v = self.velocity();
        self.frame.g(v, v) - 1.0
    }
}

/// Ξ together with its velocity gradient and its frame derivatives V_jΞ.
#[derive(Clone, Copy, Debug, PartialEq)]
struct XiParts {
    xi: f64,
    /// ∂Ξ/∂ξ̇^l as a covector.
    grad: Vec4,
    /// V_jΞ for j = 1..d.
    boost: Vec4,
}

fn clamp_xi(xi: f64) -> Result<f64> {
    if xi.is_nan() || xi < -XI_CLAMP {
        return Err(Error::NegativeXi(xi));
    }
    Ok(xi.max(0.0))
}

fn xi_parts(spec: &DiffusionSpec, scalar: f64, tt: Option<&Mat4>, frame: &[Vec4; MAX_N], n: usize) -> Result<XiParts> {
    let rho2 = spec.rho * spec.rho;
    let mut out = XiParts { xi: 0.0, grad: ZERO_VEC, boost: ZERO_VEC };
    match spec.kind {
        DiffusionKind::Geodesic | DiffusionKind::Sectional => {}
        DiffusionKind::Basic => out.xi = rho2,
        DiffusionKind::R => out.xi = clamp_xi(-rho2 * scalar)?,
        DiffusionKind::Energy => {
            let t = tt.expect("energy diffusion needs the energy-momentum tensor");
            let v = &frame[0];
            let tv = mat_vec(t, v, n);
            let e: f64 = (0..n).map(|k| tv[k] * v[k]).sum();
            out.xi = clamp_xi(rho2 * e)?;
            for l in 0..n {
                out.grad[l] = 2.0 * rho2 * tv[l];
            }
            for j in 1..n {
                out.boost[j] = 2.0 * rho2 * (0..n).map(|k| tv[k] * frame[j][k]).sum::<f64>();
            }
        }
    }
    Ok(out)
}

/// Ξ at a line element.
pub fn xi_evaluate(spec: &DiffusionSpec, pack: &CurvaturePack, state: &PhaseState) -> Result<f64> {
    if state.n != pack.n {
        return Err(Error::DimensionMismatch { expected: pack.n, got: state.n });
    }
    if spec.kind == DiffusionKind::Energy {
        crate::curvature::energy_at(pack, &state.velocity[..state.n])?;
    }
    let mut frame = [ZERO_VEC; MAX_N];
    frame[0] = state.velocity;
    Ok(xi_parts(spec, pack.scalar, Some(&pack.energy_momentum), &frame, pack.n)?.xi)
}

/// ½ (ξ̇^k ξ̇^l − g^{kl}) ∂Ξ/∂ξ̇^l.
pub fn xi_vertical_drift(spec: &DiffusionSpec, pack: &CurvaturePack, state: &FrameState) -> Result<Vec4> {
    let n = pack.n;
    let parts = xi_parts(spec, pack.scalar, Some(&pack.energy_momentum), &state.frame.vectors, n)?;
    Ok(vertical(&parts.grad, state.velocity(), &pack.inverse, n))
}

fn vertical(grad: &Vec4, v: &Vec4, ginv: &Mat4, n: usize) -> Vec4 {
    let mut out = ZERO_VEC;
    let vg: f64 = (0..n).map(|l| v[l] * grad[l]).sum();
    for k in 0..n {
        let gg: f64 = (0..n).map(|l| ginv[k][l] * grad[l]).sum();
        out[k] = 0.5 * (v[k] * vg - gg);
    }
    out
}

/// Drift and noise coefficients of a Ξ-diffusion at a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct XiCoefficients {
    pub n: usize,
    pub xi: f64,
    /// Drift of ξ̇.
    pub velocity_drift: Vec4,
    /// Drift of e_j, j = 1..d.
    pub frame_drift: [Vec4; MAX_N],
    /// Noise column of ξ̇ for dw^j, j = 1..d: √Ξ e_j.
    pub velocity_noise: [Vec4; MAX_N],
    /// Noise column of e_j for dw^j: √Ξ ξ̇.
    pub frame_noise: Vec4,
    /// V_jΞ, j = 1..d.
    pub frame_derivative: Vec4,
}

impl XiCoefficients {
    /// d[ξ̇^k, ξ̇^l]/ds.
    pub fn velocity_covariance(&self) -> Mat4 {
        let mut c = ZERO_MAT;
        for col in self.velocity_noise.iter().take(self.n).skip(1) {
            for k in 0..self.n {
                for l in 0..self.n {
                    c[k][l] += col[k] * col[l];
                }
            }
        }
        c
    }
}

pub fn xi_coefficients(model: &ModelSpec, spec: &DiffusionSpec, state: &FrameState) -> Result<XiCoefficients> {
    let n = state.n();
    let p = &state.point[..n];
    let metric = model.metric_at(p)?;
    let gamma = model.christoffel_unchecked(p);
    let scalar = if spec.kind == DiffusionKind::R { model.scalar_closed(p[0]) } else { 0.0 };
    let tt = if spec.kind == DiffusionKind::Energy { Some(energy_momentum_at(model, p)?) } else { None };
    let e = &state.frame.vectors;
    let parts = xi_parts(spec, scalar, tt.as_ref(), e, n)?;
    let v = &e[0];
    let d = (n - 1) as f64;
    let sq = parts.xi.sqrt();

    let geo = contract_gamma(&gamma, v, v, n);
    let vert = vertical(&parts.grad, v, &metric.inv, n);
    let mut velocity_drift = ZERO_VEC;
    for k in 0..n {
        velocity_drift[k] = -geo[k] + 0.5 * d * parts.xi * v[k] + vert[k];
    }
    let mut frame_drift = [ZERO_VEC; MAX_N];
    let mut velocity_noise = [ZERO_VEC; MAX_N];
    let mut frame_noise = ZERO_VEC;
    for j in 1..n {
        let transport = contract_gamma(&gamma, v, &e[j], n);
        for k in 0..n {
            frame_drift[j][k] = -transport[k] + 0.5 * parts.xi * e[j][k] + 0.5 * parts.boost[j] * v[k];
            velocity_noise[j][k] = sq * e[j][k];
        }
    }
    for k in 0..n {
        frame_noise[k] = sq * v[k];
    }
    Ok(XiCoefficients {
        n,
        xi: parts.xi,
        velocity_drift,
        frame_drift,
        velocity_noise,
        frame_noise,
        frame_derivative: parts.boost,
    })
}

/// One Euler–Maruyama step of a Ξ-diffusion. `noise` holds d independent
/// N(0, h) increments. With `renormalize` the new frame is passed through
/// [`gram_schmidt_g`] at the new point.
pub fn xi_step(
    model: &ModelSpec,
    spec: &DiffusionSpec,
    state: &FrameState,
    h: f64,
    noise: &[f64],
    renormalize: bool,
) -> Result<FrameState> {
    let n = state.n();
    if noise.len() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, got: noise.len() });
    }
    let co = xi_coefficients(model, spec, state)?;
    apply_xi_step(model, state, &co, h, noise, renormalize)
}

fn apply_xi_step(
    model: &ModelSpec,
    state: &FrameState,
    co: &XiCoefficients,
    h: f64,
    noise: &[f64],
    renormalize: bool,
) -> Result<FrameState> {
    let n = state.n();
    let e = &state.frame.vectors;
    let v = &e[0];
    let mut point = state.point;
    let mut vectors = *e;
    for k in 0..n {
        point[k] += v[k] * h;
        let mut dv = co.velocity_drift[k] * h;
        for j in 1..n {
            dv += co.velocity_noise[j][k] * noise[j - 1];
        }
        vectors[0][k] += dv;
        for j in 1..n {
            vectors[j][k] += co.frame_drift[j][k] * h + co.frame_noise[k] * noise[j - 1];
        }
    }
    let metric = model.metric_at(&point[..n])?;
    let frame = Frame { n, vectors, metric: metric.g };
    let frame = if renormalize { gram_schmidt_g(&frame)? } else { frame };
    Ok(FrameState { point, frame })
}

/// One step of the [`Scheme::Boost`] integrator.
pub fn xi_boost_step(
    model: &ModelSpec,
    spec: &DiffusionSpec,
    state: &FrameState,
    h: f64,
    noise: &[f64],
    renormalize: bool,
) -> Result<FrameState> {
    let n = state.n();
    if noise.len() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, got: noise.len() });
    }
    let co = xi_coefficients(model, spec, state)?;
    apply_boost_step(model, state, &co, h, noise, renormalize)
}

fn apply_boost_step(
    model: &ModelSpec,
    state: &FrameState,
    co: &XiCoefficients,
    h: f64,
    noise: &[f64],
    renormalize: bool,
) -> Result<FrameState> {
    let n = state.n();
    let e = &state.frame.vectors;
    let v = e[0];
    let gamma = model.christoffel_unchecked(&state.point[..n]);
    let mut point = state.point;
    let mut vectors = *e;
    for k in 0..n {
        point[k] += v[k] * h;
    }
    for (a, ea) in e.iter().enumerate().take(n) {
        let tr = contract_gamma(&gamma, &v, ea, n);
        for k in 0..n {
            vectors[a][k] -= tr[k] * h;
        }
    }
    let sq = co.xi.sqrt();
    let mut rap = ZERO_VEC;
    for j in 1..n {
        rap[j] = sq * noise[j - 1] + 0.5 * co.frame_derivative[j] * h;
    }
    let theta = rap.iter().map(|x| x * x).sum::<f64>().sqrt();
    if theta > 0.0 {
        // w = Σ n_j e_j; v ↦ cosh θ v + sinh θ w; e_j ↦ e_j + n_j[(cosh θ − 1) w + sinh θ v].
        let mut w = ZERO_VEC;
        for j in 1..n {
            for k in 0..n {
                w[k] += rap[j] / theta * vectors[j][k];
            }
        }
        let (ch, sh) = (theta.cosh(), theta.sinh());
        let v0 = vectors[0];
        for j in 1..n {
            let nj = rap[j] / theta;
            for k in 0..n {
                vectors[j][k] += nj * ((ch - 1.0) * w[k] + sh * v0[k]);
            }
        }
        for k in 0..n {
            vectors[0][k] = ch * v0[k] + sh * w[k];
        }
    }
    let metric = model.metric_at(&point[..n])?;
    let frame = Frame { n, vectors, metric: metric.g };
    let frame = if renormalize { gram_schmidt_g(&frame)? } else { frame };
    Ok(FrameState { point, frame })
}

/// Drift b and diffusion matrix a of the sectional generator b·∂ + ½ a·∂².
pub fn sectional_coefficients(pack: &CurvaturePack, state: &PhaseState, rho: f64) -> (Vec4, Mat4) {
    let n = pack.n;
    let v = &state.velocity;
    let rho2 = rho * rho;
    let geo = contract_gamma(&pack.christoffel, v, v, n);
    let rv = mat_vec(&pack.ricci, v, n);
    let mut b = ZERO_VEC;
    for k in 0..n {
        let raised: f64 = (0..n).map(|p| pack.inverse[k][p] * rv[p]).sum();
        b[k] = -geo[k] + 0.5 * rho2 * raised;
    }
    // S_{nm} = ξ̇^p ξ̇^q R̃_{pnqm}
    let mut s = ZERO_MAT;
    for a in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for p in 0..n {
                if v[p] == 0.0 {
                    continue;
                }
                for q in 0..n {
                    acc += v[p] * v[q] * pack.riemann[p][a][q][c];
                }
            }
            s[a][c] = acc;
        }
    }
    let gi = &pack.inverse;
    let mut a = ZERO_MAT;
    for k in 0..n {
        for l in 0..n {
            let mut acc = 0.0;
            for x in 0..n {
                for y in 0..n {
                    acc += gi[k][x] * s[x][y] * gi[y][l];
                }
            }
            a[k][l] = -rho2 * acc;
        }
    }
    for k in 0..n {
        for l in k + 1..n {
            let m = 0.5 * (a[k][l] + a[l][k]);
            a[k][l] = m;
            a[l][k] = m;
        }
    }
    (b, a)
}

/// σ with σσᵀ = a, through a symmetric eigendecomposition. Eigenvalues in
/// [−clamp, 0) are set to zero; lower ones raise [`Error::Psd`]. `clamp`
/// defaults to 1e-10·‖a‖_F.
pub fn psd_factor(a: &Mat4, n: usize, clamp: Option<f64>) -> Result<Mat4> {
    psd_factor_ranked(a, n, clamp).map(|(sigma, _)| sigma)
}

/// [`psd_factor`] plus the number of eigenvalues above the clamp.
pub fn psd_factor_ranked(a: &Mat4, n: usize, clamp: Option<f64>) -> Result<(Mat4, usize)> {
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let clamp = clamp.unwrap_or(1e-10 * m.norm());
    let eig = SymmetricEigen::new(m);
    let mut sigma = ZERO_MAT;
    let mut rank = 0;
    for (c, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -clamp {
            return Err(Error::Psd { eigenvalue: lam, clamp });
        }
        if lam > clamp {
            rank += 1;
        }
        let s = lam.max(0.0).sqrt();
        for r in 0..n {
            sigma[r][c] = eig.eigenvectors[(r, c)] * s;
        }
    }
    Ok((sigma, rank))
}

/// Euler–Maruyama increment of the sectional diffusion, without renormalization.
/// `noise` holds d+1 independent N(0, h) increments.
pub fn sectional_increment(
    model: &ModelSpec,
    state: &PhaseState,
    rho: f64,
    h: f64,
    noise: &[f64],
    psd_clamp: Option<f64>,
) -> Result<PhaseState> {
    sectional_increment_ranked(model, state, rho, h, noise, psd_clamp).map(|(p, _)| p)
}

fn sectional_increment_ranked(
    model: &ModelSpec,
    state: &PhaseState,
    rho: f64,
    h: f64,
    noise: &[f64],
    psd_clamp: Option<f64>,
) -> Result<(PhaseState, usize)> {
    let n = state.n;
    if noise.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: noise.len() });
    }
    let pack = crate::curvature::chart_curvature(model, &state.point[..n])?;
    let (b, a) = sectional_coefficients(&pack, state, rho);
    let (sigma, rank) = psd_factor_ranked(&a, n, psd_clamp)?;
    let mut out = *state;
    for k in 0..n {
        out.point[k] += state.velocity[k] * h;
        let mut dv = b[k] * h;
        for c in 0..n {
            dv += sigma[k][c] * noise[c];
        }
        out.velocity[k] += dv;
    }
    Ok((out, rank))
}

/// Rescales the velocity to g-unit length at its point.
pub fn renormalize_velocity(model: &ModelSpec, state: &PhaseState) -> Result<PhaseState> {
    let n = state.n;
    let m = model.metric_at(&state.point[..n])?;
    let nrm = quad(&m.g, &state.velocity, &state.velocity, n);
    if nrm < crate::algebra::DEGENERACY_TOL || !(state.velocity[0] > 0.0) {
        return Err(Error::DegenerateFrame { index: 0, norm: nrm });
    }
    let s = nrm.sqrt();
    let mut out = *state;
    for k in 0..n {
        out.velocity[k] /= s;
    }
    Ok(out)
}

pub fn sectional_step(
    model: &ModelSpec,
    state: &PhaseState,
    rho: f64,
    h: f64,
    noise: &[f64],
    psd_clamp: Option<f64>,
) -> Result<PhaseState> {
    let raw = sectional_increment(model, state, rho, h, noise, psd_clamp)?;
    renormalize_velocity(model, &raw)
}

fn geodesic_rhs(model: &ModelSpec, x: &Vec4, v: &Vec4, n: usize) -> Result<Vec4> {
    model.check_point(&x[..n])?;
    let gamma = model.christoffel_unchecked(&x[..n]);
    let acc = contract_gamma(&gamma, v, v, n);
    let mut out = ZERO_VEC;
    for k in 0..n {
        out[k] = -acc[k];
    }
    Ok(out)
}

/// One classical RK4 step of ξ̈ + Γ(ξ̇, ξ̇) = 0.
pub fn rk4_step(model: &ModelSpec, state: &PhaseState, h: f64) -> Result<PhaseState> {
    let n = state.n;
    let (x, v) = (state.point, state.velocity);
    let shift = |a: &Vec4, b: &Vec4, s: f64| {
        let mut o = *a;
        for k in 0..n {
            o[k] += s * b[k];
        }
        o
    };
    let a1 = geodesic_rhs(model, &x, &v, n)?;
    let (x2, v2) = (shift(&x, &v, 0.5 * h), shift(&v, &a1, 0.5 * h));
    let a2 = geodesic_rhs(model, &x2, &v2, n)?;
    let (x3, v3) = (shift(&x, &v2, 0.5 * h), shift(&v, &a2, 0.5 * h));
    let a3 = geodesic_rhs(model, &x3, &v3, n)?;
    let (x4, v4) = (shift(&x, &v3, h), shift(&v, &a3, h));
    let a4 = geodesic_rhs(model, &x4, &v4, n)?;
    let mut out = *state;
    for k in 0..n {
        out.point[k] += h / 6.0 * (v[k] + 2.0 * v2[k] + 2.0 * v3[k] + v4[k]);
        out.velocity[k] += h / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
    }
    model.check_point(&out.point[..n])?;
    Ok(out)
}

/// Observables recorded along a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub s: f64,
    pub n: usize,
    pub point: Vec4,
    pub velocity: Vec4,
    pub energy: f64,
    /// ṫ = ⟨∂_t, ξ̇⟩.
    pub hyp_angle: f64,
    /// t / ṫ.
    pub lambda: f64,
    /// α(t) √(ṫ² − 1); t^c √(ṫ² − 1) for power-law expansion.
    pub a_func: f64,
    pub xi: f64,
    pub pnorm_err: f64,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.point[0]
    }

    pub fn tdot(&self) -> f64 {
        self.velocity[0]
    }
}

pub fn observe(model: &ModelSpec, s: f64, point: &Vec4, velocity: &Vec4, xi: f64) -> Sample {
    let n = model.n();
    let t = point[0];
    let tdot = velocity[0];
    let finite = point[..n].iter().chain(&velocity[..n]).all(|x| x.is_finite());
    let (energy, pnorm_err) = if finite && model.check_point(&point[..n]).is_ok() {
        let tt = energy_momentum_at(model, &point[..n]).expect("point checked");
        let g = model.metric_unchecked(&point[..n]).g;
        (quad(&tt, velocity, velocity, n), quad(&g, velocity, velocity, n) - 1.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    let (alpha, _, _) = model.alpha_at(t);
    Sample {
        s,
        n,
        point: *point,
        velocity: *velocity,
        energy,
        hyp_angle: tdot,
        lambda: t / tdot,
        a_func: alpha * (tdot * tdot - 1.0).max(0.0).sqrt(),
        xi,
        pnorm_err,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PathStatus {
    Completed { s: f64 },
    Exploded { s: f64 },
    ChartExit { s: f64 },
}

impl PathStatus {
    pub fn s(&self) -> f64 {
        match *self {
            PathStatus::Completed { s } | PathStatus::Exploded { s } | PathStatus::ChartExit { s } => s,
        }
    }
}

/// What to keep from a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordPlan {
    /// Keep every `stride`-th step (0 keeps only the endpoints).
    pub stride: u64,
    /// Proper times at which to take snapshots.
    pub snapshots: Vec<f64>,
}

impl RecordPlan {
    pub fn every(stride: u64) -> Self {
        RecordPlan { stride, snapshots: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSeries {
    pub n: usize,
    pub samples: Vec<Sample>,
    /// One entry per requested snapshot; `None` when the path ended earlier.
    pub snapshots: Vec<Option<Sample>>,
    pub status: PathStatus,
    /// Smallest a_s seen at any step.
    pub min_a_func: f64,
    pub steps: u64,
    /// Ξ-diffusion substeps taken in total (equals `steps` when none were split).
    pub substeps: u64,
    /// Sectional steps whose velocity covariance had rank below d.
    pub rank_drops: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicConfig {
    pub h: f64,
    pub s_max: f64,
    pub stride: u64,
}

pub fn geodesic_integrate(model: &ModelSpec, init: &PhaseState, config: &GeodesicConfig) -> Result<PathSeries> {
    let mut step = StepConfig::new(config.h.min(0.1), config.s_max);
    step.h = config.h;
    let frame = FrameState { point: init.point, frame: bare_frame(model, init)? };
    run(model, &DiffusionSpec::new(DiffusionKind::Geodesic, 0.0), &frame, &step, &RecordPlan::every(config.stride), None)
}

fn bare_frame(model: &ModelSpec, s: &PhaseState) -> Result<Frame> {
    let m = model.metric_at(&s.point[..s.n])?;
    let mut vectors = [ZERO_VEC; MAX_N];
    vectors[0] = s.velocity;
    Frame::new(s.n, vectors, m.g)
}

/// Runs one path of any diffusion kind with noise from the (seed, 0) stream.
pub fn simulate_path(
    model: &ModelSpec,
    spec: &DiffusionSpec,
    init: &FrameState,
    config: &StepConfig,
    plan: &RecordPlan,
    seed: u64,
) -> Result<PathSeries> {
    let mut rng = PathRng::new(seed, 0);
    simulate_path_with(model, spec, init, config, plan, &mut rng)
}

pub fn simulate_path_with(
    model: &ModelSpec,
    spec: &DiffusionSpec,
    init: &FrameState,
    config: &StepConfig,
    plan: &RecordPlan,
    rng: &mut PathRng,
) -> Result<PathSeries> {
    config.validate()?;
    spec.validate(model)?;
    let n = init.n();
    if n != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: n });
    }
    PhaseState::new(model, &init.point[..n], &init.velocity()[..n])?;
    if spec.kind != DiffusionKind::Geodesic && spec.kind != DiffusionKind::Sectional
        && init.frame.orthonormality_error() > 1e-8
    {
        return Err(Error::invalid("initial frame is not pseudo-orthonormal"));
    }
    if model.has_time_origin() && init.point[0] < config.t_min {
        return Err(Error::invalid(format!("initial time must be at least t_min = {}", config.t_min)));
    }
    run(model, spec, init, config, plan, Some(rng))
}

fn run(
    model: &ModelSpec,
    spec: &DiffusionSpec,
    init: &FrameState,
    config: &StepConfig,
    plan: &RecordPlan,
    mut rng: Option<&mut PathRng>,
) -> Result<PathSeries> {
    let n = init.n();
    let h = config.h;
    let sqrt_h = h.sqrt();
    let n_steps = config.n_steps();
    let snap_idx: Vec<u64> = plan.snapshots.iter().map(|s| (s / h).round() as u64).collect();
    if snap_idx.iter().any(|&i| i > n_steps) {
        return Err(Error::invalid("snapshot times must not exceed s_max"));
    }
    let xi_of = |st: &FrameState| -> Result<f64> {
        match spec.kind {
            DiffusionKind::Geodesic | DiffusionKind::Sectional => Ok(0.0),
            _ => Ok(xi_coefficients(model, spec, st)?.xi),
        }
    };

    let mut state = init.clone();
    let mut phase = init.phase();
    let mut samples = Vec::new();
    let mut snapshots = vec![None; plan.snapshots.len()];
    let first = observe(model, 0.0, &state.point, state.velocity(), xi_of(&state)?);
    samples.push(first);
    let mut min_a = first.a_func;
    for (slot, &i) in snap_idx.iter().enumerate() {
        if i == 0 {
            snapshots[slot] = Some(first);
        }
    }
    let mut noise = [0.0; MAX_N];
    let mut status = PathStatus::Completed { s: n_steps as f64 * h };
    let mut last_recorded = 0u64;
    let mut steps = 0u64;
    let mut substeps = 0u64;
    let mut rank_drops = 0u64;

    for k in 1..=n_steps {
        let s = k as f64 * h;
        let stepped: Result<()> = (|| {
            match spec.kind {
                DiffusionKind::Geodesic => {
                    phase = rk4_step(model, &phase, h)?;
                    state.point = phase.point;
                    state.frame.vectors[0] = phase.velocity;
                    substeps += 1;
                }
                DiffusionKind::Sectional => {
                    let r = rng.as_deref_mut().expect("stochastic run needs a noise stream");
                    r.fill_normal(&mut noise[..n], sqrt_h);
                    let (raw, rank) =
                        sectional_increment_ranked(model, &phase, spec.rho, h, &noise[..n], config.psd_clamp)?;
                    if rank + 1 < n {
                        rank_drops += 1;
                    }
                    phase = renormalize_velocity(model, &raw)?;
                    state.point = phase.point;
                    state.frame.vectors[0] = phase.velocity;
                    substeps += 1;
                }
                _ => {
                    let r = rng.as_deref_mut().expect("stochastic run needs a noise stream");
                    let renorm = k % config.renorm_every == 0;
                    let mut left = h;
                    while left > 0.0 {
                        let co = xi_coefficients(model, spec, &state)?;
                        let hs = match config.max_xi_h {
                            Some(m) if co.xi * left > m => m / co.xi,
                            _ => left,
                        };
                        r.fill_normal(&mut noise[..n - 1], hs.sqrt());
                        state = match config.scheme {
                            Scheme::Euler => apply_xi_step(model, &state, &co, hs, &noise[..n - 1], renorm)?,
                            Scheme::Boost => apply_boost_step(model, &state, &co, hs, &noise[..n - 1], renorm)?,
                        };
                        substeps += 1;
                        left = if hs == left { 0.0 } else { left - hs };
                        let tdot = state.velocity()[0];
                        if !tdot.is_finite() || tdot > config.explosion_tdot {
                            break;
                        }
                    }
                }
            }
            Ok(())
        })();
        steps = k;
        match stepped {
            Ok(()) => {}
            Err(Error::ChartDomain(_)) => {
                status = PathStatus::ChartExit { s };
                break;
            }
            Err(e) => return Err(e),
        }
        let (t, tdot) = (state.point[0], state.velocity()[0]);
        if !tdot.is_finite() || tdot > config.explosion_tdot {
            status = PathStatus::Exploded { s };
            break;
        }
        if model.has_time_origin() && t < 0.5 * config.t_min {
            status = PathStatus::ChartExit { s };
            break;
        }
        let (alpha, _, _) = model.alpha_at(t);
        min_a = min_a.min(alpha * (tdot * tdot - 1.0).max(0.0).sqrt());

        let want_sample = plan.stride > 0 && k % plan.stride == 0;
        let want_snap = snap_idx.contains(&k);
        if want_sample || want_snap || k == n_steps {
            let obs = observe(model, s, &state.point, state.velocity(), xi_of(&state)?);
            if want_sample || k == n_steps {
                samples.push(obs);
                last_recorded = k;
            }
            for (slot, &i) in snap_idx.iter().enumerate() {
                if i == k {
                    snapshots[slot] = Some(obs);
                }
            }
        }
    }
    if last_recorded != steps {
        let xi = xi_of(&state).unwrap_or(f64::NAN);
        samples.push(observe(model, status.s(), &state.point, state.velocity(), xi));
    }
    Ok(PathSeries { n, samples, snapshots, status, min_a_func: min_a, steps, substeps, rank_drops })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::chart_curvature;

    fn eds_state(c: f64, t: f64, tdot: f64) -> (ModelSpec, FrameState) {
        let m = ModelSpec::eds(c);
        let ph = PhaseState::from_tdot(&m, &[t, 0.2, -0.1, 0.3], tdot, Some(&[0.6, 0.8, 0.0])).unwrap();
        let fs = FrameState::from_phase(&m, &ph).unwrap();
        (m, fs)
    }

    #[test]
    fn xi_examples() {
        let m = ModelSpec::eds(2.0 / 3.0);
        let pack = chart_curvature(&m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let st = PhaseState::new(&m, &[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = DiffusionSpec::new(DiffusionKind::R, 1.0);
        let e = DiffusionSpec::new(DiffusionKind::Energy, 1.0);
        let g = DiffusionSpec::new(DiffusionKind::Geodesic, 0.0);
        assert!((xi_evaluate(&r, &pack, &st).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((xi_evaluate(&e, &pack, &st).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(xi_evaluate(&g, &pack, &st).unwrap(), 0.0);
    }

    #[test]
    fn negative_xi_is_rejected() {
        // R > 0 for c < 1/2.
        let m = ModelSpec::eds(0.3);
        let pack = chart_curvature(&m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let st = PhaseState::new(&m, &[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = DiffusionSpec::new(DiffusionKind::R, 1.0);
        assert_eq!(xi_evaluate(&r, &pack, &st).unwrap_err().kind(), "NegativeXi");
        assert!(DiffusionSpec::checked(DiffusionKind::R, 1.0, &m).is_err());
    }

    #[test]
    fn vertical_drift_examples() {
        let (m, fs) = eds_state(2.0 / 3.0, 1.4, 2.5);
        let pack = chart_curvature(&m, &fs.point).unwrap();
        let r = DiffusionSpec::new(DiffusionKind::R, 1.3);
        assert_eq!(xi_vertical_drift(&r, &pack, &fs).unwrap(), ZERO_VEC);

        let rho = 1.3;
        let e = DiffusionSpec::new(DiffusionKind::Energy, rho);
        let got = xi_vertical_drift(&e, &pack, &fs).unwrap();
        let (c, t) = (2.0 / 3.0, fs.point[0]);
        let v = fs.velocity();
        for k in 0..4 {
            let u = if k == 0 { 1.0 } else { 0.0 };
            let want = 2.0 * rho * rho * c / (t * t) * (v[0] * v[k] - u) * v[0];
            assert!((got[k] - want).abs() < 1e-12 * want.abs().max(1.0), "k={k}");
        }

        let m = ModelSpec::eds(2.0 / 3.0);
        let ph = PhaseState::new(&m, &[2.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let fs = FrameState::from_phase(&m, &ph).unwrap();
        let pack = chart_curvature(&m, &fs.point).unwrap();
        let z = xi_vertical_drift(&e, &pack, &fs).unwrap();
        assert!(z.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn geodesic_xi_step_is_euler() {
        let (m, fs) = eds_state(0.7, 1.0, 3.0);
        let g = DiffusionSpec::new(DiffusionKind::Geodesic, 0.0);
        let h = 1e-3;
        let next = xi_step(&m, &g, &fs, h, &[0.3, -0.2, 0.9], false).unwrap();
        let gamma = m.christoffel_at(&fs.point).unwrap();
        let v = fs.velocity();
        let acc = contract_gamma(&gamma, v, v, 4);
        for k in 0..4 {
            assert!((next.point[k] - (fs.point[k] + h * v[k])).abs() < 1e-15);
            assert!((next.velocity()[k] - (v[k] - h * acc[k])).abs() < 1e-14);
        }
    }

    #[test]
    fn renormalized_frame_is_consistent() {
        let (m, fs) = eds_state(0.7, 1.0, 3.0);
        let b = DiffusionSpec::new(DiffusionKind::Basic, 1.0);
        let next = xi_step(&m, &b, &fs, 1e-2, &[0.05, -0.08, 0.02], true).unwrap();
        assert!(next.frame.orthonormality_error() < 1e-12);
        let ginv = m.metric_at(&next.point).unwrap().inv;
        let e = &next.frame.vectors;
        for k in 0..4 {
            for l in 0..4 {
                let lhs: f64 = (1..4).map(|j| e[j][k] * e[j][l]).sum();
                let rhs = e[0][k] * e[0][l] - ginv[k][l];
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sectional_rejects_c_above_one() {
        let m = ModelSpec::eds(1.2);
        assert!(DiffusionSpec::checked(DiffusionKind::Sectional, 1.0, &m).is_err());
        let mut hit = false;
        for i in 0..50 {
            let tdot = 1.0 + 9.0 * i as f64 / 49.0 + 0.01;
            let st = PhaseState::from_tdot(&m, &[1.0, 0.0, 0.0, 0.0], tdot, None).unwrap();
            if let Err(e) = sectional_step(&m, &st, 1.0, 1e-3, &[0.0; 4], None) {
                assert_eq!(e.kind(), "PSDError");
                hit = true;
            }
        }
        assert!(hit);
    }

    #[test]
    fn minkowski_sectional_is_geodesic() {
        let m = ModelSpec::minkowski(3);
        let st = PhaseState::from_tdot(&m, &[0.0; 4], 2.0, None).unwrap();
        let pack = chart_curvature(&m, &st.point).unwrap();
        let (b, a) = sectional_coefficients(&pack, &st, 1.0);
        assert_eq!(b, ZERO_VEC);
        assert_eq!(a, ZERO_MAT);
        let next = sectional_step(&m, &st, 1.0, 0.01, &[0.1, 0.2, 0.3, 0.4], None).unwrap();
        assert!((next.velocity[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_path() {
        let (m, fs) = eds_state(0.7, 1.0, 3.0);
        let spec = DiffusionSpec::new(DiffusionKind::R, 1.0);
        let cfg = StepConfig::new(1e-2, 2.0);
        let a = simulate_path(&m, &spec, &fs, &cfg, &RecordPlan::every(10), 11).unwrap();
        let b = simulate_path(&m, &spec, &fs, &cfg, &RecordPlan::every(10), 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 21);
    }
}
