//! Spacetime catalog: Minkowski space and warped products I×M with metric
//! dt² − α(t)² h, in the charts the rest of the crate integrates in.
//!
//! Index 0 of a chart point is the cosmological time t. Spatial indices 1..d
//! correspond to factor coordinates 0..d−1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{invert, Gamma, Mat4, Rank4, Vec4, MAX_N, ZERO_GAMMA, ZERO_MAT, ZERO_RANK4};

/// Expansion factor α(t) with analytic first and second derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpansionFactor {
    /// t^c.
    Power { c: f64 },
    Constant { value: f64 },
    /// cosh t.
    Cosh,
    /// e^{rate·t}.
    Exponential { rate: f64 },
}

impl ExpansionFactor {
    /// (α, α′, α″) at t.
    #[inline]
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        match *self {
            ExpansionFactor::Power { c } => {
                let a = t.powf(c);
                (a, c * a / t, c * (c - 1.0) * a / (t * t))
            }
            ExpansionFactor::Constant { value } => (value, 0.0, 0.0),
            ExpansionFactor::Cosh => (t.cosh(), t.sinh(), t.cosh()),
            ExpansionFactor::Exponential { rate } => {
                let a = (rate * t).exp();
                (a, rate * a, rate * rate * a)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ExpansionFactor::Power { c } if !(c.is_finite() && c > 0.0) => {
                Err(Error::invalid("c must be positive"))
            }
            ExpansionFactor::Constant { value } if !(value.is_finite() && value > 0.0) => {
                Err(Error::invalid("constant expansion factor must be positive"))
            }
            ExpansionFactor::Exponential { rate } if !rate.is_finite() => {
                Err(Error::invalid("exponential rate must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Riemannian factor (M, h) together with its chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RiemannFactor {
    /// Euclidean space in Cartesian coordinates.
    Flat { dim: usize },
    /// Three-dimensional space of constant curvature k in coordinates (r, φ, ψ),
    /// h = dr²/(1−kr²) + r²(dφ² + sin²φ dψ²).
    ConstantCurvature { k: f64 },
    /// Unit two-sphere times a line in coordinates (θ, φ, z).
    SphereTimesLine,
}

impl RiemannFactor {
    pub fn dim(&self) -> usize {
        match *self {
            RiemannFactor::Flat { dim } => dim,
            RiemannFactor::ConstantCurvature { .. } | RiemannFactor::SphereTimesLine => 3,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RiemannFactor::Flat { dim } if !(1..MAX_N).contains(&dim) => Err(Error::invalid(format!(
                "factor dimension must be between 1 and {}",
                MAX_N - 1
            ))),
            RiemannFactor::ConstantCurvature { k } if !k.is_finite() => {
                Err(Error::invalid("curvature k must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn check_domain(&self, y: &[f64]) -> Result<()> {
        match *self {
            RiemannFactor::Flat { .. } => Ok(()),
            RiemannFactor::ConstantCurvature { k } => {
                let (r, phi) = (y[0], y[1]);
                if !(r > 0.0) {
                    return Err(Error::ChartDomain(format!("radius {r} must be positive")));
                }
                if k > 0.0 && !(k * r * r < 1.0) {
                    return Err(Error::ChartDomain(format!("radius {r} outside (0, 1/sqrt(k))")));
                }
                if !(phi > 0.0 && phi < std::f64::consts::PI) {
                    return Err(Error::ChartDomain(format!("polar angle {phi} outside (0, pi)")));
                }
                Ok(())
            }
            RiemannFactor::SphereTimesLine => {
                let theta = y[0];
                if !(theta > 0.0 && theta < std::f64::consts::PI) {
                    return Err(Error::ChartDomain(format!("polar angle {theta} outside (0, pi)")));
                }
                Ok(())
            }
        }
    }

    /// Diagonal of h; every supported chart is orthogonal.
    #[inline]
    pub fn metric_diag(&self, y: &[f64]) -> [f64; 3] {
        match *self {
            RiemannFactor::Flat { .. } => [1.0, 1.0, 1.0],
            RiemannFactor::ConstantCurvature { k } => {
                let (r, phi) = (y[0], y[1]);
                let s = phi.sin();
                [1.0 / (1.0 - k * r * r), r * r, r * r * s * s]
            }
            RiemannFactor::SphereTimesLine => {
                let s = y[0].sin();
                [1.0, s * s, 1.0]
            }
        }
    }

    /// Γ(h)^p_{mn}, indexed `[p][m][n]` over factor indices.
    pub fn christoffel(&self, y: &[f64]) -> [[[f64; 3]; 3]; 3] {
        let mut g = [[[0.0; 3]; 3]; 3];
        match *self {
            RiemannFactor::Flat { .. } => {}
            RiemannFactor::ConstantCurvature { k } => {
                let (r, phi) = (y[0], y[1]);
                let (s, c) = phi.sin_cos();
                let w = 1.0 - k * r * r;
                g[0][0][0] = k * r / w;
                g[0][1][1] = -r * w;
                g[0][2][2] = -r * w * s * s;
                g[1][0][1] = 1.0 / r;
                g[1][1][0] = 1.0 / r;
                g[1][2][2] = -s * c;
                g[2][0][2] = 1.0 / r;
                g[2][2][0] = 1.0 / r;
                g[2][1][2] = c / s;
                g[2][2][1] = c / s;
            }
            RiemannFactor::SphereTimesLine => {
                let (s, c) = y[0].sin_cos();
                g[0][1][1] = -s * c;
                g[1][0][1] = c / s;
                g[1][1][0] = c / s;
            }
        }
        g
    }

    /// Fully covariant curvature K_{mnpq} of h, in the same convention as the
    /// chart Riemann tensor of the spacetime (sphere: K_{mnpq} = h_mp h_nq − h_mq h_np).
    pub fn riemann(&self, y: &[f64]) -> [[[[f64; 3]; 3]; 3]; 3] {
        let mut out = [[[[0.0; 3]; 3]; 3]; 3];
        let h = self.metric_diag(y);
        let hm = |a: usize, b: usize| if a == b { h[a] } else { 0.0 };
        match *self {
            RiemannFactor::Flat { .. } => {}
            RiemannFactor::ConstantCurvature { k } => {
                for m in 0..3 {
                    for n in 0..3 {
                        for p in 0..3 {
                            for q in 0..3 {
                                out[m][n][p][q] = k * (hm(m, p) * hm(n, q) - hm(m, q) * hm(n, p));
                            }
                        }
                    }
                }
            }
            RiemannFactor::SphereTimesLine => {
                for m in 0..2 {
                    for n in 0..2 {
                        for p in 0..2 {
                            for q in 0..2 {
                                out[m][n][p][q] = hm(m, p) * hm(n, q) - hm(m, q) * hm(n, p);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Ricci tensor K_{mp} of h.
    pub fn ricci(&self, y: &[f64]) -> [[f64; 3]; 3] {
        let h = self.metric_diag(y);
        let mut out = [[0.0; 3]; 3];
        match *self {
            RiemannFactor::Flat { .. } => {}
            RiemannFactor::ConstantCurvature { k } => {
                for i in 0..3 {
                    out[i][i] = 2.0 * k * h[i];
                }
            }
            RiemannFactor::SphereTimesLine => {
                out[0][0] = h[0];
                out[1][1] = h[1];
            }
        }
        out
    }

    /// Scalar curvature of h (constant for every supported factor).
    pub fn scalar(&self) -> f64 {
        match *self {
            RiemannFactor::Flat { .. } => 0.0,
            RiemannFactor::ConstantCurvature { k } => 6.0 * k,
            RiemannFactor::SphereTimesLine => 2.0,
        }
    }

    /// inf of Ric(w,w)/h(w,w) over the factor.
    pub fn ricci_lower_bound(&self) -> f64 {
        match *self {
            RiemannFactor::Flat { .. } => 0.0,
            RiemannFactor::ConstantCurvature { k } => 2.0 * k,
            RiemannFactor::SphereTimesLine => 0.0,
        }
    }

    /// Ric = Ω·h for a function Ω on the factor.
    pub fn is_einstein(&self) -> bool {
        !matches!(self, RiemannFactor::SphereTimesLine)
    }

    /// inf of the sectional curvature of h.
    pub fn sectional_lower_bound(&self) -> f64 {
        match *self {
            RiemannFactor::Flat { .. } => 0.0,
            RiemannFactor::ConstantCurvature { k } => k,
            RiemannFactor::SphereTimesLine => 0.0,
        }
    }
}

/// Time interval I, open at both ends; `None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Default for Interval {
    fn default() -> Self {
        Interval { lo: Some(0.0), hi: None }
    }
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        self.lo.is_none_or(|lo| t > lo) && self.hi.is_none_or(|hi| t < hi)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    #[default]
    Cartesian,
    Spherical,
}

fn spherical() -> Chart {
    Chart::Spherical
}

/// Model selection: kind plus parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Minkowski {
        d: usize,
    },
    Warped {
        alpha: ExpansionFactor,
        factor: RiemannFactor,
        #[serde(default)]
        interval: Interval,
    },
    /// Robertson-Walker with curvature sign k ∈ {−1, 0, 1}.
    Rw {
        k: i32,
        alpha: ExpansionFactor,
        #[serde(default = "spherical")]
        chart: Chart,
        #[serde(default)]
        interval: Interval,
    },
    /// k = 0, α = t^c, d = 3.
    Eds {
        c: f64,
        #[serde(default)]
        chart: Chart,
    },
}

/// Resolved warped-product data shared by every model kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Warp {
    pub alpha: ExpansionFactor,
    pub factor: RiemannFactor,
    pub interval: Interval,
}

/// Metric and inverse at a chart point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric {
    pub n: usize,
    pub g: Mat4,
    pub inv: Mat4,
}

impl ModelSpec {
    pub fn eds(c: f64) -> Self {
        ModelSpec::Eds { c, chart: Chart::Cartesian }
    }

    pub fn minkowski(d: usize) -> Self {
        ModelSpec::Minkowski { d }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Minkowski { d } => {
                if !(1..MAX_N).contains(d) {
                    return Err(Error::invalid(format!("d must be between 1 and {}", MAX_N - 1)));
                }
            }
            ModelSpec::Warped { alpha, factor, interval } => {
                alpha.validate()?;
                factor.validate()?;
                check_interval(interval)?;
            }
            ModelSpec::Rw { k, alpha, chart, interval } => {
                if !(-1..=1).contains(k) {
                    return Err(Error::invalid("k must be -1, 0 or 1"));
                }
                if *chart == Chart::Cartesian && *k != 0 {
                    return Err(Error::invalid("the Cartesian chart requires k = 0"));
                }
                alpha.validate()?;
                check_interval(interval)?;
            }
            ModelSpec::Eds { c, .. } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::invalid("c must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn warp(&self) -> Warp {
        match self {
            ModelSpec::Minkowski { d } => Warp {
                alpha: ExpansionFactor::Constant { value: 1.0 },
                factor: RiemannFactor::Flat { dim: *d },
                interval: Interval { lo: None, hi: None },
            },
            ModelSpec::Warped { alpha, factor, interval } => Warp {
                alpha: alpha.clone(),
                factor: factor.clone(),
                interval: *interval,
            },
            ModelSpec::Rw { k, alpha, chart, interval } => Warp {
                alpha: alpha.clone(),
                factor: match chart {
                    Chart::Cartesian => RiemannFactor::Flat { dim: 3 },
                    Chart::Spherical => RiemannFactor::ConstantCurvature { k: *k as f64 },
                },
                interval: *interval,
            },
            ModelSpec::Eds { c, chart } => Warp {
                alpha: ExpansionFactor::Power { c: *c },
                factor: match chart {
                    Chart::Cartesian => RiemannFactor::Flat { dim: 3 },
                    Chart::Spherical => RiemannFactor::ConstantCurvature { k: 0.0 },
                },
                interval: Interval::default(),
            },
        }
    }

    /// Spatial dimension d.
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Minkowski { d } => *d,
            ModelSpec::Warped { factor, .. } => factor.dim(),
            _ => 3,
        }
    }

    /// Spacetime dimension d+1.
    pub fn n(&self) -> usize {
        self.dim() + 1
    }

    /// Exponent c when α(t) = t^c.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.warp().alpha {
            ExpansionFactor::Power { c } => Some(c),
            _ => None,
        }
    }

    pub fn eds_exponent(&self) -> Option<f64> {
        match self {
            ModelSpec::Eds { c, .. } => Some(*c),
            _ => None,
        }
    }

    /// Whether cosmological time is restricted to t > 0 (every model but Minkowski).
    pub fn has_time_origin(&self) -> bool {
        !matches!(self, ModelSpec::Minkowski { .. })
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        let n = self.n();
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::ChartDomain("non-finite coordinate".into()));
        }
        let w = self.warp();
        if !w.interval.contains(p[0]) {
            return Err(Error::ChartDomain(format!("t = {} outside the model interval", p[0])));
        }
        w.factor.check_domain(&p[1..])
    }

    /// (α, α′, α″) at t.
    pub fn alpha_at(&self, t: f64) -> (f64, f64, f64) {
        self.warp().alpha.eval(t)
    }

    pub fn metric_at(&self, p: &[f64]) -> Result<Metric> {
        self.check_point(p)?;
        Ok(self.metric_unchecked(p))
    }

    pub(crate) fn metric_unchecked(&self, p: &[f64]) -> Metric {
        let n = self.n();
        let w = self.warp();
        let (a, _, _) = w.alpha.eval(p[0]);
        let h = w.factor.metric_diag(&p[1..]);
        let mut g = ZERO_MAT;
        let mut inv = ZERO_MAT;
        g[0][0] = 1.0;
        inv[0][0] = 1.0;
        for m in 1..n {
            g[m][m] = -a * a * h[m - 1];
            inv[m][m] = 1.0 / g[m][m];
        }
        Metric { n, g, inv }
    }

    /// Metric of an arbitrary chart point without the domain check, used by
    /// finite-difference stencils that may straddle the boundary of validity.
    pub fn metric_matrix(&self, p: &[f64]) -> Mat4 {
        self.metric_unchecked(p).g
    }

    pub fn christoffel_at(&self, p: &[f64]) -> Result<Gamma> {
        self.check_point(p)?;
        Ok(self.christoffel_unchecked(p))
    }

    pub(crate) fn christoffel_unchecked(&self, p: &[f64]) -> Gamma {
        let n = self.n();
        let w = self.warp();
        let (a, a1, _) = w.alpha.eval(p[0]);
        let mut out = ZERO_GAMMA;
        if a1 != 0.0 {
            let hub = a1 / a;
            let h = w.factor.metric_diag(&p[1..]);
            for m in 1..n {
                out[0][m][m] = a * a1 * h[m - 1];
                out[m][0][m] = hub;
                out[m][m][0] = hub;
            }
        }
        if !matches!(w.factor, RiemannFactor::Flat { .. }) {
            let gh = w.factor.christoffel(&p[1..]);
            for pi in 1..n {
                for m in 1..n {
                    for q in 1..n {
                        out[pi][m][q] = gh[pi - 1][m - 1][q - 1];
                    }
                }
            }
        }
        out
    }

    /// Hubble function α′/α; zero for Minkowski.
    pub fn hubble(&self, t: f64) -> f64 {
        let (a, a1, _) = self.alpha_at(t);
        a1 / a
    }

    /// Whether ∫^∞ α/√(1+α²) dt diverges on the model interval.
    pub fn eternal_check(&self) -> bool {
        let w = self.warp();
        match (self, w.interval.hi) {
            (ModelSpec::Minkowski { .. }, _) | (ModelSpec::Eds { .. }, _) => true,
            (_, Some(_)) => false,
            (_, None) => {
                let f = |t: f64| {
                    let (a, _, _) = w.alpha.eval(t);
                    if a.is_infinite() {
                        1.0
                    } else {
                        a / (1.0 + a * a).sqrt()
                    }
                };
                // Integrand tends to a positive limit, or decays no faster than 1/t.
                let t1 = 1e6;
                let (f1, f2) = (f(t1), f(2.0 * t1));
                if f2 > 1e-3 {
                    return true;
                }
                if f2 <= 0.0 {
                    return false;
                }
                let decay = (f1 / f2).log2();
                decay <= 1.0 + 1e-6
            }
        }
    }

    /// Chart Riemann tensor of the warped closed form, R̃_{mnpq}.
    pub(crate) fn riemann_closed(&self, p: &[f64]) -> Rank4 {
        let n = self.n();
        let w = self.warp();
        let (a, a1, a2) = w.alpha.eval(p[0]);
        let y = &p[1..];
        let h = w.factor.metric_diag(y);
        let hm = |i: usize, j: usize| if i == j { h[i] } else { 0.0 };
        let k = w.factor.riemann(y);
        let mut r = ZERO_RANK4;
        let aa2 = a * a2;
        for i in 1..n {
            let v = aa2 * h[i - 1];
            r[0][i][0][i] = v;
            r[i][0][i][0] = v;
            r[0][i][i][0] = -v;
            r[i][0][0][i] = -v;
        }
        let s = (a * a1) * (a * a1);
        for m in 1..n {
            for nn in 1..n {
                for pp in 1..n {
                    for q in 1..n {
                        let (m0, n0, p0, q0) = (m - 1, nn - 1, pp - 1, q - 1);
                        r[m][nn][pp][q] = s * (hm(m0, q0) * hm(n0, p0) - hm(m0, p0) * hm(n0, q0))
                            - a * a * k[m0][n0][p0][q0];
                    }
                }
            }
        }
        r
    }

    /// Chart Ricci tensor from the warped closed form.
    pub(crate) fn ricci_closed(&self, p: &[f64]) -> Mat4 {
        let n = self.n();
        let d = (n - 1) as f64;
        let w = self.warp();
        let (a, a1, a2) = w.alpha.eval(p[0]);
        let y = &p[1..];
        let h = w.factor.metric_diag(y);
        let mut out = ZERO_MAT;
        out[0][0] = -d * a2 / a;
        let coef = (d - 1.0) * a1 * a1 + a * a2;
        if matches!(w.factor, RiemannFactor::Flat { .. }) {
            for m in 1..n {
                out[m][m] = coef * h[m - 1];
            }
        } else {
            let kr = w.factor.ricci(y);
            for m in 1..n {
                for q in 1..n {
                    out[m][q] = kr[m - 1][q - 1];
                }
                out[m][m] += coef * h[m - 1];
            }
        }
        out
    }

    /// Scalar curvature from the warped closed form.
    pub(crate) fn scalar_closed(&self, t: f64) -> f64 {
        let d = self.dim() as f64;
        let w = self.warp();
        let (a, a1, a2) = w.alpha.eval(t);
        let hub = a1 / a;
        -w.factor.scalar() / (a * a) - d * ((d - 1.0) * hub * hub + 2.0 * a2 / a)
    }
}

fn check_interval(iv: &Interval) -> Result<()> {
    let lo = iv.lo.unwrap_or(f64::NEG_INFINITY);
    if lo < 0.0 {
        return Err(Error::invalid("the time interval must lie in (0, inf)"));
    }
    if let Some(hi) = iv.hi {
        if !(hi > lo) {
            return Err(Error::invalid("empty time interval"));
        }
    }
    Ok(())
}

/// Inverse of an arbitrary metric block; used by finite-difference paths.
pub(crate) fn inverse_metric(g: &Mat4, n: usize) -> Result<Mat4> {
    invert(g, n).ok_or_else(|| Error::ChartDomain("singular metric".into()))
}

/// Chart point from the first `n` entries.
pub fn point(coords: &[f64]) -> Vec4 {
    let mut p = [0.0; MAX_N];
    p[..coords.len()].copy_from_slice(coords);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{mat_mul, max_abs_gamma};

    #[test]
    fn eds_metric_examples() {
        let m = ModelSpec::eds(2.0 / 3.0);
        let g1 = m.metric_at(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(g1.g[0][0], 1.0);
        for i in 1..4 {
            assert!((g1.g[i][i] + 1.0).abs() < 1e-15);
        }
        let g8 = m.metric_at(&[8.0, 0.0, 0.0, 0.0]).unwrap();
        for i in 1..4 {
            assert!((g8.g[i][i] + 16.0).abs() < 1e-12);
        }
        let prod = mat_mul(&g8.g, &g8.inv, 4);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn minkowski_is_flat_everywhere() {
        let m = ModelSpec::minkowski(3);
        let p = [-2.0, 5.0, 1.0, 3.0];
        let g = m.metric_at(&p).unwrap();
        assert_eq!(g.g[0][0], 1.0);
        assert_eq!(g.g[2][2], -1.0);
        assert_eq!(max_abs_gamma(&m.christoffel_at(&p).unwrap(), 4), 0.0);
        assert_eq!(m.hubble(3.0), 0.0);
        assert!(m.eternal_check());
    }

    #[test]
    fn eds_christoffel_examples() {
        let c = 0.7;
        let t = 2.3;
        let m = ModelSpec::eds(c);
        let gam = m.christoffel_at(&[t, 0.1, 0.2, 0.3]).unwrap();
        for i in 1..4 {
            assert!((gam[0][i][i] - c * t.powf(2.0 * c - 1.0)).abs() < 1e-14);
            assert!((gam[i][0][i] - c / t).abs() < 1e-15);
            assert!((gam[i][i][0] - c / t).abs() < 1e-15);
        }
    }

    #[test]
    fn hubble_examples() {
        assert!((ModelSpec::eds(1.0).hubble(2.0) - 0.5).abs() < 1e-15);
        assert!((ModelSpec::eds(2.0 / 3.0).hubble(1.0) - 2.0 / 3.0).abs() < 1e-15);
        let flat = ModelSpec::Warped {
            alpha: ExpansionFactor::Constant { value: 2.0 },
            factor: RiemannFactor::Flat { dim: 3 },
            interval: Interval::default(),
        };
        assert_eq!(flat.hubble(4.0), 0.0);
    }

    #[test]
    fn eternal_examples() {
        assert!(ModelSpec::eds(0.3).eternal_check());
        let bounded = ModelSpec::Warped {
            alpha: ExpansionFactor::Power { c: 0.5 },
            factor: RiemannFactor::Flat { dim: 3 },
            interval: Interval { lo: Some(0.0), hi: Some(1.0) },
        };
        assert!(!bounded.eternal_check());
        let decaying = ModelSpec::Warped {
            alpha: ExpansionFactor::Exponential { rate: -1.0 },
            factor: RiemannFactor::Flat { dim: 3 },
            interval: Interval::default(),
        };
        assert!(!decaying.eternal_check());
    }

    #[test]
    fn validation_messages() {
        let err = ModelSpec::eds(-1.0).validate().unwrap_err();
        assert!(err.to_string().contains("c must be positive"));
        let err = ModelSpec::Rw {
            k: 1,
            alpha: ExpansionFactor::Power { c: 0.5 },
            chart: Chart::Cartesian,
            interval: Interval::default(),
        }
        .validate()
        .unwrap_err();
        assert!(err.to_string().contains("Cartesian"));
        assert!(ModelSpec::minkowski(5).validate().is_err());
    }

    #[test]
    fn chart_domain_errors() {
        let m = ModelSpec::eds(0.5);
        assert_eq!(m.metric_at(&[0.0, 0.0, 0.0, 0.0]).unwrap_err().kind(), "ChartDomain");
        let sphere = ModelSpec::Rw {
            k: 1,
            alpha: ExpansionFactor::Power { c: 0.5 },
            chart: Chart::Spherical,
            interval: Interval::default(),
        };
        assert!(sphere.metric_at(&[1.0, 0.5, 1.0, 0.0]).is_ok());
        assert_eq!(sphere.metric_at(&[1.0, 1.2, 1.0, 0.0]).unwrap_err().kind(), "ChartDomain");
        assert_eq!(sphere.metric_at(&[1.0, -0.1, 1.0, 0.0]).unwrap_err().kind(), "ChartDomain");
    }

    #[test]
    fn model_json_round_trip() {
        let m = ModelSpec::Rw {
            k: -1,
            alpha: ExpansionFactor::Cosh,
            chart: Chart::Spherical,
            interval: Interval { lo: Some(0.0), hi: None },
        };
        let s = serde_json::to_string(&m).unwrap();
        let back: ModelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let bad = r#"{"kind":"eds","c":0.5,"colour":1}"#;
        assert!(serde_json::from_str::<ModelSpec>(bad).is_err());
    }
}
