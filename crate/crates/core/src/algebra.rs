//! Minkowski-space linear algebra: the metric η = diag(1, −1, …, −1), bivectors
//! u∧v acting as elements of so(1,d), their Lie bracket, and pseudo-orthonormal
//! frames with respect to a chart metric.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::{quad, Mat4, Vec4, MAX_N, ZERO_MAT, ZERO_VEC};

pub type MinkVector = DVector<f64>;

/// Degeneracy threshold for frame vectors.
pub const DEGENERACY_TOL: f64 = 1e-10;

pub fn eta(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (a, b) if a == b => -1.0,
        _ => 0.0,
    })
}

/// η_{ij} as a number.
#[inline]
pub fn eta_ij(i: usize, j: usize) -> f64 {
    if i != j {
        0.0
    } else if i == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Canonical basis vector e_i of R^{1,d}, with `n = d+1` components.
pub fn basis(n: usize, i: usize) -> MinkVector {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    if a < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: a });
    }
    Ok(())
}

pub fn eta_inner(u: &MinkVector, v: &MinkVector) -> Result<f64> {
    check_dims(u.len(), v.len())?;
    let spatial: f64 = u.iter().zip(v.iter()).skip(1).map(|(a, b)| a * b).sum();
    Ok(u[0] * v[0] - spatial)
}

/// (u∧v)(w) = ⟨u,w⟩ v − ⟨v,w⟩ u.
pub fn wedge_action(u: &MinkVector, v: &MinkVector, w: &MinkVector) -> Result<MinkVector> {
    check_dims(u.len(), v.len())?;
    check_dims(u.len(), w.len())?;
    let uw = eta_inner(u, w)?;
    let vw = eta_inner(v, w)?;
    Ok(v * uw - u * vw)
}

/// An element of ⋀²R^{1,d}, stored as the antisymmetric coefficient matrix
/// C = Σ u vᵀ − v uᵀ over its simple summands.
#[derive(Clone, Debug, PartialEq)]
pub struct Bivector {
    matrix: DMatrix<f64>,
}

impl Bivector {
    pub fn zeros(n: usize) -> Self {
        Bivector { matrix: DMatrix::zeros(n, n) }
    }

    /// Builds from any square matrix by keeping its antisymmetric part.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        Ok(Self::antisymmetrized(m))
    }

    fn antisymmetrized(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let x = 0.5 * (m[(i, j)] - m[(j, i)]);
                out[(i, j)] = x;
                out[(j, i)] = -x;
            }
        }
        Bivector { matrix: out }
    }

    pub fn wedge(u: &MinkVector, v: &MinkVector) -> Result<Self> {
        check_dims(u.len(), v.len())?;
        let n = u.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let x = u[i] * v[j] - v[i] * u[j];
                m[(i, j)] = x;
                m[(j, i)] = -x;
            }
        }
        Ok(Bivector { matrix: m })
    }

    /// e_i ∧ e_j.
    pub fn basis(n: usize, i: usize, j: usize) -> Self {
        Self::wedge(&basis(n, i), &basis(n, j)).expect("basis dimensions agree")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Matrix of the so(1,d) endomorphism: w ↦ −C η w.
    pub fn operator(&self) -> DMatrix<f64> {
        -(&self.matrix * eta(self.dim()))
    }

    fn from_operator(op: &DMatrix<f64>) -> Self {
        let c = -(op * eta(op.nrows()));
        Self::antisymmetrized(&c)
    }

    pub fn act(&self, w: &MinkVector) -> Result<MinkVector> {
        check_dims(self.dim(), w.len())?;
        Ok(self.operator() * w)
    }

    pub fn scale(&self, s: f64) -> Self {
        Bivector { matrix: &self.matrix * s }
    }

    pub fn add(&self, other: &Bivector) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Bivector { matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Bivector) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Bivector { matrix: &self.matrix - &other.matrix })
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// exp(ε·X) as a matrix acting on coefficient columns in the canonical basis.
    pub fn exp_operator(&self, eps: f64) -> DMatrix<f64> {
        (self.operator() * eps).exp()
    }
}

/// Lie bracket of so(1,d), realized as the commutator of the endomorphisms.
pub fn so_bracket(x: &Bivector, y: &Bivector) -> Result<Bivector> {
    check_dims(x.dim(), y.dim())?;
    let a = x.operator();
    let b = y.operator();
    Ok(Bivector::from_operator(&(&a * &b - &b * &a)))
}

/// Bilinear extension of ⟨u∧v, a∧b⟩ = ⟨u,a⟩⟨v,b⟩ − ⟨u,b⟩⟨v,a⟩.
pub fn eta_inner_bivec(a: &Bivector, b: &Bivector) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a.matrix[(i, j)] * b.matrix[(i, j)] * eta_ij(i, i) * eta_ij(j, j);
        }
    }
    Ok(0.5 * acc)
}

/// A frame (e_0, …, e_d) over a chart point, given by chart components, together
/// with the chart metric at that point.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub n: usize,
    /// `vectors[j]` holds the chart components of e_j.
    pub vectors: [Vec4; MAX_N],
    pub metric: Mat4,
}

impl Frame {
    pub fn new(n: usize, vectors: [Vec4; MAX_N], metric: Mat4) -> Result<Self> {
        if !(2..=MAX_N).contains(&n) {
            return Err(Error::DimensionMismatch { expected: MAX_N, got: n });
        }
        Ok(Frame { n, vectors, metric })
    }

    pub fn velocity(&self) -> &Vec4 {
        &self.vectors[0]
    }

    pub fn g(&self, u: &Vec4, v: &Vec4) -> f64 {
        quad(&self.metric, u, v, self.n)
    }

    /// Gram matrix g(e_i, e_j).
    pub fn gram(&self) -> Mat4 {
        let mut out = ZERO_MAT;
        for i in 0..self.n {
            for j in 0..self.n {
                out[i][j] = self.g(&self.vectors[i], &self.vectors[j]);
            }
        }
        out
    }

    /// Largest deviation |g(e_i,e_j) − η_{ij}|.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.gram();
        let mut worst = 0.0f64;
        for (i, row) in gram.iter().enumerate().take(self.n) {
            for (j, x) in row.iter().enumerate().take(self.n) {
                worst = worst.max((x - eta_ij(i, j)).abs());
            }
        }
        worst
    }

    /// The frame u·A, with new vectors e'_j = Σ_i e_i A_{ij}.
    pub fn right_mul(&self, a: &DMatrix<f64>) -> Result<Frame> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: a.nrows() });
        }
        let mut vectors = [ZERO_VEC; MAX_N];
        for (j, out) in vectors.iter_mut().enumerate().take(self.n) {
            for i in 0..self.n {
                for k in 0..self.n {
                    out[k] += self.vectors[i][k] * a[(i, j)];
                }
            }
        }
        Ok(Frame { n: self.n, vectors, metric: self.metric })
    }

    /// The frame moved along the one-parameter group exp(ε·X).
    pub fn rotated(&self, x: &Bivector, eps: f64) -> Result<Frame> {
        self.right_mul(&x.exp_operator(eps))
    }
}

/// Pseudo-orthonormalizes a frame with respect to its metric.
///
/// e_0 is normalized first and keeps its direction; the spatial vectors are
/// orthogonalized in order 1..d against e_0 and their predecessors, with one
/// re-orthogonalization pass.
pub fn gram_schmidt_g(frame: &Frame) -> Result<Frame> {
    let n = frame.n;
    let mut out = frame.clone();
    let e0 = out.vectors[0];
    let nrm = frame.g(&e0, &e0);
    if nrm < DEGENERACY_TOL || !(e0[0] > 0.0) {
        return Err(Error::DegenerateFrame { index: 0, norm: nrm });
    }
    let s = nrm.sqrt();
    for k in 0..n {
        out.vectors[0][k] = e0[k] / s;
    }
    for j in 1..n {
        let mut v = out.vectors[j];
        for _ in 0..2 {
            let c0 = frame.g(&v, &out.vectors[0]);
            for k in 0..n {
                v[k] -= c0 * out.vectors[0][k];
            }
            for i in 1..j {
                let ci = frame.g(&v, &out.vectors[i]);
                for k in 0..n {
                    v[k] += ci * out.vectors[i][k];
                }
            }
        }
        let nrm = frame.g(&v, &v);
        if -nrm < DEGENERACY_TOL {
            return Err(Error::DegenerateFrame { index: j, norm: nrm });
        }
        let s = (-nrm).sqrt();
        for k in 0..n {
            out.vectors[j][k] = v[k] / s;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize) -> MinkVector {
        basis(4, i)
    }

    #[test]
    fn inner_products_of_basis() {
        assert_eq!(eta_inner(&e(0), &e(0)).unwrap(), 1.0);
        assert_eq!(eta_inner(&e(1), &e(1)).unwrap(), -1.0);
        assert_eq!(eta_inner(&e(0), &e(1)).unwrap(), 0.0);
    }

    #[test]
    fn inner_rejects_mismatch() {
        let err = eta_inner(&basis(3, 0), &basis(4, 0)).unwrap_err();
        assert_eq!(err.kind(), "DimensionMismatch");
    }

    #[test]
    fn wedge_action_examples() {
        assert_eq!(wedge_action(&e(0), &e(1), &e(0)).unwrap(), e(1));
        assert_eq!(wedge_action(&e(0), &e(1), &e(1)).unwrap(), e(0));
        assert_eq!(wedge_action(&e(1), &e(2), &e(0)).unwrap(), DVector::zeros(4));
    }

    #[test]
    fn operator_matches_wedge_action() {
        let u = DVector::from_vec(vec![1.3, 0.2, -0.7, 0.4]);
        let v = DVector::from_vec(vec![0.1, 2.0, 0.3, -1.1]);
        let w = DVector::from_vec(vec![-0.5, 0.9, 1.7, 0.2]);
        let direct = wedge_action(&u, &v, &w).unwrap();
        let via = Bivector::wedge(&u, &v).unwrap().act(&w).unwrap();
        assert!((direct - via).amax() < 1e-14);
    }

    #[test]
    fn bracket_examples() {
        let b01 = Bivector::basis(4, 0, 1);
        let b02 = Bivector::basis(4, 0, 2);
        let b12 = Bivector::basis(4, 1, 2);
        assert_eq!(so_bracket(&b01, &b02).unwrap(), b12);
        assert_eq!(so_bracket(&b12, &b12).unwrap(), Bivector::zeros(4));
    }

    #[test]
    fn bivector_inner_examples() {
        let b01 = Bivector::basis(4, 0, 1);
        let b02 = Bivector::basis(4, 0, 2);
        let b12 = Bivector::basis(4, 1, 2);
        assert_eq!(eta_inner_bivec(&b01, &b01).unwrap(), -1.0);
        assert_eq!(eta_inner_bivec(&b12, &b12).unwrap(), 1.0);
        assert_eq!(eta_inner_bivec(&b01, &b02).unwrap(), 0.0);
    }

    #[test]
    fn bivector_inner_matches_simple_formula() {
        let u = DVector::from_vec(vec![1.3, 0.2, -0.7, 0.4]);
        let v = DVector::from_vec(vec![0.1, 2.0, 0.3, -1.1]);
        let a = DVector::from_vec(vec![-0.5, 0.9, 1.7, 0.2]);
        let b = DVector::from_vec(vec![0.8, -0.3, 0.6, 1.4]);
        let ip = |x: &MinkVector, y: &MinkVector| eta_inner(x, y).unwrap();
        let want = ip(&u, &a) * ip(&v, &b) - ip(&u, &b) * ip(&v, &a);
        let got = eta_inner_bivec(&Bivector::wedge(&u, &v).unwrap(), &Bivector::wedge(&a, &b).unwrap())
            .unwrap();
        assert!((want - got).abs() < 1e-13);
    }

    fn minkowski_frame() -> Frame {
        let mut g = ZERO_MAT;
        let mut vectors = [ZERO_VEC; MAX_N];
        for i in 0..4 {
            g[i][i] = eta_ij(i, i);
            vectors[i][i] = 1.0;
        }
        Frame::new(4, vectors, g).unwrap()
    }

    #[test]
    fn gram_schmidt_is_idempotent() {
        let f = minkowski_frame();
        let out = gram_schmidt_g(&f).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                assert!((out.vectors[j][k] - f.vectors[j][k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gram_schmidt_repairs_tilt() {
        let mut f = minkowski_frame();
        for k in 0..4 {
            f.vectors[1][k] += 0.01 * f.vectors[2][k];
        }
        let out = gram_schmidt_g(&f).unwrap();
        assert!(out.orthonormality_error() < 1e-12);
    }

    #[test]
    fn gram_schmidt_rejects_dependent() {
        let mut f = minkowski_frame();
        f.vectors[1] = f.vectors[2];
        let err = gram_schmidt_g(&f).unwrap_err();
        assert_eq!(err.kind(), "DegenerateFrame");
    }

    #[test]
    fn gram_schmidt_keeps_velocity_direction() {
        let mut f = minkowski_frame();
        f.metric[1][1] = -4.0;
        f.vectors[0] = [3.0, 0.5, 0.2, 0.0];
        let out = gram_schmidt_g(&f).unwrap();
        let ratio = out.vectors[0][0] / 3.0;
        for k in 0..4 {
            assert!((out.vectors[0][k] - ratio * f.vectors[0][k]).abs() < 1e-15);
        }
        assert!(out.orthonormality_error() < 1e-12);
    }
}
