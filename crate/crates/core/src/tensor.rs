//! Fixed-capacity dense storage for chart tensors.
//!
//! Every spacetime handled here has dimension n = d+1 ≤ 4, so tensors live in
//! stack arrays of side [`MAX_N`] and carry the active dimension separately.
//! Entries outside the active block are kept at zero.

pub const MAX_N: usize = 4;

pub type Vec4 = [f64; MAX_N];
pub type Mat4 = [[f64; MAX_N]; MAX_N];
/// Christoffel symbols, indexed `[k][i][j]` for Γ^k_{ij}.
pub type Gamma = [[[f64; MAX_N]; MAX_N]; MAX_N];
/// Fully covariant rank-4 tensor, indexed `[m][n][p][q]`.
pub type Rank4 = [[[[f64; MAX_N]; MAX_N]; MAX_N]; MAX_N];

pub const ZERO_VEC: Vec4 = [0.0; MAX_N];
pub const ZERO_MAT: Mat4 = [[0.0; MAX_N]; MAX_N];
pub const ZERO_GAMMA: Gamma = [[[0.0; MAX_N]; MAX_N]; MAX_N];
pub const ZERO_RANK4: Rank4 = [[[[0.0; MAX_N]; MAX_N]; MAX_N]; MAX_N];

pub fn vec_from_slice(s: &[f64]) -> Vec4 {
    let mut v = ZERO_VEC;
    v[..s.len()].copy_from_slice(s);
    v
}

/// Bilinear form m(u, v) over the first `n` components.
#[inline]
pub fn quad(m: &Mat4, u: &Vec4, v: &Vec4, n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[i][j] * v[j];
        }
        acc += u[i] * row;
    }
    acc
}

#[inline]
pub fn mat_vec(m: &Mat4, v: &Vec4, n: usize) -> Vec4 {
    let mut out = ZERO_VEC;
    for i in 0..n {
        for j in 0..n {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

#[inline]
pub fn mat_mul(a: &Mat4, b: &Mat4, n: usize) -> Mat4 {
    let mut out = ZERO_MAT;
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Γ^k_{ij} u^i v^j.
#[inline]
pub fn contract_gamma(gamma: &Gamma, u: &Vec4, v: &Vec4, n: usize) -> Vec4 {
    let mut out = ZERO_VEC;
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                acc += gamma[k][i][j] * u[i] * v[j];
            }
        }
        out[k] = acc;
    }
    out
}

/// Inverse of the leading n×n block by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` for a singular block.
pub fn invert(m: &Mat4, n: usize) -> Option<Mat4> {
    let mut a = *m;
    let mut inv = ZERO_MAT;
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Largest absolute entry of the active block.
pub fn max_abs_mat(m: &Mat4, n: usize) -> f64 {
    let mut best = 0.0f64;
    for row in m.iter().take(n) {
        for x in row.iter().take(n) {
            best = best.max(x.abs());
        }
    }
    best
}

pub fn max_abs_rank4(t: &Rank4, n: usize) -> f64 {
    let mut best = 0.0f64;
    for a in t.iter().take(n) {
        for b in a.iter().take(n) {
            for c in b.iter().take(n) {
                for x in c.iter().take(n) {
                    best = best.max(x.abs());
                }
            }
        }
    }
    best
}

pub fn max_abs_gamma(t: &Gamma, n: usize) -> f64 {
    let mut best = 0.0f64;
    for a in t.iter().take(n) {
        for b in a.iter().take(n) {
            for x in b.iter().take(n) {
                best = best.max(x.abs());
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_recovers_identity() {
        let m = [
            [2.0, 0.5, 0.0, 0.0],
            [0.5, -3.0, 0.1, 0.0],
            [0.0, 0.1, -1.0, 0.2],
            [0.0, 0.0, 0.2, -4.0],
        ];
        let inv = invert(&m, 4).unwrap();
        let id = mat_mul(&m, &inv, 4);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[i][j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn invert_rejects_singular() {
        let m = [[1.0, 2.0, 0.0, 0.0], [2.0, 4.0, 0.0, 0.0], [0.0; 4], [0.0; 4]];
        assert!(invert(&m, 2).is_none());
    }
}
