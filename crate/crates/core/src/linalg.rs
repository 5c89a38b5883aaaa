//! Dense small-dimension symmetric linear algebra and tensor storage.
//!
//! Everything here targets dimensions well below 64, so the solvers favour
//! accuracy and determinism over asymptotic speed: eigenvalues come from
//! cyclic Jacobi sweeps, orthonormalization is modified Gram-Schmidt in the
//! metric inner product, and all tie-breaking is fixed (eigenvectors are
//! sign-normalized, eigenvalues sorted ascending).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("jacobi eigensolver failed to converge after {0} sweeps")]
    NumericalFailure(usize),
    #[error("lowered tensor is not symmetric (residual {0:.3e}); (h, K) pair is inconsistent")]
    AsymmetryError(f64),
    #[error("rank deficiency detected during orthonormalization (pivot {0:.3e})")]
    RankDeficient(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular (pivot {0:.3e})")]
    SingularMatrix(f64),
}

const JACOBI_MAX_SWEEPS: usize = 64;
const GS_PIVOT_TOL: f64 = 1e-10;

/// Symmetric matrix with packed lower-triangular storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Symmetrizes an arbitrary dense matrix, returning the symmetric part
    /// and the largest absolute asymmetry that was averaged away.
    pub fn symmetrize(dense: &[Vec<f64>]) -> (Self, f64) {
        let dim = dense.len();
        let mut worst = 0.0f64;
        let m = Self::from_fn(dim, |i, j| {
            worst = worst.max((dense[i][j] - dense[j][i]).abs());
            0.5 * (dense[i][j] + dense[j][i])
        });
        (m, worst)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j) * self.get(i, j);
            }
        }
        s.sqrt()
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Inner product `v^T M w`.
    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += v[i] * self.get(i, j) * w[j];
            }
        }
        s
    }

    /// Positive definiteness by Cholesky with a relative pivot tolerance.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        let n = self.dim;
        let scale = self.frobenius_norm().max(1.0);
        let mut l = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= tol * scale {
                        return false;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }

    /// Count of negative eigenvalues (the signature defect `N(h)`).
    pub fn negative_index(&self) -> usize {
        let (vals, _) = sym_eigen(self).expect("eigensolver convergence");
        let scale = self.frobenius_norm().max(1.0);
        vals.iter().filter(|&&v| v < -1e-12 * scale).count()
    }

    /// Dense inverse via Gaussian elimination (small dims only).
    pub fn inverse(&self) -> Result<Vec<Vec<f64>>, LinalgError> {
        invert_dense(&self.to_dense())
    }
}

/// Fully symmetric cubic tensor with packed `i ≤ j ≤ k` storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym3Tensor {
    dim: usize,
    data: Vec<f64>,
}

impl Sym3Tensor {
    pub fn zeros(dim: usize) -> Self {
        let len = dim * (dim + 1) * (dim + 2) / 6;
        Sym3Tensor {
            dim,
            data: vec![0.0; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let mut t = [i, j, k];
        t.sort_unstable();
        let [a, b, c] = t;
        // tetrahedral layout: entries with max index c come after the full
        // (c)-simplex of size c(c+1)(c+2)/6
        c * (c + 1) * (c + 2) / 6 + b * (b + 1) / 2 + a
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let p = self.idx(i, j, k);
        self.data[p] = v;
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for k in 0..dim {
            for j in 0..=k {
                for i in 0..=j {
                    t.set(i, j, k, f(i, j, k));
                }
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    let v = self.get(i, j, k);
                    s += v * v;
                }
            }
        }
        s.sqrt()
    }
}

/// Once-contravariant, twice-covariant tensor `K^k_{ij}`, symmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedTensor12 {
    dim: usize,
    /// data[k * npairs + pair(i,j)]
    data: Vec<f64>,
}

impl MixedTensor12 {
    pub fn zeros(dim: usize) -> Self {
        MixedTensor12 {
            dim,
            data: vec![0.0; dim * dim * (dim + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn pair(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[k * (self.dim * (self.dim + 1) / 2) + self.pair(i, j)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let p = k * (self.dim * (self.dim + 1) / 2) + self.pair(i, j);
        self.data[p] = v;
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..=i {
                    t.set(k, i, j, f(k, i, j));
                }
            }
        }
        t
    }

    /// `K(v, w)` as a vector.
    pub fn apply(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.get(k, i, j) * v[i] * w[j];
                }
            }
            out[k] = s;
        }
        out
    }

    /// Matrix of the endomorphism `Y ↦ K(v, Y)`.
    pub fn contract(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut m = vec![vec![0.0; n]; n];
        for k in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += self.get(k, i, j) * v[i];
                }
                m[k][j] = s;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = self.get(k, i, j);
                    s += v * v;
                }
            }
        }
        s.sqrt()
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted ascending and one eigenvector per eigenvalue
/// (`vectors[i]` pairs with `values[i]`). Vectors are orthonormal and
/// sign-fixed so that the largest-magnitude component is positive.
pub fn sym_eigen(m: &SymMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>), LinalgError> {
    let n = m.dim;
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let mut a = m.to_dense();
    let mut v = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        v[i][i] = 1.0;
    }
    let scale = m.frobenius_norm().max(1.0);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q].abs();
            }
        }
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let s = theta.signum();
                    s / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let apq = a[p][q];
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for j in 0..n {
                    if j != p && j != q {
                        let g = a[j][p];
                        let h = a[j][q];
                        a[j][p] = g - s * (h + g * tau);
                        a[j][q] = h + s * (g - h * tau);
                        a[p][j] = a[j][p];
                        a[q][j] = a[j][q];
                    }
                }
                for j in 0..n {
                    let g = v[j][p];
                    let h = v[j][q];
                    v[j][p] = g - s * (h + g * tau);
                    v[j][q] = h + s * (g - h * tau);
                }
            }
        }
    }
    if !converged {
        // final check: the sweep cap is generous, accept if off-diagonal is tiny
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q].abs();
            }
        }
        if off > 1e-12 * scale {
            return Err(LinalgError::NumericalFailure(JACOBI_MAX_SWEEPS));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let mut vectors = Vec::with_capacity(n);
    for &col in &order {
        let mut vec_i: Vec<f64> = (0..n).map(|r| v[r][col]).collect();
        // deterministic sign: largest-magnitude component positive
        let mut best = 0usize;
        for r in 1..n {
            if vec_i[r].abs() > vec_i[best].abs() + 1e-14 {
                best = r;
            }
        }
        if vec_i[best] < 0.0 {
            for x in vec_i.iter_mut() {
                *x = -*x;
            }
        }
        vectors.push(vec_i);
    }
    Ok((values, vectors))
}

/// Groups sorted eigenvalues whose consecutive gaps stay below
/// `rel_tol * max(1, largest magnitude)`. Groups keep ascending order.
pub fn cluster_eigenvalues(values: &[f64], rel_tol: f64) -> Vec<Vec<usize>> {
    if values.is_empty() {
        return vec![];
    }
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let thr = rel_tol * scale;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..values.len() {
        if values[i] - values[i - 1] <= thr {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Lowers the upper index of the difference tensor with the metric:
/// `T_{ijk} = Σ_l h_{kl} K^l_{ij}`. The result must be fully symmetric for a
/// metric-self-adjoint `K`; a symmetrization residual above `1e-8` is an error.
pub fn lower_index(k: &MixedTensor12, h: &SymMatrix) -> Result<Sym3Tensor, LinalgError> {
    let n = k.dim;
    if h.dim() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "K dim {} vs h dim {}",
            n,
            h.dim()
        )));
    }
    let mut raw = vec![vec![vec![0.0f64; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += h.get(kk, l) * k.get(l, i, j);
                }
                raw[i][j][kk] = s;
            }
        }
    }
    let scale = h.frobenius_norm().max(1.0) * k.frobenius_norm().max(1.0);
    let mut worst = 0.0f64;
    let out = Sym3Tensor::from_fn(n, |i, j, kk| {
        let perms = [
            raw[i][j][kk],
            raw[i][kk][j],
            raw[j][i][kk],
            raw[j][kk][i],
            raw[kk][i][j],
            raw[kk][j][i],
        ];
        let avg = perms.iter().sum::<f64>() / 6.0;
        for p in perms {
            worst = worst.max((p - avg).abs());
        }
        avg
    });
    if worst > 1e-8 * scale.max(1.0) {
        return Err(LinalgError::AsymmetryError(worst));
    }
    Ok(out)
}

/// Modified Gram-Schmidt in the inner product given by SPD `h`.
/// Deterministic given the input order; span is preserved.
pub fn h_orthonormalize(
    vectors: &[Vec<f64>],
    h: &SymMatrix,
) -> Result<Vec<Vec<f64>>, LinalgError> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let c = h.inner(&w, b);
                for (wi, bi) in w.iter_mut().zip(b.iter()) {
                    *wi -= c * bi;
                }
            }
        }
        let norm2 = h.inner(&w, &w);
        if norm2 <= GS_PIVOT_TOL * GS_PIVOT_TOL {
            return Err(LinalgError::RankDeficient(norm2.max(0.0).sqrt()));
        }
        let inv = 1.0 / norm2.sqrt();
        for wi in w.iter_mut() {
            *wi *= inv;
        }
        basis.push(w);
    }
    Ok(basis)
}

/// An orthonormal frame for a metric: columns `b_i` with `h(b_i, b_j) = ±δ_ij`.
///
/// Built from the eigendecomposition `h = V Λ V^T` as `B = V |Λ|^{-1/2}`, so
/// the construction is deterministic. For an indefinite metric the frame is
/// pseudo-orthonormal and the induced tensor norms use `|h|`. `to_frame` maps
/// coordinate components of a vector into frame components, `from_frame` maps
/// back.
#[derive(Debug, Clone)]
pub struct OnFrame {
    pub dim: usize,
    /// basis[a] = a-th frame vector in coordinates
    pub basis: Vec<Vec<f64>>,
    /// dual[a][i]: row a of B^{-1}
    pub dual: Vec<Vec<f64>>,
}

impl OnFrame {
    pub fn new(h: &SymMatrix) -> Result<Self, LinalgError> {
        let n = h.dim();
        let (vals, vecs) = sym_eigen(h)?;
        let scale = h.frobenius_norm().max(1.0);
        let mut basis = Vec::with_capacity(n);
        let mut signs = Vec::with_capacity(n);
        for (lam, v) in vals.iter().zip(vecs.iter()) {
            if lam.abs() <= 1e-13 * scale {
                return Err(LinalgError::SingularMatrix(*lam));
            }
            let inv_sqrt = 1.0 / lam.abs().sqrt();
            signs.push(lam.signum());
            basis.push(v.iter().map(|x| x * inv_sqrt).collect::<Vec<f64>>());
        }
        let mut dual = vec![vec![0.0; n]; n];
        for a in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += basis[a][j] * h.get(j, i);
                }
                dual[a][i] = s * signs[a];
            }
        }
        Ok(OnFrame { dim: n, basis, dual })
    }

    pub fn to_frame(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|a| (0..self.dim).map(|i| self.dual[a][i] * v[i]).sum())
            .collect()
    }

    pub fn from_frame(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (a, ca) in c.iter().enumerate() {
            for i in 0..self.dim {
                out[i] += ca * self.basis[a][i];
            }
        }
        out
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return Err(LinalgError::SingularMatrix(m[piv][col].abs()));
        }
        m.swap(col, piv);
        x.swap(col, piv);
        let d = m[col][col];
        for r in (col + 1)..n {
            let f = m[r][col] / d;
            if f != 0.0 {
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in (col + 1)..n {
            s -= m[col][c] * x[c];
        }
        x[col] = s / m[col][col];
    }
    Ok(x)
}

pub fn invert_dense(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LinalgError> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_dense(a, &e)?);
    }
    // transpose column solutions into rows of the inverse
    Ok((0..n)
        .map(|i| (0..n).map(|j| cols[j][i]).collect())
        .collect())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}
