//! Construction of the typical basis: maximization of the cubic frame
//! function over the unit sphere and the eigenvalue branch split.

use super::ClassifyError;
use crate::linalg::{
    cluster_eigenvalues, dot, norm, normalize, sym_eigen, MixedTensor12, OnFrame, SymMatrix,
};

/// Symmetric cubic form in an orthonormal frame: `t[a][b][c] = h(K(b_a,b_b), b_c)`.
pub(crate) struct CubicOn {
    pub n: usize,
    pub t: Vec<f64>,
}

impl CubicOn {
    pub fn build(h: &SymMatrix, k: &MixedTensor12, frame: &OnFrame) -> CubicOn {
        let n = h.dim();
        let mut t = vec![0.0; n * n * n];
        for a in 0..n {
            for b in a..n {
                let kv = k.apply(&frame.basis[a], &frame.basis[b]);
                for c in 0..n {
                    let v = h.inner(&kv, &frame.basis[c]);
                    t[(a * n + b) * n + c] = v;
                    t[(b * n + a) * n + c] = v;
                }
            }
        }
        CubicOn { n, t }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.t[(a * self.n + b) * self.n + c]
    }

    /// `K(u, u)` in frame coordinates.
    pub fn apply2(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                let w = u[a] * u[b];
                if w == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[c] += w * self.get(a, b, c);
                }
            }
        }
        out
    }

    /// frame function `f(u) = h(K(u,u), u)`
    pub fn f(&self, u: &[f64]) -> f64 {
        dot(&self.apply2(u), u)
    }

    /// matrix of `Y ↦ K(u, Y)` in frame coordinates
    pub fn k_matrix(&self, u: &[f64]) -> SymMatrix {
        let n = self.n;
        SymMatrix::from_fn(n, |b, c| {
            (0..n).map(|a| u[a] * self.get(a, b, c)).sum()
        })
    }

    pub fn norm(&self) -> f64 {
        self.t.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

const GRAD_TOL: f64 = 1e-12;
const MAX_ITERS: usize = 2000;

/// Additive golden-ratio sequence mapped to the unit sphere, giving a
/// deterministic low-discrepancy family of restart directions.
fn restart_direction(n: usize, index: usize, seed: u64) -> Vec<f64> {
    // generalized golden ratio for dimension d: unique root of x^{d+1} = x + 1
    let d = 2 * n.div_ceil(2);
    let mut phi = 1.0f64;
    for _ in 0..32 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let k = (index as u64 + 1 + (seed % 1024) * 7919) as f64;
    let mut uniforms = Vec::with_capacity(d);
    let mut alpha = 1.0;
    for _ in 0..d {
        alpha /= phi;
        uniforms.push((0.5 + k * alpha).fract());
    }
    let mut out = Vec::with_capacity(n);
    for pair in 0..n.div_ceil(2) {
        let u1 = uniforms[2 * pair].clamp(1e-12, 1.0 - 1e-12);
        let u2 = uniforms[2 * pair + 1];
        let r = (-2.0 * u1.ln()).sqrt();
        out.push(r * (2.0 * std::f64::consts::PI * u2).cos());
        if out.len() < n {
            out.push(r * (2.0 * std::f64::consts::PI * u2).sin());
        }
    }
    normalize(&out)
}

/// Projected gradient ascent with backtracking from one start.
fn ascend(cubic: &CubicOn, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut u = start;
    let mut f = cubic.f(&u);
    for _ in 0..MAX_ITERS {
        let kv = cubic.apply2(&u);
        let g: Vec<f64> = kv
            .iter()
            .zip(&u)
            .map(|(kv_c, u_c)| 3.0 * (kv_c - f * u_c))
            .collect();
        let gn = norm(&g);
        if gn < GRAD_TOL {
            break;
        }
        let mut step = 1.0f64;
        let mut advanced = false;
        for _ in 0..40 {
            let cand: Vec<f64> =
                normalize(&u.iter().zip(&g).map(|(a, b)| a + step * b).collect::<Vec<_>>());
            let fc = cubic.f(&cand);
            if fc > f + 1e-4 * step * gn * gn {
                u = cand;
                f = fc;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    (u, f)
}

/// Refinement of the maximizer past the stall point of plain ascent.
///
/// Two alternating corrections: a partial Newton step over the eigenvectors
/// of `K_u` whose eigenvalues are well separated from `λ₁/2` (where the
/// stationarity map is invertible), and a structural step along the
/// half-branch component of the defect, whose amplitude is read off the
/// quadratic signal orthogonal to the branches. Both are guarded by a
/// line search on the defect norm.
fn polish(cubic: &CubicOn, u0: Vec<f64>) -> Vec<f64> {
    let n = cubic.n;
    let scale = cubic.norm().max(1.0);
    let residual = |u: &[f64]| -> (Vec<f64>, f64) {
        let kv = cubic.apply2(u);
        let f = dot(&kv, u);
        let r: Vec<f64> = kv.iter().zip(u).map(|(k, uu)| k - f * uu).collect();
        let rn = norm(&r);
        (r, rn)
    };
    let try_move = |u: &[f64], dir: &[f64], s0: f64, rn: f64| -> Option<(Vec<f64>, f64)> {
        let mut s = s0;
        for _ in 0..10 {
            let cand = normalize(
                &u.iter()
                    .zip(dir)
                    .map(|(a, b)| a + s * b)
                    .collect::<Vec<_>>(),
            );
            let (_, rn_c) = residual(&cand);
            if rn_c < 0.9 * rn {
                return Some((cand, rn_c));
            }
            s *= -0.5; // alternate sides while shrinking
        }
        None
    };
    let mut u = u0;
    let (_, mut rn) = residual(&u);
    for _ in 0..24 {
        if rn <= 1e-13 * scale {
            break;
        }
        let (r, _) = residual(&u);
        let lambda1 = cubic.f(&u);
        let m = cubic.k_matrix(&u);
        let (vals, vecs) = match sym_eigen(&m) {
            Ok(x) => x,
            Err(_) => break,
        };
        // split the defect: eigenvalues near λ₁/2 are the flat directions
        let window = 0.05 * (1.0 + lambda1.abs());
        let mut newton = vec![0.0; n];
        let mut p_half = vec![0.0; n];
        let mut p_rest_n = 0.0f64;
        for (val, vec) in vals.iter().zip(&vecs) {
            let c = dot(&r, vec);
            let denom = lambda1 - 2.0 * val;
            if denom.abs() > window {
                for i in 0..n {
                    newton[i] += c / denom * vec[i];
                }
                if dot(vec, &u).abs() < 0.9 {
                    p_rest_n = (p_rest_n * p_rest_n + c * c).sqrt();
                }
            } else {
                for i in 0..n {
                    p_half[i] += c * vec[i];
                }
            }
        }
        // correct the non-degenerate part first
        let nn = norm(&newton);
        if nn > 1e-16 * scale {
            if let Some((cand, rn_c)) = try_move(&u, &normalize(&newton), nn, rn) {
                u = cand;
                rn = rn_c;
                continue;
            }
        }
        // then the flat part, with the amplitude read from the quadratic
        // signal when visible and from the cubic one otherwise
        let dir_n = norm(&p_half);
        if dir_n <= 1e-16 * scale {
            break;
        }
        let dir = normalize(&p_half);
        let s_cubic = (2.0 * dir_n / lambda1.abs().max(1e-12)).cbrt();
        let mut candidates = vec![s_cubic];
        for e in [1.0f64, -1.0] {
            let disc = lambda1 * lambda1 - 4.0 * e;
            if disc > 1e-8 {
                let eta = 0.5 * disc.sqrt();
                let lnorm = (0.5 * lambda1.abs() * eta).max(1e-12).sqrt();
                candidates.push((p_rest_n / lnorm).sqrt());
            }
        }
        let mut moved = false;
        for s0 in candidates {
            if !s0.is_finite() || s0 <= 0.0 {
                continue;
            }
            if let Some((cand, rn_c)) = try_move(&u, &dir, s0, rn) {
                u = cand;
                rn = rn_c;
                moved = true;
                break;
            }
        }
        if !moved {
            break;
        }
    }
    u
}

/// Finds the direction maximizing `f(u) = h(K(u,u), u)` on the unit sphere of
/// the metric, and the maximum `lambda1 > 0`.
pub fn maximize_cubic(
    h: &SymMatrix,
    k: &MixedTensor12,
    restarts: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64), ClassifyError> {
    let frame = OnFrame::new(h).map_err(ClassifyError::Linalg)?;
    let cubic = CubicOn::build(h, k, &frame);
    let (e1_on, lambda1) = maximize_on(&cubic, restarts, seed, true)?;
    Ok((frame.from_frame(&e1_on), lambda1))
}

/// Frame-coordinate version.
pub(crate) fn maximize_on(
    cubic: &CubicOn,
    restarts: usize,
    seed: u64,
    refine: bool,
) -> Result<(Vec<f64>, f64), ClassifyError> {
    let n = cubic.n;
    let scale = cubic.norm();
    if 2.0 * scale <= 1e-10 {
        return Err(ClassifyError::ZeroCubic);
    }
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(restarts + n);
    for a in 0..n {
        let mut e = vec![0.0; n];
        e[a] = 1.0;
        starts.push(e);
    }
    for r in 0..restarts {
        starts.push(restart_direction(n, r, seed));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        let (mut u, mut f) = ascend(cubic, s);
        if f < 0.0 {
            // the frame function is odd; ascend from the antipode
            let flipped: Vec<f64> = u.iter().map(|x| -x).collect();
            let (u2, f2) = ascend(cubic, flipped);
            u = u2;
            f = f2;
        }
        if best.as_ref().map_or(true, |(_, bf)| f > *bf + 1e-13) {
            best = Some((u, f));
        }
    }
    let (mut u, mut f) = best.ok_or(ClassifyError::NonConvergence)?;
    if refine {
        u = polish(cubic, u);
        f = cubic.f(&u);
    }
    if f <= 0.0 {
        return Err(ClassifyError::NonConvergence);
    }
    Ok((u, f))
}

/// Distinct ascent endpoints of the frame function from a deterministic
/// start family, deduplicated by alignment. Used to enumerate candidate
/// critical directions of restricted cubics.
pub(crate) fn critical_directions(cubic: &CubicOn, restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = cubic.n;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for a in 0..n {
        let mut e = vec![0.0; n];
        e[a] = 1.0;
        starts.push(e);
    }
    for r in 0..restarts {
        starts.push(restart_direction(n, r, seed));
    }
    let scale = cubic.norm().max(1e-12);
    let mut found: Vec<Vec<f64>> = Vec::new();
    for s in starts {
        let (u, f) = ascend(cubic, s);
        if f.abs() <= 1e-9 * scale {
            continue;
        }
        if found.iter().all(|v| dot(v, &u).abs() < 1.0 - 1e-8) {
            found.push(u);
            if found.len() >= 6 {
                break;
            }
        }
    }
    found
}

/// Raw pointwise case of the difference-tensor spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawCase {
    /// all secondary eigenvalues on the small branch
    C1,
    /// m-1 eigenvalues on the half branch, the rest on the small branch
    Cm(usize),
    /// all secondary eigenvalues on the half branch, separated discriminant
    Cn,
    /// vanishing discriminant (all secondary eigenvalues equal half the top)
    B,
}

impl RawCase {
    pub fn tag(&self) -> String {
        match self {
            RawCase::C1 => "C1".into(),
            RawCase::Cm(m) => format!("Cm({m})"),
            RawCase::Cn => "Cn".into(),
            RawCase::B => "B".into(),
        }
    }
}

/// Spectral data of `K_{e1}` in the typical basis.
#[derive(Debug, Clone)]
pub struct PointSpectrum {
    /// metric-unit maximizer, coordinate components
    pub e1: Vec<f64>,
    pub lambda1: f64,
    pub eps: i8,
    /// `½ sqrt(lambda1² - 4 eps)`, NaN when the discriminant is negative
    pub eta: f64,
    /// small branch value `½ (lambda1 - sqrt(lambda1² - 4 eps))`
    pub mu: f64,
    /// indices (into the spectrum below) on the `lambda1/2` branch
    pub half_branch: Vec<usize>,
    /// indices on the `mu` branch
    pub mu_branch: Vec<usize>,
    /// secondary eigenvalues of `K_{e1}`, ascending
    pub secondary: Vec<f64>,
    /// orthonormal bases (coordinate components) of the two distributions
    pub d2_basis: Vec<Vec<f64>>,
    pub d3_basis: Vec<Vec<f64>>,
    /// worst distance from an eigenvalue to its branch value
    pub branch_residual: f64,
}

/// Splits the secondary spectrum of `K_{e1}` into the two admissible branches
/// and names the raw case.
pub fn spectrum_split(
    h: &SymMatrix,
    k: &MixedTensor12,
    e1: &[f64],
    eps: i8,
    tol: f64,
) -> Result<(PointSpectrum, RawCase), ClassifyError> {
    let frame = OnFrame::new(h).map_err(ClassifyError::Linalg)?;
    let cubic = CubicOn::build(h, k, &frame);
    let e1_on = normalize(&frame.to_frame(e1));
    spectrum_split_on(&cubic, &frame, &e1_on, eps, tol)
}

pub(crate) fn spectrum_split_on(
    cubic: &CubicOn,
    frame: &OnFrame,
    e1_on: &[f64],
    eps: i8,
    tol: f64,
) -> Result<(PointSpectrum, RawCase), ClassifyError> {
    let n = cubic.n;
    let m = cubic.k_matrix(e1_on);
    let (vals, vecs) = sym_eigen(&m).map_err(ClassifyError::Linalg)?;
    // identify the top eigenvector as the one aligned with e1
    let mut top = 0;
    for i in 1..n {
        if dot(&vecs[i], e1_on).abs() > dot(&vecs[top], e1_on).abs() {
            top = i;
        }
    }
    let lambda1 = vals[top];
    let delta_b = 1e-6;
    let disc = lambda1 * lambda1 - 4.0 * eps as f64;
    let scale = 1.0 + lambda1.abs();

    let mut secondary: Vec<(f64, Vec<f64>)> = (0..n)
        .filter(|&i| i != top)
        .map(|i| (vals[i], vecs[i].clone()))
        .collect();
    secondary.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let sec_vals: Vec<f64> = secondary.iter().map(|s| s.0).collect();
    let _ = cluster_eigenvalues(&sec_vals, 1e-6);

    let half = 0.5 * lambda1;
    if disc.abs() <= delta_b {
        // degenerate discriminant: every secondary eigenvalue must sit on the
        // half branch
        let mut worst = 0.0f64;
        for &v in &sec_vals {
            worst = worst.max((v - half).abs());
        }
        if worst > tol * scale {
            return Err(ClassifyError::BranchAmbiguity(worst));
        }
        let spectrum = PointSpectrum {
            e1: frame.from_frame(e1_on),
            lambda1,
            eps,
            eta: 0.0,
            mu: half,
            half_branch: (0..sec_vals.len()).collect(),
            mu_branch: vec![],
            secondary: sec_vals,
            d2_basis: secondary
                .iter()
                .map(|(_, v)| frame.from_frame(v))
                .collect(),
            d3_basis: vec![],
            branch_residual: worst,
        };
        return Ok((spectrum, RawCase::B));
    }

    let (eta, mu) = if disc > 0.0 {
        (0.5 * disc.sqrt(), 0.5 * (lambda1 - disc.sqrt()))
    } else {
        (f64::NAN, f64::NAN)
    };
    let mut half_branch = Vec::new();
    let mut mu_branch = Vec::new();
    let mut worst = 0.0f64;
    for (i, &v) in sec_vals.iter().enumerate() {
        let d_half = (v - half).abs();
        let d_mu = if mu.is_nan() { f64::INFINITY } else { (v - mu).abs() };
        if d_half <= d_mu {
            if d_half > tol * scale {
                return Err(ClassifyError::BranchAmbiguity(d_half));
            }
            worst = worst.max(d_half);
            half_branch.push(i);
        } else {
            if d_mu > tol * scale {
                return Err(ClassifyError::BranchAmbiguity(d_mu));
            }
            worst = worst.max(d_mu);
            mu_branch.push(i);
        }
    }
    let case = if half_branch.is_empty() {
        RawCase::C1
    } else if mu_branch.is_empty() {
        RawCase::Cn
    } else {
        RawCase::Cm(1 + half_branch.len())
    };
    // orthonormalize the branch bases against e1 (rounding-level cleanup)
    let clean = |idxs: &[usize]| -> Vec<Vec<f64>> {
        idxs.iter()
            .map(|&i| {
                let v = &secondary[i].1;
                let c = dot(v, e1_on);
                let adj: Vec<f64> = v.iter().zip(e1_on).map(|(x, e)| x - c * e).collect();
                frame.from_frame(&normalize(&adj))
            })
            .collect()
    };
    let spectrum = PointSpectrum {
        e1: frame.from_frame(e1_on),
        lambda1,
        eps,
        eta,
        mu,
        d2_basis: clean(&half_branch),
        d3_basis: clean(&mu_branch),
        half_branch,
        mu_branch,
        secondary: sec_vals,
        branch_residual: worst,
    };
    Ok((spectrum, case))
}
