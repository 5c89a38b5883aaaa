//! The Gauss frame solve: induced connection, centroaffine metric, and the
//! Levi-Civita connection of the metric, all carried as jets.

use super::chart::ImmersionChart;
use super::GeometryError;
use crate::expr::{Jet, JetSpace};
use crate::linalg::SymMatrix;

const FRAME_PIVOT_TOL: f64 = 1e-10;

/// Value-level frame data at a point.
#[derive(Debug, Clone)]
pub struct Frame {
    /// sign convention making the stored metric positive definite when possible
    pub epsilon: i8,
    pub h: SymMatrix,
    /// gamma[i][j][k] = coefficient of `∂_k` in the induced connection `∇_{∂_i} ∂_j`
    pub gamma: Vec<Vec<Vec<f64>>>,
    /// dimension of the maximal negative-definite subspace of the stored metric
    pub signature: usize,
    /// true when neither sign of the metric is positive definite
    pub non_convex: bool,
}

/// Jet-level frame data; `h` and `gamma` keep two derivative orders so that
/// curvature and the covariant derivative of the cubic form are exact.
pub(crate) struct FrameJets {
    pub epsilon: i8,
    pub signature: usize,
    pub non_convex: bool,
    /// h[i][j], jet order 2
    pub h: Vec<Vec<Jet>>,
    /// gamma[i][j][k], jet order 2
    pub gamma: Vec<Vec<Vec<Jet>>>,
}

/// LU factorization over the jet ring with partial pivoting on constant terms.
struct JetLu {
    n: usize,
    lu: Vec<Vec<Jet>>,
    perm: Vec<usize>,
}

impl JetLu {
    fn factor(mut m: Vec<Vec<Jet>>) -> Result<JetLu, GeometryError> {
        let n = m.len();
        let scale = m
            .iter()
            .flat_map(|row| row.iter().map(|j| j.value().abs()))
            .fold(0.0f64, f64::max)
            .max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if m[r][col].value().abs() > m[piv][col].value().abs() {
                    piv = r;
                }
            }
            if m[piv][col].value().abs() < FRAME_PIVOT_TOL * scale {
                return Err(GeometryError::DegenerateFrame(m[piv][col].value().abs()));
            }
            m.swap(col, piv);
            perm.swap(col, piv);
            let inv_piv = m[col][col].recip();
            for r in (col + 1)..n {
                let f = m[r][col].mul(&inv_piv);
                for c in (col + 1)..n {
                    let upd = m[col][c].mul(&f);
                    m[r][c] = m[r][c].sub(&upd);
                }
                m[r][col] = f;
            }
        }
        Ok(JetLu { n, lu: m, perm })
    }

    fn solve(&self, b: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let mut x: Vec<Jet> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for col in 0..n {
            for r in (col + 1)..n {
                let upd = self.lu[r][col].mul(&x[col]);
                x[r] = x[r].sub(&upd);
            }
        }
        for col in (0..n).rev() {
            for c in (col + 1)..n {
                let upd = self.lu[col][c].mul(&x[c]);
                x[col] = x[col].sub(&upd);
            }
            x[col] = x[col].mul(&self.lu[col][col].recip());
        }
        x
    }
}

/// Solves the Gauss decomposition `x_{u_i u_j} = Γ^k_{ij} x_{u_k} + h_{ij}(-ε x)`
/// on jets, choosing ε so the metric is positive definite when possible.
/// When neither sign works the sign minimizing the negative index is kept and
/// the frame is flagged non-convex.
pub(crate) fn frame_jets(
    chart: &ImmersionChart,
    point: &[f64],
) -> Result<FrameJets, GeometryError> {
    let jets4 = chart.jets_at(point, 4)?;
    frame_jets_from(chart.n, &jets4)
}

pub(crate) fn frame_jets_from(n: usize, jets4: &[Jet]) -> Result<FrameJets, GeometryError> {
    let _ = JetSpace::get(n, 2);
    // basis columns: tangents then the position vector, all truncated to order 2
    let first: Vec<Vec<Jet>> = (0..n)
        .map(|k| jets4.iter().map(|j| j.derivative(k)).collect())
        .collect();
    let mut basis_rows: Vec<Vec<Jet>> = Vec::with_capacity(n + 1);
    for row in 0..(n + 1) {
        let mut r = Vec::with_capacity(n + 1);
        for col in 0..n {
            r.push(first[col][row].truncate(2));
        }
        r.push(jets4[row].truncate(2));
        basis_rows.push(r);
    }
    let lu = JetLu::factor(basis_rows)?;

    // second derivatives and solves, (i, j) with i <= j
    let mut gamma_raw: Vec<Vec<Option<Vec<Jet>>>> = vec![vec![None; n]; n];
    let mut coef: Vec<Vec<Option<Jet>>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let rhs: Vec<Jet> = first[i].iter().map(|t| t.derivative(j)).collect();
            let sol = lu.solve(&rhs);
            coef[i][j] = Some(sol[n].clone());
            coef[j][i] = Some(sol[n].clone());
            let g: Vec<Jet> = sol[..n].to_vec();
            gamma_raw[i][j] = Some(g.clone());
            gamma_raw[j][i] = Some(g);
        }
    }

    // x-coefficient values decide the metric sign: h = -ε * coef
    let m_vals = SymMatrix::from_fn(n, |i, j| coef[i][j].as_ref().unwrap().value());
    let scale = m_vals.frobenius_norm();
    if scale < 1e-12 {
        return Err(GeometryError::DegenerateMetric(scale));
    }
    let h_plus = m_vals.scale(-1.0); // ε = +1
    let h_minus = m_vals.clone(); // ε = -1
    let (epsilon, signature, non_convex) = if h_plus.is_positive_definite(1e-12) {
        (1i8, 0usize, false)
    } else if h_minus.is_positive_definite(1e-12) {
        (-1i8, 0usize, false)
    } else {
        let np = h_plus.negative_index();
        let nm = h_minus.negative_index();
        if np <= nm {
            (1i8, np, true)
        } else {
            (-1i8, nm, true)
        }
    };
    // degenerate metric check: h must have full rank
    let h_chosen = if epsilon == 1 { &h_plus } else { &h_minus };
    let (evals, _) = crate::linalg::sym_eigen(h_chosen)?;
    if evals.iter().any(|v| v.abs() < 1e-10 * scale.max(1.0)) {
        return Err(GeometryError::DegenerateMetric(
            evals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())),
        ));
    }

    let sgn = -(epsilon as f64);
    let h: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| coef[i][j].as_ref().unwrap().scale(sgn))
                .collect()
        })
        .collect();
    let gamma: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|i| (0..n).map(|j| gamma_raw[i][j].take().unwrap()).collect())
        .collect();
    Ok(FrameJets {
        epsilon,
        signature,
        non_convex,
        h,
        gamma,
    })
}

/// Value-level Gauss frame at a point.
pub fn centroaffine_frame(
    chart: &ImmersionChart,
    point: &[f64],
) -> Result<Frame, GeometryError> {
    let fj = frame_jets(chart, point)?;
    let n = chart.n;
    Ok(Frame {
        epsilon: fj.epsilon,
        h: SymMatrix::from_fn(n, |i, j| fj.h[i][j].value()),
        gamma: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| fj.gamma[i][j][k].value()).collect())
                    .collect()
            })
            .collect(),
        signature: fj.signature,
        non_convex: fj.non_convex,
    })
}

/// Christoffel symbols of the centroaffine metric as jets (one order below
/// the metric jets): `Γ̂^k_{ij} = ½ h^{kl} (∂_i h_{jl} + ∂_j h_{il} - ∂_l h_{ij})`.
pub(crate) fn levi_civita_jets(fj: &FrameJets) -> Result<Vec<Vec<Vec<Jet>>>, GeometryError> {
    let n = fj.h.len();
    // metric derivatives (jet order 1)
    let dh: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|i| (0..n).map(|j| fj.h[i][j].derivative(l)).collect())
                .collect()
        })
        .collect();
    // inverse metric at jet order 1
    let h1: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| fj.h[i][j].truncate(1)).collect())
        .collect();
    let lu = JetLu::factor(h1).map_err(|_| {
        GeometryError::DegenerateMetric(0.0)
    })?;
    let space1 = JetSpace::get(dh[0][0][0].vars(), 1);
    let mut hinv: Vec<Vec<Jet>> = vec![vec![Jet::constant(space1.clone(), 0.0); n]; n];
    for col in 0..n {
        let mut e: Vec<Jet> = (0..n)
            .map(|r| Jet::constant(space1.clone(), if r == col { 1.0 } else { 0.0 }))
            .collect();
        e = lu.solve(&e);
        for r in 0..n {
            hinv[r][col] = e[r].clone();
        }
    }
    let mut out: Vec<Vec<Vec<Jet>>> =
        vec![vec![vec![Jet::constant(space1.clone(), 0.0); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = Jet::constant(space1.clone(), 0.0);
                for l in 0..n {
                    let sym = dh[i][j][l].add(&dh[j][i][l]).sub(&dh[l][i][j]);
                    s = s.add(&hinv[k][l].mul(&sym));
                }
                out[i][j][k] = s.scale(0.5);
            }
        }
    }
    Ok(out)
}

/// Value-level Levi-Civita symbols `Γ̂^k_{ij}` at a point, layout `[i][j][k]`.
pub fn levi_civita(
    chart: &ImmersionChart,
    point: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>, GeometryError> {
    let fj = frame_jets(chart, point)?;
    let lc = levi_civita_jets(&fj)?;
    let n = chart.n;
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| lc[i][j][k].value()).collect())
                .collect()
        })
        .collect())
}
