//! Full centroaffine invariant set at a point and the structure-equation
//! residual report.

use super::chart::ImmersionChart;
use super::frame::{levi_civita_jets, FrameJets};
use super::GeometryError;
use crate::expr::Jet;
use crate::linalg::{solve_dense, MixedTensor12, OnFrame, Sym3Tensor, SymMatrix};

const CROSS_CHECK_TOL: f64 = 1e-7;

/// Everything the rest of the crate needs at one chart point.
#[derive(Debug, Clone)]
pub struct CentroaffinePointData {
    pub epsilon: i8,
    pub h: SymMatrix,
    /// induced connection, `[i][j][k]`
    pub gamma_induced: Vec<Vec<Vec<f64>>>,
    /// Levi-Civita connection of `h`, `[i][j][k]`
    pub gamma_lc: Vec<Vec<Vec<f64>>>,
    /// difference tensor `K^k_{ij}`
    pub k: MixedTensor12,
    /// cubic form `C = ∇h` (fully symmetric)
    pub c: Sym3Tensor,
    /// Tchebychev covector `T̂_i = Tr(K_{∂_i}) / n`
    pub tcheb: Vec<f64>,
    /// Tchebychev vector (metric dual of `tcheb`)
    pub tcheb_vec: Vec<f64>,
    /// traceless part of the cubic form
    pub traceless: Sym3Tensor,
    /// curvature of the Levi-Civita connection, `[i][j][k][l]` = l-component
    /// of `R̂(∂_i, ∂_j) ∂_k`
    pub curvature: Vec<Vec<Vec<Vec<f64>>>>,
    /// covariant derivative of the cubic form, `[x][y][z][w] = (∇̂_x C)(y,z,w)`
    pub nabla_c: Vec<Vec<Vec<Vec<f64>>>>,
    /// negative index of the stored metric
    pub signature: usize,
    pub non_convex: bool,
    /// disagreement between the two cubic-form computations
    pub cross_check_residual: f64,
}

impl CentroaffinePointData {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Metric norm of the cubic form.
    pub fn c_norm(&self) -> f64 {
        let frame = OnFrame::new(&self.h).expect("metric is nondegenerate");
        on_norm3(&self.c, &frame)
    }

    /// Metric norm of the traceless cubic form.
    pub fn traceless_norm(&self) -> f64 {
        let frame = OnFrame::new(&self.h).expect("metric is nondegenerate");
        on_norm3(&self.traceless, &frame)
    }

    /// Metric norm of `∇̂C`.
    pub fn nabla_c_norm(&self) -> f64 {
        let frame = OnFrame::new(&self.h).expect("metric is nondegenerate");
        let n = self.dim();
        let mut s = 0.0;
        let t = transform4(&self.nabla_c, &frame, [false, false, false, false]);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for w in 0..n {
                        s += t[x][y][z][w] * t[x][y][z][w];
                    }
                }
            }
        }
        s.sqrt()
    }
}

/// Residuals of the structure equations at a point, all in metric norms.
#[derive(Debug, Clone)]
pub struct IntegrabilityReport {
    /// `R̂(X,Y)Z - ε(h(Y,Z)X - h(X,Z)Y) + [K_X, K_Y]Z`
    pub gauss_residual: f64,
    /// asymmetry of `∇̂C` in its first two slots
    pub slot_symmetry_residual: f64,
    /// residual of the curvature-acts-as-derivation identity; only meaningful
    /// when the cubic form is parallel, `None` otherwise
    pub derivation_residual: Option<f64>,
    pub nabla_c_norm: f64,
    pub c_norm: f64,
}

/// Transforms one slot of a rank-3 nested tensor.
fn contract3(
    t: &[Vec<Vec<f64>>],
    m: &[Vec<f64>],
    slot: usize,
) -> Vec<Vec<Vec<f64>>> {
    let n = t.len();
    let mut out = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += match slot {
                        0 => m[a][i] * t[i][b][c],
                        1 => m[b][i] * t[a][i][c],
                        _ => m[c][i] * t[a][b][i],
                    };
                }
                out[a][b][c] = s;
            }
        }
    }
    out
}

/// Frobenius norm of a fully covariant cubic tensor in the given frame.
pub(crate) fn on_norm3(t: &Sym3Tensor, frame: &OnFrame) -> f64 {
    let n = t.dim();
    let nested: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| t.get(i, j, k)).collect())
                .collect()
        })
        .collect();
    let b = &frame.basis;
    let t1 = contract3(&nested, b, 0);
    let t2 = contract3(&t1, b, 1);
    let t3 = contract3(&t2, b, 2);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                s += t3[i][j][k] * t3[i][j][k];
            }
        }
    }
    s.sqrt()
}

/// Transforms all four slots of a rank-4 nested tensor into the orthonormal
/// frame; `upper[s]` marks contravariant slots (transformed with the dual).
pub(crate) fn transform4(
    t: &[Vec<Vec<Vec<f64>>>],
    frame: &OnFrame,
    upper: [bool; 4],
) -> Vec<Vec<Vec<Vec<f64>>>> {
    let n = t.len();
    let mut cur: Vec<f64> = Vec::with_capacity(n * n * n * n);
    for a in t {
        for b in a {
            for c in b {
                cur.extend_from_slice(c);
            }
        }
    }
    for slot in 0..4 {
        let m = if upper[slot] { &frame.dual } else { &frame.basis };
        cur = contract_flat4(&cur, n, slot, m);
    }
    let mut out = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    let mut p = 0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    out[a][b][c][d] = cur[p];
                    p += 1;
                }
            }
        }
    }
    out
}

fn contract_flat4(data: &[f64], n: usize, slot: usize, m: &[Vec<f64>]) -> Vec<f64> {
    let stride = [n * n * n, n * n, n, 1];
    let mut out = vec![0.0; data.len()];
    let s = stride[slot];
    // iterate over all positions with slot index zero, then sweep the slot
    for base in 0..data.len() {
        let idx = (base / s) % n;
        if idx != 0 {
            continue;
        }
        for a in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += m[a][i] * data[base + i * s];
            }
            out[base + a * s] = acc;
        }
    }
    out
}

fn frobenius4(t: &[Vec<Vec<Vec<f64>>>]) -> f64 {
    let mut s = 0.0;
    for a in t {
        for b in a {
            for c in b {
                for d in c {
                    s += d * d;
                }
            }
        }
    }
    s.sqrt()
}

pub(crate) struct InvariantJets {
    pub frame: FrameJets,
    pub lc: Vec<Vec<Vec<Jet>>>,
}

/// Computes all invariants at a point of the chart.
pub fn invariants_at(
    chart: &ImmersionChart,
    point: &[f64],
) -> Result<CentroaffinePointData, GeometryError> {
    let jets4 = chart.jets_at(point, 4)?;
    invariants_from_jets(chart.n, &jets4)
}

pub(crate) fn invariants_from_jets(
    n: usize,
    jets4: &[Jet],
) -> Result<CentroaffinePointData, GeometryError> {
    let frame = super::frame::frame_jets_from(n, jets4)?;
    let lc = levi_civita_jets(&frame)?;
    build_invariants(n, InvariantJets { frame, lc })
}

fn build_invariants(
    n: usize,
    ij: InvariantJets,
) -> Result<CentroaffinePointData, GeometryError> {
    let frame = &ij.frame;
    let lc = &ij.lc;
    let h = SymMatrix::from_fn(n, |i, j| frame.h[i][j].value());

    // difference tensor K = ∇ - ∇̂ (values)
    let k = MixedTensor12::from_fn(n, |kk, i, j| {
        frame.gamma[i][j][kk].value() - lc[i][j][kk].value()
    });

    // cubic form as jets (order 1): C(∂_i,∂_j,∂_k) = (∇_{∂_i} h)(∂_j, ∂_k)
    let space1 = crate::expr::JetSpace::get(lc[0][0][0].vars(), 1);
    let zero1 = || Jet::constant(space1.clone(), 0.0);
    let h1: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| frame.h[i][j].truncate(1)).collect())
        .collect();
    let g1: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|kk| frame.gamma[i][j][kk].truncate(1)).collect())
                .collect()
        })
        .collect();
    let mut c_jets: Vec<Vec<Vec<Jet>>> = vec![vec![vec![zero1(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                let mut s = frame.h[j][kk].derivative(i);
                for m in 0..n {
                    s = s.sub(&g1[i][j][m].mul(&h1[m][kk]));
                    s = s.sub(&g1[i][kk][m].mul(&h1[j][m]));
                }
                c_jets[i][j][kk] = s;
            }
        }
    }

    // cross-check against C = -2 h(K·, ·)
    let mut cross = 0.0f64;
    let scale = h.frobenius_norm().max(1.0) * (1.0 + k.frobenius_norm());
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += h.get(kk, l) * k.get(l, i, j);
                }
                cross = cross.max((c_jets[i][j][kk].value() + 2.0 * s).abs());
            }
        }
    }
    if cross > CROSS_CHECK_TOL * scale {
        return Err(GeometryError::CrossCheckFailure(cross));
    }

    let c = Sym3Tensor::from_fn(n, |i, j, kk| {
        // average over slot orderings to kill rounding-level asymmetry
        (c_jets[i][j][kk].value()
            + c_jets[j][i][kk].value()
            + c_jets[kk][i][j].value()
            + c_jets[i][kk][j].value()
            + c_jets[j][kk][i].value()
            + c_jets[kk][j][i].value())
            / 6.0
    });

    // Tchebychev covector and vector
    let tcheb: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|m| k.get(m, i, m)).sum::<f64>() / n as f64)
        .collect();
    let tcheb_vec = solve_dense(&h.to_dense(), &tcheb)?;

    // traceless cubic form
    let w = n as f64 / (n as f64 + 2.0);
    let traceless = Sym3Tensor::from_fn(n, |i, j, kk| {
        -0.5 * c.get(i, j, kk)
            - w * (tcheb[i] * h.get(j, kk) + tcheb[j] * h.get(i, kk) + tcheb[kk] * h.get(i, j))
    });

    // curvature of the Levi-Civita connection
    let mut curvature = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                for l in 0..n {
                    let mut s = lc[j][kk][l].derivative(i).value()
                        - lc[i][kk][l].derivative(j).value();
                    for m in 0..n {
                        s += lc[i][m][l].value() * lc[j][kk][m].value()
                            - lc[j][m][l].value() * lc[i][kk][m].value();
                    }
                    curvature[i][j][kk][l] = s;
                }
            }
        }
    }

    // covariant derivative of the cubic form
    let mut nabla_c = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w4 in 0..n {
                    let mut s = c_jets[y][z][w4].derivative(x).value();
                    for m in 0..n {
                        s -= lc[x][y][m].value() * c_jets[m][z][w4].value();
                        s -= lc[x][z][m].value() * c_jets[y][m][w4].value();
                        s -= lc[x][w4][m].value() * c_jets[y][z][m].value();
                    }
                    nabla_c[x][y][z][w4] = s;
                }
            }
        }
    }

    Ok(CentroaffinePointData {
        epsilon: frame.epsilon,
        h,
        gamma_induced: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|kk| frame.gamma[i][j][kk].value()).collect())
                    .collect()
            })
            .collect(),
        gamma_lc: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|kk| lc[i][j][kk].value()).collect())
                    .collect()
            })
            .collect(),
        k,
        c,
        tcheb,
        tcheb_vec,
        traceless,
        curvature,
        nabla_c,
        signature: frame.signature,
        non_convex: frame.non_convex,
        cross_check_residual: cross,
    })
}

/// Residuals of the curvature, slot-symmetry, and derivation identities.
pub fn check_integrability(
    chart: &ImmersionChart,
    point: &[f64],
) -> Result<IntegrabilityReport, GeometryError> {
    let data = invariants_at(chart, point)?;
    Ok(integrability_of(&data))
}

pub fn integrability_of(data: &CentroaffinePointData) -> IntegrabilityReport {
    let n = data.dim();
    let frame = OnFrame::new(&data.h).expect("metric is nondegenerate");
    let eps = data.epsilon as f64;

    // curvature identity residual
    let mut gauss = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                for l in 0..n {
                    let mut comm = 0.0;
                    for m in 0..n {
                        comm += data.k.get(l, i, m) * data.k.get(m, j, kk)
                            - data.k.get(l, j, m) * data.k.get(m, i, kk);
                    }
                    let flat = eps
                        * (data.h.get(j, kk) * if i == l { 1.0 } else { 0.0 }
                            - data.h.get(i, kk) * if j == l { 1.0 } else { 0.0 });
                    gauss[i][j][kk][l] = data.curvature[i][j][kk][l] - flat + comm;
                }
            }
        }
    }
    let gauss_residual = frobenius4(&transform4(&gauss, &frame, [false, false, false, true]));

    // slot symmetry of ∇̂C in the first two arguments
    let mut asym = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    asym[x][y][z][w] = data.nabla_c[x][y][z][w] - data.nabla_c[y][x][z][w];
                }
            }
        }
    }
    let slot_symmetry_residual =
        frobenius4(&transform4(&asym, &frame, [false, false, false, false]));

    let nabla_c_norm = data.nabla_c_norm();
    let c_norm = data.c_norm();

    // derivation identity (only meaningful for parallel cubic form)
    let derivation_residual = if nabla_c_norm <= 1e-6 * c_norm.max(1.0) {
        let mut worst2 = 0.0f64;
        // K and R̂ in the orthonormal frame, then contract
        let mut k_on = vec![vec![vec![0.0; n]; n]; n];
        for a in 0..n {
            for b in 0..n {
                let kv = data.k.apply(&frame.basis[a], &frame.basis[b]);
                let kv_f = frame.to_frame(&kv);
                for c in 0..n {
                    k_on[c][a][b] = kv_f[c];
                }
            }
        }
        let r_on = transform4(&data.curvature, &frame, [false, false, false, true]);
        for i in 0..n {
            for j in 0..n {
                for z in 0..n {
                    for u in 0..n {
                        for m in 0..n {
                            let mut t1 = 0.0;
                            let mut t2 = 0.0;
                            let mut t3 = 0.0;
                            for s in 0..n {
                                t1 += k_on[s][z][u] * r_on[i][j][s][m];
                                t2 += r_on[i][j][z][s] * k_on[m][s][u];
                                t3 += r_on[i][j][u][s] * k_on[m][s][z];
                            }
                            let res = t1 - t2 - t3;
                            worst2 += res * res;
                        }
                    }
                }
            }
        }
        Some(worst2.sqrt())
    } else {
        None
    };

    IntegrabilityReport {
        gauss_residual,
        slot_symmetry_residual,
        derivation_residual,
        nabla_c_norm,
        c_norm,
    }
}
