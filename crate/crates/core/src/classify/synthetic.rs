//! Synthetic pointwise data `(h, K)` realizing a prescribed block structure.
//!
//! The half-branch space is assembled from `k0` blocks of dimension `1 + p`
//! whose bilinear-map values follow the division-algebra relations (complex,
//! quaternion, octonion units for `p = 1, 3, 7`). The small-branch products
//! are completed through the contraction identity the map satisfies, so the
//! resulting difference tensor is metric-self-adjoint and reproduces the
//! prescribed spectrum exactly. `p = 2` is deliberately constructible here:
//! it feeds the negative test that the decomposition must reject it.

use super::dtwo::IsotropicTable;
use super::octonion::{octonion_mul, quaternion_mul};
use crate::linalg::{dot, sym_eigen, MixedTensor12, SymMatrix};

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub lambda1: f64,
    pub eps: i8,
    pub k0: usize,
    pub p: usize,
    /// extra small-branch directions beyond the image of the bilinear map
    pub extra_mu: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub n: usize,
    pub h: SymMatrix,
    pub k: MixedTensor12,
    pub e1: Vec<f64>,
    pub lambda1: f64,
    pub eta: f64,
    pub mu: f64,
    pub tau: f64,
    pub table: IsotropicTable,
}

/// Top eigenvalue for which the trace of the bilinear map vanishes (with the
/// hyperbolic sign); equal to `(k0 - 1)/sqrt(k0)` for every block shape.
pub fn critical_lambda1(k0: usize) -> f64 {
    assert!(k0 >= 2);
    (k0 as f64 - 1.0) / (k0 as f64).sqrt()
}

/// Product of imaginary units for the block algebra: returns `(sign, c)` with
/// `e_a e_b = sign * e_c`, `c = 0` meaning `sign * (-id)`.
fn unit_mul(p: usize, a: usize, b: usize) -> Option<(i8, usize)> {
    if a == b {
        return Some((-1, 0));
    }
    match p {
        1 => None, // single unit: no distinct pairs exist
        2 => None, // no two-unit algebra: handled by a fresh direction
        3 => Some(quaternion_mul(a, b)),
        7 => Some(octonion_mul(a, b)),
        _ => None,
    }
}

/// Canonical form of `L(e_a v_j, e_b v_l)` for `j < l`: `sign * sqrt(τ)` times
/// the pair direction `c`, where `c ∈ 0..=p` and `c = p + 1` is the fresh slot
/// used when the algebra has no product (only for `p = 2`).
fn pair_value(p: usize, a: usize, b: usize) -> (f64, usize) {
    match (a, b) {
        (0, 0) => (1.0, 0),
        (0, c) => (1.0, c),
        (c, 0) => (-1.0, c),
        // L(e_a v_j, e_b v_l) = -L(v_j, e_a e_b (v_l)); a product s*id lands
        // back on the pair direction 0
        (a, b) => match unit_mul(p, a, b) {
            Some((s, c)) => (-(s as f64), c),
            None => {
                // no algebra product exists: an antisymmetric fresh slot
                if a < b {
                    (1.0, p + 1)
                } else {
                    (-1.0, p + 1)
                }
            }
        },
    }
}

pub fn synthesize(spec: &SyntheticSpec) -> Result<SyntheticData, String> {
    let SyntheticSpec {
        lambda1,
        eps,
        k0,
        p,
        extra_mu,
    } = *spec;
    if k0 < 1 {
        return Err("k0 must be at least 1".into());
    }
    if !matches!(p, 0 | 1 | 2 | 3 | 7) {
        return Err("p must be one of 0, 1, 2, 3, 7".into());
    }
    let disc = lambda1 * lambda1 - 4.0 * eps as f64;
    if disc <= 1e-9 {
        return Err("lambda1^2 - 4 eps must be positive".into());
    }
    let eta = 0.5 * disc.sqrt();
    let mu = 0.5 * (lambda1 - disc.sqrt());
    let tau = 0.25 * eta * (eta + 0.5 * lambda1);
    let sigma = 0.5 * lambda1 * eta;

    let block = 1 + p;
    let d2 = k0 * block;
    // diagonal Gram of the block representatives
    let gram = SymMatrix::from_fn(k0, |i, j| {
        if i == j {
            0.5 * lambda1 * eta
        } else {
            0.5 * mu * eta
        }
    });
    let (gvals, gvecs) = sym_eigen(&gram).map_err(|e| e.to_string())?;
    if gvals.iter().any(|v| *v < -1e-9) {
        // the representatives' Gram matrix must be positive semidefinite;
        // it degenerates exactly at lambda1 = (k0-1)/sqrt(k0) for eps = -1
        return Err(format!(
            "no real realization: block Gram has a negative eigenvalue \
             (lambda1 = {lambda1} is below the admissible minimum for k0 = {k0})"
        ));
    }
    let kept: Vec<(f64, &Vec<f64>)> = gvals
        .iter()
        .zip(&gvecs)
        .filter(|(v, _)| **v > 1e-10)
        .map(|(v, w)| (*v, w))
        .collect();
    let r = kept.len();
    // diag_coords[j][t]: components of L(v_j, v_j) on the first r directions
    let diag_coords: Vec<Vec<f64>> = (0..k0)
        .map(|j| kept.iter().map(|(v, w)| v.sqrt() * w[j]).collect())
        .collect();

    let pair_dirs = if p == 2 { p + 2 } else { p + 1 };
    let pairs: Vec<(usize, usize)> = (0..k0)
        .flat_map(|j| ((j + 1)..k0).map(move |l| (j, l)))
        .collect();
    let d3_im = r + pairs.len() * pair_dirs;
    let d3 = d3_im + extra_mu;
    let n = 1 + d2 + d3;

    let pair_base = |pi: usize| r + pi * pair_dirs;
    let pair_index = |j: usize, l: usize| pairs.iter().position(|&q| q == (j, l)).unwrap();

    // bilinear-map table over the half-branch basis (block-major order)
    let sqrt_tau = tau.sqrt();
    let mut vals = vec![vec![0.0; d3]; d2 * d2];
    for bj in 0..k0 {
        for a in 0..block {
            for bl in 0..k0 {
                for b in 0..block {
                    let row = bj * block + a;
                    let col = bl * block + b;
                    let mut v = vec![0.0; d3];
                    if bj == bl {
                        if a == b {
                            for (t, x) in diag_coords[bj].iter().enumerate() {
                                v[t] = *x;
                            }
                        }
                    } else {
                        let (j, l, aa, bb) = if bj < bl {
                            (bj, bl, a, b)
                        } else {
                            (bl, bj, b, a)
                        };
                        let (s, c) = pair_value(p, aa, bb);
                        v[pair_base(pair_index(j, l)) + c] = s * sqrt_tau;
                    }
                    vals[row * d2 + col] = v;
                }
            }
        }
    }

    // contraction identity for products of image directions:
    // K(L(q1,q2), L(q3,q4)) = μ ⟨L12, L34⟩ e1 + μη δ_{q1 q2} L34
    //   + Σ_i ⟨L(q1,u_i), L34⟩ L(u_i, q2) + Σ_i ⟨L(q2,u_i), L34⟩ L(u_i, q1)
    let lval = |a: usize, b: usize| -> &Vec<f64> { &vals[a * d2 + b] };
    let eq_contract = |q1: usize, q2: usize, q3: usize, q4: usize| -> (f64, Vec<f64>) {
        let l34 = lval(q3, q4);
        let l12 = lval(q1, q2);
        let e1c = mu * dot(l12, l34);
        let mut out = vec![0.0; d3];
        if q1 == q2 {
            for (o, x) in out.iter_mut().zip(l34) {
                *o += mu * eta * x;
            }
        }
        for i in 0..d2 {
            let c1 = dot(lval(q1, i), l34);
            if c1 != 0.0 {
                for (o, x) in out.iter_mut().zip(lval(i, q2)) {
                    *o += c1 * x;
                }
            }
            let c2 = dot(lval(q2, i), l34);
            if c2 != 0.0 {
                for (o, x) in out.iter_mut().zip(lval(i, q1)) {
                    *o += c2 * x;
                }
            }
        }
        (e1c, out)
    };

    // generator expansion of each image direction
    struct Gen {
        q1: usize,
        q2: usize,
        coef: f64,
    }
    let mut gens: Vec<Vec<Gen>> = Vec::with_capacity(d3_im);
    for t in 0..r {
        let (lam, w) = &kept[t];
        gens.push(
            (0..k0)
                .map(|j| Gen {
                    q1: j * block,
                    q2: j * block,
                    coef: w[j] / lam.sqrt(),
                })
                .collect(),
        );
    }
    for &(j, l) in pairs.iter() {
        for c in 0..pair_dirs {
            let (q1, q2) = if c == 0 {
                (j * block, l * block)
            } else if c <= p {
                (j * block, l * block + c)
            } else {
                // fresh slot generator (p = 2 only)
                (j * block + 1, l * block + 2)
            };
            gens.push(vec![Gen { q1, q2, coef: 1.0 / sqrt_tau }]);
        }
    }

    // full difference tensor on the orthonormal coordinate basis
    let mut k = MixedTensor12::zeros(n);
    let e1 = 0usize;
    let d2_at = |a: usize| 1 + a;
    let w_at = |t: usize| 1 + d2 + t;

    k.set(e1, e1, e1, lambda1);
    for a in 0..d2 {
        k.set(d2_at(a), e1, d2_at(a), 0.5 * lambda1);
    }
    for t in 0..d3 {
        k.set(w_at(t), e1, w_at(t), mu);
    }
    for a in 0..d2 {
        for b in a..d2 {
            if a == b {
                k.set(e1, d2_at(a), d2_at(b), 0.5 * lambda1);
            }
            for (t, x) in vals[a * d2 + b].iter().enumerate() {
                if *x != 0.0 {
                    k.set(w_at(t), d2_at(a), d2_at(b), *x);
                }
            }
        }
    }
    for a in 0..d2 {
        for t in 0..d3 {
            // K(u_a, w_t) = Σ_b ⟨L(u_a, u_b), w_t⟩ u_b
            for b in 0..d2 {
                let c = vals[a * d2 + b][t];
                if c != 0.0 {
                    k.set(d2_at(b), d2_at(a), w_at(t), c);
                }
            }
        }
    }
    // image-direction products via the contraction identity
    let mut wprod = vec![vec![(0.0, vec![0.0; d3]); d3_im]; d3_im];
    for s in 0..d3_im {
        for t in s..d3_im {
            let mut e1c = 0.0;
            let mut v = vec![0.0; d3];
            for g1 in &gens[s] {
                for g2 in &gens[t] {
                    let (ec, dv) = eq_contract(g1.q1, g1.q2, g2.q1, g2.q2);
                    let c = g1.coef * g2.coef;
                    e1c += c * ec;
                    for (o, x) in v.iter_mut().zip(&dv) {
                        *o += c * x;
                    }
                }
            }
            wprod[s][t] = (e1c, v.clone());
            wprod[t][s] = (e1c, v);
        }
    }
    for s in 0..d3_im {
        for t in s..d3_im {
            // symmetrize the two evaluation orders
            let e1c = 0.5 * (wprod[s][t].0 + wprod[t][s].0);
            k.set(e1, w_at(s), w_at(t), e1c);
            for tt in 0..d3 {
                let x = 0.5 * (wprod[s][t].1[tt] + wprod[t][s].1[tt]);
                if x != 0.0 {
                    k.set(w_at(tt), w_at(s), w_at(t), x);
                }
            }
        }
    }
    // extra small-branch directions: K(w_im, extra) = μη (Σ gens δ) extra,
    // K(extra, extra') = μ δ e1
    for s in 0..d3_im {
        let diag_weight: f64 = gens[s]
            .iter()
            .filter(|g| g.q1 == g.q2)
            .map(|g| g.coef)
            .sum();
        if diag_weight != 0.0 {
            for e in 0..extra_mu {
                let t = d3_im + e;
                k.set(w_at(t), w_at(s), w_at(t), mu * eta * diag_weight);
            }
        }
    }
    for e in 0..extra_mu {
        let t = d3_im + e;
        k.set(e1, w_at(t), w_at(t), mu);
    }

    let axis = |i: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    };
    let table = IsotropicTable {
        lambda1,
        eta,
        mu,
        sigma,
        tau,
        d2: (0..d2).map(|a| axis(d2_at(a))).collect(),
        d3: (0..d3).map(|t| axis(w_at(t))).collect(),
        vals,
        membership_residual: 0.0,
        isotropy_residual: 0.0,
    };
    Ok(SyntheticData {
        n,
        h: SymMatrix::identity(n),
        k,
        e1: axis(0),
        lambda1,
        eta,
        mu,
        tau,
        table,
    })
}
