//! The isotropic bilinear map on the half-branch distribution, the symmetric
//! operators it induces, and the block decomposition they generate.

use super::typical::PointSpectrum;
use super::ClassifyError;
use crate::linalg::{dot, h_orthonormalize, norm, sym_eigen, MixedTensor12, SymMatrix};

/// Values of the bilinear map `L(v, w) = K(v, w) - ½ λ₁ h(v, w) e₁` over an
/// orthonormal basis of the half-branch distribution, expressed in an
/// orthonormal basis of the complementary small-branch distribution.
#[derive(Debug, Clone)]
pub struct IsotropicTable {
    pub lambda1: f64,
    pub eta: f64,
    pub mu: f64,
    /// `σ = ½ λ₁ η`
    pub sigma: f64,
    /// `τ = ¼ η (η + ½ λ₁)`
    pub tau: f64,
    /// orthonormal basis of the half-branch space, coordinate components
    pub d2: Vec<Vec<f64>>,
    /// orthonormal basis of the small-branch space, coordinate components
    pub d3: Vec<Vec<f64>>,
    /// `vals[a * d2 + b]`: components of `L(u_a, u_b)` in the `d3` basis
    pub vals: Vec<Vec<f64>>,
    /// worst defect of the membership of the values in the small-branch space
    pub membership_residual: f64,
    /// worst defect of the isotropy identity over the probe directions
    pub isotropy_residual: f64,
}

impl IsotropicTable {
    pub fn d2_dim(&self) -> usize {
        self.d2.len()
    }

    pub fn d3_dim(&self) -> usize {
        self.d3.len()
    }

    /// `L(v, w)` for arbitrary vectors in half-branch coordinates.
    pub fn l_of(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let d2 = self.d2_dim();
        let d3 = self.d3_dim();
        let mut out = vec![0.0; d3];
        for a in 0..d2 {
            if v[a] == 0.0 {
                continue;
            }
            for b in 0..d2 {
                let c = v[a] * w[b];
                if c == 0.0 {
                    continue;
                }
                let lv = &self.vals[a * d2 + b];
                for t in 0..d3 {
                    out[t] += c * lv[t];
                }
            }
        }
        out
    }

    /// Sum of the diagonal values over the full basis.
    pub fn trace(&self) -> Vec<f64> {
        let d2 = self.d2_dim();
        let mut out = vec![0.0; self.d3_dim()];
        for a in 0..d2 {
            for (t, x) in self.vals[a * d2 + a].iter().enumerate() {
                out[t] += x;
            }
        }
        out
    }
}

const MEMBERSHIP_TOL: f64 = 1e-8;
const ISOTROPY_TOL: f64 = 1e-7;

/// Builds the isotropic-map table from the difference tensor and the branch
/// split, verifying range membership and the isotropy identity.
pub fn build_l(
    h: &SymMatrix,
    k: &MixedTensor12,
    spectrum: &PointSpectrum,
) -> Result<IsotropicTable, ClassifyError> {
    let d2 = spectrum.d2_basis.len();
    let d3 = spectrum.d3_basis.len();
    let lambda1 = spectrum.lambda1;
    let eta = spectrum.eta;
    let mu = spectrum.mu;
    let sigma = 0.5 * lambda1 * eta;
    let tau = 0.25 * eta * (eta + 0.5 * lambda1);
    let scale = 1.0 + k.frobenius_norm();

    let mut vals = vec![vec![0.0; d3]; d2 * d2];
    let mut membership = 0.0f64;
    for a in 0..d2 {
        for b in a..d2 {
            let va = &spectrum.d2_basis[a];
            let vb = &spectrum.d2_basis[b];
            let mut lv = k.apply(va, vb);
            let hdot = h.inner(va, vb);
            for (x, e) in lv.iter_mut().zip(&spectrum.e1) {
                *x -= 0.5 * lambda1 * hdot * e;
            }
            // project on the small-branch basis; whatever is left measures
            // how far the value strays from that space
            let coords: Vec<f64> = spectrum.d3_basis.iter().map(|w| h.inner(&lv, w)).collect();
            let mut rem = lv.clone();
            for (c, w) in coords.iter().zip(&spectrum.d3_basis) {
                for (r, wi) in rem.iter_mut().zip(w) {
                    *r -= c * wi;
                }
            }
            let stray = h.inner(&rem, &rem).max(0.0).sqrt();
            membership = membership.max(stray);
            vals[a * d2 + b] = coords.clone();
            vals[b * d2 + a] = coords;
        }
    }
    if membership > MEMBERSHIP_TOL * scale {
        return Err(ClassifyError::RangeViolation(membership));
    }

    let table = IsotropicTable {
        lambda1,
        eta,
        mu,
        sigma,
        tau,
        d2: spectrum.d2_basis.clone(),
        d3: spectrum.d3_basis.clone(),
        vals,
        membership_residual: membership,
        isotropy_residual: 0.0,
    };

    // isotropy: ⟨L(v,v), L(v,v)⟩ = σ ⟨v,v⟩² on basis vectors and pair mixes
    let mut worst = 0.0f64;
    let mut probe = |v: &Vec<f64>| {
        let lv = table.l_of(v, v);
        let vv = dot(v, v);
        worst = worst.max((dot(&lv, &lv) - sigma * vv * vv).abs());
    };
    for a in 0..d2 {
        let mut e = vec![0.0; d2];
        e[a] = 1.0;
        probe(&e);
        for b in (a + 1)..d2 {
            let mut m = vec![0.0; d2];
            m[a] = std::f64::consts::FRAC_1_SQRT_2;
            m[b] = std::f64::consts::FRAC_1_SQRT_2;
            probe(&m);
            m[b] = -std::f64::consts::FRAC_1_SQRT_2;
            probe(&m);
        }
    }
    if worst > ISOTROPY_TOL * scale.max(1.0) {
        return Err(ClassifyError::IsotropyViolation(worst));
    }
    Ok(IsotropicTable {
        isotropy_residual: worst,
        ..table
    })
}

/// Matrix of the symmetric operator `ṽ ↦ K_v L(v, ṽ)` on the half-branch
/// space, computed through the polarization `⟨P_v ṽ, v'⟩ = ⟨L(v,ṽ), L(v,v')⟩`.
pub fn p_operator(table: &IsotropicTable, v: &[f64]) -> SymMatrix {
    let d2 = table.d2_dim();
    let cols: Vec<Vec<f64>> = (0..d2)
        .map(|b| {
            let mut e = vec![0.0; d2];
            e[b] = 1.0;
            table.l_of(v, &e)
        })
        .collect();
    SymMatrix::from_fn(d2, |a, b| dot(&cols[a], &cols[b]))
}

/// Verifies that the spectrum of `P_v` stays inside `{σ, 0, τ}`.
pub fn p_spectrum_check(table: &IsotropicTable, v: &[f64], tol: f64) -> Result<Vec<f64>, ClassifyError> {
    let p = p_operator(table, v);
    let (vals, _) = sym_eigen(&p).map_err(ClassifyError::Linalg)?;
    let scale = tol * (1.0 + table.sigma.abs().max(table.tau.abs()));
    for &x in &vals {
        let ok = (x - table.sigma).abs() <= scale
            || x.abs() <= scale
            || (x - table.tau).abs() <= scale;
        if !ok {
            return Err(ClassifyError::SpectrumViolation(x));
        }
    }
    Ok(vals)
}

/// One block of the decomposition: a representative direction and the basis
/// of its null space, all in half-branch coordinates.
#[derive(Debug, Clone)]
pub struct Block {
    pub rep: Vec<f64>,
    pub zero_basis: Vec<Vec<f64>>,
}

/// Direct-sum decomposition of the half-branch space into blocks.
#[derive(Debug, Clone)]
pub struct DTwoDecomposition {
    pub k0: usize,
    /// common null-space dimension of the blocks
    pub p: usize,
    pub blocks: Vec<Block>,
    pub tau: f64,
    pub sigma: f64,
    /// Σ_a L(u_a, u_a) in small-branch coordinates
    pub tr_l: Vec<f64>,
    /// `‖Tr L‖ / (1 + p)`
    pub rho: f64,
    /// worst defect of an operator eigenvalue from its target slot
    pub spectrum_residual: f64,
}

impl DTwoDecomposition {
    pub fn trace_norm(&self) -> f64 {
        norm(&self.tr_l)
    }
}

/// Greedy block extraction: repeatedly take the first remaining direction,
/// split the remainder by the eigenvalues of its operator (null space joins
/// the block, the `τ` eigenspace carries on), and recurse until exhausted.
pub fn decompose_d2(table: &IsotropicTable, tol: f64) -> Result<DTwoDecomposition, ClassifyError> {
    let d2 = table.d2_dim();
    let tau = table.tau;
    let sigma = table.sigma;
    let id = SymMatrix::identity(d2);
    let mut remaining: Vec<Vec<f64>> = (0..d2)
        .map(|a| {
            let mut e = vec![0.0; d2];
            e[a] = 1.0;
            e
        })
        .collect();
    let mut blocks: Vec<Block> = Vec::new();
    let mut worst = 0.0f64;
    let slot_tol = tol * (1.0 + tau.abs().max(sigma.abs()));
    while !remaining.is_empty() {
        let dim = remaining.len();
        let rep = remaining[0].clone();
        // operator of the representative, restricted to the remaining space
        let p_full = p_operator(table, &rep);
        let restricted = SymMatrix::from_fn(dim, |a, b| {
            let pa = p_full.apply(&remaining[a]);
            dot(&pa, &remaining[b])
        });
        let (vals, vecs) = sym_eigen(&restricted).map_err(ClassifyError::Linalg)?;
        let mut zero_basis: Vec<Vec<f64>> = Vec::new();
        let mut tau_basis: Vec<Vec<f64>> = Vec::new();
        for (val, coeffs) in vals.iter().zip(&vecs) {
            // lift back to half-branch coordinates
            let mut w = vec![0.0; d2];
            for (c, r) in coeffs.iter().zip(&remaining) {
                for i in 0..d2 {
                    w[i] += c * r[i];
                }
            }
            if val.abs() <= slot_tol {
                worst = worst.max(val.abs());
                zero_basis.push(w);
            } else if (val - tau).abs() <= slot_tol || (val - sigma).abs() <= slot_tol {
                worst = worst.max((val - tau).abs().min((val - sigma).abs()));
                // the representative always claims its own eigenvalue slot:
                // remove its component before the vector carries on
                let c = dot(&w, &rep);
                let mut adj: Vec<f64> = w.iter().zip(&rep).map(|(x, r)| x - c * r).collect();
                let an = norm(&adj);
                if an > 1e-8 {
                    for x in adj.iter_mut() {
                        *x /= an;
                    }
                    tau_basis.push(adj);
                }
            } else {
                return Err(ClassifyError::SpectrumViolation(*val));
            }
        }
        // orthonormalize (the σ = τ coincidence leaves near-duplicates behind)
        let tau_basis = match h_orthonormalize(&tau_basis, &id) {
            Ok(b) => b,
            Err(_) => prune_orthonormal(&tau_basis),
        };
        blocks.push(Block {
            rep,
            zero_basis,
        });
        remaining = tau_basis;
    }
    let k0 = blocks.len();
    let p = blocks[0].zero_basis.len();
    for b in &blocks {
        if b.zero_basis.len() != p {
            return Err(ClassifyError::BlockMismatch {
                expected: p,
                got: b.zero_basis.len(),
            });
        }
    }
    if k0 >= 2 && !matches!(p, 0 | 1 | 3 | 7) {
        return Err(ClassifyError::ForbiddenP(p));
    }
    let tr_l = table.trace();
    let rho = norm(&tr_l) / (1 + p) as f64;
    Ok(DTwoDecomposition {
        k0,
        p,
        blocks,
        tau,
        sigma,
        tr_l,
        rho,
        spectrum_residual: worst,
    })
}

/// Keeps a maximal orthonormal subfamily (drops near-duplicates).
fn prune_orthonormal(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for b in &out {
            let c = dot(&w, b);
            for (x, bb) in w.iter_mut().zip(b) {
                *x -= c * bb;
            }
        }
        let n = norm(&w);
        if n > 1e-6 {
            out.push(w.iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Closed-form contraction check on the trace of the isotropic map.
#[derive(Debug, Clone)]
pub struct RhoCheck {
    pub rho_direct: f64,
    /// `ρ² = ½ k₀ η (λ₁ + (k₀ - 1) μ)`, the block-count form
    pub rho_formula: f64,
    /// equivalent closed form expressed through the branch multiplicity
    pub rho_formula_m: f64,
    pub agree: bool,
}

pub fn trace_rho_check(dec: &DTwoDecomposition, spectrum: &PointSpectrum) -> RhoCheck {
    let k0 = dec.k0 as f64;
    let (lambda1, eta, mu, eps) = (
        spectrum.lambda1,
        spectrum.eta,
        spectrum.mu,
        spectrum.eps as f64,
    );
    let rho2 = 0.5 * k0 * eta * (lambda1 + (k0 - 1.0) * mu);
    let m = (1 + dec.p) * dec.k0 + 1;
    let mf = m as f64;
    let root = (lambda1 * lambda1 - 4.0 * eps).sqrt();
    let rho2_m = match dec.p {
        0 => 0.125 * (mf - 1.0) * root * (mf * lambda1 - (mf - 2.0) * root),
        1 => (mf - 1.0) * root * ((mf + 1.0) * lambda1 - (mf - 3.0) * root) / 32.0,
        3 => (mf - 1.0) * root * ((mf + 3.0) * lambda1 - (mf - 5.0) * root) / 128.0,
        7 => 0.25 * root * (3.0 * lambda1 - root),
        _ => f64::NAN,
    };
    let direct = dec.rho * dec.rho;
    let scale = 1.0 + rho2.abs();
    let agree = (direct - rho2).abs() <= 1e-6 * scale
        && (rho2_m.is_nan() || (rho2_m - rho2).abs() <= 1e-9 * scale);
    RhoCheck {
        rho_direct: direct.max(0.0).sqrt(),
        rho_formula: rho2.max(0.0).sqrt(),
        rho_formula_m: rho2_m.max(0.0).sqrt(),
        agree,
    }
}
