//! Generalized products of centroaffine hypersurfaces: symbolic composition,
//! predicted metric blocks and signature, detection of a product structure in
//! pointwise data, and pointwise factor extraction.
//!
//! The product of charts `ψ₁`, `ψ₂` with weight `λ ∉ {0, -1}` is
//! `ψ(u, p, q) = (e^u ψ₁(p), e^{-λu} ψ₂(q))`; a point as second factor gives
//! `ψ̃(u, p) = (e^u ψ₁(p), e^{-λu} c)`. Detection looks for a metric-unit
//! direction `T` with `K(T,T) ∥ T` whose operator `K_T` splits the orthogonal
//! complement into at most two eigenspaces that multiply to zero under `K`.

use thiserror::Error;

use crate::classify::{self, ClassifyConfig, RawCase};
use crate::expr::Expr;
use crate::geometry::{invariants_at, GeometryError, ImmersionChart};
use crate::linalg::{
    cluster_eigenvalues, dot, norm, sym_eigen, LinalgError, MixedTensor12, OnFrame,
    SymMatrix,
};

#[derive(Debug, Error)]
pub enum CalabiError {
    #[error("weight lambda must avoid 0 and -1 (got {0})")]
    InvalidLambda(f64),
    #[error("structure invalid: {0}")]
    StructureInvalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Second factor of a product: a chart or a constant point.
#[derive(Debug, Clone)]
pub enum CalabiFactor {
    Chart(ImmersionChart),
    Point(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct CalabiSpec {
    pub lambda: f64,
    pub left: ImmersionChart,
    pub right: CalabiFactor,
    pub u_interval: (f64, f64),
}

impl CalabiSpec {
    pub fn new(lambda: f64, left: ImmersionChart, right: CalabiFactor) -> Self {
        CalabiSpec {
            lambda,
            left,
            right,
            u_interval: (-0.5, 0.5),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<(), CalabiError> {
    if lambda == 0.0 || lambda == -1.0 || !lambda.is_finite() {
        return Err(CalabiError::InvalidLambda(lambda));
    }
    Ok(())
}

/// Builds the product chart symbolically.
pub fn compose(spec: &CalabiSpec) -> Result<ImmersionChart, CalabiError> {
    check_lambda(spec.lambda)?;
    let n1 = spec.left.n;
    let grow = Expr::exp(Expr::var(0));
    let decay = Expr::exp(Expr::Mul(
        Box::new(Expr::num(-spec.lambda)),
        Box::new(Expr::var(0)),
    ));
    let mut components: Vec<Expr> = spec
        .left
        .components
        .iter()
        .map(|c| Expr::Mul(Box::new(grow.clone()), Box::new(c.shift_vars(1))))
        .collect();
    let mut domain = vec![spec.u_interval];
    domain.extend(spec.left.domain.iter().cloned());
    let (n, name) = match &spec.right {
        CalabiFactor::Chart(right) => {
            for c in &right.components {
                components.push(Expr::Mul(
                    Box::new(decay.clone()),
                    Box::new(c.shift_vars(1 + n1)),
                ));
            }
            domain.extend(right.domain.iter().cloned());
            (
                1 + n1 + right.n,
                format!("calabi({},{},{})", spec.left.name, right.name, spec.lambda),
            )
        }
        CalabiFactor::Point(coords) => {
            if coords.is_empty() {
                return Err(CalabiError::StructureInvalid(
                    "point factor needs at least one coordinate".into(),
                ));
            }
            for &a in coords {
                components.push(if a == 1.0 {
                    decay.clone()
                } else {
                    Expr::Mul(Box::new(Expr::num(a)), Box::new(decay.clone()))
                });
            }
            (
                1 + n1,
                format!("calabi({},point,{})", spec.left.name, spec.lambda),
            )
        }
    };
    Ok(ImmersionChart::new(name, n, components, domain))
}

/// Metric block factors `(λ, λ/(1+λ), 1/(1+λ))` of a product, and the
/// negative index of the product metric in the hyperbolic-normal convention,
/// from the factor data. A `None` second factor means a point.
pub fn predicted_metric_signature(
    lambda: f64,
    left: (usize, usize),
    right: Option<(usize, usize)>,
) -> Result<((f64, f64, Option<f64>), usize), CalabiError> {
    check_lambda(lambda)?;
    let (n1, nh1) = left;
    let blocks = (
        lambda,
        lambda / (1.0 + lambda),
        right.map(|_| 1.0 / (1.0 + lambda)),
    );
    let n_of_h = match right {
        Some((n2, nh2)) => {
            if lambda > 0.0 {
                nh1 + nh2
            } else if lambda > -1.0 {
                n1 + 1 - nh1 + nh2
            } else {
                n2 + 1 + nh1 - nh2
            }
        }
        None => {
            if lambda > 0.0 {
                nh1
            } else if lambda > -1.0 {
                n1 + 1 - nh1
            } else {
                nh1 + 1
            }
        }
    };
    Ok((blocks, n_of_h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    TwoFactor,
    PointFactor,
}

/// A detected product structure at a point.
#[derive(Debug, Clone)]
pub struct CalabiStructure {
    pub kind: StructureKind,
    /// metric-unit distinguished direction, coordinate components
    pub t: Vec<f64>,
    /// chart point the detection ran at (empty for raw-tensor detection)
    pub base_point: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: Option<f64>,
    pub d2_dim: usize,
    pub d3_dim: usize,
    /// eigenvalues satisfy the exact product relations
    pub exact_form: bool,
}

impl CalabiStructure {
    /// The coefficient playing the third eigenvalue's role; for the point
    /// case it is `λ₁ - λ₂` (equal to `ε/λ₂` on exact data).
    pub fn lambda3_effective(&self) -> f64 {
        self.lambda3.unwrap_or(self.lambda1 - self.lambda2)
    }
}

/// Tries one direction and returns the structure when it qualifies.
fn qualify(
    h: &SymMatrix,
    k: &MixedTensor12,
    eps: i8,
    frame: &OnFrame,
    cand: &[f64],
    tol: f64,
) -> Option<CalabiStructure> {
    let n = h.dim();
    if n < 2 {
        return None;
    }
    let nrm = h.inner(cand, cand);
    if nrm <= 1e-12 {
        return None;
    }
    let t: Vec<f64> = cand.iter().map(|x| x / nrm.sqrt()).collect();
    let scale = 1.0 + k.frobenius_norm();
    let qual_tol = tol.max(1e-9) * scale;
    let sep_tol = 1e-6 * scale;

    let ktt = k.apply(&t, &t);
    let lambda1 = h.inner(&ktt, &t);
    // eigen-direction condition K(T,T) = λ₁ T
    let mut res = 0.0;
    for i in 0..n {
        let d = ktt[i] - lambda1 * t[i];
        res += d * d;
    }
    if res.sqrt() > qual_tol * 10.0 {
        return None;
    }
    // operator K_T on the orthogonal complement of T
    let t_on = frame.to_frame(&t);
    let m_on = SymMatrix::from_fn(n, |a, b| {
        h.inner(&k.apply(&t, &frame.basis[a]), &frame.basis[b])
    });
    // restrict to the complement of t_on
    let mut comp: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for a in 0..n {
        let mut e = vec![0.0; n];
        e[a] = 1.0;
        let c = dot(&e, &t_on);
        let mut w: Vec<f64> = e.iter().zip(&t_on).map(|(x, tt)| x - c * tt).collect();
        for b in &comp {
            let cb = dot(&w, b);
            for (x, bb) in w.iter_mut().zip(b) {
                *x -= cb * bb;
            }
        }
        let wn = norm(&w);
        if wn > 1e-6 {
            comp.push(w.iter().map(|x| x / wn).collect());
            if comp.len() == n - 1 {
                break;
            }
        }
    }
    if comp.len() != n - 1 {
        return None;
    }
    let restricted = SymMatrix::from_fn(n - 1, |a, b| {
        let ma = m_on.apply(&comp[a]);
        dot(&ma, &comp[b])
    });
    let (vals, vecs) = sym_eigen(&restricted).ok()?;
    let groups = cluster_eigenvalues(&vals, 1e-6);
    if groups.len() > 2 || groups.is_empty() {
        return None;
    }
    let mean = |g: &[usize]| g.iter().map(|&i| vals[i]).sum::<f64>() / g.len() as f64;
    // lift restricted eigenvectors back to coordinates
    let lift = |idxs: &[usize]| -> Vec<Vec<f64>> {
        idxs.iter()
            .map(|&i| {
                let mut w = vec![0.0; n];
                for (c, base) in vecs[i].iter().zip(&comp) {
                    for j in 0..n {
                        w[j] += c * base[j];
                    }
                }
                frame.from_frame(&w)
            })
            .collect()
    };
    let eps_f = eps as f64;
    if groups.len() == 1 {
        let lambda2 = mean(&groups[0]);
        if (lambda1 - 2.0 * lambda2).abs() <= sep_tol {
            return None;
        }
        // canonical orientation: positive secondary eigenvalue
        let (t, lambda1, lambda2) = if lambda2 < 0.0 {
            (t.iter().map(|x| -x).collect(), -lambda1, -lambda2)
        } else {
            (t, lambda1, lambda2)
        };
        let exact = (lambda1 * lambda2 - lambda2 * lambda2 - eps_f).abs() <= tol * scale;
        return Some(CalabiStructure {
            kind: StructureKind::PointFactor,
            t,
            base_point: vec![],
            lambda1,
            lambda2,
            lambda3: None,
            d2_dim: n - 1,
            d3_dim: 0,
            exact_form: exact,
        });
    }
    // two clusters
    let l_lo = mean(&groups[0]);
    let l_hi = mean(&groups[1]);
    if (l_hi - l_lo).abs() <= sep_tol {
        return None;
    }
    if (lambda1 - 2.0 * l_lo).abs() <= sep_tol || (lambda1 - 2.0 * l_hi).abs() <= sep_tol {
        return None;
    }
    // the eigenspaces must annihilate each other under K
    let b_lo = lift(&groups[0]);
    let b_hi = lift(&groups[1]);
    let mut worst = 0.0f64;
    for v in &b_hi {
        for w in &b_lo {
            let kv = k.apply(v, w);
            worst = worst.max(h.inner(&kv, &kv).max(0.0).sqrt());
        }
    }
    if worst > qual_tol * 10.0 {
        return None;
    }
    // canonical orientation: λ₂ + λ₃ ≥ 0, then λ₂ > λ₃
    let (t, lambda1, lambda2, lambda3, d2, d3) = {
        let (mut tt, mut l1, mut l2, mut l3, mut d2, mut d3) = (
            t,
            lambda1,
            l_hi,
            l_lo,
            b_hi.len(),
            b_lo.len(),
        );
        let s = l2 + l3;
        if s < -1e-12 || (s.abs() <= 1e-12 && l2 < 0.0) {
            tt = tt.iter().map(|x| -x).collect();
            l1 = -l1;
            let (n2, n3) = (-l3, -l2);
            let (e2, e3) = (d3, d2);
            l2 = n2;
            l3 = n3;
            d2 = e2;
            d3 = e3;
        }
        (tt, l1, l2, l3, d2, d3)
    };
    let exact = (lambda2 * lambda3 - eps_f).abs() <= tol * scale
        && (lambda1 - lambda2 - lambda3).abs() <= tol * scale;
    Some(CalabiStructure {
        kind: StructureKind::TwoFactor,
        t,
        base_point: vec![],
        lambda1,
        lambda2,
        lambda3: Some(lambda3),
        d2_dim: d2,
        d3_dim: d3,
        exact_form: exact,
    })
}

/// Deterministic candidate directions for the product detector.
fn candidate_directions(
    h: &SymMatrix,
    k: &MixedTensor12,
    eps: i8,
    frame: &OnFrame,
) -> Vec<Vec<f64>> {
    let n = h.dim();
    let config = ClassifyConfig::default();
    let mut candidates: Vec<Vec<f64>> = Vec::new();

    if let Ok(Some(data)) = classify::typical_data(h, k, eps, &config) {
        let spectrum = &data.spectrum;
        let e1 = &spectrum.e1;
        let lambda1 = spectrum.lambda1;
        let eta = spectrum.eta;
        // block-structure candidates
        if let (RawCase::Cm(_), Some(table), Some(dec)) = (&data.raw, &data.table, &data.dec) {
            let tr = table.trace();
            let trn = norm(&tr);
            if dec.k0 == 1 {
                // the image of the bilinear map is one line: mix it into the
                // top direction
                let mut w1 = vec![0.0; n];
                let l11 = &table.vals[0];
                for (c, wb) in l11.iter().zip(&table.d3) {
                    for i in 0..n {
                        w1[i] += c * wb[i];
                    }
                }
                let w1n = norm(&w1);
                if w1n > 1e-10 {
                    let c1 = (lambda1 / (lambda1 + 2.0 * eta)).sqrt();
                    let c2 = (2.0 * eta / (lambda1 + 2.0 * eta)).sqrt();
                    candidates.push(
                        (0..n).map(|i| c1 * e1[i] + c2 * w1[i] / w1n).collect(),
                    );
                }
            } else if trn > 1e-8 {
                let rho = dec.rho;
                let k0f = dec.k0 as f64;
                let mut tvec = vec![0.0; n];
                for (c, wb) in tr.iter().zip(&table.d3) {
                    for i in 0..n {
                        tvec[i] += c * wb[i] / trn;
                    }
                }
                let den = (rho * rho + k0f * k0f * eta * eta).sqrt();
                candidates.push(
                    (0..n)
                        .map(|i| (rho * e1[i] + k0f * eta * tvec[i]) / den)
                        .collect(),
                );
            }
        }
        // small-branch mixture candidates: every distinct critical direction
        // of the cubic restricted to the small branch, mixed into the top
        // direction with the weights a one-line image forces
        if !spectrum.d3_basis.is_empty() && eta.is_finite() && eta > 1e-9 {
            let d3 = &spectrum.d3_basis;
            let dd = d3.len();
            if dd >= 1 {
                let mut t3 = vec![0.0; dd * dd * dd];
                for a in 0..dd {
                    for b in 0..dd {
                        let kv = k.apply(&d3[a], &d3[b]);
                        for c in 0..dd {
                            t3[(a * dd + b) * dd + c] = h.inner(&kv, &d3[c]);
                        }
                    }
                }
                let restricted = classify::restricted_cubic(dd, t3);
                let c1 = (lambda1 / (lambda1 + 2.0 * eta)).sqrt();
                let c2 = (2.0 * eta / (lambda1 + 2.0 * eta)).sqrt();
                for w_on in classify::critical_restricted(&restricted, 16, config.seed) {
                    let mut w = vec![0.0; n];
                    for (c, wb) in w_on.iter().zip(d3) {
                        for i in 0..n {
                            w[i] += c * wb[i];
                        }
                    }
                    for sign in [1.0, -1.0] {
                        candidates.push(
                            (0..n)
                                .map(|i| c1 * e1[i] + sign * c2 * w[i])
                                .collect(),
                        );
                    }
                }
            }
        }
        candidates.push(e1.clone());
        // eigendirections of K_{e1}
        let m = SymMatrix::from_fn(n, |a, b| {
            h.inner(&k.apply(e1, &frame.basis[a]), &frame.basis[b])
        });
        if let Ok((_, vecs)) = sym_eigen(&m) {
            for v in vecs {
                candidates.push(frame.from_frame(&v));
            }
        }
    }
    // Tchebychev direction
    let mut tch = vec![0.0; n];
    for a in 0..n {
        let kv = k.apply(&frame.basis[a], &frame.basis[a]);
        for i in 0..n {
            tch[i] += kv[i] / n as f64;
        }
    }
    if norm(&tch) > 1e-8 {
        candidates.push(tch);
    }
    candidates
}

/// Searches a bounded deterministic candidate set for a product direction.
pub fn detect_calabi_direction(
    h: &SymMatrix,
    k: &MixedTensor12,
    eps: i8,
    tol: f64,
) -> Option<CalabiStructure> {
    let n = h.dim();
    if n < 2 {
        return None;
    }
    let frame = OnFrame::new(h).ok()?;
    let rank = |s: &CalabiStructure| -> u8 {
        match (s.kind, s.exact_form) {
            (StructureKind::TwoFactor, true) => 0,
            (StructureKind::TwoFactor, false) => 1,
            (StructureKind::PointFactor, true) => 2,
            (StructureKind::PointFactor, false) => 3,
        }
    };
    let mut best: Option<CalabiStructure> = None;
    for cand in candidate_directions(h, k, eps, &frame) {
        if let Some(s) = qualify(h, k, eps, &frame, &cand, tol) {
            if best.as_ref().map_or(true, |b| rank(&s) < rank(b)) {
                best = Some(s);
            }
        }
    }
    best
}

/// Chart-level detection; records the base point in the structure.
pub fn detect_at(
    chart: &ImmersionChart,
    point: &[f64],
    tol: f64,
) -> Result<Option<CalabiStructure>, CalabiError> {
    let data = invariants_at(chart, point)?;
    if data.non_convex {
        return Err(CalabiError::StructureInvalid(
            "metric is not definite at the point".into(),
        ));
    }
    let mut s = detect_calabi_direction(&data.h, &data.k, data.epsilon, tol);
    if let Some(ref mut st) = s {
        st.base_point = point.to_vec();
    }
    Ok(s)
}

/// Continues a detected structure to another chart point: the distinguished
/// direction is re-derived there and matched to the base structure by kind,
/// eigenvalues, and alignment.
fn continue_structure(
    chart: &ImmersionChart,
    point: &[f64],
    base: &CalabiStructure,
) -> Result<CalabiStructure, CalabiError> {
    if base.base_point.is_empty() || base.base_point == point {
        return Ok(base.clone());
    }
    let data = invariants_at(chart, point)?;
    let frame = OnFrame::new(&data.h)?;
    let align = |t: &[f64]| -> f64 { dot(t, &base.t) / (norm(t) * norm(&base.t)) };
    let compatible = |s: &CalabiStructure| -> bool {
        s.kind == base.kind
            && (s.lambda2 - base.lambda2).abs() < 1e-6
            && (s.lambda3_effective() - base.lambda3_effective()).abs() < 1e-6
    };
    // the base direction itself continues straight fields exactly
    if let Some(s) = qualify(&data.h, &data.k, data.epsilon, &frame, &base.t, 1e-6) {
        if compatible(&s) && align(&s.t) > 0.8 {
            let mut s = s;
            s.base_point = base.base_point.clone();
            return Ok(s);
        }
    }
    let mut best: Option<(f64, CalabiStructure)> = None;
    for cand in candidate_directions(&data.h, &data.k, data.epsilon, &frame) {
        if let Some(s) = qualify(&data.h, &data.k, data.epsilon, &frame, &cand, 1e-6) {
            if compatible(&s) {
                let a = align(&s.t);
                if best.as_ref().map_or(true, |(ba, _)| a > *ba) {
                    best = Some((a, s));
                }
            }
        }
    }
    match best {
        Some((a, mut s)) if a > 0.8 => {
            s.base_point = base.base_point.clone();
            Ok(s)
        }
        _ => Err(CalabiError::StructureInvalid(format!(
            "no compatible product direction continues to {point:?}"
        ))),
    }
}

/// Splits the position vector at `point` into the two factor immersions
/// implied by the structure, normalized so the flow parameter vanishes at the
/// structure's base point.
pub fn decompose_pointwise(
    chart: &ImmersionChart,
    point: &[f64],
    structure: &CalabiStructure,
) -> Result<(Vec<f64>, Vec<f64>), CalabiError> {
    let structure = &continue_structure(chart, point, structure)?;
    let lambda2 = structure.lambda2;
    let lam3 = structure.lambda3_effective();
    if (lambda2 - lam3).abs() < 1e-9 {
        return Err(CalabiError::StructureInvalid(format!(
            "factor eigenvalues coincide (lambda2 = {lambda2}, lambda3 = {lam3})"
        )));
    }
    if lambda2 == 0.0 {
        return Err(CalabiError::StructureInvalid("lambda2 vanishes".into()));
    }
    let base = if structure.base_point.is_empty() {
        point.to_vec()
    } else {
        structure.base_point.clone()
    };
    // flow displacement along the distinguished direction
    let t = &structure.t;
    let tt = dot(t, t);
    let delta: Vec<f64> = point.iter().zip(&base).map(|(a, b)| a - b).collect();
    let u = lambda2 * dot(&delta, t) / tt;

    let f = (-u).exp() / (lambda2 - lam3);
    let g = (-(lam3 / lambda2) * u).exp() / (lambda2 - lam3);

    let pos = chart.position(point)?;
    let tangents = chart.tangents(point)?;
    let dim = pos.len();
    let mut t_amb = vec![0.0; dim];
    for (c, tan) in t.iter().zip(&tangents) {
        for i in 0..dim {
            t_amb[i] += c * tan[i];
        }
    }
    let psi1: Vec<f64> = (0..dim).map(|i| f * (t_amb[i] - lam3 * pos[i])).collect();
    let psi2: Vec<f64> = (0..dim).map(|i| g * (lambda2 * pos[i] - t_amb[i])).collect();
    Ok((psi1, psi2))
}
