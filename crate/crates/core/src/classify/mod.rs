//! Pointwise classification of locally strongly convex hypersurfaces with
//! parallel cubic form from the spectral structure of the difference tensor.
//!
//! The pipeline: maximize the cubic frame function on the unit sphere, split
//! the secondary spectrum of `K_{e1}` into its two admissible branches, and
//! in the mixed case decompose the half-branch space into blocks through the
//! isotropic map. Labels follow from the block count, the common null
//! dimension, the trace of the isotropic map, and exact integer dimension
//! matches.

mod dtwo;
mod octonion;
pub mod synthetic;
mod typical;

pub use dtwo::{
    build_l, decompose_d2, p_operator, p_spectrum_check, trace_rho_check, Block,
    DTwoDecomposition, IsotropicTable, RhoCheck,
};
pub use octonion::{octonion_mul, quaternion_mul};
pub use typical::{maximize_cubic, spectrum_split, PointSpectrum, RawCase};

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{invariants_at, GeometryError, ImmersionChart};
use crate::linalg::{normalize, LinalgError, MixedTensor12, OnFrame, SymMatrix};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("cubic form vanishes at the point (quadric)")]
    ZeroCubic,
    #[error("sphere maximization did not converge")]
    NonConvergence,
    #[error("eigenvalue sits {0:.3e} away from both admissible branches")]
    BranchAmbiguity(f64),
    #[error("bilinear map value strays {0:.3e} from the small-branch space")]
    RangeViolation(f64),
    #[error("isotropy identity violated by {0:.3e}")]
    IsotropyViolation(f64),
    #[error("operator eigenvalue {0:.6} outside the admissible slots")]
    SpectrumViolation(f64),
    #[error("block null dimension {0} is not 0, 1, 3 or 7")]
    ForbiddenP(usize),
    #[error("blocks have unequal null dimensions (expected {expected}, got {got})")]
    BlockMismatch { expected: usize, got: usize },
    #[error("metric is not positive definite at the point")]
    IndefiniteMetric,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Final classification label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    Quadric,
    CaseB,
    CalabiPointFactor,
    CalabiTwoFactor,
    SlR(usize),
    SlC(usize),
    SuStar(usize),
    E6F4,
    Unrecognized,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Quadric => write!(f, "Quadric"),
            Label::CaseB => write!(f, "CaseB"),
            Label::CalabiPointFactor => write!(f, "CalabiPointFactor"),
            Label::CalabiTwoFactor => write!(f, "CalabiTwoFactor"),
            Label::SlR(m) => write!(f, "SL_R({m})"),
            Label::SlC(m) => write!(f, "SL_C({m})"),
            Label::SuStar(m) => write!(f, "SU_star({m})"),
            Label::E6F4 => write!(f, "E6_F4"),
            Label::Unrecognized => write!(f, "Unrecognized"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    pub seed: u64,
    pub restarts: usize,
    /// eigenvalue-to-branch assignment tolerance
    pub branch_tol: f64,
    /// threshold on the trace norm of the isotropic map
    pub trace_tol: f64,
    /// check pointwise parallelism of the cubic form before classifying
    pub check_parallel: bool,
    pub parallel_tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            seed: 0,
            restarts: 32,
            branch_tol: 1e-6,
            trace_tol: 1e-6,
            check_parallel: true,
            parallel_tol: 1e-6,
        }
    }
}

/// Full classification output; serializes to the report JSON schema.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    #[serde(serialize_with = "ser_label")]
    pub label: Label,
    pub n: usize,
    pub epsilon: i8,
    pub lambda1: Option<f64>,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub case: Option<String>,
    pub k0: Option<usize>,
    pub p: Option<usize>,
    #[serde(rename = "trace_L_norm")]
    pub trace_l_norm: Option<f64>,
    pub rho: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
    pub evidence: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

fn ser_label<S: serde::Serializer>(l: &Label, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&l.to_string())
}

impl ClassificationReport {
    fn bare(n: usize, epsilon: i8) -> Self {
        ClassificationReport {
            label: Label::Unrecognized,
            n,
            epsilon,
            lambda1: None,
            mu: None,
            eta: None,
            case: None,
            k0: None,
            p: None,
            trace_l_norm: None,
            rho: None,
            residuals: BTreeMap::new(),
            evidence: BTreeMap::new(),
            diagnostic: None,
        }
    }
}

/// Critical manifold dimension for a block structure `(k0, p)`; labels are
/// only awarded on an exact integer match.
pub fn critical_dimension(k0: usize, p: usize) -> Option<usize> {
    if k0 == 1 {
        // single block: the image of the bilinear map is a line, so the
        // decisive dimension is reached when the small branch is that line
        return Some((1 + p) * k0 + 1);
    }
    let m = (1 + p) * k0 + 1;
    match p {
        0 => Some(m * (m + 1) / 2 - 1),
        1 => Some((m + 1) * (m + 1) / 4 - 1),
        3 => Some((m + 1) * (m + 3) / 8 - 1),
        7 => {
            if k0 == 2 {
                Some(26)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Classifies a point of a chart.
pub fn classify_point(
    chart: &ImmersionChart,
    point: &[f64],
    config: &ClassifyConfig,
) -> Result<ClassificationReport, ClassifyError> {
    let data = invariants_at(chart, point)?;
    if data.non_convex {
        let mut rep = ClassificationReport::bare(chart.n, data.epsilon);
        rep.diagnostic = Some("metric is not definite at the point".into());
        return Ok(rep);
    }
    let mut parallel_residual = None;
    if config.check_parallel {
        let c_norm = data.c_norm();
        let res = if c_norm < 1e-10 {
            data.nabla_c_norm()
        } else {
            data.nabla_c_norm() / c_norm
        };
        parallel_residual = Some(res);
        if res > config.parallel_tol {
            let mut rep = ClassificationReport::bare(chart.n, data.epsilon);
            rep.residuals.insert("parallel_point".into(), res);
            rep.diagnostic = Some(format!(
                "cubic form is not parallel at the point (defect {res:.3e})"
            ));
            return Ok(rep);
        }
    }
    let mut rep = classify_tensors(&data.h, &data.k, data.epsilon, config)?;
    if let Some(res) = parallel_residual {
        rep.residuals.insert("parallel_point".into(), res);
    }
    Ok(rep)
}

/// Classifies raw pointwise data `(h, K, ε)`.
pub fn classify_tensors(
    h: &SymMatrix,
    k: &MixedTensor12,
    eps: i8,
    config: &ClassifyConfig,
) -> Result<ClassificationReport, ClassifyError> {
    let n = h.dim();
    if !h.is_positive_definite(1e-12) {
        return Err(ClassifyError::IndefiniteMetric);
    }
    let mut rep = ClassificationReport::bare(n, eps);

    let frame = OnFrame::new(h)?;
    let cubic = typical::CubicOn::build(h, k, &frame);
    let c_norm = 2.0 * cubic.norm();
    rep.evidence.insert("c_norm".into(), c_norm);
    if c_norm <= 1e-10 {
        rep.label = Label::Quadric;
        return Ok(rep);
    }

    // typical basis
    let (e1_on, lambda1) =
        typical::maximize_on(&cubic, config.restarts, config.seed, true)?;
    let first_order = {
        let kv = cubic.apply2(&e1_on);
        let r: Vec<f64> = kv
            .iter()
            .zip(&e1_on)
            .map(|(a, b)| a - lambda1 * b)
            .collect();
        crate::linalg::norm(&r)
    };
    rep.residuals.insert("first_order".into(), first_order);
    rep.lambda1 = Some(lambda1);

    let (spectrum, raw) =
        typical::spectrum_split_on(&cubic, &frame, &e1_on, eps, config.branch_tol)?;
    rep.case = Some(raw.tag());
    rep.mu = Some(spectrum.mu);
    rep.eta = Some(spectrum.eta);
    rep.residuals
        .insert("branch_worst".into(), spectrum.branch_residual);

    match raw {
        RawCase::B => {
            rep.label = Label::CaseB;
            rep.evidence.insert("lambda1".into(), lambda1);
            rep.evidence.insert("epsilon".into(), eps as f64);
            Ok(rep)
        }
        RawCase::C1 => {
            rep.label = Label::CalabiPointFactor;
            // factor-with-point eigenvalue relation λ₁λ₂ - λ₂² = ε with λ₂ = μ
            let relation = eps as f64 - lambda1 * spectrum.mu + spectrum.mu * spectrum.mu;
            rep.evidence
                .insert("point_relation_residual".into(), relation.abs());
            rep.evidence.insert("lambda2".into(), spectrum.mu);
            Ok(rep)
        }
        RawCase::Cn => {
            rep.label = Label::Unrecognized;
            rep.diagnostic = Some(
                "all secondary eigenvalues on the half branch with separated discriminant: \
                 this case cannot occur for a parallel cubic form"
                    .into(),
            );
            Ok(rep)
        }
        RawCase::Cm(m) => {
            let table = build_l(h, k, &spectrum)?;
            rep.residuals
                .insert("isotropy_worst".into(), table.isotropy_residual);
            rep.residuals
                .insert("range_membership".into(), table.membership_residual);
            let dec = decompose_d2(&table, 1e-6)?;
            rep.k0 = Some(dec.k0);
            rep.p = Some(dec.p);
            rep.residuals
                .insert("p_spectrum_worst".into(), dec.spectrum_residual);
            let tr_norm = dec.trace_norm();
            rep.trace_l_norm = Some(tr_norm);
            rep.rho = Some(dec.rho);
            if (table.sigma - table.tau).abs() < 1e-6 {
                rep.evidence.insert("sigma_tau_coincident".into(), 1.0);
            }
            let rc = trace_rho_check(&dec, &spectrum);
            rep.evidence.insert("rho_formula".into(), rc.rho_formula);
            rep.evidence
                .insert("rho_agree".into(), if rc.agree { 1.0 } else { 0.0 });

            if (1 + dec.p) * dec.k0 != m - 1 {
                rep.diagnostic = Some(format!(
                    "block structure (k0 = {}, p = {}) does not tile the half branch (m = {m})",
                    dec.k0, dec.p
                ));
                return Ok(rep);
            }
            let crit = critical_dimension(dec.k0, dec.p);
            let eta = spectrum.eta;
            let mu = spectrum.mu;
            let rho = dec.rho;
            if dec.k0 >= 2 && tr_norm <= config.trace_tol {
                // model hypersurfaces: the trace vanishes exactly at the
                // critical dimension
                match crit {
                    Some(c) if c == n => {
                        rep.label = match dec.p {
                            0 => Label::SlR(m),
                            1 => Label::SlC((m + 1) / 2),
                            3 => Label::SuStar((m + 3) / 2),
                            7 => Label::E6F4,
                            _ => Label::Unrecognized,
                        };
                    }
                    _ => {
                        rep.diagnostic = Some(format!(
                            "trace of the bilinear map vanishes but n = {n} misses the critical dimension {crit:?}"
                        ));
                    }
                }
                return Ok(rep);
            }
            // nonvanishing trace: product structure, with the distinguished
            // eigenvalues recorded as evidence
            if dec.k0 == 1 {
                let den = (lambda1 * (lambda1 + 2.0 * eta)).sqrt();
                rep.evidence
                    .insert("sigma1".into(), (lambda1 * lambda1 + 2.0 * eta * mu) / den);
                rep.evidence.insert(
                    "sigma2".into(),
                    (0.5 * lambda1 * lambda1 + lambda1 * eta) / den,
                );
                rep.evidence
                    .insert("sigma3".into(), (lambda1 * mu + 2.0 * eta * mu) / den);
            } else {
                let k0f = dec.k0 as f64;
                let r = (rho * rho + k0f * k0f * eta * eta).sqrt();
                rep.evidence.insert(
                    "sigma1".into(),
                    (rho * rho * lambda1 + k0f * k0f * eta * eta * mu) / (rho * r),
                );
                rep.evidence
                    .insert("sigma2".into(), (0.5 * lambda1 + eta) * rho / r);
                rep.evidence.insert("sigma3".into(), mu * r / rho);
            }
            match crit {
                Some(c) if n == c + 1 => rep.label = Label::CalabiPointFactor,
                Some(c) if n > c + 1 => rep.label = Label::CalabiTwoFactor,
                Some(c) => {
                    rep.diagnostic = Some(format!(
                        "trace is nonzero but n = {n} does not exceed the critical dimension {c}"
                    ));
                }
                None => {
                    rep.diagnostic = Some("no critical dimension for this block structure".into());
                }
            }
            Ok(rep)
        }
    }
}

/// Typical-basis data bundle for reuse by the product-structure detector.
pub struct TypicalData {
    pub spectrum: PointSpectrum,
    pub raw: RawCase,
    pub table: Option<IsotropicTable>,
    pub dec: Option<DTwoDecomposition>,
}

/// Runs the typical-basis part of the pipeline on raw tensors.
pub fn typical_data(
    h: &SymMatrix,
    k: &MixedTensor12,
    eps: i8,
    config: &ClassifyConfig,
) -> Result<Option<TypicalData>, ClassifyError> {
    let frame = OnFrame::new(h)?;
    let cubic = typical::CubicOn::build(h, k, &frame);
    if 2.0 * cubic.norm() <= 1e-10 {
        return Ok(None);
    }
    let (e1_on, _) = typical::maximize_on(&cubic, config.restarts, config.seed, true)?;
    let (spectrum, raw) =
        typical::spectrum_split_on(&cubic, &frame, &e1_on, eps, config.branch_tol)?;
    let (table, dec) = if let RawCase::Cm(_) = raw {
        let table = build_l(h, k, &spectrum)?;
        let dec = decompose_d2(&table, 1e-6)?;
        (Some(table), Some(dec))
    } else {
        (None, None)
    };
    Ok(Some(TypicalData {
        spectrum,
        raw,
        table,
        dec,
    }))
}

/// `e1` expressed back in coordinates, normalized in the metric.
pub fn unit_in_metric(h: &SymMatrix, v: &[f64]) -> Vec<f64> {
    let norm = h.inner(v, v).sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// Normalized Euclidean unit vector helper re-exported for tests.
pub fn unit(v: &[f64]) -> Vec<f64> {
    normalize(v)
}

/// Cubic form over an orthonormal frame from raw coefficients
/// (`t[(a n + b) n + c]`), for restricted maximizations.
pub(crate) fn restricted_cubic(n: usize, t: Vec<f64>) -> typical::CubicOn {
    typical::CubicOn { n, t }
}

/// Distinct critical directions of a restricted cubic (ascent endpoints).
pub(crate) fn critical_restricted(
    cubic: &typical::CubicOn,
    restarts: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    typical::critical_directions(cubic, restarts, seed)
}
