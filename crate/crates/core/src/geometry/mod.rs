//! Centroaffine invariants of immersion charts and structure-equation checks.
//!
//! Everything is derived from one order-4 jet evaluation of the chart
//! components per point: the metric needs second derivatives, the Levi-Civita
//! connection and cubic form third, and the covariant derivative of the cubic
//! form fourth. Carrying the intermediate quantities as jets keeps all
//! derivatives exact.

mod chart;
mod frame;
mod invariants;
mod parallel;

pub use chart::{GridSpec, ImmersionChart};
pub use frame::{centroaffine_frame, levi_civita, Frame};
pub use invariants::{
    check_integrability, integrability_of, invariants_at, CentroaffinePointData,
    IntegrabilityReport,
};
pub use parallel::{parallel_residual_at, verify_parallel, ParallelReport};

use crate::expr::ExprError;
use crate::linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point {0:?} lies outside the chart domain")]
    PointOutsideDomain(Vec<f64>),
    #[error("chart has {got} components, expected n+1 = {expect}")]
    ComponentCount { got: usize, expect: usize },
    #[error("degenerate frame: tangent vectors and position are dependent (pivot {0:.3e})")]
    DegenerateFrame(f64),
    #[error("degenerate centroaffine metric (|det| scale {0:.3e})")]
    DegenerateMetric(f64),
    #[error("cubic form cross-check failed: the two computations differ by {0:.3e}")]
    CrossCheckFailure(f64),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
