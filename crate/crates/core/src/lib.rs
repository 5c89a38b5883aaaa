#![allow(clippy::needless_range_loop)]

//! Numerical engine for centroaffine differential geometry.
//!
//! The crate computes the centroaffine invariants of a hypersurface immersion
//! `x: U ⊂ R^n → R^{n+1}` (metric, induced and Levi-Civita connections,
//! difference tensor, cubic form, curvature), verifies the structure equations
//! and the parallel-cubic-form condition on grids, constructs and detects
//! generalized Calabi products, and classifies points by the spectral data of
//! the difference tensor (typical basis, isotropic map, block decomposition).
//!
//! Derivatives are exact: every chart component is evaluated as a truncated
//! multivariate Taylor jet of order 4, which is enough for the covariant
//! derivative of the cubic form.

pub mod calabi;
pub mod catalog;
pub mod classify;
pub mod expr;
pub mod geometry;
pub mod linalg;
