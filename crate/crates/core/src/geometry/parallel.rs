//! Grid verification of the parallel-cubic-form condition.

use rayon::prelude::*;

use super::chart::{GridSpec, ImmersionChart};
use super::invariants::invariants_at;
use super::GeometryError;

/// Cubic form below this metric norm counts as identically zero at the point.
const ZERO_C_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ParallelReport {
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub pass: bool,
    pub tol: f64,
    pub points_checked: usize,
    /// per-point failures (location, message)
    pub errors: Vec<(Vec<f64>, String)>,
}

/// Normalized parallelism defect at one point: `‖∇̂C‖ / ‖C‖` in metric norms
/// when the cubic form is nonzero, plain `‖∇̂C‖` when it vanishes.
pub fn parallel_residual_at(
    chart: &ImmersionChart,
    point: &[f64],
) -> Result<f64, GeometryError> {
    let data = invariants_at(chart, point)?;
    let c_norm = data.c_norm();
    let raw = data.nabla_c_norm();
    Ok(if c_norm < ZERO_C_TOL { raw } else { raw / c_norm })
}

/// Sweeps the grid and reports the worst normalized parallelism defect.
/// Deterministic regardless of worker count: the merge keeps the maximum
/// residual and breaks ties toward the lexicographically smallest point.
pub fn verify_parallel(
    chart: &ImmersionChart,
    grid: &GridSpec,
    tol: f64,
) -> Result<ParallelReport, GeometryError> {
    let points = grid.points(chart);
    let results: Vec<(Vec<f64>, Result<f64, String>)> = points
        .par_iter()
        .map(|p| {
            (
                p.clone(),
                parallel_residual_at(chart, p).map_err(|e| e.to_string()),
            )
        })
        .collect();

    let mut max_residual = -1.0f64;
    let mut worst_point: Vec<f64> = vec![];
    let mut errors = Vec::new();
    for (p, r) in results {
        match r {
            Ok(res) => {
                let better = res > max_residual
                    || (res == max_residual && lex_less(&p, &worst_point));
                if better {
                    max_residual = res;
                    worst_point = p;
                }
            }
            Err(msg) => errors.push((p, msg)),
        }
    }
    if max_residual < 0.0 {
        max_residual = f64::INFINITY;
    }
    Ok(ParallelReport {
        pass: errors.is_empty() && max_residual <= tol,
        max_residual,
        worst_point,
        tol,
        points_checked: points.len(),
        errors,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}
