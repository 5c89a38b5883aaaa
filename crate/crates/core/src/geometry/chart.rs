//! Immersion charts and their JSON interchange format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::expr::{self, Expr, Jet};

/// A hypersurface chart `x: U ⊂ R^n → R^{n+1}` given by n+1 component
/// expressions over `u1..un`, with a box domain.
#[derive(Debug, Clone)]
pub struct ImmersionChart {
    pub name: String,
    pub n: usize,
    pub components: Vec<Expr>,
    /// per-axis (lo, hi)
    pub domain: Vec<(f64, f64)>,
    pub params: BTreeMap<String, f64>,
}

/// Serialized form: components as DSL strings.
#[derive(Debug, Serialize, Deserialize)]
struct ChartJson {
    name: String,
    n: usize,
    components: Vec<String>,
    domain: Vec<[f64; 2]>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

impl ImmersionChart {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        components: Vec<Expr>,
        domain: Vec<(f64, f64)>,
    ) -> Self {
        ImmersionChart {
            name: name.into(),
            n,
            components,
            domain,
            params: BTreeMap::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.n
            && point
                .iter()
                .zip(&self.domain)
                .all(|(p, (lo, hi))| *p >= *lo && *p <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// Evaluates every component as an order-`order` jet at `point`.
    pub fn jets_at(&self, point: &[f64], order: usize) -> Result<Vec<Jet>, GeometryError> {
        if self.components.len() != self.n + 1 {
            return Err(GeometryError::ComponentCount {
                got: self.components.len(),
                expect: self.n + 1,
            });
        }
        if !self.contains(point) {
            return Err(GeometryError::PointOutsideDomain(point.to_vec()));
        }
        let space = expr::JetSpace::get(self.n, order);
        self.components
            .iter()
            .map(|c| c.eval_jet_in(&space, point).map_err(GeometryError::from))
            .collect()
    }

    /// Ambient position at a point.
    pub fn position(&self, point: &[f64]) -> Result<Vec<f64>, GeometryError> {
        if !self.contains(point) {
            return Err(GeometryError::PointOutsideDomain(point.to_vec()));
        }
        self.components
            .iter()
            .map(|c| c.eval(point).map_err(GeometryError::from))
            .collect()
    }

    /// Ambient tangent vectors `x_{u_k}` at a point (columns of the Jacobian).
    pub fn tangents(&self, point: &[f64]) -> Result<Vec<Vec<f64>>, GeometryError> {
        let jets = self.jets_at(point, 1)?;
        Ok((0..self.n)
            .map(|k| {
                let mut e = vec![0usize; self.n];
                e[k] = 1;
                jets.iter().map(|j| j.coeff(&e)).collect()
            })
            .collect())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ChartJson {
            name: self.name.clone(),
            n: self.n,
            components: self.components.iter().map(|c| c.to_string()).collect(),
            domain: self.domain.iter().map(|&(lo, hi)| [lo, hi]).collect(),
            params: self.params.clone(),
        })
        .expect("chart serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, String> {
        let raw: ChartJson =
            serde_json::from_value(value.clone()).map_err(|e| format!("bad chart JSON: {e}"))?;
        let components = raw
            .components
            .iter()
            .map(|s| expr::parse(s, raw.n, &raw.params))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("bad chart component: {e}"))?;
        Ok(ImmersionChart {
            name: raw.name,
            n: raw.n,
            components,
            domain: raw.domain.iter().map(|d| (d[0], d[1])).collect(),
            params: raw.params,
        })
    }
}

/// Uniform sampling grid over a chart domain, shrunk by a relative margin to
/// stay clear of boundary singularities.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// points per axis
    pub per_axis: usize,
    /// relative margin removed from each end of every axis
    pub margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            per_axis: 5,
            margin: 0.05,
        }
    }
}

impl GridSpec {
    pub fn new(per_axis: usize) -> Self {
        GridSpec {
            per_axis,
            ..Default::default()
        }
    }

    /// All grid points in deterministic lexicographic order.
    pub fn points(&self, chart: &ImmersionChart) -> Vec<Vec<f64>> {
        let g = self.per_axis.max(1);
        let axes: Vec<Vec<f64>> = chart
            .domain
            .iter()
            .map(|&(lo, hi)| {
                let w = hi - lo;
                let a = lo + self.margin * w;
                let b = hi - self.margin * w;
                if g == 1 {
                    vec![0.5 * (a + b)]
                } else {
                    (0..g)
                        .map(|i| a + (b - a) * i as f64 / (g - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = Vec::with_capacity(g.pow(chart.n as u32));
        let mut idx = vec![0usize; chart.n];
        loop {
            out.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect());
            let mut axis = chart.n;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < g {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn unit_circle() -> ImmersionChart {
        ImmersionChart::new(
            "circle",
            1,
            vec![
                Expr::sin(Expr::var(0)),
                Expr::cos(Expr::var(0)),
            ],
            vec![(-0.5, 0.5)],
        )
    }

    #[test]
    fn json_round_trip() {
        let c = unit_circle();
        let v = c.to_json();
        let c2 = ImmersionChart::from_json(&v).unwrap();
        assert_eq!(c2.n, 1);
        assert_eq!(c2.components, c.components);
        assert_eq!(c2.domain, c.domain);
    }

    #[test]
    fn domain_check() {
        let c = unit_circle();
        assert!(c.contains(&[0.2]));
        assert!(!c.contains(&[0.7]));
        assert!(c.jets_at(&[0.7], 2).is_err());
    }

    #[test]
    fn grid_deterministic_and_inside() {
        let c = ImmersionChart::new(
            "flat",
            2,
            vec![Expr::var(0), Expr::var(1), Expr::num(1.0)],
            vec![(-1.0, 1.0), (0.0, 2.0)],
        );
        let g = GridSpec::new(3).points(&c);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-0.9, 0.1]);
        assert_eq!(g[8], vec![0.9, 1.9]);
        assert!(g.iter().all(|p| c.contains(p)));
    }

    #[test]
    fn tangents_of_graph() {
        let c = ImmersionChart::new(
            "paraboloid",
            2,
            vec![
                Expr::var(0),
                Expr::var(1),
                Expr::Add(
                    Box::new(Expr::var(0).pow_int(2)),
                    Box::new(Expr::var(1).pow_int(2)),
                ),
            ],
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        );
        let t = c.tangents(&[0.5, -0.25]).unwrap();
        assert_eq!(t[0], vec![1.0, 0.0, 1.0]);
        assert_eq!(t[1], vec![0.0, 1.0, -0.5]);
    }
}
