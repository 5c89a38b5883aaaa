//! Constructors for every classified model hypersurface, with parameter
//! validation matching the admissible regions exactly.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::Expr;
use crate::geometry::ImmersionChart;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
}

fn num(v: f64) -> Expr {
    Expr::num(v)
}

fn var(i: usize) -> Expr {
    Expr::var(i)
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    Expr::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    Expr::Div(Box::new(a), Box::new(b))
}

fn sum(terms: Vec<Expr>) -> Expr {
    let mut it = terms.into_iter();
    let first = it.next().unwrap_or_else(|| num(0.0));
    it.fold(first, add)
}

/// Locally strongly convex hyperquadric: the unit sphere graph for `eps = +1`,
/// the upper hyperboloid sheet for `eps = -1`.
pub fn make_quadric(n: usize, eps: i8) -> Result<ImmersionChart, CatalogError> {
    if n < 1 {
        return Err(CatalogError::InvalidParameters("n must be >= 1".into()));
    }
    if eps != 1 && eps != -1 {
        return Err(CatalogError::InvalidParameters("eps must be ±1".into()));
    }
    let r2 = sum((0..n).map(|i| var(i).pow_int(2)).collect());
    let last = if eps == 1 {
        Expr::sqrt(sub(num(1.0), r2))
    } else {
        Expr::sqrt(add(num(1.0), r2))
    };
    let mut components: Vec<Expr> = (0..n).map(var).collect();
    components.push(last);
    let half = 0.5 / (n as f64).sqrt();
    let b = if eps == 1 { half } else { 0.5 };
    let name = if eps == 1 { format!("sphere{n}") } else { format!("hyperboloid{n}") };
    Ok(ImmersionChart::new(name, n, components, vec![(-b, b); n]))
}

/// Flat hypersurface `x_1^{a_1} ⋯ x_{n+1}^{a_{n+1}} = 1` charted by
/// `x_i = e^{u_i}` with the last coordinate solved from the constraint.
/// Admissible exponents: all positive, or `a_1 < 0`, the rest positive, with a
/// negative total sum.
pub fn make_power(alphas: &[f64]) -> Result<ImmersionChart, CatalogError> {
    let m = alphas.len();
    if m < 2 {
        return Err(CatalogError::InvalidParameters(
            "need at least two exponents".into(),
        ));
    }
    let n = m - 1;
    let total: f64 = alphas.iter().sum();
    let all_pos = alphas.iter().all(|&a| a > 0.0);
    let mixed = alphas[0] < 0.0 && alphas[1..].iter().all(|&a| a > 0.0) && total < 0.0;
    if !(all_pos || mixed) {
        return Err(CatalogError::InvalidParameters(format!(
            "exponents must all be positive, or a1 < 0 with the rest positive and sum < 0 (sum = {total})"
        )));
    }
    if alphas[n] == 0.0 {
        return Err(CatalogError::InvalidParameters("last exponent is zero".into()));
    }
    let mut components: Vec<Expr> = (0..n).map(|i| Expr::exp(var(i))).collect();
    let exponent = div(
        Expr::Neg(Box::new(sum(
            (0..n).map(|i| mul(num(alphas[i]), var(i))).collect(),
        ))),
        num(alphas[n]),
    );
    components.push(Expr::exp(exponent));
    Ok(ImmersionChart::new(
        format!("power{n}"),
        n,
        components,
        vec![(-0.3, 0.3); n],
    ))
}

/// Flat hypersurface
/// `x_1^{a_1} ⋯ x_{n-1}^{a_{n-1}} (x_n^2 + x_{n+1}^2)^{a_n} exp(a_{n+1} atan(x_n / x_{n+1})) = 1`
/// charted by `x_i = e^{u_i}` and a polar pair `x_n = r sin u_n`,
/// `x_{n+1} = r cos u_n` with `r` solved from the constraint.
/// Admissible: `a_i < 0` for `i < n` and `2 a_n + Σ_{i<n} a_i > 0`.
pub fn make_complex_power(n: usize, alphas: &[f64]) -> Result<ImmersionChart, CatalogError> {
    if n < 2 {
        return Err(CatalogError::InvalidParameters("n must be >= 2".into()));
    }
    if alphas.len() != n + 1 {
        return Err(CatalogError::InvalidParameters(format!(
            "need n+1 = {} exponents, got {}",
            n + 1,
            alphas.len()
        )));
    }
    for (i, &a) in alphas.iter().enumerate().take(n - 1) {
        if a >= 0.0 {
            return Err(CatalogError::InvalidParameters(format!(
                "exponent a{} = {a} must be negative",
                i + 1
            )));
        }
    }
    let head: f64 = alphas[..n - 1].iter().sum();
    if 2.0 * alphas[n - 1] + head <= 0.0 {
        return Err(CatalogError::InvalidParameters(format!(
            "2*a{n} + sum of the leading exponents must be positive (got {})",
            2.0 * alphas[n - 1] + head
        )));
    }
    // r = exp(-(Σ a_i u_i + a_{n+1} θ) / (2 a_n)), θ = u_n
    let theta = var(n - 1);
    let mut terms: Vec<Expr> = (0..n - 1)
        .map(|i| mul(num(alphas[i]), var(i)))
        .collect();
    terms.push(mul(num(alphas[n]), theta.clone()));
    let r = Expr::exp(div(
        Expr::Neg(Box::new(sum(terms))),
        num(2.0 * alphas[n - 1]),
    ));
    let mut components: Vec<Expr> = (0..n - 1).map(|i| Expr::exp(var(i))).collect();
    components.push(mul(r.clone(), Expr::sin(theta.clone())));
    components.push(mul(r, Expr::cos(theta)));
    Ok(ImmersionChart::new(
        format!("complex-power{n}"),
        n,
        components,
        vec![(-0.3, 0.3); n],
    ))
}

/// Graph hypersurface
/// `x_{n+1} = (x_2² + ⋯ + x_{v-1}²)/(2 x_1) - x_1 (-ln x_1 + a_v ln x_v + ⋯ + a_n ln x_n)`
/// charted by `x_1 = e^{u_1}`, `x_i = u_i` for the squared block and
/// `x_i = e^{u_i}` inside the logarithms. Admissible: `2 ≤ v ≤ n+1`,
/// `a_i > 0` with `Σ a_i < 1`.
pub fn make_log_canonical(
    n: usize,
    v: usize,
    alphas: &[f64],
) -> Result<ImmersionChart, CatalogError> {
    if n < 1 || v < 2 || v > n + 1 {
        return Err(CatalogError::InvalidParameters(format!(
            "need 2 <= v <= n+1 (n = {n}, v = {v})"
        )));
    }
    if alphas.len() != n + 1 - v {
        return Err(CatalogError::InvalidParameters(format!(
            "need n+1-v = {} log exponents, got {}",
            n + 1 - v,
            alphas.len()
        )));
    }
    if alphas.iter().any(|&a| a <= 0.0) {
        return Err(CatalogError::InvalidParameters(
            "log exponents must be positive".into(),
        ));
    }
    let total: f64 = alphas.iter().sum();
    if total >= 1.0 {
        return Err(CatalogError::InvalidParameters(format!(
            "log exponents must sum below 1 (sum = {total})"
        )));
    }
    // coordinates: x1 = e^{u1}; x_i = u_i for 2 <= i <= v-1; x_i = e^{u_i} for v <= i <= n
    let mut components: Vec<Expr> = Vec::with_capacity(n + 1);
    components.push(Expr::exp(var(0)));
    for i in 1..(v - 1) {
        components.push(var(i));
    }
    for i in (v - 1)..n {
        components.push(Expr::exp(var(i)));
    }
    // last = quadratic part / (2 x1) - x1 (-u1 + Σ a_i u_i)
    let quad = if v > 2 {
        Some(sum(((1)..(v - 1)).map(|i| var(i).pow_int(2)).collect()))
    } else {
        None
    };
    let mut log_terms: Vec<Expr> = vec![Expr::Neg(Box::new(var(0)))];
    for (idx, &a) in alphas.iter().enumerate() {
        log_terms.push(mul(num(a), var(v - 1 + idx)));
    }
    let mut last = Expr::Neg(Box::new(mul(Expr::exp(var(0)), sum(log_terms))));
    if let Some(q) = quad {
        last = add(
            mul(q, mul(num(0.5), Expr::exp(Expr::Neg(Box::new(var(0)))))),
            last,
        );
    }
    components.push(last);
    Ok(ImmersionChart::new(
        format!("log-canonical{n}-v{v}"),
        n,
        components,
        vec![(-0.3, 0.3); n],
    ))
}

/// Normalized chart of the exceptional flat hypersurface:
/// `x = (e^{u_1}, u_2 e^{u_1}, …, u_n e^{u_1}, (½ Σ_{k≥2} u_k² + u_1) e^{u_1})`.
pub fn make_case_b(n: usize) -> Result<ImmersionChart, CatalogError> {
    if n < 2 {
        return Err(CatalogError::InvalidParameters("n must be >= 2".into()));
    }
    let e = Expr::exp(var(0));
    let mut components = vec![e.clone()];
    for i in 1..n {
        components.push(mul(var(i), e.clone()));
    }
    let q = sum((1..n).map(|i| var(i).pow_int(2)).collect());
    components.push(mul(add(mul(num(0.5), q), var(0)), e));
    Ok(ImmersionChart::new(
        format!("case-b{n}"),
        n,
        components,
        vec![(-0.5, 0.5); n],
    ))
}

/// Surface with one distinguished principal direction of the difference
/// tensor, in its closed exponential/trigonometric form. `branch` selects the
/// sign of the discriminant `a1² + 4(mu² - eps)`:
/// `a` positive, `b` negative, `c` zero. The sign `eps` is recovered from the
/// constraint `eps = lambda1*mu - mu²` and must be ±1.
pub fn make_surface6(
    branch: char,
    lambda1: f64,
    mu: f64,
    a1: f64,
) -> Result<ImmersionChart, CatalogError> {
    let eps_f = lambda1 * mu - mu * mu;
    let eps = if (eps_f - 1.0).abs() < 1e-9 {
        1.0
    } else if (eps_f + 1.0).abs() < 1e-9 {
        -1.0
    } else {
        return Err(CatalogError::InvalidParameters(format!(
            "lambda1*mu - mu^2 = {eps_f} is not ±1"
        )));
    };
    if lambda1 <= 0.0 {
        return Err(CatalogError::InvalidParameters("lambda1 must be positive".into()));
    }
    if lambda1 * lambda1 - 4.0 * eps <= 0.0 {
        return Err(CatalogError::InvalidParameters(
            "lambda1^2 - 4*eps must be positive".into(),
        ));
    }
    if lambda1 <= 2.0 * mu {
        return Err(CatalogError::InvalidParameters("lambda1 must exceed 2*mu".into()));
    }
    let disc = a1 * a1 + 4.0 * (mu * mu - eps);
    let (u1, u2) = (var(0), var(1));
    let first = Expr::exp(mul(num(lambda1 - mu), u1.clone()));
    let components: Vec<Expr> = match branch {
        'a' => {
            if disc <= 1e-9 {
                return Err(CatalogError::InvalidParameters(format!(
                    "branch a needs a positive discriminant (got {disc})"
                )));
            }
            let root = disc.sqrt();
            let second = Expr::exp(add(
                mul(num(0.5 * (a1 + root)), u2.clone()),
                mul(num(mu), u1.clone()),
            ));
            let third = Expr::exp(add(
                mul(num(0.5 * (a1 - root)), u2),
                mul(num(mu), u1),
            ));
            vec![first, second, third]
        }
        'b' => {
            if disc >= -1e-9 {
                return Err(CatalogError::InvalidParameters(format!(
                    "branch b needs a negative discriminant (got {disc})"
                )));
            }
            let omega = (-disc).sqrt() * 0.5;
            let envelope = Expr::exp(add(
                mul(num(0.5 * a1), u2.clone()),
                mul(num(mu), u1.clone()),
            ));
            let second = mul(Expr::sin(mul(num(omega), u2.clone())), envelope.clone());
            let third = mul(Expr::cos(mul(num(omega), u2)), envelope);
            vec![first, second, third]
        }
        'c' => {
            if disc.abs() > 1e-9 {
                return Err(CatalogError::InvalidParameters(format!(
                    "branch c needs a vanishing discriminant (got {disc})"
                )));
            }
            if a1 == 0.0 {
                return Err(CatalogError::InvalidParameters(
                    "branch c needs a1 nonzero".into(),
                ));
            }
            let envelope = Expr::exp(add(
                mul(num(0.5 * a1), u2.clone()),
                mul(num(mu), u1.clone()),
            ));
            let third = mul(mul(num(0.5 * a1), u2), envelope.clone());
            vec![envelope, first, third]
        }
        other => {
            return Err(CatalogError::InvalidParameters(format!(
                "branch must be a, b or c (got {other})"
            )))
        }
    };
    Ok(ImmersionChart::new(
        format!("surface6-{branch}"),
        2,
        components,
        vec![(-0.5, 0.5); 2],
    ))
}

/// Symbolic determinant of a matrix of expressions by cofactor expansion
/// along the first row. Entries are `Option<Expr>` with `None` meaning zero.
fn det_expr(m: &[Vec<Option<Expr>>]) -> Option<Expr> {
    let k = m.len();
    if k == 1 {
        return m[0][0].clone();
    }
    let mut acc: Option<Expr> = None;
    for col in 0..k {
        let Some(entry) = &m[0][col] else { continue };
        let minor: Vec<Vec<Option<Expr>>> = (1..k)
            .map(|r| {
                (0..k)
                    .filter(|&c| c != col)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        let Some(sub) = det_expr(&minor) else { continue };
        let term = mul(entry.clone(), sub);
        let signed = if col % 2 == 0 { term } else { Expr::Neg(Box::new(term)) };
        acc = Some(match acc {
            Some(a) => add(a, signed),
            None => signed,
        });
    }
    acc
}

/// Standard embedding of the unimodular positive-definite symmetric matrices:
/// chart over the `m(m+1)/2 - 1` free entries near the identity, with the last
/// diagonal entry solved from `det S = 1` (the determinant is affine in it).
pub fn make_det_sym(m: usize) -> Result<ImmersionChart, CatalogError> {
    if m < 3 {
        return Err(CatalogError::InvalidParameters("m must be >= 3".into()));
    }
    let n = m * (m + 1) / 2 - 1;
    // upper-triangle coordinates (i <= j) in row-major order; the last
    // diagonal slot (m-1, m-1) is solved for
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for i in 0..m {
        for j in i..m {
            if !(i == m - 1 && j == m - 1) {
                slots.push((i, j));
            }
        }
    }
    debug_assert_eq!(slots.len(), n);
    let entry = |i: usize, j: usize| -> Expr {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let var_idx = slots.iter().position(|&s| s == (a, b)).unwrap();
        if a == b {
            add(num(1.0), var(var_idx))
        } else {
            var(var_idx)
        }
    };
    // det S = s_mm * M + R, with M the leading principal minor and R the
    // determinant with the corner zeroed
    let full_zeroed: Vec<Vec<Option<Expr>>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == m - 1 && j == m - 1 {
                        None
                    } else {
                        Some(entry(i, j))
                    }
                })
                .collect()
        })
        .collect();
    let leading: Vec<Vec<Option<Expr>>> = (0..m - 1)
        .map(|i| (0..m - 1).map(|j| Some(entry(i, j))).collect())
        .collect();
    let r = det_expr(&full_zeroed).unwrap_or(num(0.0));
    let minor = det_expr(&leading).expect("leading minor is nonzero near the identity");
    let corner = div(sub(num(1.0), r), minor);

    let mut components = Vec::with_capacity(n + 1);
    for &(i, j) in &slots {
        components.push(entry(i, j));
    }
    components.push(corner);
    Ok(ImmersionChart::new(
        format!("det-sym{m}"),
        n,
        components,
        vec![(-0.3, 0.3); n],
    ))
}

/// Complex expression as a (re, im) pair of real expressions.
#[derive(Clone)]
struct CExpr(Option<Expr>, Option<Expr>);

impl CExpr {
    fn zero() -> CExpr {
        CExpr(None, None)
    }

    fn add(a: &CExpr, b: &CExpr) -> CExpr {
        let join = |x: &Option<Expr>, y: &Option<Expr>| match (x, y) {
            (Some(a), Some(b)) => Some(add(a.clone(), b.clone())),
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        CExpr(join(&a.0, &b.0), join(&a.1, &b.1))
    }

    fn neg(a: &CExpr) -> CExpr {
        CExpr(
            a.0.clone().map(|e| Expr::Neg(Box::new(e))),
            a.1.clone().map(|e| Expr::Neg(Box::new(e))),
        )
    }

    fn mul(a: &CExpr, b: &CExpr) -> CExpr {
        let prod = |x: &Option<Expr>, y: &Option<Expr>| -> Option<Expr> {
            match (x, y) {
                (Some(a), Some(b)) => Some(mul(a.clone(), b.clone())),
                _ => None,
            }
        };
        let sub_opt = |x: Option<Expr>, y: Option<Expr>| match (x, y) {
            (Some(a), Some(b)) => Some(sub(a, b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(Expr::Neg(Box::new(b))),
            (None, None) => None,
        };
        let add_opt = |x: Option<Expr>, y: Option<Expr>| match (x, y) {
            (Some(a), Some(b)) => Some(add(a, b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        };
        CExpr(
            sub_opt(prod(&a.0, &b.0), prod(&a.1, &b.1)),
            add_opt(prod(&a.0, &b.1), prod(&a.1, &b.0)),
        )
    }
}

fn det_cexpr(m: &[Vec<CExpr>]) -> CExpr {
    let k = m.len();
    if k == 1 {
        return m[0][0].clone();
    }
    let mut acc = CExpr::zero();
    for col in 0..k {
        let entry = &m[0][col];
        if entry.0.is_none() && entry.1.is_none() {
            continue;
        }
        let minor: Vec<Vec<CExpr>> = (1..k)
            .map(|r| {
                (0..k)
                    .filter(|&c| c != col)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        let sub_det = det_cexpr(&minor);
        let mut term = CExpr::mul(entry, &sub_det);
        if col % 2 == 1 {
            term = CExpr::neg(&term);
        }
        acc = CExpr::add(&acc, &term);
    }
    acc
}

/// Standard embedding of the unimodular positive-definite Hermitian matrices:
/// real chart over the `k² - 1` free real entries near the identity, last
/// diagonal entry solved from `det H = 1`.
pub fn make_det_herm(k: usize) -> Result<ImmersionChart, CatalogError> {
    if k < 3 {
        return Err(CatalogError::InvalidParameters("k must be >= 3".into()));
    }
    let n = k * k - 1;
    // coordinate slots: for i < j the pair (re, im) of H_ij, for i = j the
    // real diagonal; the last diagonal is solved for.
    // ambient order: row-major upper triangle, diagonal first in each row.
    #[derive(Clone, Copy, PartialEq)]
    enum Slot {
        Diag(usize),
        Re(usize, usize),
        Im(usize, usize),
    }
    let mut slots: Vec<Slot> = Vec::new();
    for i in 0..k {
        if i < k - 1 {
            slots.push(Slot::Diag(i));
        }
        for j in (i + 1)..k {
            slots.push(Slot::Re(i, j));
            slots.push(Slot::Im(i, j));
        }
    }
    debug_assert_eq!(slots.len(), n);
    let slot_var = |s: Slot| -> usize { slots.iter().position(|&x| x == s).unwrap() };
    let entry = |i: usize, j: usize| -> CExpr {
        if i == j {
            if i == k - 1 {
                CExpr::zero() // solved corner, substituted later
            } else {
                CExpr(Some(add(num(1.0), var(slot_var(Slot::Diag(i))))), None)
            }
        } else if i < j {
            CExpr(
                Some(var(slot_var(Slot::Re(i, j)))),
                Some(var(slot_var(Slot::Im(i, j)))),
            )
        } else {
            CExpr(
                Some(var(slot_var(Slot::Re(j, i)))),
                Some(Expr::Neg(Box::new(var(slot_var(Slot::Im(j, i)))))),
            )
        }
    };
    let zeroed: Vec<Vec<CExpr>> = (0..k)
        .map(|i| (0..k).map(|j| entry(i, j)).collect())
        .collect();
    let leading: Vec<Vec<CExpr>> = (0..k - 1)
        .map(|i| (0..k - 1).map(|j| entry(i, j)).collect())
        .collect();
    // det H = corner * M + R; both M and R are real-valued, so only the real
    // parts of the symbolic determinants are kept (the imaginary parts vanish
    // identically)
    let r = det_cexpr(&zeroed).0.unwrap_or(num(0.0));
    let minor = det_cexpr(&leading)
        .0
        .expect("leading Hermitian minor is nonzero near the identity");
    let corner = div(sub(num(1.0), r), minor);

    let mut components = Vec::with_capacity(n + 1);
    for &s in &slots {
        components.push(match s {
            Slot::Diag(i) => add(num(1.0), var(slot_var(Slot::Diag(i)))),
            Slot::Re(i, j) => var(slot_var(Slot::Re(i, j))),
            Slot::Im(i, j) => var(slot_var(Slot::Im(i, j))),
        });
    }
    components.push(corner);
    // the box shrinks with k to keep the matrices inside the definite cone
    let hw = 0.9 / k as f64;
    Ok(ImmersionChart::new(
        format!("det-herm{k}"),
        n,
        components,
        vec![(-hw, hw); n],
    ))
}

/// One catalog entry: an id, a parameter schema, the label the classifier is
/// expected to produce on the seeded defaults, and a short reference.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub params: &'static str,
    pub expected_label: &'static str,
    pub reference: &'static str,
    /// default grid resolution for verification sweeps
    pub default_grid: usize,
}

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            id: "quadric",
            params: "n (int >= 1), eps (±1)",
            expected_label: "Quadric",
            reference: "locally strongly convex hyperquadric",
            default_grid: 7,
        },
        CatalogEntry {
            id: "power",
            params: "alphas (n+1 reals; all > 0, or a1 < 0, rest > 0, sum < 0)",
            expected_label: "CalabiPointFactor",
            reference: "flat hypersurface x1^a1 ... x_{n+1}^a_{n+1} = 1",
            default_grid: 5,
        },
        CatalogEntry {
            id: "complex-power",
            params: "n (int >= 2), alphas (n+1 reals; a_i < 0 for i < n, 2 a_n + sum > 0)",
            expected_label: "CalabiPointFactor",
            reference: "flat hypersurface with a rotational factor",
            default_grid: 5,
        },
        CatalogEntry {
            id: "log-canonical",
            params: "n (int), v (2..n+1), alphas (n+1-v positive reals, sum < 1)",
            expected_label: "CaseB | CalabiPointFactor",
            reference: "flat graph with logarithmic terms",
            default_grid: 5,
        },
        CatalogEntry {
            id: "case-b",
            params: "n (int >= 2)",
            expected_label: "CaseB",
            reference: "exceptional flat hypersurface with light-like difference tensor spectrum",
            default_grid: 5,
        },
        CatalogEntry {
            id: "surface6",
            params: "branch (a|b|c), lambda1, mu, a1 (eps = lambda1*mu - mu^2 must be ±1)",
            expected_label: "CalabiPointFactor",
            reference: "surfaces with one distinguished principal direction",
            default_grid: 5,
        },
        CatalogEntry {
            id: "det-sym",
            params: "m (int >= 3)",
            expected_label: "SL_R(m)",
            reference: "standard embedding of SL(m,R)/SO(m)",
            default_grid: 3,
        },
        CatalogEntry {
            id: "det-herm",
            params: "k (int >= 3)",
            expected_label: "SL_C(k)",
            reference: "standard embedding of SL(k,C)/SU(k)",
            default_grid: 2,
        },
    ]
}

/// Builds a catalog chart from an id and a loose key=value parameter map.
pub fn emit(id: &str, params: &BTreeMap<String, String>) -> Result<ImmersionChart, CatalogError> {
    let get_usize = |key: &str, default: Option<usize>| -> Result<usize, CatalogError> {
        match params.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| CatalogError::InvalidParameters(format!("{key} = {v} is not an integer"))),
            None => default.ok_or_else(|| {
                CatalogError::InvalidParameters(format!("missing required parameter `{key}`"))
            }),
        }
    };
    let get_f64 = |key: &str, default: Option<f64>| -> Result<f64, CatalogError> {
        match params.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| CatalogError::InvalidParameters(format!("{key} = {v} is not a number"))),
            None => default.ok_or_else(|| {
                CatalogError::InvalidParameters(format!("missing required parameter `{key}`"))
            }),
        }
    };
    let get_list = |key: &str| -> Result<Vec<f64>, CatalogError> {
        let raw = params.get(key).ok_or_else(|| {
            CatalogError::InvalidParameters(format!("missing required parameter `{key}`"))
        })?;
        raw.split(|c| c == ',' || c == ';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CatalogError::InvalidParameters(format!("bad number `{s}` in {key}")))
            })
            .collect()
    };
    match id {
        "quadric" => {
            let n = get_usize("n", Some(2))?;
            let eps = get_f64("eps", Some(1.0))?;
            make_quadric(n, if eps >= 0.0 { 1 } else { -1 })
        }
        "power" => {
            let alphas = get_list("alphas")?;
            make_power(&alphas)
        }
        "complex-power" => {
            let n = get_usize("n", Some(2))?;
            let alphas = get_list("alphas")?;
            make_complex_power(n, &alphas)
        }
        "log-canonical" => {
            let n = get_usize("n", Some(2))?;
            let v = get_usize("v", Some(n + 1))?;
            let alphas = if params.contains_key("alphas") {
                get_list("alphas")?
            } else {
                vec![]
            };
            make_log_canonical(n, v, &alphas)
        }
        "case-b" => make_case_b(get_usize("n", Some(2))?),
        "surface6" => {
            let branch = params
                .get("branch")
                .and_then(|s| s.chars().next())
                .unwrap_or('a');
            make_surface6(
                branch,
                get_f64("lambda1", None)?,
                get_f64("mu", None)?,
                get_f64("a1", Some(0.0))?,
            )
        }
        "det-sym" => make_det_sym(get_usize("m", Some(3))?),
        "det-herm" => make_det_herm(get_usize("k", Some(3))?),
        other => Err(CatalogError::UnknownEntry(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{invariants_at, verify_parallel, GridSpec};

    #[test]
    fn quadric_shapes() {
        let c = make_quadric(2, 1).unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.components.len(), 3);
        let d = invariants_at(&c, &[0.0, 0.0]).unwrap();
        assert_eq!(d.epsilon, 1);
        let c = make_quadric(2, -1).unwrap();
        let d = invariants_at(&c, &[0.1, 0.1]).unwrap();
        assert_eq!(d.epsilon, -1);
        assert!(make_quadric(1, 1).is_ok());
    }

    #[test]
    fn power_validation() {
        assert!(make_power(&[1.0, 1.0, 1.0]).is_ok());
        assert!(make_power(&[-3.0, 1.0, 1.0]).is_ok());
        let err = make_power(&[-1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, CatalogError::InvalidParameters(_)));
    }

    #[test]
    fn power_surface_is_proper_sphere() {
        // unit exponents give a proper affine sphere: Tchebychev form vanishes
        let c = make_power(&[1.0, 1.0, 1.0]).unwrap();
        let d = invariants_at(&c, &[0.07, -0.12]).unwrap();
        for t in &d.tcheb {
            assert!(t.abs() < 1e-10, "tcheb {t:.3e}");
        }
        let rep = verify_parallel(&c, &GridSpec::new(5), 1e-8).unwrap();
        assert!(rep.pass, "residual {:.3e}", rep.max_residual);
    }

    #[test]
    fn complex_power_validation() {
        assert!(make_complex_power(2, &[-1.0, 1.0, 0.3]).is_ok());
        assert!(make_complex_power(2, &[-1.0, 0.4, 0.3]).is_err());
        assert!(make_complex_power(2, &[1.0, 1.0, 0.3]).is_err());
    }

    #[test]
    fn log_canonical_validation() {
        assert!(make_log_canonical(2, 3, &[]).is_ok());
        assert!(make_log_canonical(2, 2, &[0.5]).is_ok());
        assert!(make_log_canonical(2, 2, &[1.2]).is_err());
        assert!(make_log_canonical(3, 2, &[0.6, 0.5]).is_err());
    }

    #[test]
    fn case_b_point_and_flatness() {
        let c = make_case_b(2).unwrap();
        let x = c.position(&[0.0, 0.0]).unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0]);
        // the metric is the flat one in these coordinates
        let d = invariants_at(&c, &[0.2, -0.3]).unwrap();
        assert_eq!(d.epsilon, 1);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d.h.get(i, j) - expect).abs() < 1e-11);
                for k in 0..2 {
                    assert!(d.gamma_lc[i][j][k].abs() < 1e-11);
                }
            }
        }
        // curvature vanishes
        for row in &d.curvature {
            for a in row {
                for b in a {
                    for v in b {
                        assert!(v.abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn surface6_validation() {
        let mu = (3.0 - 5.0f64.sqrt()) / 2.0;
        assert!(make_surface6('a', 3.0, mu, 2.0).is_ok());
        assert!(make_surface6('b', 3.0, mu, 1.0).is_ok());
        // branch b with a non-negative discriminant is rejected
        assert!(make_surface6('b', 3.0, mu, 2.0).is_err());
        // branch c needs the exact discriminant root
        let a1c = (4.0 * (1.0 - mu * mu)).sqrt();
        assert!(make_surface6('c', 3.0, mu, a1c).is_ok());
        assert!(make_surface6('c', 3.0, mu, 1.0).is_err());
        // eps must come out as ±1
        assert!(make_surface6('a', 3.0, 0.3, 2.0).is_err());
    }

    #[test]
    fn det_sym_chart_basics() {
        let c = make_det_sym(3).unwrap();
        assert_eq!(c.n, 5);
        assert_eq!(c.components.len(), 6);
        // identity point: all coordinates zero gives the identity matrix
        let x = c.position(&[0.0; 5]).unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        // determinant stays one away from the origin
        let p = [0.12, -0.05, 0.08, 0.2, -0.11];
        let x = c.position(&p).unwrap();
        let (s11, s12, s13, s22, s23, s33) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        let det = s11 * (s22 * s33 - s23 * s23) - s12 * (s12 * s33 - s23 * s13)
            + s13 * (s12 * s23 - s22 * s13);
        assert!((det - 1.0).abs() < 1e-12, "det = {det}");
    }

    #[test]
    fn det_herm_chart_basics() {
        let c = make_det_herm(3).unwrap();
        assert_eq!(c.n, 8);
        assert_eq!(c.components.len(), 9);
        let x = c.position(&[0.0; 8]).unwrap();
        // identity: diagonals one, off-diagonals zero; the solved corner is last
        assert!((x[8] - 1.0).abs() < 1e-14);
        // determinant check at a generic point
        let p = [0.1, 0.03, -0.07, 0.05, 0.02, -0.08, 0.06, 0.04];
        let x = c.position(&p).unwrap();
        // slots: d0, re01, im01, re02, im02, d1, re12, im12, corner
        let (a, z1r, z1i, z2r, z2i, b, z3r, z3i, cc) =
            (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8]);
        let det = a * b * cc - a * (z3r * z3r + z3i * z3i) - b * (z2r * z2r + z2i * z2i)
            - cc * (z1r * z1r + z1i * z1i)
            + 2.0 * ((z1r * z3r - z1i * z3i) * z2r + (z1r * z3i + z1i * z3r) * z2i);
        assert!((det - 1.0).abs() < 1e-12, "det = {det}");
    }

    #[test]
    fn emit_dispatch() {
        let mut p = BTreeMap::new();
        p.insert("n".to_string(), "2".to_string());
        p.insert("eps".to_string(), "1".to_string());
        assert!(emit("quadric", &p).is_ok());
        assert!(matches!(
            emit("nope", &p),
            Err(CatalogError::UnknownEntry(_))
        ));
    }
}
