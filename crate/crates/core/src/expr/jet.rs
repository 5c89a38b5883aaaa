//! Truncated multivariate Taylor-jet arithmetic.
//!
//! A `Jet` stores the Taylor coefficients `f_α = ∂^α f / α!` of a scalar
//! function at a point, for every multi-index `|α| ≤ order`. Coefficients are
//! laid out in graded lexicographic order (degree first, then lexicographic
//! with `u1` ranked highest), which is fixed across the whole crate.
//!
//! Ring operations and composition with smooth primitives are closed on jets,
//! so evaluating an expression tree in jet arithmetic yields exact partial
//! derivatives up to the jet order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Shared layout tables for jets in `n` variables at a given order.
#[derive(Debug)]
pub struct JetSpace {
    n: usize,
    order: usize,
    /// all multi-indices, graded lex
    idxs: Vec<Vec<u8>>,
    pos: HashMap<Vec<u8>, usize>,
    /// (i, j, k) with idxs[i] + idxs[j] = idxs[k]
    mul_table: Vec<(u32, u32, u32)>,
}

fn gen_degree(n: usize, d: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(n: usize, d: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if n == 1 {
            prefix.push(d as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=d).rev() {
            prefix.push(first as u8);
            rec(n - 1, d - first, prefix, out);
            prefix.pop();
        }
    }
    let mut prefix = Vec::with_capacity(n);
    rec(n, d, &mut prefix, out);
}

impl JetSpace {
    fn build(n: usize, order: usize) -> JetSpace {
        assert!(n >= 1, "jet space needs at least one variable");
        let mut idxs = Vec::new();
        for d in 0..=order {
            gen_degree(n, d, &mut idxs);
        }
        let mut pos = HashMap::with_capacity(idxs.len());
        let mut degree_of = Vec::with_capacity(idxs.len());
        for (i, a) in idxs.iter().enumerate() {
            pos.insert(a.clone(), i);
            degree_of.push(a.iter().sum::<u8>());
        }
        let mut mul_table = Vec::new();
        for i in 0..idxs.len() {
            let di = degree_of[i] as usize;
            for j in 0..idxs.len() {
                let dj = degree_of[j] as usize;
                if di + dj > order {
                    continue;
                }
                let sum: Vec<u8> = idxs[i].iter().zip(&idxs[j]).map(|(a, b)| a + b).collect();
                let k = pos[&sum];
                mul_table.push((i as u32, j as u32, k as u32));
            }
        }
        JetSpace {
            n,
            order,
            idxs,
            pos,
            mul_table,
        }
    }

    /// Returns the cached space for `(n, order)`.
    pub fn get(n: usize, order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((n, order))
            .or_insert_with(|| Arc::new(JetSpace::build(n, order)))
            .clone()
    }

    pub fn vars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.idxs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idxs.is_empty()
    }

    pub fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        let key: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        self.pos.get(&key).copied()
    }

    pub fn multi_index(&self, i: usize) -> &[u8] {
        &self.idxs[i]
    }
}

/// Truncated Taylor expansion of a scalar at a point.
#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(space: Arc<JetSpace>, v: f64) -> Jet {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Jet { space, c }
    }

    pub fn variable(space: Arc<JetSpace>, var: usize, value: f64) -> Jet {
        assert!(var < space.vars());
        let mut c = vec![0.0; space.len()];
        c[0] = value;
        if space.order() >= 1 {
            let mut e = vec![0usize; space.vars()];
            e[var] = 1;
            let p = space.index_of(&e).unwrap();
            c[p] = 1.0;
        }
        Jet { space, c }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order()
    }

    pub fn vars(&self) -> usize {
        self.space.vars()
    }

    /// Constant term (the function value).
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient for the given multi-index.
    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        match self.space.index_of(alpha) {
            Some(p) => self.c[p],
            None => 0.0,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn is_constant(&self) -> bool {
        self.c[1..].iter().all(|&x| x == 0.0)
    }

    pub fn add(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        Jet {
            space: self.space.clone(),
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        Jet {
            space: self.space.clone(),
            c: self.c.iter().zip(&other.c).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            space: self.space.clone(),
            c: self.c.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.space.mul_table {
            c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        Jet {
            space: self.space.clone(),
            c,
        }
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut acc = Jet::constant(self.space.clone(), 1.0);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Composes a smooth scalar function given by the Taylor coefficients
    /// `a_k = f^{(k)}(value)/k!` around the jet's constant term:
    /// `f(g) = Σ_k a_k (g - g_0)^k`.
    fn compose(&self, a: &[f64]) -> Jet {
        let mut hat = self.clone();
        hat.c[0] = 0.0;
        let mut out = Jet::constant(self.space.clone(), a[0]);
        let mut pow = Jet::constant(self.space.clone(), 1.0);
        for ak in a.iter().skip(1) {
            pow = pow.mul(&hat);
            if *ak != 0.0 {
                out = out.add(&pow.scale(*ak));
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let c0 = self.value();
        let d = self.order();
        let mut a = Vec::with_capacity(d + 1);
        let mut cur = 1.0 / c0;
        for _ in 0..=d {
            a.push(cur);
            cur = -cur / c0;
        }
        self.compose(&a)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let d = self.order();
        let mut a = Vec::with_capacity(d + 1);
        let mut fact = 1.0;
        for k in 0..=d {
            if k > 0 {
                fact *= k as f64;
            }
            a.push(e / fact);
        }
        self.compose(&a)
    }

    pub fn ln(&self) -> Jet {
        let c0 = self.value();
        let d = self.order();
        let mut a = Vec::with_capacity(d + 1);
        a.push(c0.ln());
        // ln^{(k)}(x) = (-1)^{k-1} (k-1)! / x^k  =>  a_k = (-1)^{k-1} / (k x^k)
        let mut xk = c0;
        for k in 1..=d {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            a.push(sign / (k as f64 * xk));
            xk *= c0;
        }
        self.compose(&a)
    }

    pub fn powf(&self, p: f64) -> Jet {
        let c0 = self.value();
        let d = self.order();
        let mut a = Vec::with_capacity(d + 1);
        // a_k = binom(p, k) c0^{p-k}
        let mut coef = 1.0;
        for k in 0..=d {
            if k > 0 {
                coef *= (p - (k as f64 - 1.0)) / k as f64;
            }
            a.push(coef * c0.powf(p - k as f64));
        }
        self.compose(&a)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let d = self.order();
        let cycle = [s, c, -s, -c];
        let mut a = Vec::with_capacity(d + 1);
        let mut fact = 1.0;
        for k in 0..=d {
            if k > 0 {
                fact *= k as f64;
            }
            a.push(cycle[k % 4] / fact);
        }
        self.compose(&a)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let d = self.order();
        let cycle = [c, -s, -c, s];
        let mut a = Vec::with_capacity(d + 1);
        let mut fact = 1.0;
        for k in 0..=d {
            if k > 0 {
                fact *= k as f64;
            }
            a.push(cycle[k % 4] / fact);
        }
        self.compose(&a)
    }

    pub fn atan(&self) -> Jet {
        let x = self.value();
        let d = self.order();
        // atan^{(k)}(x) = (k-1)! cos^k(t) sin(k (t + pi/2)), t = atan(x)
        let t = x.atan();
        let mut a = Vec::with_capacity(d + 1);
        a.push(t);
        let ct = t.cos();
        let mut ck = 1.0;
        for k in 1..=d {
            ck *= ct;
            // (k-1)!/k! = 1/k
            a.push(ck * ((k as f64) * (t + std::f64::consts::FRAC_PI_2)).sin() / k as f64);
        }
        self.compose(&a)
    }

    /// Partial derivative with respect to variable `var`; the result lives in
    /// the jet space of one lower order.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let lower = JetSpace::get(self.vars(), self.order() - 1);
        let mut c = vec![0.0; lower.len()];
        for (ti, beta) in lower.idxs.iter().enumerate() {
            let mut src: Vec<usize> = beta.iter().map(|&b| b as usize).collect();
            src[var] += 1;
            let p = self.space.index_of(&src).unwrap();
            c[ti] = (src[var] as f64) * self.c[p];
        }
        Jet { space: lower, c }
    }

    /// Re-expresses the jet in the space of lower order `to`.
    pub fn truncate(&self, to: usize) -> Jet {
        assert!(to <= self.order());
        if to == self.order() {
            return self.clone();
        }
        let lower = JetSpace::get(self.vars(), to);
        let mut c = vec![0.0; lower.len()];
        c.copy_from_slice(&self.c[..lower.len()]);
        Jet { space: lower, c }
    }
}
