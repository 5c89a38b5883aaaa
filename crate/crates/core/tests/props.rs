//! Property tests: parser round-trips, jet derivatives against finite
//! differences, clustering behavior, and sign coherence of the frame.

use std::collections::BTreeMap;

use proptest::prelude::*;

use caffine_core::expr::{self, Expr, Func};
use caffine_core::geometry::{invariants_at, ImmersionChart};
use caffine_core::linalg::cluster_eigenvalues;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-3.0..3.0f64).prop_map(|v| Expr::Num((v * 8.0).round() / 8.0)),
        (0usize..2).prop_map(Expr::Var),
    ]
}

/// Random smooth expressions in two variables, kept inside safe domains by
/// wrapping risky primitives.
fn expr_strategy() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 1i32..4)
                .prop_map(|(a, k)| Expr::Pow(Box::new(a), Box::new(Expr::Num(k as f64)))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            inner.clone().prop_map(|a| Expr::apply(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::apply(Func::Cos, a)),
            inner.clone().prop_map(|a| Expr::apply(Func::Atan, a)),
            inner.clone().prop_map(|a| Expr::exp(Expr::Mul(
                Box::new(Expr::Num(0.25)),
                Box::new(Expr::apply(Func::Sin, a))
            ))),
            // ln and sqrt through strictly positive wrappers
            inner.clone().prop_map(|a| Expr::ln(Expr::Add(
                Box::new(Expr::Num(3.0)),
                Box::new(Expr::apply(Func::Sin, a))
            ))),
            inner.prop_map(|a| Expr::sqrt(Expr::Add(
                Box::new(Expr::Num(2.0)),
                Box::new(Expr::apply(Func::Cos, a))
            ))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printer_parse_round_trip(e in expr_strategy()) {
        // parse(print(parse(s))) must reproduce parse(s) structurally
        let source = e.to_string();
        let first = expr::parse(&source, 2, &BTreeMap::new())
            .unwrap_or_else(|err| panic!("parse of `{source}` failed: {err}"));
        let printed = first.to_string();
        let second = expr::parse(&printed, 2, &BTreeMap::new())
            .unwrap_or_else(|err| panic!("reparse of `{printed}` failed: {err}"));
        prop_assert_eq!(second, first);
        // and printing is a fixed point from then on
        prop_assert_eq!(printed.clone(), expr::parse(&printed, 2, &BTreeMap::new()).unwrap().to_string());
    }

    #[test]
    fn jets_match_central_differences(e in expr_strategy(), x in -0.4..0.4f64, y in -0.4..0.4f64) {
        let p = [x, y];
        let Ok(jet) = e.eval_jet(&p, 3) else { return Ok(()); };
        // guard against huge values where differences lose accuracy
        if jet.coeffs().iter().any(|c| c.abs() > 1e3) {
            return Ok(());
        }
        let h = 1e-4;
        let f = |dx: f64, dy: f64| e.eval(&[x + dx, y + dy]).unwrap();
        let d1 = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let d2 = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        let d11 = (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h);
        let d12 = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        prop_assert!((expr::partial(&jet, &[1, 0]).unwrap() - d1).abs() < 1e-6);
        prop_assert!((expr::partial(&jet, &[0, 1]).unwrap() - d2).abs() < 1e-6);
        prop_assert!((expr::partial(&jet, &[2, 0]).unwrap() - d11).abs() < 1e-4);
        prop_assert!((expr::partial(&jet, &[1, 1]).unwrap() - d12).abs() < 1e-4);
    }

    #[test]
    fn polynomial_chain_rule_is_exact(c0 in -2.0..2.0f64, c1 in -2.0..2.0f64, c2 in -2.0..2.0f64,
                                      x in -0.5..0.5f64, y in -0.5..0.5f64) {
        // f(t) = c0 + c1 t + c2 t^3 composed with g(u1,u2) = u1 u2 + u2^2:
        // substitution and jet-evaluation of the composite must agree with
        // evaluating f on the jet of g
        let g = expr::parse("u1*u2 + u2^2", 2, &BTreeMap::new()).unwrap();
        let f_of = |t: Expr| Expr::Add(
            Box::new(Expr::Num(c0)),
            Box::new(Expr::Add(
                Box::new(Expr::Mul(Box::new(Expr::Num(c1)), Box::new(t.clone()))),
                Box::new(Expr::Mul(Box::new(Expr::Num(c2)), Box::new(t.pow_int(3)))),
            )),
        );
        let composite = f_of(g.clone());
        let direct = composite.eval_jet(&[x, y], 4).unwrap();
        // Horner evaluation of f on the jet of g
        let gj = g.eval_jet(&[x, y], 4).unwrap();
        let space = gj.space().clone();
        let via_jets = caffine_core::expr::Jet::constant(space.clone(), c0)
            .add(&gj.scale(c1))
            .add(&gj.powi(3).scale(c2));
        for (a, b) in direct.coeffs().iter().zip(via_jets.coeffs()) {
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn clustering_is_idempotent_and_order_preserving(
        mut vals in proptest::collection::vec(-5.0..5.0f64, 1..12),
        tol in 1e-9..1e-3f64,
    ) {
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let groups = cluster_eigenvalues(&vals, tol);
        let flat: Vec<usize> = groups.iter().flatten().cloned().collect();
        prop_assert_eq!(flat, (0..vals.len()).collect::<Vec<_>>());
        // representatives re-cluster to singletons under the same tolerance
        // only when groups were separated; always at least order-preserving
        let reps: Vec<f64> = groups.iter().map(|g| vals[g[0]]).collect();
        let again = cluster_eigenvalues(&reps, tol);
        prop_assert!(again.len() <= groups.len());
    }
}

#[test]
fn epsilon_flip_coherence() {
    // the two sign choices of the frame split the index: N(h) + N(-h) = n
    let r2 = Expr::Sub(
        Box::new(Expr::Sub(
            Box::new(Expr::num(1.0)),
            Box::new(Expr::var(0).pow_int(2)),
        )),
        Box::new(Expr::var(1).pow_int(2)),
    );
    let sphere = ImmersionChart::new(
        "sphere",
        2,
        vec![Expr::var(0), Expr::var(1), Expr::sqrt(r2)],
        vec![(-0.35, 0.35), (-0.35, 0.35)],
    );
    let d = invariants_at(&sphere, &[0.2, -0.1]).unwrap();
    let n = d.h.dim();
    let flipped = d.h.scale(-1.0);
    assert_eq!(d.h.negative_index() + flipped.negative_index(), n);
}

#[test]
fn tchebychev_duality_random_vectors() {
    let chart = caffine_core::catalog::make_case_b(3).unwrap();
    let d = invariants_at(&chart, &[0.1, -0.2, 0.3]).unwrap();
    let mut seed = 5u64;
    for _ in 0..20 {
        let mut x = vec![0.0; 3];
        for v in x.iter_mut() {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        }
        let lhs = d.h.inner(&d.tcheb_vec, &x);
        let rhs: f64 = d.tcheb.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
