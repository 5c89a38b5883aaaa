//! Cross-module integration tests: chart pipelines, operator identities on
//! model data, synthetic block structures, and frozen oracle values.

use caffine_core::calabi::{self, CalabiFactor, CalabiSpec};
use caffine_core::catalog::*;
use caffine_core::classify::{self, synthetic, ClassifyConfig, Label, RawCase};
use caffine_core::geometry::*;
use caffine_core::linalg::{dot, norm, MixedTensor12, SymMatrix};

fn cfg() -> ClassifyConfig {
    ClassifyConfig::default()
}

#[test]
fn tchebychev_of_flat_block_chart() {
    // trace of the light-like spectrum (2, 1, ..., 1) divided by n
    for n in [2usize, 3] {
        let chart = make_case_b(n).unwrap();
        let d = invariants_at(&chart, &vec![0.1; n]).unwrap();
        // the first coordinate direction is metric-unit here
        let expect = (n as f64 + 1.0) / n as f64;
        assert!(
            (d.tcheb[0] - expect).abs() < 1e-10,
            "tcheb {:?} expect {expect}",
            d.tcheb
        );
    }
}

#[test]
fn case_b_equals_log_canonical_invariants() {
    // the normalized flat chart and the graph form describe the same
    // hypersurface up to a linear map: frame-invariant data must match
    let a = make_case_b(2).unwrap();
    let b = make_log_canonical(2, 3, &[]).unwrap();
    let cfg = cfg();
    let ra = classify::classify_point(&a, &[0.12, -0.2], &cfg).unwrap();
    let rb = classify::classify_point(&b, &[0.12, -0.2], &cfg).unwrap();
    assert_eq!(ra.label, Label::CaseB);
    assert_eq!(rb.label, Label::CaseB);
    assert!((ra.lambda1.unwrap() - rb.lambda1.unwrap()).abs() < 1e-8);
    assert_eq!(ra.epsilon, rb.epsilon);
    let da = invariants_at(&a, &[0.12, -0.2]).unwrap();
    let db = invariants_at(&b, &[0.12, -0.2]).unwrap();
    assert!((da.c_norm() - db.c_norm()).abs() < 1e-8);
}

#[test]
fn branch_polynomial_on_models() {
    // every secondary eigenvalue satisfies (λ₁-2λᵢ)(ε-λ₁λᵢ+λᵢ²) = 0
    for (chart, pt) in [
        (make_det_sym(3).unwrap(), vec![0.02, -0.01, 0.03, 0.01, -0.02]),
        (make_case_b(3).unwrap(), vec![0.1, 0.2, -0.1]),
        (make_power(&[1.0, 1.0, 1.0]).unwrap(), vec![0.05, -0.04]),
    ] {
        let d = invariants_at(&chart, &pt).unwrap();
        let (e1, l1) = classify::maximize_cubic(&d.h, &d.k, 32, 0).unwrap();
        let (spec, _) = classify::spectrum_split(&d.h, &d.k, &e1, d.epsilon, 1e-6).unwrap();
        let eps = d.epsilon as f64;
        for &li in &spec.secondary {
            let poly = (l1 - 2.0 * li) * (eps - l1 * li + li * li);
            assert!(
                poly.abs() < 1e-7 * (1.0 + l1.powi(3)),
                "branch polynomial {poly:.3e} for eigenvalue {li}"
            );
        }
    }
}

#[test]
fn isotropy_linearization_on_hermitian_model() {
    // full four-vector polarization of the isotropy identity
    let chart = make_det_herm(3).unwrap();
    let d = invariants_at(&chart, &vec![0.0; 8]).unwrap();
    let data = classify::typical_data(&d.h, &d.k, d.epsilon, &cfg())
        .unwrap()
        .unwrap();
    let table = data.table.as_ref().unwrap();
    let d2 = table.d2_dim();
    assert_eq!(d2, 4);
    let sigma = table.sigma;
    // seeded pseudo-random four-tuples
    let mut seed = 42u64;
    let mut rand_unit = |d: usize| -> Vec<f64> {
        let mut v = vec![0.0; d];
        for x in v.iter_mut() {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *x = ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        }
        let n = norm(&v);
        v.iter().map(|x| x / n).collect()
    };
    for _ in 0..20 {
        let v1 = rand_unit(d2);
        let v2 = rand_unit(d2);
        let v3 = rand_unit(d2);
        let v4 = rand_unit(d2);
        let lhs = dot(&table.l_of(&v1, &v2), &table.l_of(&v3, &v4))
            + dot(&table.l_of(&v1, &v3), &table.l_of(&v2, &v4))
            + dot(&table.l_of(&v1, &v4), &table.l_of(&v2, &v3));
        let rhs = sigma
            * (dot(&v1, &v2) * dot(&v3, &v4)
                + dot(&v1, &v3) * dot(&v2, &v4)
                + dot(&v1, &v4) * dot(&v2, &v3));
        assert!((lhs - rhs).abs() < 1e-6, "linearized isotropy {:.3e}", lhs - rhs);
    }
}

#[test]
fn null_block_members_annihilate() {
    // a vector of the null block pairs to zero with the representative
    let chart = make_det_herm(3).unwrap();
    let d = invariants_at(&chart, &vec![0.0; 8]).unwrap();
    let data = classify::typical_data(&d.h, &d.k, d.epsilon, &cfg())
        .unwrap()
        .unwrap();
    let table = data.table.as_ref().unwrap();
    let dec = data.dec.as_ref().unwrap();
    assert_eq!(dec.k0, 2);
    assert_eq!(dec.p, 1);
    for b in &dec.blocks {
        for z in &b.zero_basis {
            let l = table.l_of(&b.rep, z);
            assert!(norm(&l) < 1e-7, "null-block value {:.3e}", norm(&l));
        }
    }
}

#[test]
fn composition_preserves_parallelism() {
    // flat factor times hyperbolic quadric, positive weight
    let left = make_power(&[1.0, 1.0, 1.0]).unwrap();
    let right = make_quadric(1, -1).unwrap();
    assert!(verify_parallel(&left, &GridSpec::new(4), 1e-8).unwrap().pass);
    assert!(verify_parallel(&right, &GridSpec::new(7), 1e-8).unwrap().pass);
    let spec = CalabiSpec::new(2.0, left, CalabiFactor::Chart(right));
    let prod = calabi::compose(&spec).unwrap();
    assert_eq!(prod.n, 4);
    let rep = verify_parallel(&prod, &GridSpec::new(3), 1e-7).unwrap();
    assert!(rep.pass, "composed residual {:.3e}", rep.max_residual);
}

#[test]
fn composed_product_classifies_as_product() {
    // product with a point at the critical-plus-one dimension
    let spec = CalabiSpec::new(
        2.0,
        make_power(&[1.0, 1.0, 1.0]).unwrap(),
        CalabiFactor::Point(vec![1.0]),
    );
    let prod = calabi::compose(&spec).unwrap();
    let rep = classify::classify_point(&prod, &[0.1, 0.05, -0.08], &cfg()).unwrap();
    assert!(
        matches!(rep.label, Label::CalabiPointFactor | Label::CalabiTwoFactor),
        "label {}",
        rep.label
    );
}

#[test]
fn synthetic_spectrum_branches() {
    // branch assignment across block shapes and weights
    for (p, k0, l1, eps) in [
        (0usize, 2usize, 3.0f64, 1i8),
        (1, 2, 3.0, 1),
        (3, 2, 1.2, -1),
        (7, 2, synthetic::critical_lambda1(2), -1),
        (3, 3, 1.3, -1),
    ] {
        let s = synthetic::synthesize(&synthetic::SyntheticSpec {
            lambda1: l1,
            eps,
            k0,
            p,
            extra_mu: 1,
        })
        .unwrap();
        let (spec, raw) =
            classify::spectrum_split(&s.h, &s.k, &s.e1, eps, 1e-6).unwrap();
        let m = (1 + p) * k0 + 1;
        assert_eq!(raw, RawCase::Cm(m), "p={p} k0={k0}");
        assert_eq!(spec.d2_basis.len(), m - 1);
        assert!((spec.lambda1 - l1).abs() < 1e-12);
    }
}

#[test]
fn synthetic_rho_agreement() {
    // the direct trace norm matches both closed forms
    for (p, k0, l1, eps) in [
        (0usize, 2usize, 3.0f64, 1i8),
        (0, 4, 1.5, -1),
        (1, 2, 3.0, 1),
        (1, 3, 2.5, 1),
        (3, 2, 1.2, -1),
        (3, 2, synthetic::critical_lambda1(2), -1),
        (7, 2, 1.4, -1),
        (7, 2, synthetic::critical_lambda1(2), -1),
    ] {
        let s = synthetic::synthesize(&synthetic::SyntheticSpec {
            lambda1: l1,
            eps,
            k0,
            p,
            extra_mu: 0,
        })
        .unwrap();
        let (spec, _) = classify::spectrum_split(&s.h, &s.k, &s.e1, eps, 1e-6).unwrap();
        let dec = classify::decompose_d2(&s.table, 1e-6).unwrap();
        assert_eq!(dec.k0, k0);
        assert_eq!(dec.p, p);
        let rc = classify::trace_rho_check(&dec, &spec);
        let d = (rc.rho_direct.powi(2) - rc.rho_formula.powi(2)).abs();
        let dm = (rc.rho_formula_m.powi(2) - rc.rho_formula.powi(2)).abs();
        assert!(d < 1e-8, "direct vs closed form gap {d:.3e} (p={p}, k0={k0})");
        assert!(dm < 1e-8, "closed-form cross gap {dm:.3e}");
        assert!(rc.agree);
    }
}

#[test]
fn synthetic_build_l_round_trip() {
    // the table rebuilt from the assembled difference tensor matches
    for (p, k0, l1, eps) in [(1usize, 2usize, 3.0f64, 1i8), (3, 2, 1.2, -1)] {
        let s = synthetic::synthesize(&synthetic::SyntheticSpec {
            lambda1: l1,
            eps,
            k0,
            p,
            extra_mu: 0,
        })
        .unwrap();
        let (spec, _) = classify::spectrum_split(&s.h, &s.k, &s.e1, eps, 1e-6).unwrap();
        let table = classify::build_l(&s.h, &s.k, &spec).unwrap();
        assert!(table.isotropy_residual < 1e-9);
        assert!(table.membership_residual < 1e-9);
        let dec = classify::decompose_d2(&table, 1e-6).unwrap();
        assert_eq!((dec.k0, dec.p), (k0, p));
    }
}

#[test]
fn synthetic_full_classification() {
    // end-to-end labels from raw tensors at the critical dimensions
    let cases: [(usize, Label); 3] = [
        (1, Label::SlC(3)),
        (3, Label::SuStar(6)),
        (7, Label::E6F4),
    ];
    for (p, expect) in cases {
        let s = synthetic::synthesize(&synthetic::SyntheticSpec {
            lambda1: synthetic::critical_lambda1(2),
            eps: -1,
            k0: 2,
            p,
            extra_mu: 0,
        })
        .unwrap();
        let rep = classify::classify_tensors(&s.h, &s.k, -1, &cfg()).unwrap();
        assert_eq!(rep.label, expect, "p = {p}: got {}", rep.label);
        assert!(rep.trace_l_norm.unwrap() < 1e-6);
    }
}

#[test]
fn synthetic_noncritical_labels() {
    // away from the critical dimension the trace is nonzero and the label is
    // a product; exactly one extra small-branch direction means point factor
    let s = synthetic::synthesize(&synthetic::SyntheticSpec {
        lambda1: 3.0,
        eps: 1,
        k0: 2,
        p: 0,
        extra_mu: 0,
    })
    .unwrap();
    // p=0, k0=2: m=3, critical n = 5; image of L has an extra trace line: n = 6
    assert_eq!(s.n, 6);
    let rep = classify::classify_tensors(&s.h, &s.k, 1, &cfg()).unwrap();
    assert_eq!(rep.label, Label::CalabiPointFactor, "{rep:?}");
    assert!(rep.evidence.contains_key("sigma1"));
    assert!(rep.evidence.contains_key("sigma2"));

    let s = synthetic::synthesize(&synthetic::SyntheticSpec {
        lambda1: 3.0,
        eps: 1,
        k0: 2,
        p: 0,
        extra_mu: 2,
    })
    .unwrap();
    assert_eq!(s.n, 8);
    let rep = classify::classify_tensors(&s.h, &s.k, 1, &cfg()).unwrap();
    assert_eq!(rep.label, Label::CalabiTwoFactor, "{rep:?}");
    assert!(rep.evidence.contains_key("sigma3"));
}

#[test]
fn frozen_values_spectrum_and_trace() {
    // small-branch value for λ₁ = 3, ε = 1
    let mu = 0.3819660112501051f64;
    assert!(((3.0 - 5.0f64.sqrt()) / 2.0 - mu).abs() < 1e-15);
    // closed-form squared trace for p = 0, k₀ = 2, λ₁ = 3, ε = 1:
    // (9 sqrt(5) - 5)/4
    let s = synthetic::synthesize(&synthetic::SyntheticSpec {
        lambda1: 3.0,
        eps: 1,
        k0: 2,
        p: 0,
        extra_mu: 0,
    })
    .unwrap();
    let (spec, _) = classify::spectrum_split(&s.h, &s.k, &s.e1, 1, 1e-6).unwrap();
    let dec = classify::decompose_d2(&s.table, 1e-6).unwrap();
    let rc = classify::trace_rho_check(&dec, &spec);
    let frozen = 3.7811529493745268f64;
    assert!(
        (rc.rho_direct.powi(2) - frozen).abs() < 1e-12,
        "rho^2 = {:.16}",
        rc.rho_direct.powi(2)
    );
    // vanishing trace at 2λ₁² = 1 with the hyperbolic sign
    let s = synthetic::synthesize(&synthetic::SyntheticSpec {
        lambda1: std::f64::consts::FRAC_1_SQRT_2,
        eps: -1,
        k0: 2,
        p: 7,
        extra_mu: 0,
    })
    .unwrap();
    let dec = classify::decompose_d2(&s.table, 1e-6).unwrap();
    assert!(dec.rho < 1e-12);
}

#[test]
fn maximizer_dominates_seeded_directions() {
    // the returned top value beats the frame function at seeded directions
    let chart = make_det_sym(3).unwrap();
    let d = invariants_at(&chart, &vec![0.0; 5]).unwrap();
    let (_, l1) = classify::maximize_cubic(&d.h, &d.k, 32, 0).unwrap();
    let mut seed = 7u64;
    for _ in 0..1000 {
        let mut v = vec![0.0; 5];
        for x in v.iter_mut() {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *x = ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        }
        let hn = d.h.inner(&v, &v).sqrt();
        let v: Vec<f64> = v.iter().map(|x| x / hn).collect();
        let f = d.h.inner(&d.k.apply(&v, &v), &v);
        assert!(f <= l1 + 1e-9, "seeded direction beats the maximizer: {f} > {l1}");
    }
}

#[test]
fn unrecognized_for_half_branch_spectrum() {
    // an all-half-branch separated spectrum cannot belong to a parallel
    // cubic form; the classifier reports it instead of failing
    let n = 3;
    let mut k = MixedTensor12::zeros(n);
    k.set(0, 0, 0, 3.0);
    for i in 1..n {
        k.set(i, 0, i, 1.5);
        k.set(0, i, i, 1.5);
    }
    let rep = classify::classify_tensors(&SymMatrix::identity(n), &k, 1, &cfg()).unwrap();
    assert_eq!(rep.label, Label::Unrecognized);
    assert_eq!(rep.case.as_deref(), Some("Cn"));
    assert!(rep.diagnostic.unwrap().contains("cannot occur"));
}

#[test]
fn perturbed_chart_rejected_by_parallel_precheck() {
    // a bumped sphere is not parallel; classify_point reports it
    let mut chart = make_quadric(2, 1).unwrap();
    let bump = caffine_core::expr::parse(
        "0.05*u1^3",
        2,
        &std::collections::BTreeMap::new(),
    )
    .unwrap();
    let last = chart.components.pop().unwrap();
    chart
        .components
        .push(caffine_core::expr::Expr::Add(Box::new(last), Box::new(bump)));
    let rep = classify::classify_point(&chart, &[0.1, 0.1], &cfg()).unwrap();
    assert_eq!(rep.label, Label::Unrecognized);
    assert!(rep.residuals["parallel_point"] > 1e-3);
}

#[test]
fn finite_difference_oracle_for_metric_connection_cubic() {
    // independent check of the jet pipeline: the metric from the value-level
    // frame solve at shifted points, differentiated by central differences,
    // must reproduce the Levi-Civita symbols and the cubic form
    let charts = [
        make_quadric(2, -1).unwrap(),
        make_power(&[1.0, 2.0, 1.5]).unwrap(),
        make_case_b(2).unwrap(),
        make_surface6('a', 1.5, -0.5, 0.0).unwrap(),
    ];
    let h_step = 1e-5;
    for chart in &charts {
        let n = chart.n;
        let p = vec![0.05; n];
        let d = invariants_at(chart, &p).unwrap();
        let h_at = |q: &[f64]| centroaffine_frame(chart, q).unwrap().h;
        // FD derivatives of the metric
        let mut dh = vec![vec![vec![0.0; n]; n]; n]; // dh[l][i][j] = ∂_l h_ij
        for l in 0..n {
            let mut qp = p.clone();
            let mut qm = p.clone();
            qp[l] += h_step;
            qm[l] -= h_step;
            let hp = h_at(&qp);
            let hm = h_at(&qm);
            for i in 0..n {
                for j in 0..n {
                    dh[l][i][j] = (hp.get(i, j) - hm.get(i, j)) / (2.0 * h_step);
                }
            }
        }
        let hinv = d.h.inverse().unwrap();
        let mut worst_lc = 0.0f64;
        let mut worst_c = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut gamma_fd = 0.0;
                    for l in 0..n {
                        gamma_fd +=
                            0.5 * hinv[k][l] * (dh[i][j][l] + dh[j][i][l] - dh[l][i][j]);
                    }
                    worst_lc = worst_lc.max((gamma_fd - d.gamma_lc[i][j][k]).abs());
                    let mut c_fd = dh[i][j][k];
                    for m in 0..n {
                        c_fd -= d.gamma_induced[i][j][m] * d.h.get(m, k);
                        c_fd -= d.gamma_induced[i][k][m] * d.h.get(j, m);
                    }
                    worst_c = worst_c.max((c_fd - d.c.get(i, j, k)).abs());
                }
            }
        }
        assert!(
            worst_lc < 1e-5 && worst_c < 1e-5,
            "{}: FD oracle defects {worst_lc:.2e} / {worst_c:.2e}",
            chart.name
        );
    }
}

#[test]
fn cubic_form_cross_check_is_tight() {
    // the two independent cubic-form computations agree to rounding level
    for (chart, _) in [
        (make_quadric(2, 1).unwrap(), 0),
        (make_det_sym(3).unwrap(), 0),
        (make_case_b(3).unwrap(), 0),
    ] {
        let p = chart.center();
        let d = invariants_at(&chart, &p).unwrap();
        assert!(
            d.cross_check_residual < 1e-10,
            "{}: cross-check {:.2e}",
            chart.name,
            d.cross_check_residual
        );
    }
}

#[test]
fn catalog_golden_labels() {
    // every seeded catalog entry classifies to its published label
    let mu5 = (3.0 - 5.0f64.sqrt()) / 2.0;
    let cases: Vec<(ImmersionChart, Label)> = vec![
        (make_quadric(2, 1).unwrap(), Label::Quadric),
        (make_quadric(3, -1).unwrap(), Label::Quadric),
        (make_power(&[1.0, 1.0, 1.0]).unwrap(), Label::CalabiPointFactor),
        (make_power(&[2.0, 1.0, 0.5]).unwrap(), Label::CalabiPointFactor),
        (
            make_complex_power(2, &[-1.0, 1.0, 0.3]).unwrap(),
            Label::CalabiPointFactor,
        ),
        (
            make_log_canonical(2, 2, &[0.5]).unwrap(),
            Label::CalabiPointFactor,
        ),
        (make_log_canonical(3, 4, &[]).unwrap(), Label::CaseB),
        (make_case_b(2).unwrap(), Label::CaseB),
        (
            make_surface6('b', 3.0, mu5, 1.0).unwrap(),
            Label::CalabiPointFactor,
        ),
        (make_det_sym(3).unwrap(), Label::SlR(3)),
        (make_det_herm(3).unwrap(), Label::SlC(3)),
    ];
    for (chart, expect) in cases {
        let p: Vec<f64> = chart.domain.iter().map(|(a, b)| 0.45 * a + 0.55 * b).collect();
        let rep = classify::classify_point(&chart, &p, &cfg()).unwrap();
        assert_eq!(rep.label, expect, "{}: got {}", chart.name, rep.label);
    }
}

#[test]
fn classification_is_stable_across_the_chart() {
    // the spectral data is parallel, so the label must not depend on the point
    let chart = make_det_sym(3).unwrap();
    for p in [
        vec![0.12, -0.05, 0.08, 0.2, -0.11],
        vec![-0.2, 0.15, -0.1, -0.15, 0.05],
        vec![0.25, 0.2, 0.15, 0.1, 0.22],
    ] {
        let rep = classify::classify_point(&chart, &p, &cfg()).unwrap();
        assert_eq!(rep.label, Label::SlR(3), "at {p:?}: {rep:?}");
        assert!((rep.lambda1.unwrap() - 0.7071067811865476).abs() < 1e-8);
        assert!(rep.trace_l_norm.unwrap() < 1e-6);
    }
}

#[test]
fn generic_symmetric_model_dimension() {
    // the m = 4 chart: n = 9, three blocks, top eigenvalue 2/sqrt(3)
    let chart = make_det_sym(4).unwrap();
    assert_eq!(chart.n, 9);
    let rep = classify::classify_point(&chart, &[0.0; 9], &cfg()).unwrap();
    assert_eq!(rep.label, Label::SlR(4), "{rep:?}");
    assert_eq!(rep.k0, Some(3));
    assert_eq!(rep.p, Some(0));
    assert!((rep.lambda1.unwrap() - 2.0 / 3.0f64.sqrt()).abs() < 1e-8);
    assert!(rep.trace_l_norm.unwrap() < 1e-6);
}

#[test]
fn coincident_factor_eigenvalues_rejected() {
    // a structure whose two factor eigenvalues coincide cannot be split
    let chart = calabi::compose(&CalabiSpec::new(
        1.0,
        make_quadric(1, -1).unwrap(),
        CalabiFactor::Chart(make_quadric(1, -1).unwrap()),
    ))
    .unwrap();
    let s = calabi::detect_at(&chart, &[0.0; 3], 1e-8).unwrap().unwrap();
    let mut broken = s.clone();
    broken.lambda3 = Some(broken.lambda2);
    let err = calabi::decompose_pointwise(&chart, &[0.0; 3], &broken).unwrap_err();
    assert!(matches!(err, calabi::CalabiError::StructureInvalid(_)));
}

#[test]
fn non_convex_point_reported_not_classified() {
    // two elliptic curves with positive weight: the product metric is
    // indefinite, and the classifier says so instead of guessing
    let chart = calabi::compose(&CalabiSpec::new(
        1.0,
        make_quadric(1, 1).unwrap(),
        CalabiFactor::Chart(make_quadric(1, 1).unwrap()),
    ))
    .unwrap();
    let rep = classify::classify_point(&chart, &[0.1, 0.0, 0.1], &cfg()).unwrap();
    assert_eq!(rep.label, Label::Unrecognized);
    assert!(rep.diagnostic.unwrap().contains("not definite"));
}

#[test]
fn power_hypersurface_in_higher_dimension() {
    // a four-factor flat hypersurface is a (nested) product; the pipeline
    // must land on one of the product labels with consistent evidence
    let chart = make_power(&[1.0, 1.0, 1.0, 1.0]).unwrap();
    assert!(verify_parallel(&chart, &GridSpec::new(4), 1e-8).unwrap().pass);
    let rep = classify::classify_point(&chart, &[0.04, -0.02, 0.06], &cfg()).unwrap();
    assert!(
        matches!(rep.label, Label::CalabiPointFactor | Label::CalabiTwoFactor),
        "{rep:?}"
    );
}

#[test]
fn generic_hermitian_model_dimension() {
    // the k = 4 chart: n = 15, three blocks of null dimension one
    let chart = make_det_herm(4).unwrap();
    assert_eq!(chart.n, 15);
    let rep = classify::classify_point(&chart, &[0.0; 15], &cfg()).unwrap();
    assert_eq!(rep.label, Label::SlC(4), "{rep:?}");
    assert_eq!(rep.k0, Some(3));
    assert_eq!(rep.p, Some(1));
    assert!((rep.lambda1.unwrap() - 2.0 / 3.0f64.sqrt()).abs() < 1e-8);
}

#[test]
fn p_operator_dual_routes_agree() {
    // the operator is defined by a contraction of the difference tensor and
    // computed through the polarized inner products; both routes must match
    let chart = make_det_herm(3).unwrap();
    let d = invariants_at(&chart, &vec![0.0; 8]).unwrap();
    let data = classify::typical_data(&d.h, &d.k, d.epsilon, &cfg())
        .unwrap()
        .unwrap();
    let table = data.table.as_ref().unwrap();
    let d2 = table.d2_dim();
    let to_coords = |v: &[f64]| -> Vec<f64> {
        let dim = d.h.dim();
        let mut out = vec![0.0; dim];
        for (c, b) in v.iter().zip(&table.d2) {
            for i in 0..dim {
                out[i] += c * b[i];
            }
        }
        out
    };
    for a in 0..d2 {
        let mut v = vec![0.0; d2];
        v[a] = 1.0;
        let p_gram = classify::p_operator(table, &v);
        let v_coords = to_coords(&v);
        for b in 0..d2 {
            let mut w = vec![0.0; d2];
            w[b] = 1.0;
            // direct route: K_v applied to the ambient value of L(v, w)
            let l_coeffs = table.l_of(&v, &w);
            let mut l_coords = vec![0.0; d.h.dim()];
            for (c, wb) in l_coeffs.iter().zip(&table.d3) {
                for i in 0..d.h.dim() {
                    l_coords[i] += c * wb[i];
                }
            }
            let kv = d.k.apply(&v_coords, &l_coords);
            for c in 0..d2 {
                let direct = d.h.inner(&kv, &to_coords(&{
                    let mut e = vec![0.0; d2];
                    e[c] = 1.0;
                    e
                }));
                assert!(
                    (direct - p_gram.get(b, c)).abs() < 1e-9,
                    "operator routes disagree by {:.3e}",
                    (direct - p_gram.get(b, c)).abs()
                );
            }
        }
    }
}

#[test]
fn degenerate_metric_detected() {
    // a parabolic graph: the second fundamental data is rank one, so the
    // centroaffine metric is singular
    use caffine_core::expr::Expr;
    let chart = ImmersionChart::new(
        "parabolic",
        2,
        vec![
            Expr::var(0),
            Expr::var(1),
            Expr::var(0).pow_int(2),
        ],
        vec![(0.5, 1.5), (0.5, 1.5)],
    );
    let err = invariants_at(&chart, &[1.0, 1.0]).unwrap_err();
    assert!(
        matches!(err, caffine_core::geometry::GeometryError::DegenerateMetric(_)),
        "{err:?}"
    );
}

#[test]
fn single_block_structures_allow_any_null_dimension() {
    // with one block the forbidden-dimension gate must not fire, the trace
    // never vanishes, and the distinguished eigenvalues obey the separation
    // relations
    for (p, extra, expect_two) in [(0usize, 0usize, false), (2, 0, false), (3, 2, true)] {
        let s = synthetic::synthesize(&synthetic::SyntheticSpec {
            lambda1: 3.0,
            eps: 1,
            k0: 1,
            p,
            extra_mu: extra,
        })
        .unwrap();
        let dec = classify::decompose_d2(&s.table, 1e-6).unwrap();
        assert_eq!(dec.k0, 1);
        assert_eq!(dec.p, p);
        assert!(dec.trace_norm() > 0.1);
        let rep = classify::classify_tensors(&s.h, &s.k, 1, &cfg()).unwrap();
        let expect = if expect_two {
            Label::CalabiTwoFactor
        } else {
            Label::CalabiPointFactor
        };
        assert_eq!(rep.label, expect, "p={p} extra={extra}: {rep:?}");
        // separation of the distinguished eigenvalues
        let s1 = rep.evidence["sigma1"];
        let s2 = rep.evidence["sigma2"];
        assert!((s1 - 2.0 * s2).abs() > 1e-6, "sigma separation");
        if expect_two {
            let s3 = rep.evidence["sigma3"];
            assert!((s1 - 2.0 * s3).abs() > 1e-6);
            assert!((s2 - s3).abs() > 1e-6);
        }
    }
}

#[test]
fn model_times_point_is_a_point_product() {
    // the real-symmetric model composed with a point sits one dimension
    // above the critical one and must classify as a product with a point;
    // the detector finds the distinguished direction through the trace route
    let spec = CalabiSpec::new(
        2.0,
        make_det_sym(3).unwrap(),
        CalabiFactor::Point(vec![1.0]),
    );
    let prod = calabi::compose(&spec).unwrap();
    assert_eq!(prod.n, 6);
    let point = vec![0.05, 0.0, 0.0, 0.0, 0.0, 0.0];
    let rep = classify::classify_point(&prod, &point, &cfg()).unwrap();
    assert_eq!(rep.label, Label::CalabiPointFactor, "{rep:?}");
    assert_eq!(rep.case.as_deref(), Some("Cm(3)"));
    assert_eq!(rep.k0, Some(2));
    assert!(rep.trace_l_norm.unwrap() > 1e-3);

    let s = calabi::detect_at(&prod, &point, 1e-8).unwrap().expect("structure");
    assert_eq!(s.kind, calabi::StructureKind::PointFactor);
    // hyperbolic orientation: the point-factor relation with sign -sgn(lambda)
    let rel = (s.lambda1 * s.lambda2 - s.lambda2 * s.lambda2 + 1.0).abs();
    assert!(rel < 1e-8, "relation defect {rel:.3e}");
    // the split second factor is a constant direction
    let (_, psi2a) = calabi::decompose_pointwise(&prod, &point, &s).unwrap();
    let (_, psi2b) =
        calabi::decompose_pointwise(&prod, &[0.2, 0.1, -0.05, 0.08, 0.12, -0.1], &s).unwrap();
    let dist: f64 = psi2a
        .iter()
        .zip(&psi2b)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(dist < 1e-7, "second factor moved by {dist:.3e}");
}

#[test]
fn five_by_five_symmetric_model() {
    // m = 5: fourteen-dimensional, four blocks, top eigenvalue 3/2
    let chart = make_det_sym(5).unwrap();
    assert_eq!(chart.n, 14);
    let rep = classify::classify_point(&chart, &[0.0; 14], &cfg()).unwrap();
    assert_eq!(rep.label, Label::SlR(5), "{rep:?}");
    assert_eq!(rep.k0, Some(4));
    assert_eq!(rep.p, Some(0));
    assert!((rep.lambda1.unwrap() - 1.5).abs() < 1e-8);
}
