//! Randomized invariant checks for the library layers: iterated-log
//! comparison functions, potential algebra, tridiagonal assembly, the
//! certified eigensolver, and criterion certificates.

use brink_core::eigensolve::{attach_eigenvectors, bracket_certificate, count_below, lowest_eigs};
use brink_core::iterlog::{self, ComparisonOrder};
use brink_core::potentials::{alpha_coefficients, v_alpha_d, Potential};
use brink_core::radialgrid::{GridFunction, Placement, RadialGrid, TridiagOperator};
use brink_core::threshold::{criterion_check, Regime};
use brink_core::{BrinkError, ErrorClass};
use proptest::prelude::*;

/// Log-spaced point in (lo, hi] driven by a unit parameter.
fn log_point(lo: f64, hi: f64, t: f64) -> f64 {
    lo * (hi / lo).powf(t.clamp(1e-12, 1.0))
}

fn toy_operator(diag: Vec<f64>, offdiag: Vec<f64>) -> TridiagOperator {
    let n = diag.len();
    let grid = RadialGrid::make_grid(3, 0.0, n as f64 + 0.5, n, Placement::Uniform)
        .expect("toy grid dimensions are valid");
    TridiagOperator { diag, offdiag, grid }
}

proptest! {
    #[test]
    fn closed_and_recursive_partner_potentials_agree(
        m in 0u32..=3,
        d in 1u32..=6,
        t in 0.0f64..1.0,
    ) {
        let lo = (iterlog::tower(m).unwrap() * 1.01).max(1e-6);
        let r = log_point(lo, 1e6, t);
        let a = iterlog::w_m_closed(m, d, r).unwrap();
        let b = iterlog::w_m_recursive(m, d, r).unwrap();
        prop_assert!(
            (a - b).abs() <= 1e-11 * a.abs() + 1e-300,
            "m={m} d={d} r={r}: closed {a} vs recursive {b}"
        );
    }

    #[test]
    fn deepest_representable_order_still_matches_recursion(
        d in 1u32..=6,
        t in 0.0f64..1.0,
    ) {
        let lo = iterlog::tower(4).unwrap() * 1.01;
        let r = log_point(lo, 1e9, t);
        let a = iterlog::w_m_closed(4, d, r).unwrap();
        let b = iterlog::w_m_recursive(4, d, r).unwrap();
        prop_assert!((a - b).abs() <= 1e-11 * a.abs() + 1e-300);
    }

    #[test]
    fn zero_surplus_upper_family_collapses_onto_lower_bitwise(
        m in 0u32..=3,
        d in 1u32..=6,
        t in 0.0f64..1.0,
    ) {
        let lo = iterlog::tower(m).unwrap() + 0.05;
        let r = log_point(lo, 1e6, t);
        let flat = ComparisonOrder::new(m, 0.0).unwrap();
        let lower = ComparisonOrder::lower(m);
        let pu = iterlog::psi_upper(flat, d, r).unwrap();
        let pl = iterlog::psi_lower(lower, d, r).unwrap();
        prop_assert_eq!(pu.to_bits(), pl.to_bits(), "psi mismatch at m={} r={}", m, r);
        let yu = iterlog::y_m_eps(flat, d, r).unwrap();
        let wm = iterlog::w_m_closed(m, d, r).unwrap();
        prop_assert_eq!(yu.to_bits(), wm.to_bits(), "partner mismatch at m={} r={}", m, r);
    }

    #[test]
    fn borderline_tail_is_strictly_monotone_in_the_surplus(
        m in 0u32..=3,
        d in 1u32..=6,
        t in 0.0f64..1.0,
        eps_lo in 0.0f64..2.0,
        gap in 1e-6f64..2.0,
    ) {
        let lo = iterlog::tower(m).unwrap() * 1.05 + 0.1;
        let r = log_point(lo, 1e6, t);
        let small = ComparisonOrder::new(m, eps_lo).unwrap();
        let large = ComparisonOrder::new(m, eps_lo + gap).unwrap();
        let lo_v = iterlog::rhs_threshold(small, d, r).unwrap();
        let hi_v = iterlog::rhs_threshold(large, d, r).unwrap();
        prop_assert!(hi_v > lo_v, "m={m} d={d} r={r}: {hi_v} <= {lo_v}");
    }

    #[test]
    fn evaluation_at_or_below_the_tower_floor_is_a_domain_error(
        m in 1u32..=3,
        d in 1u32..=6,
        u in 1e-6f64..=1.0,
    ) {
        let floor = iterlog::tower(m).unwrap();
        let r = floor * u;
        let err = iterlog::w_m_closed(m, d, r).unwrap_err();
        prop_assert!(matches!(err, BrinkError::Domain { .. }), "got {err:?}");
        prop_assert_eq!(err.class(), ErrorClass::Validation);
        let err = iterlog::iter_log(m, r).unwrap_err();
        prop_assert!(matches!(err, BrinkError::Domain { .. }), "got {err:?}");
    }

    #[test]
    fn solvable_family_is_bounded_by_its_coefficients_and_decays(
        alpha in -3.0f64..3.0,
        d in 1u32..=5,
        t in 0.0f64..1.0,
    ) {
        let r = log_point(1e-3, 1e4, t);
        let (a, b) = alpha_coefficients(alpha, d);
        let v = v_alpha_d(alpha, d, r);
        let envelope = (a.abs() + b.abs()) / (1.0 + r * r);
        prop_assert!(v.abs() <= envelope * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn family_vanishes_identically_exactly_at_the_trivial_parameter(
        d in 1u32..=5,
        t in 0.0f64..1.0,
    ) {
        let r = log_point(1e-3, 1e4, t);
        let trivial = (2.0 - d as f64) / 2.0;
        prop_assert_eq!(v_alpha_d(trivial, d, r), 0.0);
        let shifted = trivial + 1e-3;
        let peak = [0.0, 0.5, r, 2.0 * r]
            .iter()
            .map(|&x| v_alpha_d(shifted, d, x).abs())
            .fold(0.0, f64::max);
        prop_assert!(peak > 0.0);
    }

    #[test]
    fn affine_evaluation_is_the_weighted_sum_of_the_terms(
        c1 in -5.0f64..5.0,
        c2 in -5.0f64..5.0,
        alpha in -2.0f64..2.0,
        depth in 0.1f64..4.0,
        r in 0.0f64..100.0,
    ) {
        let p1 = Potential::alpha_family(alpha, 3);
        let p2 = Potential::square_well(depth, 1.5);
        let combined = Potential::affine(vec![(c1, p1.clone()), (c2, p2.clone())]);
        let direct = combined.eval(r).unwrap();
        let mut expected = 0.0;
        expected += c1 * p1.eval(r).unwrap();
        expected += c2 * p2.eval(r).unwrap();
        prop_assert_eq!(direct.to_bits(), expected.to_bits());
    }

    #[test]
    fn assembled_operators_act_symmetrically(
        diag in prop::collection::vec(-5.0f64..5.0, 3..32),
        seed in prop::collection::vec(0.05f64..2.0, 31),
        xs in prop::collection::vec(-1.0f64..1.0, 31),
        ys in prop::collection::vec(-1.0f64..1.0, 31),
    ) {
        let n = diag.len();
        let offdiag = seed[..n - 1].to_vec();
        let t = toy_operator(diag, offdiag);
        let x = GridFunction { values: xs[..n].to_vec() };
        let y = GridFunction { values: ys[..n].to_vec() };
        let ax = t.apply(&x).unwrap();
        let ay = t.apply(&y).unwrap();
        let left: f64 = ax.values.iter().zip(&y.values).map(|(a, b)| a * b).sum();
        let right: f64 = x.values.iter().zip(&ay.values).map(|(a, b)| a * b).sum();
        let scale = t.norm_scale() * n as f64;
        prop_assert!((left - right).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn sturm_counts_are_monotone_in_the_shift(
        diag in prop::collection::vec(-5.0f64..5.0, 3..24),
        seed in prop::collection::vec(0.05f64..2.0, 23),
        e1 in -20.0f64..20.0,
        de in 0.0f64..10.0,
    ) {
        let n = diag.len();
        let t = toy_operator(diag, seed[..n - 1].to_vec());
        prop_assert!(count_below(&t, e1) <= count_below(&t, e1 + de));
        prop_assert_eq!(count_below(&t, -1e9), 0);
        prop_assert_eq!(count_below(&t, 1e9), n);
    }

    #[test]
    fn reported_eigenvalues_carry_valid_certificates_and_orthogonal_modes(
        diag in prop::collection::vec(-5.0f64..5.0, 4..12),
        seed in prop::collection::vec(0.1f64..2.0, 11),
    ) {
        let n = diag.len();
        let t = toy_operator(diag, seed[..n - 1].to_vec());
        let tol = 1e-10;
        let k = 3.min(n);
        let mut spectrum = lowest_eigs(&t, k, tol).unwrap();
        for w in spectrum.eigenvalues.windows(2) {
            prop_assert!(w[0] < w[1], "eigenvalues not strictly increasing: {w:?}");
        }
        for (j, (&lambda, &(lo, hi))) in
            spectrum.eigenvalues.iter().zip(&spectrum.brackets).enumerate()
        {
            prop_assert!(hi - lo <= tol * (1.0 + 1e-9));
            prop_assert!(lo <= lambda && lambda <= hi);
            prop_assert!(bracket_certificate(&t, j + 1, lambda, tol));
        }
        attach_eigenvectors(&t, &mut spectrum, tol).unwrap();
        let vectors = spectrum.eigenvectors.as_ref().unwrap();
        for i in 0..k {
            for j in i + 1..k {
                let dot: f64 = vectors[i]
                    .values
                    .iter()
                    .zip(&vectors[j].values)
                    .map(|(a, b)| a * b)
                    .sum();
                prop_assert!(dot.abs() <= 1e-8, "modes {i},{j} overlap {dot}");
            }
        }
    }

    #[test]
    fn certificates_reassert_their_inequalities_pointwise(
        alpha in -1.5f64..2.5,
        d_pick in 0usize..4,
    ) {
        let d = [1u32, 3, 4, 5][d_pick];
        let p = Potential::alpha_family(alpha, d);
        let window = (10.0, 1e3);
        let samples = 64usize;
        let cert = criterion_check(&p, d, 1, window, samples).unwrap();
        prop_assert!(cert.margin >= 0.0);
        let radii: Vec<f64> = (0..samples)
            .map(|k| log_point(window.0, window.1, k as f64 / (samples as f64 - 1.0)))
            .collect();
        match cert.regime {
            Regime::NonExistence { m } => {
                prop_assert!(m <= 1);
                for &r in &radii {
                    let rhs = iterlog::rhs_threshold(ComparisonOrder::lower(m), d, r).unwrap();
                    prop_assert!(
                        p.eval(r).unwrap() <= rhs + 1e-15 / (r * r),
                        "absence bound fails at r={r}"
                    );
                }
            }
            Regime::Existence { m, eps } => {
                prop_assert!(m <= 1);
                prop_assert!(eps > 0.0);
                let order = ComparisonOrder::new(m, eps).unwrap();
                for &r in &radii {
                    let rhs = iterlog::rhs_threshold(order, d, r).unwrap();
                    prop_assert!(
                        p.eval(r).unwrap() >= rhs - 1e-15 / (r * r),
                        "existence bound fails at r={r}"
                    );
                }
            }
            Regime::Inconclusive => prop_assert_eq!(cert.margin, 0.0),
        }
    }
}

#[test]
fn partner_potentials_dominate_the_borderline_tail_at_large_radius() {
    for m in 0..=2u32 {
        for d in [1u32, 3, 4, 5] {
            let lo: f64 = 1e3;
            for k in 0..2000 {
                let r = log_point(lo, 1e8, k as f64 / 1999.0);
                let w = iterlog::w_m_closed(m, d, r).unwrap();
                let v = iterlog::rhs_threshold(ComparisonOrder::lower(m), d, r).unwrap();
                assert!(
                    w >= v - 1e-18 / (r * r),
                    "m={m} d={d} r={r}: partner {w:e} below borderline {v:e}"
                );
            }
        }
    }
}
