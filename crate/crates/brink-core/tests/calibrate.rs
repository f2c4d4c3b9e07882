//! Diagnostic tables for tuning grid schedules and probe couplings. Every
//! test here is ignored by default and only prints; run with
//!
//!     cargo test -p brink-core --test calibrate -- --ignored --nocapture
//!
//! when revisiting a schedule, then freeze the chosen numbers into the
//! regular suites.

use std::time::Instant;

use brink_core::eigensolve::lowest_eigs;
use brink_core::iterlog::{self, ComparisonOrder};
use brink_core::potentials::{exact_zero_mode, zero_mode_decay_exponent, Potential, ThresholdKind};
use brink_core::quadrature::{self, QuadOptions};
use brink_core::radialgrid::{Placement, RadialGrid, ResidualOptions};
use brink_core::threshold::{
    classify_zero_mode, criterion_check, critical_coupling, criticality_sweep, gsr_identity_check,
    GridSchedule, PhiProfile, SweepOptions, SweepOutcome,
};

fn staggered(d: u32, r_max: f64, h: f64) -> RadialGrid {
    let n = (r_max / h - 0.5).round() as usize;
    RadialGrid::make_grid(d, 0.0, r_max, n, Placement::Uniform).unwrap()
}

fn ground(p: &Potential, d: u32, r_max: f64, h: f64) -> f64 {
    let t = staggered(d, r_max, h).assemble(p).unwrap();
    lowest_eigs(&t, 1, 1e-12).unwrap().eigenvalues[0]
}

fn print_outcome(label: &str, out: &SweepOutcome) {
    println!("== {label}");
    println!(
        "   status {:?}, floor {:.3e}, boxes {:?}",
        out.verdict.status, out.floor, out.grid_r_maxes
    );
    println!(
        "   {:>10} {:>13} {:>13} {:>13} {:>13} {:>9} {:>9} {:>6}",
        "lambda", "E0[0]", "E0[1]", "E0[2]", "E0(extrap)", "mass", "gamma", "bound"
    );
    for (row, probe) in out.e0_table.iter().zip(out.verdict.lambda_trace.iter()) {
        let mut cells = String::new();
        for e in row {
            cells.push_str(&format!(" {:>13.5e}", e));
        }
        println!(
            "   {:>10.4e}{cells} {:>13.5e} {:>9.4} {:>9.4} {:>6}",
            probe.lambda,
            probe.e0,
            probe.inner_mass,
            probe.gamma_eff,
            probe.e0 < -out.floor
        );
    }
    if let Some(fit) = &out.verdict.envelope_fit {
        println!("   envelope: {fit:?}");
    }
}

#[test]
#[ignore]
fn mesh_and_box_bias_for_the_zero_mode_energy() {
    let p = Potential::alpha_family(2.0, 3);
    println!("mesh bias at r_max = 40:");
    println!("{:>8} {:>14} {:>12}", "h", "E0", "E0/h^2");
    for &h in &[0.04, 0.02, 0.01, 0.005] {
        let e = ground(&p, 3, 40.0, h);
        println!("{:>8} {:>14.6e} {:>12.4}", h, e, e / (h * h));
    }

    println!("box truncation with the mesh error cancelled between h and h/2:");
    println!("{:>8} {:>14} {:>14} {:>14}", "r_max", "E0(2e-3)", "E0(1e-3)", "t(R)");
    let mut ts = Vec::new();
    for &r in &[25.0, 50.0, 100.0] {
        let start = Instant::now();
        let e2 = ground(&p, 3, r, 2e-3);
        let e1 = ground(&p, 3, r, 1e-3);
        let t = (4.0 * e1 - e2) / 3.0;
        ts.push((r, t));
        println!("{:>8} {:>14.6e} {:>14.6e} {:>14.6e}  ({:?})", r, e2, e1, t, start.elapsed());
    }
    for w in ts.windows(2) {
        let p_fit = (w[0].1 / w[1].1).ln() / 2f64.ln();
        println!("decay order between R={} and R={}: p = {:.3}", w[0].0, w[1].0, p_fit);
    }
}

#[test]
#[ignore]
fn sweep_tables_for_the_solvable_family() {
    let opts = SweepOptions::default();
    let w = Potential::default_bump();
    let cases: [(f64, Vec<f64>, f64, f64); 4] = [
        (-1.0, vec![0.4, 0.2, 0.1, 0.05, 0.025], 60.0, 0.02),
        (0.0, vec![12.0, 8.0, 6.0, 4.0], 200.0, 0.02),
        (1.0, vec![0.8, 0.4, 0.2, 0.1], 200.0, 0.01),
        (2.0, vec![0.4, 0.2, 0.1, 0.05, 0.025], 60.0, 0.02),
    ];
    for (alpha, lambdas, r_first, h) in cases {
        let v = Potential::alpha_family(alpha, 3);
        let schedule = GridSchedule::doubling(r_first, 3, h);
        let start = Instant::now();
        let out = criticality_sweep(&v, &w, 3, &lambdas, &schedule, &opts).unwrap();
        print_outcome(&format!("sweep alpha = {alpha} ({:?})", start.elapsed()), &out);
    }
}

#[test]
#[ignore]
fn classify_tables_for_the_solvable_family() {
    let opts = SweepOptions::default();
    let w = Potential::default_bump();
    let cases: [(f64, Vec<f64>, f64, f64); 3] = [
        (0.5, vec![0.64, 0.32, 0.16, 0.08], 400.0, 0.005),
        (1.0, vec![1.28e-2, 6.4e-3, 3.2e-3, 1.6e-3], 400.0, 0.005),
        (2.0, vec![1.76e-3, 8.8e-4, 4.4e-4, 2.2e-4], 400.0, 0.005),
    ];
    for (alpha, lambdas, r_first, h) in cases {
        let v = Potential::alpha_family(alpha, 3);
        let schedule = GridSchedule::doubling(r_first, 3, h);
        let start = Instant::now();
        let out = classify_zero_mode(&v, &w, 3, &lambdas, &schedule, 10.0, &opts).unwrap();
        print_outcome(
            &format!(
                "classify alpha = {alpha}, exact gamma {} ({:?})",
                zero_mode_decay_exponent(alpha, 3),
                start.elapsed()
            ),
            &out,
        );
    }
}

#[test]
#[ignore]
fn coupling_tables_for_square_wells() {
    let opts = SweepOptions::default();
    let pi = std::f64::consts::PI;
    // first zero of the order-zero Bessel function, squared
    let j01sq = 2.404825557695773_f64.powi(2);
    let cases = [
        (3u32, 1.0, (0.5, 6.0), 3000.0, pi * pi / 4.0),
        (3, 2.0, (0.1, 2.0), 3000.0, pi * pi / 16.0),
        (4, 1.0, (2.0, 12.0), 1500.0, j01sq),
        (4, 1.0, (2.0, 12.0), 3000.0, j01sq),
        (5, 1.0, (4.0, 16.0), 1500.0, pi * pi),
    ];
    for (d, radius, range, r_max, expect) in cases {
        let v = Potential::square_well(1.0, radius);
        let schedule = GridSchedule { r_maxes: vec![r_max], h: 0.01, r_min: None };
        let start = Instant::now();
        let out = critical_coupling(&v, d, range, &schedule, 1e-5, &opts).unwrap();
        println!(
            "d={d} radius={radius} R={r_max}: beta0 = {:.6} vs {:.6} (rel {:+.3e}), {} probes, {:?}",
            out.beta0,
            expect,
            out.beta0 / expect - 1.0,
            out.probes.len(),
            start.elapsed()
        );
    }
}

#[test]
#[ignore]
fn classify_tables_for_tuned_wells() {
    let opts = SweepOptions::default();
    let w = Potential::default_bump();
    let slow = vec![0.64, 0.32, 0.16, 0.08];
    let fast = vec![1.28e-2, 6.4e-3, 3.2e-3, 1.6e-3];
    let cases = [
        (3u32, 3000.0, (0.5, 6.0), slow, 400.0, 0.005),
        (4, 3000.0, (2.0, 12.0), fast.clone(), 400.0, 0.005),
        (5, 1500.0, (4.0, 16.0), fast, 300.0, 0.005),
    ];
    for (d, c_rmax, range, lambdas, r_first, h) in cases {
        let well = Potential::square_well(1.0, 1.0);
        let cs = GridSchedule { r_maxes: vec![c_rmax], h: 0.01, r_min: None };
        let coupling = critical_coupling(&well, d, range, &cs, 1e-5, &opts).unwrap();
        let tuned = Potential::affine(vec![(coupling.beta0, well)]);
        let schedule = GridSchedule::doubling(r_first, 3, h);
        let start = Instant::now();
        let out = classify_zero_mode(&tuned, &w, d, &lambdas, &schedule, 10.0, &opts).unwrap();
        print_outcome(
            &format!("tuned well d = {d}, beta0 = {:.6} ({:?})", coupling.beta0, start.elapsed()),
            &out,
        );
    }
}

#[test]
#[ignore]
fn residual_orders_for_exact_pairs() {
    println!("solvable family on [h, 50]:");
    for (alpha, d) in [(2.0, 3u32), (1.5, 5), (3.0, 1)] {
        let p = Potential::alpha_family(alpha, d);
        let mut prev = f64::NAN;
        for &h in &[4e-3_f64, 2e-3, 1e-3] {
            let n = ((50.0 - h) / h).round() as usize - 1;
            let g = RadialGrid::make_grid(d, h, 50.0, n, Placement::Uniform).unwrap();
            let t = g.assemble(&p).unwrap();
            let windowed = t
                .residual(
                    |r| Ok(exact_zero_mode(alpha, d, r)),
                    ResidualOptions { window: Some((0.5, 10.0)), ..Default::default() },
                )
                .unwrap();
            let full = t
                .residual(|r| Ok(exact_zero_mode(alpha, d, r)), ResidualOptions::default())
                .unwrap();
            println!(
                "  alpha={alpha} d={d} h={h:.0e}: windowed {windowed:.3e} (ratio {:.3}), all-interior {full:.3e}",
                prev / windowed
            );
            prev = windowed;
        }
    }

    println!("comparison families on [e_m + 1, 100]:");
    for m in 0..=2u32 {
        let r_min = iterlog::tower(m).unwrap() + 1.0;
        for d in [3u32, 4, 5] {
            for (which, eps_list) in
                [(ThresholdKind::Wm, vec![0.0]), (ThresholdKind::Ym, vec![0.5, 1.0])]
            {
                for eps in eps_list {
                    let order = if let ThresholdKind::Wm = which {
                        ComparisonOrder::lower(m)
                    } else {
                        ComparisonOrder::new(m, eps).unwrap()
                    };
                    let p = Potential::ThresholdFamily { order, which, dim: d };
                    let mut prev = f64::NAN;
                    for n in [2000usize, 4000] {
                        let g =
                            RadialGrid::make_grid(d, r_min, 100.0, n, Placement::Uniform).unwrap();
                        let t = g.assemble(&p).unwrap();
                        let res = t
                            .residual(
                                |r| match which {
                                    ThresholdKind::Wm => iterlog::psi_lower(order, d, r),
                                    _ => iterlog::psi_upper(order, d, r),
                                },
                                ResidualOptions {
                                    window: Some((r_min + 2.0, 90.0)),
                                    ..Default::default()
                                },
                            )
                            .unwrap();
                        println!(
                            "  {which:?} m={m} eps={eps} d={d} n={n}: residual {res:.3e} (ratio {:.3})",
                            prev / res
                        );
                        prev = res;
                    }
                }
            }
        }
    }

    println!("recursive vs closed form:");
    for m in 0..=2u32 {
        let lo = iterlog::tower(m).unwrap() + 1.0;
        for d in [3u32, 4, 5] {
            let mut worst = 0.0_f64;
            for k in 0..10_000 {
                let t = k as f64 / 9999.0;
                let r = lo * (1e8 / lo).powf(t);
                let a = iterlog::w_m_closed(m, d, r).unwrap();
                let b = iterlog::w_m_recursive(m, d, r).unwrap();
                let scale = a.abs().max(1e-300);
                worst = worst.max((a - b).abs() / scale);
            }
            println!("  m={m} d={d}: worst relative gap {worst:.3e}");
        }
    }
}

#[test]
#[ignore]
fn certificate_table_for_the_solvable_family() {
    let window = (10.0, 1e4);
    for d in [1u32, 3, 4, 5] {
        for alpha in [0.0_f64, 0.5, 1.0, 1.5, 2.0] {
            let p = Potential::alpha_family(alpha, d);
            let cert = criterion_check(&p, d, 1, window, 400).unwrap();
            println!(
                "alpha={alpha} d={d}: {:?} margin {:.3e} (eps band top {:.2})",
                cert.regime,
                cert.margin,
                alpha * alpha - 1.0
            );
        }
    }
}

#[test]
#[ignore]
fn quadratic_form_and_line_integral_values() {
    for (alpha, d, width) in [(2.0, 3u32, 1.0), (1.5, 5, 2.0), (3.0, 1, 1.5)] {
        let rep = gsr_identity_check(alpha, d, &PhiProfile::Gaussian { width }, 1e-10).unwrap();
        println!(
            "alpha={alpha} d={d}: relative discrepancy {:.3e} holds {}",
            rep.relative_discrepancy, rep.holds
        );
    }
    for alpha in [0.5_f64, 1.5, 2.0] {
        let p = Potential::alpha_family(alpha, 1);
        let got = 2.0
            * quadrature::integrate_to_infinity(|r| p.eval(r), 0.0, QuadOptions::default())
                .unwrap()
                .value;
        let want = std::f64::consts::FRAC_PI_2 * (alpha - 0.5) * (alpha - 0.5);
        println!("alpha={alpha}: line integral {got:.9} vs {want:.9} (diff {:+.3e})", got - want);
    }
}
