use super::*;
use crate::dtn::BoundaryLaw;
use crate::elliptic::BulkConfig;
use crate::Spd2;
use std::f64::consts::PI;

fn one_phase(ny: usize) -> HeleShawOperator {
    let mut bulk = BulkConfig::new(ny);
    bulk.solver.tol = 1e-12;
    HeleShawOperator::new(BoundaryLaw::one_phase(), bulk)
}

fn difference(ny: usize) -> HeleShawOperator {
    let mut bulk = BulkConfig::new(ny);
    bulk.solver.tol = 1e-12;
    HeleShawOperator::new(BoundaryLaw::difference(Spd2::IDENTITY), bulk)
}

fn flat(n: usize, c: f64) -> GraphInterface {
    GraphInterface::new(vec![c; n], 2.0 * PI, 2.0).unwrap()
}

/// Response of the flat one-phase strip of height `c` to the continuous bump,
/// summed over the Fourier series with multiplier `-|xi| cosh(c xi) / (c sinh(c xi))`.
/// The quartic B-spline bump has transform `mass * exp(-i xi h) * sinc(xi w / 5)^5`.
fn fourier_response(b: &BumpSpec, period: f64, c: f64) -> f64 {
    let mut acc = -b.mass() / (c * c);
    for k in 1..200_000 {
        let xi = 2.0 * PI * k as f64 / period;
        let m = -xi / (c * (c * xi).tanh());
        let s = xi * b.width / 5.0;
        acc += 2.0 * m * b.mass() * (xi * b.center).cos() * (s.sin() / s).powi(5);
    }
    acc / period
}

#[test]
fn flat_one_phase_symbol() {
    let op = one_phase(128);
    let rows = symbol_check(&op, 1.0, 2.0, 2.0 * PI, 256, &[0.0, 1.0, 2.0, 4.0, 8.0], &ProbeConfig::default()).unwrap();
    assert!((rows[0].measured + 1.0).abs() < 1e-3, "{:?}", rows[0]);
    assert!((rows[1].measured + 1.3130).abs() < 0.01 * 1.3130, "{:?}", rows[1]);
    for r in &rows {
        let direct = if r.xi == 0.0 { -1.0 } else { -r.xi / r.xi.tanh() };
        assert!((r.measured - direct).abs() < 0.01 * direct.abs(), "{r:?}");
    }
}

#[test]
fn difference_law_symbol_adds_both_phases() {
    let op = difference(128);
    let rows = symbol_check(&op, 1.0, 2.0, 2.0 * PI, 256, &[4.0], &ProbeConfig::default()).unwrap();
    assert!((rows[0].measured + 8.0107).abs() < 0.01 * 8.0107, "{:?}", rows[0]);
}

#[test]
fn symbol_rejects_unresolved_mode() {
    let op = one_phase(16);
    let err = symbol_check(&op, 1.0, 2.0, 2.0 * PI, 32, &[5.0], &ProbeConfig::default()).unwrap_err();
    assert!(matches!(err, Error::UnresolvedMode { .. }));
}

fn flat_kernel(op: &HeleShawOperator, n: usize) -> (GraphInterface, ExtractedKernel) {
    let f = flat(n, 1.0);
    let bumps: Vec<BumpSpec> = kernel_ladder(0.1, 2.5, 10)
        .into_iter()
        .map(|h| kernel_bump(h, f.dx(), f.period()))
        .collect();
    let k = probe_kernel(&f, op, &bumps, (0.1, 1.0), 1.0, &ProbeConfig::default()).unwrap();
    (f, k)
}

#[test]
fn flat_kernel_against_fourier_oracle() {
    let op = one_phase(128);
    let (f, k) = flat_kernel(&op, 256);
    assert!(k.k_values.iter().all(|v| *v > 0.0));
    assert!(k.sandwich_constant() <= 10.0, "C = {}", k.sandwich_constant());
    assert!(k.c_lower * k.c_upper >= 1.0);
    for (h, kv) in k.h_samples.iter().zip(&k.k_values) {
        let b = kernel_bump(*h, f.dx(), f.period());
        if b.width < 4.0 * f.dx() {
            continue;
        }
        let psi = b.samples(256, f.period(), 0);
        let oracle = fourier_response(&b, f.period(), 1.0);
        let measured = kv * h * h * inverse_square_weight(&psi, f.dx(), 0, f.period());
        assert!((measured - oracle).abs() < 0.01 * oracle.abs(), "h = {h}: {measured} vs {oracle}");
    }
    // symmetric state: no drift
    assert!(k.drift_estimate.abs() < 1e-4, "b = {}", k.drift_estimate);
    assert!((k.zero_order_estimate + 1.0).abs() < 1e-3);
}

#[test]
fn kernel_reconstructs_symbol() {
    let op = one_phase(128);
    let (_, k) = flat_kernel(&op, 256);
    for xi in [1.0, 2.0] {
        let rebuilt = k.reconstruct_symbol(xi, 2.0 * PI);
        let direct = -xi / xi.tanh();
        assert!((rebuilt - direct).abs() < 0.05 * direct.abs(), "xi = {xi}: {rebuilt} vs {direct}");
    }
}

#[test]
fn difference_kernel_is_sum_of_phases() {
    let f = flat(128, 1.0);
    let bumps: Vec<BumpSpec> = [0.3, -0.6, 1.0].iter().map(|&h| kernel_bump(h, f.dx(), f.period())).collect();
    let cfg = ProbeConfig::default();
    let two = probe_kernel(&f, &difference(64), &bumps, (0.3, 1.0), 1.0, &cfg).unwrap();
    // f = 1 in a strip of height 2: both phases are copies of the same unit strip
    let one = probe_kernel(&f, &one_phase(64), &bumps, (0.3, 1.0), 1.0, &cfg).unwrap();
    for (a, b) in two.k_values.iter().zip(&one.k_values) {
        assert!(*b > 0.0);
        assert!((a - 2.0 * b).abs() < 0.01 * a, "{a} vs 2 x {b}");
    }
}

#[test]
fn bump_clearance_enforced() {
    let f = flat(64, 1.0);
    let b = BumpSpec::new(0.1, 0.09, 1.0);
    let err = probe_kernel(&f, &one_phase(32), &[b], (0.1, 1.0), 0.5, &ProbeConfig::default()).unwrap_err();
    assert!(matches!(err, Error::SupportViolation(_)));
}

#[test]
fn noisy_probe_reports_suggested_step() {
    let f = flat(64, 1.0);
    let b = kernel_bump(0.5, f.dx(), f.period());
    let cfg = ProbeConfig {
        amplitude: 0.3,
        defect_tol: 1e-6,
        ..ProbeConfig::default()
    };
    match probe_kernel(&f, &one_phase(32), &[b], (0.1, 1.0), 0.5, &cfg) {
        Err(Error::RichardsonDefect { suggested_eps, .. }) => assert!(suggested_eps < 0.3),
        other => panic!("expected a defect error, got {other:?}"),
    }
}

#[test]
fn sandwich_on_flat_state() {
    let f = flat(256, 1.0);
    let op = one_phase(128);
    let r = bump_sandwich_test(
        &f,
        &op,
        &[BumpSpec::new(0.5, 0.2, 0.05), BumpSpec::new(0.5, 0.2, 0.0)],
        1.0,
        1.0,
        0,
    )
    .unwrap();
    assert!(r.pass);
    assert!(r.rows[0].difference > 0.0);
    assert_eq!(r.rows[1].difference, 0.0);
    assert!(r.constant <= 10.0, "C = {}", r.constant);
}

#[test]
fn shift_flat_matches_closed_form() {
    let f = flat(64, 1.0);
    let r = constant_shift_test(&f, &one_phase(64), &[0.01, 0.05], 0.5, 1e-9).unwrap();
    assert!(r.pass);
    for row in &r.rows {
        assert!(row.flat_error.unwrap() < 1e-8);
        // 1/c - 1/(c + eps) = eps / (c (c + eps)) <= eps / c^2
        assert!((row.c_plus - 1.0 / (1.0 + row.eps)).abs() < 1e-6);
        // the unit-height minus phase: 1/(1 - eps) - 1 = eps / (1 - eps)
        assert!((row.c_minus - 1.0 / (1.0 - row.eps)).abs() < 1e-6);
    }
    assert!((r.constant - 1.0 / 0.95).abs() < 1e-6);
}

#[test]
fn shift_curved_is_monotone() {
    let f = GraphInterface::from_fn(128, 2.0 * PI, 2.0, |x| 1.0 + 0.2 * x.cos()).unwrap();
    let r = constant_shift_test(&f, &one_phase(64), &[0.01, 0.05], 0.6, 1e-9).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.rows.iter().all(|row| row.c_plus > 0.0 && row.c_minus > 0.0));
    assert!(constant_shift_test(&f, &one_phase(64), &[0.4], 0.6, 1e-9).is_err());
}

#[test]
fn rotation_bound_is_finite() {
    let f = GraphInterface::from_fn(128, 2.0 * PI, 2.0, |x| 1.0 + 0.2 * x.cos()).unwrap();
    let r = rotation_estimate_test(&f, &one_phase(64), &[0.0, 0.01, 0.02], 5).unwrap();
    assert!(r.pass);
    assert_eq!(r.rows[0].difference, 0.0);
    assert!(r.constant.is_finite() && r.constant > 0.0);
    // right side is linear in the tilt
    let rhs = |row: &RotationRow| row.grad_psi + row.eps2 * row.sup_psi;
    assert!(rhs(&r.rows[1]) <= 0.5 * rhs(&r.rows[2]) + 1e-15);
}

#[test]
fn flat_odd_probe_vanishes() {
    let f = flat(128, 1.0);
    let r = probe_drift(&f, &one_phase(64), &[0.05, 0.1, 0.2], &[0.2, 0.4], None, &ProbeConfig::default()).unwrap();
    assert_eq!(r.rows.len(), 6);
    assert!(r.constant < 1e-5, "{}", r.constant);
}

#[test]
fn drift_bounded_without_parity() {
    let f = GraphInterface::from_fn(128, 2.0 * PI, 2.0, |x| 1.0 + 0.2 * (x + 0.7).cos()).unwrap();
    let r = probe_drift(&f, &one_phase(64), &[0.05, 0.1, 0.2, 0.4], &[0.2, 0.4], None, &ProbeConfig::default()).unwrap();
    assert!(r.constant.is_finite() && r.constant > 1e-4);
    // the response is linear in tau
    for pair in r.rows.windows(2).filter(|w| w[0].r == w[1].r) {
        let (a, b) = (pair[0].ell / pair[0].tau, pair[1].ell / pair[1].tau);
        assert!((a - b).abs() < 1e-3 * a.abs().max(1e-3));
    }
}

#[test]
fn gcp_small_sweep() {
    let mut op = one_phase(32);
    op.bulk.solver.tol = 1e-12;
    let cfg = GcpConfig::new(64, 2.0 * PI, 2.0);
    let r = gcp_test(7, &op, 6, &cfg).unwrap();
    assert!(r.pass(), "{:?}", r.violations);
    assert!(r.identity_gap < 1e-12);
    assert!(r.min_margin >= 0.0);
}

#[test]
fn decay_far_below_near() {
    let period = 16.0 * PI;
    let f = GraphInterface::from_fn(128, period, 16.0, |x| 10.0 + (x / 8.0).cos()).unwrap();
    let op = one_phase(64);
    let none = decay_test(&f, &op, &[period / 8.0], 0.0, 0).unwrap();
    assert_eq!(none.rows[0].far, 0.0);
    let r = decay_test(&f, &op, &[period / 8.0], 0.5, 0).unwrap();
    assert!(r.rows[0].near >= 5.0 * r.rows[0].far, "{:?}", r.rows[0]);
    assert!(decay_test(&f, &op, &[period / 4.0], 0.5, 0).is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn doubling_a_bump_doubles_the_response(h in 0.4f64..2.0, sign in prop::bool::ANY, amp in 1e-4f64..1e-2) {
            let f = GraphInterface::from_fn(64, 2.0 * PI, 2.0, |x| 1.0 + 0.1 * x.sin()).unwrap();
            let op = local(&one_phase(32));
            let h = if sign { h } else { -h };
            let psi = kernel_bump(h, f.dx(), f.period()).samples(64, f.period(), 0);
            let at = |a: f64| op.velocity(&f.perturbed(&psi, a).unwrap()).unwrap().values[0];
            let base = at(0.0);
            let (one, two) = (at(amp) - base, at(2.0 * amp) - base);
            prop_assert!(one > 0.0);
            prop_assert!((two - 2.0 * one).abs() <= ProbeConfig::default().defect_tol * 2.0 * one);
        }
    }
}
