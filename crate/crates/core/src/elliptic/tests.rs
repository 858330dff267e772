use super::*;
use proptest::prelude::*;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

fn iface(n: usize, l: f64, f: impl Fn(f64) -> f64) -> GraphInterface {
    GraphInterface::from_fn(n, TWO_PI, l, f).unwrap()
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn transpose(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

#[test]
fn flat_maps_give_constant_laplacians() {
    let f = iface(16, 2.0, |_| 1.0);
    for phase in [Phase::Plus, Phase::Minus] {
        let p = flatten(&f, phase, Spd2::IDENTITY, 8, GradientBackend::Spectral).unwrap();
        assert!(p.a11.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(p.a12.iter().all(|v| v.abs() < 1e-15));
        assert!(p.a22.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }
}

#[test]
fn coefficients_match_chain_rule() {
    // Jacobian of the map at physical points, then g * DPhi A DPhi^T.
    let l = 2.0;
    let a2 = Spd2 { a11: 1.7, a12: 0.3, a22: 0.8 };
    let f = iface(64, l, |x| 1.0 + 0.1 * x.cos());
    let fp = f.gradient(GradientBackend::Spectral).to_vec();
    let p_plus = flatten(&f, Phase::Plus, a2, 16, GradientBackend::Spectral).unwrap();
    let p_minus = flatten(&f, Phase::Minus, a2, 16, GradientBackend::Spectral).unwrap();
    for (i, j) in [(3usize, 5usize), (17, 0), (40, 16), (55, 9), (0, 11)] {
        let yh = j as f64 / 16.0;
        let fv = f.samples()[i];
        let v = j * 64 + i;
        // plus: y = yh f
        let y = yh * fv;
        let d = [[1.0, 0.0], [-y * fp[i] / (fv * fv), 1.0 / fv]];
        let det = 1.0 / fv;
        let m = matmul(d, transpose(d));
        let got = [[p_plus.a11[v], p_plus.a12[v]], [p_plus.a12[v], p_plus.a22[v]]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((got[r][c] - m[r][c] / det).abs() < 1e-12);
            }
        }
        // minus: yh = (y - f) / (L - f)
        let g = l - fv;
        let y = fv + yh * g;
        let dydx = (-fp[i] * g + (y - fv) * fp[i]) / (g * g);
        let d = [[1.0, 0.0], [dydx, 1.0 / g]];
        let a = [[a2.a11, a2.a12], [a2.a12, a2.a22]];
        let m = matmul(matmul(d, a), transpose(d));
        let got = [[p_minus.a11[v], p_minus.a12[v]], [p_minus.a12[v], p_minus.a22[v]]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((got[r][c] - m[r][c] * g).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn flatten_rejects_bad_input() {
    let f = iface(16, 2.0, |_| 2.5);
    assert!(flatten(&f, Phase::Plus, Spd2::IDENTITY, 8, GradientBackend::Spectral).is_err());
    let f = iface(16, 2.0, |_| 1.0);
    let bad = Spd2 { a11: 1.0, a12: 2.0, a22: 1.0 };
    assert!(matches!(
        flatten(&f, Phase::Minus, bad, 8, GradientBackend::Spectral),
        Err(Error::NotSpd(_))
    ));
}

#[test]
fn flat_solution_is_linear() {
    let f = iface(32, 2.0, |_| 0.7);
    let cfg = BulkConfig::new(24);
    let u = solve_phase(&f, Phase::Plus, Spd2::IDENTITY, &cfg).unwrap();
    for j in 0..=24 {
        for i in 0..32 {
            assert!((u.at(i, j) - (1.0 - j as f64 / 24.0)).abs() < 1e-12);
        }
    }
    let u = solve_phase(&f, Phase::Minus, Spd2::diag(2.0, 1.0), &cfg).unwrap();
    for j in 0..=24 {
        assert!((u.at(5, j) + j as f64 / 24.0).abs() < 1e-12);
    }
}

#[test]
fn constant_data_gives_constant_solution() {
    let f = iface(32, 2.0, |x| 1.0 + 0.3 * x.cos());
    let p = flatten(&f, Phase::Plus, Spd2::IDENTITY, 32, GradientBackend::Spectral)
        .unwrap()
        .with_boundary(vec![1.0; 32], vec![1.0; 32]);
    let cfg = SolverConfig { tol: 1e-13, ..Default::default() };
    let u = solve_bulk(&p, &cfg).unwrap();
    assert!(u.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

fn manufactured_error(n: usize) -> f64 {
    let exact = |x: f64, y: f64| x.sin() * y.sinh();
    let ones = vec![1.0; (n + 1) * n];
    let zeros = vec![0.0; (n + 1) * n];
    let p = TransformedProblem::from_coefficients(Phase::Plus, n, n, TWO_PI, ones.clone(), zeros, ones).unwrap();
    let dx = p.dx();
    let bottom = (0..n).map(|i| exact(i as f64 * dx, 0.0)).collect();
    let top = (0..n).map(|i| exact(i as f64 * dx, 1.0)).collect();
    let u = solve_bulk(&p.with_boundary(bottom, top), &SolverConfig::default()).unwrap();
    let mut err = 0.0f64;
    for j in 0..=n {
        for i in 0..n {
            err = err.max((u.at(i, j) - exact(i as f64 * dx, j as f64 / n as f64)).abs());
        }
    }
    err
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let ratio = manufactured_error(64) / manufactured_error(128);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

/// Curved map with a source built from the exact fluxes, differentiated numerically.
fn curved_manufactured_error(n: usize, amp: f64) -> f64 {
    let l = 2.0;
    let fx = move |x: f64| 1.0 + amp * x.cos();
    let fpx = move |x: f64| -amp * x.sin();
    let v = |x: f64, y: f64| (x.cos() + 0.5) * (1.3 * y).sin();
    let vx = |x: f64, y: f64| -x.sin() * (1.3 * y).sin();
    let vy = |x: f64, y: f64| 1.3 * (x.cos() + 0.5) * (1.3 * y).cos();
    let coef = |x: f64, y: f64| coefficients(Phase::Plus, fx(x), fpx(x), y, l, Spd2::IDENTITY);
    let flux = |x: f64, y: f64| {
        let c = coef(x, y);
        (c.a11 * vx(x, y) + c.a12 * vy(x, y), c.a12 * vx(x, y) + c.a22 * vy(x, y))
    };
    let h = 1e-5;
    let src = |x: f64, y: f64| {
        -((flux(x + h, y).0 - flux(x - h, y).0) + (flux(x, y + h).1 - flux(x, y - h).1)) / (2.0 * h)
    };
    let f = iface(n, l, fx);
    let p = flatten(&f, Phase::Plus, Spd2::IDENTITY, n, GradientBackend::Spectral).unwrap();
    let dx = p.dx();
    let mut s = vec![0.0; (n + 1) * n];
    for j in 0..=n {
        for i in 0..n {
            s[j * n + i] = src(i as f64 * dx, j as f64 / n as f64);
        }
    }
    let bottom = (0..n).map(|i| v(i as f64 * dx, 0.0)).collect();
    let top = (0..n).map(|i| v(i as f64 * dx, 1.0)).collect();
    let u = solve_bulk(&p.with_boundary(bottom, top).with_source(s), &SolverConfig::default()).unwrap();
    let mut err = 0.0f64;
    for j in 0..=n {
        for i in 0..n {
            err = err.max((u.at(i, j) - v(i as f64 * dx, j as f64 / n as f64)).abs());
        }
    }
    err
}

#[test]
fn curved_manufactured_solution_converges_at_second_order() {
    // amplitude 0.4 forces long stencil offsets that cross the boundary rows
    for amp in [0.1, 0.4] {
        let ratio = curved_manufactured_error(64, amp) / curved_manufactured_error(128, amp);
        assert!((3.5..=4.5).contains(&ratio), "amp {amp}: {ratio}");
    }
}

#[test]
fn direct_and_pcg_agree() {
    let f = iface(32, 2.0, |x| 1.0 + 0.3 * x.cos() + 0.1 * (2.0 * x).sin());
    for phase in [Phase::Plus, Phase::Minus] {
        let mut cfg = BulkConfig::new(20);
        cfg.solver.tol = 1e-13;
        let a = solve_phase(&f, phase, Spd2 { a11: 1.5, a12: 0.2, a22: 1.0 }, &cfg).unwrap();
        cfg.solver.backend = SolverBackend::Direct;
        let b = solve_phase(&f, phase, Spd2 { a11: 1.5, a12: 0.2, a22: 1.0 }, &cfg).unwrap();
        let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-10, "{d}");
    }
}

#[test]
fn flat_fluxes_match_closed_form() {
    let cfg = BulkConfig::new(16);
    for c in [0.5, 1.0, 1.5] {
        let f = iface(16, 2.0, |_| c);
        let up = solve_phase(&f, Phase::Plus, Spd2::IDENTITY, &cfg).unwrap();
        let um = solve_phase(&f, Phase::Minus, Spd2::IDENTITY, &cfg).unwrap();
        for v in boundary_flux(&up, Edge::GammaPlus).unwrap() {
            assert!((v - 1.0 / c).abs() < 1e-10);
        }
        for v in boundary_flux(&um, Edge::GammaMinus).unwrap() {
            assert!((v - 1.0 / (2.0 - c)).abs() < 1e-10);
        }
        assert!(matches!(
            boundary_flux(&up, Edge::GammaMinus),
            Err(Error::EdgePhaseMismatch { .. })
        ));
    }
}

#[test]
fn small_cosine_flux_matches_strip_symbol() {
    let eps = 0.01;
    let f = iface(256, 2.0, |x| 1.0 + eps * x.cos());
    let u = solve_phase(&f, Phase::Plus, Spd2::IDENTITY, &BulkConfig::new(256)).unwrap();
    let flux = boundary_flux(&u, Edge::GammaPlus).unwrap();
    let coth1 = 1.0 / 1.0f64.tanh();
    let dev = (0..256)
        .map(|i| (flux[i] - (1.0 - eps * coth1 * f.x(i).cos())).abs())
        .fold(0.0, f64::max);
    assert!(dev <= 2e-4, "{dev}");
}

#[test]
fn maximum_principle_on_steep_interface() {
    let f = iface(64, 2.0, |x| 1.0 + 0.5 * x.cos());
    for phase in [Phase::Plus, Phase::Minus] {
        let u = solve_phase(&f, phase, Spd2 { a11: 2.0, a12: 0.5, a22: 1.0 }, &BulkConfig::new(64)).unwrap();
        assert!(u.max_principle_violation <= 1e-12, "{}", u.max_principle_violation);
        assert_eq!(u.audit.positive_offdiagonals, 0);
        assert!(u.residual_norm <= 1e-10);
    }
}

#[test]
fn harmonic_measure_examples() {
    let cfg = BulkConfig::new(16);
    let f = iface(32, 2.0, |_| 0.8);
    let all = vec![true; 32];
    let w = harmonic_measure(&f, &all, Phase::Plus, Spd2::IDENTITY, &cfg).unwrap();
    for j in 0..=16 {
        assert!((w.at(3, j) - j as f64 / 16.0).abs() < 1e-12);
    }
    let half: Vec<bool> = (0..32).map(|i| i < 16).collect();
    let w = harmonic_measure(&f, &half, Phase::Plus, Spd2::IDENTITY, &cfg).unwrap();
    let c = w.at(16, 8);
    assert!(c > 0.0 && c < 1.0);
    assert!(harmonic_measure(&f, &[false; 32], Phase::Plus, Spd2::IDENTITY, &cfg).is_err());
}

#[test]
fn greens_function_is_symmetric_and_positive() {
    let f = iface(32, 2.0, |x| 1.0 + 0.2 * x.cos());
    let mut cfg = BulkConfig::new(24);
    cfg.solver.tol = 1e-12;
    let (a, b) = ((3usize, 5usize), (20usize, 17usize));
    let ga = greens_function(&f, a, Phase::Plus, Spd2::IDENTITY, &cfg).unwrap();
    let gb = greens_function(&f, b, Phase::Plus, Spd2::IDENTITY, &cfg).unwrap();
    let gab = ga.at(b.0, b.1);
    let gba = gb.at(a.0, a.1);
    assert!((gab - gba).abs() <= 1e-8 * gab.abs().max(1e-300), "{gab} {gba}");
    for j in 1..24 {
        for i in 0..32 {
            assert!(ga.at(i, j) > 0.0);
        }
    }
    assert!(matches!(
        greens_function(&f, (4, 0), Phase::Plus, Spd2::IDENTITY, &cfg),
        Err(Error::SourceOnBoundary(4, 0))
    ));
}

#[test]
fn linear_growth_examples() {
    let cfg = BulkConfig::new(64);
    let flat = iface(64, 2.0, |_| 1.0);
    let ladder: Vec<f64> = (0..6).map(|k| 0.01 * 2f64.powi(k)).collect();
    let r = linear_growth_check(&flat, 7, Phase::Plus, Spd2::IDENTITY, &ladder, &cfg).unwrap();
    assert!(r.ratio.iter().all(|v| (v - 1.0).abs() < 1e-10), "{:?}", r.ratio);

    let wavy = iface(128, 2.0, |x| 1.0 + 0.3 * x.cos());
    let dx = wavy.dx();
    let ladder: Vec<f64> = (0..8).map(|k| 4.0 * dx * (0.2 / (4.0 * dx)).powf(k as f64 / 7.0)).collect();
    let r = linear_growth_check(&wavy, 0, Phase::Plus, Spd2::IDENTITY, &ladder, &BulkConfig::new(128)).unwrap();
    assert!(r.constant <= 5.0, "{r:?}");

    assert!(matches!(
        linear_growth_check(&flat, 0, Phase::Plus, Spd2::IDENTITY, &[1.5], &cfg),
        Err(Error::LadderOutsideDomain(_))
    ));
}

#[test]
fn linear_growth_near_smoothed_corner_stays_positive() {
    // |x - pi| smoothed on scale 0.05, slope 0.6
    let f = iface(128, 2.0, |x| 0.8 + 0.6 * ((x - PI).powi(2) + 0.0025).sqrt() / PI);
    let dx = f.dx();
    let ladder: Vec<f64> = (0..5).map(|k| 4.0 * dx * 1.3f64.powi(k)).collect();
    let r = linear_growth_check(&f, 64, Phase::Plus, Spd2::IDENTITY, &ladder, &BulkConfig::new(96)).unwrap();
    assert!(r.lower > 0.0 && r.constant.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ordered_data_gives_ordered_solutions(
        seed in proptest::collection::vec(0.0f64..1.0, 32),
        lift in proptest::collection::vec(0.0f64..0.5, 32),
    ) {
        let f = iface(16, 2.0, |x| 1.0 + 0.3 * x.sin());
        let p = flatten(&f, Phase::Plus, Spd2::IDENTITY, 12, GradientBackend::Spectral).unwrap();
        let b1: Vec<f64> = seed[..16].to_vec();
        let t1: Vec<f64> = seed[16..].to_vec();
        let b2: Vec<f64> = b1.iter().zip(&lift[..16]).map(|(a, b)| a + b).collect();
        let t2: Vec<f64> = t1.iter().zip(&lift[16..]).map(|(a, b)| a + b).collect();
        let u1 = solve_bulk(&p.clone().with_boundary(b1, t1), &SolverConfig::default()).unwrap();
        let u2 = solve_bulk(&p.with_boundary(b2, t2), &SolverConfig::default()).unwrap();
        for (a, b) in u1.values.iter().zip(&u2.values) {
            prop_assert!(*b >= a - 1e-10);
        }
        prop_assert!(u1.max_principle_violation <= 1e-12);
        prop_assert!(u2.max_principle_violation <= 1e-12);
    }
}

