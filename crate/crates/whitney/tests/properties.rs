use helegraph_whitney::audit::*;
use helegraph_whitney::partition::weights;
use helegraph_whitney::*;
use proptest::prelude::*;
use std::sync::Arc;

fn dyadic(v: f64) -> f64 {
    (v * 1048576.0).round() / 1048576.0
}

fn off_grid(u: &[f64]) -> bool {
    u.iter().any(|v| v.fract() != 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partition_sums_to_one(u in prop::collection::vec(-40.0f64..40.0, 1..=2)) {
        prop_assume!(off_grid(&u));
        let w = weights(&u);
        let s: f64 = w.iter().map(|k| k.phi).sum();
        prop_assert!((s - 1.0).abs() <= 1e-12, "{s}");
        prop_assert!(w.iter().all(|k| (0.0..=1.0).contains(&k.phi)));
    }

    #[test]
    fn partition_gradient_matches_differences(u in prop::collection::vec(-3.0f64..3.0, 1..=2), j in 0usize..2) {
        prop_assume!(off_grid(&u));
        let j = j % u.len();
        let e = 1e-7 * helegraph_whitney::partition::lattice_dist(&u);
        prop_assume!(e > 1e-12);
        let mut up = u.clone();
        up[j] += e;
        let mut down = u.clone();
        down[j] -= e;
        let wu = weights(&up);
        let wd = weights(&down);
        let phi = |w: &[helegraph_whitney::partition::Weight], k: &CubeKey| {
            w.iter().find(|x| &x.key == k).map_or(0.0, |x| x.phi)
        };
        for k in weights(&u) {
            let fd = (phi(&wu, &k.key) - phi(&wd, &k.key)) / (2.0 * e);
            let scale = 1.0 + k.grad[j].abs();
            prop_assert!((fd - k.grad[j]).abs() <= 1e-4 * scale, "{:?} fd {fd} vs {}", k.key, k.grad[j]);
        }
    }

    #[test]
    fn zero_order_extension_preserves_order(
        seeds in prop::collection::vec(-1.0f64..1.0, 6),
        x in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        let s1 = seeds.clone();
        let s2 = seeds.clone();
        let g1 = GridSamples::new(field(2, move |y: &[f64]| (s1[0] * y[0] + s1[1] * y[1]).sin() + s1[2]), 2).unwrap();
        // g2 - g1 >= 0 on the grid
        let g2 = GridSamples::new(
            field(2, move |y: &[f64]| (s2[0] * y[0] + s2[1] * y[1]).sin() + s2[2] + (s2[3] * y[0] + s2[4]).powi(2) + s2[5].abs()),
            2,
        ).unwrap();
        prop_assert!(extend0(&g1, &x).unwrap() <= extend0(&g2, &x).unwrap());
    }

    #[test]
    fn projection_commutes_with_grid_shifts(
        x in prop::collection::vec(-2.0f64..2.0, 2),
        z in prop::collection::vec(-6i64..6, 2),
        m in 1u32..4,
    ) {
        // window radius at least 8, so x and x + z stay far from the truncation edge
        let x: Vec<f64> = x.into_iter().map(dyadic).collect();
        let f = field(2, |y: &[f64]| (1.3 * y[0]).cos() * (0.7 * y[1] + 0.2).sin());
        prop_assert_eq!(translation_defect(f, m + 2, &z, &[x]).unwrap(), 0.0);
    }

    #[test]
    fn affine_data_is_reproduced(x in prop::collection::vec(-1.5f64..1.5, 2), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        // distance at least 2 h from the truncation edge at m = 2
        let f = move |y: &[f64]| a * y[0] + b * y[1] - 0.25;
        let p = project(field(2, f), 2).unwrap();
        prop_assert!((p.eval(&x) - f(&x)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn projection_lipschitz_ratio_is_level_free(k in 0.5f64..4.0, phase in 0.0f64..6.3) {
        let f = field(1, move |x: &[f64]| (k * x[0] + phase).sin());
        let line: Vec<Vec<f64>> = (0..=2000).map(|i| vec![-1.0 + i as f64 / 1000.0 + 1e-7]).collect();
        let r = lipschitz_sweep(f, &[2, 3, 4, 5, 6], &line).unwrap();
        prop_assert!(r.pass(), "{:?}", r);
    }
}

#[test]
fn first_order_error_on_a_parabola() {
    // centered differences are exact for x^2, so P1 at y is x^2 - (x - y)^2 and the
    // error is a convex combination of -(x - y_k)^2 over the grid points in play
    let m = 4;
    let h = (-(m as f64)).exp2();
    let p = project(field(1, |x: &[f64]| x[0] * x[0]), m).unwrap();
    for i in 0..100 {
        let x = -3.0 + 6.0 * ((i as f64 * 0.618_033_988_749_895).fract());
        let u = x / h;
        let d = (u - u.round()).abs() * h;
        let err = (p.eval(&[x]) - x * x).abs();
        // the farthest grid point used lies within h (1/2 + 1/64) of x
        let far = h * (0.5 + 1.0 / 64.0);
        let oracle = if d == 0.0 { 0.0 } else { d.max(far).powi(2) };
        assert!(err <= oracle + 1e-14, "{x}: {err} > {oracle}");
        // near a grid point only its own polynomial is used, so C = 1 suffices
        assert!(err <= h * d + 1e-14, "{x}: {err} vs h dist {}", h * d);
    }
}

#[test]
fn approximation_with_fractional_laplacian_is_shift_covariant() {
    let op: Arc<dyn Operator> = Arc::new(FractionalLaplacian::new(1.0, 64));
    let f = field(1, |x: &[f64]| (-4.0 * x[0] * x[0]).exp() + 0.1 * x[0]);
    let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![dyadic(-0.5 + i as f64 * 0.0517)]).collect();
    assert_eq!(approximation_translation_defect(op, f, 3, &[-5], &pts).unwrap(), 0.0);
}
