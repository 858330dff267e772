use helegraph_whitney::*;

#[test]
fn full_suite_passes() {
    let r = run_suite(&SuiteConfig::default()).unwrap();
    for i in &r.items {
        assert!(i.pass, "{}: {}", i.name, i.detail);
    }
    assert_eq!(r.passed(), r.items.len());
    // J^m error roughly halves per level for a smooth bump
    assert!(r.convergence.rate < -0.5, "{:?}", r.convergence);
    assert!(r.remainder.beta > 0.0);
    let back: SuiteReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn unit_interval_matches_golden_ladder() {
    let golden: serde_json::Value =
        serde_json::from_str(include_str!("golden/unit_interval_depth6.json")).unwrap();
    let built: serde_json::Value = serde_json::from_str(&decompose_to_depth(0, 1, 6).unwrap().to_json()).unwrap();
    assert_eq!(built, golden);
}

#[test]
fn unit_interval_ladder_by_hand() {
    // (0, 1): [1/4, 3/4] split at 1/2, then [2^-k-1, 2^-k] and its mirror image
    let d = decompose_to_depth(0, 1, 6).unwrap();
    let mut spans: Vec<(f64, f64)> = d
        .cell_cubes
        .iter()
        .map(|c| (c.center[0] - c.diameter / 2.0, c.center[0] + c.diameter / 2.0))
        .collect();
    spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut expect = Vec::new();
    for k in (2..=6).rev() {
        let s = (-(k as f64)).exp2();
        expect.push((s, 2.0 * s));
    }
    for k in 2..=6 {
        let s = (-(k as f64)).exp2();
        expect.push((1.0 - 2.0 * s, 1.0 - s));
    }
    assert_eq!(spans, expect);
    for c in &d.cell_cubes {
        assert_eq!(c.dist, c.diameter);
    }
}

#[test]
fn identity_approximation_agrees_on_the_grid() {
    let f = field(2, |x: &[f64]| (x[0] - 0.3 * x[1]).sin() * (1.0 + x[1] * x[1]));
    let j = approximate(std::sync::Arc::new(Identity), f.clone(), 3).unwrap();
    for idx in [[0i64, 0], [5, -3], [-7, 2], [1, 1]] {
        let x = j.projection().samples.point(&idx);
        assert_eq!(j.eval(&x).unwrap(), f.eval(&x));
    }
}

#[test]
fn level_caps_are_enforced() {
    assert!(matches!(decompose(13, 1), Err(Error::LevelCap { cap: 12, .. })));
    assert!(matches!(decompose(8, 2), Err(Error::LevelCap { cap: 7, .. })));
    assert!(matches!(decompose(0, 3), Err(Error::UnsupportedDimension(3))));
    assert!(project(field(2, |_: &[f64]| 0.0), 8).is_err());
}
