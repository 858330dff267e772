use helegraph::elliptic::{greens_ratio_check, harmonic_decay_check, Phase};
use helegraph::parabolic::{difference_quotient_check, KernelClassParams};
use helegraph::*;
use std::f64::consts::{E, PI};

fn barely_dini(n: usize, amp: f64) -> GraphInterface {
    let p = 2.0 * PI;
    let slope: Vec<f64> = (0..n)
        .map(|j| {
            let s = (j as f64 * p / n as f64).sin();
            if s == 0.0 {
                0.0
            } else {
                amp * s.signum() / (E + 1.0 / s.abs()).ln().powf(1.5)
            }
        })
        .collect();
    let g = helegraph::spectral::antiderivative(&slope, p);
    GraphInterface::new(g.iter().map(|v| 1.0 + v).collect(), p, 2.0).unwrap()
}

#[test]
fn rough_gradient_smooths_out() {
    let f0 = barely_dini(64, 0.3);
    let class = ClassKParams {
        delta: 0.2,
        strip_height: 2.0,
        lip_bound: 1.0,
        modulus: DiniModulus::Log { power: 1.5 },
    };
    let mut cfg = EvolutionConfig::new(class);
    cfg.gammas = vec![0.1];
    let op = HeleShawOperator::new(BoundaryLaw::one_phase(), BulkConfig::new(32));
    let traj = evolve(f0, &op, &cfg, 0.2, 0.02).unwrap();
    let holder: Vec<f64> = traj.snapshots.iter().map(|s| s.diagnostics.back().unwrap().holder[0]).collect();
    for w in holder.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{holder:?}");
    }
    assert!(traj.report.late_holder_slope[0] < 0.0);
    assert!(traj.report.norm_exponent[0] > 0.0);
    // difference quotients along the same run
    let q = difference_quotient_check(&traj.snapshots, &[1, 4], &KernelClassParams::new(4.0, 1.0), 1.0, 1e-9, 0.1).unwrap();
    assert!(q.min_fraction >= 0.95, "{}", q.min_fraction);
}

#[test]
fn greens_ratio_is_bounded_near_the_interface() {
    let f = GraphInterface::from_fn(64, 2.0 * PI, 2.0, |x| 1.0 + 0.2 * x.cos()).unwrap();
    let mut cfg = BulkConfig::new(64);
    cfg.solver.tol = 1e-12;
    let r = greens_ratio_check(&f, &[(0, 62), (32, 2)], Phase::Plus, Spd2::IDENTITY, &cfg).unwrap();
    // half-plane asymptotics give 1/pi
    assert!(r.lower > 0.15 && r.upper < 0.5, "{} {}", r.lower, r.upper);
    assert!(greens_ratio_check(&f, &[(0, 32)], Phase::Plus, Spd2::IDENTITY, &cfg).is_err());
}

#[test]
fn far_harmonic_measure_grows_linearly_and_decays_in_radius() {
    let f = GraphInterface::from_fn(128, 2.0 * PI, 2.0, |x| 1.0 + 0.2 * x.cos()).unwrap();
    let cfg = BulkConfig::new(128);
    let dy = 1.0 / 128.0;
    let ladder: Vec<f64> = (0..5).map(|k| 4.0 * dy * 2f64.powf(k as f64 / 2.0)).collect();
    let r = harmonic_decay_check(&f, 0, &[0.25, 0.5, 1.0], &ladder, Phase::Plus, Spd2::IDENTITY, &cfg).unwrap();
    assert!(r.max_spread < 0.1, "{}", r.max_spread);
    assert!(r.alpha > 0.0);
}
