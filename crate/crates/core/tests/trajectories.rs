use demlab_core::trajectories::{
    balls_family, balls_trajectory, components_family, components_trajectory, integrate_rk4, taylor_residual,
    verify_tree_identity, BallsOde, ComponentsOde, ErrorFunctionSpec, TREE_IDENTITY_MAX_K,
};

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn grid(points: usize, t_end: f64) -> impl Iterator<Item = f64> {
    (0..=points).map(move |i| t_end * i as f64 / points as f64)
}

#[test]
fn rk4_matches_closed_forms() {
    let h = 1e-3;
    let sol = integrate_rk4(&BallsOde { kmax: 6 }, 3.0, h).unwrap();
    let mut worst: f64 = 0.0;
    for (t, y) in sol.times.iter().zip(&sol.states) {
        for (k, v) in y.iter().enumerate() {
            worst = worst.max((v - balls_trajectory(k as u32, *t).unwrap()).abs());
        }
    }
    assert!(worst <= 1e-6, "balls sup error {worst}");

    let sol = integrate_rk4(&ComponentsOde { kappa: 6 }, 3.0, h).unwrap();
    let mut worst: f64 = 0.0;
    for (t, y) in sol.times.iter().zip(&sol.states) {
        for (idx, v) in y.iter().enumerate() {
            worst = worst.max((v - components_trajectory(idx as u32 + 1, *t).unwrap()).abs());
        }
    }
    assert!(worst <= 1e-6, "components sup error {worst}");
}

#[test]
fn balls_derivative_consistency() {
    for t in grid(1000, 10.0) {
        for k in 0..=8u32 {
            let kf = k as f64;
            let analytic = if k == 0 {
                -(-t).exp()
            } else {
                (kf * t.powi(k as i32 - 1) - t.powi(k as i32)) * (-t).exp() / factorial(k)
            };
            let prev = if k == 0 {
                0.0
            } else {
                balls_trajectory(k - 1, t).unwrap()
            };
            let rhs = -balls_trajectory(k, t).unwrap() + prev;
            assert!((analytic - rhs).abs() <= 1e-12, "k={k} t={t}");
        }
    }
}

#[test]
fn components_derivative_consistency() {
    for t in grid(1000, 3.0) {
        let y: Vec<f64> = (1..=6).map(|k| components_trajectory(k, t).unwrap()).collect();
        for k in 1..=6u32 {
            let kf = k as f64;
            let a = kf.powi(k as i32 - 2) / factorial(k);
            let two_t = 2.0 * t;
            let inner = if k == 1 {
                -2.0
            } else {
                2.0 * (kf - 1.0) * two_t.powi(k as i32 - 2) - 2.0 * kf * two_t.powi(k as i32 - 1)
            };
            let analytic = a * inner * (-2.0 * kf * t).exp();
            let mut rhs = -2.0 * kf * y[k as usize - 1];
            for j in 1..k as usize {
                rhs += (j * (k as usize - j)) as f64 * y[j - 1] * y[k as usize - j - 1];
            }
            assert!((analytic - rhs).abs() <= 1e-10, "k={k} t={t}");
        }
    }
}

#[test]
fn tree_identity_holds_exactly() {
    for k in 1..=TREE_IDENTITY_MAX_K {
        let (lhs, rhs) = verify_tree_identity(k).unwrap();
        assert_eq!(lhs, rhs, "k={k}");
    }
    assert!(verify_tree_identity(0).is_err());
    assert!(verify_tree_identity(TREE_IDENTITY_MAX_K + 1).is_err());
}

#[test]
fn balls_maximum_at_k_below_half() {
    for k in 1..=20u32 {
        let peak = balls_trajectory(k, k as f64).unwrap();
        assert!(peak < 0.5, "k={k}");
        let kf = k as f64;
        for t in grid(4000, 4.0 * kf) {
            if (t - kf).abs() > 1e-9 {
                assert!(balls_trajectory(k, t).unwrap() < peak, "k={k} t={t}");
            }
        }
    }
}

#[test]
fn families_agree_with_scalar_forms_on_grid() {
    let mut bx = vec![0.0; 7];
    let mut cy = vec![0.0; 6];
    for t in grid(500, 5.0) {
        balls_family(t, &mut bx);
        components_family(t, &mut cy);
        for (k, v) in bx.iter().enumerate() {
            let s = balls_trajectory(k as u32, t).unwrap();
            assert!((v - s).abs() <= 1e-14 * s.abs().max(1e-300) + 1e-300);
        }
        for (idx, v) in cy.iter().enumerate() {
            let s = components_trajectory(idx as u32 + 1, t).unwrap();
            assert!((v - s).abs() <= 1e-13 * s.abs() + 1e-300);
        }
    }
}

/// `x_0` dominates `eps` on the whole basic horizon from `n = 10^4`; for
/// `k >= 1` the trajectory starts at 0, so dominance is checked from `t = 1/2`
/// at scales where the horizon reaches far enough.
#[test]
fn trajectory_dominates_basic_envelope() {
    let alpha = 0.01;
    for &n in &[1e4, 1e6, 1e9] {
        let eps = ErrorFunctionSpec::balls_basic(n as u64).unwrap();
        let horizon = (1.0 / 12.0 - alpha) * f64::ln(n);
        for t in grid(2000, horizon) {
            assert!(balls_trajectory(0, t).unwrap() > eps.eps(t), "n={n} t={t}");
        }
    }
    for &n in &[1e12, 1e15, 1e18] {
        let eps = ErrorFunctionSpec::balls_basic(n as u64).unwrap();
        let horizon = (1.0 / 12.0 - alpha) * f64::ln(n);
        for i in 0..=2000 {
            let t = 0.5 + (horizon - 0.5) * i as f64 / 2000.0;
            for k in 0..=4 {
                assert!(balls_trajectory(k, t).unwrap() > eps.eps(t), "n={n} k={k} t={t}");
            }
        }
    }
}

#[test]
fn taylor_residual_shrinks_with_n() {
    let f = |t: f64| balls_trajectory(2, t).unwrap();
    let fp = |t: f64| -balls_trajectory(2, t).unwrap() + balls_trajectory(1, t).unwrap();
    let small = taylor_residual(f, fp, 1.3, 1e3);
    let large = taylor_residual(f, fp, 1.3, 1e5);
    assert!(large < small / 50.0);
    assert!(small <= 1e-3);
}
