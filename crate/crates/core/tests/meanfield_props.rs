use proptest::prelude::*;

use flexsim_core::meanfield::{
    fixed_point, integrate_ode, jsqd_drift, jsqd_residual, master_inequality_violation, stability_weights, Drift,
    OdeConfig,
};
use flexsim_core::policy::jsqd_policy;

fn occupancy(depth: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, depth).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixed_point_has_zero_drift(lambda in 0.01f64..0.99, d in 1u32..5) {
        let depth = 25;
        let q = fixed_point(lambda, d, depth + 1).unwrap();
        let r = jsqd_residual(lambda, d, &q.levels()[..depth], q.get(depth + 1));
        prop_assert!(r.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn trajectories_stay_ordered(q0 in occupancy(12), lambda in 0.1f64..0.95, d in 1u32..4) {
        let traj = integrate_ode(jsqd_drift(d), &q0, &OdeConfig::new(lambda, 4.0)).unwrap();
        for q in &traj.states {
            prop_assert!(q[0] <= 1.0);
            prop_assert!(q.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(q.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn generic_path_matches_closed_form(q0 in occupancy(10), lambda in 0.1f64..0.95, d in 1u32..4) {
        let cfg = OdeConfig::new(lambda, 2.0);
        let policy = jsqd_policy(d).unwrap();
        let a = integrate_ode(jsqd_drift(d), &q0, &cfg).unwrap();
        let b = integrate_ode(Drift::Policy(&policy), &q0, &cfg).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for (u, v) in x.iter().zip(y) {
                prop_assert!((u - v).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn weights_are_admissible(lambda in 0.05f64..0.97) {
        let w = stability_weights(lambda, 2, 40).unwrap();
        prop_assert!(w.r > 1.0 && w.r < 2.0 / (1.0 + lambda));
        prop_assert!(w.omega.windows(2).all(|p| p[1] > p[0]));
        prop_assert!(master_inequality_violation(&w) <= 1e-12);
        let threshold = 0.5 * (1.0 + lambda);
        prop_assert!(lambda * (2.0 * w.q_star[w.i0 - 1] + 1.0) < threshold);
        if w.i0 > 1 {
            prop_assert!(lambda * (2.0 * w.q_star[w.i0 - 2] + 1.0) >= threshold);
        }
    }
}

#[test]
fn d1_relaxes_to_geometric() {
    let traj = integrate_ode(jsqd_drift(1), &vec![0.0; 150], &OdeConfig::new(0.5, 200.0)).unwrap();
    for (i, q) in traj.last().iter().enumerate().take(40) {
        assert!((q - 0.5f64.powi(i as i32 + 1)).abs() <= 1e-6);
    }
}
