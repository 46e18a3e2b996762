use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schouten_core::ode::*;

fn jet_strategy() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.01f64..50.0, -20.0f64..20.0, -50.0f64..50.0, prop_oneof![-3.0f64..-0.05, 0.05f64..3.0])
}

proptest! {
    #[test]
    fn residual_forms_agree((b, db, d2b, lambda) in jet_strategy()) {
        let j = Jet { b, db, d2b };
        let scale = (b * d2b).abs() + db * db + 6.0 * (lambda * db).abs() + 8.0 * lambda * lambda;
        let diff = (residual_of_jet(j, lambda) - factored_residual_of_jet(j, lambda)).abs();
        prop_assert!(diff <= 1e-12 * scale.max(1.0), "diff {diff}");
    }

    #[test]
    fn reflection_preserves_residuals(b0 in 0.2f64..5.0, db0 in -8.0f64..8.0, lambda in prop_oneof![-2.0f64..-0.2, 0.2f64..2.0]) {
        let sol = integrate_equality_ode(lambda, (0.0, b0, db0), (-0.5, 0.5), 1e-3).unwrap();
        let phi = sol.b.reflect();
        prop_assert_eq!(phi.lambda(), -lambda);
        let n = sol.b.node_count();
        for i in sol.b.interior_nodes().step_by(37) {
            let r = residual_of_jet(sol.b.node_jet(i), lambda);
            let j = sol.b.node_jet(i);
            let rr = residual_of_jet(phi.node_jet(n - 1 - i), -lambda);
            let scale = (j.b * j.d2b).abs() + j.db * j.db + 1.0;
            prop_assert!((r - rr).abs() < 1e-10 * scale);
        }
        let w = slope_window_check(&sol.b).holds;
        prop_assert_eq!(w, slope_window_check(&phi).holds);
    }

    #[test]
    fn linear_family_residual_sign(n in 3usize..12, kf in 0.0f64..1.0, lambda in prop_oneof![-3.0f64..-0.05, 0.05f64..3.0]) {
        let k = ((n as f64) * kf).floor() as usize;
        let b = linear_solution(n, k.min(n - 1), lambda).unwrap();
        let s = if lambda > 0.0 { 1.0 } else { -1.0 };
        let r = main_inequality_residual(&b, s).unwrap();
        let k = k.min(n - 1);
        if k == 0 || k == n - 1 {
            prop_assert!(r.abs() < 1e-12 * lambda * lambda * 100.0);
        } else {
            prop_assert!(r > 0.0);
        }
        let BKind::AnalyticLinear { slope, .. } = *b.kind() else { unreachable!() };
        let (lo, hi) = if lambda > 0.0 { (2.0 * lambda, 4.0 * lambda) } else { (4.0 * lambda, 2.0 * lambda) };
        prop_assert!(slope >= lo - 1e-12 * lo.abs() && slope <= hi + 1e-12 * hi.abs());
    }
}

#[test]
fn certificates_sound_on_random_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut applicable = [0usize; 4];
    let (mut done, mut rejected) = (0, 0);
    while done < 200 {
        let t = done;
        let lambda = rng.random_range(0.2..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let b0 = rng.random_range(0.2..5.0);
        let db0 = rng.random_range(-10.0..10.0);
        // starts that collapse within a couple of steps give no usable grid
        let Ok(sol) = integrate_equality_ode(lambda, (0.0, b0, db0), (-4.0, 4.0), 1e-3) else {
            rejected += 1;
            continue;
        };
        done += 1;
        let worst = min_scaled_inequality_residual(&sol.b).unwrap().1;
        assert!(worst >= -1e-6, "trajectory {t}: equality residual {worst}");
        let cert = bound_certificates(&sol.b, 0.0).unwrap();
        assert!(cert.all_hold(), "trajectory {t}: lambda {lambda} b0 {b0} db0 {db0} residual {worst}: {cert:#?}");
        for (slot, check) in [&cert.c, &cert.c1, &cert.c0].into_iter().enumerate() {
            if check.verdict != Verdict::NotApplicable {
                applicable[slot] += 1;
            }
        }
        applicable[3] += cert.growth.is_some() as usize;
    }
    assert!(rejected < 20, "{rejected} starts rejected");
    assert!(applicable.iter().all(|&a| a > 10), "{applicable:?}");
}
