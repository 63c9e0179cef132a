mod common;

use cee_interp::poly::Polynomial;
use cee_interp::problem::{build_structure, caratheodory_residual, u_to_w, w_to_u};
use cee_interp::solver::{solve_caratheodory, SolveOptions};
use cee_interp::specest::estimate_w;
use common::*;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn gram_solves_stein_equation(seed in any::<u64>(), n in 0usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, n + 1);
        let (z, e) = (layout.z_matrix(), layout.e_vector());
        let g = layout.gram().unwrap();
        let res = &g - &z * &g * z.adjoint() - &e * e.adjoint();
        prop_assert!(res.norm() < 1e-10 * (1.0 + g.norm()));
        let herm = (&g - g.adjoint()).norm();
        prop_assert!(herm < 1e-12 * (1.0 + g.norm()));
    }

    #[test]
    fn u_map_inverts(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degree = rng.random_range(1..=4);
        let (cp, _) = random_disc_problem(&mut rng, n, degree);
        let ps = build_structure(&cp, Default::default()).unwrap();
        let up = w_to_u(&ps).unwrap();
        prop_assert!((&up.m * &up.d).map(|z| z.re).relative_eq(&up.u, 1e-9, 1e-9));
        let back = u_to_w(&up.u, &ps).unwrap();
        for (v, w) in back.values.iter().flatten().zip(cp.values.iter().flatten()) {
            prop_assert!((v - w).norm() < 1e-8 * (1.0 + w.norm()), "{} vs {}", v, w);
        }
    }

    #[test]
    fn l_map_is_linear_and_reproduces_u(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degree = rng.random_range(1..=4);
        let (cp, _) = random_disc_problem(&mut rng, n, degree);
        let ps = build_structure(&cp, Default::default()).unwrap();
        let up = w_to_u(&ps).unwrap();
        let uu = ps.l_map(&up.u).unwrap();
        prop_assert!((&uu - &up.uu).norm() < 1e-8 * (1.0 + up.uu.norm()));
        let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let lhs = ps.l_map(&(&x * 2.0 - &y)).unwrap();
        let rhs = ps.l_map(&x).unwrap() * 2.0 - ps.l_map(&y).unwrap();
        prop_assert!((&lhs - &rhs).norm() < 1e-8 * (1.0 + rhs.norm()));
    }

    #[test]
    fn deformed_pick_stays_positive(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degree = rng.random_range(1..=4);
        let (cp, _) = random_disc_problem(&mut rng, n, degree);
        let ps = build_structure(&cp, Default::default()).unwrap();
        for k in 0..=20 {
            let lambda = k as f64 / 20.0;
            prop_assert!(ps.deformed_pick_min_eigenvalue(lambda).unwrap() > 0.0, "lambda {}", lambda);
        }
    }

    #[test]
    fn solutions_satisfy_all_identities(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degree = rng.random_range(1..=4);
        let (cp, _) = random_disc_problem(&mut rng, n, degree);
        let zeros = random_roots(&mut rng, n, 0.0, 0.9);
        let sigma = Polynomial::from_roots(&zeros, true).unwrap();
        let solved = solve_caratheodory(&cp, sigma, &SolveOptions::default()).unwrap();
        let sol = &solved.solution;
        let check = sol.check(&solved.params).unwrap();
        prop_assert!(check.cee_residual < 1e-8, "{:?}", check);
        prop_assert!(check.positivity_residual < 1e-8, "{:?}", check);
        prop_assert!(check.lyapunov_residual < 1e-8, "{:?}", check);
        prop_assert!(check.g_identity_residual < 1e-8, "{:?}", check);
        prop_assert!(check.psd && check.a_schur && check.b_schur, "{:?}", check);
        prop_assert!(sol.rho > 0.0 && sol.rho <= 1.0);
        prop_assert!(caratheodory_residual(&sol.a, &sol.b, &cp).unwrap() < 1e-6);
    }

    #[test]
    fn covariance_to_w_recovers_model_data(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degree = rng.random_range(1..=4);
        let model = random_model(&mut rng, degree);
        let layout = random_layout(&mut rng, n + 1);
        let exact = model.w_values(&layout).unwrap();
        let got = estimate_w(&model.state_covariance(&layout).unwrap(), &layout).unwrap();
        let scale = exact.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
        for (v, w) in got.iter().flatten().zip(exact.iter().flatten()) {
            prop_assert!((v - w).norm() < 1e-8 * scale, "{} vs {}", v, w);
        }
    }

    #[test]
    fn roots_round_trip(seed in any::<u64>(), n in 1usize..11) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let roots = random_roots(&mut rng, n, 0.05, 1.5);
        let p = Polynomial::from_roots(&roots, true).unwrap();
        prop_assert!(p.is_real(0.0));
        let mut found = p.roots().unwrap();
        for r in &roots {
            let (i, d) = found
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - r).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            prop_assert!(d < 1e-7, "root {} missed by {}", r, d);
            found.swap_remove(i);
        }
    }
}
