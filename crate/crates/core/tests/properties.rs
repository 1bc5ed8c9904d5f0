mod common;

use common::{c, random_config, random_matrix, random_model, random_reservoir};
use photon_bound::cli::{load_runspec, RunSpec};
use photon_bound::scattering::{
    scattering_solve, transmission_det, transmission_product, verify_levinson, Mode, WindingOptions,
};
use photon_bound::spectral::{analyze, eigendecompose, Tolerances};
use photon_bound::spinmodel::{build_k, build_k_of_k, build_spin_model, ReservoirCoupling};
use photon_bound::twophoton::{g2, Normalization, SingleAtomParams};
use photon_bound::{linalg, CMatrix, Error};
use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_conjugates_all_matrices(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = rng.random_range(1.0..60.0);
        let config = random_config(&mut rng, n, w);
        let reservoir = ReservoirCoupling::new(random_reservoir(&mut rng, n, 0.4, 0.4)).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let a = build_spin_model(&config, &reservoir, None).unwrap();
        let b = build_spin_model(&config.permuted(&perm).unwrap(), &reservoir.permuted(&perm).unwrap(), None).unwrap();
        let conj = |m: &CMatrix| CMatrix::from_fn(n, n, |i, j| m[(perm[i], perm[j])]);
        prop_assert!(rel(b.channel_coupling(), &conj(a.channel_coupling())) < 1e-14);
        prop_assert!(rel(b.m(), &conj(a.m())) < 1e-14);
        prop_assert!(rel(b.m_tot(), &conj(a.m_tot())) < 1e-14);
    }

    #[test]
    fn coupling_antihermitian_part_is_rank_one(seed in any::<u64>(), n in 1usize..9, k in -5.0f64..80.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = random_config(&mut rng, n, 40.0);
        for (kk, kappa) in [(build_k(&config), 40.0), (build_k_of_k(&config, k), k)] {
            let v = config.channel_vector(kappa);
            let lhs = &kk - kk.adjoint();
            let rhs = &v * v.adjoint() * c(0.0, -1.0);
            prop_assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }
        prop_assert_eq!(build_k_of_k(&config, 40.0), build_k(&config));
    }

    #[test]
    fn channel_coupling_is_lipschitz_in_k(seed in any::<u64>(), k in 0.0f64..100.0, h in 1e-6f64..1e-2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = random_config(&mut rng, 5, 50.0);
        let a = build_k_of_k(&config, k);
        let b = build_k_of_k(&config, k + h);
        prop_assert!((&b - &a).norm() <= h * config.extent() * a.norm().max(1e-300) * 2.0 + 1e-15);
    }

    #[test]
    fn eigenpairs_have_small_residuals(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, n, 2.0);
        let d = eigendecompose(&m).unwrap();
        for alpha in 0..n {
            prop_assert!(d.residual(&m, alpha) <= 1e-12 * m.norm());
            prop_assert!(d.left_residual(&m, alpha) <= 1e-10 * m.norm());
        }
        if d.diagonalizable() {
            prop_assert!(d.biorthogonality_error() < 1e-10);
        }
    }

    #[test]
    fn m_tot_never_amplifies(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 8, 30.0);
        let eig = linalg::eigenvalues(model.m_tot()).unwrap();
        prop_assert!(eig.iter().all(|e| e.im <= 1e-10 * model.m_tot().norm()));
    }

    #[test]
    fn three_transmission_routes_agree(seed in any::<u64>(), dk in -8.0f64..8.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 6, 20.0);
        let k = 20.0 + dk;
        let det = transmission_det(&model, k, Mode::Markov).unwrap();
        let solve = scattering_solve(&model, k, Mode::Markov).unwrap().transmission;
        prop_assert!((det - solve).norm() <= 1e-10 * (1.0 + det.norm()));
        let a = analyze(&model, Tolerances::for_model(&model), true).unwrap();
        if a.m.diagonalizable() && a.m_tot.diagonalizable() {
            let prod = transmission_product(&a.m, &a.m_tot, k).unwrap();
            prop_assert!((det - prod).norm() <= 1e-9 * (1.0 + det.norm()));
        }
        let exact = transmission_det(&model, k, Mode::Exact).unwrap();
        let exact_solve = scattering_solve(&model, k, Mode::Exact).unwrap().transmission;
        prop_assert!((exact - exact_solve).norm() <= 1e-10 * (1.0 + exact.norm()));
    }

    #[test]
    fn g2_is_even_and_matches_zero_delay_formula(ratio in 0.0f64..1.0, tau in 0.0f64..20.0) {
        prop_assume!((ratio - 0.5).abs() > 1e-6);
        let p = SingleAtomParams::from_ratio(ratio, 1.0, 10.0).unwrap();
        let out = g2(&[tau, -tau, 0.0], &p, Normalization::AsymptoticUnit);
        prop_assert_eq!(out.g2_values[0], out.g2_values[1]);
        let (g, gp) = (p.gamma(), p.gamma_prime());
        let expected = (1.0 - 4.0 * g * g / ((gp - g) * (gp - g))).powi(2);
        prop_assert!((out.g2_values[2] - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn g2_excess_decays_monotonically(ratio in 0.0f64..1.0) {
        // |g² − 1| = x|x − 2| with x = a·exp(−τ) is monotone in τ once x ≤ 1
        let p = SingleAtomParams::from_ratio(ratio, 1.0, 10.0).unwrap();
        let (g, gp) = (p.gamma(), p.gamma_prime());
        prop_assume!((gp - g).abs() > 1e-6);
        let a = 4.0 * g * g / ((gp - g) * (gp - g));
        prop_assume!(a * (-5.0f64).exp() <= 1.0);
        let taus: Vec<f64> = (0..200).map(|i| 5.0 + 0.1 * i as f64).collect();
        let out = g2(&taus, &p, Normalization::AsymptoticUnit);
        let excess: Vec<f64> = out.g2_values.iter().map(|v| (v - 1.0).abs()).collect();
        prop_assert!(excess.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn runspec_survives_a_round_trip(ratio in 0.0f64..=1.0, two_atom: bool, tasks in subsequence(vec![
        r#""spectrum""#, r#"{"winding": {}}"#, r#"{"transmission": {"points": 16}}"#, r#"{"boundstates": {}}"#,
    ], 1..4)) {
        let kind = if two_atom { "two_atom" } else { "single_atom" };
        let doc = format!(r#"{{"ensemble": {{"{kind}": {{"gamma_ratio": {ratio}}}}}, "tasks": [{}]}}"#, tasks.join(","));
        let spec = load_runspec(&doc).unwrap();
        let again: RunSpec = load_runspec(&serde_json::to_string(&spec).unwrap()).unwrap();
        prop_assert_eq!(spec, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn levinson_holds_on_small_ensembles(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 4, 25.0);
        let states = analyze(&model, Tolerances::for_model(&model), true).unwrap().states;
        prop_assume!(!states.has_real_states());
        match verify_levinson(&model, &WindingOptions::default()) {
            Ok(check) => prop_assert!(check.consistent, "winding {} N {} N_B {}", check.winding, check.n, check.n_b),
            Err(Error::ZeroOnContour { .. } | Error::PoleOnContour { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
