use proptest::prelude::*;

use mvlab::galerkin::{
    eigenvalue, energy_report, psi_apply, psi_scalar, spde_solve, FieldInit, SineBasis, SpdeConfig, SpectralField,
};
use mvlab::ldp::{limit_ode, rate_of_control, skeleton_solve, Control};
use mvlab::measures::{ParticleEnsemble, TimeGrid};
use mvlab::models::{
    check_assumption, curie_weiss, dorsogna, model_cubic, CoefficientModel, Condition, ModelSpec, SamplerConfig,
};
use mvlab::solvers::{euler_frozen_measure, interacting_particles, InitialCondition, SolverConfig};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn model(which: u8) -> CoefficientModel {
    match which % 3 {
        0 => curie_weiss(1.0, 1.0, 1.0),
        1 => model_cubic(2.0).unwrap(),
        _ => dorsogna(1.0, 0.5, 1.0, 0.5, 1).unwrap(),
    }
}

fn initial(dim: usize) -> InitialCondition {
    InitialCondition::Gaussian {
        mean: vec![0.2; dim],
        std: 0.7,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schemes_coincide_with_one_inner_step(which in 0u8..3, seed in any::<u64>(), n in 2usize..12) {
        let m = model(which);
        let cfg = SolverConfig::new(TimeGrid::new(0.5, n).unwrap(), 24, seed);
        let init = initial(m.dim());
        let (_, frozen) = euler_frozen_measure(&m, &cfg, &init).unwrap();
        let interacting = interacting_particles(&m, &cfg, &init).unwrap();
        for k in 0..=n {
            prop_assert_eq!(frozen.frame(k), interacting.frame(k));
        }
    }

    #[test]
    fn results_do_not_depend_on_threads(which in 0u8..3, seed in any::<u64>(), inner in 1usize..4) {
        let m = model(which);
        let cfg = SolverConfig::new(TimeGrid::new(0.5, 6).unwrap(), 40, seed).with_inner_steps(inner);
        let init = initial(m.dim());
        let a = in_pool(1, || euler_frozen_measure(&m, &cfg, &init).unwrap().1);
        let b = in_pool(3, || euler_frozen_measure(&m, &cfg, &init).unwrap().1);
        for k in 0..=6 {
            prop_assert_eq!(a.frame(k), b.frame(k));
        }
    }

    #[test]
    fn kinetic_structure(x in prop::collection::vec(-3.0..3.0f64, 2), atoms in prop::collection::vec(-3.0..3.0f64, 2..12)) {
        let m = dorsogna(1.0, 0.5, 1.0, 0.5, 1).unwrap();
        let len = atoms.len() / 2 * 2;
        let mu = ParticleEnsemble::uniform(2, atoms[..len].to_vec()).unwrap();
        let (b, sigma) = m.eval(0.0, &x, &m.frame(&mu));
        // Position moves with velocity; noise only enters the velocity.
        prop_assert_eq!(b[0], x[1]);
        prop_assert_eq!(sigma.len(), 2);
        prop_assert_eq!(sigma[0], 0.0);
        prop_assert!((sigma[1] - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn assumption_reports_are_deterministic(seed in any::<u64>(), which in 0usize..4) {
        let condition = [Condition::A2, Condition::A2Triple, Condition::A3, Condition::A4][which];
        let m = curie_weiss(1.0, 1.0, 1.0);
        let cfg = SamplerConfig { points_per_radius: 16, ..SamplerConfig::default() };
        let a = in_pool(1, || check_assumption(&m, condition, &cfg, seed).unwrap());
        let b = in_pool(3, || check_assumption(&m, condition, &cfg, seed).unwrap());
        prop_assert_eq!(a.worst_constant.to_bits(), b.worst_constant.to_bits());
        prop_assert_eq!(a.per_radius, b.per_radius);
        prop_assert_eq!(a.violations.len(), b.violations.len());
    }

    #[test]
    fn unknown_model_keys_are_rejected(key in "[a-z]{1,6}") {
        prop_assume!(key != "p" && key != "kappa");
        prop_assert!(ModelSpec::new("cubic").param(&key, 1.0).build().is_err());
    }

    #[test]
    fn zero_control_skeleton_is_the_limit(x0 in -2.0..2.0f64, n in 1usize..200) {
        let m = model_cubic(2.0).unwrap();
        let grid = TimeGrid::new(1.0, n).unwrap();
        let limit = limit_ode(&m, &[x0], grid).unwrap();
        let skeleton = skeleton_solve(&m, &[x0], &Control::zero(grid, 1), &limit).unwrap();
        prop_assert_eq!(skeleton.states(), limit.states());
    }

    #[test]
    fn control_energy(values in prop::collection::vec(-3.0..3.0f64, 1..16), factor in 1usize..5) {
        let n = values.len();
        let grid = TimeGrid::new(2.0, n).unwrap();
        let c = Control::new(grid, 1, values.clone()).unwrap();
        let direct: f64 = 0.5 * values.iter().map(|v| v * v * grid.step()).sum::<f64>();
        prop_assert!((rate_of_control(&c) - direct).abs() < 1e-12);
        let fine = c.lift(&grid.refine(factor).unwrap()).unwrap();
        prop_assert!((rate_of_control(&fine) - direct).abs() < 1e-12);
    }

    #[test]
    fn psi_is_strongly_monotone(a in -20.0..20.0f64, b in -20.0..20.0f64, r in 1.0..5.0f64) {
        let lhs = (psi_scalar(a, r) - psi_scalar(b, r)) * (a - b);
        prop_assert!(lhs >= 0.0);
        let rhs = 2f64.powf(1.0 - r) * (a - b).abs().powf(r + 1.0);
        prop_assert!(lhs >= rhs * (1.0 - 1e-12), "{} < {}", lhs, rhs);
    }

    #[test]
    fn sine_transform_round_trip(coeffs in prop::collection::vec(-2.0..2.0f64, 1..40), r in 1.0..4.0f64) {
        let k = coeffs.len();
        let basis = SineBasis::for_exponent(k, r).unwrap();
        let mut values = vec![0.0; basis.points()];
        let mut back = vec![0.0; k];
        basis.inverse(&coeffs, &mut values);
        basis.forward(&values, &mut back);
        for (a, b) in coeffs.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn norms_are_invariant_under_zero_padding(coeffs in prop::collection::vec(-2.0..2.0f64, 1..12), extra in 1usize..12) {
        let small = SpectralField::new(coeffs.clone()).unwrap();
        let mut padded = coeffs.clone();
        padded.resize(coeffs.len() + extra, 0.0);
        let big = SpectralField::new(padded).unwrap();
        prop_assert!((small.h_norm_sq() - big.h_norm_sq()).abs() < 1e-14);
        let h: f64 = coeffs.iter().enumerate().map(|(i, c)| c * c / eigenvalue(i + 1)).sum();
        prop_assert!((small.h_norm_sq() - h).abs() < 1e-14);
        let bs = SineBasis::for_exponent(small.modes(), 2.0).unwrap();
        let bb = SineBasis::for_exponent(big.modes(), 2.0).unwrap();
        prop_assert!((small.lp_norm_pow(&bs, 2.0) - big.lp_norm_pow(&bb, 2.0)).abs() < 1e-10);
        prop_assert!((small.lp_norm_pow(&bs, 2.0) - small.l2_norm_sq()).abs() < 1e-10);
        let psi_small = psi_apply(&small, 1.0).unwrap();
        for (a, b) in psi_small.coeffs().iter().zip(&coeffs) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn spde_is_deterministic_across_threads(seed in any::<u64>(), fields in 1usize..6) {
        let grid = TimeGrid::new(0.02, 100).unwrap();
        let cfg = SpdeConfig::new(6, 2.0, fields, grid, seed).with_decaying_noise(3, 0.5).with_record_every(10);
        let init = FieldInit::Random { amplitude: 0.3, decay: 1.0 };
        let a = in_pool(1, || spde_solve(&cfg, &init).unwrap());
        let b = in_pool(3, || spde_solve(&cfg, &init).unwrap());
        prop_assert_eq!(&a, &b);
        let ea = energy_report(&a, 3.0).unwrap();
        prop_assert!(ea.per_field.iter().all(|e| e.sup_h_sq >= 0.0 && e.lr_integral >= 0.0));
        prop_assert!((ea.per_field.iter().map(|e| e.sup_h_p).sum::<f64>() / fields as f64 - ea.mean.sup_h_p).abs() < 1e-15);
    }
}
