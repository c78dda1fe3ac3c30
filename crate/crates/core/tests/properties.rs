use boltzlab::collision::{CollisionKernel, CollisionOperator, GainScheme, SphereRule};
use boltzlab::diagnostics::monitor;
use boltzlab::littlewood_paley::{project_x, DyadicCutoff};
use boltzlab::solvers::free_trajectory;
use boltzlab::transport::{free_stream, xi_propagate, Quadrature, TimeGrid};
use boltzlab::{
    apply_scaling, fourier_v, inverse_fourier_v, weighted_norm, weighted_norm_with, DistributionField, NormMix,
    PhaseGrid, ScalingParams, Weights,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(grid: &PhaseGrid, seed: u64, lo: f64) -> DistributionField {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    DistributionField::from_fn(grid, |_, _| r.random_range(lo..1.0))
}

fn l2(f: &DistributionField) -> f64 {
    weighted_norm(f, 0.0, 0.0, NormMix::L2).unwrap()
}

fn small() -> PhaseGrid {
    PhaseGrid::new(2.0, 4, 3.0, 8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fourier_round_trip(seed in any::<u64>()) {
        let f = random_field(&small(), seed, -1.0);
        let back = inverse_fourier_v(&fourier_v(&f));
        prop_assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs());
    }

    #[test]
    fn plancherel(seed in any::<u64>()) {
        let f = random_field(&small(), seed, -1.0);
        let a = l2(&f);
        let b = weighted_norm(&fourier_v(&f), 0.0, 0.0, NormMix::L2).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn norms_increase_with_velocity_weight(seed in any::<u64>(), s in 0.0f64..1.0, r1 in 0.0f64..2.0, dr in 0.0f64..1.0) {
        let f = random_field(&small(), seed, -1.0);
        for mix in [NormMix::L2, NormMix::LvLx { p: 6.0 }, NormMix::sup_v(2.0)] {
            let lo = weighted_norm(&f, s, r1, mix).unwrap();
            let hi = weighted_norm(&f, s, r1 + dr, mix).unwrap();
            prop_assert!(lo <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn critical_index_is_scale_invariant(alpha in -2.0f64..2.0, beta in -2.0f64..2.0, gamma in -1.5f64..0.0, lambda in 0.1f64..10.0) {
        let p = ScalingParams::new(lambda, alpha, beta).unwrap();
        prop_assert!(p.norm_exponent(gamma, 0.5, 0.5 + gamma).abs() < 1e-12);
    }

    #[test]
    fn free_streaming_conserves_mass_and_l2(seed in any::<u64>(), t in -3.0f64..3.0) {
        let f = random_field(&small(), seed, -1.0).without_x_nyquist();
        let g = free_stream(&f, t);
        prop_assert!((g.mass() - f.mass()).abs() <= 1e-12 * f.l1());
        prop_assert!((l2(&g) - l2(&f)).abs() <= 1e-12 * l2(&f));
    }

    #[test]
    fn free_streaming_group_law(seed in any::<u64>(), t in -2.0f64..2.0, s in -2.0f64..2.0) {
        let f = random_field(&small(), seed, -1.0).without_x_nyquist();
        let two = free_stream(&free_stream(&f, t), s);
        prop_assert!(two.max_abs_diff(&free_stream(&f, t + s)) <= 1e-12 * f.max_abs());
        prop_assert!(free_stream(&free_stream(&f, t), -t).max_abs_diff(&f) <= 1e-12 * f.max_abs());
    }

    #[test]
    fn xi_propagator_is_isometric(seed in any::<u64>(), t in -3.0f64..3.0, s in -2.0f64..2.0) {
        let ft = fourier_v(&random_field(&small(), seed, -1.0).without_x_nyquist());
        let n0 = weighted_norm(&ft, 0.0, 0.0, NormMix::L2).unwrap();
        let u = xi_propagate(&ft, t);
        prop_assert!((weighted_norm(&u, 0.0, 0.0, NormMix::L2).unwrap() - n0).abs() <= 1e-12 * n0);
        prop_assert!(xi_propagate(&u, s).max_abs_diff(&xi_propagate(&ft, t + s)) <= 1e-12 * n0);
    }

    #[test]
    fn dyadic_projection_is_bounded(seed in any::<u64>(), level in 0u32..2) {
        let g = PhaseGrid::new(1.0, 8, 3.0, 4).unwrap();
        let f = random_field(&g, seed, -1.0);
        let p = project_x(&f, 1 << level, &DyadicCutoff).unwrap();
        prop_assert!(l2(&p) <= l2(&f) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gain_is_bilinear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let grid = PhaseGrid::new(1.0, 4, 3.0, 4).unwrap();
        let k = CollisionKernel::abs_cos(0.0).unwrap();
        let rule = SphereRule::product(2, 4).unwrap();
        let (f1, f2, g) = (random_field(&grid, seed, 0.0), random_field(&grid, seed ^ 1, 0.0), random_field(&grid, seed ^ 2, 0.0));
        for scheme in [GainScheme::Spectral, GainScheme::MonotoneCic] {
            let op = CollisionOperator::new(&grid, &k, &rule, scheme);
            let mut mix = f1.scaled(a);
            mix.axpy(b, &f2).unwrap();
            let lhs = op.gain(&mix, &g).unwrap();
            let mut rhs = op.gain(&f1, &g).unwrap().scaled(a);
            rhs.axpy(b, &op.gain(&f2, &g).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + rhs.max_abs()));
        }
    }

    #[test]
    fn gain_and_absorption_are_nonnegative(seed in any::<u64>(), gamma in -0.5f64..0.0) {
        let grid = PhaseGrid::new(1.0, 4, 3.0, 4).unwrap();
        let k = CollisionKernel::abs_cos(gamma).unwrap();
        let op = CollisionOperator::new(&grid, &k, &SphereRule::product(2, 4).unwrap(), GainScheme::MonotoneCic);
        let (f, g) = (random_field(&grid, seed, 0.0), random_field(&grid, seed ^ 7, 0.0));
        let q = op.gain(&f, &g).unwrap();
        prop_assert!(q.min() >= -1e-12 * q.max_abs());
        let a = op.loss_rate(&g).unwrap();
        prop_assert!(a.min() >= -1e-12 * a.max_abs());
    }

    #[test]
    fn monitors_under_free_transport(seed in any::<u64>()) {
        // dt · dv / dx = 1: streaming permutes nodes exactly.
        let grid = PhaseGrid::new(2.0, 4, 2.0, 4).unwrap();
        let f0 = random_field(&grid, seed, 0.0);
        let tg = TimeGrid::new(0.0, 3.0, 1.0, Quadrature::Trapezoid).unwrap();
        let traj = free_trajectory(&f0, &tg).unwrap();
        let op = CollisionOperator::new(&grid, &CollisionKernel::abs_cos(0.0).unwrap(), &SphereRule::product(2, 4).unwrap(), GainScheme::MonotoneCic);
        let rep = monitor(&traj, &op, 0.5, 0.5).unwrap();
        prop_assert!(rep.mass_drift <= 1e-12);
        prop_assert!(rep.l1_mass_gap <= 1e-12);
        for w in rep.rows.windows(2) {
            prop_assert!(w[1].m_r >= w[0].m_r && w[1].e_sr >= w[0].e_sr);
            prop_assert!((w[1].integrability_norm - w[0].integrability_norm).abs() <= 1e-12 * w[0].integrability_norm);
        }
    }
}

#[test]
fn on_grid_scaling_matches_homogeneous_exponent() {
    let g = PhaseGrid::new(1.0, 4, 6.0, 64).unwrap();
    let f = DistributionField::from_fn(&g, |x, v| {
        let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        (1.0 + 0.3 * (std::f64::consts::PI * x[0]).cos()) * (-v2 / (2.0 * 0.5625)).exp()
    });
    for (lambda, beta, gamma, r) in [(2.0, 1.0, 0.0, 0.0), (0.5, -1.0, -0.5, 0.0), (2.0, 1.0, 0.0, 1.0), (0.5, -1.0, 0.0, 2.0)] {
        let p = ScalingParams::new(lambda, 0.0, beta).unwrap();
        let scaled = apply_scaling(&f, p, gamma, false).unwrap().field;
        let w = Weights::homogeneous(0.0, r);
        let n0 = weighted_norm_with(&f, w, NormMix::L2).unwrap();
        let n1 = weighted_norm_with(&scaled, w, NormMix::L2).unwrap();
        let measured = (n1 / n0).ln() / lambda.ln();
        let expected = p.norm_exponent(gamma, 0.0, r);
        assert!((measured - expected).abs() < 1e-6, "λ={lambda} r={r}: {measured} vs {expected}");
    }
}
