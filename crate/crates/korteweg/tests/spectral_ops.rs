mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use korteweg::spectral::{DyadicDecomposition, SpectralField, TorusGrid};

#[test]
fn constant_field_transforms_to_pure_mean() {
    let grid = grid_2d(16);
    let c0 = 2.75;
    let samples = vec![c0; grid.total_points()];
    let f = SpectralField::from_physical(grid, 1, &samples).unwrap();
    assert!((f.mean_mode(0) - Complex64::new(c0, 0.0)).norm() < 1e-13);
    for (flat, v) in f.component(0).iter().enumerate() {
        if flat != 0 {
            assert!(v.norm() < 1e-13, "mode {flat} should vanish");
        }
    }
}

#[test]
fn pure_cosine_has_two_conjugate_coefficients() {
    let grid = grid_1d(16);
    let f = SpectralField::from_physical_fn(grid, 1, |_, x| {
        (2.0 * std::f64::consts::PI * x[0] / grid.side_length()).cos()
    });
    let coeffs = f.component(0);
    assert!((coeffs[1].norm() - 0.5).abs() < 1e-13);
    assert!((coeffs[15].norm() - 0.5).abs() < 1e-13);
    assert!((coeffs[1] - coeffs[15].conj()).norm() < 1e-13);
    let leak: f64 = (0..16)
        .filter(|&k| k != 1 && k != 15)
        .map(|k| coeffs[k].norm())
        .sum();
    assert!(leak < 1e-12);
}

#[test]
fn random_round_trip_max_error_within_1e12() {
    let mut r = rng(11);
    for &n in &[8usize, 32] {
        let grid = grid_2d(n);
        let total = grid.total_points();
        let samples: Vec<f64> = (0..total).map(|_| r.gen_range(-1.0..1.0)).collect();
        let f = SpectralField::from_physical(grid, 1, &samples).unwrap();
        let back = f.to_physical();
        let err = samples
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(err <= 1e-12, "round trip error {err}");
    }
}

#[test]
fn sample_count_mismatch_is_a_shape_error() {
    let grid = grid_2d(8);
    let err = SpectralField::from_physical(grid, 1, &[0.0; 7]).unwrap_err();
    assert!(matches!(err, korteweg::Error::Shape(_)));
}

#[test]
fn parseval_holds_on_random_fields() {
    let mut r = rng(12);
    let grid = grid_2d(16);
    let h = grid.spacing();
    for _ in 0..100 {
        let f = random_field(grid, 1, &mut r);
        let phys = f.to_physical();
        let phys_l2 = (phys.iter().map(|v| v * v).sum::<f64>() * h * h).sqrt();
        let spec_l2 = f.l2_norm();
        assert!(
            (phys_l2 - spec_l2).abs() <= 1e-12 * spec_l2.max(1e-300),
            "parseval defect {}",
            (phys_l2 - spec_l2).abs() / spec_l2
        );
    }
}

#[test]
fn lambda_power_zero_is_identity() {
    let mut r = rng(13);
    let grid = grid_2d(16);
    let f = random_field(grid, 1, &mut r);
    assert_eq!(f.lambda_power(0.0), f);
}

#[test]
fn lambda_power_two_matches_cosine_symbol() {
    let grid = grid_1d(32);
    let omega_index = 3.0;
    let f = SpectralField::from_physical_fn(grid, 1, |_, x| (omega_index * x[0]).cos());
    let lap = f.lambda_power(2.0);
    let expected = SpectralField::from_physical_fn(grid, 1, |_, x| {
        omega_index * omega_index * (omega_index * x[0]).cos()
    });
    assert!(max_phys_diff(&lap, &expected) < 1e-11);
}

#[test]
fn lambda_inverse_composes_to_identity_on_mean_free() {
    let mut r = rng(14);
    let grid = grid_2d(16);
    let f = random_mean_free_smooth(grid, 1, &mut r);
    let back = f.lambda_power(1.0).lambda_power(-1.0);
    assert!(max_phys_diff(&back, &f) <= 1e-11);
}

#[test]
fn strict_negative_power_rejects_nonzero_mean() {
    let grid = grid_2d(8);
    let samples = vec![1.0; grid.total_points()];
    let f = SpectralField::from_physical(grid, 1, &samples).unwrap();
    let err = f.lambda_power_strict(-1.0).unwrap_err();
    assert!(matches!(err, korteweg::Error::SingularOperator { .. }));
    assert!(f.lambda_power_strict(1.0).is_ok());
}

#[test]
fn gradient_fields_are_pure_q() {
    let mut r = rng(15);
    let grid = grid_2d(16);
    let g = random_mean_free_smooth(grid, 1, &mut r);
    let grad = g.gradient();
    let (p, q) = grad.leray_split();
    assert!(p.l2_norm() <= 1e-11 * grad.l2_norm());
    assert!(max_phys_diff(&q, &grad) <= 1e-11);
}

#[test]
fn divergence_free_fields_are_pure_p() {
    let mut r = rng(16);
    let grid = grid_2d(16);
    // A stream-function field is exactly divergence-free.
    let psi = random_mean_free_smooth(grid, 1, &mut r);
    let grad = psi.gradient();
    let stream = SpectralField::stack(&[&grad.extract(1).scaled(-1.0), &grad.extract(0)]);
    assert!(stream.divergence().l2_norm() <= 1e-11 * stream.l2_norm());
    let (_, q) = stream.leray_split();
    assert!(q.l2_norm() <= 1e-11 * stream.l2_norm());
}

#[test]
fn leray_parts_sum_and_p_is_divergence_free() {
    let mut r = rng(17);
    let grid = grid_2d(32);
    let m = random_field(grid, 2, &mut r);
    let (p, q) = m.leray_split();
    let mut sum = p.clone();
    sum.add_scaled(1.0, &q);
    assert!(max_phys_diff(&sum, &m) <= 1e-11 * m.linf_norm().max(1.0));
    assert!(p.divergence().l2_norm() <= 1e-11 * m.l2_norm());
}

#[test]
fn projections_are_idempotent_and_complementary() {
    let mut r = rng(18);
    let grid = grid_2d(16);
    for _ in 0..10 {
        let m = random_field(grid, 2, &mut r);
        let scale = m.l2_norm();
        let (p, q) = m.leray_split();
        let (pp, pq) = p.leray_split();
        let (qp, qq) = q.leray_split();
        assert!(pp.sub(&p).l2_norm() <= 1e-11 * scale, "P not idempotent");
        assert!(qq.sub(&q).l2_norm() <= 1e-11 * scale, "Q not idempotent");
        assert!(pq.l2_norm() <= 1e-11 * scale, "Q P != 0");
        assert!(qp.l2_norm() <= 1e-11 * scale, "P Q != 0");
    }
}

#[test]
fn leray_mean_mode_goes_to_p() {
    let grid = grid_2d(8);
    let total = grid.total_points();
    let mut samples = vec![1.5; 2 * total];
    samples[total..].iter_mut().for_each(|v| *v = -0.5);
    let m = SpectralField::from_physical(grid, 2, &samples).unwrap();
    let (p, q) = m.leray_split();
    assert!((p.mean_mode(0) - Complex64::new(1.5, 0.0)).norm() < 1e-13);
    assert!((p.mean_mode(1) - Complex64::new(-0.5, 0.0)).norm() < 1e-13);
    assert!(q.mean_mode(0).norm() < 1e-15);
    assert!(q.mean_mode(1).norm() < 1e-15);
}

#[test]
fn block_of_annulus_supported_field_is_identity() {
    let grid = grid_2d(64);
    let dec = DyadicDecomposition::for_grid(&grid);
    let l0 = 3;
    // Field supported exactly where phi_{l0} = 1 (a thin shell inside the
    // annulus), so Delta_{l0} f = f and far blocks vanish.
    let mut f = SpectralField::zeros(grid, 1);
    let target = 2f64.powi(l0) * 1.2;
    for flat in 1..grid.total_points() {
        if grid.has_nyquist(flat) {
            continue;
        }
        let xi = grid.xi_sq(flat).sqrt();
        if (xi - target).abs() < 0.4 && dec.phi(l0, xi) > 0.999999 {
            f.coeffs_mut()[flat] = Complex64::new(0.3, 0.0);
        }
    }
    assert!(f.l2_norm() > 0.0, "shell not empty");
    let block = dec.block(&f, l0);
    assert!(block.sub(&f).l2_norm() <= 1e-10 * f.l2_norm());
    for l in dec.blocks() {
        if (l - l0).abs() >= 2 {
            assert!(dec.block(&f, l).l2_norm() <= 1e-12 * f.l2_norm());
        }
    }
}

#[test]
fn blocks_sum_to_field_minus_mean() {
    let mut r = rng(19);
    let grid = grid_2d(32);
    let f = random_field(grid, 1, &mut r);
    let dec = DyadicDecomposition::for_grid(&grid);
    let mut sum = SpectralField::zeros(grid, 1);
    for l in dec.blocks() {
        sum.add_scaled(1.0, &dec.block(&f, l));
    }
    let homog = f.homogeneous_part();
    assert!(max_phys_diff(&sum, &homog) <= 1e-10 * f.linf_norm().max(1.0));
}

#[test]
fn out_of_range_block_is_empty() {
    let mut r = rng(20);
    let grid = grid_2d(16);
    let f = random_field(grid, 1, &mut r);
    let dec = DyadicDecomposition::for_grid(&grid);
    let (l_min, l_max) = dec.block_range();
    assert_eq!(dec.block(&f, l_min - 5).l2_norm(), 0.0);
    assert_eq!(dec.block(&f, l_max + 5).l2_norm(), 0.0);
}

#[test]
fn gaussian_profile_decays_super_exponentially() {
    let grid = grid_2d(64);
    // fhat = exp(-sigma^2 |xi|^2 / 2), a spectral Gaussian.
    let sigma_sq = 0.02;
    let delta = {
        let mut f = SpectralField::zeros(grid, 1);
        f.coeffs_mut()[0] = Complex64::new(1.0, 0.0);
        for flat in 1..grid.total_points() {
            f.coeffs_mut()[flat] = Complex64::new(1.0, 0.0);
        }
        f.scale_modes(1.0, |xi_sq| (-sigma_sq * xi_sq / 2.0).exp())
    };
    let dec = DyadicDecomposition::for_grid(&grid);
    let profile = dec.profile(&delta);
    let logs: Vec<f64> = profile
        .iter()
        .filter(|(l, v)| *l >= 2 && *v > 1e-250)
        .map(|(_, v)| v.ln())
        .collect();
    assert!(logs.len() >= 4, "need several usable octaves");
    // Super-exponential decay: successive log-drops grow.
    for w in logs.windows(3) {
        let drop1 = w[0] - w[1];
        let drop2 = w[1] - w[2];
        assert!(drop2 > drop1 * 1.5, "drops {drop1} then {drop2}");
    }
}

#[test]
fn block_almost_orthogonality_bounds() {
    let mut r = rng(21);
    let grid = grid_2d(32);
    let dec = DyadicDecomposition::for_grid(&grid);
    for _ in 0..20 {
        let f = random_field(grid, 1, &mut r).homogeneous_part();
        let total_sq = f.l2_norm().powi(2);
        let block_sq: f64 = dec.blocks().map(|l| dec.block(&f, l).l2_norm().powi(2)).sum();
        // Two-sided equivalence with at most 3 adjacent overlapping blocks:
        // sum phi_l = 1 and phi_l in [0, 1] give
        // ||f||^2 / 3 <= sum_l ||Delta_l f||^2 <= ||f||^2.
        assert!(block_sq <= total_sq * (1.0 + 1e-6));
        assert!(block_sq >= total_sq / 3.0);
        assert!(total_sq >= block_sq / 3.0);
    }
}

#[test]
fn blocks_commute_with_derivatives() {
    let mut r = rng(22);
    let grid = grid_2d(32);
    let dec = DyadicDecomposition::for_grid(&grid);
    let f = random_smooth(grid, 1, &mut r);
    let grad = f.gradient();
    for l in [1, 2, 3] {
        let block_then_grad = dec.block(&f, l).gradient();
        let grad_then_block = dec.block(&grad, l);
        assert!(
            block_then_grad.sub(&grad_then_block).l2_norm() <= 1e-11 * grad.l2_norm().max(1.0)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prop_round_trip_and_reality(seed in 0u64..1000, n_pick in 0usize..3) {
        let n = [8, 16, 32][n_pick];
        let grid = grid_2d(n);
        let mut r = rng(seed);
        let f = random_field(grid, 2, &mut r);
        prop_assert!(f.reality_defect() <= 1e-12);
        let back = SpectralField::from_physical(grid, 2, &f.to_physical()).unwrap();
        prop_assert!(back.sub(&f).l2_norm() <= 1e-12 * f.l2_norm().max(1e-12));
    }

    #[test]
    fn prop_multipliers_preserve_reality(seed in 0u64..1000) {
        let grid = grid_2d(16);
        let mut r = rng(seed);
        let f = random_field(grid, 2, &mut r);
        let (p, q) = f.leray_split();
        prop_assert!(p.reality_defect() <= 1e-11);
        prop_assert!(q.reality_defect() <= 1e-11);
        prop_assert!(f.lambda_power(1.3).reality_defect() <= 1e-11);
    }
}

#[test]
fn grid_rejects_dimension_mismatch_between_fields() {
    let a = SpectralField::zeros(grid_2d(8), 1);
    let b = SpectralField::zeros(grid_2d(16), 1);
    assert!(a.same_grid(&b).is_err());
}

#[test]
fn nyquist_modes_are_cleared_by_multipliers() {
    let grid = grid_1d(8);
    let mut f = SpectralField::zeros(grid, 1);
    f.coeffs_mut()[4] = Complex64::new(1.0, 0.0); // Nyquist index n/2
    let out = f.scale_modes(1.0, |_| 1.0);
    assert_eq!(out.component(0)[4], Complex64::default());
}
