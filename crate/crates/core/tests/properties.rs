use num_complex::Complex64;
use proptest::prelude::*;
use snls_core::field::{mass, power_integral, tail_mass};
use snls_core::integrator::{linear_factor, nonlinear_substep};
use snls_core::measures::wasserstein1;
use snls_core::*;
use std::f64::consts::PI;

fn grid(dim: usize, n: usize) -> Grid {
    Grid::new(dim, n, 2.0 * PI).unwrap()
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn grid_and_values() -> impl Strategy<Value = (Grid, Vec<Complex64>)> {
    prop_oneof![Just(grid(1, 64)), Just(grid(1, 16)), Just(grid(2, 16))]
        .prop_flat_map(|g| (Just(g), complex_vec(g.len())))
}

fn spectral(g: Grid, v: Vec<Complex64>) -> SpectralField {
    let mut f = SpectralField::from_coeffs(g, v).unwrap();
    f.project_nyquist();
    f
}

proptest! {
    #[test]
    fn parseval((g, v) in grid_and_values()) {
        let u = PhysicalField::from_values(g, v).unwrap();
        let quad: f64 = u.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.cell_volume();
        let m = mass(&u.to_spectral());
        prop_assert!((quad - m).abs() <= 1e-10 * quad.max(1.0));
    }

    #[test]
    fn transform_round_trip((g, v) in grid_and_values()) {
        let f = SpectralField::from_coeffs(g, v).unwrap();
        let back = f.to_physical().to_spectral();
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn nonlinear_substep_preserves_modulus(
        (g, v) in grid_and_values(),
        sigma in prop::sample::select(vec![0.0, 0.5, 1.0, 2.0]),
        dt in 1e-4f64..0.5,
    ) {
        let f = spectral(g, v);
        let before = f.to_physical();
        let after = nonlinear_substep(&f, sigma, dt);
        // Pointwise phase rotation, then the Nyquist row is projected out:
        // compare against the same projection of the exact rotated values.
        let rotated: Vec<Complex64> = before
            .values()
            .iter()
            .map(|z| z * Complex64::from_polar(1.0, z.norm_sqr().powf(sigma) * dt))
            .collect();
        let mut exact = PhysicalField::from_values(g, rotated).unwrap().to_spectral();
        exact.project_nyquist();
        prop_assert!((mass(&after) - mass(&exact)).abs() <= 1e-10 * mass(&exact).max(1.0));
        if sigma == 0.0 {
            prop_assert!((mass(&after) - mass(&f)).abs() <= 1e-10 * mass(&f).max(1.0));
        }
    }

    #[test]
    fn nonlinear_substep_mass_on_resolved_fields(
        amps in complex_vec(5),
        sigma in prop::sample::select(vec![1.0, 2.0]),
        dt in 1e-4f64..0.1,
    ) {
        // Low modes and small time: the rotated field stays resolved on
        // N = 256, so mass is preserved to round-off.
        let g = grid(1, 256);
        let mut f = SpectralField::zeros(g);
        for (k, a) in (-2i64..=2).zip(&amps) {
            f.set_coeff(&[k], a * 0.3).unwrap();
        }
        let before = power_integral(&f.to_physical(), 2.0);
        let out = nonlinear_substep(&f, sigma, dt);
        prop_assert!((mass(&out) - mass(&f)).abs() <= 1e-10, "{} vs {}", mass(&out), mass(&f));
        let after = power_integral(&out.to_physical(), 2.0);
        prop_assert!((after - before).abs() <= 1e-10);
    }

    #[test]
    fn exact_linear_decay(k in -20i64..=20, lambda in 0.0f64..3.0, dt in 0.0f64..2.0) {
        let g = grid(1, 64);
        let mut f = SpectralField::basis(g, &[k]).unwrap();
        let factor = linear_factor(lambda, g.kappa_sq(g.index_of(&[k]).unwrap()), dt);
        f.scale(factor);
        prop_assert!((mass(&f) - (-2.0 * lambda * dt).exp()).abs() <= 1e-14);
        let c = f.coeff(&[k]).unwrap();
        let expected = Complex64::new(-lambda * dt, -((k * k) as f64) * dt).exp();
        prop_assert!((c - expected).norm() <= 1e-14);
    }

    #[test]
    fn tail_mass_is_nonincreasing((g, v) in grid_and_values(), r in 0.0f64..2.0) {
        let f = spectral(g, v);
        let tails: Vec<f64> = (0..=g.n() / 2).map(|c| tail_mass(&f, c, r)).collect();
        prop_assert!(tails.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(tails[g.n() / 2], 0.0);
    }

    #[test]
    fn wasserstein_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 1..30),
        b in prop::collection::vec(-5.0f64..5.0, 1..30),
        c in prop::collection::vec(-5.0f64..5.0, 1..30),
    ) {
        let (ma, mb, mc) = (
            EmpiricalMeasure::from_values(&a).unwrap(),
            EmpiricalMeasure::from_values(&b).unwrap(),
            EmpiricalMeasure::from_values(&c).unwrap(),
        );
        let ab = wasserstein1(&ma, &mb);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - wasserstein1(&mb, &ma)).abs() <= 1e-12);
        prop_assert!(ab <= wasserstein1(&ma, &mc) + wasserstein1(&mc, &mb) + 1e-12);
        let mut shuffled = a.clone();
        shuffled.reverse();
        prop_assert_eq!(wasserstein1(&ma, &EmpiricalMeasure::from_values(&shuffled).unwrap()), 0.0);
    }

    #[test]
    fn wasserstein_matches_sorted_formula(
        a in prop::collection::vec(-5.0f64..5.0, 1..20),
        shift in -3.0f64..3.0,
    ) {
        // Equal sample counts: W1 is the mean absolute difference of the
        // order statistics.
        let mut b: Vec<f64> = a.iter().map(|x| x * 0.7 + shift).collect();
        let mut sa = a.clone();
        sa.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let brute: f64 = sa.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
        let w = wasserstein1(
            &EmpiricalMeasure::from_values(&a).unwrap(),
            &EmpiricalMeasure::from_values(&b).unwrap(),
        );
        prop_assert!((w - brute).abs() <= 1e-10);
    }
}
