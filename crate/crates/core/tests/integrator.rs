use num_complex::Complex64;
use snls_core::field::{energy, mass};
use snls_core::*;
use std::f64::consts::PI;

fn smooth_initial(g: Grid) -> SpectralField {
    let mut u = SpectralField::zeros(g);
    u.set_coeff(&[0], Complex64::new(0.8, 0.0)).unwrap();
    u.set_coeff(&[1], Complex64::new(0.4, 0.3)).unwrap();
    u.set_coeff(&[-2], Complex64::new(0.0, 0.2)).unwrap();
    u
}

fn deterministic_solution(cfg: &SimConfig, t_end: f64) -> SpectralField {
    let phi = NoiseOperator::zero(cfg.grid);
    let mut stepper = Stepper::new(cfg, &phi).unwrap();
    let mut stream = NoiseStream::new(0, 0);
    let mut u = smooth_initial(cfg.grid);
    let steps = (t_end / cfg.dt).round() as usize;
    for _ in 0..steps {
        stepper.step(&mut u, &mut stream).unwrap();
    }
    u
}

fn observed_order(scheme: Scheme) -> f64 {
    let g = Grid::new(1, 64, 2.0 * PI).unwrap();
    let base = SimConfig::new(0.5, 1.0, g, 1e-3).unwrap().with_scheme(scheme);
    let reference = deterministic_solution(&base.with_dt(1.25e-4), 1.0);
    let errs: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| deterministic_solution(&base.with_dt(dt), 1.0).distance_sq(&reference).sqrt())
        .collect();
    ((errs[0] / errs[1]).log2() + (errs[1] / errs[2]).log2()) / 2.0
}

#[test]
fn strang_is_second_order_deterministically() {
    let p = observed_order(Scheme::Strang);
    assert!(p >= 1.9, "observed order {p}");
}

#[test]
fn lie_is_first_order_deterministically() {
    let p = observed_order(Scheme::Lie);
    assert!((0.9..1.3).contains(&p), "observed order {p}");
}

#[test]
fn weakly_damped_deterministic_flow_conserves_mass_and_energy() {
    let g = Grid::new(1, 128, 2.0 * PI).unwrap();
    let cfg = SimConfig::new(1e-12, 1.0, g, 1e-3).unwrap();
    let u0 = smooth_initial(g);
    let u = deterministic_solution(&cfg, 2.0);
    assert!((mass(&u) - mass(&u0)).abs() < 1e-10);
    assert!((energy(&u, 1.0) - energy(&u0, 1.0)).abs() < 1e-5);
}

/// Coarse steps driven by the exact aggregate of fine OU kicks converge
/// strongly at first order or better.
#[test]
fn pathwise_convergence_with_shared_noise() {
    let g = Grid::new(1, 64, 2.0 * PI).unwrap();
    let phi = NoiseOperator::band(g, 0.3, 8, 1.0).unwrap();
    let fine_dt = 2.5e-4;
    let t_end = 0.5;
    let n_fine = (t_end / fine_dt) as usize;
    let lambda = 0.5;
    let fine_cfg = SimConfig::new(lambda, 1.0, g, fine_dt).unwrap();
    let mut fine_stepper = Stepper::new(&fine_cfg, &phi).unwrap();

    let ratios = [16usize, 8, 4];
    let mut errors = vec![0.0; ratios.len()];
    let paths = 8;
    for path in 0..paths {
        let mut stream = NoiseStream::new(7, path);
        let kicks: Vec<Vec<Complex64>> = (0..n_fine)
            .map(|_| fine_stepper.draw_kick(&mut stream).to_vec())
            .collect();
        let mut reference = smooth_initial(g);
        for k in &kicks {
            fine_stepper.step_with_kick(&mut reference, k).unwrap();
        }
        for (e, &m) in errors.iter_mut().zip(&ratios) {
            let cfg = fine_cfg.with_dt(fine_dt * m as f64);
            let mut stepper = Stepper::new(&cfg, &phi).unwrap();
            let mut u = smooth_initial(g);
            for chunk in kicks.chunks(m) {
                let mut coarse = vec![Complex64::new(0.0, 0.0); g.len()];
                for (j, k) in chunk.iter().enumerate() {
                    let lag = (m - j - 1) as f64 * fine_dt;
                    for (i, c) in coarse.iter_mut().enumerate() {
                        *c += k[i] * linear_factor_for(g, i, lambda, lag);
                    }
                }
                stepper.step_with_kick(&mut u, &coarse).unwrap();
            }
            *e += u.distance_sq(&reference) / paths as f64;
        }
    }
    let errs: Vec<f64> = errors.iter().map(|e| e.sqrt()).collect();
    let p = ((errs[0] / errs[1]).log2() + (errs[1] / errs[2]).log2()) / 2.0;
    assert!(p >= 0.9, "pathwise order {p}, errors {errs:?}");
}

fn linear_factor_for(g: Grid, i: usize, lambda: f64, t: f64) -> Complex64 {
    snls_core::integrator::linear_factor(lambda, g.kappa_sq(i), t)
}

#[test]
fn zero_noise_zero_start_stays_zero() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let cfg = SimConfig::new(0.5, 1.0, g, 1e-2).unwrap();
    let phi = NoiseOperator::zero(g);
    let mut stepper = Stepper::new(&cfg, &phi).unwrap();
    let mut stream = NoiseStream::new(1, 0);
    let mut u = SpectralField::zeros(g);
    for _ in 0..50 {
        stepper.step(&mut u, &mut stream).unwrap();
    }
    assert!(u.coeffs().iter().all(|c| *c == Complex64::new(0.0, 0.0)));
}

#[test]
fn dealiasing_keeps_high_modes_empty() {
    let g = Grid::new(1, 64, 2.0 * PI).unwrap();
    let mut cfg = SimConfig::new(0.1, 1.0, g, 1e-2).unwrap();
    cfg.dealias = true;
    let phi = NoiseOperator::band(g, 0.5, 8, 0.5).unwrap();
    let mut stepper = Stepper::new(&cfg, &phi).unwrap();
    let mut stream = NoiseStream::new(3, 0);
    let mut u = smooth_initial(g);
    for _ in 0..200 {
        stepper.step(&mut u, &mut stream).unwrap();
    }
    for i in 0..g.len() {
        if g.sup_norm(i) > 21 {
            assert_eq!(u.coeffs()[i], Complex64::new(0.0, 0.0));
        }
    }
    assert!(u.nyquist_is_zero());
}
