use num_complex::Complex64;
use snls_core::diagnostics::{mass_balance_residual, transient_mass_curve};
use snls_core::measures::{kb_average, kb_average_window, stationarity_gap, wasserstein1};
use snls_core::noise::{ou_kick_variance, sample_increment, sample_ou_kick};
use snls_core::*;
use std::f64::consts::PI;

fn torus() -> Grid {
    Grid::new(1, 32, 2.0 * PI).unwrap()
}

fn small_plan(n: usize, seed: u64, dt: f64, interval: f64, t_end: f64) -> RunPlan {
    let mut plan = RunPlan::new(n, seed, Schedule::uniform(dt, interval, t_end).unwrap());
    plan.k_report = 3;
    plan.tail_cutoffs = vec![2, 4, 8];
    plan
}

#[test]
fn seed_determinism_across_worker_counts() {
    let g = torus();
    let cfg = SimConfig::new(0.5, 1.0, g, 1e-2).unwrap();
    let phi = NoiseOperator::band(g, 0.2, 4, 1.0).unwrap();
    let mut plan = small_plan(12, 42, 1e-2, 0.1, 1.0);
    plan.workers = Some(1);
    let one = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &plan).unwrap();
    plan.workers = Some(4);
    let many = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &plan).unwrap();
    for (a, b) in one.trajectories().iter().zip(many.trajectories()) {
        assert_eq!(a.index, b.index);
        for o in 0..one.observables().len() {
            for t in 0..one.sample_times().len() {
                assert_eq!(one.value(a, o, t).to_bits(), many.value(b, o, t).to_bits());
            }
        }
    }
    plan.master_seed = 43;
    let other = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &plan).unwrap();
    let o = one.observable_index(Observable::Mass).unwrap();
    assert_ne!(
        one.value(&one.trajectories()[0], o, 5),
        other.value(&other.trajectories()[0], o, 5)
    );
}

#[test]
fn sampling_schedule_does_not_change_paths() {
    let g = torus();
    let cfg = SimConfig::new(0.5, 1.0, g, 1e-2).unwrap();
    let phi = NoiseOperator::band(g, 0.2, 4, 1.0).unwrap();
    let dense = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &small_plan(4, 9, 1e-2, 0.05, 1.0)).unwrap();
    let sparse = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &small_plan(4, 9, 1e-2, 0.5, 1.0)).unwrap();
    for t in [0.5, 1.0] {
        let a = dense.cross_section(Observable::Energy, dense.time_index(t).unwrap()).unwrap();
        let b = sparse.cross_section(Observable::Energy, sparse.time_index(t).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn trajectory_prefix_is_independent_of_ensemble_size() {
    let g = torus();
    let cfg = SimConfig::new(0.5, 0.0, g, 1e-2).unwrap();
    let phi = NoiseOperator::band(g, 0.2, 4, 1.0).unwrap();
    let a = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &small_plan(3, 5, 1e-2, 0.1, 0.5)).unwrap();
    let b = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &small_plan(8, 5, 1e-2, 0.1, 0.5)).unwrap();
    let o = a.observable_index(Observable::Mass).unwrap();
    for (x, y) in a.trajectories().iter().zip(b.trajectories()) {
        assert_eq!(a.value(x, o, 5), b.value(y, o, 5));
    }
}

#[test]
fn zero_noise_from_zero_stays_zero() {
    let g = torus();
    let cfg = SimConfig::new(0.5, 1.0, g, 1e-2).unwrap();
    let rec = run_ensemble(
        &cfg,
        &NoiseOperator::zero(g),
        &InitialLaw::Zero,
        &small_plan(3, 1, 1e-2, 0.1, 1.0),
    )
    .unwrap();
    for t in 0..rec.sample_times().len() {
        assert!(rec.cross_section(Observable::Mass, t).unwrap().iter().all(|&m| m == 0.0));
    }
    assert_eq!(stationarity_gap(&rec, "mass", 0.0, 1.0).unwrap(), 0.0);
}

#[test]
fn linear_decay_and_kb_average_closed_form() {
    // φ ≡ 0, σ = 0, fixed start: M(t) = e^{−2λt} M(0) exactly.
    let g = torus();
    let lambda = 0.5;
    let cfg = SimConfig::new(lambda, 0.0, g, 1e-3).unwrap();
    let mut u0 = SpectralField::zeros(g);
    u0.set_coeff(&[1], Complex64::new(1.0, 0.5)).unwrap();
    u0.set_coeff(&[-3], Complex64::new(0.2, 0.0)).unwrap();
    let m0 = snls_core::field::mass(&u0);
    let rec = run_ensemble(
        &cfg,
        &NoiseOperator::zero(g),
        &InitialLaw::Fixed(u0),
        &small_plan(1, 0, 1e-3, 0.01, 4.0),
    )
    .unwrap();
    let tr = &rec.trajectories()[0];
    let o = rec.observable_index(Observable::Mass).unwrap();
    for (ti, t) in rec.sample_times().iter().enumerate() {
        let exact = (-2.0 * lambda * t).exp() * m0;
        assert!((rec.value(tr, o, ti) - exact).abs() <= 1e-11 * m0);
    }
    let n = 4.0;
    let mu = kb_average(&rec, "mass", n).unwrap();
    let integral = m0 * (1.0 - (-2.0 * lambda * n).exp()) / (2.0 * lambda * n);
    // Riemann (end-point inclusive) error is O(h) with h = 0.01.
    assert!((mu.mean() - integral).abs() <= 0.01 * m0, "{} vs {integral}", mu.mean());
    // Constant observable: point mass.
    let k = kb_average(&rec, "mode_2", n).unwrap();
    assert!(k.samples().iter().all(|s| s.0 == 0.0));
}

#[test]
fn kb_pooling_is_consistent_with_partitions() {
    let g = torus();
    let cfg = SimConfig::new(0.5, 1.0, g, 1e-2).unwrap();
    let phi = NoiseOperator::band(g, 0.2, 4, 1.0).unwrap();
    let rec = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &small_plan(6, 2, 1e-2, 0.1, 2.0)).unwrap();
    let full = kb_average_window(&rec, Observable::Mass, 0.0, 2.0).unwrap();
    // [0, 0.9] and [1.0, 2.0] partition the 21 sample times as 10 + 11.
    let a = kb_average_window(&rec, Observable::Mass, 0.0, 0.9).unwrap();
    let b = kb_average_window(&rec, Observable::Mass, 1.0, 2.0).unwrap();
    let merged = EmpiricalMeasure::mixture(&[(&a, 10.0), (&b, 11.0)]).unwrap();
    assert!(wasserstein1(&full, &merged) <= 1e-15);
    assert!((full.mean() - merged.mean()).abs() <= 1e-15);
}

#[test]
fn kb_average_errors() {
    let g = torus();
    let cfg = SimConfig::new(0.5, 0.0, g, 1e-2).unwrap();
    let phi = NoiseOperator::band(g, 0.2, 4, 1.0).unwrap();
    let rec = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &small_plan(2, 2, 1e-2, 0.1, 1.0)).unwrap();
    assert!(kb_average(&rec, "mass", 5.0).is_err());
    assert!(kb_average_window(&rec, Observable::Mass, 0.5, 0.5).is_err());
    assert!(kb_average(&rec, "nonsense", 1.0).is_err());
}

#[test]
fn csv_export_layout() {
    let g = torus();
    let cfg = SimConfig::new(0.5, 1.0, g, 1e-2).unwrap();
    let phi = NoiseOperator::band(g, 0.2, 4, 1.0).unwrap();
    let rec = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &small_plan(3, 2, 1e-2, 0.25, 1.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = snls_core::io::write_record(&rec, dir.path()).unwrap();
    assert_eq!(files.len(), rec.observables().len() + 2);
    let mass = std::fs::read_to_string(dir.path().join("mass.csv")).unwrap();
    let mut lines = mass.lines();
    assert_eq!(lines.next().unwrap(), "t,traj_0,traj_1,traj_2");
    assert_eq!(lines.count(), 5);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("t,observable,mean,std_error,n_valid\n"));
    assert_eq!(summary.lines().count(), 1 + 5 * rec.observables().len());
    assert!(dir.path().join("mode_-3.csv").exists());
    assert!(dir.path().join("tail_8.csv").exists());
}

#[test]
fn transient_and_balance_on_a_small_linear_run() {
    let g = torus();
    let cfg = SimConfig::new(0.5, 0.0, g, 1e-2).unwrap();
    let phi = NoiseOperator::band(g, 0.3, 4, 1.0).unwrap();
    let rec = run_ensemble(&cfg, &phi, &InitialLaw::Zero, &small_plan(200, 4, 1e-2, 0.1, 3.0)).unwrap();
    let curve = transient_mass_curve(&rec, &cfg, &phi).unwrap();
    assert_eq!(curve[0].estimated, 0.0);
    assert!(curve.iter().all(|p| p.passes()));
    let report = mass_balance_residual(&rec, &cfg, &phi, (1.0, 3.0)).unwrap();
    assert!(report.passes(0.0), "{report:?}");
    // A wrong λ must be detected.
    let mut wrong = cfg;
    wrong.lambda = 0.8;
    let bad = mass_balance_residual(&rec, &wrong, &phi, (1.0, 3.0)).unwrap();
    assert!(!bad.passes(1e-3 * phi.hs_norm_sq(HsWeight::Identity)));
}

#[test]
fn noise_increment_isometry_and_ou_variance() {
    let g = torus();
    let phi = NoiseOperator::band(g, 0.4, 5, 0.5).unwrap();
    let hs = phi.hs_norm_sq(HsWeight::Identity);
    let n = 20_000;
    let dt = 0.01;
    let mut stream = NoiseStream::new(11, 0);
    let samples: Vec<f64> = (0..n)
        .map(|_| snls_core::field::mass(&sample_increment(&mut stream, &phi, dt)))
        .collect();
    let e = Estimate::from_samples(&samples);
    assert!((e.mean - hs * dt).abs() <= 4.0 * e.std_error, "{e} vs {}", hs * dt);

    let lambda = 0.5;
    let h = 0.1;
    assert!((ou_kick_variance(lambda, h) - 0.09516258196404048).abs() < 1e-15);
    let samples: Vec<f64> = (0..n)
        .map(|_| snls_core::field::mass(&sample_ou_kick(&mut stream, &phi, lambda, h)))
        .collect();
    let e = Estimate::from_samples(&samples);
    let target = hs * ou_kick_variance(lambda, h);
    assert!((e.mean - target).abs() <= 4.0 * e.std_error, "{e} vs {target}");
}

#[test]
fn blowup_is_flagged_and_excluded() {
    let g = torus();
    let mut cfg = SimConfig::new(0.01, 3.0, g, 1e-2).unwrap();
    cfg.blowup_guard = 5.0;
    let mut u0 = SpectralField::zeros(g);
    u0.set_coeff(&[0], Complex64::new(2.0, 0.0)).unwrap();
    u0.set_coeff(&[1], Complex64::new(2.0, 0.0)).unwrap();
    let phi = NoiseOperator::band(g, 0.5, 4, 0.0).unwrap();
    let rec = run_ensemble(&cfg, &phi, &InitialLaw::Fixed(u0), &small_plan(3, 1, 1e-2, 0.1, 1.0)).unwrap();
    assert_eq!(rec.n_flagged(), 3);
    assert!(rec.estimate_observable("mass", 1.0).unwrap().mean.is_nan()
        || rec.estimate_observable("mass", 1.0).unwrap().n_valid == 0);
}
