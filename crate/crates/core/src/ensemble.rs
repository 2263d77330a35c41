//! Monte Carlo driver: independent trajectories from an initial law, with
//! observables recorded on a fixed sampling schedule.
//!
//! Trajectory `i` draws all of its randomness (initial state, then noise)
//! from `NoiseStream::new(master_seed, i)`, and results are gathered in
//! index order. Output is therefore bit-identical for any worker count.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{self, Grid, SpectralField, Transform};
use crate::integrator::{SimConfig, Stepper};
use crate::noise::{NoiseOperator, NoiseStream};

/// Law of `u₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Zero,
    Fixed(SpectralField),
    /// Independent circular Gaussians `û_k = s_k (ξ¹ + iξ²)/√2`; one scale
    /// per flat mode.
    GaussianModes(Vec<f64>),
}

impl InitialLaw {
    /// Gaussian modes with `s_k = amplitude (1+|k|²)^{−decay_power}` on
    /// `|k|_∞ ≤ k_max`.
    pub fn gaussian_band(grid: Grid, amplitude: f64, k_max: usize, decay_power: f64) -> Result<Self> {
        let shape = NoiseOperator::band(grid, amplitude, k_max, decay_power)?;
        Ok(InitialLaw::GaussianModes(
            shape.amplitudes().iter().map(|c| c.re).collect(),
        ))
    }

    pub fn sample(&self, grid: Grid, stream: &mut NoiseStream) -> Result<SpectralField> {
        match self {
            InitialLaw::Zero => Ok(SpectralField::zeros(grid)),
            InitialLaw::Fixed(f) => {
                if f.grid() != &grid {
                    return Err(Error::Config("initial field grid differs from simulation grid".into()));
                }
                let mut f = f.clone();
                f.project_nyquist();
                Ok(f)
            }
            InitialLaw::GaussianModes(scales) => {
                if scales.len() != grid.len() {
                    return Err(Error::ShapeMismatch {
                        expected: grid.len(),
                        found: scales.len(),
                    });
                }
                let mut f = SpectralField::zeros(grid);
                for (i, (c, s)) in f.coeffs_mut().iter_mut().zip(scales).enumerate() {
                    if *s != 0.0 && !grid.is_nyquist(i) {
                        *c = *s * stream.complex_normal();
                    }
                }
                Ok(f)
            }
        }
    }
}

/// Scalar observable recorded along trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    /// `M = ‖u‖²_{L²}`
    Mass,
    /// `H(u)`
    Energy,
    /// `F₁(u) = (1/(2σ+2))∫|u|^{2σ+2}`
    F1,
    /// `‖u‖²_{H¹}`
    H1,
    /// `∫|u|^{2σ}`
    PowSigma,
    /// `Σ_i Re(u, Φe_i)² = ½ Σ_k |φ_k|² |û_k|²`
    NoiseProjection,
    /// `|û_k|²` at a flat mode index.
    Mode(usize),
    /// `tail_mass(u, cutoff, 1)`
    Tail(usize),
}

impl Observable {
    pub fn name(&self, grid: &Grid) -> String {
        match self {
            Observable::Mass => "mass".into(),
            Observable::Energy => "energy".into(),
            Observable::F1 => "f1".into(),
            Observable::H1 => "h1".into(),
            Observable::PowSigma => "pow_2sigma".into(),
            Observable::NoiseProjection => "noise_proj".into(),
            Observable::Mode(i) => format!("mode_{}", grid.mode_label(*i)),
            Observable::Tail(n) => format!("tail_{n}"),
        }
    }

    pub fn parse(name: &str, grid: &Grid) -> Result<Self> {
        let unknown = || Error::UnknownObservable(name.to_string());
        Ok(match name {
            "mass" => Observable::Mass,
            "energy" => Observable::Energy,
            "f1" => Observable::F1,
            "h1" => Observable::H1,
            "pow_2sigma" => Observable::PowSigma,
            "noise_proj" => Observable::NoiseProjection,
            _ => {
                if let Some(rest) = name.strip_prefix("mode_") {
                    let k: Vec<i64> = rest
                        .split('_')
                        .map(|p| p.parse().map_err(|_| unknown()))
                        .collect::<Result<_>>()?;
                    Observable::Mode(grid.index_of(&k).ok_or_else(unknown)?)
                } else if let Some(rest) = name.strip_prefix("tail_") {
                    Observable::Tail(rest.parse().map_err(|_| unknown())?)
                } else {
                    return Err(unknown());
                }
            }
        })
    }
}

/// Observation times, stored as step counts of the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    dt: f64,
    steps: Vec<usize>,
}

impl Schedule {
    /// `0, interval, 2·interval, …, t_end`.
    pub fn uniform(dt: f64, interval: f64, t_end: f64) -> Result<Self> {
        let stride = steps_for(dt, interval)?;
        let last = steps_for(dt, t_end)?;
        if stride == 0 {
            return Err(Error::Config("sampling interval must be at least one step".into()));
        }
        Ok(Self {
            dt,
            steps: (0..=last).step_by(stride).collect(),
        })
    }

    pub fn from_times(dt: f64, times: &[f64]) -> Result<Self> {
        let mut steps = times
            .iter()
            .map(|&t| steps_for(dt, t))
            .collect::<Result<Vec<_>>>()?;
        steps.sort_unstable();
        steps.dedup();
        Ok(Self { dt, steps })
    }

    pub fn empty(dt: f64) -> Self {
        Self { dt, steps: Vec::new() }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&s| s as f64 * self.dt).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_step(&self) -> usize {
        self.steps.last().copied().unwrap_or(0)
    }

    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        let step = steps_for(self.dt, t).ok()?;
        self.steps.binary_search(&step).ok()
    }
}

fn steps_for(dt: f64, t: f64) -> Result<usize> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("time {t} must be finite and >= 0")));
    }
    let s = (t / dt).round();
    if (s * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(Error::Config(format!("time {t} is not a multiple of dt = {dt}")));
    }
    Ok(s as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub n_traj: usize,
    pub master_seed: u64,
    pub schedule: Schedule,
    /// Times at which full spectral states are kept.
    pub snapshots: Schedule,
    /// Record `|û_k|²` for `|k|_∞ ≤ k_report`.
    pub k_report: usize,
    pub tail_cutoffs: Vec<usize>,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
}

impl RunPlan {
    pub fn new(n_traj: usize, master_seed: u64, schedule: Schedule) -> Self {
        let dt = schedule.dt();
        Self {
            n_traj,
            master_seed,
            schedule,
            snapshots: Schedule::empty(dt),
            k_report: 0,
            tail_cutoffs: Vec::new(),
            workers: None,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_valid: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN, n_valid: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error, n_valid: n }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} ± {:.2e} (n={})", self.mean, self.std_error, self.n_valid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowUpEvent {
    pub time: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub index: u64,
    /// Time-major: `values[t * n_obs + o]`.
    values: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub blowup: Option<BlowUpEvent>,
}

impl TrajectoryRecord {
    pub fn is_flagged(&self) -> bool {
        self.blowup.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRecord {
    pub config: SimConfig,
    pub master_seed: u64,
    observables: Vec<Observable>,
    schedule: Schedule,
    snapshot_schedule: Schedule,
    trajectories: Vec<TrajectoryRecord>,
}

impl EnsembleRecord {
    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.schedule.times()
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshot_schedule.times()
    }

    pub fn trajectories(&self) -> &[TrajectoryRecord] {
        &self.trajectories
    }

    pub fn valid(&self) -> impl Iterator<Item = &TrajectoryRecord> {
        self.trajectories.iter().filter(|t| !t.is_flagged())
    }

    pub fn n_traj(&self) -> usize {
        self.trajectories.len()
    }

    pub fn n_valid(&self) -> usize {
        self.valid().count()
    }

    pub fn n_flagged(&self) -> usize {
        self.n_traj() - self.n_valid()
    }

    pub fn grid(&self) -> &Grid {
        &self.config.grid
    }

    pub fn observable(&self, name: &str) -> Result<Observable> {
        let obs = Observable::parse(name, self.grid())?;
        self.observable_index(obs)?;
        Ok(obs)
    }

    pub fn observable_index(&self, obs: Observable) -> Result<usize> {
        self.observables
            .iter()
            .position(|o| *o == obs)
            .ok_or_else(|| Error::UnknownObservable(obs.name(self.grid())))
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.schedule.index_of_time(t).ok_or(Error::TimeNotSampled(t))
    }

    /// Sample-time indices with `t0 ≤ t ≤ t1`.
    pub fn time_indices_in(&self, t0: f64, t1: f64) -> Vec<usize> {
        let tol = 1e-9 * self.schedule.dt();
        self.sample_times()
            .iter()
            .enumerate()
            .filter(|(_, &t)| t >= t0 - tol && t <= t1 + tol)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn value(&self, traj: &TrajectoryRecord, obs_index: usize, time_index: usize) -> f64 {
        traj.values[time_index * self.observables.len() + obs_index]
    }

    /// Time series of one observable along one trajectory.
    pub fn series(&self, traj: &TrajectoryRecord, obs: Observable) -> Result<Vec<f64>> {
        let o = self.observable_index(obs)?;
        Ok((0..self.schedule.len()).map(|t| self.value(traj, o, t)).collect())
    }

    /// Values of an observable at one time across non-flagged trajectories.
    pub fn cross_section(&self, obs: Observable, time_index: usize) -> Result<Vec<f64>> {
        let o = self.observable_index(obs)?;
        Ok(self.valid().map(|tr| self.value(tr, o, time_index)).collect())
    }

    /// Sample mean and standard error of `ξ(u_t)` over non-flagged
    /// trajectories.
    pub fn estimate_observable(&self, name: &str, t: f64) -> Result<Estimate> {
        let obs = self.observable(name)?;
        let ti = self.time_index(t)?;
        Ok(Estimate::from_samples(&self.cross_section(obs, ti)?))
    }

    /// Mean over `[t0, t1]` of each trajectory's time series, then mean and
    /// standard error across trajectories.
    pub fn window_estimate(&self, obs: Observable, t0: f64, t1: f64) -> Result<Estimate> {
        let idx = self.time_indices_in(t0, t1);
        if idx.is_empty() {
            return Err(Error::DegenerateWindow(format!("no samples in [{t0}, {t1}]")));
        }
        let o = self.observable_index(obs)?;
        self.per_trajectory(|tr| {
            idx.iter().map(|&t| self.value(tr, o, t)).sum::<f64>() / idx.len() as f64
        })
    }

    /// Estimate of an arbitrary per-trajectory statistic.
    pub fn per_trajectory(&self, f: impl Fn(&TrajectoryRecord) -> f64) -> Result<Estimate> {
        let xs: Vec<f64> = self.valid().map(f).collect();
        if xs.is_empty() {
            return Err(Error::InsufficientSamples("every trajectory is flagged".into()));
        }
        Ok(Estimate::from_samples(&xs))
    }

    pub fn snapshot_index(&self, t: f64) -> Result<usize> {
        self.snapshot_schedule
            .index_of_time(t)
            .ok_or(Error::MissingSnapshot(t))
    }
}

/// Observables recorded for a plan, in column order.
pub fn recorded_observables(grid: &Grid, plan: &RunPlan) -> Vec<Observable> {
    let mut obs = vec![
        Observable::Mass,
        Observable::Energy,
        Observable::F1,
        Observable::H1,
        Observable::PowSigma,
        Observable::NoiseProjection,
    ];
    let mut modes: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.sup_norm(i) <= plan.k_report as i64 && !grid.is_nyquist(i))
        .collect();
    modes.sort_by_key(|&i| {
        let [a, b] = grid.mode(i);
        (a, b)
    });
    obs.extend(modes.into_iter().map(Observable::Mode));
    obs.extend(plan.tail_cutoffs.iter().map(|&n| Observable::Tail(n)));
    obs
}

struct Observer {
    transform: Transform,
    sigma: f64,
    noise_weight: Vec<f64>,
    physical: Vec<Complex64>,
}

impl Observer {
    fn new(cfg: &SimConfig, phi: &NoiseOperator) -> Self {
        Self {
            transform: Transform::new(cfg.grid),
            sigma: cfg.sigma,
            noise_weight: phi.amplitudes().iter().map(|c| 0.5 * c.norm_sqr()).collect(),
            physical: vec![Complex64::new(0.0, 0.0); cfg.grid.len()],
        }
    }

    fn observe(&mut self, u: &SpectralField, observables: &[Observable], out: &mut Vec<f64>) {
        self.physical.copy_from_slice(u.coeffs());
        self.transform.to_physical_in_place(&mut self.physical);
        let phys = field::PhysicalField::from_values(*u.grid(), std::mem::take(&mut self.physical))
            .expect("grid length");
        let sigma = self.sigma;
        let mut f1_cache = None;
        let mut f1 = |phys: &field::PhysicalField| {
            *f1_cache.get_or_insert_with(|| field::f1_physical(phys, sigma))
        };
        for obs in observables {
            let v = match *obs {
                Observable::Mass => field::mass(u),
                Observable::Energy => field::kinetic_energy(u) - f1(&phys),
                Observable::F1 => f1(&phys),
                Observable::H1 => field::sobolev_norm_sq(u, 1.0),
                Observable::PowSigma => field::power_integral(&phys, 2.0 * sigma),
                Observable::NoiseProjection => u
                    .coeffs()
                    .iter()
                    .zip(&self.noise_weight)
                    .map(|(c, w)| w * c.norm_sqr())
                    .sum(),
                Observable::Mode(i) => u.coeffs()[i].norm_sqr(),
                Observable::Tail(n) => field::tail_mass(u, n, 1.0),
            };
            out.push(v);
        }
        self.physical = phys.into_values();
    }
}

/// Run `plan.n_traj` independent trajectories of the damped stochastic NLS.
///
/// Blow-ups do not abort the run: the trajectory is flagged, its remaining
/// values are NaN, and it is excluded from every estimate.
pub fn run_ensemble(
    cfg: &SimConfig,
    phi: &NoiseOperator,
    law: &InitialLaw,
    plan: &RunPlan,
) -> Result<EnsembleRecord> {
    cfg.validate()?;
    if plan.n_traj == 0 {
        return Err(Error::Config("ensemble needs at least one trajectory".into()));
    }
    if plan.schedule.is_empty() {
        return Err(Error::Config("sampling schedule is empty".into()));
    }
    for s in [&plan.schedule, &plan.snapshots] {
        if (s.dt() - cfg.dt).abs() > 1e-15 * cfg.dt && !s.is_empty() {
            return Err(Error::Config("schedule step differs from integrator dt".into()));
        }
    }
    if plan.tail_cutoffs.iter().any(|&n| n > cfg.grid.n() / 2) {
        return Err(Error::Config("tail cutoff exceeds N/2".into()));
    }
    // Validate once up front so workers cannot fail on configuration.
    Stepper::new(cfg, phi)?;
    let observables = recorded_observables(&cfg.grid, plan);

    let run = || -> Vec<TrajectoryRecord> {
        (0..plan.n_traj as u64)
            .into_par_iter()
            .map_init(
                || {
                    (
                        Stepper::new(cfg, phi).expect("validated"),
                        Observer::new(cfg, phi),
                    )
                },
                |(stepper, observer), index| {
                    run_trajectory(cfg, law, plan, &observables, stepper, observer, index)
                },
            )
            .collect()
    };
    let trajectories = match plan.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    Ok(EnsembleRecord {
        config: *cfg,
        master_seed: plan.master_seed,
        observables,
        schedule: plan.schedule.clone(),
        snapshot_schedule: plan.snapshots.clone(),
        trajectories,
    })
}

fn run_trajectory(
    cfg: &SimConfig,
    law: &InitialLaw,
    plan: &RunPlan,
    observables: &[Observable],
    stepper: &mut Stepper,
    observer: &mut Observer,
    index: u64,
) -> TrajectoryRecord {
    let mut stream = NoiseStream::new(plan.master_seed, index);
    let mut u = law
        .sample(cfg.grid, &mut stream)
        .expect("initial law validated against grid");
    let sample_steps = plan.schedule.steps();
    let snap_steps = plan.snapshots.steps();
    let last = plan.schedule.last_step().max(plan.snapshots.last_step());
    let mut values = Vec::with_capacity(sample_steps.len() * observables.len());
    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let (mut si, mut pi) = (0, 0);
    let mut blowup = None;

    for step in 0..=last {
        if step > 0 {
            if let Err(trip) = stepper.step(&mut u, &mut stream) {
                blowup = Some(BlowUpEvent {
                    time: step as f64 * cfg.dt,
                    norm: trip.norm,
                });
                break;
            }
        }
        if si < sample_steps.len() && sample_steps[si] == step {
            observer.observe(&u, observables, &mut values);
            si += 1;
        }
        if pi < snap_steps.len() && snap_steps[pi] == step {
            snapshots.push(u.clone());
            pi += 1;
        }
    }
    values.resize(sample_steps.len() * observables.len(), f64::NAN);

    TrajectoryRecord {
        index,
        values,
        snapshots,
        blowup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus() -> Grid {
        Grid::new(1, 16, 2.0 * PI).unwrap()
    }

    #[test]
    fn estimate_hand_arithmetic() {
        let e = Estimate::from_samples(&[0.0, 2.0]);
        assert_eq!((e.mean, e.std_error, e.n_valid), (1.0, 1.0, 2));
        let c = Estimate::from_samples(&[3.5; 5]);
        assert_eq!((c.mean, c.std_error, c.n_valid), (3.5, 0.0, 5));
    }

    #[test]
    fn observable_names_roundtrip() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        for obs in [
            Observable::Mass,
            Observable::NoiseProjection,
            Observable::Mode(g.index_of(&[-2, 3]).unwrap()),
            Observable::Tail(4),
        ] {
            assert_eq!(Observable::parse(&obs.name(&g), &g).unwrap(), obs);
        }
        assert!(Observable::parse("momentum", &g).is_err());
        assert!(Observable::parse("mode_9_0", &g).is_err());
    }

    #[test]
    fn schedule_rejects_off_grid_times() {
        assert!(Schedule::from_times(0.1, &[0.25]).is_err());
        let s = Schedule::uniform(0.01, 0.5, 2.0).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.index_of_time(1.5), Some(3));
        assert_eq!(s.index_of_time(1.2), None);
    }

    #[test]
    fn unknown_observable_and_time_are_errors() {
        let cfg = SimConfig::new(0.5, 0.0, torus(), 0.1).unwrap();
        let plan = RunPlan::new(2, 1, Schedule::uniform(0.1, 0.5, 1.0).unwrap());
        let rec = run_ensemble(&cfg, &NoiseOperator::zero(torus()), &InitialLaw::Zero, &plan).unwrap();
        assert!(matches!(
            rec.estimate_observable("nope", 0.5),
            Err(Error::UnknownObservable(_))
        ));
        assert!(matches!(
            rec.estimate_observable("mass", 0.7),
            Err(Error::TimeNotSampled(_))
        ));
        let e = rec.estimate_observable("mass", 1.0).unwrap();
        assert_eq!((e.mean, e.std_error, e.n_valid), (0.0, 0.0, 2));
    }

    #[test]
    fn blowup_is_flagged_not_fatal() {
        let mut cfg = SimConfig::new(0.5, 1.0, torus(), 0.01).unwrap();
        cfg.blowup_guard = 0.5;
        let mut f = SpectralField::zeros(torus());
        f.set_coeff(&[0], Complex64::new(0.45, 0.0)).unwrap();
        let phi = NoiseOperator::band(torus(), 1.0, 3, 0.0).unwrap();
        let plan = RunPlan::new(4, 3, Schedule::uniform(0.01, 0.1, 2.0).unwrap());
        let rec = run_ensemble(&cfg, &phi, &InitialLaw::Fixed(f), &plan).unwrap();
        assert!(rec.n_flagged() > 0);
        assert_eq!(rec.n_flagged() + rec.n_valid(), 4);
        for tr in rec.trajectories().iter().filter(|t| t.is_flagged()) {
            assert!(tr.blowup.as_ref().unwrap().time > 0.0);
        }
    }
}
