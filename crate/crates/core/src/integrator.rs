//! Operator splitting with exact sub-flows.
//!
//! * linear-stochastic substep: per mode, `û ← e^{(−λ − iκ²)dt} û + kick`,
//!   where the kick is the exact stochastic convolution over the step;
//! * nonlinear substep: pointwise `u(x) ← u(x) exp(i|u(x)|^{2σ} dt)`, which
//!   preserves `|u(x)|`.
//!
//! Lie applies the linear substep and then the nonlinear one; Strang wraps
//! the linear substep (and its whole kick) between two nonlinear half steps.

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Grid, SpectralField, Transform};
use crate::noise::{ou_kick_variance, NoiseOperator, NoiseStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Lie,
    Strang,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lie" => Ok(Scheme::Lie),
            "strang" => Ok(Scheme::Strang),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub lambda: f64,
    pub sigma: f64,
    pub grid: Grid,
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub blowup_guard: f64,
}

impl SimConfig {
    pub const DEFAULT_BLOWUP_GUARD: f64 = 1e6;

    pub fn new(lambda: f64, sigma: f64, grid: Grid, dt: f64) -> Result<Self> {
        let cfg = Self {
            lambda,
            sigma,
            grid,
            dt,
            scheme: Scheme::Strang,
            dealias: false,
            blowup_guard: Self::DEFAULT_BLOWUP_GUARD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        // d ≤ 2 here, so admissibility of the nonlinearity only needs σ ≥ 0.
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.blowup_guard > 0.0) {
            return Err(Error::Config("blow-up guard must be positive".into()));
        }
        Ok(())
    }
}

/// The H¹ norm that tripped the blow-up guard (possibly non-finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardTrip {
    pub norm: f64,
}

/// Reusable stepping workspace: propagators, kick scales and FFT scratch
/// for one `(SimConfig, NoiseOperator)` pair.
pub struct Stepper {
    cfg: SimConfig,
    transform: Transform,
    propagator: Vec<Complex64>,
    kick_scale: Vec<(usize, Complex64)>,
    kick: Vec<Complex64>,
    projected: Vec<usize>,
    weight_h1: Vec<f64>,
}

impl Stepper {
    pub fn new(cfg: &SimConfig, phi: &NoiseOperator) -> Result<Self> {
        cfg.validate()?;
        if phi.grid() != &cfg.grid {
            return Err(Error::Config("noise operator grid differs from simulation grid".into()));
        }
        let grid = cfg.grid;
        let propagator = (0..grid.len())
            .map(|i| linear_factor(cfg.lambda, grid.kappa_sq(i), cfg.dt))
            .collect();
        let std = ou_kick_variance(cfg.lambda, cfg.dt).sqrt();
        let kick_scale = phi
            .support()
            .iter()
            .map(|&i| (i, phi.amplitudes()[i] * std))
            .collect();
        let cut = grid.n() as i64 / 3;
        let projected = (0..grid.len())
            .filter(|&i| grid.is_nyquist(i) || (cfg.dealias && grid.sup_norm(i) > cut))
            .collect();
        let weight_h1 = (0..grid.len()).map(|i| 1.0 + grid.kappa_sq(i)).collect();
        Ok(Self {
            cfg: *cfg,
            transform: Transform::new(grid),
            propagator,
            kick_scale,
            kick: vec![Complex64::new(0.0, 0.0); grid.len()],
            projected,
            weight_h1,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Draw the OU kick for one step; consumes two normals per supported
    /// mode, in storage order.
    pub fn draw_kick(&mut self, stream: &mut NoiseStream) -> &[Complex64] {
        for &(i, s) in &self.kick_scale {
            self.kick[i] = s * stream.complex_normal();
        }
        &self.kick
    }

    /// One full step of length `dt`.
    pub fn step(&mut self, u: &mut SpectralField, stream: &mut NoiseStream) -> std::result::Result<(), GuardTrip> {
        self.draw_kick(stream);
        let kick = std::mem::take(&mut self.kick);
        let out = self.step_with_kick(u, &kick);
        self.kick = kick;
        out
    }

    /// One full step with a caller-supplied kick (full spectral array).
    pub fn step_with_kick(
        &mut self,
        u: &mut SpectralField,
        kick: &[Complex64],
    ) -> std::result::Result<(), GuardTrip> {
        let dt = self.cfg.dt;
        match self.cfg.scheme {
            Scheme::Lie => {
                self.linear_in_place(u.coeffs_mut(), Some(kick));
                self.nonlinear_in_place(u.coeffs_mut(), dt);
            }
            Scheme::Strang => {
                self.nonlinear_in_place(u.coeffs_mut(), 0.5 * dt);
                self.linear_in_place(u.coeffs_mut(), Some(kick));
                self.nonlinear_in_place(u.coeffs_mut(), 0.5 * dt);
            }
        }
        self.check_guard(u)
    }

    fn check_guard(&self, u: &SpectralField) -> std::result::Result<(), GuardTrip> {
        let h1: f64 = u
            .coeffs()
            .iter()
            .zip(&self.weight_h1)
            .map(|(c, w)| w * c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if h1.is_finite() && h1 <= self.cfg.blowup_guard {
            Ok(())
        } else {
            Err(GuardTrip { norm: h1 })
        }
    }

    pub fn linear_in_place(&self, coeffs: &mut [Complex64], kick: Option<&[Complex64]>) {
        for (c, p) in coeffs.iter_mut().zip(&self.propagator) {
            *c *= p;
        }
        if let Some(kick) = kick {
            for &(i, _) in &self.kick_scale {
                coeffs[i] += kick[i];
            }
        }
    }

    pub fn nonlinear_in_place(&mut self, coeffs: &mut [Complex64], h: f64) {
        let sigma = self.cfg.sigma;
        if sigma == 0.0 {
            // |u|^0 = 1: a global phase, exact in spectral space.
            let rot = Complex64::from_polar(1.0, h);
            for c in coeffs.iter_mut() {
                *c *= rot;
            }
            return;
        }
        self.transform.to_physical_in_place(coeffs);
        if sigma == 1.0 {
            for z in coeffs.iter_mut() {
                let (s, c) = (z.norm_sqr() * h).sin_cos();
                *z *= Complex64::new(c, s);
            }
        } else {
            for z in coeffs.iter_mut() {
                let (s, c) = (z.norm_sqr().powf(sigma) * h).sin_cos();
                *z *= Complex64::new(c, s);
            }
        }
        self.transform.to_spectral_in_place(coeffs);
        for &i in &self.projected {
            coeffs[i] = Complex64::new(0.0, 0.0);
        }
    }
}

/// `e^{(−λ − i|κ|²) dt}`.
pub fn linear_factor(lambda: f64, kappa_sq: f64, dt: f64) -> Complex64 {
    Complex64::from_polar((-lambda * dt).exp(), -kappa_sq * dt)
}

/// Exact damped-dispersive flow over `dt` plus the matching OU kick.
pub fn linear_stochastic_substep(
    u: &SpectralField,
    cfg: &SimConfig,
    phi: &NoiseOperator,
    stream: &mut NoiseStream,
    dt: f64,
) -> Result<SpectralField> {
    let stepper = Stepper::new(&cfg.with_dt(dt), phi)?;
    let mut out = u.clone();
    let mut kick = vec![Complex64::new(0.0, 0.0); cfg.grid.len()];
    for &(i, s) in &stepper.kick_scale {
        kick[i] = s * stream.complex_normal();
    }
    stepper.linear_in_place(out.coeffs_mut(), Some(&kick));
    Ok(out)
}

/// Pointwise phase rotation `u ← u exp(i|u|^{2σ} dt)`, Nyquist row zeroed.
pub fn nonlinear_substep(u: &SpectralField, sigma: f64, dt: f64) -> SpectralField {
    let mut out = u.clone();
    nonlinear_rotation(&mut out, sigma, dt, false);
    out
}

pub(crate) fn nonlinear_rotation(u: &mut SpectralField, sigma: f64, dt: f64, dealias: bool) {
    let grid = *u.grid();
    let cfg = SimConfig {
        lambda: 1.0,
        sigma,
        grid,
        dt,
        scheme: Scheme::Lie,
        dealias,
        blowup_guard: f64::INFINITY,
    };
    let mut stepper = Stepper::new(&cfg, &NoiseOperator::zero(grid)).expect("valid substep config");
    stepper.nonlinear_in_place(u.coeffs_mut(), dt);
}

/// One full step; `Error::BlowUp` reports `t = dt` when the guard trips.
pub fn step(
    u: &SpectralField,
    cfg: &SimConfig,
    phi: &NoiseOperator,
    stream: &mut NoiseStream,
) -> Result<SpectralField> {
    let mut stepper = Stepper::new(cfg, phi)?;
    let mut out = u.clone();
    stepper
        .step(&mut out, stream)
        .map_err(|trip| Error::BlowUp { time: cfg.dt, norm: trip.norm })?;
    Ok(out)
}
