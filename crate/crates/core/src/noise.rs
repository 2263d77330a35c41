//! Additive noise: a Fourier-diagonal Hilbert-Schmidt operator `Φ` and
//! reproducible per-trajectory Gaussian streams.
//!
//! Each mode carries circular complex noise: `Φ e_k = φ_k e_k` is driven by
//! `(β¹ + iβ²)/√2` with independent real Brownian motions, so
//! `E|ΔW_k|² = |φ_k|² dt` and `E‖ΔW‖² = ‖Φ‖²_{HS(L²,L²)} dt`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::{Grid, SpectralField};

/// Weight used in a Hilbert-Schmidt norm of `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsWeight {
    /// `‖Φ‖²_{HS(L²,L²)} = Σ|φ_k|²`
    Identity,
    /// `‖∇Φ‖²_{HS(L²,L²)} = Σ|κ_k|²|φ_k|²`
    Gradient,
    /// `‖Φ‖²_{HS(L²,H¹)} = Σ(1+|κ_k|²)|φ_k|²`
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOperator {
    grid: Grid,
    phi: Vec<Complex64>,
    support: Vec<usize>,
}

impl NoiseOperator {
    pub fn zero(grid: Grid) -> Self {
        Self {
            grid,
            phi: vec![Complex64::new(0.0, 0.0); grid.len()],
            support: Vec::new(),
        }
    }

    /// `φ_k = amplitude · (1 + |k|²)^{−decay_power}` for `|k|_∞ ≤ k_max`,
    /// zero elsewhere (`k` integer wavenumbers).
    pub fn band(grid: Grid, amplitude: f64, k_max: usize, decay_power: f64) -> Result<Self> {
        if k_max >= grid.n() / 2 {
            return Err(Error::Config(format!(
                "noise band K_max = {k_max} must be below N/2 = {}",
                grid.n() / 2
            )));
        }
        if !amplitude.is_finite() || !decay_power.is_finite() {
            return Err(Error::Config("noise band parameters must be finite".into()));
        }
        let phi = (0..grid.len())
            .map(|i| {
                if grid.sup_norm(i) <= k_max as i64 && !grid.is_nyquist(i) {
                    let w = (1.0 + grid.int_norm_sq(i) as f64).powf(-decay_power);
                    Complex64::new(amplitude * w, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::from_amplitudes(grid, phi)
    }

    /// Explicit `(k, φ_k)` list; unlisted modes are zero.
    pub fn from_modes(grid: Grid, modes: &[(Vec<i64>, Complex64)]) -> Result<Self> {
        let mut phi = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (k, value) in modes {
            let idx = grid
                .index_of(k)
                .ok_or_else(|| Error::Config(format!("noise mode {k:?} is outside the grid")))?;
            if grid.is_nyquist(idx) && value.norm() != 0.0 {
                return Err(Error::Config(format!("noise mode {k:?} lies on the Nyquist row")));
            }
            phi[idx] = *value;
        }
        Self::from_amplitudes(grid, phi)
    }

    pub fn from_amplitudes(grid: Grid, phi: Vec<Complex64>) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: phi.len(),
            });
        }
        if phi.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Config("noise amplitudes must be finite".into()));
        }
        if phi
            .iter()
            .enumerate()
            .any(|(i, c)| grid.is_nyquist(i) && c.norm() != 0.0)
        {
            return Err(Error::Config("noise amplitude on the Nyquist row".into()));
        }
        let support = phi
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, _)| i)
            .collect();
        let op = Self { grid, phi, support };
        let h1 = op.hs_norm_sq(HsWeight::H1);
        if !h1.is_finite() {
            return Err(Error::Config("noise operator is not Hilbert-Schmidt into H1".into()));
        }
        Ok(op)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.phi
    }

    pub fn amplitude(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.phi[i])
    }

    /// Flat indices with `φ_k ≠ 0`, in storage order. Noise draws follow
    /// this order.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn hs_norm_sq(&self, weight: HsWeight) -> f64 {
        match weight {
            HsWeight::Identity => self.phi.iter().map(|c| c.norm_sqr()).sum(),
            HsWeight::Gradient => self
                .phi
                .iter()
                .enumerate()
                .map(|(i, c)| self.grid.kappa_sq(i) * c.norm_sqr())
                .sum(),
            HsWeight::H1 => {
                self.hs_norm_sq(HsWeight::Identity) + self.hs_norm_sq(HsWeight::Gradient)
            }
        }
    }

    /// Largest `|k|_∞` with nonzero amplitude.
    pub fn band_limit(&self) -> usize {
        self.support
            .iter()
            .map(|&i| self.grid.sup_norm(i) as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Gaussian stream keyed by `(master_seed, trajectory_index)`.
///
/// Backed by ChaCha8: the seed keys the cipher and the trajectory index
/// selects the 64-bit stream, so draws are a pure function of the key
/// and the block counter, independent of scheduling.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    trajectory_index: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trajectory_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(trajectory_index);
        Self {
            master_seed,
            trajectory_index,
            rng,
        }
    }

    /// Reposition at an absolute word counter.
    pub fn at_counter(master_seed: u64, trajectory_index: u64, counter: u128) -> Self {
        let mut s = Self::new(master_seed, trajectory_index);
        s.rng.set_word_pos(counter);
        s
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trajectory_index(&self) -> u64 {
        self.trajectory_index
    }

    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Circular complex normal with `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re: f64 = self.standard_normal();
        let im: f64 = self.standard_normal();
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Brownian increment `ΦΔW` over `dt`.
pub fn sample_increment(stream: &mut NoiseStream, phi: &NoiseOperator, dt: f64) -> SpectralField {
    let scale = dt.sqrt();
    sample_scaled(stream, phi, |_| scale)
}

/// `(1 − e^{−2λ dt}) / (2λ)`, the per-unit-amplitude variance of the
/// stochastic convolution over one step.
pub fn ou_kick_variance(lambda: f64, dt: f64) -> f64 {
    -(-2.0 * lambda * dt).exp_m1() / (2.0 * lambda)
}

/// Exact stochastic convolution `∫_0^{dt} S(dt − s) Φ dW_s` of the damped
/// dispersive flow. The dispersive phase has unit modulus and the noise is
/// circular, so only the damping enters the law.
pub fn sample_ou_kick(
    stream: &mut NoiseStream,
    phi: &NoiseOperator,
    lambda: f64,
    dt: f64,
) -> SpectralField {
    let scale = ou_kick_variance(lambda, dt).sqrt();
    sample_scaled(stream, phi, |_| scale)
}

fn sample_scaled(
    stream: &mut NoiseStream,
    phi: &NoiseOperator,
    scale: impl Fn(usize) -> f64,
) -> SpectralField {
    let mut out = SpectralField::zeros(*phi.grid());
    let coeffs = out.coeffs_mut();
    for &i in phi.support() {
        coeffs[i] = phi.amplitudes()[i] * scale(i) * stream.complex_normal();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus() -> Grid {
        Grid::new(1, 64, 2.0 * PI).unwrap()
    }

    #[test]
    fn zero_operator_has_zero_norms_and_zero_draws() {
        let phi = NoiseOperator::zero(torus());
        for w in [HsWeight::Identity, HsWeight::Gradient, HsWeight::H1] {
            assert_eq!(phi.hs_norm_sq(w), 0.0);
        }
        let mut s = NoiseStream::new(1, 0);
        assert_eq!(crate::field::mass(&sample_increment(&mut s, &phi, 0.1)), 0.0);
        assert_eq!(crate::field::mass(&sample_ou_kick(&mut s, &phi, 0.5, 0.1)), 0.0);
    }

    #[test]
    fn single_mode_norms() {
        let a = 0.3;
        let phi =
            NoiseOperator::from_modes(torus(), &[(vec![1], Complex64::new(a, 0.0))]).unwrap();
        assert!((phi.hs_norm_sq(HsWeight::Identity) - a * a).abs() < 1e-15);
        assert!((phi.hs_norm_sq(HsWeight::Gradient) - a * a).abs() < 1e-15);
        assert!((phi.hs_norm_sq(HsWeight::H1) - 2.0 * a * a).abs() < 1e-15);
    }

    #[test]
    fn band_matches_direct_summation() {
        let phi = NoiseOperator::band(torus(), 0.1, 8, 1.0).unwrap();
        let mut want = 0.0;
        for k in -8i64..=8 {
            let v = 0.1 / (1.0 + (k * k) as f64);
            want += v * v;
        }
        assert!((phi.hs_norm_sq(HsWeight::Identity) - want).abs() < 1e-15);
        assert_eq!(phi.support().len(), 17);
        assert_eq!(phi.band_limit(), 8);
    }

    #[test]
    fn rejects_inadmissible_operators() {
        let g = torus();
        assert!(NoiseOperator::band(g, 0.1, 32, 1.0).is_err());
        assert!(NoiseOperator::from_modes(g, &[(vec![-32], Complex64::new(1.0, 0.0))]).is_err());
        assert!(NoiseOperator::from_modes(g, &[(vec![40], Complex64::new(1.0, 0.0))]).is_err());
        assert!(
            NoiseOperator::from_modes(g, &[(vec![1], Complex64::new(f64::INFINITY, 0.0))]).is_err()
        );
    }

    #[test]
    fn repositioned_stream_replays_draws() {
        let phi = NoiseOperator::band(torus(), 0.1, 8, 1.0).unwrap();
        let mut s = NoiseStream::new(42, 7);
        let _ = sample_increment(&mut s, &phi, 0.01);
        let counter = s.counter();
        let a = sample_increment(&mut s, &phi, 0.01);
        let mut replay = NoiseStream::at_counter(42, 7, counter);
        let b = sample_increment(&mut replay, &phi, 0.01);
        assert_eq!(a, b);
        let mut other = NoiseStream::at_counter(42, 8, counter);
        assert_ne!(a, sample_increment(&mut other, &phi, 0.01));
    }

    #[test]
    fn kick_variance_small_step_limit() {
        let dt = 1e-6;
        let ratio = ou_kick_variance(0.5, dt) / dt;
        assert!((ratio - 1.0).abs() < 1e-4);
        assert!((ou_kick_variance(0.5, 0.1) - (1.0 - (-0.1f64).exp())).abs() < 1e-15);
    }
}
