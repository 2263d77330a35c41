//! Fields on the periodic torus and their scalar functionals.

mod functionals;
mod grid;
mod transform;

pub use functionals::{
    energy, f1, f1_physical, gradient_norm_sq, kinetic_energy, mass, power_integral, sobolev_norm_sq,
    tail_mass,
};
pub use grid::Grid;
pub use transform::Transform;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solution state as Fourier coefficients, stored in FFT order
/// (row-major over axes for `d = 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    /// A single orthonormal basis function `e_k`.
    pub fn basis(grid: Grid, k: &[i64]) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::Config(format!("mode {k:?} is outside the grid")))?;
        let mut f = Self::zeros(grid);
        f.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::Config(format!("mode {k:?} is outside the grid")))?;
        self.coeffs[idx] = value;
        Ok(())
    }

    /// Zero every mode on the Nyquist row.
    pub fn project_nyquist(&mut self) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if self.grid.is_nyquist(i) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn nyquist_is_zero(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| !self.grid.is_nyquist(i) || (c.re == 0.0 && c.im == 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, factor: Complex64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
    }

    /// `‖self − other‖²_{L²}` via Parseval.
    pub fn distance_sq(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }

    pub fn to_physical(&self) -> PhysicalField {
        Transform::new(self.grid).to_physical(self)
    }
}

/// Point values of a field on the `N^d` collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl PhysicalField {
    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x)` at every grid node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn to_spectral(&self) -> SpectralField {
        Transform::new(self.grid).to_spectral(self)
    }
}
