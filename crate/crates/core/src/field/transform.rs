use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Grid, PhysicalField, SpectralField};

/// FFT plans plus scratch space for one grid.
///
/// Owns mutable scratch, so each worker keeps its own instance.
pub struct Transform {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    to_physical_scale: f64,
    to_spectral_scale: f64,
}

impl Transform {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n());
        let inverse = planner.plan_fft_inverse(grid.n());
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let half_dim = grid.dim() as f64 / 2.0;
        let to_physical_scale = grid.length().powf(-half_dim);
        let to_spectral_scale = grid.cell_volume() * grid.length().powf(-half_dim);
        Self {
            grid,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            to_physical_scale,
            to_spectral_scale,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `u(x_j) = Σ_k û_k e_k(x_j)`, in place.
    pub fn to_physical_in_place(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.grid.len());
        let fft = Arc::clone(&self.inverse);
        self.apply(&*fft, data);
        let s = self.to_physical_scale;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    /// Rectangle-rule projection `û_k = h^d Σ_j u(x_j) conj(e_k(x_j))`, in place.
    /// Exact inverse of [`Self::to_physical_in_place`]; the Nyquist row is kept.
    pub fn to_spectral_in_place(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.grid.len());
        let fft = Arc::clone(&self.forward);
        self.apply(&*fft, data);
        let s = self.to_spectral_scale;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    pub fn to_physical(&mut self, f: &SpectralField) -> PhysicalField {
        let mut values = f.coeffs().to_vec();
        self.to_physical_in_place(&mut values);
        PhysicalField::from_values(self.grid, values).expect("grid length preserved")
    }

    pub fn to_spectral(&mut self, u: &PhysicalField) -> SpectralField {
        let mut coeffs = u.values().to_vec();
        self.to_spectral_in_place(&mut coeffs);
        SpectralField::from_coeffs(self.grid, coeffs).expect("grid length preserved")
    }

    fn apply(&mut self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        // rustfft transforms every length-N chunk, i.e. every row.
        fft.process_with_scratch(data, &mut self.scratch);
        if self.grid.dim() == 2 {
            let n = self.grid.n();
            transpose_square(data, n);
            fft.process_with_scratch(data, &mut self.scratch);
            transpose_square(data, n);
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}
