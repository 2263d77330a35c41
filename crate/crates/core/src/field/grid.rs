use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, L)^d` with `N` points per axis.
///
/// Modes are stored in FFT order: axis index `j` carries the integer
/// wavenumber `j` for `j < N/2` and `j − N` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Config(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!("torus length must be positive, got {length}")));
        }
        Ok(Self { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points (and of modes), `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `L^d`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    pub fn axis_wavenumber(&self, j: usize) -> i64 {
        let half = self.n / 2;
        if j < half {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    /// Integer wavenumber of a flat index; the second entry is 0 when `d = 1`.
    pub fn mode(&self, flat: usize) -> [i64; 2] {
        match self.dim {
            1 => [self.axis_wavenumber(flat), 0],
            _ => [
                self.axis_wavenumber(flat / self.n),
                self.axis_wavenumber(flat % self.n),
            ],
        }
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        match self.dim {
            1 => self.axis_index(k[0]),
            _ => Some(self.axis_index(k[0])? * self.n + self.axis_index(k[1])?),
        }
    }

    /// `|κ_k|² = (2π/L)² |k|²`.
    pub fn kappa_sq(&self, flat: usize) -> f64 {
        let [a, b] = self.mode(flat);
        let unit = 2.0 * PI / self.length;
        unit * unit * (a * a + b * b) as f64
    }

    /// `|k|_∞`.
    pub fn sup_norm(&self, flat: usize) -> i64 {
        let [a, b] = self.mode(flat);
        a.abs().max(b.abs())
    }

    /// Integer `|k|²`.
    pub fn int_norm_sq(&self, flat: usize) -> i64 {
        let [a, b] = self.mode(flat);
        a * a + b * b
    }

    /// True when some component equals `−N/2`.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let half = -((self.n / 2) as i64);
        let [a, b] = self.mode(flat);
        a == half || (self.dim == 2 && b == half)
    }

    /// Physical coordinates of a grid node.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        match self.dim {
            1 => vec![flat as f64 * h],
            _ => vec![(flat / self.n) as f64 * h, (flat % self.n) as f64 * h],
        }
    }

    /// Render a mode as `3` or `3_-1`, as used in observable names.
    pub fn mode_label(&self, flat: usize) -> String {
        let [a, b] = self.mode(flat);
        match self.dim {
            1 => a.to_string(),
            _ => format!("{a}_{b}"),
        }
    }
}
