//! Itô correction terms of the energy balance for the circular diagonal
//! noise model, by two routes.
//!
//! The noise is expanded over real directions `g = (φ_k/√2) e_k` and
//! `g' = i (φ_k/√2) e_k`. Summing over both directions of every mode gives
//! `Σ_i |g_i(x)|² = ‖Φ‖² L^{−d}` and `Σ_i Re(ū g_i)² = ½|u|² ‖Φ‖² L^{−d}`
//! pointwise, which yields the closed forms below. The generic routines sum
//! over the directions explicitly on the grid.

use num_complex::Complex64;

use crate::field::{power_integral, PhysicalField, SpectralField};
use crate::noise::{HsWeight, NoiseOperator};

/// `|u|` floor used where `|u|^{2σ−2}` is singular (`0 < σ < 1`).
pub const MODULUS_CLAMP: f64 = 1e-8;

/// `‖|u|^σ Φ‖²_{HS(L²,L²)} = ‖Φ‖² L^{−d} ∫|u|^{2σ}`.
pub fn weighted_noise_norm_sq(u: &PhysicalField, phi: &NoiseOperator, sigma: f64) -> f64 {
    let g = u.grid();
    phi.hs_norm_sq(HsWeight::Identity) / g.volume() * power_integral(u, 2.0 * sigma)
}

/// `Σ_i (|u|^{2σ−2}, (Re(ū Φe_i))²) = ½ ‖Φ‖² L^{−d} ∫|u|^{2σ}`.
pub fn real_direction_correction(u: &PhysicalField, phi: &NoiseOperator, sigma: f64) -> f64 {
    0.5 * weighted_noise_norm_sq(u, phi, sigma)
}

/// `Σ_i Re(u, Φe_i)² = ½ Σ_k |φ_k|² |û_k|²`.
pub fn noise_projection(u: &SpectralField, phi: &NoiseOperator) -> f64 {
    u.coeffs()
        .iter()
        .zip(phi.amplitudes())
        .map(|(c, p)| 0.5 * p.norm_sqr() * c.norm_sqr())
        .sum()
}

/// Grid values of every real noise direction.
fn directions(phi: &NoiseOperator) -> Vec<Vec<Complex64>> {
    let grid = *phi.grid();
    let norm = grid.volume().sqrt().recip() * std::f64::consts::FRAC_1_SQRT_2;
    let unit = 2.0 * std::f64::consts::PI / grid.length();
    let mut out = Vec::with_capacity(2 * phi.support().len());
    for &k in phi.support() {
        let mode = grid.mode(k);
        let a = phi.amplitudes()[k] * norm;
        let values: Vec<Complex64> = (0..grid.len())
            .map(|j| {
                let x = grid.node(j);
                let phase: f64 = x.iter().zip(mode).map(|(xi, ki)| unit * ki as f64 * xi).sum();
                a * Complex64::from_polar(1.0, phase)
            })
            .collect();
        let rotated = values.iter().map(|v| v * Complex64::i()).collect();
        out.push(values);
        out.push(rotated);
    }
    out
}

pub fn weighted_noise_norm_sq_generic(u: &PhysicalField, phi: &NoiseOperator, sigma: f64) -> f64 {
    let h = u.grid().cell_volume();
    directions(phi)
        .iter()
        .map(|g| {
            u.values()
                .iter()
                .zip(g)
                .map(|(z, gz)| z.norm_sqr().powf(sigma) * gz.norm_sqr())
                .sum::<f64>()
                * h
        })
        .sum()
}

pub fn real_direction_correction_generic(u: &PhysicalField, phi: &NoiseOperator, sigma: f64) -> f64 {
    let h = u.grid().cell_volume();
    directions(phi)
        .iter()
        .map(|g| {
            u.values()
                .iter()
                .zip(g)
                .map(|(z, gz)| {
                    let m = z.norm().max(MODULUS_CLAMP);
                    m.powf(2.0 * sigma - 2.0) * (z.conj() * gz).re.powi(2)
                })
                .sum::<f64>()
                * h
        })
        .sum()
}

/// `Σ_i Re(u, g_i)²` with `(u, g) = ∫ u ḡ` by grid quadrature.
pub fn noise_projection_generic(u: &PhysicalField, phi: &NoiseOperator) -> f64 {
    let h = u.grid().cell_volume();
    directions(phi)
        .iter()
        .map(|g| {
            let ip: Complex64 = u.values().iter().zip(g).map(|(z, gz)| z * gz.conj()).sum();
            (ip * h).re.powi(2)
        })
        .sum()
}
