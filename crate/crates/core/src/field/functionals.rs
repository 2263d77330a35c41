//! Scalar functionals of a field: mass, energy, Sobolev norms, the
//! `L^{2σ+2}` potential and spectral tails.
//!
//! Spectral sums are exact under the orthonormal convention. Integrals of
//! `|u|^p` use collocation on the grid (rectangle rule, no dealiasing).

use super::{PhysicalField, SpectralField};

/// `M(u) = ‖u‖²_{L²} = Σ_k |û_k|²`.
pub fn mass(f: &SpectralField) -> f64 {
    f.coeffs().iter().map(|c| c.norm_sqr()).sum()
}

/// `Σ_k (1 + |κ_k|²)^r |û_k|²`.
pub fn sobolev_norm_sq(f: &SpectralField, r: f64) -> f64 {
    let g = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| (1.0 + g.kappa_sq(i)).powf(r) * c.norm_sqr())
        .sum()
}

/// `‖∇u‖²_{L²} = Σ_k |κ_k|² |û_k|²`.
pub fn gradient_norm_sq(f: &SpectralField) -> f64 {
    let g = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| g.kappa_sq(i) * c.norm_sqr())
        .sum()
}

/// `½‖∇u‖²`, evaluated as `½(‖u‖²_{H¹} − ‖u‖²_{L²})`.
pub fn kinetic_energy(f: &SpectralField) -> f64 {
    0.5 * (sobolev_norm_sq(f, 1.0) - mass(f))
}

/// Grid quadrature of `|u|^p`.
pub fn power_integral(u: &PhysicalField, p: f64) -> f64 {
    let half = 0.5 * p;
    let sum: f64 = if half == half.trunc() && half.abs() < 64.0 {
        let e = half as i32;
        u.values().iter().map(|z| z.norm_sqr().powi(e)).sum()
    } else {
        u.values().iter().map(|z| z.norm_sqr().powf(half)).sum()
    };
    sum * u.grid().cell_volume()
}

/// `F₁(u) = (1/(2σ+2)) ∫|u|^{2σ+2}`.
pub fn f1(f: &SpectralField, sigma: f64) -> f64 {
    f1_physical(&f.to_physical(), sigma)
}

/// [`f1`] on a field already in physical space.
pub fn f1_physical(u: &PhysicalField, sigma: f64) -> f64 {
    let p = 2.0 * sigma + 2.0;
    power_integral(u, p) / p
}

/// `H(u) = ½∫|∇u|² − (1/(2σ+2))∫|u|^{2σ+2}`.
pub fn energy(f: &SpectralField, sigma: f64) -> f64 {
    kinetic_energy(f) - f1(f, sigma)
}

/// `Σ_{|k|_∞ > cutoff} (1 + |κ_k|²)^r |û_k|²`.
pub fn tail_mass(f: &SpectralField, cutoff: usize, r: f64) -> f64 {
    let g = f.grid();
    let cutoff = cutoff as i64;
    f.coeffs()
        .iter()
        .enumerate()
        .filter(|(i, _)| g.sup_norm(*i) > cutoff)
        .map(|(i, c)| (1.0 + g.kappa_sq(i)).powf(r) * c.norm_sqr())
        .sum()
}
