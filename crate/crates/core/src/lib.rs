//! Spectral Monte Carlo simulation of the damped stochastic nonlinear
//! Schrödinger equation
//!
//! ```text
//! du = (-λu + iΔu + i|u|^{2σ}u) dt + Φ dW
//! ```
//!
//! on a periodic torus `[0, L)^d`, `d ∈ {1, 2}`, together with the
//! machinery needed to study its invariant measures: exact-substep
//! splitting integrators, ensemble drivers with reproducible noise streams,
//! Krylov-Bogolyubov time averages, Wasserstein-1 distances, and
//! expectation-level checks of the mass and energy balance laws.
//!
//! Fourier coefficients use the orthonormal basis
//! `e_k(x) = L^{-d/2} exp(i κ_k·x)`, `κ_k = 2πk/L`, so that
//! `‖u‖²_{L²} = Σ_k |û_k|²`.

pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod field;
pub mod integrator;
pub mod io;
pub mod measures;
pub mod noise;

pub use ensemble::{
    run_ensemble, EnsembleRecord, Estimate, InitialLaw, Observable, RunPlan, Schedule,
};
pub use error::{Error, Result};
pub use field::{Grid, PhysicalField, SpectralField, Transform};
pub use integrator::{Scheme, SimConfig, Stepper};
pub use measures::EmpiricalMeasure;
pub use noise::{HsWeight, NoiseOperator, NoiseStream};

pub use num_complex::Complex64;
