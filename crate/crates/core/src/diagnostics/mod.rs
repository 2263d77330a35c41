//! Quantitative checks on recorded ensembles: balance laws for mass and
//! energy, the transient mass curve, stationary moment identities, the
//! increment (Aldous) curve, and spectral tail profiles.

mod balance;
pub mod ito;

use std::io::Write;

pub use balance::{energy_balance_residual, mass_balance_residual, BalanceReport, BalanceTerm};

use crate::ensemble::{EnsembleRecord, Estimate, Observable};
use crate::error::{Error, Result};
use crate::field::{power_integral, sobolev_norm_sq, SpectralField};
use crate::integrator::SimConfig;
use crate::noise::{HsWeight, NoiseOperator};

/// Default burn-in, in units of `1/λ`.
pub const BURN_IN_RELAXATION_TIMES: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientPoint {
    pub t: f64,
    pub predicted: f64,
    pub predicted_se: f64,
    pub estimated: f64,
    pub estimated_se: f64,
    /// Standard error of the paired difference `M(t) − e^{−2λt} M(0)`.
    pub difference_se: f64,
    pub n_valid: usize,
}

impl TransientPoint {
    pub fn passes(&self) -> bool {
        let slack = 1e-12 * self.predicted.abs().max(self.estimated.abs());
        (self.estimated - self.predicted).abs() <= 3.0 * self.difference_se + slack
    }
}

/// `E[M(t)] = e^{−2λt} E[M(0)] + ‖Φ‖² (1 − e^{−2λt}) / (2λ)` against the
/// ensemble estimate at every sample time.
pub fn transient_mass_curve(
    rec: &EnsembleRecord,
    cfg: &SimConfig,
    phi: &NoiseOperator,
) -> Result<Vec<TransientPoint>> {
    let lambda = cfg.lambda;
    let hs = phi.hs_norm_sq(HsWeight::Identity);
    let o = rec.observable_index(Observable::Mass)?;
    let m0 = rec.per_trajectory(|tr| rec.value(tr, o, 0))?;
    rec.sample_times()
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let decay = (-2.0 * lambda * t).exp();
            let forcing = -hs * (-2.0 * lambda * t).exp_m1() / (2.0 * lambda);
            let est = rec.per_trajectory(|tr| rec.value(tr, o, ti))?;
            let diff = rec.per_trajectory(|tr| rec.value(tr, o, ti) - decay * rec.value(tr, o, 0))?;
            Ok(TransientPoint {
                t,
                predicted: decay * m0.mean + forcing,
                predicted_se: decay * m0.std_error,
                estimated: est.mean,
                estimated_se: est.std_error,
                difference_se: diff.std_error,
                n_valid: est.n_valid,
            })
        })
        .collect()
}

pub fn write_transient_csv<W: Write>(points: &[TransientPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "predicted", "predicted_se", "estimated", "estimated_se", "pass"])?;
    for p in points {
        w.write_record([
            format!("{}", p.t),
            format!("{:.12e}", p.predicted),
            format!("{:.6e}", p.predicted_se),
            format!("{:.12e}", p.estimated),
            format!("{:.6e}", p.estimated_se),
            p.passes().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub k: u32,
    /// `2λ E[M^{k+1}]`
    pub lhs: Estimate,
    /// `‖Φ‖² E[M^k] + 2k E[M^{k−1} Σ_i Re(u,Φe_i)²]`
    pub rhs: Estimate,
    pub difference: Estimate,
    /// `(‖Φ‖² + k/2) E[M^k]`, inflated by three relative standard errors.
    pub bound: f64,
    pub equality_holds: bool,
    pub bound_holds: bool,
}

impl MomentCheck {
    pub fn passes(&self) -> bool {
        self.equality_holds && self.bound_holds
    }
}

/// Stationary moment recursion for the mass,
///
/// ```text
/// 2λ E[M^{k+1}] = ‖Φ‖² E[M^k] + 2k E[M^{k−1} Σ_i Re(u, Φe_i)²]
///              ≤ (‖Φ‖² + k/2) E[M^k],
/// ```
///
/// obtained from Itô's formula for `M^{k+1}` (quadratic variation
/// `d⟨M⟩ = 4 Σ_i Re(u,Φe_i)² dt`) at stationarity. Uses per-trajectory time
/// averages over the stationary `window` and the recorded noise projection.
pub fn stationary_moment_check(
    rec: &EnsembleRecord,
    phi: &NoiseOperator,
    lambda: f64,
    k: u32,
    window: (f64, f64),
) -> Result<MomentCheck> {
    if k == 0 {
        return Err(Error::Config("moment order k must be >= 1".into()));
    }
    let idx = rec.time_indices_in(window.0, window.1);
    if idx.is_empty() || rec.n_valid() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} sample times and {} trajectories in the stationary window",
            idx.len(),
            rec.n_valid()
        )));
    }
    let hs = phi.hs_norm_sq(HsWeight::Identity);
    let m = rec.observable_index(Observable::Mass)?;
    let r = rec.observable_index(Observable::NoiseProjection)?;
    let kf = k as f64;
    let ki = k as i32;
    let avg = |f: &dyn Fn(f64, f64) -> f64| {
        rec.per_trajectory(|tr| {
            idx.iter()
                .map(|&t| f(rec.value(tr, m, t), rec.value(tr, r, t)))
                .sum::<f64>()
                / idx.len() as f64
        })
    };
    let lhs = avg(&|m, _| 2.0 * lambda * m.powi(ki + 1))?;
    let rhs = avg(&|m, r| hs * m.powi(ki) + 2.0 * kf * m.powi(ki - 1) * r)?;
    let difference = avg(&|m, r| {
        2.0 * lambda * m.powi(ki + 1) - hs * m.powi(ki) - 2.0 * kf * m.powi(ki - 1) * r
    })?;
    let mk = avg(&|m, _| m.powi(ki))?;
    let rel = if mk.mean > 0.0 { mk.std_error / mk.mean } else { 0.0 };
    let bound = (hs + 0.5 * kf) * mk.mean * (1.0 + 3.0 * rel);
    let slack = 1e-12 * lhs.mean.abs().max(rhs.mean.abs());
    Ok(MomentCheck {
        k,
        lhs,
        rhs,
        difference,
        bound,
        equality_holds: difference.mean.abs() <= 3.0 * difference.std_error + slack,
        bound_holds: lhs.mean <= bound + slack,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementPoint {
    pub delta: f64,
    pub estimate: Estimate,
    samples: Vec<f64>,
}

/// Increment curve `δ ↦ E‖u_{T+δ} − u_T‖²_{L²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AldousCurve {
    pub base_time: f64,
    pub points: Vec<IncrementPoint>,
}

impl AldousCurve {
    pub fn value(&self, delta: f64) -> Option<&IncrementPoint> {
        self.points
            .iter()
            .find(|p| (p.delta - delta).abs() <= 1e-9 * delta.max(1e-300))
    }

    /// For every `δ` whose half is also on the curve: the paired difference
    /// `φ(δ) − φ(δ/2)` and whether `φ(δ/2) < φ(δ) + 3·SE`.
    pub fn halving_steps(&self) -> Vec<(f64, Estimate, bool)> {
        let mut out = Vec::new();
        for p in &self.points {
            if p.delta == 0.0 {
                continue;
            }
            if let Some(h) = self.value(0.5 * p.delta) {
                let d: Vec<f64> = p.samples.iter().zip(&h.samples).map(|(a, b)| a - b).collect();
                let e = Estimate::from_samples(&d);
                let ok = h.estimate.mean < p.estimate.mean + 3.0 * e.std_error
                    || (h.estimate.mean == 0.0 && p.estimate.mean == 0.0);
                out.push((p.delta, e, ok));
            }
        }
        out
    }

    pub fn halving_monotone(&self) -> bool {
        self.halving_steps().iter().all(|s| s.2)
    }

    /// `φ(δ_min) ≤ tolerance` at the smallest positive `δ`.
    pub fn small_increment_below(&self, tolerance: f64) -> bool {
        self.points
            .iter()
            .filter(|p| p.delta > 0.0)
            .min_by(|a, b| a.delta.total_cmp(&b.delta))
            .is_some_and(|p| p.estimate.mean <= tolerance)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta", "mean", "std_error", "n_valid"])?;
        for p in &self.points {
            w.write_record([
                format!("{}", p.delta),
                format!("{:.12e}", p.estimate.mean),
                format!("{:.6e}", p.estimate.std_error),
                p.estimate.n_valid.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Increment curve from paired snapshots at `base_time` and
/// `base_time + δ`.
pub fn aldous_increment(rec: &EnsembleRecord, base_time: f64, deltas: &[f64]) -> Result<AldousCurve> {
    let base = rec.snapshot_index(base_time)?;
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let other = rec.snapshot_index(base_time + delta)?;
        let samples: Vec<f64> = rec
            .valid()
            .map(|tr| {
                let a = tr.snapshots.get(base).ok_or(Error::MissingSnapshot(base_time))?;
                let b = tr
                    .snapshots
                    .get(other)
                    .ok_or(Error::MissingSnapshot(base_time + delta))?;
                Ok(b.distance_sq(a))
            })
            .collect::<Result<_>>()?;
        if samples.is_empty() {
            return Err(Error::InsufficientSamples("no valid trajectories".into()));
        }
        points.push(IncrementPoint {
            delta,
            estimate: Estimate::from_samples(&samples),
            samples,
        });
    }
    Ok(AldousCurve { base_time, points })
}

/// Stationary increment variance of the linear (`σ = 0`) flow,
/// `2 Σ_k (1 − e^{−λδ} cos(κ_k² δ)) |φ_k|² / (2λ)`.
pub fn linear_increment_variance(phi: &NoiseOperator, lambda: f64, delta: f64) -> f64 {
    let g = phi.grid();
    let damp = (-lambda * delta).exp();
    phi.support()
        .iter()
        .map(|&i| {
            let s = phi.amplitudes()[i].norm_sqr() / (2.0 * lambda);
            2.0 * (1.0 - damp * (g.kappa_sq(i) * delta).cos()) * s
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub cutoff: usize,
    /// `sup_t Ê[tail_mass(u_t, cutoff, 1)]`
    pub sup_mean: f64,
    pub std_error_at_sup: f64,
    pub time_of_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailProfile {
    pub points: Vec<TailPoint>,
}

impl TailProfile {
    pub fn is_nonincreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].sup_mean <= w[0].sup_mean)
    }

    /// Every cutoff at or beyond `k_max` has an identically zero tail.
    pub fn vanishes_beyond(&self, k_max: usize) -> bool {
        self.points
            .iter()
            .filter(|p| p.cutoff >= k_max)
            .all(|p| p.sup_mean == 0.0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cutoff", "sup_mean", "std_error_at_sup", "time_of_sup"])?;
        for p in &self.points {
            w.write_record([
                p.cutoff.to_string(),
                format!("{:.12e}", p.sup_mean),
                format!("{:.6e}", p.std_error_at_sup),
                format!("{}", p.time_of_sup),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// For each recorded cutoff `N` (sorted ascending): `sup_t Ê[tail_N(u_t)]`
/// with `r = 1`.
pub fn tightness_tail_profile(rec: &EnsembleRecord, cutoffs: &[usize]) -> Result<TailProfile> {
    let mut sorted = cutoffs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let times = rec.sample_times();
    let points = sorted
        .into_iter()
        .map(|cutoff| {
            let obs = Observable::Tail(cutoff);
            let mut best = TailPoint {
                cutoff,
                sup_mean: f64::NEG_INFINITY,
                std_error_at_sup: 0.0,
                time_of_sup: 0.0,
            };
            for (ti, &t) in times.iter().enumerate() {
                let e = Estimate::from_samples(&rec.cross_section(obs, ti)?);
                if e.mean > best.sup_mean {
                    best = TailPoint {
                        cutoff,
                        sup_mean: e.mean,
                        std_error_at_sup: e.std_error,
                        time_of_sup: t,
                    };
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(TailProfile { points })
}

/// `‖v‖^{2σ+2}_{L^{2σ+2}} / (‖v‖^{dσ}_{H¹} ‖v‖^{σ(2−d)+2}_{L²})`, the ratio
/// bounded by the Gagliardo-Nirenberg constant. `None` for the zero field.
pub fn gn_ratio(f: &SpectralField, sigma: f64) -> Option<f64> {
    let d = f.grid().dim() as f64;
    let l2 = crate::field::mass(f).sqrt();
    if l2 == 0.0 {
        return None;
    }
    let h1 = sobolev_norm_sq(f, 1.0).sqrt();
    let num = power_integral(&f.to_physical(), 2.0 * sigma + 2.0);
    Some(num / (h1.powf(d * sigma) * l2.powf(sigma * (2.0 - d) + 2.0)))
}
