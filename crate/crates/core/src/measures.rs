//! Weighted empirical measures on the real line, Wasserstein-1 distances,
//! and Krylov-Bogolyubov time averages of recorded observables.

use std::cmp::Ordering;
use std::io::Write;

use crate::ensemble::{EnsembleRecord, Observable};
use crate::error::{Error, Result};

/// Finite weighted sample with weights summing to one, kept sorted by value.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<(f64, f64)>,
}

impl EmpiricalMeasure {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let w = 1.0;
        Self::from_weighted(values.iter().map(|&v| (v, w)).collect())
    }

    /// Normalizes the weights; every weight must be strictly positive and
    /// every value finite.
    pub fn from_weighted(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientSamples("empty empirical measure".into()));
        }
        if samples.iter().any(|(v, w)| !v.is_finite() || !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("samples need finite values and positive weights".into()));
        }
        let total: f64 = samples.iter().map(|s| s.1).sum();
        for s in &mut samples {
            s.1 /= total;
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        Ok(Self { samples })
    }

    /// Convex combination `Σ w_j μ_j` (weights renormalized).
    pub fn mixture(parts: &[(&EmpiricalMeasure, f64)]) -> Result<Self> {
        let mut samples = Vec::new();
        for (m, w) in parts {
            if !(*w > 0.0) {
                return Err(Error::Config("mixture weights must be positive".into()));
            }
            samples.extend(m.samples.iter().map(|(v, p)| (*v, p * w)));
        }
        Self::from_weighted(samples)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.1).sum()
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.samples.iter().map(|(v, w)| w * v.powi(k)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|(v, w)| w * (v - m).powi(2)).sum()
    }

    /// `F(x) = μ((−∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let end = self.samples.partition_point(|s| s.0 <= x);
        self.samples[..end].iter().map(|s| s.1).sum::<f64>().min(1.0)
    }

    /// Left-continuous quantile `inf{x : F(x) ≥ p}`.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for (v, w) in &self.samples {
            acc += w;
            if acc >= p {
                return *v;
            }
        }
        self.samples.last().map(|s| s.0).unwrap_or(f64::NAN)
    }

    /// Writes `value,weight` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "weight"])?;
        for (v, p) in &self.samples {
            w.write_record([format!("{v:.17e}"), format!("{p:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Wasserstein-1 distance between two scalar laws, `∫ |F_a(x) − F_b(x)| dx`,
/// evaluated exactly by sweeping the merged support.
pub fn wasserstein1(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let (xs, ys) = (a.samples(), b.samples());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    while i < xs.len() || j < ys.len() {
        let x = match (xs.get(i), ys.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            total += (fa - fb).abs() * (x - p);
        }
        while i < xs.len() && xs[i].0 == x {
            fa += xs[i].1;
            i += 1;
        }
        while j < ys.len() && ys[j].0 == x {
            fb += ys[j].1;
            j += 1;
        }
        prev = Some(x);
    }
    total
}

/// Krylov-Bogolyubov average `μ_n = (1/n) ∫_0^n P_t(u₀, ·) dt` of one
/// observable: every non-flagged trajectory at every sample time in
/// `[0, horizon]`, equally weighted (uniform Riemann sum in time).
pub fn kb_average(rec: &EnsembleRecord, name: &str, horizon: f64) -> Result<EmpiricalMeasure> {
    let obs = rec.observable(name)?;
    kb_average_window(rec, obs, 0.0, horizon)
}

/// Pooled samples over `[t0, t1]`.
pub fn kb_average_window(
    rec: &EnsembleRecord,
    obs: Observable,
    t0: f64,
    t1: f64,
) -> Result<EmpiricalMeasure> {
    let times = rec.sample_times();
    if t1 > times.last().copied().unwrap_or(0.0) + 1e-9 * rec.config.dt {
        return Err(Error::DegenerateWindow(format!(
            "horizon {t1} beyond the last sample time"
        )));
    }
    let idx = rec.time_indices_in(t0, t1);
    if idx.len() < 2 {
        return Err(Error::DegenerateWindow(format!(
            "fewer than 2 sample times in [{t0}, {t1}]"
        )));
    }
    let gaps: Vec<f64> = idx.windows(2).map(|w| times[w[1]] - times[w[0]]).collect();
    let h = gaps[0];
    if gaps.iter().any(|g| (g - h).abs() > 1e-9 * h) {
        return Err(Error::Config("time average requires a uniform schedule".into()));
    }
    let o = rec.observable_index(obs)?;
    let values: Vec<f64> = rec
        .valid()
        .flat_map(|tr| idx.iter().map(move |&t| (tr, t)))
        .map(|(tr, t)| rec.value(tr, o, t))
        .collect();
    EmpiricalMeasure::from_values(&values)
}

/// Distances between Krylov-Bogolyubov averages at consecutive horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct KbCurve {
    pub observable: String,
    pub horizons: Vec<f64>,
    /// `W1(μ_{n_i}, μ_{n_{i+1}})`
    pub distances: Vec<f64>,
    /// Standard error of each successive change `d_{i+1} − d_i`, from
    /// disjoint trajectory batches.
    pub change_se: Vec<f64>,
}

impl KbCurve {
    /// `d_{i+1} ≤ d_i + z·SE` for every consecutive pair.
    pub fn is_nonincreasing(&self, z: f64) -> bool {
        self.distances
            .windows(2)
            .zip(&self.change_se)
            .all(|(d, se)| d[1] <= d[0] + z * se)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["horizon_from", "horizon_to", "w1", "change_se"])?;
        for (i, d) in self.distances.iter().enumerate() {
            let se = if i == 0 { f64::NAN } else { self.change_se[i - 1] };
            w.write_record([
                format!("{}", self.horizons[i]),
                format!("{}", self.horizons[i + 1]),
                format!("{d:.12e}"),
                format!("{se:.6e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Krylov-Bogolyubov averages of one observable at increasing horizons and
/// the distances between consecutive ones. Standard errors of the changes
/// come from up to `batches` disjoint trajectory groups (the spread of the
/// batch values over `√batches`).
pub fn kb_convergence(
    rec: &EnsembleRecord,
    name: &str,
    horizons: &[f64],
    batches: usize,
) -> Result<KbCurve> {
    let obs = rec.observable(name)?;
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("horizons must be strictly increasing".into()));
    }
    let o = rec.observable_index(obs)?;
    let valid: Vec<usize> = (0..rec.n_traj())
        .filter(|&j| !rec.trajectories()[j].is_flagged())
        .collect();
    if valid.is_empty() {
        return Err(Error::InsufficientSamples("no valid trajectories".into()));
    }
    // Validates every horizon against the schedule.
    for &h in horizons {
        kb_average_window(rec, obs, 0.0, h)?;
    }
    let distances_for = |members: &[usize]| -> Result<Vec<f64>> {
        let measures = horizons
            .iter()
            .map(|&h| {
                let idx = rec.time_indices_in(0.0, h);
                let values: Vec<f64> = members
                    .iter()
                    .flat_map(|&j| idx.iter().map(move |&t| (j, t)))
                    .map(|(j, t)| rec.value(&rec.trajectories()[j], o, t))
                    .collect();
                EmpiricalMeasure::from_values(&values)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(measures.windows(2).map(|m| wasserstein1(&m[0], &m[1])).collect())
    };
    let distances = distances_for(&valid)?;
    let n_batches = batches.min(valid.len());
    let mut change_se = vec![0.0; distances.len().saturating_sub(1)];
    if n_batches >= 2 && !change_se.is_empty() {
        let size = valid.len() / n_batches;
        let per_batch = valid
            .chunks(size)
            .take(n_batches)
            .map(distances_for)
            .collect::<Result<Vec<_>>>()?;
        for (i, se) in change_se.iter_mut().enumerate() {
            let changes: Vec<f64> = per_batch.iter().map(|d| d[i + 1] - d[i]).collect();
            *se = crate::ensemble::Estimate::from_samples(&changes).std_error;
        }
    }
    Ok(KbCurve {
        observable: name.to_string(),
        horizons: horizons.to_vec(),
        distances,
        change_se,
    })
}

/// Wasserstein-1 between the cross-trajectory marginals at `t1` and `t2`.
pub fn stationarity_gap(rec: &EnsembleRecord, name: &str, t1: f64, t2: f64) -> Result<f64> {
    let obs = rec.observable(name)?;
    let a = EmpiricalMeasure::from_values(&rec.cross_section(obs, rec.time_index(t1)?)?)?;
    let b = EmpiricalMeasure::from_values(&rec.cross_section(obs, rec.time_index(t2)?)?)?;
    Ok(wasserstein1(&a, &b))
}
