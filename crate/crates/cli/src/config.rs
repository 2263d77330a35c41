//! TOML run configuration: flat `key = value` pairs grouped in sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use snls_core::{
    Complex64, Grid, InitialLaw, NoiseOperator, RunPlan, Schedule, Scheme, SimConfig,
    SpectralField,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub physics: Physics,
    #[serde(default)]
    pub integrator: Integrator,
    pub noise: Noise,
    #[serde(default)]
    pub initial: Initial,
    pub run: Run,
    #[serde(default)]
    pub verify: Verify,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Box side; defaults to 2π.
    #[serde(default = "default_length")]
    pub length: f64,
    pub lambda: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Integrator {
    pub dt: f64,
    pub scheme: String,
    pub dealias: bool,
    pub blowup_guard: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: "strang".into(),
            dealias: false,
            blowup_guard: SimConfig::DEFAULT_BLOWUP_GUARD,
        }
    }
}

/// `profile` is `band`, `modes` or `zero`. A band uses
/// `φ_k = amplitude (1+|k|²)^{−decay}` on `|k|_∞ ≤ k_max`; `modes` lists
/// entries `"k:amp"` (`"k1,k2:amp"` in 2D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub profile: String,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub k_max: usize,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default)]
    pub modes: Vec<String>,
}

/// `law` is `zero`, `gaussian` (band-shaped Gaussian modes, same keys as
/// the noise band) or `modes` (a fixed field from `"k:amp"` entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub law: String,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub k_max: usize,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default)]
    pub modes: Vec<String>,
}

impl Default for Initial {
    fn default() -> Self {
        Self {
            law: "zero".into(),
            amplitude: 0.0,
            k_max: 0,
            decay: default_decay(),
            modes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    pub trajectories: usize,
    pub seed: u64,
    pub t_end: f64,
    pub sample_interval: f64,
    #[serde(default)]
    pub k_report: usize,
    #[serde(default)]
    pub tail_cutoffs: Vec<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
}

/// Parameters of `verify` and `kb`. The window defaults to
/// `[10/λ, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Verify {
    pub window_start: Option<f64>,
    pub window_end: Option<f64>,
    pub moment_k: u32,
    pub aldous_base: Option<f64>,
    pub aldous_deltas: Vec<f64>,
    /// Damping rate assumed by the balance checks, if not the simulated one.
    pub assumed_lambda: Option<f64>,
    /// Tolerance multiplier on standard errors for `kb`.
    pub kb_z: f64,
    pub kb_batches: usize,
}

impl Default for Verify {
    fn default() -> Self {
        Self {
            window_start: None,
            window_end: None,
            moment_k: 1,
            aldous_base: None,
            aldous_deltas: vec![0.4, 0.2, 0.1, 0.05],
            assumed_lambda: None,
            kb_z: 3.0,
            kb_batches: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("runs") }
    }
}

fn default_dim() -> usize {
    1
}
fn default_n() -> usize {
    64
}
fn default_length() -> f64 {
    2.0 * std::f64::consts::PI
}
fn default_decay() -> f64 {
    1.0
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<snls_core::Error> for ConfigError {
    fn from(e: snls_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// Everything a command needs, validated.
pub struct Resolved {
    pub config: Config,
    pub sim: SimConfig,
    pub phi: NoiseOperator,
    pub law: InitialLaw,
    pub plan: RunPlan,
    pub window: (f64, f64),
    pub aldous_base: f64,
    pub hash: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }

    /// Canonical serialization; hashing it names the run directory.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(self) -> Result<Resolved, ConfigError> {
        use sha2::{Digest, Sha256};

        let p = &self.physics;
        let grid = Grid::new(p.dim, p.n, p.length)?;
        let scheme: Scheme = self.integrator.scheme.parse()?;
        let mut sim = SimConfig::new(p.lambda, p.sigma, grid, self.integrator.dt)?.with_scheme(scheme);
        sim.dealias = self.integrator.dealias;
        sim.blowup_guard = self.integrator.blowup_guard;
        sim.validate()?;

        let n = &self.noise;
        let phi = match n.profile.as_str() {
            "band" => NoiseOperator::band(grid, n.amplitude, n.k_max, n.decay)?,
            "modes" => NoiseOperator::from_modes(grid, &parse_modes(&n.modes, p.dim)?)?,
            "zero" => NoiseOperator::zero(grid),
            other => return Err(ConfigError(format!("unknown noise profile '{other}'"))),
        };

        let i = &self.initial;
        let law = match i.law.as_str() {
            "zero" => InitialLaw::Zero,
            "gaussian" => InitialLaw::gaussian_band(grid, i.amplitude, i.k_max, i.decay)?,
            "modes" => {
                let mut f = SpectralField::zeros(grid);
                for (k, c) in parse_modes(&i.modes, p.dim)? {
                    f.set_coeff(&k, c)?;
                }
                InitialLaw::Fixed(f)
            }
            other => return Err(ConfigError(format!("unknown initial law '{other}'"))),
        };

        let r = &self.run;
        let dt = sim.dt;
        let mut plan = RunPlan::new(r.trajectories, r.seed, Schedule::uniform(dt, r.sample_interval, r.t_end)?);
        plan.k_report = r.k_report;
        plan.tail_cutoffs = r.tail_cutoffs.clone();
        plan.workers = r.workers;
        if let Ok(w) = std::env::var(crate::WORKERS_ENV) {
            let w: usize = w
                .parse()
                .map_err(|_| ConfigError(format!("{} must be a positive integer, got '{w}'", crate::WORKERS_ENV)))?;
            plan.workers = Some(w.max(1));
        }

        let v = &self.verify;
        let start = v.window_start.unwrap_or(snls_core::diagnostics::BURN_IN_RELAXATION_TIMES / p.lambda);
        let end = v.window_end.unwrap_or(r.t_end);
        if !(start < end && end <= r.t_end + 1e-12) {
            return Err(ConfigError(format!(
                "verification window [{start}, {end}] must be nonempty and inside [0, {}]",
                r.t_end
            )));
        }
        let aldous_base = v.aldous_base.unwrap_or(start);
        if v.aldous_deltas.iter().any(|d| !(*d >= 0.0)) {
            return Err(ConfigError("aldous_deltas must be nonnegative".into()));
        }
        let mut snaps = vec![aldous_base];
        snaps.extend(v.aldous_deltas.iter().map(|d| aldous_base + d));
        snaps.sort_by(f64::total_cmp);
        snaps.dedup();
        if snaps.last().copied().unwrap_or(0.0) <= r.t_end + 1e-12 {
            plan.snapshots = Schedule::from_times(dt, &snaps)?;
        }

        let hash = hex::encode(Sha256::digest(self.canonical().as_bytes()));
        Ok(Resolved {
            config: self,
            sim,
            phi,
            law,
            plan,
            window: (start, end),
            aldous_base,
            hash,
        })
    }
}

/// `"k:re"`, `"k:re+imi"` style entries; in 2D the key is `"k1,k2"`.
fn parse_modes(entries: &[String], dim: usize) -> Result<Vec<(Vec<i64>, Complex64)>, ConfigError> {
    entries
        .iter()
        .map(|e| {
            let bad = || ConfigError(format!("bad mode entry '{e}', expected \"k:amplitude\""));
            let (k, a) = e.split_once(':').ok_or_else(bad)?;
            let k: Vec<i64> = k
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            if k.len() != dim {
                return Err(ConfigError(format!("mode '{e}' needs {dim} wavenumber(s)")));
            }
            let a: Complex64 = a.trim().parse().map_err(|_| bad())?;
            Ok((k, a))
        })
        .collect()
}
