use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use snls_core::diagnostics::{
    self, aldous_increment, energy_balance_residual, linear_increment_variance,
    mass_balance_residual, stationary_moment_check, tightness_tail_profile, transient_mass_curve,
};
use snls_core::measures::kb_convergence;
use snls_core::{run_ensemble, EnsembleRecord, HsWeight, InitialLaw};

use crate::config::{Config, ConfigError, Resolved};
use crate::manifest::{unix_now, RunManifest};
use crate::{Check, Status};

pub type CmdResult = Result<Status, ConfigError>;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ConfigError + '_ {
    move |e| ConfigError(format!("cannot write {}: {e}", path.display()))
}

struct Session {
    r: Resolved,
    rec: EnsembleRecord,
    dir: PathBuf,
    started: u64,
}

impl Session {
    fn open(path: &Path) -> Result<Self, ConfigError> {
        let r = Config::load(path)?.resolve()?;
        let started = unix_now();
        let rec = run_ensemble(&r.sim, &r.phi, &r.law, &r.plan)?;
        let dir = r
            .config
            .output
            .dir
            .join(format!("run_{}_{}", r.plan.master_seed, &r.hash[..12]));
        snls_core::io::write_record(&rec, &dir)?;
        println!(
            "{} trajectories, {} flagged, output {}",
            rec.n_traj(),
            rec.n_flagged(),
            dir.display()
        );
        Ok(Self { r, rec, dir, started })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, ConfigError> {
        let path = self.dir.join(name);
        File::create(&path).map(BufWriter::new).map_err(io_err(&path))
    }

    fn finish(&self, command: String) -> Result<(), ConfigError> {
        RunManifest {
            config: &self.r.config.canonical(),
            config_hash: &self.r.hash,
            master_seed: self.r.plan.master_seed,
            command,
            started: self.started,
            finished: unix_now(),
        }
        .write(&self.dir)
        .map_err(io_err(&self.dir))
    }
}

fn verdict(pass: bool) -> Status {
    println!("{}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Status::Ok
    } else {
        Status::Failed
    }
}

pub fn simulate(path: &Path) -> CmdResult {
    let s = Session::open(path)?;
    s.finish("simulate".into())?;
    let last = *s.rec.sample_times().last().expect("nonempty schedule");
    println!("E[mass](t={last}) = {}", s.rec.estimate_observable("mass", last)?);
    Ok(if s.rec.n_flagged() > 0 {
        eprintln!("warning: {} trajectories blew up", s.rec.n_flagged());
        Status::BlowUp
    } else {
        Status::Ok
    })
}

pub fn verify(path: &Path, check: Check) -> CmdResult {
    let s = Session::open(path)?;
    let (r, rec) = (&s.r, &s.rec);
    let lambda = r.config.verify.assumed_lambda.unwrap_or(r.sim.lambda);
    let mut assumed = r.sim;
    assumed.lambda = lambda;
    let hs = r.phi.hs_norm_sq(HsWeight::Identity);
    let grad = r.phi.hs_norm_sq(HsWeight::Gradient);

    let name = format!("{check:?}").to_lowercase();
    let out = s.create(&format!("verify_{name}.csv"))?;
    let pass = match check {
        Check::Mass | Check::Energy => {
            let (report, floor) = if check == Check::Mass {
                let floor = if hs > 0.0 { 1e-3 * hs } else { 1e-6 };
                (mass_balance_residual(rec, &assumed, &r.phi, r.window)?, floor)
            } else {
                let floor = if grad > 0.0 { 1e-2 * grad } else { 1e-6 };
                (energy_balance_residual(rec, &assumed, &r.phi, r.window)?, floor)
            };
            report.write_csv(out)?;
            for note in &report.notes {
                println!("note: {note}");
            }
            println!(
                "{} balance on [{}, {}]: residual {:.4e}, tolerance max(3 SE = {:.4e}, {floor:.4e})",
                report.functional,
                report.window.0,
                report.window.1,
                report.residual,
                3.0 * report.residual_se
            );
            report.passes(floor)
        }
        Check::Transient => {
            let curve = transient_mass_curve(rec, &assumed, &r.phi)?;
            diagnostics::write_transient_csv(&curve, out)?;
            let bad: Vec<_> = curve.iter().filter(|p| !p.passes()).collect();
            for p in &bad {
                println!(
                    "t = {}: estimated {:.4e} vs predicted {:.4e} (3 SE = {:.4e})",
                    p.t,
                    p.estimated,
                    p.predicted,
                    3.0 * p.difference_se
                );
            }
            println!("transient mass curve: {} of {} points outside 3 SE", bad.len(), curve.len());
            bad.is_empty()
        }
        Check::Stationary => {
            let k = r.config.verify.moment_k;
            let c = stationary_moment_check(rec, &r.phi, lambda, k, r.window)?;
            let mut w = snls_core::io::csv_writer(out);
            w.write_record(["k", "lhs", "lhs_se", "rhs", "rhs_se", "difference", "difference_se", "bound"])
                .and_then(|_| {
                    w.write_record([
                        k.to_string(),
                        format!("{:.12e}", c.lhs.mean),
                        format!("{:.6e}", c.lhs.std_error),
                        format!("{:.12e}", c.rhs.mean),
                        format!("{:.6e}", c.rhs.std_error),
                        format!("{:.12e}", c.difference.mean),
                        format!("{:.6e}", c.difference.std_error),
                        format!("{:.12e}", c.bound),
                    ])
                })
                .map_err(snls_core::Error::from)?;
            w.flush().map_err(io_err(&s.dir))?;
            println!(
                "moment recursion k={k}: lhs {} rhs {} difference {}; bound {:.4e}",
                c.lhs, c.rhs, c.difference, c.bound
            );
            c.passes()
        }
        Check::Aldous => {
            let deltas = &r.config.verify.aldous_deltas;
            let curve = aldous_increment(rec, r.aldous_base, deltas)?;
            curve.write_csv(out)?;
            let mut ok = curve.halving_monotone();
            for (delta, diff, step_ok) in curve.halving_steps() {
                println!("phi({delta}) - phi({}) = {diff}{}", delta / 2.0, if step_ok { "" } else { "  FAIL" });
            }
            if r.sim.sigma == 0.0 {
                for p in &curve.points {
                    let oracle = linear_increment_variance(&r.phi, lambda, p.delta);
                    let good = (p.estimate.mean - oracle).abs() <= 3.0 * p.estimate.std_error;
                    println!("delta {}: {} vs linear closed form {oracle:.4e}", p.delta, p.estimate);
                    ok &= good;
                }
            }
            ok
        }
        Check::Tail => {
            let cutoffs = &r.plan.tail_cutoffs;
            if cutoffs.is_empty() {
                return Err(ConfigError("check=tail needs run.tail_cutoffs".into()));
            }
            let profile = tightness_tail_profile(rec, cutoffs)?;
            profile.write_csv(out)?;
            for p in &profile.points {
                println!("cutoff {}: sup_t E[tail] = {:.4e} at t = {}", p.cutoff, p.sup_mean, p.time_of_sup);
            }
            let mut ok = profile.is_nonincreasing();
            // Nothing excites modes beyond the noise band in the linear flow.
            if r.sim.sigma == 0.0 && matches!(r.law, InitialLaw::Zero) {
                ok &= profile.vanishes_beyond(r.phi.band_limit());
            }
            ok
        }
    };
    s.finish(format!("verify --check {name}"))?;
    Ok(verdict(pass))
}

pub fn kb(path: &Path, horizons: &[f64], observable: &str) -> CmdResult {
    let s = Session::open(path)?;
    let v = &s.r.config.verify;
    let curve = kb_convergence(&s.rec, observable, horizons, v.kb_batches)?;
    curve.write_csv(s.create("kb.csv")?)?;
    for (i, d) in curve.distances.iter().enumerate() {
        println!("W1(mu_{}, mu_{}) = {d:.4e}", curve.horizons[i], curve.horizons[i + 1]);
    }
    s.finish(format!(
        "kb --horizons {} --observable {observable}",
        horizons.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",")
    ))?;
    Ok(verdict(curve.is_nonincreasing(v.kb_z)))
}
