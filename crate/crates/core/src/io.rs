//! CSV export of ensemble records.
//!
//! Layout: one `<observable>.csv` per observable with columns
//! `t, traj_0, traj_1, …`, a `summary.csv` with
//! `t, observable, mean, std_error, n_valid`, and `trajectories.csv` with
//! the blow-up flags.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::ensemble::{EnsembleRecord, Estimate};
use crate::error::Result;

/// Shortest round-trippable representation; identical values give
/// identical bytes.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

pub fn fmt_time(t: f64) -> String {
    // Sample times are step counts times dt; trim float noise.
    let r = (t * 1e9).round() / 1e9;
    format!("{r}")
}

/// Writes every CSV file for `rec` into `dir` and returns their paths.
pub fn write_record(rec: &EnsembleRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let grid = *rec.grid();
    let times = rec.sample_times();
    let mut written = Vec::new();

    for (o, obs) in rec.observables().iter().enumerate() {
        let path = dir.join(format!("{}.csv", obs.name(&grid)));
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        let mut header = vec!["t".to_string()];
        header.extend(rec.trajectories().iter().map(|tr| format!("traj_{}", tr.index)));
        w.write_record(&header)?;
        for (ti, &t) in times.iter().enumerate() {
            let mut row = vec![fmt_time(t)];
            row.extend(rec.trajectories().iter().map(|tr| fmt_value(rec.value(tr, o, ti))));
            w.write_record(&row)?;
        }
        w.flush()?;
        written.push(path);
    }

    let path = dir.join("summary.csv");
    write_summary(rec, File::create(&path)?)?;
    written.push(path);

    let path = dir.join("trajectories.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
    w.write_record(["trajectory", "flagged", "blowup_time", "blowup_norm"])?;
    for tr in rec.trajectories() {
        let (t, n) = tr
            .blowup
            .as_ref()
            .map(|b| (fmt_time(b.time), fmt_value(b.norm)))
            .unwrap_or_default();
        w.write_record([tr.index.to_string(), tr.is_flagged().to_string(), t, n])?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}

pub fn write_summary<W: Write>(rec: &EnsembleRecord, out: W) -> Result<()> {
    let grid = *rec.grid();
    let mut w = csv::Writer::from_writer(BufWriter::new(out));
    w.write_record(["t", "observable", "mean", "std_error", "n_valid"])?;
    for (ti, t) in rec.sample_times().iter().enumerate() {
        for obs in rec.observables() {
            let e = Estimate::from_samples(&rec.cross_section(*obs, ti)?);
            w.write_record([
                fmt_time(*t),
                obs.name(&grid),
                fmt_value(e.mean),
                fmt_value(e.std_error),
                e.n_valid.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV writer over any sink, for callers without a direct `csv` dependency.
pub fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::Writer::from_writer(out)
}
