//! Plain-text run manifest with SHA-256 hashes of every output file.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.txt";

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub struct RunManifest<'a> {
    pub config: &'a str,
    pub config_hash: &'a str,
    pub master_seed: u64,
    pub command: String,
    pub started: u64,
    pub finished: u64,
}

impl RunManifest<'_> {
    /// Hashes every regular file in `dir` except the manifest itself and
    /// writes the manifest there.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut files: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n != FILE_NAME)
            .collect();
        files.sort();
        let mut out = String::new();
        let _ = writeln!(out, "snls {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "command {}", self.command);
        let _ = writeln!(out, "master_seed {}", self.master_seed);
        let _ = writeln!(out, "config_sha256 {}", self.config_hash);
        let _ = writeln!(out, "started_unix {}", self.started);
        let _ = writeln!(out, "finished_unix {}", self.finished);
        out.push_str("\n[files]\n");
        for name in &files {
            let bytes = std::fs::read(dir.join(name))?;
            let _ = writeln!(out, "{}  {name}", hex::encode(Sha256::digest(&bytes)));
        }
        out.push_str("\n[config]\n");
        out.push_str(self.config);
        std::fs::write(dir.join(FILE_NAME), out)
    }
}
