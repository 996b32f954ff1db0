use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const LOCK_FILE: &str = ".subreg.lock";
pub const MANIFEST_FILE: &str = "manifest.json";

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// An output directory held under a lock file for the duration of a run.
pub struct OutDir {
    root: PathBuf,
    outputs: Vec<PathBuf>,
    started: u64,
}

impl OutDir {
    pub fn open(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::config(format!("cannot create {}: {e}", root.display())))?;
        match OpenOptions::new().write(true).create_new(true).open(root.join(LOCK_FILE)) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(CliError::config(format!("{} is locked by another run", root.display())));
            }
            Err(e) => return Err(e.into()),
        }
        Ok(Self { root: root.to_path_buf(), outputs: Vec::new(), started: unix_now() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Records files written by the run.
    pub fn record(&mut self, files: impl IntoIterator<Item = PathBuf>) {
        self.outputs.extend(files);
    }

    /// CSV writer whose first line is `# config_hash=<hash>`.
    pub fn csv(&mut self, rel: &str, hash: &str, header: &[&str]) -> CliResult<CsvOut> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut file = File::create(&path)?;
        writeln!(file, "# config_hash={hash}")?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        self.outputs.push(path);
        Ok(CsvOut { w })
    }

    /// Writes `manifest.json` listing every recorded output.
    pub fn finish(self, command: &str, config: &Value, hash: &str) -> CliResult<PathBuf> {
        #[derive(Serialize)]
        struct Entry {
            path: String,
            bytes: u64,
            sha256: String,
        }
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            config_hash: &'a str,
            code_version: &'a str,
            started_unix: u64,
            finished_unix: u64,
            config: &'a Value,
            outputs: Vec<Entry>,
        }
        let mut outputs = Vec::new();
        for p in &self.outputs {
            let bytes = fs::read(p)?;
            let rel = p.strip_prefix(&self.root).unwrap_or(p);
            outputs.push(Entry {
                path: rel.to_string_lossy().replace('\\', "/"),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        let m = Manifest {
            command,
            config_hash: hash,
            code_version: env!("CARGO_PKG_VERSION"),
            started_unix: self.started,
            finished_unix: unix_now(),
            config,
            outputs,
        };
        let path = self.path(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK_FILE));
    }
}

pub struct CsvOut {
    w: csv::Writer<File>,
}

impl CsvOut {
    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn close(mut self) -> CliResult<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}
