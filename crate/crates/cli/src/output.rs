//! Output files of one run. Files are removed again unless the run commits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ExperimentConfig;

pub struct RunOutputs {
    dir: PathBuf,
    created: Vec<PathBuf>,
    committed: bool,
}

impl RunOutputs {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(RunOutputs {
            dir: dir.to_path_buf(),
            created: Vec::new(),
            committed: false,
        })
    }

    /// Resolves `name` against the output directory and registers it for cleanup.
    pub fn path(&mut self, name: &Path) -> PathBuf {
        let p = if name.is_absolute() {
            name.to_path_buf()
        } else {
            self.dir.join(name)
        };
        self.created.push(p.clone());
        p
    }

    pub fn csv(&mut self, name: &Path) -> std::io::Result<csv::Writer<BufWriter<File>>> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(File::create(p)?)))
    }

    pub fn files(&self) -> Vec<String> {
        self.created.iter().map(|p| p.display().to_string()).collect()
    }

    pub fn write_manifest(&mut self, manifest: &Manifest) -> std::io::Result<()> {
        let p = self.path(Path::new("manifest.json"));
        let mut out = BufWriter::new(File::create(p)?);
        serde_json::to_writer_pretty(&mut out, manifest)?;
        out.write_all(b"\n")?;
        out.flush()
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for RunOutputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.created {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub prng: &'static str,
    pub threads: usize,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
    pub config: ExperimentConfig,
}

/// Start time of a run, for the manifest.
pub struct Clock {
    started: SystemTime,
    timer: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Clock {
            started: SystemTime::now(),
            timer: Instant::now(),
        }
    }

    pub fn started_unix_s(&self) -> f64 {
        self.started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
    }

    pub fn elapsed_s(&self) -> f64 {
        self.timer.elapsed().as_secs_f64()
    }
}

/// 17 significant digits, enough to round-trip an f64.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}
