pub mod aggregate;
pub mod diffusion;
pub mod panel;
pub mod plot;
pub mod sleep;
pub mod synth;

use std::path::{Path, PathBuf};

use netcensus::aggregate::{io::read_boundaries, Boundaries};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliResult, ResultExt};
use crate::files::read_with;
use crate::manifest::Run;

pub const MANIFEST: &str = "run_manifest.json";

pub struct Ctx {
    pub config: RunConfig,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: usize,
}

impl Ctx {
    /// Starts a manifest recording `section` of the effective configuration.
    pub fn start(&self, command: &str, section: &impl Serialize) -> Run {
        let config = serde_json::to_value(section).unwrap_or(serde_json::Value::Null);
        Run::new(command, self.config_path.clone(), config, self.seed, self.workers)
    }
}

pub fn load_boundaries(path: &Path, run: &mut Run) -> CliResult<Boundaries> {
    let cities = read_with(path, read_boundaries)?;
    run.input(path);
    Boundaries::new(cities).usage_ctx(|| format!("boundaries in {}", path.display()))
}
