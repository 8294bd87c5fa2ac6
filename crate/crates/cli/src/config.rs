//! Run configuration: one JSON file with a section per stage. Missing
//! sections and fields take their defaults.

use std::path::Path;

use netcensus::aggregate::DEFAULT_MISSONI_CUTOFF;
use netcensus::chronobio::{EligibilityConfig, ForestConfig};
use netcensus::diffusion::SaemConfig;
use netcensus::synth::WorldConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synth: WorldConfig,
    pub aggregate: AggregateSection,
    pub diffusion: SaemConfig,
    pub sleep: SleepSection,
    pub panel: PanelSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregateSection {
    /// Months covered by fewer scan days are excluded.
    pub min_scan_days: u32,
    pub missoni: bool,
    /// Cities with fewer unique addresses in any month are left out of the
    /// correction.
    pub missoni_cutoff: u64,
}

impl Default for AggregateSection {
    fn default() -> Self {
        Self { min_scan_days: 20, missoni: true, missoni_cutoff: DEFAULT_MISSONI_CUTOFF }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SleepSection {
    /// `forest.importance` is ignored; see `importance`.
    pub forest: ForestConfig,
    /// Compute permutation importance when training.
    pub importance: bool,
    pub min_days: usize,
    pub min_online: u64,
    /// Survey respondents needed for a city-year label.
    pub min_respondents: usize,
    /// Bin width of the duration density, hours.
    pub density_bin_h: f64,
}

impl Default for SleepSection {
    fn default() -> Self {
        let e = EligibilityConfig::default();
        Self {
            forest: ForestConfig::default(),
            importance: true,
            min_days: e.min_days,
            min_online: e.min_online,
            min_respondents: 5,
            density_bin_h: 0.25,
        }
    }
}

impl SleepSection {
    pub fn eligibility(&self) -> EligibilityConfig {
        EligibilityConfig { min_days: self.min_days, min_online: self.min_online }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSection {
    /// Rows with a positive GVA value a sector needs to be estimated.
    pub sector_min_rows: usize,
}

impl Default for PanelSection {
    fn default() -> Self {
        Self { sector_min_rows: 10 }
    }
}

pub fn load(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}
