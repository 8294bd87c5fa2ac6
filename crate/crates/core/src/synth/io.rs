//! World files and ground-truth tables.
//!
//! Truth tables: `truth_diffusion.csv` (`country,k,alpha,beta`),
//! `truth_pools.csv` (`city_id,month_index,pool,detected`),
//! `truth_sleep.csv` (sleep-times format) and `truth_panel.csv`
//! (`term,value`).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{CountryTruth, GroundTruth, PoolTruth, Result, World};
use crate::diffusion::LogisticParams;
use crate::econo::Sector;
use crate::tabular::{self, Table};

pub const SCANS_FILE: &str = "scans.csv";
pub const GEO_FILE: &str = "geo.csv";
pub const BOUNDARIES_FILE: &str = "boundaries.geojson";
pub const SLEEP_BINS_FILE: &str = "sleep_bins.csv";
pub const SURVEY_FILE: &str = "survey.csv";
pub const PANEL_FILE: &str = "panel.csv";
pub const TRUTH_DIFFUSION_FILE: &str = "truth_diffusion.csv";
pub const TRUTH_POOLS_FILE: &str = "truth_pools.csv";
pub const TRUTH_SLEEP_FILE: &str = "truth_sleep.csv";
pub const TRUTH_PANEL_FILE: &str = "truth_panel.csv";

pub fn write_truth_diffusion<W: Write>(out: W, rows: &[CountryTruth]) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "country,k,alpha,beta")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.country, r.params.k, r.params.alpha, r.params.beta)?;
    }
    w.flush()
}

pub fn read_truth_diffusion<R: Read>(input: R) -> tabular::Result<Vec<CountryTruth>> {
    let mut t = Table::new(input, &["country", "k", "alpha", "beta"])?;
    let mut out = Vec::new();
    t.for_each_row(|row| {
        out.push(CountryTruth {
            country: row.str("country").to_string(),
            params: LogisticParams { k: row.parse("k")?, alpha: row.parse("alpha")?, beta: row.parse("beta")? },
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_truth_pools<W: Write>(out: W, rows: &[PoolTruth]) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "city_id,month_index,pool,detected")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.city_id, r.month_index, r.pool, r.detected)?;
    }
    w.flush()
}

pub fn read_truth_pools<R: Read>(input: R) -> tabular::Result<Vec<PoolTruth>> {
    let mut t = Table::new(input, &["city_id", "month_index", "pool", "detected"])?;
    let mut out = Vec::new();
    t.for_each_row(|row| {
        out.push(PoolTruth {
            city_id: row.parse("city_id")?,
            month_index: row.parse("month_index")?,
            pool: row.parse("pool")?,
            detected: row.parse("detected")?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_truth_panel<W: Write>(out: W, truth: &super::PanelTruth) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "term,value")?;
    writeln!(w, "beta_gdp,{}", truth.beta_gdp)?;
    for s in Sector::ALL {
        writeln!(w, "gamma_{},{}", s.key(), truth.gamma[s.index()])?;
    }
    writeln!(w, "lag,{}", truth.lag)?;
    w.flush()
}

fn create(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> Result<File> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    written.push(path);
    Ok(f)
}

/// Writes the world files, then the truth tables, into `dir` (created if
/// needed). Returns the paths written, in order.
pub fn write_world(world: &World, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    crate::ipcore::io::write_scans(create(dir, SCANS_FILE, &mut written)?, &world.scans)?;
    crate::ipcore::io::write_geo(create(dir, GEO_FILE, &mut written)?, &world.geo)?;
    crate::aggregate::io::write_boundaries(create(dir, BOUNDARIES_FILE, &mut written)?, &world.boundaries)?;
    crate::aggregate::io::write_bins(create(dir, SLEEP_BINS_FILE, &mut written)?, &world.sleep_bins)?;
    crate::chronobio::io::write_survey(create(dir, SURVEY_FILE, &mut written)?, &world.survey)?;
    crate::econo::io::write_panel(create(dir, PANEL_FILE, &mut written)?, &world.panel)?;
    write_truth(&world.truth, dir, &mut written)?;
    Ok(written)
}

fn write_truth(truth: &GroundTruth, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    write_truth_diffusion(create(dir, TRUTH_DIFFUSION_FILE, written)?, &truth.countries)?;
    write_truth_pools(create(dir, TRUTH_POOLS_FILE, written)?, &truth.pools)?;
    crate::chronobio::io::write_sleep_times(create(dir, TRUTH_SLEEP_FILE, written)?, &truth.sleep)?;
    write_truth_panel(create(dir, TRUTH_PANEL_FILE, written)?, &truth.panel)?;
    Ok(())
}
