//! Panel input and regression table output.
//!
//! Panel: `region_id,country,year,gdp_pc,ip_pc` followed by one
//! `gva_<sector>` column per [`Sector`]; GVA cells may be empty.
//! Results: `column,spec,sample,beta,robust_se,n_obs,n_regions,r_squared,within_r_squared`.

use std::io::{Read, Write};

use super::{FitResult, PanelObservation, Sector};
use crate::tabular::{self, Table};

pub const PANEL_COLUMNS: [&str; 5] = ["region_id", "country", "year", "gdp_pc", "ip_pc"];

pub fn read_panel<R: Read>(input: R) -> tabular::Result<Vec<PanelObservation>> {
    let mut table = Table::new(input, &PANEL_COLUMNS)?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let mut gva = [None; 7];
        for s in Sector::ALL {
            let column = format!("gva_{}", s.key());
            if let Some(text) = row.optional(&column).filter(|t| !t.is_empty()) {
                gva[s.index()] = Some(text.parse::<f64>().map_err(|e| row.field_error(&column, e.to_string()))?);
            }
        }
        out.push(PanelObservation {
            region_id: row.str("region_id").to_string(),
            country: row.str("country").to_string(),
            year: row.parse("year")?,
            gdp_pc: row.parse("gdp_pc")?,
            ip_pc: row.parse("ip_pc")?,
            gva,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_panel<W: Write>(out: W, panel: &[PanelObservation]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    write!(w, "{}", PANEL_COLUMNS.join(","))?;
    for s in Sector::ALL {
        write!(w, ",gva_{}", s.key())?;
    }
    writeln!(w)?;
    for o in panel {
        write!(w, "{},{},{},{},{}", o.region_id, o.country, o.year, o.gdp_pc, o.ip_pc)?;
        for g in o.gva {
            match g {
                Some(v) => write!(w, ",{v}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    w.flush()
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub column: String,
    pub spec: String,
    pub sample: String,
    pub fit: FitResult,
}

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "column,spec,sample,beta,robust_se,n_obs,n_regions,r_squared,within_r_squared")?;
    for r in rows {
        let f = &r.fit;
        writeln!(
            w,
            "{},\"{}\",\"{}\",{:.6},{:.6},{},{},{:.4},{:.4}",
            r.column, r.spec, r.sample, f.beta, f.robust_se, f.n_obs, f.n_regions, f.r_squared, f.within_r_squared
        )?;
    }
    w.flush()
}
