use std::path::PathBuf;

use netcensus::econo::io::{read_panel, write_results, ResultRow};
use netcensus::econo::{apply_sample_filter, fit_fe, fit_sectoral, gdp_table_columns, EconoError, FitResult, RegressionSpec, Sector};
use serde_json::json;

use super::{Ctx, MANIFEST};
use crate::error::{CliError, CliResult};
use crate::files::{create_dir, read_with, write_with};
use crate::manifest::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Table {
    Gdp,
    Sectoral,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Spec {
    /// Year effects only.
    Pooled,
    /// Region and year effects.
    RegionFe,
    /// Region effects, country-year effects and region trends.
    Full,
}

impl Spec {
    fn regression(self) -> RegressionSpec {
        match self {
            Spec::Pooled => RegressionSpec::pooled(),
            Spec::RegionFe => RegressionSpec::region_fe(),
            Spec::Full => RegressionSpec::full(),
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Regional panel: region_id,country,year,gdp_pc,ip_pc,gva_<sector>...
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Tables to estimate when no single specification is requested.
    #[arg(long, value_enum, default_value = "all")]
    table: Table,
    /// Estimate a single GDP specification instead of the tables.
    #[arg(long, value_enum)]
    spec: Option<Spec>,
    /// Lag of IP per capita in years for --spec.
    #[arg(long, requires = "spec")]
    lag: Option<u32>,
    /// Restrict the sector table to one sector key.
    #[arg(long)]
    sector: Option<String>,
}

fn sample_label(filter: Option<&netcensus::econo::SampleFilter>) -> String {
    filter.map(|f| f.to_string()).unwrap_or_else(|| "all".into())
}

fn is_input_error(e: &EconoError) -> bool {
    matches!(e, EconoError::InvalidObservation { .. } | EconoError::Duplicate { .. })
}

/// Collects rows; a failing column is reported and left out.
struct Rows {
    rows: Vec<ResultRow>,
    failed: Vec<String>,
}

impl Rows {
    fn push(&mut self, column: &str, spec: String, sample: String, fit: Result<FitResult, EconoError>) -> CliResult<()> {
        match fit {
            Ok(fit) => self.rows.push(ResultRow { column: column.to_string(), spec, sample, fit }),
            Err(e) if is_input_error(&e) => return Err(CliError::usage(format!("panel: {e}"))),
            Err(e) => {
                log::warn!("column {column}: {e}");
                self.failed.push(format!("{column}: {e}"));
            }
        }
        Ok(())
    }
}

fn emit(run: &mut Run, args: &Args, name: &str, rows: Rows) -> CliResult<()> {
    if rows.rows.is_empty() {
        return Err(CliError::compute(format!("every column of {name} failed: {}", rows.failed.join("; "))));
    }
    let p = args.out.join(name);
    write_with(&p, |w| write_results(w, &rows.rows))?;
    run.output(&p);
    run.note(&format!("{name} failed columns"), rows.failed);
    Ok(())
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let sector = match &args.sector {
        None => None,
        Some(key) => Some(Sector::from_key(key).ok_or_else(|| {
            let valid: Vec<&str> = Sector::ALL.iter().map(|s| s.key()).collect();
            CliError::usage(format!("unknown sector `{key}`; valid sectors: {}", valid.join(", ")))
        })?),
    };
    let mut run = ctx.start("panel", &ctx.config.panel);
    run.note(
        "flags",
        json!({
            "table": format!("{:?}", args.table).to_lowercase(),
            "spec": args.spec.map(|s| s.regression()),
            "lag": args.lag,
            "sector": sector.map(|s| s.key()),
        }),
    );
    let panel = read_with(&args.panel, read_panel)?;
    run.input(&args.panel);
    create_dir(&args.out)?;

    if let Some(spec) = args.spec {
        let spec = spec.regression().with_lag(args.lag.unwrap_or(0));
        let fit = fit_fe(&panel, &spec).map_err(|e| {
            let msg = format!("{}: {e}", spec.describe());
            if is_input_error(&e) {
                CliError::usage(msg)
            } else {
                CliError::compute(msg)
            }
        })?;
        let p = args.out.join("results.csv");
        let row = ResultRow { column: "custom".into(), spec: spec.describe(), sample: "all".into(), fit };
        write_with(&p, |w| write_results(w, std::slice::from_ref(&row)))?;
        run.output(&p);
        run.note("beta", row.fit.beta);
        run.finish(&args.out.join(MANIFEST))?;
        return Ok(());
    }

    if matches!(args.table, Table::Gdp | Table::All) {
        let mut rows = Rows { rows: Vec::new(), failed: Vec::new() };
        for col in gdp_table_columns() {
            let fit = match &col.filter {
                None => fit_fe(&panel, &col.spec),
                Some(f) => apply_sample_filter(&panel, f).and_then(|(sub, _)| fit_fe(&sub, &col.spec)),
            };
            rows.push(col.name, col.spec.describe(), sample_label(col.filter.as_ref()), fit)?;
        }
        emit(&mut run, &args, "gdp_table.csv", rows)?;
    }
    if matches!(args.table, Table::Sectoral | Table::All) || sector.is_some() {
        let mut rows = Rows { rows: Vec::new(), failed: Vec::new() };
        let spec = RegressionSpec::region_fe().describe();
        for s in Sector::ALL.into_iter().filter(|s| sector.is_none_or(|x| x == *s)) {
            rows.push(s.key(), spec.clone(), "all".into(), fit_sectoral(&panel, s, ctx.config.panel.sector_min_rows))?;
        }
        emit(&mut run, &args, "sectoral_table.csv", rows)?;
    }
    run.finish(&args.out.join(MANIFEST))?;
    Ok(())
}
