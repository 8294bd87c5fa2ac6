use std::path::PathBuf;

use netcensus::tabular::Table;

use super::Ctx;
use crate::error::{CliError, CliResult, ResultExt};
use crate::files::open;
use crate::plot::{render, Kind, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Line,
    Density,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Input table with a header row.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, value_enum, default_value = "line")]
    kind: PlotKind,
    /// Column for the horizontal axis.
    #[arg(long)]
    x: String,
    /// Column for the vertical axis.
    #[arg(long)]
    y: String,
    /// Column splitting rows into one line per value.
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    title: Option<String>,
    /// SVG file to write; the manifest goes next to it as <stem>.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let mut run = ctx.start("plot", &serde_json::Value::Null);
    let mut required = vec![args.x.as_str(), args.y.as_str()];
    if let Some(g) = &args.group {
        required.push(g.as_str());
    }
    let context = || format!("reading {}", args.csv.display());
    let mut table = Table::new(open(&args.csv)?, &required).usage_ctx(context)?;
    let mut series = Series::new();
    let mut rows = 0usize;
    table
        .for_each_row(|row| {
            rows += 1;
            // Blank cells (e.g. months without an observation) are skipped.
            if row.str(&args.x).is_empty() || row.str(&args.y).is_empty() {
                return Ok(());
            }
            let x: f64 = row.parse(&args.x)?;
            let y: f64 = row.parse(&args.y)?;
            let group = args.group.as_deref().map(|g| row.str(g).to_string()).unwrap_or_default();
            series.entry(group).or_default().push((x, y));
            Ok(())
        })
        .usage_ctx(context)?;
    run.input(&args.csv);
    let kind = match args.kind {
        PlotKind::Line => Kind::Line,
        PlotKind::Density => Kind::Density,
    };
    let svg = render(&series, kind, &args.x, &args.y, args.title.as_deref())
        .ok_or_else(|| CliError::usage(format!("{}: no data rows to plot ({rows} rows read)", args.csv.display())))?;
    std::fs::write(&args.out, svg).usage_ctx(|| format!("writing {}", args.out.display()))?;
    run.output(&args.out);
    run.note("points", series.values().map(Vec::len).sum::<usize>());
    run.note("groups", series.len());
    run.finish(&args.out.with_extension("manifest.json"))?;
    Ok(())
}
