use std::io::Write;
use std::path::PathBuf;

use netcensus::aggregate::io::{write_bins, write_country_series, write_monthly};
use netcensus::aggregate::{assign_scans, bin_activity, country_ipc_series, missoni_correct, monthly_unique_ips, MissoniReport};
use netcensus::ipcore::io::{read_geo, read_scans};
use netcensus::ipcore::GeoIndex;
use serde_json::json;

use super::{load_boundaries, Ctx, MANIFEST};
use crate::config::AggregateSection;
use crate::error::{CliResult, ResultExt};
use crate::files::{create_dir, read_with, write_with};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Probe records: timestamp,ip,status.
    #[arg(long)]
    scans: PathBuf,
    /// Geolocation ranges: ip_lo,ip_hi,lon,lat,revision_date.
    #[arg(long)]
    geo: PathBuf,
    /// Urban boundaries as GeoJSON.
    #[arg(long)]
    boundaries: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Months covered by fewer scan days are excluded.
    #[arg(long)]
    min_scan_days: Option<u32>,
    /// Cities below this many unique addresses in any month are left out of the scan-bias correction.
    #[arg(long)]
    missoni_cutoff: Option<u64>,
    /// Skip the scan-bias correction and report raw counts.
    #[arg(long)]
    no_missoni: bool,
}

fn write_missoni(w: &mut impl Write, r: &MissoniReport) -> std::io::Result<()> {
    writeln!(w, "year,month,month_index,total,trend,scale,residual")?;
    for (i, m) in r.months.iter().enumerate() {
        writeln!(w, "{},{},{},{},{},{},{}", m.year, m.month, m.index(), r.totals[i], r.trend[i], r.scale[i], r.residuals[i])?;
    }
    Ok(())
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let mut cfg: AggregateSection = ctx.config.aggregate.clone();
    if let Some(d) = args.min_scan_days {
        cfg.min_scan_days = d;
    }
    if let Some(c) = args.missoni_cutoff {
        cfg.missoni_cutoff = c;
    }
    if args.no_missoni {
        cfg.missoni = false;
    }
    let mut run = ctx.start("aggregate", &cfg);

    let scans = read_with(&args.scans, read_scans)?;
    run.input(&args.scans);
    let geo = read_with(&args.geo, read_geo)?;
    run.input(&args.geo);
    let boundaries = load_boundaries(&args.boundaries, &mut run)?;

    let (index, build) = GeoIndex::build(&geo);
    for r in &build.rejected {
        log::warn!("geo record {} rejected: {}", r.record, r.error);
    }
    let (records, stats) = assign_scans(&scans, &index, &boundaries);
    if stats.total > 0 && stats.assigned == 0 {
        log::warn!("no scan record fell inside a city ({} unlocated, {} outside every boundary)", stats.unlocated, stats.unassigned);
    }
    let bins = bin_activity(&records, &boundaries);
    let monthly = monthly_unique_ips(&records, cfg.min_scan_days);
    for (m, days) in &monthly.excluded_months {
        log::warn!("{}-{:02} excluded: {days} scan days", m.year, m.month);
    }

    let mut counts = monthly.counts;
    let mut missoni = None;
    if cfg.missoni && !counts.is_empty() {
        let report = missoni_correct(&counts, cfg.missoni_cutoff)
            .compute_ctx(|| format!("scan-bias correction with cutoff {}", cfg.missoni_cutoff))?;
        counts = report.counts.clone();
        missoni = Some(report);
    }
    let series = country_ipc_series(&counts, &boundaries);

    create_dir(&args.out)?;
    let bins_path = args.out.join("bins.csv");
    write_with(&bins_path, |w| write_bins(w, &bins))?;
    run.output(&bins_path);
    let monthly_path = args.out.join("monthly.csv");
    write_with(&monthly_path, |w| write_monthly(w, &counts))?;
    run.output(&monthly_path);
    let series_path = args.out.join("country_series.csv");
    write_with(&series_path, |w| write_country_series(w, &series))?;
    run.output(&series_path);
    if let Some(r) = &missoni {
        let p = args.out.join("missoni.csv");
        write_with(&p, |w| write_missoni(w, r))?;
        run.output(&p);
        run.note(
            "missoni",
            json!({"intercept": r.intercept, "slope": r.slope, "dropped_cities": r.dropped_cities, "kept_cities": r.counts.iter().map(|c| c.city_id).collect::<std::collections::BTreeSet<_>>().len()}),
        );
    }
    run.note(
        "join",
        json!({"total": stats.total, "unlocated": stats.unlocated, "unassigned": stats.unassigned, "assigned": stats.assigned}),
    );
    run.note("geo_index", json!({"rejected": build.rejected.len(), "conflicts": build.conflicts}));
    run.note(
        "excluded_months",
        monthly.excluded_months.iter().map(|(m, d)| json!({"month_index": m.index(), "scan_days": d})).collect::<Vec<_>>(),
    );
    run.note("rows", json!({"bins": bins.len(), "monthly": counts.len(), "country_series": series.len()}));
    run.finish(&args.out.join(MANIFEST))?;
    Ok(())
}
