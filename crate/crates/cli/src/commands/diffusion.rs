use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use netcensus::aggregate::country_ipc_series;
use netcensus::aggregate::io::read_monthly;
use netcensus::diffusion::io::{read_series, write_curves, write_fit, write_ranking, write_series};
use netcensus::diffusion::{fit_saem, logistic, rank_countries, CountrySeries, DiffusionError, TraceRow};
use serde_json::json;

use super::{load_boundaries, Ctx, MANIFEST};
use crate::error::{CliError, CliResult};
use crate::files::{create_dir, read_with, write_with};
use crate::plot;

#[derive(Debug, clap::Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["series", "counts"]))]
pub struct Args {
    /// Country series: country,month_index,ipc[,n_cities].
    #[arg(long)]
    series: Option<PathBuf>,
    /// Monthly city counts from `aggregate`; needs --boundaries for populations.
    #[arg(long, requires = "boundaries")]
    counts: Option<PathBuf>,
    #[arg(long)]
    boundaries: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also draw the fitted curves as curves.svg.
    #[arg(long)]
    svg: bool,
}

fn write_trace(w: &mut impl Write, trace: &[TraceRow]) -> std::io::Result<()> {
    writeln!(w, "iteration,k,alpha,beta,sigma,sd_tau,sd_beta")?;
    for r in trace {
        writeln!(w, "{},{},{},{},{},{},{}", r.iteration, r.k, r.alpha, r.beta, r.sigma, r.sd_tau, r.sd_beta)?;
    }
    Ok(())
}

fn series_from_counts(counts: &Path, boundaries: &Path, run: &mut crate::manifest::Run) -> CliResult<Vec<CountrySeries>> {
    let counts_rows = read_with(counts, read_monthly)?;
    run.input(counts);
    let b = load_boundaries(boundaries, run)?;
    let mut by_country: BTreeMap<String, CountrySeries> = BTreeMap::new();
    for c in country_ipc_series(&counts_rows, &b) {
        let s = by_country.entry(c.country.clone()).or_insert_with(|| CountrySeries {
            country: c.country.clone(),
            t: Vec::new(),
            ipc: Vec::new(),
            n_cities: 0,
        });
        s.t.push(f64::from(c.month_index));
        s.ipc.push(c.ipc);
        s.n_cities = s.n_cities.max(c.n_cities);
    }
    Ok(by_country.into_values().collect())
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let cfg = &ctx.config.diffusion;
    let mut run = ctx.start("diffusion", cfg);
    let series = match (&args.series, &args.counts, &args.boundaries) {
        (Some(p), _, _) => {
            let s = read_with(p, read_series)?;
            run.input(p);
            s
        }
        (None, Some(c), Some(b)) => series_from_counts(c, b, &mut run)?,
        _ => return Err(CliError::usage("give --series, or --counts with --boundaries")),
    };
    create_dir(&args.out)?;
    let trace_path = args.out.join("saem_trace.csv");
    let fit = match fit_saem(&series, cfg) {
        Ok(f) => f,
        Err(e) => {
            if let DiffusionError::NotConverged { trace, .. } | DiffusionError::NonFinite { trace, .. } = &e {
                write_with(&trace_path, |w| write_trace(w, trace))?;
                eprintln!("iteration trace written to {}", trace_path.display());
            }
            return Err(match e {
                DiffusionError::Config(_) => CliError::usage(format!("diffusion config: {e}")),
                _ => CliError::compute(format!("diffusion fit: {e}")),
            });
        }
    };
    for (country, reason) in &fit.dropped {
        log::warn!("{country} dropped: {reason:?}");
    }

    if args.counts.is_some() {
        let p = args.out.join("series.csv");
        write_with(&p, |w| write_series(w, &series))?;
        run.output(&p);
    }
    let fit_path = args.out.join("fit.csv");
    write_with(&fit_path, |w| write_fit(w, &fit))?;
    run.output(&fit_path);
    let ranking_path = args.out.join("ranking.csv");
    write_with(&ranking_path, |w| write_ranking(w, &rank_countries(&fit, &series)))?;
    run.output(&ranking_path);
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.t.iter())
        .fold((i32::MAX, i32::MIN), |(a, b), t| (a.min(*t as i32), b.max(*t as i32)));
    let months = if lo <= hi { lo..hi + 1 } else { 0..0 };
    let curves_path = args.out.join("curves.csv");
    write_with(&curves_path, |w| write_curves(w, &fit, &series, months.clone()))?;
    run.output(&curves_path);
    write_with(&trace_path, |w| write_trace(w, &fit.trace))?;
    run.output(&trace_path);

    if args.svg {
        let mut groups = plot::Series::new();
        let m = fit.mean_field;
        groups.insert("mean_field".into(), months.clone().map(|t| (f64::from(t), logistic(f64::from(t), &m))).collect());
        for c in &fit.per_country {
            let pts = months.clone().map(|t| (f64::from(t), logistic(f64::from(t), &c.params))).collect();
            groups.insert(c.country.clone(), pts);
        }
        if let Some(svg) = plot::render(&groups, plot::Kind::Line, "month index", "IP per capita", Some("Fitted diffusion curves")) {
            let p = args.out.join("curves.svg");
            std::fs::write(&p, svg).map_err(|e| CliError::usage(format!("writing {}: {e}", p.display())))?;
            run.output(&p);
        }
    }

    run.note("method", format!("{:?}", fit.method));
    run.note("mean_field", json!({"k": fit.mean_field.k, "alpha": fit.mean_field.alpha, "beta": fit.mean_field.beta}));
    run.note("sigma", fit.sigma);
    run.note("rmse", fit.rmse);
    run.note("iterations", fit.iterations);
    run.note("countries", fit.per_country.len());
    run.note("dropped", fit.dropped.iter().map(|(c, r)| format!("{c}: {r:?}")).collect::<Vec<_>>());
    run.finish(&args.out.join(MANIFEST))?;
    Ok(())
}
