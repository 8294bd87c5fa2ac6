use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use netcensus::aggregate::io::read_bins;
use netcensus::aggregate::{Boundaries, CityId};
use netcensus::chronobio::io::{
    country_summary, format_clock, read_sleep_times, read_survey, write_country_summary, write_duration_density,
    write_importance, write_predictions, write_sleep_times,
};
use netcensus::chronobio::{
    crossvalidate_by_city, datasets_from_bins, derive_atus_labels, feature_names, load_model, save_model, train_forest,
    CityYearData, ChronoError, CvReport, ForestConfig, ModelArtifact, SleepTimes,
};
use serde_json::json;

use super::{load_boundaries, Ctx, MANIFEST};
use crate::error::{CliError, CliResult, ResultExt};
use crate::files::{create_dir, open, read_with, write_with};
use crate::manifest::Run;
use crate::plot;

const MODEL_FILE: &str = "model.bin";

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Train the classifier on labelled city-years and save the model.
    Train(TrainArgs),
    /// Estimate sleep start and stop for every eligible city-year.
    Predict(PredictArgs),
}

#[derive(Debug, clap::Args)]
#[command(group = clap::ArgGroup::new("labels_from").required(true).args(["survey", "labels"]))]
pub struct TrainArgs {
    /// 15-minute activity bins: city_id,local_date,segment,n_on,n_off.
    #[arg(long)]
    bins: PathBuf,
    #[arg(long)]
    boundaries: PathBuf,
    /// Time-use diary entries; labels are the weighted circular means per city-year.
    #[arg(long)]
    survey: Option<PathBuf>,
    /// Known schedules per city-year: city_id,year,start_min,stop_min.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory; the model is written as model.bin.
    #[arg(long)]
    out: PathBuf,
    /// Number of trees; overrides the config.
    #[arg(long)]
    trees: Option<usize>,
    /// Also run leave-one-city-out cross-validation.
    #[arg(long)]
    cv: bool,
}

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    #[arg(long)]
    bins: PathBuf,
    #[arg(long)]
    boundaries: PathBuf,
    /// A model.bin written by `sleep train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also draw the duration density as duration_density.svg.
    #[arg(long)]
    svg: bool,
}

pub fn run(ctx: &Ctx, cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Train(a) => train(ctx, a),
        Command::Predict(a) => predict(ctx, a),
    }
}

fn load_datasets(
    ctx: &Ctx,
    bins_path: &Path,
    boundaries: &Boundaries,
    truth: &BTreeMap<(CityId, i32), SleepTimes>,
    run: &mut Run,
) -> CliResult<Vec<CityYearData>> {
    let bins = read_with(bins_path, read_bins)?;
    run.input(bins_path);
    let latitude = |c: CityId| boundaries.get(c).map(|b| b.latitude());
    let (data, skipped) = datasets_from_bins(&bins, &ctx.config.sleep.eligibility(), &latitude, truth);
    for (city, year, e) in &skipped {
        log::warn!("city {city} {year} skipped: {e}");
    }
    run.note("skipped_city_years", skipped.iter().map(|(c, y, e)| format!("{c} {y}: {e}")).collect::<Vec<_>>());
    Ok(data)
}

fn write_cv(w: &mut impl Write, report: &CvReport) -> std::io::Result<()> {
    writeln!(w, "city_id,year,true_start,true_stop,true_duration,pred_start,pred_stop,pred_duration,status")?;
    for p in &report.predictions {
        let t = &p.truth;
        write!(w, "{},{},{},{},{:.4},", p.city_id, p.year, format_clock(t.start_min), format_clock(t.stop_min), t.duration_h)?;
        match &p.predicted {
            Ok(q) => writeln!(w, "{},{},{:.4},ok", format_clock(q.start_min), format_clock(q.stop_min), q.duration_h)?,
            Err(e) => writeln!(w, ",,,\"{e}\"")?,
        }
    }
    Ok(())
}

fn train(ctx: &Ctx, args: TrainArgs) -> CliResult<()> {
    let mut cfg = ctx.config.sleep.clone();
    if let Some(n) = args.trees {
        cfg.forest.n_trees = n;
    }
    cfg.forest.importance = cfg.importance;
    let mut run = ctx.start("sleep train", &cfg);
    let boundaries = load_boundaries(&args.boundaries, &mut run)?;

    let mut truth = BTreeMap::new();
    if let Some(p) = &args.survey {
        let entries = read_with(p, read_survey)?;
        run.input(p);
        let report = derive_atus_labels(&entries, cfg.min_respondents);
        for (city, year, n) in &report.dropped_city_years {
            log::warn!("city {city} {year}: only {n} usable respondents");
        }
        run.note("survey", json!({"labels": report.labels.len(), "discarded_respondents": report.discarded_respondents, "dropped_city_years": report.dropped_city_years.len()}));
        for l in report.labels {
            let t = SleepTimes::new(l.city_id, l.year, l.start_min, l.stop_min)
                .usage_ctx(|| format!("survey label for city {} {}", l.city_id, l.year))?;
            truth.insert((l.city_id, l.year), t);
        }
    } else if let Some(p) = &args.labels {
        for t in read_with(p, read_sleep_times)? {
            truth.insert((t.city_id, t.year), t);
        }
        run.input(p);
    }

    let data: Vec<CityYearData> =
        load_datasets(ctx, &args.bins, &boundaries, &truth, &mut run)?.into_iter().filter(|d| d.truth.is_some()).collect();
    if data.is_empty() {
        return Err(CliError::compute("no eligible city-year has a label"));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for d in &data {
        let labels = d.labels().compute_ctx(|| format!("labels of city {} {}", d.city_id, d.year))?;
        x.extend(d.rows.iter().map(|r| r.features));
        y.extend(labels);
    }
    let (forest, report) = train_forest(&x, &y, &cfg.forest).compute_ctx(|| "training")?;
    if let Some(acc) = report.oob_accuracy {
        eprintln!("out-of-bag accuracy {acc:.4} over {} segments of {} city-years", x.len(), data.len());
    }

    create_dir(&args.out)?;
    let model_path = args.out.join(MODEL_FILE);
    let artifact = ModelArtifact::new(forest, report.importance.clone());
    write_with(&model_path, |w| save_model(w, &artifact))?;
    run.output(&model_path);
    if let Some(imp) = &report.importance {
        let p = args.out.join("importance.csv");
        write_with(&p, |w| write_importance(w, &artifact.feature_names, imp))?;
        run.output(&p);
    }
    run.note("training", json!({"city_years": data.len(), "segments": x.len(), "training_accuracy": report.training_accuracy, "oob_accuracy": report.oob_accuracy}));

    if args.cv {
        let folds = ForestConfig { importance: false, ..cfg.forest.clone() };
        let cv = crossvalidate_by_city(&data, &folds).compute_ctx(|| "cross-validation")?;
        let p = args.out.join("cv_predictions.csv");
        write_with(&p, |w| write_cv(w, &cv))?;
        run.output(&p);
        let errors = cv.median_abs_errors();
        eprintln!("cross-validated accuracy {:.4} over {} folds", cv.accuracy, cv.folds);
        run.note(
            "cv",
            json!({
                "folds": cv.folds,
                "accuracy": cv.accuracy,
                "estimated": cv.n_estimated(),
                "median_abs_error_min": errors.map(|(a, b, c)| json!({"start": a, "stop": b, "duration": c})),
            }),
        );
    }
    run.finish(&args.out.join(MANIFEST))?;
    Ok(())
}

fn predict(ctx: &Ctx, args: PredictArgs) -> CliResult<()> {
    let cfg = &ctx.config.sleep;
    let mut run = ctx.start("sleep predict", cfg);
    let model = load_model(open(&args.model)?).usage_ctx(|| format!("loading {}", args.model.display()))?;
    run.input(&args.model);
    if model.feature_names != feature_names() {
        return Err(CliError::usage(format!("{} was trained on a different feature set", args.model.display())));
    }
    let boundaries = load_boundaries(&args.boundaries, &mut run)?;
    let data = load_datasets(ctx, &args.bins, &boundaries, &BTreeMap::new(), &mut run)?;

    let mut times = Vec::new();
    let mut failed = Vec::new();
    for d in &data {
        match d.predict(&model.forest) {
            Ok(t) => times.push(t),
            Err(e @ ChronoError::QualityFilter { .. }) => failed.push(format!("{} {}: {e}", d.city_id, d.year)),
            Err(e) => return Err(CliError::compute(format!("city {} {}: {e}", d.city_id, d.year))),
        }
    }
    if times.is_empty() {
        log::warn!("no city-year passed the quality filter ({} eligible); outputs are empty", data.len());
    } else if !failed.is_empty() {
        log::warn!("{} of {} city-years failed the quality filter", failed.len(), data.len());
    }

    let country_of = |c: CityId| boundaries.get(c).map(|b| b.country.clone());
    create_dir(&args.out)?;
    let paths = ["predictions.csv", "sleep_times.csv", "country_summary.csv", "duration_density.csv"].map(|f| args.out.join(f));
    write_with(&paths[0], |w| write_predictions(w, &times, &country_of))?;
    write_with(&paths[1], |w| write_sleep_times(w, &times))?;
    write_with(&paths[2], |w| write_country_summary(w, &country_summary(&times, &country_of)))?;
    write_with(&paths[3], |w| write_duration_density(w, &times, cfg.density_bin_h))?;
    for p in &paths {
        run.output(p);
    }
    if args.svg && !times.is_empty() {
        let mut buf = Vec::new();
        write_duration_density(&mut buf, &times, cfg.density_bin_h).map_err(CliError::usage)?;
        let points = String::from_utf8_lossy(&buf)
            .lines()
            .skip(1)
            .filter_map(|l| l.split_once(',').and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?))))
            .collect();
        let series = plot::Series::from([(String::new(), points)]);
        if let Some(svg) = plot::render(&series, plot::Kind::Density, "sleep duration (h)", "density", None) {
            let p = args.out.join("duration_density.svg");
            std::fs::write(&p, svg).map_err(|e| CliError::usage(format!("writing {}: {e}", p.display())))?;
            run.output(&p);
        }
    }
    run.note("predicted", times.len());
    run.note("quality_filter_failures", failed);
    run.finish(&args.out.join(MANIFEST))?;
    Ok(())
}
