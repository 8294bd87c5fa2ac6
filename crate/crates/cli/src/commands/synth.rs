use std::path::PathBuf;

use netcensus::synth::io::write_world;
use netcensus::synth::gen_world;

use super::{Ctx, MANIFEST};
use crate::error::{CliError, CliResult};
use crate::files::create_dir;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Output directory for the world files and ground truth.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let mut run = ctx.start("synth", &ctx.config.synth);
    let world = gen_world(&ctx.config.synth).map_err(|e| CliError::usage(format!("synth config: {e}")))?;
    create_dir(&args.out)?;
    let files = write_world(&world, &args.out).map_err(|e| CliError::usage(format!("writing world: {e}")))?;
    for f in &files {
        run.output(f);
    }
    run.note("cities", world.boundaries.len());
    run.note("scans", world.scans.len());
    run.note("geo_ranges", world.geo.len());
    run.note("sleep_bins", world.sleep_bins.len());
    run.note("survey_entries", world.survey.len());
    run.note("panel_rows", world.panel.len());
    let m = run.finish(&args.out.join(MANIFEST))?;
    log::info!("synth: {} files in {:.2} s", m.outputs.len(), m.wall_time_s);
    Ok(())
}
