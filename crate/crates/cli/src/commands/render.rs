use anyhow::{Context, Result};
use storyforge::export::LevelBundle;

use crate::args::{Common, RenderArgs};
use crate::output::{read, run_dir, CommandResult, Writer};

pub fn run(common: &Common, args: &RenderArgs) -> Result<CommandResult> {
    let bundle =
        LevelBundle::from_json(&read(&args.bundle)?).with_context(|| format!("parsing {}", args.bundle.display()))?;
    let raster = bundle.render(args.render.style.into(), args.render.cell)?;
    let mut out = Writer::new(run_dir(
        common.out.as_deref(),
        common.seed.unwrap_or(bundle.config.rng_seed),
    )?);
    out.write("render.ppm", raster.to_ppm())?;
    Ok(out.finish(format!("{}x{} pixels\n", raster.width, raster.height)))
}
