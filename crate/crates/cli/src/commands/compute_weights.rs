use std::path::PathBuf;

use anyhow::Result;
use mvxray_core::pooling::WeightParams;
use mvxray_core::{defaults, io, pooling};

use crate::common::{load_geometry, GridArgs};

#[derive(clap::Args)]
pub struct Args {
    /// Scanner geometry JSON; omit for the built-in scanner
    #[arg(long)]
    pub geometry: Option<PathBuf>,

    /// Output weight file (.mxw)
    #[arg(long)]
    pub out: PathBuf,

    /// Feature map bin size in pixels
    #[arg(long, default_value_t = defaults::BIN_PX)]
    pub bin_px: u32,

    #[command(flatten)]
    pub grid: GridArgs,
}

pub fn run(args: Args) -> Result<()> {
    let geom = load_geometry(&args.geometry)?;
    let grid = args.grid.build()?;
    let weights = pooling::compute_weights(&geom, &grid, &WeightParams::new(args.bin_px))?;
    io::write_weights(&args.out, &weights)?;

    let entries: usize = weights.views.iter().map(|v| v.xsec.len() + v.zmap.len()).sum();
    println!(
        "wrote weights for {} views ({entries} sparse entries) to {}",
        weights.n_views(),
        args.out.display()
    );
    Ok(())
}
