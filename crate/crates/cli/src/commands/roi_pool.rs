use std::path::PathBuf;

use anyhow::{Context, Result};
use mvxray_core::pooling::{self, FeatureVolume};
use mvxray_core::{io, Box3};

use crate::common::{parse_dims3, parse_f64_6, GridArgs};

#[derive(clap::Args)]
pub struct Args {
    /// Feature volume [C, nx, ny, nz] from pool
    #[arg(long)]
    pub volume: PathBuf,

    /// Box as cx,cy,cz,w,h,d in mm
    #[arg(long = "box", value_parser = parse_f64_6, allow_hyphen_values = true)]
    pub box3: [f64; 6],

    #[arg(long, value_parser = parse_dims3, default_value = "7,7,7")]
    pub out_dims: [usize; 3],

    /// Output tensor (.mxt)
    #[arg(long)]
    pub out: PathBuf,

    #[command(flatten)]
    pub grid: GridArgs,
}

pub fn run(args: Args) -> Result<()> {
    let grid = args.grid.build()?;
    let tensor = io::read_tensor(&args.volume)
        .with_context(|| format!("reading volume {}", args.volume.display()))?
        .cast::<f64>();
    let volume = FeatureVolume::new(tensor, grid)?;
    let [cx, cy, cz, w, h, d] = args.box3;
    let box3 = Box3::new(cx, cy, cz, w, h, d)?;

    let pooled = pooling::roi_pool_3d(&volume, &box3, args.out_dims)?;
    io::write_tensor(&args.out, &pooled.cast::<f32>())?;
    println!("wrote RoI features {:?} to {}", pooled.dims(), args.out.display());
    Ok(())
}
