use std::path::PathBuf;

use anyhow::{Context, Result};
use mvxray_core::synth::SceneSpec;
use mvxray_core::{defaults, io, synth};

use crate::common::{load_geometry, GridArgs};

/// Writes geometry.json, annotations.json and one image-{i}.mxt per view.
#[derive(clap::Args)]
pub struct Args {
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Scanner geometry JSON; omit for the built-in scanner
    #[arg(long)]
    pub geometry: Option<PathBuf>,

    #[arg(long, default_value_t = defaults::SYNTH_N_OBJECTS)]
    pub n_objects: usize,

    #[command(flatten)]
    pub grid: GridArgs,
}

pub fn run(args: Args) -> Result<()> {
    let geom = load_geometry(&args.geometry)?;
    let grid = args.grid.build()?;
    let spec = SceneSpec { n_objects: args.n_objects, seed: args.seed, ..SceneSpec::default() };
    let rec = synth::gen_recording(&geom, &grid, &spec)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    io::write_geometry(args.out_dir.join("geometry.json"), &geom)?;
    let ann = io::annotations_of_recording(&geom, &rec);
    io::write_annotations(args.out_dir.join("annotations.json"), &ann)?;
    for (v, image) in rec.images.iter().enumerate() {
        io::write_tensor(args.out_dir.join(format!("image-{v}.mxt")), &image.cast::<f32>())?;
    }

    println!(
        "wrote recording {} ({} objects, {} views) to {}",
        rec.id,
        rec.objects.len(),
        geom.n_views(),
        args.out_dir.display()
    );
    Ok(())
}
