use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use mvxray_core::pooling::{self, AvgOptions, FeatureMap, ViewMask};
use mvxray_core::{io, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Avg,
    Max,
}

#[derive(clap::Args)]
pub struct Args {
    /// Weight file from compute-weights
    #[arg(long)]
    pub weights: PathBuf,

    /// Per-view input tensors in view order: feature maps [C, H', W'] at bin
    /// resolution, or raw images [C, H, W] (binned by block mean)
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,

    #[arg(long, value_enum, default_value_t = Variant::Avg)]
    pub variant: Variant,

    /// Disable a view by index; repeatable
    #[arg(long)]
    pub disable_view: Vec<usize>,

    /// Rescale partially covered cells by their coverage (avg only)
    #[arg(long)]
    pub renormalize_partial: bool,

    /// Output volume tensor (.mxt)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let weights = io::read_weights(&args.weights)
        .with_context(|| format!("reading weights {}", args.weights.display()))?;
    if args.inputs.len() != weights.n_views() {
        bail!(
            "weights cover {} views but {} inputs were given",
            weights.n_views(),
            args.inputs.len()
        );
    }
    let mask = ViewMask::with_disabled(weights.n_views(), &args.disable_view)?;

    let mut maps = Vec::with_capacity(args.inputs.len());
    for (path, view) in args.inputs.iter().zip(&weights.views) {
        let tensor = io::read_tensor(path)
            .with_context(|| format!("reading input {}", path.display()))?
            .cast::<f64>();
        let tensor = fit_to_bins(tensor, view.n_x_bins as usize, weights.bin_px)
            .with_context(|| format!("input {}", path.display()))?;
        maps.push(FeatureMap::new(tensor, weights.bin_px)?);
    }

    let volume = match args.variant {
        Variant::Avg => {
            let opts = AvgOptions { renormalize_partial: args.renormalize_partial };
            pooling::pool_avg_opts(&weights, &maps, &mask, &opts)?
        }
        Variant::Max => {
            if args.renormalize_partial {
                bail!("--renormalize-partial only applies to the avg variant");
            }
            pooling::pool_max(&weights, &maps, &mask)?.0
        }
    };

    io::write_tensor(&args.out, &volume.tensor.cast::<f32>())?;
    println!("wrote volume {:?} to {}", volume.tensor.dims(), args.out.display());
    Ok(())
}

/// Accepts a tensor already at feature-map resolution, or a raw image whose
/// block binning lands exactly on the expected bin count.
fn fit_to_bins(tensor: Tensor, n_x_bins: usize, bin_px: u32) -> Result<Tensor> {
    if tensor.rank() != 3 {
        bail!("input must be [C, H, W], got {:?}", tensor.dims());
    }
    let width = tensor.dims()[2];
    if width == n_x_bins {
        return Ok(tensor);
    }
    if width.div_ceil(bin_px as usize) == n_x_bins {
        return Ok(pooling::bin_image(&tensor, bin_px)?);
    }
    bail!("width {width} matches neither the map width {n_x_bins} nor an image binnable by {bin_px}")
}
