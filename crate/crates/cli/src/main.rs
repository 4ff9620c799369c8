//! mvxray: command-line pipeline around the mvxray-core library.
//!
//! Exit codes: 0 success, 1 runtime failure (missing or malformed files,
//! geometry errors), 2 usage errors (unknown flags, unparsable values).
//! `MX_THREADS` caps the internal thread pool.

mod commands;
mod common;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mvxray", version, about = "Multi-view X-ray detection geometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording with known ground truth
    SynthGen(commands::synth_gen::Args),
    /// Precompute sparse beam-to-voxel pooling weights
    ComputeWeights(commands::compute_weights::Args),
    /// Pool per-view feature tensors into a 3D volume
    Pool(commands::pool::Args),
    /// Max-pool a feature volume under a 3D box
    RoiPool(commands::roi_pool::Args),
    /// Cluster ground-truth box sizes into anchors
    ClusterAnchors(commands::cluster_anchors::Args),
    /// Score an anchor set against 3D ground truth
    AnchorQuality(commands::anchor_quality::Args),
    /// Lift per-view 2D annotations to 3D boxes
    #[command(name = "gen3d")]
    Gen3d(commands::gen3d::Args),
    /// Project 3D boxes back into every view
    Reproject(commands::reproject::Args),
    /// Evaluate detections against ground truth
    Eval(commands::eval::Args),
    /// Convert a 2D IoU threshold to its 3D equivalent
    IouConvert(commands::iou_convert::Args),
    /// Per-unit, per-class non-maximum suppression on 3D detections
    #[command(name = "nms3d")]
    Nms3d(commands::nms3d::Args),
    /// Time weight construction and pooling on this machine
    Bench(commands::bench::Args),
}

fn main() {
    if let Err(e) = setup_threads() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SynthGen(a) => commands::synth_gen::run(a),
        Command::ComputeWeights(a) => commands::compute_weights::run(a),
        Command::Pool(a) => commands::pool::run(a),
        Command::RoiPool(a) => commands::roi_pool::run(a),
        Command::ClusterAnchors(a) => commands::cluster_anchors::run(a),
        Command::AnchorQuality(a) => commands::anchor_quality::run(a),
        Command::Gen3d(a) => commands::gen3d::run(a),
        Command::Reproject(a) => commands::reproject::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::IouConvert(a) => commands::iou_convert::run(a),
        Command::Nms3d(a) => commands::nms3d::run(a),
        Command::Bench(a) => commands::bench::run(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// `MX_THREADS=n` caps the rayon pool; unset or 0 keeps the rayon default.
fn setup_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("MX_THREADS") else { return Ok(()) };
    let n: usize =
        v.trim().parse().map_err(|_| format!("MX_THREADS must be a number, got '{v}'"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}
