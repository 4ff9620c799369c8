use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use mvxray_core::pooling::{self, FeatureMap, ViewMask, WeightParams};
use mvxray_core::synth::{self, SceneSpec};
use mvxray_core::{defaults, Tensor};
use serde::Serialize;

use crate::common::{emit, load_geometry, to_json, GridArgs, OutputFormat};

/// Times weight construction and pooling on this machine. Numbers depend on
/// the local hardware, thread count and build flags; they are not comparable
/// across machines.
#[derive(clap::Args)]
pub struct Args {
    /// Scanner geometry JSON; omit for the built-in scanner
    #[arg(long)]
    pub geometry: Option<PathBuf>,

    #[arg(long, default_value_t = defaults::BIN_PX)]
    pub bin_px: u32,

    /// Feature channels for the pooling timings
    #[arg(long, default_value_t = 8)]
    pub channels: usize,

    /// Runs per step; the fastest is reported
    #[arg(long, default_value_t = 3)]
    pub repeat: u32,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output_format: OutputFormat,

    /// Output file; omit for stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Serialize)]
struct BenchReport {
    note: String,
    grid_dims: [usize; 3],
    bin_px: u32,
    channels: usize,
    threads: usize,
    steps: Vec<BenchStep>,
}

#[derive(Serialize)]
struct BenchStep {
    step: String,
    seconds: f64,
}

pub fn run(args: Args) -> Result<()> {
    let geom = load_geometry(&args.geometry)?;
    let grid = args.grid.build()?;
    let params = WeightParams::new(args.bin_px);
    let repeat = args.repeat.max(1);

    let mut steps = Vec::new();
    let (seconds, weights) = best_of(repeat, || pooling::compute_weights(&geom, &grid, &params))?;
    steps.push(BenchStep { step: "compute_weights".into(), seconds });

    // Pool real renderings, binned to feature resolution and tiled to the
    // requested channel count.
    let spec = SceneSpec::default();
    let rec = synth::gen_recording(&geom, &grid, &spec)?;
    let mut maps = Vec::with_capacity(rec.images.len());
    for image in &rec.images {
        let binned = pooling::bin_image(image, args.bin_px)?;
        let [h, w] = [binned.dims()[1], binned.dims()[2]];
        let mut data = Vec::with_capacity(args.channels * h * w);
        for _ in 0..args.channels {
            data.extend_from_slice(binned.data());
        }
        maps.push(FeatureMap::new(Tensor::from_vec(&[args.channels, h, w], data)?, args.bin_px)?);
    }
    let mask = ViewMask::all(geom.n_views())?;

    let (seconds, _) = best_of(repeat, || pooling::pool_avg(&weights, &maps, &mask))?;
    steps.push(BenchStep { step: "pool_avg".into(), seconds });
    let (seconds, _) = best_of(repeat, || pooling::pool_max(&weights, &maps, &mask))?;
    steps.push(BenchStep { step: "pool_max".into(), seconds });

    let report = BenchReport {
        note: "timings measured on this machine for this build; not comparable across hosts"
            .into(),
        grid_dims: grid.dims,
        bin_px: args.bin_px,
        channels: args.channels,
        threads: rayon::current_num_threads(),
        steps,
    };
    let text = match args.output_format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => {
            let mut s = String::from("step,seconds\n");
            for st in &report.steps {
                s.push_str(&format!("{},{}\n", st.step, st.seconds));
            }
            s
        }
    };
    emit(&args.out, &text)
}

fn best_of<T>(repeat: u32, mut f: impl FnMut() -> mvxray_core::Result<T>) -> Result<(f64, T)> {
    let mut best = f64::INFINITY;
    let mut result = None;
    for _ in 0..repeat {
        let start = Instant::now();
        let value = f()?;
        best = best.min(start.elapsed().as_secs_f64());
        result = Some(value);
    }
    Ok((best, result.expect("repeat is at least 1")))
}
