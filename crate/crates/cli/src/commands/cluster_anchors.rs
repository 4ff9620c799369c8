use std::path::PathBuf;

use anyhow::{Context, Result};
use mvxray_core::anchors::{self, ClusterConfig};
use mvxray_core::{defaults, io};
use serde::{Deserialize, Serialize};

use crate::common::{emit, read_json_file, to_json, OutputFormat};

/// On-disk anchor set, also accepted by anchor-quality.
#[derive(Serialize, Deserialize)]
pub struct AnchorsFile {
    pub k: usize,
    /// Mean jaccard distance from each input size to its nearest anchor.
    pub objective: f64,
    pub anchors: Vec<[f64; 3]>,
}

#[derive(Deserialize)]
struct SizesFile {
    sizes: Vec<[f64; 3]>,
}

#[derive(clap::Args)]
pub struct Args {
    /// Annotation files whose 3D boxes supply the sizes
    #[arg(long, num_args = 1.., required_unless_present = "sizes")]
    pub annotations: Vec<PathBuf>,

    /// JSON file with raw sizes instead: {"sizes": [[w,h,d], ...]}
    #[arg(long, conflicts_with = "annotations")]
    pub sizes: Option<PathBuf>,

    #[arg(long, default_value_t = defaults::ANCHOR_K)]
    pub k: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = defaults::KMEANS_RESTARTS)]
    pub restarts: u32,

    #[arg(long, default_value_t = defaults::KMEANS_MAX_ITERS)]
    pub max_iters: u32,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output_format: OutputFormat,

    /// Output file; omit for stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let sizes = match &args.sizes {
        Some(path) => {
            let file: SizesFile = read_json_file(path)
                .with_context(|| format!("reading sizes {}", path.display()))?;
            file.sizes
        }
        None => collect_sizes(&args.annotations)?,
    };

    let cfg = ClusterConfig {
        k: args.k,
        seed: args.seed,
        restarts: args.restarts,
        max_iters: args.max_iters,
        tol: defaults::KMEANS_TOL,
    };
    let set = anchors::kmeans_anchors(&sizes, &cfg)?;
    let objective = sizes
        .iter()
        .map(|&s| {
            set.sizes.iter().map(|&a| anchors::jaccard_distance(s, a)).fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / sizes.len() as f64;

    let report = AnchorsFile { k: set.k(), objective, anchors: set.sizes };
    let text = match args.output_format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => {
            let mut s = String::from("w,h,d\n");
            for a in &report.anchors {
                s.push_str(&format!("{},{},{}\n", a[0], a[1], a[2]));
            }
            s
        }
    };
    emit(&args.out, &text)
}

/// Pulls every 3D box size out of the given annotation files.
pub fn collect_sizes(paths: &[PathBuf]) -> Result<Vec<[f64; 3]>> {
    let mut sizes = Vec::new();
    for path in paths {
        let ann = io::read_annotations(path)
            .with_context(|| format!("reading annotations {}", path.display()))?;
        for b in &ann.boxes3d {
            sizes.push(b.to_box3()?.size());
        }
    }
    Ok(sizes)
}
