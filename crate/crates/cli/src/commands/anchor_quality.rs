use std::path::PathBuf;

use anyhow::{Context, Result};
use mvxray_core::anchors::{self, AnchorSet};
use mvxray_core::{defaults, io, Box3};
use serde::Serialize;

use crate::common::{emit, parse_f64_3, read_json_file, to_json, GridArgs, OutputFormat};

use super::cluster_anchors::AnchorsFile;

#[derive(Serialize)]
struct QualityReport {
    k: usize,
    n_boxes: usize,
    /// Mean best IoU with every box co-centered on its anchor.
    avg_best_iou_centered: f64,
    /// Same, but anchors sit on the placement grid nearest to each box.
    avg_best_iou_grid: f64,
}

#[derive(clap::Args)]
pub struct Args {
    /// Anchor set JSON from cluster-anchors; omit for the standard set
    #[arg(long)]
    pub anchors: Option<PathBuf>,

    /// Annotation files with the 3D ground truth
    #[arg(long, num_args = 1.., required = true)]
    pub annotations: Vec<PathBuf>,

    /// Anchor placement stride as x,y,z in mm; defaults to the cell size
    #[arg(long, value_parser = parse_f64_3)]
    pub stride: Option<[f64; 3]>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output_format: OutputFormat,

    /// Output file; omit for stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub grid: GridArgs,
}

pub fn run(args: Args) -> Result<()> {
    let set = match &args.anchors {
        Some(path) => {
            let file: AnchorsFile = read_json_file(path)
                .with_context(|| format!("reading anchors {}", path.display()))?;
            AnchorSet::new(file.anchors)?
        }
        None => anchors::standard_anchors_3d(&defaults::ANCHOR_SCALES)?,
    };

    let mut gts: Vec<Box3> = Vec::new();
    for path in &args.annotations {
        let ann = io::read_annotations(path)
            .with_context(|| format!("reading annotations {}", path.display()))?;
        for b in &ann.boxes3d {
            gts.push(b.to_box3()?);
        }
    }

    let grid = args.grid.build()?;
    let stride = args.stride.unwrap_or(grid.cell_size);
    let report = QualityReport {
        k: set.k(),
        n_boxes: gts.len(),
        avg_best_iou_centered: anchors::avg_best_iou_centered(&set, &gts)?,
        avg_best_iou_grid: anchors::avg_best_iou_grid(&set, &gts, &grid, stride)?,
    };

    let text = match args.output_format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => format!(
            "metric,value\nk,{}\nn_boxes,{}\navg_best_iou_centered,{}\navg_best_iou_grid,{}\n",
            report.k, report.n_boxes, report.avg_best_iou_centered, report.avg_best_iou_grid
        ),
    };
    emit(&args.out, &text)
}
