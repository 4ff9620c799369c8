use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use mvxray_core::eval::{evaluate_run, Detection, EvalReport, GroundTruth};
use mvxray_core::{defaults, io, Box2, Box3};

use crate::common::{emit, to_json, OutputFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dim {
    #[value(name = "2d")]
    Two,
    #[value(name = "3d")]
    Three,
}

/// Evaluates a detection file against annotation ground truth. In 2D each
/// view image is a unit ("{recording}/view{index}", indices in annotation
/// file order); in 3D the unit is the recording id.
#[derive(clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    pub dim: Dim,

    /// Detections JSON
    #[arg(long)]
    pub detections: PathBuf,

    /// Annotation files with the ground truth
    #[arg(long, num_args = 1.., required = true)]
    pub annotations: Vec<PathBuf>,

    /// Match threshold; defaults to 0.5 in 2D and 0.374 in 3D
    #[arg(long)]
    pub iou_thresh: Option<f64>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output_format: OutputFormat,

    /// Output file; omit for stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let mut anns = Vec::with_capacity(args.annotations.len());
    for path in &args.annotations {
        anns.push(
            io::read_annotations(path)
                .with_context(|| format!("reading annotations {}", path.display()))?,
        );
    }

    let report = match args.dim {
        Dim::Two => {
            let thresh = args.iou_thresh.unwrap_or(defaults::IOU_THRESH_2D);
            let mut gts: Vec<GroundTruth<Box2>> = Vec::new();
            for ann in &anns {
                for (v, vb) in ann.views.iter().enumerate() {
                    let unit = format!("{}/view{v}", ann.id);
                    for b in &vb.boxes {
                        gts.push(GroundTruth {
                            unit: unit.clone(),
                            class: b.class.clone(),
                            shape: b.to_box2()?,
                        });
                    }
                }
            }
            let dets: Vec<Detection<Box2>> = io::read_detections_2d(&args.detections)
                .with_context(|| format!("reading detections {}", args.detections.display()))?
                .into_iter()
                .map(|d| {
                    Ok(Detection {
                        unit: d.unit,
                        class: d.class,
                        confidence: d.confidence,
                        shape: Box2::new(d.cx, d.cy, d.w, d.h)?,
                    })
                })
                .collect::<Result<_>>()?;
            evaluate_run(&dets, &gts, thresh)?
        }
        Dim::Three => {
            let thresh = args.iou_thresh.unwrap_or(defaults::IOU_THRESH_3D);
            let mut gts: Vec<GroundTruth<Box3>> = Vec::new();
            for ann in &anns {
                for b in &ann.boxes3d {
                    gts.push(GroundTruth {
                        unit: ann.id.clone(),
                        class: b.class.clone(),
                        shape: b.to_box3()?,
                    });
                }
            }
            let dets: Vec<Detection<Box3>> = io::read_detections_3d(&args.detections)
                .with_context(|| format!("reading detections {}", args.detections.display()))?
                .into_iter()
                .map(|d| {
                    let [cx, cy, cz] = d.center;
                    let [w, h, dd] = d.size;
                    Ok(Detection {
                        unit: d.unit,
                        class: d.class,
                        confidence: d.confidence,
                        shape: Box3::new(cx, cy, cz, w, h, dd)?,
                    })
                })
                .collect::<Result<_>>()?;
            evaluate_run(&dets, &gts, thresh)?
        }
    };

    let text = match args.output_format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => to_csv(&report),
    };
    emit(&args.out, &text)
}

fn to_csv(report: &EvalReport) -> String {
    let mut s = String::from("class,n_gt,n_det,ap\n");
    for c in &report.per_class {
        s.push_str(&format!("{},{},{},{}\n", c.class, c.n_gt, c.n_det, c.ap));
    }
    s.push_str(&format!("mAP,,,{}\n", report.mean_ap));
    s
}
