use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use mvxray_core::{boxes, defaults, io, Box3};

/// Runs greedy NMS independently per (unit, class) group and writes the
/// surviving detections in their original file order.
#[derive(clap::Args)]
pub struct Args {
    /// 3D detections JSON
    #[arg(long)]
    pub detections: PathBuf,

    #[arg(long, default_value_t = defaults::NMS_IOU_3D)]
    pub iou_thresh: f64,

    /// Output detections JSON
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let dets = io::read_detections_3d(&args.detections)
        .with_context(|| format!("reading detections {}", args.detections.display()))?;

    let mut groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        groups.entry((d.unit.as_str(), d.class.as_str())).or_default().push(i);
    }

    let mut kept = Vec::new();
    for indices in groups.values() {
        let mut boxes3 = Vec::with_capacity(indices.len());
        let mut scores = Vec::with_capacity(indices.len());
        for &i in indices {
            let [cx, cy, cz] = dets[i].center;
            let [w, h, d] = dets[i].size;
            boxes3.push(Box3::new(cx, cy, cz, w, h, d)?);
            scores.push(dets[i].confidence);
        }
        for j in boxes::nms_3d(&boxes3, &scores, args.iou_thresh)? {
            kept.push(indices[j]);
        }
    }
    kept.sort_unstable();

    let surviving: Vec<_> = kept.iter().map(|&i| dets[i].clone()).collect();
    io::write_detections_3d(&args.out, &surviving)?;
    println!("kept {} of {} detections in {}", surviving.len(), dets.len(), args.out.display());
    Ok(())
}
