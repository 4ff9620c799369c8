use std::path::PathBuf;

use anyhow::{Context, Result};
use mvxray_core::annotate3d;
use mvxray_core::io::{self, Box2Ann, RecordingAnnotations, ViewBoxes};

use crate::common::load_geometry;

/// Replaces the per-view 2D boxes with projections of the 3D boxes.
#[derive(clap::Args)]
pub struct Args {
    /// Scanner geometry JSON; omit for the built-in scanner
    #[arg(long)]
    pub geometry: Option<PathBuf>,

    /// Annotation file whose boxes3d are projected
    #[arg(long)]
    pub annotations: PathBuf,

    /// Output annotation file
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let geom = load_geometry(&args.geometry)?;
    let ann = io::read_annotations(&args.annotations)
        .with_context(|| format!("reading annotations {}", args.annotations.display()))?;

    let mut views: Vec<ViewBoxes> = geom
        .views
        .iter()
        .map(|vg| ViewBoxes { view: vg.name.clone(), boxes: Vec::new() })
        .collect();
    for (i, b3) in ann.boxes3d.iter().enumerate() {
        let projected = annotate3d::reproject_box3(&geom, &b3.to_box3()?)
            .with_context(|| format!("projecting box {i}"))?;
        for (view, b2) in views.iter_mut().zip(&projected) {
            view.boxes.push(Box2Ann::from_box2(&b3.class, b2));
        }
    }

    let n = ann.boxes3d.len();
    let out = RecordingAnnotations { id: ann.id, views, boxes3d: ann.boxes3d };
    io::write_annotations(&args.out, &out)?;
    println!("projected {n} boxes into {} views at {}", geom.n_views(), args.out.display());
    Ok(())
}
