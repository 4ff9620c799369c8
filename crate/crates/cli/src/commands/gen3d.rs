use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use mvxray_core::annotate3d::{self, ViewAnnotation};
use mvxray_core::io::{self, Box3Ann, RecordingAnnotations};

use crate::common::load_geometry;

/// Lifts the per-view 2D boxes to 3D. Annotation files carry no instance
/// ids, so the i-th box of every view is taken to be the same object; the
/// per-view lists must therefore have equal lengths and agree on each class.
#[derive(clap::Args)]
pub struct Args {
    /// Scanner geometry JSON; omit for the built-in scanner
    #[arg(long)]
    pub geometry: Option<PathBuf>,

    /// Annotation file with per-view 2D boxes in object order
    #[arg(long)]
    pub annotations: PathBuf,

    /// Output annotation file with the lifted boxes3d
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let geom = load_geometry(&args.geometry)?;
    let ann = io::read_annotations(&args.annotations)
        .with_context(|| format!("reading annotations {}", args.annotations.display()))?;

    let mut view_indices = Vec::with_capacity(ann.views.len());
    for vb in &ann.views {
        let idx = geom
            .views
            .iter()
            .position(|vg| vg.name == vb.view)
            .with_context(|| format!("view '{}' is not in the geometry", vb.view))?;
        view_indices.push(idx);
    }

    let count = ann.views.first().map_or(0, |vb| vb.boxes.len());
    if ann.views.iter().any(|vb| vb.boxes.len() != count) {
        bail!("views disagree on the number of boxes, cannot pair them up by index");
    }

    let mut boxes3d = Vec::with_capacity(count);
    for i in 0..count {
        let mut per_view = Vec::with_capacity(ann.views.len());
        for (vb, &view) in ann.views.iter().zip(&view_indices) {
            let b = &vb.boxes[i];
            per_view.push(ViewAnnotation { view, class: b.class.clone(), box2: b.to_box2()? });
        }
        let lifted = annotate3d::gen_box3(&geom, &per_view)
            .with_context(|| format!("lifting object {i}"))?;
        boxes3d.push(Box3Ann::from_box3(&per_view[0].class, &lifted));
    }

    let out = RecordingAnnotations { id: ann.id.clone(), views: ann.views, boxes3d };
    io::write_annotations(&args.out, &out)?;
    println!("lifted {count} objects to {}", args.out.display());
    Ok(())
}
