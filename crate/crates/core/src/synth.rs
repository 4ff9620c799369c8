//! Synthetic scanner recordings with known ground truth.
//!
//! Objects are axis-aligned boxes of uniform density. Each view image is an
//! additive line integral: one ray per pixel, from the source through the
//! detector pixel center, accumulating density times chord length through
//! every object whose belt extent covers the row. No attenuation model, no
//! noise; the point is exercising geometry and pooling with exactly known
//! answers, not physics.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::annotate3d::reproject_box3;
use crate::boxes::{Box2, Box3};
use crate::defaults;
use crate::error::{CoreError, Result};
use crate::geometry::{Point2, Rect, ScannerGeometry, VoxelGrid};
use crate::tensor::Tensor;

/// What to put in a scene: how many boxes, how big, how dense, which labels.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub n_objects: usize,
    /// Per-axis (lo, hi) size bounds in mm.
    pub size_range: [(f64, f64); 3],
    /// (lo, hi) uniform density bounds.
    pub density_range: (f64, f64),
    /// Class names with relative sampling weights.
    pub classes: Vec<(String, f64)>,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            n_objects: defaults::SYNTH_N_OBJECTS,
            size_range: defaults::SYNTH_SIZE_RANGE,
            density_range: defaults::SYNTH_DENSITY_RANGE,
            classes: defaults::SYNTH_CLASSES.iter().map(|c| (c.to_string(), 1.0)).collect(),
            seed: 0,
        }
    }
}

impl SceneSpec {
    fn validate(&self) -> Result<()> {
        for &(lo, hi) in &self.size_range {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(CoreError::Synth(format!("bad size range ({lo}, {hi})")));
            }
        }
        let (dlo, dhi) = self.density_range;
        if !(dlo > 0.0 && dhi >= dlo && dhi.is_finite()) {
            return Err(CoreError::Synth(format!("bad density range ({dlo}, {dhi})")));
        }
        if self.n_objects > 0 {
            if self.classes.is_empty() {
                return Err(CoreError::Synth("no classes to sample from".into()));
            }
            if self.classes.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite())
                || self.classes.iter().map(|(_, w)| w).sum::<f64>() <= 0.0
            {
                return Err(CoreError::Synth("class weights must be >= 0 with positive sum".into()));
            }
        }
        Ok(())
    }
}

/// One placed object.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthObject {
    pub class: String,
    pub box3: Box3<f64>,
    pub density: f64,
}

/// A rendered multi-view recording with its ground truth.
#[derive(Debug, Clone)]
pub struct Recording {
    pub id: String,
    pub objects: Vec<SynthObject>,
    /// One [1, H, W] image per view, same order as the geometry's views.
    pub images: Vec<Tensor<f64>>,
    /// boxes2[view][i] is objects[i] projected into that view.
    pub boxes2: Vec<Vec<Box2<f64>>>,
}

/// Generates one recording: places `spec.n_objects` boxes inside the grid
/// extent, renders every view, and projects the 3D ground truth to 2D with
/// [`reproject_box3`] so the two levels agree by construction. Deterministic
/// per seed.
pub fn gen_recording(
    geom: &ScannerGeometry<f64>,
    grid: &VoxelGrid<f64>,
    spec: &SceneSpec,
) -> Result<Recording> {
    spec.validate()?;
    let ext = grid.extent_xy();
    if !geom.tunnel.contains_rect(&ext) {
        return Err(CoreError::Synth("grid cross-section extends outside the tunnel".into()));
    }
    let (z_lo, z_hi) = grid.z_range();
    if z_lo < 0.0 {
        return Err(CoreError::Synth("grid starts before the belt window (z < 0)".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut objects = Vec::with_capacity(spec.n_objects);
    for _ in 0..spec.n_objects {
        objects.push(place_object(&mut rng, spec, &ext, (z_lo, z_hi))?);
    }

    let n_rows = (z_hi / geom.belt_mm_per_px).ceil() as usize;
    let images = geom
        .views
        .iter()
        .map(|v| render_view(v, geom.belt_mm_per_px, n_rows, &objects))
        .collect::<Result<Vec<_>>>()?;

    let mut boxes2 = vec![Vec::with_capacity(objects.len()); geom.n_views()];
    for obj in &objects {
        for (v, b) in reproject_box3(geom, &obj.box3)?.into_iter().enumerate() {
            boxes2[v].push(b);
        }
    }

    Ok(Recording { id: format!("rec-{:016x}", spec.seed), objects, images, boxes2 })
}

fn place_object(
    rng: &mut ChaCha8Rng,
    spec: &SceneSpec,
    ext: &Rect<f64>,
    (z_lo, z_hi): (f64, f64),
) -> Result<SynthObject> {
    let class = pick_class(rng, &spec.classes);
    let bounds = [(ext.min.x, ext.max.x), (ext.min.y, ext.max.y), (z_lo, z_hi)];
    for _ in 0..100 {
        let size: Vec<f64> = spec.size_range.iter().map(|&(lo, hi)| sample(rng, lo, hi)).collect();
        let center: Option<Vec<f64>> = bounds
            .iter()
            .zip(&size)
            .map(|(&(lo, hi), s)| {
                let (clo, chi) = (lo + s / 2.0, hi - s / 2.0);
                (clo <= chi).then(|| sample(rng, clo, chi))
            })
            .collect();
        if let Some(c) = center {
            let box3 = Box3::new(c[0], c[1], c[2], size[0], size[1], size[2])?;
            let (dlo, dhi) = spec.density_range;
            return Ok(SynthObject { class, box3, density: sample(rng, dlo, dhi) });
        }
    }
    Err(CoreError::Synth("no object of the requested size fits the grid after 100 draws".into()))
}

fn sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn pick_class(rng: &mut ChaCha8Rng, classes: &[(String, f64)]) -> String {
    let total: f64 = classes.iter().map(|(_, w)| w).sum();
    let r = rng.random::<f64>() * total;
    let mut cum = 0.0;
    for (name, w) in classes {
        cum += w;
        if r < cum {
            return name.clone();
        }
    }
    classes.last().unwrap().0.clone()
}

fn render_view(
    view: &crate::geometry::ViewGeometry<f64>,
    belt_mm_per_px: f64,
    n_rows: usize,
    objects: &[SynthObject],
) -> Result<Tensor<f64>> {
    let w_px = view.image_width_px as usize;
    let pixel_rays: Vec<Point2<f64>> =
        (0..w_px).map(|x| view.detector_point(x as f64 + 0.5)).collect::<Result<_>>()?;
    let slabs: Vec<(Rect<f64>, f64, f64, f64)> = objects
        .iter()
        .map(|o| {
            let (lo, hi) = (o.box3.lo(), o.box3.hi());
            let rect = Rect::new(Point2 { x: lo[0], y: lo[1] }, Point2 { x: hi[0], y: hi[1] })
                .expect("box cross-section");
            (rect, lo[2], hi[2], o.density)
        })
        .collect();

    let mut data = vec![0.0f64; n_rows * w_px];
    data.par_chunks_mut(w_px).enumerate().for_each(|(y, row)| {
        let z = (y as f64 + 0.5) * belt_mm_per_px;
        for (rect, z0, z1, density) in &slabs {
            if z < *z0 || z > *z1 {
                continue;
            }
            for (px, det) in row.iter_mut().zip(&pixel_rays) {
                *px += density * chord_length(rect, view.source, *det);
            }
        }
    });
    Tensor::from_vec(&[1, n_rows, w_px], data)
}

/// Length of the segment a..b inside the rectangle (slab method).
fn chord_length(rect: &Rect<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let d = b.sub(a);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, dd, lo, hi) in [
        (a.x, d.x, rect.min.x, rect.max.x),
        (a.y, d.y, rect.min.y, rect.max.y),
    ] {
        if dd == 0.0 {
            if p < lo || p > hi {
                return 0.0;
            }
        } else {
            let (ta, tb) = ((lo - p) / dd, (hi - p) / dd);
            let (ta, tb) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 >= t1 {
                return 0.0;
            }
        }
    }
    (t1 - t0) * d.norm()
}
