//! Fan-beam scanner geometry.
//!
//! A scanner is a 2D cross-section (point sources and line detector segments in
//! the x/y plane) extruded along the belt axis z. Image columns map linearly to
//! detector positions; image rows map to belt positions via `belt_mm_per_px`
//! with row 0 at z = 0, so the same affine rule converts between image y and
//! world z everywhere in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::polygon::ConvexPolygon;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

pub fn pt<T: Real>(x: T, y: T) -> Point2<T> {
    Point2 { x, y }
}

impl<T: Real> Point2<T> {
    pub fn add(self, o: Point2<T>) -> Point2<T> {
        pt(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Point2<T>) -> Point2<T> {
        pt(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: T) -> Point2<T> {
        pt(self.x * s, self.y * s)
    }

    pub fn lerp(self, o: Point2<T>, t: T) -> Point2<T> {
        self.add(o.sub(self).scale(t))
    }

    pub fn dot(self, o: Point2<T>) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is
    /// counter-clockwise from `self`.
    pub fn cross(self, o: Point2<T>) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }
}

/// Axis-aligned rectangle with `min` strictly below `max` in both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub min: Point2<T>,
    pub max: Point2<T>,
}

impl<T: Real> Rect<T> {
    pub fn new(min: Point2<T>, max: Point2<T>) -> Result<Self> {
        if !(min.x < max.x && min.y < max.y) {
            return Err(CoreError::Geometry(format!(
                "rectangle extents must be positive, got min ({:?}, {:?}) max ({:?}, {:?})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(Rect { min, max })
    }

    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_strict(&self, p: Point2<T>) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    pub fn contains_rect(&self, o: &Rect<T>) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    /// Corners in counter-clockwise order starting at `min`.
    pub fn corners(&self) -> [Point2<T>; 4] {
        [
            self.min,
            pt(self.max.x, self.min.y),
            self.max,
            pt(self.min.x, self.max.y),
        ]
    }

    /// True if the open segment (a, b) passes through the rectangle interior.
    pub fn segment_crosses_interior(&self, a: Point2<T>, b: Point2<T>) -> bool {
        // Liang-Barsky: clip the segment parameter range against each slab.
        let d = b.sub(a);
        let mut t0 = T::zero();
        let mut t1 = T::one();
        let axes = [
            (d.x, self.min.x - a.x, self.max.x - a.x),
            (d.y, self.min.y - a.y, self.max.y - a.y),
        ];
        for (dir, lo, hi) in axes {
            if dir == T::zero() {
                if lo > T::zero() || hi < T::zero() {
                    return false;
                }
            } else {
                let (ta, tb) = (lo / dir, hi / dir);
                let (ta, tb) = if ta <= tb { (ta, tb) } else { (tb, ta) };
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 >= t1 {
                    return false;
                }
            }
        }
        // A positive-length clipped range means the segment spends time inside;
        // ranges on the boundary only were rejected by t0 >= t1 above unless the
        // segment is axis-parallel on an edge, which the midpoint test settles.
        let mid = a.lerp(b, (t0 + t1) / T::from_f64_c(2.0));
        self.contains_strict(mid)
    }
}

/// One X-ray view: a point source and a line detector in the cross-section
/// plane, plus the width of the images it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewGeometry<T> {
    pub name: String,
    pub source: Point2<T>,
    /// Detector segment endpoints; image column 0 projects to `detector[0]`.
    pub detector: [Point2<T>; 2],
    pub image_width_px: u32,
}

impl<T: Real> ViewGeometry<T> {
    pub fn new(
        name: impl Into<String>,
        source: Point2<T>,
        detector: [Point2<T>; 2],
        image_width_px: u32,
    ) -> Result<Self> {
        let v = ViewGeometry { name: name.into(), source, detector, image_width_px };
        v.validate()?;
        Ok(v)
    }

    fn validate(&self) -> Result<()> {
        if self.image_width_px == 0 {
            return Err(CoreError::Geometry(format!(
                "view '{}': image_width_px must be at least 1",
                self.name
            )));
        }
        let e = self.detector[1].sub(self.detector[0]);
        if e.norm() == T::zero() {
            return Err(CoreError::Geometry(format!(
                "view '{}': detector segment has zero length",
                self.name
            )));
        }
        // Source strictly off the detector line, otherwise the fan collapses.
        let q = self.source.sub(self.detector[0]);
        let dist = e.cross(q).abs() / e.norm();
        if dist == T::zero() {
            return Err(CoreError::Geometry(format!(
                "view '{}': source lies on the detector line",
                self.name
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> T {
        T::from_u32(self.image_width_px).expect("image width fits the scalar")
    }

    /// Cross-section point of image column coordinate `x_px` in [0, width].
    pub fn detector_point(&self, x_px: T) -> Result<Point2<T>> {
        if !(x_px >= T::zero() && x_px <= self.width()) {
            return Err(CoreError::Domain(format!(
                "view '{}': detector coordinate {:?} outside [0, {}]",
                self.name, x_px, self.image_width_px
            )));
        }
        Ok(self.detector[0].lerp(self.detector[1], x_px / self.width()))
    }

    /// Counter-clockwise beam triangle between the rays through columns
    /// `x_lo` and `x_hi`.
    pub fn beam_triangle(&self, x_lo: T, x_hi: T) -> Result<ConvexPolygon<T>> {
        if !(x_lo < x_hi) {
            return Err(CoreError::Domain(format!(
                "view '{}': beam needs x_lo < x_hi, got {:?} >= {:?}",
                self.name, x_lo, x_hi
            )));
        }
        let a = self.detector_point(x_lo)?;
        let b = self.detector_point(x_hi)?;
        let tri = [self.source, a, b];
        let two_area = b.sub(self.source).cross(a.sub(self.source));
        if two_area == T::zero() {
            return Err(CoreError::Degenerate(format!(
                "view '{}': beam triangle for columns {:?}..{:?} has zero area",
                self.name, x_lo, x_hi
            )));
        }
        let verts = if two_area > T::zero() {
            vec![tri[0], tri[2], tri[1]]
        } else {
            vec![tri[0], tri[1], tri[2]]
        };
        ConvexPolygon::from_ccw(verts)
    }

    /// Image column coordinate hit by the ray from the source through `p`.
    ///
    /// Errors if `p` coincides with the source, the ray is parallel to the
    /// detector, the detector lies behind the source, or the ray passes the
    /// detector segment's ends.
    pub fn project_point(&self, p: Point2<T>) -> Result<T> {
        let r = p.sub(self.source);
        if r.norm() == T::zero() {
            return Err(CoreError::Projection(format!(
                "view '{}': cannot project the source point onto the detector",
                self.name
            )));
        }
        let e = self.detector[1].sub(self.detector[0]);
        let q = self.detector[0].sub(self.source);
        let denom = r.cross(e);
        if denom == T::zero() {
            return Err(CoreError::Projection(format!(
                "view '{}': ray through ({:?}, {:?}) is parallel to the detector",
                self.name, p.x, p.y
            )));
        }
        let t = q.cross(e) / denom;
        let u = q.cross(r) / denom;
        if t <= T::zero() {
            return Err(CoreError::Projection(format!(
                "view '{}': detector lies behind the source for point ({:?}, {:?})",
                self.name, p.x, p.y
            )));
        }
        if u < T::zero() || u > T::one() {
            return Err(CoreError::Projection(format!(
                "view '{}': ray through ({:?}, {:?}) misses the detector segment",
                self.name, p.x, p.y
            )));
        }
        Ok(u * self.width())
    }
}

/// Full scanner: all views, the tunnel cross-section and the belt scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScannerGeometry<T> {
    pub views: Vec<ViewGeometry<T>>,
    pub tunnel: Rect<T>,
    /// Millimetres of belt travel per image row.
    pub belt_mm_per_px: T,
}

impl<T: Real> ScannerGeometry<T> {
    pub fn new(views: Vec<ViewGeometry<T>>, tunnel: Rect<T>, belt_mm_per_px: T) -> Result<Self> {
        if views.is_empty() {
            return Err(CoreError::Geometry("scanner needs at least one view".into()));
        }
        if !(belt_mm_per_px > T::zero()) {
            return Err(CoreError::Geometry(format!(
                "belt_mm_per_px must be positive, got {:?}",
                belt_mm_per_px
            )));
        }
        for v in &views {
            v.validate()?;
            if tunnel.contains_strict(v.source) {
                return Err(CoreError::Geometry(format!(
                    "view '{}': source lies inside the tunnel",
                    v.name
                )));
            }
            if tunnel.contains_strict(v.detector[0])
                || tunnel.contains_strict(v.detector[1])
                || tunnel.segment_crosses_interior(v.detector[0], v.detector[1])
            {
                return Err(CoreError::Geometry(format!(
                    "view '{}': detector segment enters the tunnel",
                    v.name
                )));
            }
        }
        Ok(ScannerGeometry { views, tunnel, belt_mm_per_px })
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn z_of_y_px(&self, y_px: T) -> T {
        y_px * self.belt_mm_per_px
    }

    pub fn y_px_of_z(&self, z: T) -> T {
        z / self.belt_mm_per_px
    }
}

/// Regular voxel grid over the reconstruction volume. `origin` is the minimum
/// corner in millimetres, z along the belt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid<T> {
    pub origin: [T; 3],
    pub cell_size: [T; 3],
    pub dims: [usize; 3],
}

impl<T: Real> VoxelGrid<T> {
    pub fn new(origin: [T; 3], cell_size: [T; 3], dims: [usize; 3]) -> Result<Self> {
        if cell_size.iter().any(|&c| !(c > T::zero())) {
            return Err(CoreError::Geometry(format!(
                "voxel cell size must be positive, got {:?}",
                cell_size
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(CoreError::Geometry(format!(
                "voxel grid dims must be at least 1, got {:?}",
                dims
            )));
        }
        Ok(VoxelGrid { origin, cell_size, dims })
    }

    pub fn n_cells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Cross-section rectangle of column (ix, iy).
    pub fn cell_rect_xy(&self, ix: usize, iy: usize) -> Rect<T> {
        let x0 = self.origin[0] + T::from_usize(ix).unwrap() * self.cell_size[0];
        let y0 = self.origin[1] + T::from_usize(iy).unwrap() * self.cell_size[1];
        Rect {
            min: pt(x0, y0),
            max: pt(x0 + self.cell_size[0], y0 + self.cell_size[1]),
        }
    }

    pub fn z_interval(&self, iz: usize) -> (T, T) {
        let z0 = self.origin[2] + T::from_usize(iz).unwrap() * self.cell_size[2];
        (z0, z0 + self.cell_size[2])
    }

    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> [T; 3] {
        let half = T::from_f64_c(0.5);
        [
            self.origin[0] + (T::from_usize(ix).unwrap() + half) * self.cell_size[0],
            self.origin[1] + (T::from_usize(iy).unwrap() + half) * self.cell_size[1],
            self.origin[2] + (T::from_usize(iz).unwrap() + half) * self.cell_size[2],
        ]
    }

    /// Cross-section extent of the whole grid.
    pub fn extent_xy(&self) -> Rect<T> {
        Rect {
            min: pt(self.origin[0], self.origin[1]),
            max: pt(
                self.origin[0] + T::from_usize(self.dims[0]).unwrap() * self.cell_size[0],
                self.origin[1] + T::from_usize(self.dims[1]).unwrap() * self.cell_size[1],
            ),
        }
    }

    pub fn z_range(&self) -> (T, T) {
        (
            self.origin[2],
            self.origin[2] + T::from_usize(self.dims[2]).unwrap() * self.cell_size[2],
        )
    }
}
