//! Convex polygons and Sutherland-Hodgman clipping.
//!
//! Polygons are counter-clockwise vertex lists and may be empty (the result of
//! clipping disjoint shapes). Clipping a convex subject against a convex clip
//! region is exact up to floating-point rounding, which is all the weight
//! construction and wedge intersection need.

use crate::error::{CoreError, Result};
use crate::geometry::{pt, Point2, Rect};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon<T> {
    verts: Vec<Point2<T>>,
}

impl<T: Real> ConvexPolygon<T> {
    pub fn empty() -> Self {
        ConvexPolygon { verts: Vec::new() }
    }

    /// Builds from counter-clockwise vertices. Rejects clockwise input; a
    /// collinear (zero-area) list is accepted and behaves as empty for area
    /// purposes.
    pub fn from_ccw(verts: Vec<Point2<T>>) -> Result<Self> {
        if verts.len() >= 3 && signed_area_2x(&verts) < T::zero() {
            return Err(CoreError::Geometry(
                "polygon vertices must be counter-clockwise".into(),
            ));
        }
        Ok(ConvexPolygon { verts })
    }

    pub fn from_rect(r: &Rect<T>) -> Self {
        ConvexPolygon { verts: r.corners().to_vec() }
    }

    pub fn vertices(&self) -> &[Point2<T>] {
        &self.verts
    }

    pub fn is_empty(&self) -> bool {
        self.verts.len() < 3
    }

    /// Shoelace area; zero for degenerate polygons.
    pub fn area(&self) -> T {
        if self.verts.len() < 3 {
            return T::zero();
        }
        signed_area_2x(&self.verts) / T::from_f64_c(2.0)
    }

    /// Axis-aligned bounding box, `None` when empty.
    pub fn bbox(&self) -> Option<(Point2<T>, Point2<T>)> {
        let first = *self.verts.first()?;
        let mut lo = first;
        let mut hi = first;
        for v in &self.verts[1..] {
            lo = pt(lo.x.min(v.x), lo.y.min(v.y));
            hi = pt(hi.x.max(v.x), hi.y.max(v.y));
        }
        Some((lo, hi))
    }

    /// Keeps the part of the polygon on the left of the directed edge a -> b
    /// (boundary included).
    pub fn clip_halfplane(&self, a: Point2<T>, b: Point2<T>) -> ConvexPolygon<T> {
        let n = self.verts.len();
        if n == 0 {
            return ConvexPolygon::empty();
        }
        let edge = b.sub(a);
        let side = |p: Point2<T>| edge.cross(p.sub(a));
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let cur = self.verts[i];
            let nxt = self.verts[(i + 1) % n];
            let sc = side(cur);
            let sn = side(nxt);
            if sc >= T::zero() {
                out.push(cur);
            }
            if (sc > T::zero() && sn < T::zero()) || (sc < T::zero() && sn > T::zero()) {
                let t = sc / (sc - sn);
                out.push(cur.lerp(nxt, t));
            }
        }
        if out.len() < 3 {
            return ConvexPolygon::empty();
        }
        ConvexPolygon { verts: out }
    }

    /// Sutherland-Hodgman intersection with another convex polygon.
    pub fn clip_convex(&self, clip: &ConvexPolygon<T>) -> ConvexPolygon<T> {
        if self.is_empty() || clip.is_empty() {
            return ConvexPolygon::empty();
        }
        let mut acc = self.clone();
        let m = clip.verts.len();
        for i in 0..m {
            acc = acc.clip_halfplane(clip.verts[i], clip.verts[(i + 1) % m]);
            if acc.is_empty() {
                return ConvexPolygon::empty();
            }
        }
        acc
    }

    pub fn clip_rect(&self, r: &Rect<T>) -> ConvexPolygon<T> {
        self.clip_convex(&ConvexPolygon::from_rect(r))
    }
}

/// Twice the signed area of a closed vertex loop.
fn signed_area_2x<T: Real>(verts: &[Point2<T>]) -> T {
    let n = verts.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc += verts[i].cross(verts[(i + 1) % n]);
    }
    acc
}

/// Intersection of a sequence of convex polygons; empty input is an error,
/// an empty intersection is a valid empty polygon.
pub fn intersect_convex<T: Real>(polys: &[ConvexPolygon<T>]) -> Result<ConvexPolygon<T>> {
    let (first, rest) = polys
        .split_first()
        .ok_or_else(|| CoreError::Domain("intersect_convex needs at least one polygon".into()))?;
    let mut acc = first.clone();
    for p in rest {
        acc = acc.clip_convex(p);
        if acc.is_empty() {
            return Ok(ConvexPolygon::empty());
        }
    }
    Ok(acc)
}
