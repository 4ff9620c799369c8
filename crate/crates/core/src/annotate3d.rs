//! Lifting per-view 2D box annotations to 3D boxes and projecting them back.
//!
//! Each 2D box constrains the object to a wedge: the beam between the rays
//! through its left and right edge, clipped to the tunnel. Intersecting the
//! wedges of all annotated views bounds the object cross-section; the belt
//! extent comes from averaging the per-view y limits, which the shared belt
//! speed maps linearly to z.

use crate::boxes::{Box2, Box3};
use crate::error::{CoreError, Result};
use crate::geometry::ScannerGeometry;
use crate::polygon::{intersect_convex, ConvexPolygon};
use crate::scalar::Real;

/// One 2D box on one view, in image pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewAnnotation<T> {
    pub view: usize,
    pub class: String,
    pub box2: Box2<T>,
}

/// Cross-section region consistent with a 2D box on one view: the beam
/// through the box's x extent, clipped to the tunnel.
pub fn wedge_polygon<T: Real>(
    geom: &ScannerGeometry<T>,
    view: usize,
    box2: &Box2<T>,
) -> Result<ConvexPolygon<T>> {
    let v = geom.views.get(view).ok_or_else(|| {
        CoreError::Domain(format!("view index {view} out of range for {} views", geom.n_views()))
    })?;
    let (x_lo, x_hi) = box2.x_range();
    let tri = v.beam_triangle(x_lo, x_hi)?;
    Ok(tri.clip_rect(&geom.tunnel))
}

/// Lifts 2D annotations of one object to a 3D box.
///
/// Needs annotations from at least two views with distinct source positions
/// and a common class label. The x/y extent is the bounding box of the wedge
/// intersection; the z extent averages the per-view y limits converted by the
/// belt scale. With exact annotations of a convex object the result contains
/// the true cross-section extent.
pub fn gen_box3<T: Real>(
    geom: &ScannerGeometry<T>,
    anns: &[ViewAnnotation<T>],
) -> Result<Box3<T>> {
    if let Some(first) = anns.first() {
        if anns.iter().any(|a| a.class != first.class) {
            return Err(CoreError::Domain(format!(
                "annotations mix class labels '{}' and another; lift one object at a time",
                first.class
            )));
        }
    }
    let mut sources: Vec<_> = Vec::new();
    for a in anns {
        let v = geom.views.get(a.view).ok_or_else(|| {
            CoreError::Domain(format!(
                "view index {} out of range for {} views",
                a.view,
                geom.n_views()
            ))
        })?;
        if !sources.iter().any(|&s| s == v.source) {
            sources.push(v.source);
        }
    }
    if sources.len() < 2 {
        return Err(CoreError::InsufficientViews { have: sources.len() });
    }

    let wedges = anns
        .iter()
        .map(|a| wedge_polygon(geom, a.view, &a.box2))
        .collect::<Result<Vec<_>>>()?;
    let inter = intersect_convex(&wedges)?;
    let (lo, hi) = inter.bbox().filter(|_| !inter.is_empty()).ok_or_else(|| {
        CoreError::InconsistentAnnotation(
            "per-view wedges have empty intersection inside the tunnel".into(),
        )
    })?;

    let n = T::from_usize(anns.len()).unwrap();
    let mut z_lo = T::zero();
    let mut z_hi = T::zero();
    for a in anns {
        let (y0, y1) = a.box2.y_range();
        z_lo += geom.z_of_y_px(y0);
        z_hi += geom.z_of_y_px(y1);
    }
    z_lo /= n;
    z_hi /= n;

    Box3::from_extents([lo.x, lo.y, z_lo], [hi.x, hi.y, z_hi])
}

/// Projects a 3D box into every view: x limits from projecting the four
/// cross-section corners, y limits from the z extent via the belt scale.
pub fn reproject_box3<T: Real>(
    geom: &ScannerGeometry<T>,
    box3: &Box3<T>,
) -> Result<Vec<Box2<T>>> {
    let lo = box3.lo();
    let hi = box3.hi();
    let corners = [
        crate::geometry::pt(lo[0], lo[1]),
        crate::geometry::pt(hi[0], lo[1]),
        crate::geometry::pt(hi[0], hi[1]),
        crate::geometry::pt(lo[0], hi[1]),
    ];
    let y0 = geom.y_px_of_z(lo[2]);
    let y1 = geom.y_px_of_z(hi[2]);
    geom.views
        .iter()
        .map(|v| {
            let mut x_min = T::infinity();
            let mut x_max = T::neg_infinity();
            for c in corners {
                let x = v.project_point(c)?;
                x_min = x_min.min(x);
                x_max = x_max.max(x);
            }
            Box2::from_extents(x_min, y0, x_max, y1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::iou3;
    use crate::defaults::default_geometry;

    fn annotate_all_views(
        geom: &ScannerGeometry<f64>,
        b: &Box3<f64>,
    ) -> Vec<ViewAnnotation<f64>> {
        reproject_box3(geom, b)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(view, box2)| ViewAnnotation { view, class: "obj".into(), box2 })
            .collect()
    }

    #[test]
    fn lift_contains_truth_and_recovers_z_exactly() {
        let geom = default_geometry();
        let truth = Box3::new(-40.0, 180.0, 120.0, 120.0, 90.0, 60.0).unwrap();
        let anns = annotate_all_views(&geom, &truth);
        let lifted = gen_box3(&geom, &anns).unwrap();

        let (tl, th) = (truth.lo(), truth.hi());
        let (ll, lh) = (lifted.lo(), lifted.hi());
        for ax in 0..2 {
            assert!(ll[ax] <= tl[ax] + 1e-9, "axis {ax}: lifted must contain truth");
            assert!(lh[ax] >= th[ax] - 1e-9, "axis {ax}");
        }
        assert!((ll[2] - tl[2]).abs() < 1e-9);
        assert!((lh[2] - th[2]).abs() < 1e-9);
        assert!(iou3(&lifted, &truth) > 0.5, "iou {}", iou3(&lifted, &truth));
    }

    #[test]
    fn two_views_suffice_but_one_does_not() {
        let geom = default_geometry();
        let truth = Box3::new(50.0, 250.0, 200.0, 80.0, 80.0, 80.0).unwrap();
        let anns = annotate_all_views(&geom, &truth);
        assert!(gen_box3(&geom, &anns[..2]).is_ok());
        match gen_box3(&geom, &anns[..1]) {
            Err(CoreError::InsufficientViews { have: 1 }) => {}
            other => panic!("expected InsufficientViews, got {other:?}"),
        }
        match gen_box3(&geom, &[]) {
            Err(CoreError::InsufficientViews { have: 0 }) => {}
            other => panic!("expected InsufficientViews, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_view_does_not_count_twice() {
        let geom = default_geometry();
        let truth = Box3::new(50.0, 250.0, 200.0, 80.0, 80.0, 80.0).unwrap();
        let anns = annotate_all_views(&geom, &truth);
        let dup = vec![anns[0].clone(), anns[0].clone()];
        assert!(matches!(
            gen_box3(&geom, &dup),
            Err(CoreError::InsufficientViews { have: 1 })
        ));
    }

    #[test]
    fn contradictory_annotations_are_inconsistent() {
        let geom = default_geometry();
        let truth = Box3::new(-200.0, 100.0, 150.0, 60.0, 60.0, 60.0).unwrap();
        let far = Box3::new(250.0, 380.0, 150.0, 40.0, 40.0, 60.0).unwrap();
        let mut anns = annotate_all_views(&geom, &truth);
        let other = annotate_all_views(&geom, &far);
        // Side view sees a contradictory location.
        anns[3] = other[3].clone();
        assert!(matches!(
            gen_box3(&geom, &anns),
            Err(CoreError::InconsistentAnnotation(_))
        ));
    }

    #[test]
    fn mixed_classes_are_rejected() {
        let geom = default_geometry();
        let truth = Box3::new(0.0, 200.0, 150.0, 60.0, 60.0, 60.0).unwrap();
        let mut anns = annotate_all_views(&geom, &truth);
        anns[1].class = "other".into();
        assert!(matches!(gen_box3(&geom, &anns), Err(CoreError::Domain(_))));
    }

    #[test]
    fn reprojection_of_lift_reproduces_2d_boxes() {
        // Lift then reproject: the x extent can only stay equal or grow, the
        // y extent is reproduced exactly (mean of identical limits).
        let geom = default_geometry();
        let truth = Box3::new(10.0, 150.0, 300.0, 100.0, 70.0, 90.0).unwrap();
        let anns = annotate_all_views(&geom, &truth);
        let lifted = gen_box3(&geom, &anns).unwrap();
        let re = reproject_box3(&geom, &lifted).unwrap();
        for (a, r) in anns.iter().zip(&re) {
            let (ax0, ax1) = a.box2.x_range();
            let (rx0, rx1) = r.x_range();
            assert!(rx0 <= ax0 + 1e-9 && rx1 >= ax1 - 1e-9);
            let (ay0, ay1) = a.box2.y_range();
            let (ry0, ry1) = r.y_range();
            assert!((ry0 - ay0).abs() < 1e-9 && (ry1 - ay1).abs() < 1e-9);
        }
    }
}
