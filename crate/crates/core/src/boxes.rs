//! Axis-aligned boxes, IoU, regression targets and threshold conversion.
//!
//! Boxes are center/size tuples with strictly positive sizes; 2D boxes live in
//! image pixel coordinates, 3D boxes in millimetres with z along the belt.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2<T> {
    pub cx: T,
    pub cy: T,
    pub w: T,
    pub h: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3<T> {
    pub cx: T,
    pub cy: T,
    pub cz: T,
    pub w: T,
    pub h: T,
    pub d: T,
}

impl<T: Real> Box2<T> {
    pub fn new(cx: T, cy: T, w: T, h: T) -> Result<Self> {
        if !(w > T::zero() && h > T::zero()) {
            return Err(CoreError::Domain(format!(
                "box sizes must be positive, got w {:?} h {:?}",
                w, h
            )));
        }
        Ok(Box2 { cx, cy, w, h })
    }

    pub fn from_extents(x0: T, y0: T, x1: T, y1: T) -> Result<Self> {
        let two = T::from_f64_c(2.0);
        Box2::new((x0 + x1) / two, (y0 + y1) / two, x1 - x0, y1 - y0)
    }

    pub fn x_range(&self) -> (T, T) {
        let half = self.w / T::from_f64_c(2.0);
        (self.cx - half, self.cx + half)
    }

    pub fn y_range(&self) -> (T, T) {
        let half = self.h / T::from_f64_c(2.0);
        (self.cy - half, self.cy + half)
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }
}

impl<T: Real> Box3<T> {
    pub fn new(cx: T, cy: T, cz: T, w: T, h: T, d: T) -> Result<Self> {
        if !(w > T::zero() && h > T::zero() && d > T::zero()) {
            return Err(CoreError::Domain(format!(
                "box sizes must be positive, got w {:?} h {:?} d {:?}",
                w, h, d
            )));
        }
        Ok(Box3 { cx, cy, cz, w, h, d })
    }

    pub fn from_extents(lo: [T; 3], hi: [T; 3]) -> Result<Self> {
        let two = T::from_f64_c(2.0);
        Box3::new(
            (lo[0] + hi[0]) / two,
            (lo[1] + hi[1]) / two,
            (lo[2] + hi[2]) / two,
            hi[0] - lo[0],
            hi[1] - lo[1],
            hi[2] - lo[2],
        )
    }

    pub fn center(&self) -> [T; 3] {
        [self.cx, self.cy, self.cz]
    }

    pub fn size(&self) -> [T; 3] {
        [self.w, self.h, self.d]
    }

    pub fn lo(&self) -> [T; 3] {
        let half = T::from_f64_c(0.5);
        [self.cx - self.w * half, self.cy - self.h * half, self.cz - self.d * half]
    }

    pub fn hi(&self) -> [T; 3] {
        let half = T::from_f64_c(0.5);
        [self.cx + self.w * half, self.cy + self.h * half, self.cz + self.d * half]
    }

    pub fn volume(&self) -> T {
        self.w * self.h * self.d
    }
}

fn overlap_1d<T: Real>(c0: T, s0: T, c1: T, s1: T) -> T {
    let half = T::from_f64_c(0.5);
    let lo = (c0 - s0 * half).max(c1 - s1 * half);
    let hi = (c0 + s0 * half).min(c1 + s1 * half);
    (hi - lo).max(T::zero())
}

/// Intersection over union of two 2D boxes; 1 for identical boxes, 0 when
/// disjoint (boxes that only touch have zero intersection area).
pub fn iou2<T: Real>(a: &Box2<T>, b: &Box2<T>) -> T {
    let inter = overlap_1d(a.cx, a.w, b.cx, b.w) * overlap_1d(a.cy, a.h, b.cy, b.h);
    let union = a.area() + b.area() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    inter / union
}

/// Intersection over union of two 3D boxes.
pub fn iou3<T: Real>(a: &Box3<T>, b: &Box3<T>) -> T {
    let inter = overlap_1d(a.cx, a.w, b.cx, b.w)
        * overlap_1d(a.cy, a.h, b.cy, b.h)
        * overlap_1d(a.cz, a.d, b.cz, b.d);
    let union = a.volume() + b.volume() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    inter / union
}

/// 3D box regression offsets relative to an anchor: translations normalized
/// by the anchor size, sizes as log ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression6<T> {
    pub tx: T,
    pub ty: T,
    pub tz: T,
    pub tw: T,
    pub th: T,
    pub td: T,
}

pub fn encode_box3<T: Real>(gt: &Box3<T>, anchor: &Box3<T>) -> Regression6<T> {
    Regression6 {
        tx: (gt.cx - anchor.cx) / anchor.w,
        ty: (gt.cy - anchor.cy) / anchor.h,
        tz: (gt.cz - anchor.cz) / anchor.d,
        tw: (gt.w / anchor.w).ln(),
        th: (gt.h / anchor.h).ln(),
        td: (gt.d / anchor.d).ln(),
    }
}

pub fn decode_box3<T: Real>(reg: &Regression6<T>, anchor: &Box3<T>) -> Box3<T> {
    Box3 {
        cx: anchor.cx + reg.tx * anchor.w,
        cy: anchor.cy + reg.ty * anchor.h,
        cz: anchor.cz + reg.tz * anchor.d,
        w: anchor.w * reg.tw.exp(),
        h: anchor.h * reg.th.exp(),
        d: anchor.d * reg.td.exp(),
    }
}

/// Relative one-dimensional shift of two unit segments whose 1D IoU equals
/// the given 2D IoU threshold, assuming the shift is split evenly over both
/// image axes.
pub fn shift_for_threshold_2d<T: Real>(t2: T) -> Result<T> {
    if !(t2 > T::zero() && t2 <= T::one()) {
        return Err(CoreError::Domain(format!(
            "2D IoU threshold must be in (0, 1], got {:?}",
            t2
        )));
    }
    let two = T::from_f64_c(2.0);
    Ok(T::one() - (two * t2 / (t2 + T::one())).sqrt())
}

/// 3D IoU of two unit cubes shifted by `s` along every axis.
pub fn threshold_3d_from_shift<T: Real>(s: T) -> Result<T> {
    if !(s >= T::zero() && s < T::one()) {
        return Err(CoreError::Domain(format!(
            "per-axis shift must be in [0, 1), got {:?}",
            s
        )));
    }
    let c = (T::one() - s).powi(3);
    Ok(c / (T::from_f64_c(2.0) - c))
}

/// Maps a 2D IoU threshold to the 3D threshold that tolerates the same
/// localization error. 0.5 maps to 0.374.
pub fn convert_threshold_2d_to_3d<T: Real>(t2: T) -> Result<T> {
    threshold_3d_from_shift(shift_for_threshold_2d(t2)?)
}

/// Greedy non-maximum suppression on 3D boxes. Returns indices of kept boxes
/// in descending score order; score ties keep the earlier input index first.
pub fn nms_3d<T: Real>(boxes: &[Box3<T>], scores: &[T], iou_thresh: T) -> Result<Vec<usize>> {
    if boxes.len() != scores.len() {
        return Err(CoreError::Shape(format!(
            "nms got {} boxes but {} scores",
            boxes.len(),
            scores.len()
        )));
    }
    if !(iou_thresh >= T::zero() && iou_thresh <= T::one()) {
        return Err(CoreError::Domain(format!(
            "nms threshold must be in [0, 1], got {:?}",
            iou_thresh
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(CoreError::Domain("nms scores must not be NaN".into()));
    }
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        if kept.iter().all(|&k| iou3(&boxes[i], &boxes[k]) <= iou_thresh) {
            kept.push(i);
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b3(cx: f64, cy: f64, cz: f64, w: f64, h: f64, d: f64) -> Box3<f64> {
        Box3::new(cx, cy, cz, w, h, d).unwrap()
    }

    #[test]
    fn iou_identity_disjoint_touching() {
        let a = b3(0.0, 0.0, 0.0, 2.0, 2.0, 2.0);
        assert_eq!(iou3(&a, &a), 1.0);
        let far = b3(10.0, 0.0, 0.0, 2.0, 2.0, 2.0);
        assert_eq!(iou3(&a, &far), 0.0);
        let touching = b3(2.0, 0.0, 0.0, 2.0, 2.0, 2.0);
        assert_eq!(iou3(&a, &touching), 0.0);
        let half = b3(0.5, 0.0, 0.0, 1.0, 2.0, 2.0);
        // half sits inside a: intersection 4, union 8
        assert!((iou3(&a, &half) - 0.5).abs() < 1e-12);

        let a2 = Box2::<f64>::new(0.0, 0.0, 2.0, 2.0).unwrap();
        let b2 = Box2::new(1.0, 0.0, 2.0, 2.0).unwrap();
        // intersection 1*2 = 2, union 4 + 4 - 2 = 6
        assert!((iou2(&a2, &b2) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn encode_decode_roundtrip() {
        let anchor = b3(10.0, -4.0, 30.0, 5.0, 8.0, 2.0);
        let gt = b3(11.5, -2.0, 29.0, 7.0, 4.0, 3.5);
        let reg = encode_box3(&gt, &anchor);
        let back = decode_box3(&reg, &anchor);
        assert!((back.cx - gt.cx).abs() < 1e-12);
        assert!((back.cy - gt.cy).abs() < 1e-12);
        assert!((back.cz - gt.cz).abs() < 1e-12);
        assert!((back.w - gt.w).abs() < 1e-12);
        assert!((back.h - gt.h).abs() < 1e-12);
        assert!((back.d - gt.d).abs() < 1e-12);
    }

    #[test]
    fn encode_of_anchor_is_zero() {
        let anchor = b3(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        let reg = encode_box3(&anchor, &anchor);
        assert_eq!(
            reg,
            Regression6 { tx: 0.0, ty: 0.0, tz: 0.0, tw: 0.0, th: 0.0, td: 0.0 }
        );
    }

    #[test]
    fn threshold_conversion_known_values() {
        // Zero shift keeps IoU 1 in both dimensionalities.
        assert!((convert_threshold_2d_to_3d(1.0f64).unwrap() - 1.0).abs() < 1e-12);
        let t3 = convert_threshold_2d_to_3d(0.5f64).unwrap();
        assert!((t3 - 0.374).abs() < 5e-4, "got {t3}");
        // The shift for IoU 0.5 on unit squares: both axes shifted by s gives
        // IoU (1-s)^2 / (2 - (1-s)^2) = 0.5 at s = 1 - sqrt(2/3).
        let s = shift_for_threshold_2d(0.5f64).unwrap();
        let c = (1.0 - s) * (1.0 - s);
        assert!((c / (2.0 - c) - 0.5).abs() < 1e-12);
        assert!(convert_threshold_2d_to_3d(0.0).is_err());
        assert!(convert_threshold_2d_to_3d(1.1).is_err());
        assert!(threshold_3d_from_shift(1.0).is_err());
    }

    #[test]
    fn threshold_conversion_is_monotone() {
        let mut prev = 0.0;
        for i in 1..=100 {
            let t2 = i as f64 / 100.0;
            let t3 = convert_threshold_2d_to_3d(t2).unwrap();
            assert!(t3 > prev, "t3 must increase with t2");
            assert!(t3 <= t2 + 1e-12, "3D threshold never exceeds the 2D one");
            prev = t3;
        }
    }

    #[test]
    fn nms_keeps_best_per_cluster() {
        let boxes = vec![
            b3(0.0, 0.0, 0.0, 2.0, 2.0, 2.0),
            b3(0.1, 0.0, 0.0, 2.0, 2.0, 2.0),
            b3(10.0, 0.0, 0.0, 2.0, 2.0, 2.0),
        ];
        let kept = nms_3d(&boxes, &[0.9, 0.8, 0.7], 0.374).unwrap();
        assert_eq!(kept, vec![0, 2]);
        // Tie on score: earlier index wins and suppresses the later one.
        let kept_tie = nms_3d(&boxes[..2], &[0.5, 0.5], 0.374).unwrap();
        assert_eq!(kept_tie, vec![0]);
        // Threshold 1.0 keeps everything.
        let all = nms_3d(&boxes, &[0.9, 0.8, 0.7], 1.0).unwrap();
        assert_eq!(all.len(), 3);
        assert!(nms_3d(&boxes, &[0.9], 0.5).is_err());
        assert!(nms_3d(&boxes, &[0.9, 0.8, 0.7], -0.1).is_err());
    }

    #[test]
    fn box_constructors_reject_nonpositive_sizes() {
        assert!(Box2::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Box3::new(0.0, 0.0, 0.0, 1.0, -1.0, 1.0).is_err());
        assert!(Box3::from_extents([0.0; 3], [1.0, 1.0, 0.0]).is_err());
    }
}
