//! Detection evaluation: greedy matching, every-point interpolated average
//! precision and per-class reports.
//!
//! Matching units are opaque strings: image identifiers for 2D boxes,
//! recording identifiers for 3D boxes. A detection can only match ground
//! truth of its own unit and class, each ground truth at most once.

use serde::{Deserialize, Serialize};

use crate::boxes::{iou2, iou3, Box2, Box3};
use crate::error::{CoreError, Result};
use crate::scalar::Real;

/// Anything with a symmetric IoU; implemented by 2D and 3D boxes.
pub trait IouShape {
    fn iou(&self, other: &Self) -> f64;
}

impl<T: Real> IouShape for Box2<T> {
    fn iou(&self, other: &Self) -> f64 {
        iou2(self, other).to_f64_c()
    }
}

impl<T: Real> IouShape for Box3<T> {
    fn iou(&self, other: &Self) -> f64 {
        iou3(self, other).to_f64_c()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection<B> {
    pub unit: String,
    pub class: String,
    pub confidence: f64,
    pub shape: B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<B> {
    pub unit: String,
    pub class: String,
    pub shape: B,
}

/// Per-detection outcome in descending-confidence order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchLabel {
    /// Index into the input detection slice.
    pub det_index: usize,
    pub tp: bool,
}

/// Greedily matches detections of one class against ground truth.
///
/// Detections are visited by descending confidence (ties keep input order);
/// each matches the unmatched same-unit ground truth of highest IoU when that
/// IoU reaches the threshold, otherwise it is a false positive.
pub fn match_detections<B: IouShape>(
    dets: &[Detection<B>],
    gts: &[GroundTruth<B>],
    iou_thresh: f64,
) -> Result<Vec<MatchLabel>> {
    check_threshold(iou_thresh)?;
    if let Some(class) = dets.first().map(|d| &d.class).or_else(|| gts.first().map(|g| &g.class)) {
        if dets.iter().any(|d| &d.class != class) || gts.iter().any(|g| &g.class != class) {
            return Err(CoreError::Domain(
                "match_detections compares one class at a time".into(),
            ));
        }
    }
    if dets.iter().any(|d| !d.confidence.is_finite()) {
        return Err(CoreError::Domain("detection confidences must be finite".into()));
    }

    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b].confidence.partial_cmp(&dets[a].confidence).unwrap().then(a.cmp(&b))
    });

    let mut gt_used = vec![false; gts.len()];
    let mut labels = Vec::with_capacity(dets.len());
    for &di in &order {
        let det = &dets[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_used[gi] || gt.unit != det.unit {
                continue;
            }
            let iou = det.shape.iou(&gt.shape);
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        let tp = match best {
            Some((gi, iou)) if iou >= iou_thresh => {
                gt_used[gi] = true;
                true
            }
            _ => false,
        };
        labels.push(MatchLabel { det_index: di, tp });
    }
    Ok(labels)
}

fn check_threshold(iou_thresh: f64) -> Result<()> {
    if !(iou_thresh > 0.0 && iou_thresh <= 1.0) {
        return Err(CoreError::Domain(format!(
            "IoU threshold must be in (0, 1], got {iou_thresh}"
        )));
    }
    Ok(())
}

/// One point of the precision/recall curve, after each detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Envelope value: best precision at this recall or beyond.
    pub interpolated: f64,
}

/// Cumulative precision/recall per detection plus the interpolated envelope.
/// `tp_labels` must be in descending-confidence order.
pub fn pr_curve(tp_labels: &[bool], n_gt: usize) -> Vec<PrPoint> {
    let mut pts = Vec::with_capacity(tp_labels.len());
    let mut tp = 0usize;
    for (i, &is_tp) in tp_labels.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        let recall = if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 };
        let precision = tp as f64 / (i + 1) as f64;
        pts.push(PrPoint { recall, precision, interpolated: 0.0 });
    }
    let mut env = 0.0f64;
    for p in pts.iter_mut().rev() {
        env = env.max(p.precision);
        p.interpolated = env;
    }
    pts
}

/// Every-point interpolated average precision (the VOC 2010 definition):
/// the area under the precision envelope over recall. Zero when `n_gt` is 0.
pub fn average_precision(tp_labels: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let curve = pr_curve(tp_labels, n_gt);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for p in &curve {
        ap += (p.recall - prev_recall) * p.interpolated;
        prev_recall = p.recall;
    }
    ap
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEval {
    pub class: String,
    pub n_gt: usize,
    pub n_det: usize,
    pub ap: f64,
    pub curve: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassEval>,
    /// Unweighted mean over classes with ground truth; 0 when there is none.
    pub mean_ap: f64,
    /// Detection classes with no ground truth anywhere; their detections are
    /// ignored rather than counted as false positives.
    pub ignored_classes: Vec<String>,
}

/// Full evaluation: per-class matching and AP over all units.
pub fn evaluate_run<B: IouShape + Clone>(
    dets: &[Detection<B>],
    gts: &[GroundTruth<B>],
    iou_thresh: f64,
) -> Result<EvalReport> {
    check_threshold(iou_thresh)?;
    let mut classes: Vec<&str> = gts.iter().map(|g| g.class.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut per_class = Vec::with_capacity(classes.len());
    for class in &classes {
        let cls_dets: Vec<Detection<B>> =
            dets.iter().filter(|d| d.class == *class).cloned().collect();
        let cls_gts: Vec<GroundTruth<B>> =
            gts.iter().filter(|g| g.class == *class).cloned().collect();
        let labels = match_detections(&cls_dets, &cls_gts, iou_thresh)?;
        let tp_labels: Vec<bool> = labels.iter().map(|l| l.tp).collect();
        per_class.push(ClassEval {
            class: class.to_string(),
            n_gt: cls_gts.len(),
            n_det: cls_dets.len(),
            ap: average_precision(&tp_labels, cls_gts.len()),
            curve: pr_curve(&tp_labels, cls_gts.len()),
        });
    }

    let mut ignored: Vec<String> = dets
        .iter()
        .filter(|d| !classes.contains(&d.class.as_str()))
        .map(|d| d.class.clone())
        .collect();
    ignored.sort_unstable();
    ignored.dedup();

    let mean_ap = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|c| c.ap).sum::<f64>() / per_class.len() as f64
    };
    Ok(EvalReport { per_class, mean_ap, ignored_classes: ignored })
}
