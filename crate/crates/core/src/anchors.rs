//! Anchor design: k-means over box dimensions under the Jaccard distance.
//!
//! Distances compare co-centered boxes, so only the (w, h, d) triples matter;
//! centroids are updated as elementwise means and empty clusters are reseeded
//! with the point farthest from its centroid. Runs are deterministic for a
//! given seed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boxes::{iou3, Box3};
use crate::error::{CoreError, Result};
use crate::geometry::VoxelGrid;
use crate::scalar::Real;

/// Anchor dimensions (w, h, d) in millimetres, sorted by volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet<T> {
    pub sizes: Vec<[T; 3]>,
}

impl<T: Real> AnchorSet<T> {
    pub fn new(mut sizes: Vec<[T; 3]>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(CoreError::Cluster("anchor set must not be empty".into()));
        }
        for s in &sizes {
            if s.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
                return Err(CoreError::Cluster(format!(
                    "anchor dimensions must be positive and finite, got {s:?}"
                )));
            }
        }
        sizes.sort_by(|a, b| {
            let (va, vb) = (a[0] * a[1] * a[2], b[0] * b[1] * b[2]);
            va.partial_cmp(&vb).unwrap().then_with(|| a.partial_cmp(b).unwrap())
        });
        Ok(AnchorSet { sizes })
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }
}

/// IoU of two boxes with these dimensions placed on a common center.
pub fn iou_centered<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    let inter = a[0].min(b[0]) * a[1].min(b[1]) * a[2].min(b[2]);
    let union = a[0] * a[1] * a[2] + b[0] * b[1] * b[2] - inter;
    inter / union
}

/// Clustering distance: 1 - IoU of co-centered boxes.
pub fn jaccard_distance<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    T::one() - iou_centered(a, b)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub seed: u64,
    /// Independent k-means runs; the one with the lowest mean distance wins.
    pub restarts: u32,
    pub max_iters: u32,
    /// Stop a run when the mean distance improves by less than this.
    pub tol: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: crate::defaults::ANCHOR_K,
            seed: 0,
            restarts: crate::defaults::KMEANS_RESTARTS,
            max_iters: crate::defaults::KMEANS_MAX_ITERS,
            tol: crate::defaults::KMEANS_TOL,
        }
    }
}

/// Clusters box dimensions into `cfg.k` anchors.
pub fn kmeans_anchors<T: Real>(dims: &[[T; 3]], cfg: &ClusterConfig) -> Result<AnchorSet<T>> {
    if cfg.k == 0 {
        return Err(CoreError::Cluster("k must be at least 1".into()));
    }
    if dims.len() < cfg.k {
        return Err(CoreError::Cluster(format!(
            "cannot form {} clusters from {} boxes",
            cfg.k,
            dims.len()
        )));
    }
    if cfg.restarts == 0 || cfg.max_iters == 0 {
        return Err(CoreError::Cluster("restarts and max_iters must be at least 1".into()));
    }
    for s in dims {
        if s.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(CoreError::Cluster(format!(
                "box dimensions must be positive and finite, got {s:?}"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(f64, Vec<[T; 3]>)> = None;
    for _ in 0..cfg.restarts {
        let (obj, centroids) = lloyd_run(dims, cfg, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, centroids));
        }
    }
    AnchorSet::new(best.expect("at least one restart").1)
}

fn lloyd_run<T: Real>(
    dims: &[[T; 3]],
    cfg: &ClusterConfig,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<[T; 3]>) {
    let n = dims.len();
    let k = cfg.k;

    // k-means++ style seeding: squared-distance weighted draws.
    let mut centroids: Vec<[T; 3]> = Vec::with_capacity(k);
    centroids.push(dims[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = dims
        .iter()
        .map(|&x| jaccard_distance(x, centroids[0]).to_f64_c().powi(2))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                r -= w;
                if r <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.push(dims[next]);
        for (i, &x) in dims.iter().enumerate() {
            d2[i] = d2[i].min(jaccard_distance(x, dims[next]).to_f64_c().powi(2));
        }
    }

    let mut assign = vec![usize::MAX; n];
    let mut prev_obj = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        // Assignment; ties go to the lowest centroid index.
        let mut changed = false;
        let mut obj = 0.0;
        for (i, &x) in dims.iter().enumerate() {
            let mut best_j = 0;
            let mut best_d = jaccard_distance(x, centroids[0]);
            for (j, &c) in centroids.iter().enumerate().skip(1) {
                let d = jaccard_distance(x, c);
                if d < best_d {
                    best_d = d;
                    best_j = j;
                }
            }
            obj += best_d.to_f64_c();
            if assign[i] != best_j {
                assign[i] = best_j;
                changed = true;
            }
        }
        obj /= n as f64;

        // Elementwise-mean update.
        let mut sums = vec![[T::zero(); 3]; k];
        let mut counts = vec![0usize; k];
        for (i, &x) in dims.iter().enumerate() {
            let j = assign[i];
            for ax in 0..3 {
                sums[j][ax] += x[ax];
            }
            counts[j] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                let cnt = T::from_usize(counts[j]).unwrap();
                for ax in 0..3 {
                    centroids[j][ax] = sums[j][ax] / cnt;
                }
            } else {
                // Reseed with the point farthest from its own centroid.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = jaccard_distance(dims[a], centroids[assign[a]]);
                        let db = jaccard_distance(dims[b], centroids[assign[b]]);
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .unwrap();
                centroids[j] = dims[far];
            }
        }

        if !changed || prev_obj - obj < cfg.tol {
            break;
        }
        prev_obj = obj;
    }

    // Objective of the final centroids.
    let obj = dims
        .iter()
        .map(|&x| {
            centroids
                .iter()
                .map(|&c| jaccard_distance(x, c).to_f64_c())
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / n as f64;
    (obj, centroids)
}

/// Mean over ground-truth boxes of the best co-centered anchor IoU.
pub fn avg_best_iou_centered<T: Real>(anchors: &AnchorSet<T>, gts: &[Box3<T>]) -> Result<T> {
    if gts.is_empty() {
        return Err(CoreError::Domain("avg_best_iou needs at least one box".into()));
    }
    let mut acc = T::zero();
    for gt in gts {
        let mut best = T::zero();
        for &a in &anchors.sizes {
            best = best.max(iou_centered(a, gt.size()));
        }
        acc += best;
    }
    Ok(acc / T::from_usize(gts.len()).unwrap())
}

/// Like [`avg_best_iou_centered`], but each anchor sits at the grid position
/// nearest the ground-truth center: every coordinate is snapped to the
/// closest multiple of `stride` measured from the grid origin.
pub fn avg_best_iou_grid<T: Real>(
    anchors: &AnchorSet<T>,
    gts: &[Box3<T>],
    grid: &VoxelGrid<T>,
    stride: [T; 3],
) -> Result<T> {
    if gts.is_empty() {
        return Err(CoreError::Domain("avg_best_iou needs at least one box".into()));
    }
    if stride.iter().any(|&s| !(s > T::zero())) {
        return Err(CoreError::Domain(format!("stride must be positive, got {stride:?}")));
    }
    let mut acc = T::zero();
    for gt in gts {
        let c = gt.center();
        let mut snapped = [T::zero(); 3];
        for ax in 0..3 {
            let steps = ((c[ax] - grid.origin[ax]) / stride[ax]).round();
            snapped[ax] = grid.origin[ax] + steps * stride[ax];
        }
        let mut best = T::zero();
        for &a in &anchors.sizes {
            let placed = Box3 {
                cx: snapped[0],
                cy: snapped[1],
                cz: snapped[2],
                w: a[0],
                h: a[1],
                d: a[2],
            };
            best = best.max(iou3(&placed, gt));
        }
        acc += best;
    }
    Ok(acc / T::from_usize(gts.len()).unwrap())
}

/// One box per anchor and grid cell, centered on the cell. Anchor-major,
/// then x, y, z with z fastest.
pub fn gen_anchor_grid<T: Real>(anchors: &AnchorSet<T>, grid: &VoxelGrid<T>) -> Vec<Box3<T>> {
    let mut out = Vec::with_capacity(anchors.k() * grid.n_cells());
    for &a in &anchors.sizes {
        for ix in 0..grid.dims[0] {
            for iy in 0..grid.dims[1] {
                for iz in 0..grid.dims[2] {
                    let c = grid.cell_center(ix, iy, iz);
                    out.push(Box3 { cx: c[0], cy: c[1], cz: c[2], w: a[0], h: a[1], d: a[2] });
                }
            }
        }
    }
    out
}

/// Volume-preserving 3D expansion of the classic {1:1, 1:2, 2:1} x scales
/// priors: the seven distinct axis-ratio patterns over {1, 2}, scaled to the
/// volume of a cube with the given edge. Three scales give 21 anchors.
pub fn standard_anchors_3d<T: Real>(scales: &[T]) -> Result<AnchorSet<T>> {
    const SHAPES: [[f64; 3]; 7] = [
        [1.0, 1.0, 1.0],
        [2.0, 1.0, 1.0],
        [1.0, 2.0, 1.0],
        [1.0, 1.0, 2.0],
        [1.0, 2.0, 2.0],
        [2.0, 1.0, 2.0],
        [2.0, 2.0, 1.0],
    ];
    let mut sizes = Vec::with_capacity(scales.len() * SHAPES.len());
    for &s in scales {
        if !(s > T::zero()) {
            return Err(CoreError::Domain(format!("anchor scale must be positive, got {s:?}")));
        }
        for shape in SHAPES {
            let norm = (shape[0] * shape[1] * shape[2]).cbrt();
            sizes.push([
                s * T::from_f64_c(shape[0] / norm),
                s * T::from_f64_c(shape[1] / norm),
                s * T::from_f64_c(shape[2] / norm),
            ]);
        }
    }
    AnchorSet::new(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_distance_basics() {
        let a = [2.0f64, 2.0, 2.0];
        assert_eq!(jaccard_distance(a, a), 0.0);
        // Disjoint dims still overlap when co-centered: d in (0, 1).
        let b = [1.0, 1.0, 1.0];
        let d = jaccard_distance(a, b);
        assert!((d - (1.0 - 1.0 / 8.0)).abs() < 1e-12);
        // Symmetry.
        assert_eq!(jaccard_distance(b, a), d);
    }

    #[test]
    fn recovers_planted_clusters() {
        // Two tight groups of dims; k = 2 must find their means.
        let mut dims = Vec::new();
        for i in 0..10 {
            let e = i as f64 * 0.1;
            dims.push([50.0 + e, 50.0 - e, 50.0]);
            dims.push([200.0 + e, 200.0 - e, 200.0]);
        }
        let cfg = ClusterConfig { k: 2, seed: 7, restarts: 4, ..Default::default() };
        let set = kmeans_anchors(&dims, &cfg).unwrap();
        assert_eq!(set.k(), 2);
        let small = set.sizes[0];
        let large = set.sizes[1];
        assert!((small[0] - 50.45).abs() < 1e-9 && (small[1] - 49.55).abs() < 1e-9);
        assert!((large[0] - 200.45).abs() < 1e-9 && (large[2] - 200.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dims: Vec<[f64; 3]> = (0..60)
            .map(|_| {
                [
                    rng.random_range(20.0..300.0),
                    rng.random_range(20.0..300.0),
                    rng.random_range(20.0..300.0),
                ]
            })
            .collect();
        let cfg = ClusterConfig { k: 5, seed: 3, restarts: 3, ..Default::default() };
        let a = kmeans_anchors(&dims, &cfg).unwrap();
        let b = kmeans_anchors(&dims, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn k_equals_n_returns_the_points() {
        let dims = vec![[10.0, 20.0, 30.0], [40.0, 50.0, 60.0], [70.0, 80.0, 90.0]];
        let cfg = ClusterConfig { k: 3, seed: 0, restarts: 2, ..Default::default() };
        let set = kmeans_anchors(&dims, &cfg).unwrap();
        // Perfect clustering: each point its own centroid, sorted by volume.
        assert_eq!(set.sizes, dims);
    }

    #[test]
    fn rejects_bad_input() {
        let dims = vec![[10.0, 20.0, 30.0], [40.0, 50.0, 60.0]];
        let bad = ClusterConfig { k: 3, ..Default::default() };
        assert!(kmeans_anchors(&dims, &bad).is_err());
        let zero_k = ClusterConfig { k: 0, ..Default::default() };
        assert!(kmeans_anchors(&dims, &zero_k).is_err());
        let neg = vec![[10.0, -20.0, 30.0]];
        let cfg = ClusterConfig { k: 1, ..Default::default() };
        assert!(kmeans_anchors(&neg, &cfg).is_err());
    }

    #[test]
    fn centered_quality_is_one_for_matching_anchor() {
        let set = AnchorSet::new(vec![[30.0f64, 40.0, 50.0]]).unwrap();
        let gt = Box3::new(500.0, -3.0, 9.0, 30.0, 40.0, 50.0).unwrap();
        let q = avg_best_iou_centered(&set, &[gt]).unwrap();
        assert!((q - 1.0).abs() < 1e-12);
        assert!(avg_best_iou_centered(&set, &[]).is_err());
    }

    #[test]
    fn grid_quality_one_on_grid_point_and_never_above_centered() {
        let grid = VoxelGrid::<f64>::new([0.0, 0.0, 0.0], [4.0, 4.0, 4.0], [16, 16, 16]).unwrap();
        let stride = [8.0, 8.0, 8.0];
        let set = AnchorSet::new(vec![[20.0, 24.0, 28.0], [40.0, 30.0, 20.0]]).unwrap();
        // Center exactly on a stride multiple with matching dims.
        let on_grid = Box3::new(16.0, 24.0, 32.0, 20.0, 24.0, 28.0).unwrap();
        let q = avg_best_iou_grid(&set, &[on_grid], &grid, stride).unwrap();
        assert!((q - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let gt = Box3::new(
                rng.random_range(8.0..56.0),
                rng.random_range(8.0..56.0),
                rng.random_range(8.0..56.0),
                rng.random_range(10.0..40.0),
                rng.random_range(10.0..40.0),
                rng.random_range(10.0..40.0),
            )
            .unwrap();
            let c = avg_best_iou_centered(&set, &[gt]).unwrap();
            let g = avg_best_iou_grid(&set, &[gt], &grid, stride).unwrap();
            assert!(g <= c + 1e-12, "grid-snapped {g} exceeded centered {c}");
        }
        assert!(avg_best_iou_grid(&set, &[on_grid], &grid, [0.0, 8.0, 8.0]).is_err());
    }

    #[test]
    fn anchor_grid_count_and_centers() {
        let grid = VoxelGrid::new([0.0, 0.0, 0.0], [10.0, 10.0, 10.0], [4, 4, 4]).unwrap();
        let set = AnchorSet::new(vec![[5.0; 3]; 1]).unwrap();
        let set10 = AnchorSet::new((1..=10).map(|i| [i as f64; 3]).collect()).unwrap();
        assert_eq!(gen_anchor_grid(&set10, &grid).len(), 640);
        let boxes = gen_anchor_grid(&set, &grid);
        assert_eq!(boxes[0].center(), [5.0, 5.0, 5.0]);
        // z fastest.
        assert_eq!(boxes[1].center(), [5.0, 5.0, 15.0]);
        assert_eq!(boxes.last().unwrap().center(), [35.0, 35.0, 35.0]);
    }

    #[test]
    fn standard_anchor_expansion_counts_and_volume() {
        let set = standard_anchors_3d(&[60.0f64, 120.0, 240.0]).unwrap();
        assert_eq!(set.k(), 21);
        for s in &set.sizes {
            let v = s[0] * s[1] * s[2];
            let edge = v.cbrt();
            assert!(
                (edge - 60.0).abs() < 1e-9
                    || (edge - 120.0).abs() < 1e-9
                    || (edge - 240.0).abs() < 1e-9,
                "volume-preserving expansion broken: edge {edge}"
            );
        }
        assert!(standard_anchors_3d(&[-1.0]).is_err());
    }
}
