//! Beam-geometry feature pooling: per-view image-plane features into a 3D
//! feature volume.
//!
//! The map from feature maps to the volume is sparse and separable. In the
//! cross-section, the weight of beam `b` on cell (ix, iy) is the fraction of
//! the cell area covered by the beam triangle; along the belt, the weight of
//! image row bin `y_bin` on slice `iz` is the fraction of the cell's z extent
//! covered by the bin. The full weight of feature position (x_bin, y_bin) on
//! cell (ix, iy, iz) is the product of the two, which [`weights::compute_weights`]
//! stores once per geometry and grid; pooling is then pure sparse arithmetic.

mod avg;
mod max;
mod roi;
pub mod weights;

pub use avg::{pool_avg, pool_avg_backward, pool_avg_backward_opts, pool_avg_opts, AvgOptions};
pub use max::{pool_max, pool_max_backward, ArgmaxIndex, ArgmaxRef};
pub use roi::roi_pool_3d;
pub use weights::{compute_weights, WeightParams};

use crate::error::{CoreError, Result};
use crate::geometry::VoxelGrid;
use crate::scalar::Real;
use crate::tensor::Tensor;

/// Per-view feature tensor [C, H, W]: one column per `bin_px` image columns,
/// one row per `bin_px` image rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    pub tensor: Tensor<T>,
    pub bin_px: u32,
}

impl<T: Real> FeatureMap<T> {
    pub fn new(tensor: Tensor<T>, bin_px: u32) -> Result<Self> {
        if tensor.rank() != 3 {
            return Err(CoreError::Shape(format!(
                "feature map must be [C, H, W], got rank {}",
                tensor.rank()
            )));
        }
        if bin_px == 0 {
            return Err(CoreError::Shape("bin_px must be at least 1".into()));
        }
        Ok(FeatureMap { tensor, bin_px })
    }

    pub fn channels(&self) -> usize {
        self.tensor.dims()[0]
    }

    pub fn height(&self) -> usize {
        self.tensor.dims()[1]
    }

    pub fn width(&self) -> usize {
        self.tensor.dims()[2]
    }
}

/// Feature volume [C, nx, ny, nz] over a voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVolume<T> {
    pub tensor: Tensor<T>,
    pub grid: VoxelGrid<T>,
}

impl<T: Real> FeatureVolume<T> {
    pub fn new(tensor: Tensor<T>, grid: VoxelGrid<T>) -> Result<Self> {
        let d = tensor.dims();
        if d.len() != 4 || d[1] != grid.dims[0] || d[2] != grid.dims[1] || d[3] != grid.dims[2] {
            return Err(CoreError::Shape(format!(
                "volume dims {:?} do not match grid {:?}",
                d, grid.dims
            )));
        }
        Ok(FeatureVolume { tensor, grid })
    }

    pub fn channels(&self) -> usize {
        self.tensor.dims()[0]
    }
}

/// Which views participate in a pooling call. At least one must be active.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMask {
    active: Vec<bool>,
}

impl ViewMask {
    pub fn all(n: usize) -> Result<Self> {
        ViewMask::new(vec![true; n])
    }

    pub fn new(active: Vec<bool>) -> Result<Self> {
        if !active.iter().any(|&a| a) {
            return Err(CoreError::Domain("view mask must keep at least one view active".into()));
        }
        Ok(ViewMask { active })
    }

    pub fn with_disabled(n: usize, disabled: &[usize]) -> Result<Self> {
        let mut active = vec![true; n];
        for &d in disabled {
            if d >= n {
                return Err(CoreError::Domain(format!(
                    "cannot disable view {d}: only {n} views"
                )));
            }
            active[d] = false;
        }
        ViewMask::new(active)
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn is_active(&self, view: usize) -> bool {
        self.active[view]
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn active_flags(&self) -> &[bool] {
        &self.active
    }
}

/// Cross-section weight: beam `x_bin` covers fraction `w` of cell (ix, iy).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XsecEntry<T> {
    pub x_bin: u32,
    pub ix: u32,
    pub iy: u32,
    pub w: T,
}

/// Belt weight: image row bin `y_bin` covers fraction `w` of slice `iz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZEntry<T> {
    pub y_bin: u32,
    pub iz: u32,
    pub w: T,
}

/// Sparse weights of one view. `xsec` is sorted by (x_bin, ix, iy), `zmap`
/// by (iz, y_bin); the pooling kernels rely on these orders.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewWeights<T> {
    pub n_x_bins: u32,
    /// Feature maps must have at least this many rows.
    pub min_y_bins: u32,
    pub xsec: Vec<XsecEntry<T>>,
    pub zmap: Vec<ZEntry<T>>,
}

/// Sparse pooling weights for a geometry/grid/bin size combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseWeights<T> {
    pub grid: VoxelGrid<T>,
    pub bin_px: u32,
    pub views: Vec<ViewWeights<T>>,
}

impl<T: Real> SparseWeights<T> {
    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// Structural checks: index bounds, orderings, positive weights, and the
    /// partition bounds (cross-section sums per cell and z sums per slice
    /// never exceed 1 beyond tolerance).
    pub fn validate(&self) -> Result<()> {
        let [nx, ny, nz] = self.grid.dims;
        let tol = T::from_f64_c(1e-9);
        let one = T::one();
        for (vi, vw) in self.views.iter().enumerate() {
            let mut xy_sum = vec![T::zero(); nx * ny];
            let mut prev: Option<(u32, u32, u32)> = None;
            for e in &vw.xsec {
                if e.x_bin >= vw.n_x_bins || e.ix as usize >= nx || e.iy as usize >= ny {
                    return Err(CoreError::Shape(format!(
                        "view {vi}: cross-section entry out of bounds: bin {} cell ({}, {})",
                        e.x_bin, e.ix, e.iy
                    )));
                }
                if !(e.w > T::zero()) || e.w > one + tol {
                    return Err(CoreError::Shape(format!(
                        "view {vi}: cross-section weight {:?} outside (0, 1]",
                        e.w
                    )));
                }
                let key = (e.x_bin, e.ix, e.iy);
                if prev.is_some_and(|p| p >= key) {
                    return Err(CoreError::Shape(format!(
                        "view {vi}: cross-section entries not sorted at bin {}",
                        e.x_bin
                    )));
                }
                prev = Some(key);
                xy_sum[e.ix as usize * ny + e.iy as usize] += e.w;
            }
            if xy_sum.iter().any(|&s| s > one + tol) {
                return Err(CoreError::Shape(format!(
                    "view {vi}: cross-section weights of a cell sum above 1"
                )));
            }

            let mut z_sum = vec![T::zero(); nz];
            let mut prev_z: Option<(u32, u32)> = None;
            for e in &vw.zmap {
                if e.iz as usize >= nz {
                    return Err(CoreError::Shape(format!(
                        "view {vi}: z entry out of bounds: slice {}",
                        e.iz
                    )));
                }
                if e.y_bin >= vw.min_y_bins {
                    return Err(CoreError::Shape(format!(
                        "view {vi}: z entry row bin {} exceeds min_y_bins {}",
                        e.y_bin, vw.min_y_bins
                    )));
                }
                if !(e.w > T::zero()) || e.w > one + tol {
                    return Err(CoreError::Shape(format!(
                        "view {vi}: z weight {:?} outside (0, 1]",
                        e.w
                    )));
                }
                let key = (e.iz, e.y_bin);
                if prev_z.is_some_and(|p| p >= key) {
                    return Err(CoreError::Shape(format!(
                        "view {vi}: z entries not sorted at slice {}",
                        e.iz
                    )));
                }
                prev_z = Some(key);
                z_sum[e.iz as usize] += e.w;
            }
            if z_sum.iter().any(|&s| s > one + tol) {
                return Err(CoreError::Shape(format!(
                    "view {vi}: z weights of a slice sum above 1"
                )));
            }
        }
        Ok(())
    }

    /// Casts all weights to another scalar (the disk format stores f64).
    pub fn cast<U: Real>(&self) -> SparseWeights<U> {
        let conv = |v: T| U::from_f64_c(v.to_f64_c());
        SparseWeights {
            grid: VoxelGrid {
                origin: self.grid.origin.map(conv),
                cell_size: self.grid.cell_size.map(conv),
                dims: self.grid.dims,
            },
            bin_px: self.bin_px,
            views: self
                .views
                .iter()
                .map(|vw| ViewWeights {
                    n_x_bins: vw.n_x_bins,
                    min_y_bins: vw.min_y_bins,
                    xsec: vw
                        .xsec
                        .iter()
                        .map(|e| XsecEntry { x_bin: e.x_bin, ix: e.ix, iy: e.iy, w: conv(e.w) })
                        .collect(),
                    zmap: vw
                        .zmap
                        .iter()
                        .map(|e| ZEntry { y_bin: e.y_bin, iz: e.iz, w: conv(e.w) })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Shared validation for the pooling entry points. Returns the channel count.
fn check_pool_inputs<T: Real>(
    weights: &SparseWeights<T>,
    maps: &[FeatureMap<T>],
    mask: &ViewMask,
) -> Result<usize> {
    if maps.len() != weights.n_views() || mask.len() != weights.n_views() {
        return Err(CoreError::Shape(format!(
            "weights cover {} views, got {} maps and a mask of {}",
            weights.n_views(),
            maps.len(),
            mask.len()
        )));
    }
    let mut channels: Option<usize> = None;
    for (v, map) in maps.iter().enumerate() {
        if !mask.is_active(v) {
            continue;
        }
        if map.bin_px != weights.bin_px {
            return Err(CoreError::Shape(format!(
                "view {v}: map bin_px {} does not match weights bin_px {}",
                map.bin_px, weights.bin_px
            )));
        }
        let vw = &weights.views[v];
        if map.width() != vw.n_x_bins as usize {
            return Err(CoreError::Shape(format!(
                "view {v}: map width {} does not match {} beam bins",
                map.width(),
                vw.n_x_bins
            )));
        }
        if map.height() < vw.min_y_bins as usize {
            return Err(CoreError::Shape(format!(
                "view {v}: map height {} is shorter than the {} row bins the grid needs",
                map.height(),
                vw.min_y_bins
            )));
        }
        match channels {
            None => channels = Some(map.channels()),
            Some(c) if c != map.channels() => {
                return Err(CoreError::Shape(format!(
                    "view {v}: channel count {} differs from {}",
                    map.channels(),
                    c
                )));
            }
            _ => {}
        }
    }
    channels.ok_or_else(|| CoreError::Domain("no active view".into()))
}

/// Block-averages a [C, H, W] image into the [C, ceil(H/b), ceil(W/b)]
/// feature-map resolution. Partial edge blocks average over the pixels they
/// actually cover. With no learned backbone in the loop, this is how raw
/// scanner images become feature maps.
pub fn bin_image<T: Real>(image: &Tensor<T>, bin_px: u32) -> Result<Tensor<T>> {
    if image.rank() != 3 {
        return Err(CoreError::Shape(format!(
            "image must be [C, H, W], got rank {}",
            image.rank()
        )));
    }
    if bin_px == 0 {
        return Err(CoreError::Shape("bin_px must be at least 1".into()));
    }
    let b = bin_px as usize;
    let (c, h, w) = (image.dims()[0], image.dims()[1], image.dims()[2]);
    let (hb, wb) = (h.div_ceil(b), w.div_ceil(b));
    let mut out = Tensor::zeros(&[c, hb, wb]);
    for ch in 0..c {
        for by in 0..hb {
            let y1 = ((by + 1) * b).min(h);
            for bx in 0..wb {
                let x1 = ((bx + 1) * b).min(w);
                let mut acc = T::zero();
                for y in by * b..y1 {
                    for x in bx * b..x1 {
                        acc += image.at(&[ch, y, x]);
                    }
                }
                let cnt = T::from_usize((y1 - by * b) * (x1 - bx * b)).unwrap();
                *out.at_mut(&[ch, by, bx]) = acc / cnt;
            }
        }
    }
    Ok(out)
}

/// Per-cell total weight mass over active views; separable per view as
/// (sum of cross-section weights) x (sum of z weights).
fn coverage<T: Real>(weights: &SparseWeights<T>, mask: &ViewMask) -> Vec<T> {
    let [nx, ny, nz] = weights.grid.dims;
    let mut cov = vec![T::zero(); nx * ny * nz];
    for (v, vw) in weights.views.iter().enumerate() {
        if !mask.is_active(v) {
            continue;
        }
        let mut covxy = vec![T::zero(); nx * ny];
        for e in &vw.xsec {
            covxy[e.ix as usize * ny + e.iy as usize] += e.w;
        }
        let mut covz = vec![T::zero(); nz];
        for e in &vw.zmap {
            covz[e.iz as usize] += e.w;
        }
        for (col, &cxy) in covxy.iter().enumerate() {
            if cxy == T::zero() {
                continue;
            }
            let base = col * nz;
            for (iz, &cz) in covz.iter().enumerate() {
                cov[base + iz] += cxy * cz;
            }
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VoxelGrid;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Hand-built two-view weights on a [2, 1, 2] grid with 2 x 2 maps.
    fn fixture() -> SparseWeights<f64> {
        let grid = VoxelGrid::new([0.0; 3], [1.0; 3], [2, 1, 2]).unwrap();
        let v0 = ViewWeights {
            n_x_bins: 2,
            min_y_bins: 2,
            xsec: vec![
                XsecEntry { x_bin: 0, ix: 0, iy: 0, w: 1.0 },
                XsecEntry { x_bin: 1, ix: 1, iy: 0, w: 0.5 },
            ],
            zmap: vec![
                ZEntry { y_bin: 0, iz: 0, w: 1.0 },
                ZEntry { y_bin: 0, iz: 1, w: 0.25 },
                ZEntry { y_bin: 1, iz: 1, w: 0.75 },
            ],
        };
        let v1 = ViewWeights {
            n_x_bins: 2,
            min_y_bins: 1,
            xsec: vec![
                XsecEntry { x_bin: 0, ix: 0, iy: 0, w: 0.5 },
                XsecEntry { x_bin: 0, ix: 1, iy: 0, w: 0.5 },
            ],
            zmap: vec![
                ZEntry { y_bin: 0, iz: 0, w: 1.0 },
                ZEntry { y_bin: 0, iz: 1, w: 1.0 },
            ],
        };
        SparseWeights { grid, bin_px: 4, views: vec![v0, v1] }
    }

    fn map(values: [[f64; 2]; 2]) -> FeatureMap<f64> {
        // One channel, H = 2, W = 2.
        let flat = vec![values[0][0], values[0][1], values[1][0], values[1][1]];
        FeatureMap::new(Tensor::from_vec(&[1, 2, 2], flat).unwrap(), 4).unwrap()
    }

    fn random_map(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> FeatureMap<f64> {
        let data: Vec<f64> = (0..c * h * w).map(|_| rng.random_range(-2.0..2.0)).collect();
        FeatureMap::new(Tensor::from_vec(&[c, h, w], data).unwrap(), 4).unwrap()
    }

    #[test]
    fn avg_matches_hand_computation() {
        let w = fixture();
        let maps = vec![map([[1.0, 2.0], [3.0, 4.0]]), map([[10.0, 20.0], [30.0, 40.0]])];
        let mask = ViewMask::all(2).unwrap();
        let vol = pool_avg(&w, &maps, &mask).unwrap();
        // Cell (0,0,0): v0 contributes 1.0 * f[0,0] = 1, v1 contributes
        // 0.5 * f[0,0] = 5; average (1 + 5) / 2 = 3.
        assert!((vol.tensor.at(&[0, 0, 0, 0]) - 3.0).abs() < 1e-12);
        // Cell (1,0,1): v0: 0.5 * (0.25 * f[0,1] + 0.75 * f[1,1]) = 0.5 * (0.5 + 3) = 1.75;
        // v1: 0.5 * 1.0 * f[0,0] = 5. Average 3.375.
        assert!((vol.tensor.at(&[0, 1, 0, 1]) - 3.375).abs() < 1e-12);
    }

    #[test]
    fn avg_mask_changes_normalization() {
        let w = fixture();
        let maps = vec![map([[1.0, 2.0], [3.0, 4.0]]), map([[10.0, 20.0], [30.0, 40.0]])];
        let only_v0 = ViewMask::new(vec![true, false]).unwrap();
        let vol = pool_avg(&w, &maps, &only_v0).unwrap();
        // Only v0, V_active = 1: cell (0,0,0) = 1.0 * f[0,0] = 1.
        assert!((vol.tensor.at(&[0, 0, 0, 0]) - 1.0).abs() < 1e-12);
        assert!(ViewMask::new(vec![false, false]).is_err());
    }

    #[test]
    fn avg_renormalize_partial_rescales_partial_cells() {
        let w = fixture();
        let maps = vec![map([[1.0, 2.0], [3.0, 4.0]]), map([[10.0, 20.0], [30.0, 40.0]])];
        let mask = ViewMask::all(2).unwrap();
        let vol =
            pool_avg_opts(&w, &maps, &mask, &AvgOptions { renormalize_partial: true }).unwrap();
        // Cell (0,0,0) coverage: v0 mass 1.0, v1 mass 0.5 -> 1.5; value
        // (1 + 5) / 1.5 = 4.
        assert!((vol.tensor.at(&[0, 0, 0, 0]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn avg_backward_is_the_exact_adjoint() {
        let w = fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let maps = vec![random_map(&mut rng, 3, 2, 2), random_map(&mut rng, 3, 2, 2)];
            let mask = ViewMask::new(vec![true, rng.random_range(0..2) == 0]).unwrap();
            let vol = pool_avg(&w, &maps, &mask).unwrap();
            let grad_data: Vec<f64> =
                (0..vol.tensor.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let grad = FeatureVolume::new(
                Tensor::from_vec(vol.tensor.dims(), grad_data).unwrap(),
                w.grid.clone(),
            )
            .unwrap();
            let shapes: Vec<[usize; 3]> = maps.iter().map(|_| [3usize, 2, 2]).collect();
            let back = pool_avg_backward(&w, &grad, &mask, &shapes).unwrap();

            let lhs: f64 = grad
                .tensor
                .data()
                .iter()
                .zip(vol.tensor.data())
                .map(|(&g, &o)| g * o)
                .sum();
            let rhs: f64 = back
                .iter()
                .zip(&maps)
                .map(|(b, m)| {
                    b.data().iter().zip(m.tensor.data()).map(|(&x, &f)| x * f).sum::<f64>()
                })
                .sum();
            assert!((lhs - rhs).abs() < 1e-12, "adjoint broke: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn max_takes_weighted_maximum_and_keeps_negatives() {
        let w = fixture();
        // All features negative: the max candidate is the least negative
        // weighted value, never an implicit zero.
        let maps = vec![map([[-1.0, -1.0], [-1.0, -1.0]]), map([[-1.0, -1.0], [-1.0, -1.0]])];
        let mask = ViewMask::all(2).unwrap();
        let (vol, am) = pool_max(&w, &maps, &mask).unwrap();
        // Cell (0,0,1) candidates: v0 (b0,y0) w 0.25 -> -0.25, v0 (b0,y1)
        // w 0.75 -> -0.75, v1 (b0,y0) w 0.5 -> -0.5. Max is -0.25.
        assert!((vol.tensor.at(&[0, 0, 0, 1]) + 0.25).abs() < 1e-12);
        let r = am.entries[1].unwrap();
        assert_eq!((r.view, r.x_bin, r.y_bin), (0, 0, 0));
    }

    #[test]
    fn max_ties_pick_lowest_view_then_bins() {
        let grid = VoxelGrid::new([0.0; 3], [1.0; 3], [1, 1, 1]).unwrap();
        let vw = |wv: f64| ViewWeights {
            n_x_bins: 1,
            min_y_bins: 1,
            xsec: vec![XsecEntry { x_bin: 0, ix: 0, iy: 0, w: wv }],
            zmap: vec![ZEntry { y_bin: 0, iz: 0, w: 1.0 }],
        };
        let w = SparseWeights { grid, bin_px: 4, views: vec![vw(0.5), vw(0.5)] };
        let m = FeatureMap::new(Tensor::from_vec(&[1, 1, 1], vec![2.0]).unwrap(), 4).unwrap();
        let (vol, am) = pool_max(&w, &[m.clone(), m], &ViewMask::all(2).unwrap()).unwrap();
        assert!((vol.tensor.at(&[0, 0, 0, 0]) - 1.0).abs() < 1e-12);
        assert_eq!(am.entries[0].unwrap().view, 0);
    }

    #[test]
    fn max_backward_routes_to_argmax_only() {
        let w = fixture();
        let maps = vec![map([[1.0, 2.0], [3.0, 4.0]]), map([[10.0, 20.0], [30.0, 40.0]])];
        let mask = ViewMask::all(2).unwrap();
        let (vol, am) = pool_max(&w, &maps, &mask).unwrap();
        let ones = FeatureVolume::new(
            Tensor::from_vec(vol.tensor.dims(), vec![1.0; vol.tensor.len()]).unwrap(),
            w.grid.clone(),
        )
        .unwrap();
        let shapes = [[1usize, 2, 2], [1usize, 2, 2]];
        let back = pool_max_backward(&w, &am, &ones, &mask, &shapes).unwrap();
        // Total routed gradient equals the total winning weight.
        let total: f64 = back.iter().flat_map(|t| t.data()).sum();
        let wsum: f64 = am.entries.iter().flatten().map(|r| r.w).sum();
        assert!((total - wsum).abs() < 1e-12);
        // Every cell had at least one candidate here.
        assert!(am.entries.iter().all(|e| e.is_some()));
    }

    #[test]
    fn max_backward_rejects_stale_argmax() {
        let w = fixture();
        let maps = vec![map([[1.0, 2.0], [3.0, 4.0]]), map([[10.0, 20.0], [30.0, 40.0]])];
        let mask = ViewMask::all(2).unwrap();
        let (vol, am) = pool_max(&w, &maps, &mask).unwrap();
        let grad = FeatureVolume::new(vol.tensor.clone(), w.grid.clone()).unwrap();
        let shapes = [[1usize, 2, 2], [1usize, 2, 2]];
        // View 1's features dominate everywhere, so deactivating it strands
        // every argmax entry.
        let only_v0 = ViewMask::new(vec![true, false]).unwrap();
        assert!(pool_max_backward(&w, &am, &grad, &only_v0, &shapes).is_err());
        // Wrong dims.
        let bad = ArgmaxIndex { dims: [2, 2, 1, 2], entries: am.entries.clone() };
        assert!(pool_max_backward(&w, &bad, &grad, &mask, &shapes).is_err());
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let w = fixture();
        let good = map([[1.0, 2.0], [3.0, 4.0]]);
        let mask = ViewMask::all(2).unwrap();
        // Wrong width.
        let narrow =
            FeatureMap::new(Tensor::from_vec(&[1, 2, 1], vec![1.0, 2.0]).unwrap(), 4).unwrap();
        assert!(pool_avg(&w, &[good.clone(), narrow], &mask).is_err());
        // Too short for min_y_bins.
        let short =
            FeatureMap::new(Tensor::from_vec(&[1, 1, 2], vec![1.0, 2.0]).unwrap(), 4).unwrap();
        assert!(pool_avg(&w, &[short, good.clone()], &mask).is_err());
        // Wrong bin size.
        let wrong_bin = FeatureMap::new(good.tensor.clone(), 8).unwrap();
        assert!(pool_avg(&w, &[good.clone(), wrong_bin], &mask).is_err());
        // Wrong map count.
        assert!(pool_avg(&w, std::slice::from_ref(&good), &mask).is_err());
        // Channel mismatch between active views.
        let two_ch =
            FeatureMap::new(Tensor::from_vec(&[2, 2, 2], vec![0.0; 8]).unwrap(), 4).unwrap();
        assert!(pool_avg(&w, &[good, two_ch], &mask).is_err());
    }

    #[test]
    fn bin_image_block_means_with_partial_edges() {
        // [1, 3, 5] binned by 2 -> [1, 2, 3].
        let img = Tensor::from_vec(
            &[1, 3, 5],
            vec![
                0.0, 1.0, 2.0, 3.0, 4.0, //
                5.0, 6.0, 7.0, 8.0, 9.0, //
                10.0, 11.0, 12.0, 13.0, 14.0,
            ],
        )
        .unwrap();
        let out = bin_image(&img, 2).unwrap();
        assert_eq!(out.dims(), &[1, 2, 3]);
        assert_eq!(out.at(&[0, 0, 0]), 3.0); // mean of 0, 1, 5, 6
        assert_eq!(out.at(&[0, 0, 2]), 6.5); // partial column: 4, 9
        assert_eq!(out.at(&[0, 1, 1]), 12.5); // partial row: 12, 13
        assert_eq!(out.at(&[0, 1, 2]), 14.0); // single corner pixel

        // bin 1 is the identity.
        let same = bin_image(&img, 1).unwrap();
        assert_eq!(same, img);
        assert!(bin_image(&Tensor::<f64>::zeros(&[2, 2]), 2).is_err());
        assert!(bin_image(&img, 0).is_err());
    }

    #[test]
    fn uncovered_cells_stay_zero_in_both_variants() {
        let grid = VoxelGrid::new([0.0; 3], [1.0; 3], [2, 1, 1]).unwrap();
        let vw = ViewWeights {
            n_x_bins: 1,
            min_y_bins: 1,
            xsec: vec![XsecEntry { x_bin: 0, ix: 0, iy: 0, w: 1.0 }],
            zmap: vec![ZEntry { y_bin: 0, iz: 0, w: 1.0 }],
        };
        let w = SparseWeights { grid, bin_px: 4, views: vec![vw] };
        let m = FeatureMap::new(Tensor::from_vec(&[1, 1, 1], vec![7.0]).unwrap(), 4).unwrap();
        let mask = ViewMask::all(1).unwrap();
        let vol = pool_avg(&w, std::slice::from_ref(&m), &mask).unwrap();
        assert_eq!(vol.tensor.at(&[0, 1, 0, 0]), 0.0);
        let (mvol, am) = pool_max(&w, &[m], &mask).unwrap();
        assert_eq!(mvol.tensor.at(&[0, 1, 0, 0]), 0.0);
        assert!(am.entries[1].is_none());
        assert_eq!(am.entries[0].unwrap().w, 1.0);
    }
}
