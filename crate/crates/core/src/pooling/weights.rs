//! Sparse weight construction from scanner geometry.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::geometry::{ScannerGeometry, ViewGeometry, VoxelGrid};
use crate::polygon::ConvexPolygon;
use crate::scalar::Real;

use super::{SparseWeights, ViewWeights, XsecEntry, ZEntry};

#[derive(Debug, Clone, Copy)]
pub struct WeightParams<T> {
    pub bin_px: u32,
    /// Weights at or below this are dropped.
    pub epsilon_w: T,
}

impl<T: Real> WeightParams<T> {
    pub fn new(bin_px: u32) -> Self {
        WeightParams { bin_px, epsilon_w: T::from_f64_c(crate::defaults::EPSILON_W) }
    }
}

impl<T: Real> Default for WeightParams<T> {
    fn default() -> Self {
        WeightParams::new(crate::defaults::BIN_PX)
    }
}

/// Builds the sparse beam-to-cell weights for every view.
///
/// Cross-section weights are exact triangle/rectangle clip areas normalized
/// by the cell area, so the weights of one view sum to 1 on every cell fully
/// inside its fan. The grid cross-section must lie inside the tunnel.
pub fn compute_weights<T: Real>(
    geom: &ScannerGeometry<T>,
    grid: &VoxelGrid<T>,
    params: &WeightParams<T>,
) -> Result<SparseWeights<T>> {
    if params.bin_px == 0 {
        return Err(CoreError::Domain("bin_px must be at least 1".into()));
    }
    if !(params.epsilon_w >= T::zero()) {
        return Err(CoreError::Domain("epsilon_w must be non-negative".into()));
    }
    if !geom.tunnel.contains_rect(&grid.extent_xy()) {
        return Err(CoreError::Geometry(
            "voxel grid cross-section must lie inside the tunnel".into(),
        ));
    }
    let views = geom
        .views
        .iter()
        .map(|v| view_weights(v, geom, grid, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseWeights { grid: grid.clone(), bin_px: params.bin_px, views })
}

fn view_weights<T: Real>(
    view: &ViewGeometry<T>,
    geom: &ScannerGeometry<T>,
    grid: &VoxelGrid<T>,
    params: &WeightParams<T>,
) -> Result<ViewWeights<T>> {
    let n_x_bins = view.image_width_px.div_ceil(params.bin_px);
    let xsec_per_bin: Vec<Vec<XsecEntry<T>>> = (0..n_x_bins)
        .into_par_iter()
        .map(|b| beam_entries(view, grid, params, b))
        .collect::<Result<Vec<_>>>()?;
    let xsec: Vec<XsecEntry<T>> = xsec_per_bin.into_iter().flatten().collect();

    let (zmap, min_y_bins) = z_entries(geom, grid, params);
    Ok(ViewWeights { n_x_bins, min_y_bins, xsec, zmap })
}

/// Clip one beam triangle against every candidate cell rectangle.
fn beam_entries<T: Real>(
    view: &ViewGeometry<T>,
    grid: &VoxelGrid<T>,
    params: &WeightParams<T>,
    b: u32,
) -> Result<Vec<XsecEntry<T>>> {
    let x_lo = T::from_u32(b * params.bin_px).unwrap();
    let x_hi = T::from_u32(((b + 1) * params.bin_px).min(view.image_width_px)).unwrap();
    let tri = view.beam_triangle(x_lo, x_hi)?;
    let (ix_range, iy_range) = candidate_cells(&tri, grid);
    let cell_area = grid.cell_size[0] * grid.cell_size[1];

    let mut out = Vec::new();
    for ix in ix_range {
        for iy in iy_range.clone() {
            let rect = grid.cell_rect_xy(ix, iy);
            let clipped = tri.clip_rect(&rect);
            let w = clipped.area() / cell_area;
            if w > params.epsilon_w {
                out.push(XsecEntry { x_bin: b, ix: ix as u32, iy: iy as u32, w });
            }
        }
    }
    Ok(out)
}

/// Index ranges of grid cells whose rectangle can meet the polygon.
fn candidate_cells<T: Real>(
    poly: &ConvexPolygon<T>,
    grid: &VoxelGrid<T>,
) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let Some((lo, hi)) = poly.bbox() else {
        return (0..0, 0..0);
    };
    let to_range = |lo_v: T, hi_v: T, origin: T, cell: T, n: usize| {
        let lo_i = ((lo_v - origin) / cell).floor().to_f64_c().max(0.0) as usize;
        let hi_i = (((hi_v - origin) / cell).ceil().to_f64_c().max(0.0) as usize).min(n);
        lo_i.min(n)..hi_i
    };
    (
        to_range(lo.x, hi.x, grid.origin[0], grid.cell_size[0], grid.dims[0]),
        to_range(lo.y, hi.y, grid.origin[1], grid.cell_size[1], grid.dims[1]),
    )
}

/// Interval overlaps of image row bins with grid slices. Rows start at z = 0,
/// so slices below z = 0 stay uncovered.
fn z_entries<T: Real>(
    geom: &ScannerGeometry<T>,
    grid: &VoxelGrid<T>,
    params: &WeightParams<T>,
) -> (Vec<ZEntry<T>>, u32) {
    let bin_mm = T::from_u32(params.bin_px).unwrap() * geom.belt_mm_per_px;
    let cell_z = grid.cell_size[2];
    let mut entries = Vec::new();
    let mut min_y_bins = 0u32;
    for iz in 0..grid.dims[2] {
        let (z0, z1) = grid.z_interval(iz);
        if z1 <= T::zero() {
            continue;
        }
        let b_lo = (z0 / bin_mm).floor().to_f64_c().max(0.0) as u32;
        let b_hi = (z1 / bin_mm).ceil().to_f64_c() as u32;
        for b in b_lo..b_hi {
            let bin_lo = T::from_u32(b).unwrap() * bin_mm;
            let bin_hi = T::from_u32(b + 1).unwrap() * bin_mm;
            let ov = z1.min(bin_hi) - z0.max(bin_lo);
            let w = ov / cell_z;
            if w > params.epsilon_w {
                entries.push(ZEntry { y_bin: b, iz: iz as u32, w });
                min_y_bins = min_y_bins.max(b + 1);
            }
        }
    }
    (entries, min_y_bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::{default_geometry, default_grid};
    use crate::geometry::pt;

    fn small_grid() -> VoxelGrid<f64> {
        VoxelGrid::new([-288.0, 18.0, 0.0], [36.0, 24.0, 36.0], [16, 16, 16]).unwrap()
    }

    #[test]
    fn weights_validate_and_partition_interior_cells() {
        let geom = default_geometry();
        let grid = small_grid();
        let w = compute_weights(&geom, &grid, &WeightParams::new(16)).unwrap();
        w.validate().unwrap();
        assert_eq!(w.views[0].n_x_bins, 24);
        assert_eq!(w.views[2].n_x_bins, 22);
        assert_eq!(w.views[3].n_x_bins, 26);

        // Every view's fan covers the whole tunnel, so every cell must get
        // cross-section weight exactly 1.
        for (vi, vw) in w.views.iter().enumerate() {
            let mut sums = vec![0.0; 16 * 16];
            for e in &vw.xsec {
                sums[e.ix as usize * 16 + e.iy as usize] += e.w;
            }
            for (cell, s) in sums.iter().enumerate() {
                assert!(
                    (s - 1.0).abs() < 1e-9,
                    "view {vi} cell {cell}: cross-section sum {s}"
                );
            }
            // z bins tile z >= 0 and the grid starts at 0: full z coverage.
            let mut zsums = vec![0.0; 16];
            for e in &vw.zmap {
                zsums[e.iz as usize] += e.w;
            }
            for (iz, s) in zsums.iter().enumerate() {
                assert!((s - 1.0).abs() < 1e-12, "slice {iz}: z sum {s}");
            }
        }
    }

    #[test]
    fn z_entries_match_hand_computed_overlaps() {
        // bin_mm = 16 * 1.5 = 24; cell z = 36. Slice 0 covers [0, 36]:
        // bin 0 gives 24/36, bin 1 gives 12/36.
        let geom = default_geometry();
        let grid = small_grid();
        let (entries, min_y) = z_entries(&geom, &grid, &WeightParams::new(16));
        let s0: Vec<_> = entries.iter().filter(|e| e.iz == 0).collect();
        assert_eq!(s0.len(), 2);
        assert_eq!(s0[0].y_bin, 0);
        assert!((s0[0].w - 24.0 / 36.0).abs() < 1e-12);
        assert_eq!(s0[1].y_bin, 1);
        assert!((s0[1].w - 12.0 / 36.0).abs() < 1e-12);
        // Grid z max 576 = bin 24 exactly.
        assert_eq!(min_y, 24);
    }

    #[test]
    fn grid_outside_tunnel_is_rejected() {
        let geom = default_geometry();
        let wide = VoxelGrid::new([-400.0, 18.0, 0.0], [36.0, 24.0, 36.0], [16, 16, 16]).unwrap();
        assert!(matches!(
            compute_weights(&geom, &wide, &WeightParams::new(16)),
            Err(CoreError::Geometry(_))
        ));
        assert!(compute_weights(&geom, &small_grid(), &WeightParams { bin_px: 0, epsilon_w: 0.0 })
            .is_err());
    }

    #[test]
    fn last_partial_bin_is_narrower() {
        // 352 px at bin 15 -> 23 bins, last covers 22*15..352 = 22 px.
        let geom = default_geometry();
        let grid = small_grid();
        let w = compute_weights(&geom, &grid, &WeightParams::new(15)).unwrap();
        assert_eq!(w.views[2].n_x_bins, 24);
        let v = &geom.views[2];
        let last = v.beam_triangle(345.0, 352.0).unwrap();
        assert!(last.area() > 0.0);
    }

    #[test]
    fn default_resolution_runs_and_stays_sparse() {
        let geom = default_geometry();
        let grid = default_grid();
        let w = compute_weights(&geom, &grid, &WeightParams::new(16)).unwrap();
        w.validate().unwrap();
        for vw in &w.views {
            // Each beam touches a thin strip of cells, far below dense size.
            assert!(vw.xsec.len() < 96 * 96 * 8);
            assert!(!vw.xsec.is_empty());
        }
    }

    #[test]
    fn beam_weight_of_cell_bisected_by_boundary() {
        // A single view pointing straight up: source below, detector above;
        // beams are near-vertical wedges. A cell straddling a beam boundary
        // splits its weight between the two beams and the parts sum to 1.
        let tunnel = crate::geometry::Rect::new(pt(-100.0, 0.0), pt(100.0, 200.0)).unwrap();
        let view = ViewGeometry::new(
            "up",
            pt(0.0, -1000.0),
            [pt(-150.0, 300.0), pt(150.0, 300.0)],
            100,
        )
        .unwrap();
        let geom = ScannerGeometry::new(vec![view], tunnel, 1.0).unwrap();
        let grid = VoxelGrid::new([-90.0, 10.0, 0.0], [18.0, 18.0, 18.0], [10, 10, 1]).unwrap();
        let w = compute_weights(&geom, &grid, &WeightParams::new(10)).unwrap();
        w.validate().unwrap();
        let mut per_cell = vec![0.0f64; 100];
        for e in &w.views[0].xsec {
            per_cell[e.ix as usize * 10 + e.iy as usize] += e.w;
        }
        for (cell, s) in per_cell.iter().enumerate() {
            assert!((s - 1.0).abs() < 1e-9, "cell {cell} sum {s}");
        }
        // Some cell must be genuinely split between beams.
        let split = w.views[0]
            .xsec
            .iter()
            .any(|e| e.w > 0.05 && e.w < 0.95);
        assert!(split);
    }
}
