//! 3D region-of-interest max pooling on a feature volume.

use crate::boxes::Box3;
use crate::error::{CoreError, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;

use super::FeatureVolume;

/// Max-pools the cells under `box3` into an [C, a, b, c] tensor.
///
/// The box is snapped outward to whole cells and clamped to the grid; the
/// snapped index range of each axis is split into near-equal sub-blocks by
/// rounded linear spacing, each at least one cell (blocks overlap when the
/// box spans fewer cells than the output resolution asks for). Errors if the
/// box misses the grid entirely.
pub fn roi_pool_3d<T: Real>(
    volume: &FeatureVolume<T>,
    box3: &Box3<T>,
    out_dims: [usize; 3],
) -> Result<Tensor<T>> {
    if out_dims.iter().any(|&d| d == 0) {
        return Err(CoreError::Domain(format!(
            "RoI output dims must be at least 1, got {out_dims:?}"
        )));
    }
    let grid = &volume.grid;
    let lo = box3.lo();
    let hi = box3.hi();
    let mut idx_lo = [0usize; 3];
    let mut idx_hi = [0usize; 3];
    for ax in 0..3 {
        let u_lo = (lo[ax] - grid.origin[ax]) / grid.cell_size[ax];
        let u_hi = (hi[ax] - grid.origin[ax]) / grid.cell_size[ax];
        let n = grid.dims[ax];
        if u_hi <= T::zero() || u_lo >= T::from_usize(n).unwrap() {
            return Err(CoreError::Domain(format!(
                "box lies outside the grid on axis {ax}"
            )));
        }
        let lo_i = u_lo.floor().to_f64_c().max(0.0) as usize;
        idx_lo[ax] = lo_i.min(n - 1);
        idx_hi[ax] = (u_hi.ceil().to_f64_c().max(1.0) as usize).clamp(idx_lo[ax] + 1, n);
    }

    let spans: [Vec<(usize, usize)>; 3] = [
        blocks(idx_lo[0], idx_hi[0], out_dims[0]),
        blocks(idx_lo[1], idx_hi[1], out_dims[1]),
        blocks(idx_lo[2], idx_hi[2], out_dims[2]),
    ];

    let channels = volume.channels();
    let [nx, ny, nz] = grid.dims;
    let mut out = Tensor::zeros(&[channels, out_dims[0], out_dims[1], out_dims[2]]);
    let data = volume.tensor.data();
    for ch in 0..channels {
        for (j0, &(x0, x1)) in spans[0].iter().enumerate() {
            for (j1, &(y0, y1)) in spans[1].iter().enumerate() {
                for (j2, &(z0, z1)) in spans[2].iter().enumerate() {
                    let mut m = T::neg_infinity();
                    for ix in x0..x1 {
                        for iy in y0..y1 {
                            let base = ((ch * nx + ix) * ny + iy) * nz;
                            for iz in z0..z1 {
                                m = m.max(data[base + iz]);
                            }
                        }
                    }
                    *out.at_mut(&[ch, j0, j1, j2]) = m;
                }
            }
        }
    }
    Ok(out)
}

/// Splits index range [lo, hi) into `n` sub-blocks by rounded linear spacing
/// (ties to even, so a range split into more blocks than cells stays
/// symmetric).
fn blocks(lo: usize, hi: usize, n: usize) -> Vec<(usize, usize)> {
    let len = hi - lo;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let a = ((j as f64 * len as f64 / n as f64).round_ties_even() as usize).min(len - 1);
        let b = (((j + 1) as f64 * len as f64 / n as f64).round_ties_even() as usize)
            .clamp(a + 1, len);
        out.push((lo + a, lo + b));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VoxelGrid;

    fn volume(dims: [usize; 3], c: usize) -> FeatureVolume<f64> {
        let grid = VoxelGrid::new([0.0; 3], [1.0; 3], dims).unwrap();
        let mut t = Tensor::zeros(&[c, dims[0], dims[1], dims[2]]);
        for (i, v) in t.data_mut().iter_mut().enumerate() {
            *v = i as f64;
        }
        FeatureVolume::new(t, grid).unwrap()
    }

    #[test]
    fn whole_grid_identity() {
        let vol = volume([4, 3, 2], 2);
        let b = Box3::new(2.0, 1.5, 1.0, 4.0, 3.0, 2.0).unwrap();
        let out = roi_pool_3d(&vol, &b, [4, 3, 2]).unwrap();
        assert_eq!(out.data(), vol.tensor.data());
    }

    #[test]
    fn single_output_takes_global_max() {
        let vol = volume([4, 4, 4], 1);
        let b = Box3::new(2.0, 2.0, 2.0, 4.0, 4.0, 4.0).unwrap();
        let out = roi_pool_3d(&vol, &b, [1, 1, 1]).unwrap();
        assert_eq!(out.data(), &[63.0]);
    }

    #[test]
    fn snapping_rounds_outward() {
        let vol = volume([4, 4, 4], 1);
        // Covers x in [0.9, 2.1] -> cells 0..3 on x, single cell elsewhere.
        let b = Box3::new(1.5, 0.5, 0.5, 1.2, 0.2, 0.2).unwrap();
        let out = roi_pool_3d(&vol, &b, [3, 1, 1]).unwrap();
        // x cells 0, 1, 2 at (y, z) = (0, 0): values 0, 16, 32.
        assert_eq!(out.data(), &[0.0, 16.0, 32.0]);
    }

    #[test]
    fn tiny_box_repeats_its_cell() {
        let vol = volume([4, 4, 4], 1);
        let b = Box3::new(1.5, 1.5, 1.5, 0.4, 0.4, 0.4).unwrap();
        let out = roi_pool_3d(&vol, &b, [2, 2, 2]).unwrap();
        let v = vol.tensor.at(&[0, 1, 1, 1]);
        assert!(out.data().iter().all(|&x| x == v));
    }

    #[test]
    fn outside_box_is_rejected_and_partial_is_clamped() {
        let vol = volume([4, 4, 4], 1);
        let outside = Box3::new(10.0, 2.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(roi_pool_3d(&vol, &outside, [1, 1, 1]), Err(CoreError::Domain(_))));
        let hanging = Box3::new(0.0, 2.0, 2.0, 3.0, 1.0, 1.0).unwrap();
        // x in [-1.5, 1.5] clamps to cells 0..2.
        let out = roi_pool_3d(&vol, &hanging, [1, 1, 1]).unwrap();
        assert!(out.data()[0] >= 0.0);
        assert!(roi_pool_3d(&vol, &hanging, [0, 1, 1]).is_err());
    }

    #[test]
    fn block_spacing_is_near_equal() {
        assert_eq!(blocks(0, 7, 2), vec![(0, 4), (4, 7)]);
        assert_eq!(blocks(2, 8, 3), vec![(2, 4), (4, 6), (6, 8)]);
        assert_eq!(blocks(0, 2, 4), vec![(0, 1), (0, 1), (1, 2), (1, 2)]);
        for (a, b) in blocks(5, 30, 7) {
            assert!(b > a);
        }
    }
}
