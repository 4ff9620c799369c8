//! Max pooling over weighted beam candidates, with an argmax index for the
//! backward pass.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;

use super::{check_pool_inputs, FeatureMap, FeatureVolume, SparseWeights, ViewMask};

/// Winning candidate of one (channel, cell) pair: which view and feature
/// position produced the maximum, and with what weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgmaxRef<T> {
    pub view: u32,
    pub x_bin: u32,
    pub y_bin: u32,
    pub w: T,
}

/// Argmax record of a max-pooling call, laid out like the volume
/// [C, nx, ny, nz]. `None` marks cells no beam covers.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxIndex<T> {
    pub dims: [usize; 4],
    pub entries: Vec<Option<ArgmaxRef<T>>>,
}

/// Takes, per cell and channel, the maximum over all weighted candidates
/// `w * f` from the active views. A candidate exists for every (view, x_bin,
/// y_bin) whose combined weight on the cell is positive; cells without
/// candidates stay zero. Value ties keep the lowest (view, x_bin, y_bin).
pub fn pool_max<T: Real>(
    weights: &SparseWeights<T>,
    maps: &[FeatureMap<T>],
    mask: &ViewMask,
) -> Result<(FeatureVolume<T>, ArgmaxIndex<T>)> {
    let channels = check_pool_inputs(weights, maps, mask)?;
    let [nx, ny, nz] = weights.grid.dims;
    let cells = nx * ny * nz;

    // Per-view candidate lists: cross-section entries grouped per cell column
    // (in x_bin order) and z entries grouped per slice (in y_bin order).
    let mut xy_lists: Vec<Vec<Vec<(u32, T)>>> = Vec::with_capacity(weights.n_views());
    let mut z_lists: Vec<Vec<Vec<(u32, T)>>> = Vec::with_capacity(weights.n_views());
    for vw in &weights.views {
        let mut xy = vec![Vec::new(); nx * ny];
        for e in &vw.xsec {
            xy[e.ix as usize * ny + e.iy as usize].push((e.x_bin, e.w));
        }
        let mut zl = vec![Vec::new(); nz];
        for e in &vw.zmap {
            zl[e.iz as usize].push((e.y_bin, e.w));
        }
        xy_lists.push(xy);
        z_lists.push(zl);
    }

    let mut out = Tensor::zeros(&[channels, nx, ny, nz]);
    let mut entries: Vec<Option<ArgmaxRef<T>>> = vec![None; channels * cells];
    out.data_mut()
        .par_chunks_mut(cells)
        .zip(entries.par_chunks_mut(cells))
        .enumerate()
        .for_each(|(ch, (out_c, am_c))| {
            for col in 0..nx * ny {
                for iz in 0..nz {
                    let cell = col * nz + iz;
                    let mut best: Option<(T, ArgmaxRef<T>)> = None;
                    for (v, map) in maps.iter().enumerate() {
                        if !mask.is_active(v) {
                            continue;
                        }
                        let xy = &xy_lists[v][col];
                        if xy.is_empty() {
                            continue;
                        }
                        let zl = &z_lists[v][iz];
                        if zl.is_empty() {
                            continue;
                        }
                        let (h, wbins) = (map.tensor.dims()[1], map.tensor.dims()[2]);
                        let plane = &map.tensor.data()[ch * h * wbins..(ch + 1) * h * wbins];
                        for &(x_bin, wxy) in xy {
                            for &(y_bin, wz) in zl {
                                let w = wxy * wz;
                                let val = w * plane[y_bin as usize * wbins + x_bin as usize];
                                if best.as_ref().is_none_or(|(b, _)| val > *b) {
                                    best = Some((
                                        val,
                                        ArgmaxRef { view: v as u32, x_bin, y_bin, w },
                                    ));
                                }
                            }
                        }
                    }
                    if let Some((val, r)) = best {
                        out_c[cell] = val;
                        am_c[cell] = Some(r);
                    }
                }
            }
        });

    let volume = FeatureVolume::new(out, weights.grid.clone())?;
    Ok((volume, ArgmaxIndex { dims: [channels, nx, ny, nz], entries }))
}

/// Routes a volume-shaped gradient back through the recorded argmax: each
/// (channel, cell) gradient flows to its winning feature position, scaled by
/// the winning weight. Inactive views get zero tensors.
pub fn pool_max_backward<T: Real>(
    weights: &SparseWeights<T>,
    argmax: &ArgmaxIndex<T>,
    grad: &FeatureVolume<T>,
    mask: &ViewMask,
    map_shapes: &[[usize; 3]],
) -> Result<Vec<Tensor<T>>> {
    let [nx, ny, nz] = weights.grid.dims;
    let cells = nx * ny * nz;
    let channels = grad.channels();
    if argmax.dims != [channels, nx, ny, nz] {
        return Err(CoreError::Shape(format!(
            "argmax dims {:?} do not match gradient [{channels}, {nx}, {ny}, {nz}]",
            argmax.dims
        )));
    }
    if argmax.entries.len() != channels * cells || grad.grid.dims != weights.grid.dims {
        return Err(CoreError::Shape("argmax is stale for this gradient and weights".into()));
    }
    if map_shapes.len() != weights.n_views() || mask.len() != weights.n_views() {
        return Err(CoreError::Shape(format!(
            "weights cover {} views, got {} map shapes and a mask of {}",
            weights.n_views(),
            map_shapes.len(),
            mask.len()
        )));
    }

    let mut out: Vec<Tensor<T>> =
        map_shapes.iter().map(|&[c, h, w]| Tensor::zeros(&[c, h, w])).collect();
    for (i, entry) in argmax.entries.iter().enumerate() {
        let Some(r) = entry else { continue };
        let v = r.view as usize;
        if v >= out.len() || !mask.is_active(v) {
            return Err(CoreError::Shape(format!(
                "argmax references view {v}, which is not active in this mask"
            )));
        }
        let ch = i / cells;
        let [c, h, w] = map_shapes[v];
        if ch >= c || r.y_bin as usize >= h || r.x_bin as usize >= w {
            return Err(CoreError::Shape(format!(
                "argmax entry (view {v}, bin {}, row {}) is stale for map shape [{c}, {h}, {w}]",
                r.x_bin, r.y_bin
            )));
        }
        let off = (ch * h + r.y_bin as usize) * w + r.x_bin as usize;
        out[v].data_mut()[off] += r.w * grad.tensor.data()[i];
    }
    Ok(out)
}
