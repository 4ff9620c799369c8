//! Weighted-average pooling and its exact adjoint.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;

use super::{check_pool_inputs, coverage, FeatureMap, FeatureVolume, SparseWeights, ViewMask};

#[derive(Debug, Clone, Copy, Default)]
pub struct AvgOptions {
    /// Divide each cell by the weight mass that actually reached it instead
    /// of the active view count. Cells with no mass stay zero either way.
    pub renormalize_partial: bool,
}

/// Averages the weighted per-view features into the volume: per active view
/// the beam features are scattered with their weights, then the sum is
/// divided by the number of active views.
pub fn pool_avg<T: Real>(
    weights: &SparseWeights<T>,
    maps: &[FeatureMap<T>],
    mask: &ViewMask,
) -> Result<FeatureVolume<T>> {
    pool_avg_opts(weights, maps, mask, &AvgOptions::default())
}

pub fn pool_avg_opts<T: Real>(
    weights: &SparseWeights<T>,
    maps: &[FeatureMap<T>],
    mask: &ViewMask,
    opts: &AvgOptions,
) -> Result<FeatureVolume<T>> {
    let channels = check_pool_inputs(weights, maps, mask)?;
    let [nx, ny, nz] = weights.grid.dims;
    let cells = nx * ny * nz;
    let norm = normalizer(weights, mask, opts);

    let mut out = Tensor::zeros(&[channels, nx, ny, nz]);
    out.data_mut()
        .par_chunks_mut(cells)
        .enumerate()
        .for_each(|(ch, out_c)| {
            for (v, vw) in weights.views.iter().enumerate() {
                if !mask.is_active(v) {
                    continue;
                }
                let map = &maps[v].tensor;
                let (h, wbins) = (map.dims()[1], map.dims()[2]);
                let plane = &map.data()[ch * h * wbins..(ch + 1) * h * wbins];
                let bins = vw.n_x_bins as usize;

                // Belt stage: g[b, iz] = sum_y w_z(y, iz) * f[y, b].
                let mut g = vec![T::zero(); bins * nz];
                for e in &vw.zmap {
                    let row = &plane[e.y_bin as usize * wbins..e.y_bin as usize * wbins + bins];
                    let iz = e.iz as usize;
                    let wz = e.w;
                    for (b, &f) in row.iter().enumerate() {
                        g[b * nz + iz] += wz * f;
                    }
                }
                // Cross-section stage: out[ix, iy, iz] += w_xy * g[b, iz].
                for e in &vw.xsec {
                    let src = &g[e.x_bin as usize * nz..e.x_bin as usize * nz + nz];
                    let dst_base = (e.ix as usize * ny + e.iy as usize) * nz;
                    let dst = &mut out_c[dst_base..dst_base + nz];
                    let wxy = e.w;
                    for (o, &s) in dst.iter_mut().zip(src) {
                        *o += wxy * s;
                    }
                }
            }
            match &norm {
                Normalizer::Uniform(inv) => {
                    for o in out_c.iter_mut() {
                        *o *= *inv;
                    }
                }
                Normalizer::PerCell(inv) => {
                    for (o, &i) in out_c.iter_mut().zip(inv.iter()) {
                        *o *= i;
                    }
                }
            }
        });
    FeatureVolume::new(out, weights.grid.clone())
}

/// Adjoint of [`pool_avg_opts`]: routes a volume-shaped gradient back to one
/// gradient tensor per view. Inactive views get zero tensors of their map
/// shape. `map_shapes` are the [C, H, W] shapes of the forward inputs.
pub fn pool_avg_backward<T: Real>(
    weights: &SparseWeights<T>,
    grad: &FeatureVolume<T>,
    mask: &ViewMask,
    map_shapes: &[[usize; 3]],
) -> Result<Vec<Tensor<T>>> {
    pool_avg_backward_opts(weights, grad, mask, map_shapes, &AvgOptions::default())
}

pub fn pool_avg_backward_opts<T: Real>(
    weights: &SparseWeights<T>,
    grad: &FeatureVolume<T>,
    mask: &ViewMask,
    map_shapes: &[[usize; 3]],
    opts: &AvgOptions,
) -> Result<Vec<Tensor<T>>> {
    check_backward_shapes(weights, grad, mask, map_shapes)?;
    let [nx, ny, nz] = weights.grid.dims;
    let cells = nx * ny * nz;
    let norm = normalizer(weights, mask, opts);

    // Adjoint of the normalization first: scale the incoming gradient.
    let scaled: Vec<T> = match &norm {
        Normalizer::Uniform(inv) => grad.tensor.data().iter().map(|&v| v * *inv).collect(),
        Normalizer::PerCell(inv) => grad
            .tensor
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| v * inv[i % cells])
            .collect(),
    };

    let mut out = Vec::with_capacity(weights.n_views());
    for (v, vw) in weights.views.iter().enumerate() {
        let [c, h, w] = map_shapes[v];
        let mut gm = Tensor::zeros(&[c, h, w]);
        if mask.is_active(v) {
            let bins = vw.n_x_bins as usize;
            gm.data_mut()
                .par_chunks_mut(h * w)
                .enumerate()
                .for_each(|(ch, gm_c)| {
                    let grad_c = &scaled[ch * cells..(ch + 1) * cells];
                    // Transposed cross-section stage: gather into g[b, iz].
                    let mut g = vec![T::zero(); bins * nz];
                    for e in &vw.xsec {
                        let src_base = (e.ix as usize * ny + e.iy as usize) * nz;
                        let src = &grad_c[src_base..src_base + nz];
                        let dst = &mut g[e.x_bin as usize * nz..e.x_bin as usize * nz + nz];
                        let wxy = e.w;
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d += wxy * s;
                        }
                    }
                    // Transposed belt stage: scatter rows.
                    for e in &vw.zmap {
                        let iz = e.iz as usize;
                        let wz = e.w;
                        let row = &mut gm_c[e.y_bin as usize * w..e.y_bin as usize * w + bins];
                        for (b, r) in row.iter_mut().enumerate() {
                            *r += wz * g[b * nz + iz];
                        }
                    }
                });
        }
        out.push(gm);
    }
    Ok(out)
}

enum Normalizer<T> {
    Uniform(T),
    PerCell(Vec<T>),
}

fn normalizer<T: Real>(
    weights: &SparseWeights<T>,
    mask: &ViewMask,
    opts: &AvgOptions,
) -> Normalizer<T> {
    if opts.renormalize_partial {
        let cov = coverage(weights, mask);
        Normalizer::PerCell(
            cov.into_iter()
                .map(|c| if c > T::zero() { T::one() / c } else { T::zero() })
                .collect(),
        )
    } else {
        Normalizer::Uniform(T::one() / T::from_usize(mask.n_active()).unwrap())
    }
}

fn check_backward_shapes<T: Real>(
    weights: &SparseWeights<T>,
    grad: &FeatureVolume<T>,
    mask: &ViewMask,
    map_shapes: &[[usize; 3]],
) -> Result<()> {
    if map_shapes.len() != weights.n_views() || mask.len() != weights.n_views() {
        return Err(CoreError::Shape(format!(
            "weights cover {} views, got {} map shapes and a mask of {}",
            weights.n_views(),
            map_shapes.len(),
            mask.len()
        )));
    }
    if grad.grid.dims != weights.grid.dims {
        return Err(CoreError::Shape(format!(
            "gradient grid {:?} does not match weights grid {:?}",
            grad.grid.dims, weights.grid.dims
        )));
    }
    let channels = grad.channels();
    for (v, &[c, h, w]) in map_shapes.iter().enumerate() {
        if !mask.is_active(v) {
            continue;
        }
        let vw = &weights.views[v];
        if c != channels || w != vw.n_x_bins as usize || h < vw.min_y_bins as usize {
            return Err(CoreError::Shape(format!(
                "view {v}: map shape [{c}, {h}, {w}] incompatible with gradient \
                 channels {channels} and weights ({} bins, min {} rows)",
                vw.n_x_bins, vw.min_y_bins
            )));
        }
    }
    Ok(())
}
