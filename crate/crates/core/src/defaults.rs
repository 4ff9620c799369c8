//! Every numeric default in one place.
//!
//! The CLI reads its flag defaults from here and the built-in scanner below is
//! what `synth-gen` uses when no geometry file is given. Distances are in
//! millimetres, image coordinates in pixels.

use crate::geometry::{pt, Rect, ScannerGeometry, ViewGeometry, VoxelGrid};

/// Voxel grid resolution of the reconstruction volume.
pub const GRID_DIMS: [usize; 3] = [96, 96, 96];
/// Minimum corner of the default grid; chosen so the cross-section sits
/// strictly inside the default tunnel.
pub const GRID_ORIGIN: [f64; 3] = [-288.0, 18.0, 0.0];
/// Cell edge lengths of the default grid.
pub const GRID_CELL_SIZE: [f64; 3] = [6.0, 4.0, 6.0];

/// Feature map bin size: one feature column/row per 16 image pixels.
pub const BIN_PX: u32 = 16;
/// Beam-cell weights at or below this are dropped from the sparse structure.
pub const EPSILON_W: f64 = 1e-12;

/// 2D evaluation IoU threshold (the usual detection value).
pub const IOU_THRESH_2D: f64 = 0.5;
/// 3D evaluation IoU threshold: the image of 0.5 under
/// [`crate::boxes::convert_threshold_2d_to_3d`], rounded to three digits.
pub const IOU_THRESH_3D: f64 = 0.374;
/// NMS threshold for 3D detections, kept equal to the 3D match threshold.
pub const NMS_IOU_3D: f64 = 0.374;

/// RoI pooling output resolution.
pub const ROI_OUT_DIMS: [usize; 3] = [7, 7, 7];

/// Anchor clustering defaults.
pub const ANCHOR_K: usize = 10;
pub const KMEANS_RESTARTS: u32 = 10;
pub const KMEANS_MAX_ITERS: u32 = 200;
/// Stop a k-means run when the mean Jaccard distance improves by less than this.
pub const KMEANS_TOL: f64 = 1e-12;
/// Scales (cube edge, mm) for the 21-anchor comparison set.
pub const ANCHOR_SCALES: [f64; 3] = [60.0, 120.0, 240.0];

/// Synthetic scene defaults.
pub const SYNTH_N_OBJECTS: usize = 4;
pub const SYNTH_SIZE_RANGE: [(f64, f64); 3] = [(40.0, 200.0), (40.0, 200.0), (40.0, 200.0)];
pub const SYNTH_DENSITY_RANGE: (f64, f64) = (0.2, 1.0);
pub const SYNTH_CLASSES: [&str; 3] = ["bottle", "clock", "phone"];

/// Belt travel per image row for the default scanner.
pub const BELT_MM_PER_PX: f64 = 1.5;

/// Built-in four-view scanner: three sources under the belt, one at the side.
///
/// The tunnel is 620 x 420 mm. Every detector spans the full tunnel as seen
/// from its source, so any point inside the tunnel projects onto every view.
pub fn default_geometry() -> ScannerGeometry<f64> {
    let tunnel = Rect::new(pt(-310.0, 0.0), pt(310.0, 420.0)).expect("default tunnel");
    let views = vec![
        ViewGeometry::new(
            "bottom-left",
            pt(-200.0, -700.0),
            [pt(-440.0, 800.0), pt(900.0, 800.0)],
            384,
        )
        .expect("default view"),
        ViewGeometry::new(
            "bottom-center",
            pt(0.0, -700.0),
            [pt(-670.0, 800.0), pt(670.0, 800.0)],
            384,
        )
        .expect("default view"),
        ViewGeometry::new(
            "bottom-right",
            pt(200.0, -700.0),
            [pt(-900.0, 800.0), pt(440.0, 800.0)],
            352,
        )
        .expect("default view"),
        ViewGeometry::new(
            "side",
            pt(-1200.0, 210.0),
            [pt(900.0, -300.0), pt(900.0, 720.0)],
            416,
        )
        .expect("default view"),
    ];
    ScannerGeometry::new(views, tunnel, BELT_MM_PER_PX).expect("default scanner")
}

pub fn default_grid() -> VoxelGrid<f64> {
    VoxelGrid::new(GRID_ORIGIN, GRID_CELL_SIZE, GRID_DIMS).expect("default grid")
}
