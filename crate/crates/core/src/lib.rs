//! Geometric and numerical core for multi-view X-ray object detection.
//!
//! The crate models a fan-beam scanner whose views share a belt axis, and
//! provides everything around a detector backbone that is pure geometry and
//! numerics: sparse beam-to-voxel weight construction, average and max
//! feature pooling into a 3D volume with exact backward passes, 3D RoI
//! pooling, anchor clustering, lifting of per-view 2D annotations to 3D
//! boxes and their reprojection, detection evaluation, and a synthetic
//! scanner for end-to-end checks.
//!
//! All geometric math is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases at the crate root pin the double-precision instantiation used by
//! the CLI pipeline and the on-disk formats.

pub mod anchors;
pub mod annotate3d;
pub mod boxes;
pub mod defaults;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod polygon;
pub mod pooling;
pub mod scalar;
pub mod synth;
pub mod tensor;

pub use error::{CoreError, Result};
pub use scalar::Real;

pub type Point2 = geometry::Point2<f64>;
pub type Rect = geometry::Rect<f64>;
pub type ViewGeometry = geometry::ViewGeometry<f64>;
pub type ScannerGeometry = geometry::ScannerGeometry<f64>;
pub type VoxelGrid = geometry::VoxelGrid<f64>;
pub type ConvexPolygon = polygon::ConvexPolygon<f64>;
pub type Box2 = boxes::Box2<f64>;
pub type Box3 = boxes::Box3<f64>;
pub type Regression6 = boxes::Regression6<f64>;
pub type AnchorSet = anchors::AnchorSet<f64>;
pub type SparseWeights = pooling::SparseWeights<f64>;
pub type FeatureMap = pooling::FeatureMap<f64>;
pub type FeatureVolume = pooling::FeatureVolume<f64>;
pub type Tensor = tensor::Tensor<f64>;
/// Feature tensors are exchanged on disk in single precision.
pub type Tensor32 = tensor::Tensor<f32>;
