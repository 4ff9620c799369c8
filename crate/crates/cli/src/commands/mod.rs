pub mod anchor_quality;
pub mod bench;
pub mod cluster_anchors;
pub mod compute_weights;
pub mod eval;
pub mod gen3d;
pub mod iou_convert;
pub mod nms3d;
pub mod pool;
pub mod reproject;
pub mod roi_pool;
pub mod synth_gen;
