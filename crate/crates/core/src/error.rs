//! Error type shared by the core modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// A geometry invariant was violated at construction time.
    #[error("geometry: {0}")]
    Geometry(String),

    /// A parameter lies outside its documented domain.
    #[error("domain: {0}")]
    Domain(String),

    /// A geometric input collapsed to zero measure where a positive one is required.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// A ray misses the detector segment or starts at the source.
    #[error("projection: {0}")]
    Projection(String),

    /// Tensor or weight dimensions do not match.
    #[error("shape: {0}")]
    Shape(String),

    /// Fewer than two annotated views with distinct sources.
    #[error("insufficient views: {have} usable, need at least 2")]
    InsufficientViews { have: usize },

    /// The per-view wedges have empty intersection.
    #[error("inconsistent annotation: {0}")]
    InconsistentAnnotation(String),

    #[error("clustering: {0}")]
    Cluster(String),

    #[error("synthesis: {0}")]
    Synth(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
