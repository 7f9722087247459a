//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image has no foreground pixels")]
    EmptyShape,

    #[error("shape vanished during cleaning")]
    ShapeVanished,

    #[error("shape has {0} foreground components, expected exactly 1")]
    MultipleComponents(usize),

    #[error("shape has {0} hole(s), expected a simply connected region")]
    HasHoles(usize),

    #[error("degenerate contour: enclosed area {0} px^2")]
    DegenerateContour(f64),

    #[error("no interior medial vertices; boundary sampling is too coarse for this shape")]
    NoMedialVertices,

    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("non-finite coordinate in input")]
    NonFinite,

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("empty point set given to {0}")]
    EmptyPointSet(&'static str),

    #[error("sample step must be positive, got {0}")]
    BadSampleStep(f64),

    #[error("prune threshold must be positive, got {0}")]
    BadThreshold(f64),

    #[error("resample factor must be positive, got {0}")]
    BadResampleFactor(f64),

    #[error("skeleton graph contains a cycle")]
    CyclicSkeleton,

    #[error("skeleton graph is disconnected ({0} components)")]
    DisconnectedSkeleton(usize),

    #[error("edge ({0}, {1}) is out of range or a self-loop")]
    BadEdge(usize, usize),

    #[error("negative medial radius {0}")]
    NegativeRadius(f64),

    #[error("branch chain has {0} sample(s), need at least 2")]
    ChainTooShort(usize),

    #[error("skeleton node ({x:.2}, {y:.2}) falls outside the {width}x{height} canvas")]
    NodeOutsideCanvas { x: f64, y: f64, width: u32, height: u32 },

    #[error("skeleton pixel ({0}, {1}) has no shape foreground nearby")]
    SkeletonOutsideShape(i64, i64),

    #[error("split ratios {0:?} do not sum to 1")]
    BadSplitRatios([f64; 3]),

    #[error("class(es) with fewer than 3 shapes cannot be split: {0}")]
    ClassTooSmall(String),

    #[error("{path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
