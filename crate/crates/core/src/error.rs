use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("buffer length {actual} does not match {width}x{height}x{channels}")]
    BufferSize {
        width: usize,
        height: usize,
        channels: usize,
        actual: usize,
    },
    #[error("channel value {value} at index {index} is outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },
    #[error("position ({row}, {col}) is outside a {width}x{height} plane")]
    OutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },
    #[error("window size {0} must be odd")]
    EvenWindow(usize),
    #[error("window size {size} exceeds image size {width}x{height}")]
    WindowTooLarge {
        size: usize,
        width: usize,
        height: usize,
    },
    #[error("image is {width}x{height}; at least {min}px on each side is required")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("need at least {needed} keypoints on each side, got {reference} and {target}")]
    TooFewKeypoints {
        needed: usize,
        reference: usize,
        target: usize,
    },
    #[error("insufficient matches: {found} found, at least {needed} required")]
    InsufficientMatches { found: usize, needed: usize },
    #[error("no affine model with at least 3 inliers was found")]
    NoConsensus,
    #[error("affine transform is degenerate (|det| = {0:e})")]
    DegenerateTransform(f64),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
