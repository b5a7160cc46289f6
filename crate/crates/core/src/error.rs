use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed PGM input; `offset` is the byte position where parsing failed.
    #[error("PGM parse error at byte {offset}: {message}")]
    Pgm { offset: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frame is {width}x{height}, need at least {min_width}x{min_height}")]
    FrameTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },

    #[error("frame has zero width or height")]
    EmptyFrame,

    #[error("contour has {len} points, need at least {min}")]
    ContourTooShort { len: usize, min: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("inconsistent edge graph: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn pgm(offset: usize, message: impl Into<String>) -> Self {
        Error::Pgm {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
