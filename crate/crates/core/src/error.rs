use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("normal matrix is not positive definite (pivot {pivot} = {value:e})")]
    SingularSystem { pivot: usize, value: f64 },
    #[error("kernel size {h}x{w} must be odd and at least 3")]
    EvenKernel { h: usize, w: usize },
    #[error("too few samples: need at least {needed}, have {available}")]
    TooFewSamples { needed: usize, available: usize },
    #[error("calibration region {rows}x{cols} too small for kernel (need {need_rows}x{need_cols})")]
    AcsTooSmall {
        rows: usize,
        cols: usize,
        need_rows: usize,
        need_cols: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite loss at epoch {epoch}, step {step}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        detail: String,
    },
    #[error("bad magic in {path:?}: expected NDA1")]
    BadMagic { path: PathBuf },
    #[error("truncated payload in {path:?}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("unknown dtype code {code} in {path:?}")]
    UnknownDtype { path: PathBuf, code: u8 },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("coil sensitivities vanish on all {pixels} pixels")]
    ZeroSensitivity { pixels: usize },
    #[error("motion-state bin {bin} received no samples")]
    EmptyBin { bin: usize },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
