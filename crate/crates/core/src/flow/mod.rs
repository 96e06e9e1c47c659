//! Conditional flow matching across the four state modalities: Euclidean
//! vectors, torus angles, rotations and categorical states.

pub mod discrete;
pub mod linear;
pub mod so3;

use crate::geom3d::GeomError;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    /// Conditional paths and rates are only defined for t strictly below 1
    /// (the orientation path additionally caps t at 1 - 1e-4).
    #[error("time {t} is too close to the terminal endpoint")]
    TEndpoint { t: f64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
    /// Current state has zero probability under the conditional path.
    #[error("state {state} has zero probability under the conditional path")]
    ZeroSupport { state: usize },
    /// The mask symbol cannot appear as clean data.
    #[error("mask symbol used as data endpoint")]
    MaskAsData,
    #[error("state-space size mismatch: {a} vs {b}")]
    StateSpaceMismatch { a: usize, b: usize },
}

/// Which norm a continuous regression loss applies to its residual.
///
/// The squared form is the default used for training; the unsquared 2-norm
/// variant is kept selectable because both appear in the literature for the
/// biochemical-feature term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossNorm {
    #[default]
    Squared,
    Unsquared,
}
