//! Linear-interpolant flows for Euclidean vectors, torus angles and soft
//! residue types.
//!
//! The conditional path is the straight line `x_t = t·x1 + (1-t)·x0` with
//! target field `x1 - x0`; an Euler step of size `1/N` along the exact field
//! reproduces the interpolant without discretization error.

use super::{FlowError, LossNorm};
use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

/// One draw from the linear conditional path.
#[derive(Debug, Clone)]
pub struct LinearPathSample {
    pub x0: Array1<f64>,
    pub x1: Array1<f64>,
    pub t: f64,
    pub xt: Array1<f64>,
    pub target_field: Array1<f64>,
}

/// An angle on the flat torus, stored in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusAngle(f64);

impl TorusAngle {
    /// Wraps any real angle into `[0, 2π)`.
    pub fn new(radians: f64) -> Self {
        let mut v = radians.rem_euclid(TAU);
        // rem_euclid can return exactly TAU when the input is a tiny
        // negative number; fold that back onto zero.
        if v >= TAU {
            v -= TAU;
        }
        TorusAngle(v)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Soft one-hot encoding of a residue type: 20 logits whose argmax is the
/// encoded class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftType {
    pub logits: [f64; 20],
}

/// Scale of the soft one-hot encoding; zero-mean so the encoding carries no
/// translation component relative to the Gaussian prior.
pub const SOFT_ONE_HOT_SCALE: f64 = 5.0;

impl SoftType {
    /// Encodes class `a` as `scale · (e_a - 1/20)`.
    pub fn encode(a: usize) -> Self {
        assert!(a < 20, "residue type index out of range: {a}");
        let mut logits = [-SOFT_ONE_HOT_SCALE / 20.0; 20];
        logits[a] += SOFT_ONE_HOT_SCALE;
        SoftType { logits }
    }

    /// Argmax decode; exact ties resolve to the lowest index.
    pub fn decode(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.logits.iter().enumerate() {
            if v > self.logits[best] {
                best = i;
            }
        }
        best
    }

    pub fn as_array(&self) -> Array1<f64> {
        Array1::from_iter(self.logits)
    }

    pub fn from_array(a: &Array1<f64>) -> Result<Self, FlowError> {
        if a.len() != 20 {
            return Err(FlowError::DimMismatch { expected: 20, got: a.len() });
        }
        let mut logits = [0.0; 20];
        for (dst, src) in logits.iter_mut().zip(a.iter()) {
            *dst = *src;
        }
        Ok(SoftType { logits })
    }
}

/// Samples the linear conditional path at time `t`.
pub fn linear_path(
    x0: &Array1<f64>,
    x1: &Array1<f64>,
    t: f64,
) -> Result<LinearPathSample, FlowError> {
    if x0.len() != x1.len() {
        return Err(FlowError::DimMismatch { expected: x0.len(), got: x1.len() });
    }
    debug_assert!((0.0..=1.0).contains(&t), "path time {t} outside [0,1]");
    let xt = x1 * t + x0 * (1.0 - t);
    let target_field = x1 - x0;
    Ok(LinearPathSample { x0: x0.clone(), x1: x1.clone(), t, xt, target_field })
}

/// Torus interpolation `[t·χ1 + (1-t)·χ0] mod 2π`.
///
/// Deliberately the literal convex combination of the stored representatives,
/// not the shortest-arc geodesic: a pair like (350°, 10°) interpolates through
/// 180°, matching the published construction for internal torsion flows.
pub fn torus_path(c0: TorusAngle, c1: TorusAngle, t: f64) -> TorusAngle {
    TorusAngle::new(t * c1.value() + (1.0 - t) * c0.value())
}

/// Target field for the torus flow: the difference of the stored
/// representatives, without re-wrapping.
pub fn torus_target(c0: TorusAngle, c1: TorusAngle) -> f64 {
    c1.value() - c0.value()
}

/// Flow-matching regression loss for a continuous feature channel:
/// the residual `pred - (x1 - x0)` under the selected norm.
pub fn continuous_feature_loss(
    pred: &Array1<f64>,
    x0: &Array1<f64>,
    x1: &Array1<f64>,
    norm: LossNorm,
) -> Result<f64, FlowError> {
    if x0.len() != x1.len() {
        return Err(FlowError::DimMismatch { expected: x0.len(), got: x1.len() });
    }
    if pred.len() != x0.len() {
        return Err(FlowError::DimMismatch { expected: x0.len(), got: pred.len() });
    }
    let ss: f64 = pred
        .iter()
        .zip(x0.iter().zip(x1.iter()))
        .map(|(p, (a, b))| {
            let r = p - (b - a);
            r * r
        })
        .sum();
    Ok(match norm {
        LossNorm::Squared => ss,
        LossNorm::Unsquared => ss.sqrt(),
    })
}

/// One Euler step `x + step·field`.
pub fn euler_step(
    xt: &Array1<f64>,
    field: &Array1<f64>,
    step: f64,
) -> Result<Array1<f64>, FlowError> {
    if xt.len() != field.len() {
        return Err(FlowError::DimMismatch { expected: xt.len(), got: field.len() });
    }
    Ok(xt + &(field * step))
}

/// Standard Gaussian prior draw of dimension `n`.
pub fn sample_gaussian_prior<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}
