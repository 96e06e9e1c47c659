//! Minimal feed-forward regressors with exact reverse-mode gradients.
//!
//! Everything here is deliberately small and CPU-bound: dense layers with
//! ReLU or SiLU, hand-written backprop, sinusoidal time embeddings and a
//! learned condition-embedding table whose null row is pinned to zero.

pub mod adam;
pub mod checkpoint;
pub mod loss;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("batch contains no samples in any modality")]
    EmptyBatch,
    #[error(transparent)]
    Flow(#[from] crate::flow::FlowError),
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    ReLU,
    SiLU,
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::ReLU => x.max(0.0),
            Activation::SiLU => x * sigmoid(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::SiLU => {
                let s = sigmoid(x);
                s * (1.0 + x * (1.0 - s))
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Dense multi-layer perceptron: affine + activation on every layer except
/// the last, which stays affine.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub sizes: Vec<usize>,
    /// `weights[l]` has shape `(sizes[l+1], sizes[l])`.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub activation: Activation,
}

impl MlpParams {
    /// Xavier-uniform initialization, biases at zero.
    pub fn xavier<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut w = Array2::zeros((fan_out, fan_in));
            for r in 0..fan_out {
                for c in 0..fan_in {
                    w[(r, c)] = rng.gen_range(-limit..limit);
                }
            }
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }
        MlpParams { sizes: sizes.to_vec(), weights, biases, activation }
    }

    /// Builds from explicit tensors, validating the shape chain.
    pub fn from_parts(
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        activation: Activation,
    ) -> Self {
        assert!(!weights.is_empty() && weights.len() == biases.len());
        let mut sizes = vec![weights[0].ncols()];
        for (w, b) in weights.iter().zip(&biases) {
            assert_eq!(w.nrows(), b.len(), "bias length must match weight rows");
            assert_eq!(w.ncols(), *sizes.last().unwrap(), "shape chain broken");
            sizes.push(w.nrows());
        }
        MlpParams { sizes, weights, biases, activation }
    }

    /// Zeroes the final affine layer so a fresh network is the constant
    /// zero map, which keeps untrained vector fields at the prior.
    pub fn zero_final_layer(mut self) -> Self {
        let last = self.weights.len() - 1;
        self.weights[last].fill(0.0);
        self.biases[last].fill(0.0);
        self
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn forward(&self, input: &Array1<f64>) -> Result<Array1<f64>, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::ShapeMismatch { expected: self.input_dim(), got: input.len() });
        }
        let mut a = input.clone();
        let last = self.weights.len() - 1;
        for l in 0..=last {
            let mut z = self.weights[l].dot(&a) + &self.biases[l];
            if l < last {
                z.mapv_inplace(|x| self.activation.apply(x));
            }
            a = z;
        }
        Ok(a)
    }

    /// Exact reverse-mode gradients of `upstream · forward(input)`.
    /// Returns parameter gradients and the gradient with respect to the
    /// input vector.
    pub fn backward(
        &self,
        input: &Array1<f64>,
        upstream: &Array1<f64>,
    ) -> Result<(MlpGrads, Array1<f64>), NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::ShapeMismatch { expected: self.input_dim(), got: input.len() });
        }
        if upstream.len() != self.output_dim() {
            return Err(NnError::ShapeMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let last = self.weights.len() - 1;
        // Forward pass keeping pre-activations and activations.
        let mut acts: Vec<Array1<f64>> = vec![input.clone()];
        let mut pre: Vec<Array1<f64>> = Vec::new();
        for l in 0..=last {
            let z = self.weights[l].dot(&acts[l]) + &self.biases[l];
            pre.push(z.clone());
            let a = if l < last { z.mapv(|x| self.activation.apply(x)) } else { z };
            acts.push(a);
        }
        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = upstream.clone();
        for l in (0..=last).rev() {
            let dw = delta
                .view()
                .insert_axis(Axis(1))
                .dot(&acts[l].view().insert_axis(Axis(0)));
            grads.dw[l] = dw;
            grads.db[l] = delta.clone();
            let mut prev = self.weights[l].t().dot(&delta);
            if l > 0 {
                prev.zip_mut_with(&pre[l - 1], |g, &z| *g *= self.activation.derivative(z));
            }
            delta = prev;
        }
        Ok((grads, delta))
    }
}

/// Gradients shaped like an [`MlpParams`].
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub dw: Vec<Array2<f64>>,
    pub db: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            dw: params.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            db: params.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (a, b) in self.dw.iter_mut().zip(&other.dw) {
            *a += b;
        }
        for (a, b) in self.db.iter_mut().zip(&other.db) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.dw.iter_mut() {
            *a *= s;
        }
        for a in self.db.iter_mut() {
            *a *= s;
        }
    }
}

/// Sinusoidal time embedding dimension.
pub const T_EMBED_DIM: usize = 32;

/// Sixteen log-spaced frequencies from 1 to 1000, sin/cos pairs.
pub fn t_embed(t: f64) -> Array1<f64> {
    let half = T_EMBED_DIM / 2;
    let mut out = Array1::zeros(T_EMBED_DIM);
    for k in 0..half {
        let omega = 1000.0_f64.powf(k as f64 / (half - 1) as f64);
        out[2 * k] = (omega * t).sin();
        out[2 * k + 1] = (omega * t).cos();
    }
    out
}

/// Condition-embedding width.
pub const COND_DIM: usize = 8;
/// Number of condition indices including the reserved null slot.
pub const COND_VOCAB: usize = 28;

/// Conditioning label for classifier-free guidance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionLabel {
    Null,
    Cyclic,
    Disulfide,
    /// Target length in residues, bucketed.
    Length(usize),
}

impl ConditionLabel {
    /// Embedding index; 0 is the reserved null slot.
    pub fn index(&self) -> usize {
        match self {
            ConditionLabel::Null => 0,
            ConditionLabel::Cyclic => 1,
            ConditionLabel::Disulfide => 2,
            ConditionLabel::Length(n) => {
                assert!(*n >= 1, "length condition must be positive");
                3 + (n - 1).min(COND_VOCAB - 4)
            }
        }
    }
}

/// Learned condition embeddings. The null row is not stored: lookups of
/// index 0 return zeros, and nothing ever trains them, so dropping the
/// condition and conditioning on null are exactly the same computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CondEmbed {
    /// Rows for indices `1..COND_VOCAB`, stored at `index - 1`.
    pub table: Array2<f64>,
}

impl CondEmbed {
    /// All rows start at zero so an untrained conditional model coincides
    /// with the unconditional one.
    pub fn new() -> Self {
        CondEmbed { table: Array2::zeros((COND_VOCAB - 1, COND_DIM)) }
    }

    pub fn lookup(&self, label: ConditionLabel) -> Array1<f64> {
        match label.index() {
            0 => Array1::zeros(COND_DIM),
            i => self.table.row(i - 1).to_owned(),
        }
    }
}

impl Default for CondEmbed {
    fn default() -> Self {
        Self::new()
    }
}

/// A conditional vector-field regressor: state features, time embedding and
/// condition embedding concatenated into one MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    pub mlp: MlpParams,
    pub cond: CondEmbed,
}

/// Gradients for a [`FieldModel`]: MLP tensors plus the full embedding
/// table (dense, zero outside the rows a batch touched).
#[derive(Debug, Clone)]
pub struct FieldGrads {
    pub mlp: MlpGrads,
    pub cond: Array2<f64>,
}

impl FieldGrads {
    pub fn zeros_like(model: &FieldModel) -> Self {
        FieldGrads {
            mlp: MlpGrads::zeros_like(&model.mlp),
            cond: Array2::zeros(model.cond.table.raw_dim()),
        }
    }

    pub fn add_assign(&mut self, other: &FieldGrads) {
        self.mlp.add_assign(&other.mlp);
        self.cond += &other.cond;
    }

    pub fn scale(&mut self, s: f64) {
        self.mlp.scale(s);
        self.cond *= s;
    }
}

impl FieldModel {
    /// A fresh model: Xavier hidden layers, zero final layer, zero
    /// condition table.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        hidden: &[usize],
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![state_dim + T_EMBED_DIM + COND_DIM];
        sizes.extend_from_slice(hidden);
        sizes.push(out_dim);
        FieldModel {
            mlp: MlpParams::xavier(&sizes, activation, rng).zero_final_layer(),
            cond: CondEmbed::new(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.mlp.input_dim() - T_EMBED_DIM - COND_DIM
    }

    fn assemble(&self, state: &Array1<f64>, t: f64, label: ConditionLabel) -> Array1<f64> {
        let mut input = Array1::zeros(self.mlp.input_dim());
        let s = state.len();
        input.slice_mut(ndarray::s![..s]).assign(state);
        input.slice_mut(ndarray::s![s..s + T_EMBED_DIM]).assign(&t_embed(t));
        input
            .slice_mut(ndarray::s![s + T_EMBED_DIM..])
            .assign(&self.cond.lookup(label));
        input
    }

    pub fn eval(
        &self,
        state: &Array1<f64>,
        t: f64,
        label: ConditionLabel,
    ) -> Result<Array1<f64>, NnError> {
        if state.len() != self.state_dim() {
            return Err(NnError::ShapeMismatch { expected: self.state_dim(), got: state.len() });
        }
        self.mlp.forward(&self.assemble(state, t, label))
    }

    /// Gradients of `upstream · eval(...)` with respect to all trainable
    /// tensors. The null embedding receives no gradient by construction.
    pub fn backward(
        &self,
        state: &Array1<f64>,
        t: f64,
        label: ConditionLabel,
        upstream: &Array1<f64>,
    ) -> Result<FieldGrads, NnError> {
        if state.len() != self.state_dim() {
            return Err(NnError::ShapeMismatch { expected: self.state_dim(), got: state.len() });
        }
        let input = self.assemble(state, t, label);
        let (mlp, dinput) = self.mlp.backward(&input, upstream)?;
        let mut grads = FieldGrads { mlp, cond: Array2::zeros(self.cond.table.raw_dim()) };
        let idx = label.index();
        if idx > 0 {
            let s = state.len();
            grads
                .cond
                .row_mut(idx - 1)
                .assign(&dinput.slice(ndarray::s![s + T_EMBED_DIM..]));
        }
        Ok(grads)
    }
}
