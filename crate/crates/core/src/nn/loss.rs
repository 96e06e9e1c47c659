//! The combined multi-modality training objective and classifier-free
//! conditional training.
//!
//! Eight vector-field regressors share one optimizer: surface positions,
//! orientations, the categorical chemistry channel, continuous features,
//! and the four structure flows (residue positions, orientations, torsions,
//! soft residue types).

use super::adam::{adam_step, AdamHyper, AdamState};
use super::checkpoint::NamedTensor;
use super::{Activation, ConditionLabel, FieldGrads, FieldModel, NnError};
use crate::flow::discrete::{dfm_loss, dfm_loss_grad, CategoricalState};
use ndarray::Array1;
use rand::Rng;

/// Chemistry channel state space: donor, acceptor, neutral, mask.
pub const CAT_STATE_SPACE: usize = 4;

/// Weights of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub pos: f64,
    pub ori: f64,
    pub cat: f64,
    pub con: f64,
    pub structural: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { pos: 0.2, ori: 0.2, cat: 1.0, con: 1.0, structural: 1.0 }
    }
}

/// One regression sample: network input state, flow time, target field.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub state: Array1<f64>,
    pub t: f64,
    pub target: Array1<f64>,
}

/// One discrete-flow sample: noisy state, time, clean state.
#[derive(Debug, Clone)]
pub struct CatSample {
    pub xt: CategoricalState,
    pub t: f64,
    pub x1: CategoricalState,
}

#[derive(Debug, Clone, Default)]
pub struct TrainBatch {
    pub pos: Vec<FieldSample>,
    pub ori: Vec<FieldSample>,
    pub cat: Vec<CatSample>,
    pub con: Vec<FieldSample>,
    pub str_pos: Vec<FieldSample>,
    pub str_ori: Vec<FieldSample>,
    pub str_tor: Vec<FieldSample>,
    pub str_typ: Vec<FieldSample>,
}

impl TrainBatch {
    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
            && self.ori.is_empty()
            && self.cat.is_empty()
            && self.con.is_empty()
            && self.str_pos.is_empty()
            && self.str_ori.is_empty()
            && self.str_tor.is_empty()
            && self.str_typ.is_empty()
    }
}

/// Model family names in canonical (checkpoint and optimizer) order.
pub const FAMILIES: [&str; 8] =
    ["pos", "ori", "cat", "con", "str_pos", "str_ori", "str_tor", "str_typ"];

/// (state dim, output dim) per family, in [`FAMILIES`] order. Orientations
/// enter as flattened rotation matrices and leave as tangent vectors;
/// torsions enter as sin/cos pairs of the four angles. The categorical
/// channel takes a one-hot state over `cat_states` symbols (mask included)
/// and emits logits over the data symbols.
pub fn family_dims(cat_states: usize) -> [(usize, usize); 8] {
    assert!(cat_states >= 2, "categorical space needs a data symbol and mask");
    [
        (3, 3),
        (9, 3),
        (cat_states, cat_states - 1),
        (2, 2),
        (3, 3),
        (9, 3),
        (8, 4),
        (20, 20),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub models: Vec<FieldModel>,
}

impl ModelSet {
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], cat_states: usize, rng: &mut R) -> Self {
        let models = family_dims(cat_states)
            .iter()
            .map(|&(s, o)| FieldModel::new(s, hidden, o, Activation::SiLU, rng))
            .collect();
        ModelSet { models }
    }

    pub fn family(&self, name: &str) -> &FieldModel {
        let i = FAMILIES.iter().position(|&f| f == name).expect("unknown family");
        &self.models[i]
    }

    /// Flat parameter tensors in canonical order, for the optimizer.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for m in self.models.iter_mut() {
            for w in m.mlp.weights.iter_mut() {
                out.push(w.as_slice_mut().unwrap());
            }
            for b in m.mlp.biases.iter_mut() {
                out.push(b.as_slice_mut().unwrap());
            }
            out.push(m.cond.table.as_slice_mut().unwrap());
        }
        out
    }

    pub fn tensor_lens(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for m in &self.models {
            for w in &m.mlp.weights {
                out.push(w.len());
            }
            for b in &m.mlp.biases {
                out.push(b.len());
            }
            out.push(m.cond.table.len());
        }
        out
    }

    /// Named tensors in canonical order for checkpointing.
    pub fn to_tensors(&self) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        for (m, name) in self.models.iter().zip(FAMILIES) {
            for (l, w) in m.mlp.weights.iter().enumerate() {
                out.push(NamedTensor::new(
                    format!("{name}.w{l}"),
                    vec![w.nrows(), w.ncols()],
                    w.iter().cloned().collect(),
                ));
            }
            for (l, b) in m.mlp.biases.iter().enumerate() {
                out.push(NamedTensor::new(
                    format!("{name}.b{l}"),
                    vec![b.len()],
                    b.to_vec(),
                ));
            }
            let c = &m.cond.table;
            out.push(NamedTensor::new(
                format!("{name}.cond"),
                vec![c.nrows(), c.ncols()],
                c.iter().cloned().collect(),
            ));
        }
        out
    }

    /// Loads tensors saved by [`Self::to_tensors`]; names, order and shapes
    /// must match this architecture exactly.
    pub fn load_tensors(&mut self, tensors: &[NamedTensor]) -> Result<(), NnError> {
        let expected = self.to_tensors();
        if tensors.len() != expected.len() {
            return Err(NnError::CheckpointMismatch(format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            )));
        }
        for (have, want) in tensors.iter().zip(&expected) {
            if have.name != want.name {
                return Err(NnError::CheckpointMismatch(format!(
                    "expected tensor {:?}, found {:?}",
                    want.name, have.name
                )));
            }
            if have.dims != want.dims {
                return Err(NnError::CheckpointMismatch(format!(
                    "tensor {:?}: expected dims {:?}, found {:?}",
                    have.name, want.dims, have.dims
                )));
            }
        }
        for (m, chunk) in self.models.iter_mut().zip(tensors.chunks(tensors.len() / 8)) {
            let layers = m.mlp.weights.len();
            for l in 0..layers {
                m.mlp.weights[l]
                    .as_slice_mut()
                    .unwrap()
                    .copy_from_slice(&chunk[l].data);
            }
            for l in 0..layers {
                m.mlp.biases[l]
                    .as_slice_mut()
                    .unwrap()
                    .copy_from_slice(&chunk[layers + l].data);
            }
            m.cond
                .table
                .as_slice_mut()
                .unwrap()
                .copy_from_slice(&chunk[2 * layers].data);
        }
        Ok(())
    }
}

/// Gradients for every model in a [`ModelSet`], canonical order.
#[derive(Debug, Clone)]
pub struct ModelSetGrads {
    pub grads: Vec<FieldGrads>,
}

impl ModelSetGrads {
    pub fn zeros_like(set: &ModelSet) -> Self {
        ModelSetGrads { grads: set.models.iter().map(FieldGrads::zeros_like).collect() }
    }

    /// Flat tensor views matching [`ModelSet::tensors_mut`].
    pub fn tensor_views(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for g in &self.grads {
            let layers = g.mlp.dw.len();
            for l in 0..layers {
                out.push(g.mlp.dw[l].as_slice().unwrap());
            }
            for l in 0..layers {
                out.push(g.mlp.db[l].as_slice().unwrap());
            }
            out.push(g.cond.as_slice().unwrap());
        }
        out
    }
}

/// Unweighted per-term means. `structural` is the sum of its four family
/// means, matching the single λ_str weight.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub pos: f64,
    pub ori: f64,
    pub cat: f64,
    pub con: f64,
    pub structural: f64,
}

impl LossBreakdown {
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        w.pos * self.pos
            + w.ori * self.ori
            + w.cat * self.cat
            + w.con * self.con
            + w.structural * self.structural
    }
}

fn one_hot(state: &CategoricalState) -> Array1<f64> {
    let mut v = Array1::zeros(state.space());
    v[state.value()] = 1.0;
    v
}

/// Mean squared field error over one family, optionally accumulating
/// gradients scaled by `weight`.
fn field_term(
    model: &FieldModel,
    samples: &[FieldSample],
    label: ConditionLabel,
    weight: f64,
    grads: Option<&mut FieldGrads>,
) -> Result<f64, NnError> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let n = samples.len() as f64;
    let mut total = 0.0;
    let mut acc = grads;
    for s in samples {
        let pred = model.eval(&s.state, s.t, label)?;
        if pred.len() != s.target.len() {
            return Err(NnError::ShapeMismatch { expected: pred.len(), got: s.target.len() });
        }
        let diff = &pred - &s.target;
        total += diff.dot(&diff);
        if let Some(g) = acc.as_deref_mut() {
            let upstream = diff * (2.0 * weight / n);
            g.add_assign(&model.backward(&s.state, s.t, label, &upstream)?);
        }
    }
    Ok(total / n)
}

/// Mean discrete-flow cross entropy, optionally accumulating gradients.
fn cat_term(
    model: &FieldModel,
    samples: &[CatSample],
    label: ConditionLabel,
    weight: f64,
    grads: Option<&mut FieldGrads>,
) -> Result<f64, NnError> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let n = samples.len() as f64;
    let mut total = 0.0;
    let mut acc = grads;
    for s in samples {
        let logits = model.eval(&one_hot(&s.xt), s.t, label)?;
        let ls = logits.as_slice().unwrap();
        total += dfm_loss(ls, &s.x1)?;
        if let Some(g) = acc.as_deref_mut() {
            let dl = dfm_loss_grad(ls, &s.x1)?;
            let upstream = Array1::from(dl) * (weight / n);
            g.add_assign(&model.backward(&one_hot(&s.xt), s.t, label, &upstream)?);
        }
    }
    Ok(total / n)
}

fn loss_impl(
    models: &ModelSet,
    batch: &TrainBatch,
    weights: &LossWeights,
    label: ConditionLabel,
    mut grads: Option<&mut ModelSetGrads>,
) -> Result<(f64, LossBreakdown), NnError> {
    if batch.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let mut slots: Vec<Option<&mut FieldGrads>> = match grads.as_deref_mut() {
        Some(gs) => gs.grads.iter_mut().map(Some).collect(),
        None => (0..8).map(|_| None).collect(),
    };
    let mut bd = LossBreakdown::default();
    bd.pos = field_term(&models.models[0], &batch.pos, label, weights.pos, slots[0].take())?;
    bd.ori = field_term(&models.models[1], &batch.ori, label, weights.ori, slots[1].take())?;
    bd.cat = cat_term(&models.models[2], &batch.cat, label, weights.cat, slots[2].take())?;
    bd.con = field_term(&models.models[3], &batch.con, label, weights.con, slots[3].take())?;
    let w = weights.structural;
    bd.structural = field_term(&models.models[4], &batch.str_pos, label, w, slots[4].take())?
        + field_term(&models.models[5], &batch.str_ori, label, w, slots[5].take())?
        + field_term(&models.models[6], &batch.str_tor, label, w, slots[6].take())?
        + field_term(&models.models[7], &batch.str_typ, label, w, slots[7].take())?;
    Ok((bd.weighted_total(weights), bd))
}

/// The combined objective: weighted sum of per-family mean losses.
pub fn total_loss(
    models: &ModelSet,
    batch: &TrainBatch,
    weights: &LossWeights,
    label: ConditionLabel,
) -> Result<(f64, LossBreakdown), NnError> {
    loss_impl(models, batch, weights, label, None)
}

/// Loss plus exact gradients of the weighted total for every trainable
/// tensor.
pub fn total_loss_with_grads(
    models: &ModelSet,
    batch: &TrainBatch,
    weights: &LossWeights,
    label: ConditionLabel,
) -> Result<(f64, LossBreakdown, ModelSetGrads), NnError> {
    let mut grads = ModelSetGrads::zeros_like(models);
    let (total, bd) = loss_impl(models, batch, weights, label, Some(&mut grads))?;
    Ok((total, bd, grads))
}

#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub loss: f64,
    pub breakdown: LossBreakdown,
    /// Whether this step trained against the null condition.
    pub used_null: bool,
}

/// One classifier-free training step: with probability `p_uncond` the
/// condition is dropped to null before the forward pass, then a clipped
/// Adam update is applied to every model.
pub fn cfg_train_step<R: Rng + ?Sized>(
    models: &mut ModelSet,
    batch: &TrainBatch,
    weights: &LossWeights,
    condition: ConditionLabel,
    p_uncond: f64,
    adam: &mut AdamState,
    hyper: &AdamHyper,
    rng: &mut R,
) -> Result<StepOutcome, NnError> {
    assert!((0.0..=1.0).contains(&p_uncond));
    let used_null = rng.gen::<f64>() < p_uncond;
    let label = if used_null { ConditionLabel::Null } else { condition };
    let (loss, breakdown, grads) = total_loss_with_grads(models, batch, weights, label)?;
    adam_step(&mut models.tensors_mut(), &grads.tensor_views(), adam, hyper);
    Ok(StepOutcome { loss, breakdown, used_null })
}

/// Classifier-free guidance at sampling time.
pub fn cfg_sample_field(
    v_cond: &Array1<f64>,
    v_null: &Array1<f64>,
    guidance_w: f64,
) -> Result<Array1<f64>, NnError> {
    if v_cond.len() != v_null.len() {
        return Err(NnError::ShapeMismatch { expected: v_cond.len(), got: v_null.len() });
    }
    Ok(v_cond * (1.0 + guidance_w) - v_null * guidance_w)
}
