//! Adam with global-norm gradient clipping and a reduce-on-plateau
//! learning-rate rule.
//!
//! The optimizer works on flat tensor lists so the same state can cover a
//! single MLP or a whole model collection; callers fix the tensor order.

#[derive(Debug, Clone, Copy)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global-norm clip threshold applied to the whole gradient before the
    /// moment updates.
    pub clip: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { lr: 5e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, clip: 1.0 }
    }
}

/// First and second moment buffers, one flat vector per tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(tensor_lens: &[usize]) -> Self {
        AdamState {
            m: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }
}

pub fn global_norm(grads: &[&[f64]]) -> f64 {
    grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|&x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// One Adam update over a parameter/gradient tensor list.
///
/// Panics if the tensor layout disagrees with the state; that is a
/// programming error, not a runtime condition.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    hyper: &AdamHyper,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    let gn = global_norm(grads);
    let scale = if gn > hyper.clip && gn > 0.0 { hyper.clip / gn } else { 1.0 };
    state.t += 1;
    let bc1 = 1.0 - hyper.beta1.powi(state.t as i32);
    let bc2 = 1.0 - hyper.beta2.powi(state.t as i32);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        assert_eq!(p.len(), g.len());
        assert_eq!(p.len(), m.len());
        for i in 0..p.len() {
            let gi = g[i] * scale;
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            p[i] -= hyper.lr * mhat / (vhat.sqrt() + hyper.eps);
        }
    }
}

/// Reduce-on-plateau rule: after `patience` consecutive evaluations without
/// improvement the learning rate is multiplied by `factor`, floored at
/// `min_lr`.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    best: f64,
    bad: usize,
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64) -> Self {
        PlateauScheduler {
            lr: initial_lr,
            factor: 0.8,
            patience: 10,
            min_lr: 5e-6,
            best: f64::INFINITY,
            bad: 0,
        }
    }

    /// Records an evaluation loss and returns the learning rate to use
    /// from now on.
    pub fn on_eval(&mut self, loss: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.bad = 0;
        } else {
            self.bad += 1;
            if self.bad >= self.patience {
                self.lr = (self.lr * self.factor).max(self.min_lr);
                self.bad = 0;
            }
        }
        self.lr
    }
}
