//! Discrete flow matching through continuous-time Markov chains.
//!
//! Categorical states live in `{0, .., S-1}` with the highest index reserved
//! for the mask symbol. Conditional paths interpolate between a prior (all
//! mass on mask, or uniform) and a clean data state; the generating rate
//! matrix follows the ReLU-of-derivative construction, and marginals evolved
//! by the Euler simulator satisfy the Kolmogorov forward equation.

use super::FlowError;
use rand::Rng;

/// A categorical state together with its state-space size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CategoricalState {
    value: usize,
    s: usize,
}

impl CategoricalState {
    /// Panics if `value >= s`; file parsers validate before constructing.
    pub fn new(value: usize, s: usize) -> Self {
        assert!(value < s, "state {value} outside space of size {s}");
        CategoricalState { value, s }
    }

    /// The mask symbol: the highest index of the space.
    pub fn mask(s: usize) -> Self {
        assert!(s >= 2, "need at least one data state plus mask");
        CategoricalState { value: s - 1, s }
    }

    pub fn value(&self) -> usize {
        self.value
    }

    pub fn space(&self) -> usize {
        self.s
    }

    pub fn is_mask(&self) -> bool {
        self.value == self.s - 1
    }
}

/// Which prior the conditional path interpolates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    /// All prior mass on the mask symbol.
    Mask,
    /// Uniform prior over all `S` states.
    Uniform,
}

/// A conditional probability path over `S` states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionalPath {
    pub kind: PathKind,
    pub s: usize,
}

/// Normalization convention for the rate denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateConvention {
    /// Denominator counts the states with positive probability on the path's
    /// support (2 for the mask path, S for the uniform path). This is the
    /// convention under which simulated marginals reproduce the path.
    #[default]
    PositiveSupport,
    /// Literal `S` denominator as printed in the rate formula; kept
    /// selectable because it visibly breaks the Kolmogorov check for the
    /// mask path whenever S != 2.
    LiteralStateCount,
}

/// One row of the rate matrix: `rates[j]` is the jump rate toward `j` for
/// `j != from`, and `rates[from]` is the negative exit rate, so the row sums
/// to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub from: usize,
    pub rates: Vec<f64>,
}

impl RateRow {
    pub fn row_sum(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Counters for numerically degenerate simulator events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CtmcStats {
    /// Euler steps on which a negative probability had to be clamped.
    pub clamped_steps: u64,
    /// Trajectories that were still masked after the last step and jumped to
    /// the posterior argmax.
    pub forced_unmask: u64,
}

fn check_spaces(path: &ConditionalPath, states: &[&CategoricalState]) -> Result<(), FlowError> {
    for st in states {
        if st.space() != path.s {
            return Err(FlowError::StateSpaceMismatch { a: path.s, b: st.space() });
        }
    }
    Ok(())
}

/// Probability `p_{t|1}(xt | x1)` of the conditional path.
///
/// Mask path: `t·δ(x1, xt) + (1-t)·δ(M, xt)`.
/// Uniform path: `t·δ(x1, xt) + (1-t)/S`.
pub fn path_prob(
    path: &ConditionalPath,
    xt: &CategoricalState,
    x1: &CategoricalState,
    t: f64,
) -> Result<f64, FlowError> {
    check_spaces(path, &[xt, x1])?;
    debug_assert!((0.0..=1.0).contains(&t), "path time {t} outside [0,1]");
    match path.kind {
        PathKind::Mask => {
            if x1.is_mask() {
                return Err(FlowError::MaskAsData);
            }
            let mut p = 0.0;
            if xt.value() == x1.value() {
                p += t;
            }
            if xt.is_mask() {
                p += 1.0 - t;
            }
            Ok(p)
        }
        PathKind::Uniform => {
            let mut p = (1.0 - t) / path.s as f64;
            if xt.value() == x1.value() {
                p += t;
            }
            Ok(p)
        }
    }
}

/// Analytic time derivative `∂_t p_{t|1}(j | x1)`; constant in `t` for both
/// path families.
pub fn path_time_derivative(path: &ConditionalPath, j: usize, x1: &CategoricalState) -> f64 {
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    match path.kind {
        PathKind::Mask => delta(j, x1.value()) - delta(j, path.s - 1),
        PathKind::Uniform => delta(j, x1.value()) - 1.0 / path.s as f64,
    }
}

/// Number of states carrying probability on the path's support (interior
/// limit; the count is t-independent on (0, 1)).
fn support_count(path: &ConditionalPath) -> usize {
    match path.kind {
        PathKind::Mask => 2,
        PathKind::Uniform => path.s,
    }
}

/// Conditional generating rates out of `xt` at time `t < 1`:
/// `R(xt, j) = ReLU(∂_t p(j) - ∂_t p(xt)) / (Z · p(xt))` for `j != xt`, with
/// rates toward zero-probability states forced to zero and the diagonal set
/// to minus the row total.
pub fn rate_row(
    path: &ConditionalPath,
    xt: &CategoricalState,
    x1: &CategoricalState,
    t: f64,
    convention: RateConvention,
) -> Result<RateRow, FlowError> {
    check_spaces(path, &[xt, x1])?;
    if path.kind == PathKind::Mask && x1.is_mask() {
        return Err(FlowError::MaskAsData);
    }
    if t >= 1.0 {
        return Err(FlowError::TEndpoint { t });
    }
    let p_xt = path_prob(path, xt, x1, t)?;
    if p_xt <= 0.0 {
        return Err(FlowError::ZeroSupport { state: xt.value() });
    }
    let z = match convention {
        RateConvention::PositiveSupport => support_count(path) as f64,
        RateConvention::LiteralStateCount => path.s as f64,
    };
    let d_xt = path_time_derivative(path, xt.value(), x1);
    let mut rates = vec![0.0; path.s];
    let mut exit = 0.0;
    for j in 0..path.s {
        if j == xt.value() {
            continue;
        }
        // Interior-limit support: states the path can actually occupy.
        let reachable = match path.kind {
            PathKind::Mask => j == x1.value() || j == path.s - 1,
            PathKind::Uniform => true,
        };
        if !reachable {
            continue;
        }
        let num = (path_time_derivative(path, j, x1) - d_xt).max(0.0);
        let r = num / (z * p_xt);
        rates[j] = r;
        exit += r;
    }
    rates[xt.value()] = -exit;
    Ok(RateRow { from: xt.value(), rates })
}

/// One Euler step of the CTMC: draws the next state from
/// `δ(xt, ·) + R(xt, ·)·dt`, clamping negative entries to zero and
/// renormalizing (recorded in `stats`).
pub fn ctmc_euler_step<R: Rng + ?Sized>(
    xt: &CategoricalState,
    row: &RateRow,
    dt: f64,
    rng: &mut R,
    stats: &mut CtmcStats,
) -> CategoricalState {
    debug_assert_eq!(row.from, xt.value());
    let s = row.rates.len();
    let mut probs = vec![0.0; s];
    let mut clamped = false;
    let mut total = 0.0;
    for (j, p) in probs.iter_mut().enumerate() {
        let mut q = if j == xt.value() { 1.0 } else { 0.0 } + row.rates[j] * dt;
        if q < 0.0 {
            q = 0.0;
            clamped = true;
        }
        *p = q;
        total += q;
    }
    if clamped {
        stats.clamped_steps += 1;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return CategoricalState::new(j, xt.space());
        }
    }
    // Floating-point fallthrough: the draw equalled the total mass.
    CategoricalState::new(s - 1, xt.space())
}

/// Simulates the mask-path denoising chain from the all-mask prior at `t=0`
/// to `t=1` with `n_steps` Euler steps.
///
/// `posterior(xt, t)` returns the model's distribution over the `S-1` data
/// states; the expected rate is the posterior-weighted mixture of the
/// conditional rates (terms whose conditional path gives `xt` zero
/// probability contribute nothing). A trajectory still masked after the last
/// step jumps to the posterior argmax, recorded in the stats.
pub fn simulate_denoising<R, F>(
    s: usize,
    n_steps: usize,
    mut posterior: F,
    rng: &mut R,
) -> Result<(CategoricalState, CtmcStats), FlowError>
where
    R: Rng + ?Sized,
    F: FnMut(&CategoricalState, f64) -> Vec<f64>,
{
    assert!(n_steps > 0, "need at least one step");
    let path = ConditionalPath { kind: PathKind::Mask, s };
    let dt = 1.0 / n_steps as f64;
    let mut state = CategoricalState::mask(s);
    let mut stats = CtmcStats::default();
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let q = posterior(&state, t);
        if q.len() != s - 1 {
            return Err(FlowError::DimMismatch { expected: s - 1, got: q.len() });
        }
        debug_assert!(
            (q.iter().sum::<f64>() - 1.0).abs() < 1e-6,
            "posterior does not sum to 1"
        );
        let mut expected = RateRow { from: state.value(), rates: vec![0.0; s] };
        for (x1v, &w) in q.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let x1 = CategoricalState::new(x1v, s);
            if path_prob(&path, &state, &x1, t)? <= 0.0 {
                continue;
            }
            let row = rate_row(&path, &state, &x1, t, RateConvention::PositiveSupport)?;
            for (dst, src) in expected.rates.iter_mut().zip(&row.rates) {
                *dst += w * src;
            }
        }
        state = ctmc_euler_step(&state, &expected, dt, rng, &mut stats);
    }
    if state.is_mask() {
        let t_last = (n_steps - 1) as f64 * dt;
        let q = posterior(&state, t_last);
        let mut best = 0;
        for (j, &w) in q.iter().enumerate() {
            if w > q[best] {
                best = j;
            }
        }
        state = CategoricalState::new(best, s);
        stats.forced_unmask += 1;
    }
    Ok((state, stats))
}

/// Cross-entropy (negative log-likelihood) of the clean state under the
/// model's posterior logits over the `S-1` data states.
pub fn dfm_loss(logits: &[f64], x1: &CategoricalState) -> Result<f64, FlowError> {
    if x1.is_mask() {
        return Err(FlowError::MaskAsData);
    }
    if logits.len() != x1.space() - 1 {
        return Err(FlowError::DimMismatch { expected: x1.space() - 1, got: logits.len() });
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    Ok(lse - logits[x1.value()])
}

/// Gradient of [`dfm_loss`] with respect to the logits: `softmax - onehot`.
pub fn dfm_loss_grad(logits: &[f64], x1: &CategoricalState) -> Result<Vec<f64>, FlowError> {
    if x1.is_mask() {
        return Err(FlowError::MaskAsData);
    }
    if logits.len() != x1.space() - 1 {
        return Err(FlowError::DimMismatch { expected: x1.space() - 1, got: logits.len() });
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    let mut g: Vec<f64> = logits.iter().map(|l| (l - m).exp() / z).collect();
    g[x1.value()] -= 1.0;
    Ok(g)
}
