//! Equivariant surface geometric network.
//!
//! A dynamic heterogeneous graph over peptide and receptor surface points:
//! intra-protein messages built from invariant radial/angular edge features
//! with softmax reweighting, inter-protein distance-gated attention, and
//! coordinate updates that move peptide points along relative directions so
//! the whole forward pass commutes with rigid motions.

use crate::nn::{sigmoid, Activation, MlpParams};
use crate::spatial::PointIndex;
use crate::surface::{FephLabel, SurfacePoint};
use nalgebra::Vector3;
use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EsgnError {
    #[error("coincident points: edge distance below 1e-12")]
    CoincidentPoints,
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsgnConfig {
    /// Node feature width.
    pub psi_h: usize,
    /// Intra-message width.
    pub psi_m: usize,
    pub k_rbf: usize,
    /// Number of Legendre orders in the angular basis.
    pub l_sph: usize,
    /// Number of radial bases paired with each Legendre order.
    pub k_sph: usize,
    /// Neighbor cutoff radius in Å.
    pub cutoff: f64,
    pub layers: usize,
    /// Attention projection width.
    pub d_att: usize,
    /// Feed squared distances to the RBF and the distance gate instead of
    /// plain distances. Off by default; the angular radial part always uses
    /// the plain distance.
    pub squared_distance: bool,
}

impl Default for EsgnConfig {
    fn default() -> Self {
        EsgnConfig {
            psi_h: 16,
            psi_m: 16,
            k_rbf: 16,
            l_sph: 4,
            k_sph: 4,
            cutoff: 4.0,
            layers: 3,
            d_att: 16,
            squared_distance: false,
        }
    }
}

/// Directed edges as `(src, dst)` pairs in global node indices: peptide
/// nodes come first (`0..n_pep`), receptor nodes follow. Each list is
/// sorted by `(dst, src)` so per-receiver groups are contiguous and
/// aggregation order is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGraph {
    pub n_pep: usize,
    pub n_rec: usize,
    pub edges_pep: Vec<(usize, usize)>,
    pub edges_rec: Vec<(usize, usize)>,
    pub edges_inter: Vec<(usize, usize)>,
    pub cutoff: f64,
}

/// Node features, coordinates and carried normals after `layer` layers.
#[derive(Debug, Clone, PartialEq)]
pub struct EsgnState {
    pub h: Vec<Array1<f64>>,
    pub x: Vec<Vector3<f64>>,
    /// Unit normals from the input surface; carried, never updated.
    pub normals: Vec<Vector3<f64>>,
    pub layer: usize,
}

/// Rotation- and translation-invariant features of one directed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricEdgeFeatures {
    pub rbf: Array1<f64>,
    pub sbf_i: Array1<f64>,
    pub sbf_j: Array1<f64>,
}

/// All and only pairs within `cutoff`, split into the two intra lists and
/// the cross-protein list, every connection present in both directions.
pub fn build_graph(
    pep: &[Vector3<f64>],
    rec: &[Vector3<f64>],
    cutoff: f64,
) -> SurfaceGraph {
    assert!(cutoff > 0.0);
    let cell = cutoff.max(1e-6);
    let pep_index = PointIndex::build(pep, cell);
    let rec_index = PointIndex::build(rec, cell);
    let n_pep = pep.len();

    let mut edges_pep = Vec::new();
    let mut edges_inter = Vec::new();
    for (i, p) in pep.iter().enumerate() {
        for j in pep_index.within(p, cutoff) {
            if j != i {
                edges_pep.push((j, i));
            }
        }
        for j in rec_index.within(p, cutoff) {
            edges_inter.push((n_pep + j, i));
        }
    }
    let mut edges_rec = Vec::new();
    for (i, r) in rec.iter().enumerate() {
        for j in rec_index.within(r, cutoff) {
            if j != i {
                edges_rec.push((n_pep + j, n_pep + i));
            }
        }
        for j in pep_index.within(r, cutoff) {
            edges_inter.push((j, n_pep + i));
        }
    }
    SurfaceGraph { n_pep, n_rec: rec.len(), edges_pep, edges_rec, edges_inter, cutoff }
}

/// Legendre polynomial P_l(x) by the three-term recurrence.
pub fn legendre_p(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut pm1, mut p) = (1.0, x);
            for n in 1..l {
                let next = ((2 * n + 1) as f64 * x * p - n as f64 * pm1) / (n + 1) as f64;
                pm1 = p;
                p = next;
            }
            p
        }
    }
}

fn rbf_of(d_feat: f64, cfg: &EsgnConfig) -> Array1<f64> {
    let spacing = cfg.cutoff / (cfg.k_rbf - 1) as f64;
    Array1::from_iter((0..cfg.k_rbf).map(|k| {
        let c = k as f64 * spacing;
        (-(d_feat - c).powi(2) / (2.0 * spacing * spacing)).exp()
    }))
}

fn sbf_of(cos_angle: f64, d: f64, cfg: &EsgnConfig) -> Array1<f64> {
    let cos_angle = cos_angle.clamp(-1.0, 1.0);
    let mut out = Array1::zeros(cfg.l_sph * cfg.k_sph);
    for l in 0..cfg.l_sph {
        let p = legendre_p(l, cos_angle);
        for k in 0..cfg.k_sph {
            let arg = (k + 1) as f64 * std::f64::consts::PI * d / cfg.cutoff;
            let radial = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
            out[l * cfg.k_sph + k] = p * radial;
        }
    }
    out
}

/// Distance fed to the RBF and the gate, honoring the squared-form flag.
fn gate_distance(d: f64, cfg: &EsgnConfig) -> f64 {
    if cfg.squared_distance {
        d * d
    } else {
        d
    }
}

/// Invariant features of the edge j→i.
pub fn edge_features(
    xi: &Vector3<f64>,
    ni: &Vector3<f64>,
    xj: &Vector3<f64>,
    nj: &Vector3<f64>,
    cfg: &EsgnConfig,
) -> Result<GeometricEdgeFeatures, EsgnError> {
    let x_ij = xi - xj;
    let d = x_ij.norm();
    if d < 1e-12 {
        return Err(EsgnError::CoincidentPoints);
    }
    let rbf = rbf_of(gate_distance(d, cfg), cfg);
    let cos_i = ni.dot(&x_ij) / d;
    let cos_j = nj.dot(&(-x_ij)) / d;
    Ok(GeometricEdgeFeatures {
        rbf,
        sbf_i: sbf_of(cos_i, d, cfg),
        sbf_j: sbf_of(cos_j, d, cfg),
    })
}

/// All learnable tensors of the network. Message and update networks are
/// plain MLPs; the softmax reweighting uses an affine scalar head, and the
/// distance gate is a sigmoid-squashed linear map of the RBF vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EsgnParams {
    pub cfg: EsgnConfig,
    /// Initial node embedding from the 3-class one-hot chemistry label.
    pub f_e: MlpParams,
    pub f_m: MlpParams,
    pub w_m: Array1<f64>,
    pub b_m: f64,
    pub f_q: MlpParams,
    pub f_k: MlpParams,
    pub gate_w: Array2<f64>,
    pub gate_b: Array1<f64>,
    pub f_h: MlpParams,
    pub f_x_intra: MlpParams,
    pub f_x_inter: MlpParams,
}

impl EsgnParams {
    pub fn init<R: Rng + ?Sized>(cfg: EsgnConfig, rng: &mut R) -> Self {
        let h = cfg.psi_h;
        let edge_in = 2 * h + cfg.k_rbf + 2 * cfg.l_sph * cfg.k_sph;
        let act = Activation::SiLU;
        let xavier = |sizes: &[usize], rng: &mut R| MlpParams::xavier(sizes, act, rng);
        let f_e = xavier(&[3, h, h], rng);
        let f_m = xavier(&[edge_in, 32, cfg.psi_m], rng);
        let limit = (6.0 / (cfg.psi_m + 1) as f64).sqrt();
        let w_m = Array1::from_iter((0..cfg.psi_m).map(|_| rng.gen_range(-limit..limit)));
        let f_q = xavier(&[h, cfg.d_att], rng);
        let f_k = xavier(&[h, cfg.d_att], rng);
        let glimit = (6.0 / (cfg.k_rbf + h) as f64).sqrt();
        let mut gate_w = Array2::zeros((h, cfg.k_rbf));
        for v in gate_w.iter_mut() {
            *v = rng.gen_range(-glimit..glimit);
        }
        let f_h = xavier(&[2 * h + cfg.psi_m, h, h], rng);
        let f_x_intra = xavier(&[cfg.psi_m, 1], rng);
        let f_x_inter = xavier(&[h, 1], rng);
        EsgnParams {
            cfg,
            f_e,
            f_m,
            w_m,
            b_m: 0.0,
            f_q,
            f_k,
            gate_w,
            gate_b: Array1::zeros(h),
            f_h,
            f_x_intra,
            f_x_inter,
        }
    }
}

fn one_hot_label(label: FephLabel) -> Array1<f64> {
    let mut v = Array1::zeros(3);
    v[label.index()] = 1.0;
    v
}

/// Softmax-normalizes `logits` within each contiguous group of equal
/// `group[e]`, in place, assuming groups are contiguous.
pub fn grouped_softmax(logits: &mut [f64], group: &[usize]) {
    let mut start = 0;
    while start < logits.len() {
        let mut end = start + 1;
        while end < logits.len() && group[end] == group[start] {
            end += 1;
        }
        let max = logits[start..end].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for l in logits[start..end].iter_mut() {
            *l = (*l - max).exp();
            z += *l;
        }
        for l in logits[start..end].iter_mut() {
            *l /= z;
        }
        start = end;
    }
}

/// Reweighted intra-protein messages, aligned with `edges`. Each raw
/// message is scaled by its softmax weight over the receiving node's
/// neighborhood; the reweighted message feeds both the feature and the
/// coordinate update.
pub fn intra_messages(
    state: &EsgnState,
    edges: &[(usize, usize)],
    params: &EsgnParams,
) -> Result<Vec<Array1<f64>>, EsgnError> {
    let mut raw = Vec::with_capacity(edges.len());
    let mut logits = Vec::with_capacity(edges.len());
    let mut group = Vec::with_capacity(edges.len());
    for &(j, i) in edges {
        let feat = edge_features(
            &state.x[i],
            &state.normals[i],
            &state.x[j],
            &state.normals[j],
            &params.cfg,
        )?;
        let input = concatenate(
            Axis(0),
            &[
                state.h[i].view(),
                state.h[j].view(),
                feat.rbf.view(),
                feat.sbf_i.view(),
                feat.sbf_j.view(),
            ],
        )
        .unwrap();
        let m = params.f_m.forward(&input)?;
        logits.push(params.w_m.dot(&m) + params.b_m);
        raw.push(m);
        group.push(i);
    }
    grouped_softmax(&mut logits, &group);
    Ok(raw
        .into_iter()
        .zip(logits)
        .map(|(m, w)| m * w)
        .collect())
}

/// Attention-weighted, distance-gated inter-protein messages, aligned with
/// `graph.edges_inter`.
pub fn inter_messages(
    state: &EsgnState,
    graph: &SurfaceGraph,
    params: &EsgnParams,
) -> Result<Vec<Array1<f64>>, EsgnError> {
    let edges = &graph.edges_inter;
    let mut values = Vec::with_capacity(edges.len());
    let mut logits = Vec::with_capacity(edges.len());
    let mut group = Vec::with_capacity(edges.len());
    for &(j, i) in edges {
        let q = params.f_q.forward(&state.h[i])?;
        let k = params.f_k.forward(&state.h[j])?;
        logits.push(q.dot(&k));
        let d = (state.x[i] - state.x[j]).norm();
        if d < 1e-12 {
            return Err(EsgnError::CoincidentPoints);
        }
        let rbf = rbf_of(gate_distance(d, &params.cfg), &params.cfg);
        let gate = (params.gate_w.dot(&rbf) + &params.gate_b).mapv(sigmoid);
        values.push(&state.h[j] * &gate);
        group.push(i);
    }
    grouped_softmax(&mut logits, &group);
    Ok(values
        .into_iter()
        .zip(logits)
        .map(|(v, a)| v * a)
        .collect())
}

/// One message-passing layer: feature update from aggregated intra and
/// inter messages, coordinate update for peptide nodes only; receptor
/// coordinates are conditioning context and stay fixed.
pub fn esgn_layer(
    state: &EsgnState,
    graph: &SurfaceGraph,
    params: &EsgnParams,
) -> Result<EsgnState, EsgnError> {
    let n = state.h.len();
    assert_eq!(n, graph.n_pep + graph.n_rec, "graph and state disagree on node count");
    let cfg = &params.cfg;

    let m_pep = intra_messages(state, &graph.edges_pep, params)?;
    let m_rec = intra_messages(state, &graph.edges_rec, params)?;
    let mu = inter_messages(state, graph, params)?;

    let mut sum_m: Vec<Array1<f64>> = vec![Array1::zeros(cfg.psi_m); n];
    let mut deg_intra = vec![0usize; n];
    for ((_, i), m) in graph.edges_pep.iter().chain(&graph.edges_rec).zip(m_pep.iter().chain(&m_rec)) {
        sum_m[*i] += m;
        deg_intra[*i] += 1;
    }
    let mut sum_mu: Vec<Array1<f64>> = vec![Array1::zeros(cfg.psi_h); n];
    let mut deg_inter = vec![0usize; n];
    for (&(_, i), m) in graph.edges_inter.iter().zip(&mu) {
        sum_mu[i] += m;
        deg_inter[i] += 1;
    }

    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let input = concatenate(
            Axis(0),
            &[state.h[i].view(), sum_m[i].view(), sum_mu[i].view()],
        )
        .unwrap();
        h.push(params.f_h.forward(&input)?);
    }

    let mut x = state.x.clone();
    let mut shift_intra: Vec<Vector3<f64>> = vec![Vector3::zeros(); graph.n_pep];
    for (&(j, i), m) in graph.edges_pep.iter().zip(&m_pep) {
        let g = params.f_x_intra.forward(m)?[0];
        shift_intra[i] += (state.x[i] - state.x[j]) * g;
    }
    let mut shift_inter: Vec<Vector3<f64>> = vec![Vector3::zeros(); graph.n_pep];
    for (&(j, i), m) in graph.edges_inter.iter().zip(&mu) {
        if i < graph.n_pep {
            let g = params.f_x_inter.forward(m)?[0];
            shift_inter[i] += (state.x[i] - state.x[j]) * g;
        }
    }
    for i in 0..graph.n_pep {
        if deg_intra[i] > 0 {
            x[i] += shift_intra[i] / deg_intra[i] as f64;
        }
        if deg_inter[i] > 0 {
            x[i] += shift_inter[i] / deg_inter[i] as f64;
        }
    }

    Ok(EsgnState { h, x, normals: state.normals.clone(), layer: state.layer + 1 })
}

/// Initial state: `h` embedded from the chemistry one-hot, coordinates and
/// normals copied from the points, peptide first.
pub fn init_state(
    pep: &[SurfacePoint],
    rec: &[SurfacePoint],
    params: &EsgnParams,
) -> Result<EsgnState, EsgnError> {
    let mut h = Vec::with_capacity(pep.len() + rec.len());
    let mut x = Vec::with_capacity(pep.len() + rec.len());
    let mut normals = Vec::with_capacity(pep.len() + rec.len());
    for p in pep.iter().chain(rec) {
        h.push(params.f_e.forward(&one_hot_label(p.upsilon))?);
        x.push(p.pos);
        normals.push(p.normal);
    }
    Ok(EsgnState { h, x, normals, layer: 0 })
}

/// Full forward pass: embed, then run the configured number of layers,
/// rebuilding the graph from current coordinates before every layer.
pub fn esgn_forward(
    pep: &[SurfacePoint],
    rec: &[SurfacePoint],
    params: &EsgnParams,
) -> Result<EsgnState, EsgnError> {
    assert!(params.cfg.layers >= 1);
    let mut state = init_state(pep, rec, params)?;
    for _ in 0..params.cfg.layers {
        let graph = build_graph(
            &state.x[..pep.len()],
            &state.x[pep.len()..],
            params.cfg.cutoff,
        );
        state = esgn_layer(&state, &graph, params)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom3d::{sample_uniform_rotation, Rotation};
    use crate::rng::substream;

    fn brute_force_graph(
        pep: &[Vector3<f64>],
        rec: &[Vector3<f64>],
        cutoff: f64,
    ) -> SurfaceGraph {
        let n_pep = pep.len();
        let all: Vec<(Vector3<f64>, bool)> = pep
            .iter()
            .map(|&p| (p, true))
            .chain(rec.iter().map(|&r| (r, false)))
            .collect();
        let mut edges_pep = Vec::new();
        let mut edges_rec = Vec::new();
        let mut edges_inter = Vec::new();
        for i in 0..all.len() {
            for j in 0..all.len() {
                if i == j || (all[i].0 - all[j].0).norm() > cutoff {
                    continue;
                }
                match (all[j].1, all[i].1) {
                    (true, true) => edges_pep.push((j, i)),
                    (false, false) => edges_rec.push((j, i)),
                    _ => edges_inter.push((j, i)),
                }
            }
        }
        let key = |e: &(usize, usize)| (e.1, e.0);
        edges_pep.sort_by_key(key);
        edges_rec.sort_by_key(key);
        edges_inter.sort_by_key(key);
        SurfaceGraph { n_pep, n_rec: rec.len(), edges_pep, edges_rec, edges_inter, cutoff }
    }

    fn random_cloud(n: usize, scale: f64, seed: u64, name: &str) -> Vec<Vector3<f64>> {
        let mut rng = substream(seed, name);
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.gen::<f64>() * scale,
                    rng.gen::<f64>() * scale,
                    rng.gen::<f64>() * scale,
                )
            })
            .collect()
    }

    fn points_from(coords: &[Vector3<f64>], seed: u64) -> Vec<SurfacePoint> {
        let mut rng = substream(seed, "esgn-pts");
        coords
            .iter()
            .map(|&pos| {
                let n = Vector3::new(
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                )
                .normalize();
                let upsilon = FephLabel::from_index(rng.gen_range(0..3)).unwrap();
                SurfacePoint { pos, normal: n, tau: [0.0, 0.0], upsilon }
            })
            .collect()
    }

    #[test]
    fn two_points_connect_only_within_cutoff() {
        let g = build_graph(
            &[Vector3::zeros(), Vector3::new(8.0, 0.0, 0.0)],
            &[],
            4.0,
        );
        assert!(g.edges_pep.is_empty());
        let g = build_graph(
            &[Vector3::zeros(), Vector3::new(2.0, 0.0, 0.0)],
            &[],
            4.0,
        );
        assert_eq!(g.edges_pep, vec![(1, 0), (0, 1)]);
    }

    #[test]
    fn graph_matches_brute_force_scan() {
        let pep = random_cloud(60, 10.0, 1, "esgn-pep");
        let rec = random_cloud(80, 10.0, 2, "esgn-rec");
        let got = build_graph(&pep, &rec, 3.0);
        let want = brute_force_graph(&pep, &rec, 3.0);
        assert_eq!(got, want);
    }

    #[test]
    fn rbf_peaks_at_its_center() {
        let cfg = EsgnConfig::default();
        let spacing = cfg.cutoff / (cfg.k_rbf - 1) as f64;
        let r = rbf_of(5.0 * spacing, &cfg);
        assert_eq!(r[5], 1.0);
        for (k, v) in r.iter().enumerate() {
            if k != 5 {
                assert!(*v < 1.0);
            }
        }
    }

    #[test]
    fn legendre_at_one_is_one() {
        for l in 0..8 {
            assert!((legendre_p(l, 1.0) - 1.0).abs() < 1e-12);
        }
        // Spot values: P_2(x) = (3x^2 - 1)/2, P_3(x) = (5x^3 - 3x)/2.
        assert!((legendre_p(2, 0.5) - (3.0 * 0.25 - 1.0) / 2.0).abs() < 1e-12);
        assert!((legendre_p(3, -0.3) - (5.0 * -0.027 + 0.9) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn edge_features_are_rigid_invariant() {
        let cfg = EsgnConfig::default();
        let mut rng = substream(3, "esgn");
        let xi = Vector3::new(0.3, -0.5, 1.0);
        let xj = Vector3::new(1.4, 0.2, -0.7);
        let ni = Vector3::new(0.2, 0.9, -0.1).normalize();
        let nj = Vector3::new(-0.5, 0.1, 0.8).normalize();
        let base = edge_features(&xi, &ni, &xj, &nj, &cfg).unwrap();
        for _ in 0..10 {
            let r = sample_uniform_rotation(&mut rng);
            let v = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * 5.0;
            let got = edge_features(
                &(r.apply(&xi) + v),
                &r.apply(&ni),
                &(r.apply(&xj) + v),
                &r.apply(&nj),
                &cfg,
            )
            .unwrap();
            let dev = (&got.rbf - &base.rbf)
                .iter()
                .chain((&got.sbf_i - &base.sbf_i).iter())
                .chain((&got.sbf_j - &base.sbf_j).iter())
                .map(|d| d.abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-9, "feature deviation {dev}");
        }
    }

    #[test]
    fn coincident_points_are_an_error() {
        let cfg = EsgnConfig::default();
        let x = Vector3::new(1.0, 2.0, 3.0);
        let n = Vector3::z();
        assert!(matches!(
            edge_features(&x, &n, &x, &n, &cfg),
            Err(EsgnError::CoincidentPoints)
        ));
    }

    fn toy_setup(seed: u64) -> (Vec<SurfacePoint>, Vec<SurfacePoint>, EsgnParams) {
        let pep_coords = random_cloud(12, 5.0, seed, "esgn-p");
        let mut rec_coords = random_cloud(15, 5.0, seed + 1, "esgn-r");
        for c in rec_coords.iter_mut() {
            c.x += 2.0;
        }
        let pep = points_from(&pep_coords, seed + 2);
        let rec = points_from(&rec_coords, seed + 3);
        let params = EsgnParams::init(
            EsgnConfig { layers: 2, ..EsgnConfig::default() },
            &mut substream(seed + 4, "esgn-init"),
        );
        (pep, rec, params)
    }

    #[test]
    fn softmax_weights_sum_to_one_per_receiver() {
        let (pep, rec, params) = toy_setup(10);
        let state = init_state(&pep, &rec, &params).unwrap();
        let graph = build_graph(&state.x[..pep.len()], &state.x[pep.len()..], params.cfg.cutoff);
        assert!(!graph.edges_pep.is_empty() && !graph.edges_inter.is_empty());

        // Re-derive the weights by dividing reweighted by raw messages is
        // fragile; instead check the grouped softmax directly.
        let mut logits: Vec<f64> = graph
            .edges_pep
            .iter()
            .map(|&(j, i)| (i * 31 + j) as f64 * 0.01)
            .collect();
        let group: Vec<usize> = graph.edges_pep.iter().map(|&(_, i)| i).collect();
        grouped_softmax(&mut logits, &group);
        let mut start = 0;
        while start < logits.len() {
            let mut end = start + 1;
            while end < logits.len() && group[end] == group[start] {
                end += 1;
            }
            let s: f64 = logits[start..end].iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "group sum {s}");
            start = end;
        }
    }

    #[test]
    fn single_neighbor_weight_is_exactly_one() {
        let mut logits = vec![3.7];
        grouped_softmax(&mut logits, &[0]);
        assert_eq!(logits[0], 1.0);
        // A singleton group inside a longer list.
        let mut logits = vec![1.0, 2.0, -5.0];
        grouped_softmax(&mut logits, &[0, 0, 1]);
        assert_eq!(logits[2], 1.0);
        assert!((logits[0] + logits[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gates_freeze_coordinates() {
        let (pep, rec, mut params) = toy_setup(20);
        params.f_x_intra = params.f_x_intra.clone().zero_final_layer();
        params.f_x_inter = params.f_x_inter.clone().zero_final_layer();
        let state = init_state(&pep, &rec, &params).unwrap();
        let graph = build_graph(&state.x[..pep.len()], &state.x[pep.len()..], params.cfg.cutoff);
        let next = esgn_layer(&state, &graph, &params).unwrap();
        assert_eq!(next.x, state.x);
        assert_ne!(next.h, state.h);
    }

    #[test]
    fn receptor_coordinates_never_move() {
        let (pep, rec, params) = toy_setup(30);
        let out = esgn_forward(&pep, &rec, &params).unwrap();
        for (k, r) in rec.iter().enumerate() {
            assert_eq!(out.x[pep.len() + k], r.pos);
        }
        assert_eq!(out.layer, params.cfg.layers);
    }

    #[test]
    fn isolated_node_keeps_coordinates_updates_features() {
        let mut pep = points_from(&[Vector3::zeros()], 40);
        pep[0].normal = Vector3::z();
        let params = EsgnParams::init(EsgnConfig::default(), &mut substream(41, "esgn-init"));
        let state = init_state(&pep, &[], &params).unwrap();
        let graph = build_graph(&state.x, &[], params.cfg.cutoff);
        assert!(graph.edges_pep.is_empty());
        let next = esgn_layer(&state, &graph, &params).unwrap();
        assert_eq!(next.x[0], state.x[0]);
        assert_ne!(next.h[0], state.h[0]);
    }

    fn transform_points(
        pts: &[SurfacePoint],
        rot: &Rotation,
        shift: &Vector3<f64>,
    ) -> Vec<SurfacePoint> {
        pts.iter()
            .map(|p| SurfacePoint {
                pos: rot.apply(&p.pos) + shift,
                normal: rot.apply(&p.normal),
                ..p.clone()
            })
            .collect()
    }

    #[test]
    fn forward_is_se3_equivariant() {
        let (pep, rec, params) = toy_setup(50);
        let base = esgn_forward(&pep, &rec, &params).unwrap();
        let mut rng = substream(51, "esgn-eq");
        for _ in 0..20 {
            let rot = sample_uniform_rotation(&mut rng);
            let shift = Vector3::new(
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
            );
            let out = esgn_forward(
                &transform_points(&pep, &rot, &shift),
                &transform_points(&rec, &rot, &shift),
                &params,
            )
            .unwrap();
            for i in 0..base.x.len() {
                let dx = (out.x[i] - (rot.apply(&base.x[i]) + shift)).norm();
                assert!(dx < 1e-7, "coordinate deviation {dx}");
                let dh = (&out.h[i] - &base.h[i]).iter().map(|v| v.abs()).fold(0.0, f64::max);
                assert!(dh < 1e-7, "feature deviation {dh}");
            }
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let (pep, rec, params) = toy_setup(60);
        let a = esgn_forward(&pep, &rec, &params).unwrap();
        let b = esgn_forward(&pep, &rec, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn far_cluster_cannot_influence_near_outputs() {
        let params = EsgnParams::init(
            EsgnConfig { layers: 3, ..EsgnConfig::default() },
            &mut substream(70, "esgn-init"),
        );
        let near_coords = random_cloud(8, 3.0, 71, "esgn-near");
        let far_offset = Vector3::new(20.0 * params.cfg.cutoff, 0.0, 0.0);
        let far_coords: Vec<Vector3<f64>> = random_cloud(8, 3.0, 72, "esgn-far")
            .into_iter()
            .map(|c| c + far_offset)
            .collect();
        let mut pep: Vec<SurfacePoint> = points_from(&near_coords, 73);
        pep.extend(points_from(&far_coords, 74));
        let rec = points_from(&random_cloud(6, 3.0, 75, "esgn-recn"), 76);

        let base = esgn_forward(&pep, &rec, &params).unwrap();
        // Flip every far-cluster chemistry label and rerun.
        let mut flipped = pep.clone();
        for p in flipped[8..].iter_mut() {
            p.upsilon = FephLabel::from_index((p.upsilon.index() + 1) % 3).unwrap();
        }
        let out = esgn_forward(&flipped, &rec, &params).unwrap();
        for i in 0..8 {
            let dx = (out.x[i] - base.x[i]).norm();
            let dh = (&out.h[i] - &base.h[i]).iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(dx < 1e-9 && dh < 1e-9, "near node {i} moved: dx={dx} dh={dh}");
        }
    }

    #[test]
    fn squared_distance_flag_changes_rbf_only_as_documented() {
        let cfg = EsgnConfig::default();
        let sq = EsgnConfig { squared_distance: true, ..EsgnConfig::default() };
        let xi = Vector3::zeros();
        let xj = Vector3::new(1.5, 0.0, 0.0);
        let n = Vector3::z();
        let a = edge_features(&xi, &n, &xj, &n, &cfg).unwrap();
        let b = edge_features(&xi, &n, &xj, &n, &sq).unwrap();
        assert_ne!(a.rbf, b.rbf);
        assert_eq!(a.sbf_i, b.sbf_i);
        assert_eq!(a.sbf_j, b.sbf_j);
    }
}
