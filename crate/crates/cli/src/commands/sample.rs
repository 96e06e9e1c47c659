//! `sample`: integrates the learned (or analytically exact) field from the
//! prior with the configured number of Euler steps, optionally writing
//! intermediate trajectory frames.

use crate::config::{Flow, RunConfig, Trajectory};
use crate::dataset::rotation_row_major;
use crate::errors::CliError;
use crate::fsio::{format_table, write_atomic};
use mmflow::flow::discrete::simulate_denoising;
use mmflow::flow::linear::{euler_step, sample_gaussian_prior};
use mmflow::flow::so3::{so3_euler_step, REORTHONORMALIZE_EVERY};
use mmflow::geom3d::sample_uniform_rotation;
use mmflow::nn::checkpoint::read_checkpoint;
use mmflow::nn::loss::{cfg_sample_field, ModelSet};
use mmflow::nn::{ConditionLabel, FieldModel};
use mmflow::rng::substream;
use mmflow::surface::io::format_surface;
use mmflow::surface::{FephLabel, SurfacePoint};
use nalgebra::Vector3;
use ndarray::Array1;
use rand::Rng;
use std::f64::consts::TAU;
use std::path::Path;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let states = super::effective_states(cfg);
    let out = super::out_dir(cfg)?;
    let ckpt = super::require_path(&cfg.checkpoint, "checkpoint=PATH")?;
    let mut set = ModelSet::new(&cfg.hidden, states, &mut substream(cfg.seed, "init"));
    set.load_tensors(&read_checkpoint(ckpt)?)?;
    let mut rng = substream(cfg.seed, "sample");
    let record = record_steps(&cfg.trajectory, cfg.steps);

    match cfg.flow {
        Flow::Pos => sample_linear(cfg, set.family("pos"), 3, "x y z", &out, &record, &mut rng)?,
        Flow::Con => {
            sample_linear(cfg, set.family("con"), 2, "tau0 tau1", &out, &record, &mut rng)?
        }
        Flow::Torus => sample_torus(cfg, set.family("str_tor"), &out, &record, &mut rng)?,
        Flow::So3 => sample_so3(cfg, set.family("ori"), &out, &record, &mut rng)?,
        Flow::Cat => sample_cat(cfg, set.family("cat"), states, &out, &mut rng)?,
        Flow::Joint => sample_joint(cfg, &set, &out, &record, &mut rng)?,
    }
    super::write_echo(cfg, &out)
}

/// The step indices whose states should be written as trajectory frames.
fn record_steps(tr: &Trajectory, n: usize) -> Vec<usize> {
    match tr {
        Trajectory::Off => Vec::new(),
        Trajectory::All => (0..=n).collect(),
        Trajectory::Times(ts) => {
            let mut v: Vec<usize> =
                ts.iter().map(|t| (t * n as f64).round() as usize).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    }
}

/// Conditional field evaluation with classifier-free guidance when `w > 0`.
fn guided(
    m: &FieldModel,
    state: &Array1<f64>,
    t: f64,
    label: ConditionLabel,
    w: f64,
) -> Result<Array1<f64>, CliError> {
    let vc = m.eval(state, t, label)?;
    if w > 0.0 {
        let vn = m.eval(state, t, ConditionLabel::Null)?;
        Ok(cfg_sample_field(&vc, &vn, w)?)
    } else {
        Ok(vc)
    }
}

struct FrameRecorder<'a> {
    record: &'a [usize],
    header: String,
    frames: Vec<Vec<Vec<f64>>>,
}

impl<'a> FrameRecorder<'a> {
    fn new(record: &'a [usize], header: &str) -> Self {
        FrameRecorder {
            record,
            header: header.to_string(),
            frames: vec![Vec::new(); record.len()],
        }
    }

    fn push(&mut self, step: usize, row: Vec<f64>) {
        if let Ok(i) = self.record.binary_search(&step) {
            self.frames[i].push(row);
        }
    }

    fn write(&self, out: &Path, n_steps: usize) -> Result<(), CliError> {
        for (i, &step) in self.record.iter().enumerate() {
            let t = step as f64 / n_steps as f64;
            let header = format!("{} (step {step} of {n_steps}, t={t})", self.header);
            write_atomic(
                &out.join(format!("traj_{step:04}.txt")),
                format_table(&header, &self.frames[i]).as_bytes(),
            )?;
        }
        Ok(())
    }
}

fn sample_linear<R: Rng>(
    cfg: &RunConfig,
    model: &FieldModel,
    dim: usize,
    header: &str,
    out: &Path,
    record: &[usize],
    rng: &mut R,
) -> Result<(), CliError> {
    let n = cfg.steps;
    let label = cfg.condition.label();
    let exact = if dim == 3 { cfg.exact_target } else { None };
    let mut rows = Vec::with_capacity(cfg.n_samples);
    let mut rec = FrameRecorder::new(record, header);
    for _ in 0..cfg.n_samples {
        let mut x = sample_gaussian_prior(dim, rng);
        rec.push(0, x.to_vec());
        for k in 0..n {
            let t = k as f64 / n as f64;
            let v = match exact {
                Some(tgt) => {
                    let target = Array1::from(tgt.to_vec());
                    (&target - &x) / (1.0 - t)
                }
                None => guided(model, &x, t, label, cfg.guidance)?,
            };
            x = euler_step(&x, &v, 1.0 / n as f64)?;
            rec.push(k + 1, x.to_vec());
        }
        rows.push(x.to_vec());
    }
    write_atomic(&out.join("samples.txt"), format_table(header, &rows).as_bytes())?;
    rec.write(out, n)
}

fn sample_torus<R: Rng>(
    cfg: &RunConfig,
    model: &FieldModel,
    out: &Path,
    record: &[usize],
    rng: &mut R,
) -> Result<(), CliError> {
    let n = cfg.steps;
    let label = cfg.condition.label();
    let header = "chi1 chi2 chi3 chi4";
    let mut rows = Vec::with_capacity(cfg.n_samples);
    let mut rec = FrameRecorder::new(record, header);
    for _ in 0..cfg.n_samples {
        let mut chi: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * TAU).collect();
        rec.push(0, chi.clone());
        for k in 0..n {
            let t = k as f64 / n as f64;
            let mut state = Array1::zeros(8);
            for i in 0..4 {
                state[2 * i] = chi[i].sin();
                state[2 * i + 1] = chi[i].cos();
            }
            let v = guided(model, &state, t, label, cfg.guidance)?;
            for i in 0..4 {
                chi[i] = (chi[i] + v[i] / n as f64).rem_euclid(TAU);
            }
            rec.push(k + 1, chi.clone());
        }
        rows.push(chi);
    }
    write_atomic(&out.join("samples.txt"), format_table(header, &rows).as_bytes())?;
    rec.write(out, n)
}

fn sample_so3<R: Rng>(
    cfg: &RunConfig,
    model: &FieldModel,
    out: &Path,
    record: &[usize],
    rng: &mut R,
) -> Result<(), CliError> {
    let n = cfg.steps;
    let label = cfg.condition.label();
    let header = "rotation matrix, row-major";
    let mut rows = Vec::with_capacity(cfg.n_samples);
    let mut rec = FrameRecorder::new(record, header);
    for _ in 0..cfg.n_samples {
        let mut r = sample_uniform_rotation(rng);
        rec.push(0, rotation_row_major(&r).to_vec());
        for k in 0..n {
            let t = k as f64 / n as f64;
            let state = Array1::from(rotation_row_major(&r).to_vec());
            let v = guided(model, &state, t, label, cfg.guidance)?;
            let v3 = Vector3::new(v[0], v[1], v[2]);
            r = so3_euler_step(&r, &v3, 1.0 / n as f64);
            if (k + 1) % REORTHONORMALIZE_EVERY == 0 {
                r = r.orthonormalized();
            }
            rec.push(k + 1, rotation_row_major(&r).to_vec());
        }
        rows.push(rotation_row_major(&r).to_vec());
    }
    write_atomic(&out.join("samples.txt"), format_table(header, &rows).as_bytes())?;
    rec.write(out, n)
}

fn sample_cat<R: Rng>(
    cfg: &RunConfig,
    model: &FieldModel,
    states: usize,
    out: &Path,
    rng: &mut R,
) -> Result<(), CliError> {
    if cfg.trajectory != Trajectory::Off {
        return Err(CliError::Config(
            "trajectory output is not defined for the categorical flow".into(),
        ));
    }
    let label = cfg.condition.label();
    let mut rows = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        let (state, _) = simulate_denoising(
            states,
            cfg.steps,
            |xt, t| categorical_posterior(model, xt.value(), states, t, label),
            rng,
        )?;
        rows.push(vec![state.value() as f64]);
    }
    write_atomic(&out.join("samples.txt"), format_table("symbol", &rows).as_bytes())
}

/// Softmax of the model's logits: the denoising distribution over data
/// symbols given the current (possibly masked) state.
fn categorical_posterior(
    model: &FieldModel,
    current: usize,
    states: usize,
    t: f64,
    label: ConditionLabel,
) -> Vec<f64> {
    let mut onehot = Array1::zeros(states);
    onehot[current] = 1.0;
    let logits = model.eval(&onehot, t, label).expect("categorical model shape is fixed");
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

fn sample_joint<R: Rng>(
    cfg: &RunConfig,
    set: &ModelSet,
    out: &Path,
    record: &[usize],
    rng: &mut R,
) -> Result<(), CliError> {
    let n = cfg.steps;
    let label = cfg.condition.label();
    let mut points = Vec::with_capacity(cfg.surface_points);
    let mut rec = FrameRecorder::new(record, "x y z");
    for _ in 0..cfg.surface_points {
        let mut x = sample_gaussian_prior(3, rng);
        rec.push(0, x.to_vec());
        for k in 0..n {
            let t = k as f64 / n as f64;
            let v = guided(set.family("pos"), &x, t, label, cfg.guidance)?;
            x = euler_step(&x, &v, 1.0 / n as f64)?;
            rec.push(k + 1, x.to_vec());
        }

        let mut r = sample_uniform_rotation(rng);
        for k in 0..n {
            let t = k as f64 / n as f64;
            let state = Array1::from(rotation_row_major(&r).to_vec());
            let v = guided(set.family("ori"), &state, t, label, cfg.guidance)?;
            r = so3_euler_step(&r, &Vector3::new(v[0], v[1], v[2]), 1.0 / n as f64);
            if (k + 1) % REORTHONORMALIZE_EVERY == 0 {
                r = r.orthonormalized();
            }
        }

        let mut tau = sample_gaussian_prior(2, rng);
        for k in 0..n {
            let t = k as f64 / n as f64;
            let v = guided(set.family("con"), &tau, t, label, cfg.guidance)?;
            tau = euler_step(&tau, &v, 1.0 / n as f64)?;
        }

        let (cat_state, _) = simulate_denoising(
            4,
            n,
            |xt, t| categorical_posterior(set.family("cat"), xt.value(), 4, t, label),
            rng,
        )?;
        let upsilon = FephLabel::from_index(cat_state.value())
            .expect("denoised state is a data symbol");

        let m = r.matrix();
        points.push(SurfacePoint {
            pos: Vector3::new(x[0], x[1], x[2]),
            normal: Vector3::new(m[(0, 0)], m[(1, 0)], m[(2, 0)]),
            tau: [tau[0].clamp(-1.0, 1.0), tau[1].clamp(-1.0, 1.0)],
            upsilon,
        });
    }
    write_atomic(&out.join("sampled_surface.txt"), format_surface(&points).as_bytes())?;
    rec.write(out, n)
}
