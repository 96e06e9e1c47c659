//! `train`: flow-matching regression of the selected family on a synth
//! dataset, with classifier-free condition dropout, clipped Adam and the
//! plateau learning-rate schedule.

use crate::config::{Flow, RunConfig};
use crate::dataset::{
    load_angles, load_pairs, load_pos, load_rotations, load_symbols, rotation_row_major,
    PosDataset,
};
use crate::errors::CliError;
use crate::fsio::write_atomic;
use mmflow::flow::discrete::CategoricalState;
use mmflow::flow::linear::{linear_path, sample_gaussian_prior, torus_path, torus_target, SoftType, TorusAngle};
use mmflow::flow::so3::{so3_path, T_MAX};
use mmflow::geom3d::{sample_uniform_rotation, Rotation};
use mmflow::nn::adam::{AdamHyper, AdamState, PlateauScheduler};
use mmflow::nn::checkpoint::encode_checkpoint;
use mmflow::nn::loss::{cfg_train_step, CatSample, FieldSample, ModelSet, TrainBatch};
use mmflow::nn::ConditionLabel;
use mmflow::rng::substream;
use mmflow::surface::io::read_atoms;
use mmflow::surface::{build_surface, point_frames, SurfacePoint};
use mmflow::toy::MULTINOMIAL_SYMBOLS;
use ndarray::Array1;
use rand::Rng;
use std::fmt::Write as _;
use std::f64::consts::TAU;
use std::path::Path;

struct SurfaceData {
    points: Vec<SurfacePoint>,
    /// `(point index, orientation frame)` for points with a valid frame.
    frames: Vec<(usize, Rotation)>,
}

/// The datasets backing each trained family. Only the fields the selected
/// flow needs are populated.
struct Sources {
    pos: Option<PosDataset>,
    pos_groups: Vec<Vec<usize>>,
    rots: Option<Vec<Rotation>>,
    angles: Option<Vec<[f64; 4]>>,
    symbols: Option<Vec<usize>>,
    cons: Option<Vec<Array1<f64>>>,
    surface: Option<SurfaceData>,
}

impl Sources {
    fn empty() -> Self {
        Sources {
            pos: None,
            pos_groups: Vec::new(),
            rots: None,
            angles: None,
            symbols: None,
            cons: None,
            surface: None,
        }
    }

    fn set_pos(&mut self, d: PosDataset) {
        let mut groups = vec![Vec::new(); 3];
        for (i, &lab) in d.labels.iter().enumerate() {
            groups[lab].push(i);
        }
        self.pos_groups = groups;
        self.pos = Some(d);
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let states = super::effective_states(cfg);
    let out = super::out_dir(cfg)?;
    let data = super::require_path(&cfg.data, "data=PATH (a synth file or directory)")?;

    let mut init_rng = substream(cfg.seed, "init");
    let mut set = ModelSet::new(&cfg.hidden, states, &mut init_rng);
    let mut train_rng = substream(cfg.seed, "train");
    let src = load_sources(cfg, data, states, &mut train_rng)?;

    let mut adam = AdamState::new(&set.tensor_lens());
    let mut hyper = AdamHyper { lr: cfg.lr, ..AdamHyper::default() };
    let mut sched = PlateauScheduler::new(cfg.lr);
    let weights = cfg.weights();

    let mut log = String::from("# iter,total,pos,ori,cat,con,str,lr\n");
    for it in 0..cfg.iters {
        let (batch, label) = build_batch(cfg, &src, states, &mut train_rng)?;
        let outcome = cfg_train_step(
            &mut set,
            &batch,
            &weights,
            label,
            cfg.p_uncond,
            &mut adam,
            &hyper,
            &mut train_rng,
        )?;
        if !outcome.loss.is_finite() {
            return Err(CliError::Numeric(format!(
                "loss became non-finite at iteration {}",
                it + 1
            )));
        }
        if (it + 1) % cfg.log_every == 0 {
            let b = &outcome.breakdown;
            let _ = writeln!(
                log,
                "{},{},{},{},{},{},{},{}",
                it + 1,
                outcome.loss,
                b.pos,
                b.ori,
                b.cat,
                b.con,
                b.structural,
                hyper.lr
            );
            hyper.lr = sched.on_eval(outcome.loss);
        }
    }

    write_atomic(&out.join("model.ckpt"), &encode_checkpoint(&set.to_tensors()))?;
    write_atomic(&out.join("loss.csv"), log.as_bytes())?;
    super::write_echo(cfg, &out)
}

fn load_sources<R: Rng>(
    cfg: &RunConfig,
    data: &Path,
    states: usize,
    rng: &mut R,
) -> Result<Sources, CliError> {
    let mut src = Sources::empty();
    if data.is_file() {
        match cfg.flow {
            Flow::Pos => src.set_pos(load_pos(data)?),
            Flow::So3 => src.rots = Some(load_rotations(data)?),
            Flow::Torus => src.angles = Some(load_angles(data)?),
            Flow::Cat => src.symbols = Some(load_symbols(data, states)?),
            Flow::Con => src.cons = Some(load_pairs(data)?),
            Flow::Joint => {
                return Err(CliError::Config(
                    "joint training expects data=DIR with the full synth output".into(),
                ))
            }
        }
        return Ok(src);
    }
    if !data.is_dir() {
        return Err(CliError::Data(format!(
            "{}: no such file or directory",
            data.display()
        )));
    }
    match cfg.flow {
        Flow::Pos => src.set_pos(load_pos(&data.join("gauss2d.txt"))?),
        Flow::So3 => src.rots = Some(load_rotations(&data.join("so3.txt"))?),
        Flow::Torus => src.angles = Some(load_angles(&data.join("torus.txt"))?),
        Flow::Cat => src.symbols = Some(load_symbols(&data.join("cat.txt"), states)?),
        Flow::Con => src.cons = Some(load_pairs(&data.join("con.txt"))?),
        Flow::Joint => {
            src.set_pos(load_pos(&data.join("gauss2d.txt"))?);
            src.rots = Some(load_rotations(&data.join("so3.txt"))?);
            src.angles = Some(load_angles(&data.join("torus.txt"))?);
            src.symbols =
                Some(load_symbols(&data.join("cat.txt"), MULTINOMIAL_SYMBOLS + 1)?);
            let atoms = read_atoms(&data.join("atoms.txt"))?;
            let points = build_surface(&atoms, cfg.probe, cfg.surface_points, rng)?;
            let fs = point_frames(&points, &atoms)?;
            let frames = fs.kept.iter().copied().zip(fs.frames.iter().cloned()).collect();
            src.surface = Some(SurfaceData { points, frames });
        }
    }
    Ok(src)
}

fn build_batch<R: Rng>(
    cfg: &RunConfig,
    src: &Sources,
    states: usize,
    rng: &mut R,
) -> Result<(TrainBatch, ConditionLabel), CliError> {
    let mut batch = TrainBatch::default();
    let mut label = cfg.condition.label();
    match cfg.flow {
        Flow::Pos => {
            let d = src.pos.as_ref().expect("pos dataset loaded");
            let g = pick_group(&src.pos_groups, d.points.len(), rng);
            label = super::label_from_index(g);
            for _ in 0..cfg.batch {
                let idx = src.pos_groups[g][rng.gen_range(0..src.pos_groups[g].len())];
                batch.pos.push(linear_sample(&d.points[idx], rng)?);
            }
        }
        Flow::So3 => {
            let rots = src.rots.as_ref().expect("rotation dataset loaded");
            for _ in 0..cfg.batch {
                let r1 = &rots[rng.gen_range(0..rots.len())];
                batch.ori.push(so3_sample(r1, rng)?);
            }
        }
        Flow::Torus => {
            let angles = src.angles.as_ref().expect("angle dataset loaded");
            for _ in 0..cfg.batch {
                let x1 = &angles[rng.gen_range(0..angles.len())];
                batch.str_tor.push(torus_field_sample(x1, rng));
            }
        }
        Flow::Cat => {
            let syms = src.symbols.as_ref().expect("symbol dataset loaded");
            for _ in 0..cfg.batch {
                let s = syms[rng.gen_range(0..syms.len())];
                batch.cat.push(cat_sample(s, states, rng));
            }
        }
        Flow::Con => {
            let cons = src.cons.as_ref().expect("feature dataset loaded");
            for _ in 0..cfg.batch {
                let x1 = &cons[rng.gen_range(0..cons.len())];
                batch.con.push(linear_sample(x1, rng)?);
            }
        }
        Flow::Joint => {
            let surf = src.surface.as_ref().expect("surface dataset loaded");
            for _ in 0..cfg.batch {
                let p = &surf.points[rng.gen_range(0..surf.points.len())];
                let x1 = Array1::from(vec![p.pos.x, p.pos.y, p.pos.z]);
                batch.pos.push(linear_sample(&x1, rng)?);
            }
            for _ in 0..cfg.batch {
                let (_, frame) = &surf.frames[rng.gen_range(0..surf.frames.len())];
                batch.ori.push(so3_sample(frame, rng)?);
            }
            for _ in 0..cfg.batch {
                let p = &surf.points[rng.gen_range(0..surf.points.len())];
                batch.cat.push(cat_sample(p.upsilon.index(), 4, rng));
            }
            for _ in 0..cfg.batch {
                let p = &surf.points[rng.gen_range(0..surf.points.len())];
                let x1 = Array1::from(vec![p.tau[0], p.tau[1]]);
                batch.con.push(linear_sample(&x1, rng)?);
            }
            let d = src.pos.as_ref().expect("structure position dataset loaded");
            for _ in 0..cfg.batch {
                let idx = rng.gen_range(0..d.points.len());
                batch.str_pos.push(linear_sample(&d.points[idx], rng)?);
            }
            let rots = src.rots.as_ref().expect("structure rotation dataset loaded");
            for _ in 0..cfg.batch {
                let r1 = &rots[rng.gen_range(0..rots.len())];
                batch.str_ori.push(so3_sample(r1, rng)?);
            }
            let angles = src.angles.as_ref().expect("torsion dataset loaded");
            for _ in 0..cfg.batch {
                let x1 = &angles[rng.gen_range(0..angles.len())];
                batch.str_tor.push(torus_field_sample(x1, rng));
            }
            let syms = src.symbols.as_ref().expect("type dataset loaded");
            for _ in 0..cfg.batch {
                let s = syms[rng.gen_range(0..syms.len())];
                let x1 = SoftType::encode(s).as_array();
                batch.str_typ.push(linear_sample(&x1, rng)?);
            }
        }
    }
    Ok((batch, label))
}

/// Size-weighted choice among the non-empty label groups.
fn pick_group<R: Rng>(groups: &[Vec<usize>], total: usize, rng: &mut R) -> usize {
    let mut k = rng.gen_range(0..total);
    for (g, members) in groups.iter().enumerate() {
        if k < members.len() {
            return g;
        }
        k -= members.len();
    }
    unreachable!("group sizes sum to the dataset size")
}

fn linear_sample<R: Rng>(x1: &Array1<f64>, rng: &mut R) -> Result<FieldSample, CliError> {
    let x0 = sample_gaussian_prior(x1.len(), rng);
    let t = rng.gen::<f64>();
    let lp = linear_path(&x0, x1, t)?;
    Ok(FieldSample { state: lp.xt, t, target: lp.target_field })
}

fn so3_sample<R: Rng>(r1: &Rotation, rng: &mut R) -> Result<FieldSample, CliError> {
    for _ in 0..64 {
        let r0 = sample_uniform_rotation(rng);
        let t = rng.gen::<f64>() * T_MAX;
        if let Ok(s) = so3_path(&r0, r1, t) {
            let v = s.target_field;
            return Ok(FieldSample {
                state: Array1::from(rotation_row_major(&s.rt).to_vec()),
                t,
                target: Array1::from(vec![v.x, v.y, v.z]),
            });
        }
    }
    Err(CliError::Numeric(
        "could not draw an SO(3) path clear of the cut locus".into(),
    ))
}

fn torus_field_sample<R: Rng>(x1: &[f64; 4], rng: &mut R) -> FieldSample {
    let t = rng.gen::<f64>();
    let mut state = Array1::zeros(8);
    let mut target = Array1::zeros(4);
    for i in 0..4 {
        let c0 = TorusAngle::new(rng.gen::<f64>() * TAU);
        let c1 = TorusAngle::new(x1[i]);
        let ct = torus_path(c0, c1, t).value();
        state[2 * i] = ct.sin();
        state[2 * i + 1] = ct.cos();
        target[i] = torus_target(c0, c1);
    }
    FieldSample { state, t, target }
}

fn cat_sample<R: Rng>(symbol: usize, states: usize, rng: &mut R) -> CatSample {
    let x1 = CategoricalState::new(symbol, states);
    let t = rng.gen::<f64>();
    let xt = if rng.gen::<f64>() < t { x1.clone() } else { CategoricalState::mask(states) };
    CatSample { xt, t, x1 }
}
