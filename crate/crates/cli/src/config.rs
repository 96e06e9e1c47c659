//! The flat key=value run configuration shared by every subcommand.
//!
//! Precedence: built-in defaults, then `--config` file, then repeated
//! `--set key=value`, then the named flags. The effective configuration is
//! echoed into the output directory as `config.echo`; feeding that file back
//! via `--config` reproduces the run.

use crate::errors::CliError;
use mmflow::nn::ConditionLabel;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Pos,
    So3,
    Torus,
    Cat,
    Con,
    Joint,
}

impl Flow {
    pub fn parse(s: &str) -> Option<Flow> {
        match s {
            "pos" => Some(Flow::Pos),
            "so3" => Some(Flow::So3),
            "torus" => Some(Flow::Torus),
            "cat" => Some(Flow::Cat),
            "con" => Some(Flow::Con),
            "joint" => Some(Flow::Joint),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Flow::Pos => "pos",
            Flow::So3 => "so3",
            Flow::Torus => "torus",
            Flow::Cat => "cat",
            Flow::Con => "con",
            Flow::Joint => "joint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondChoice {
    Null,
    Cyclic,
    Disulfide,
}

impl CondChoice {
    pub fn parse(s: &str) -> Option<CondChoice> {
        match s {
            "null" => Some(CondChoice::Null),
            "cyclic" => Some(CondChoice::Cyclic),
            "disulfide" => Some(CondChoice::Disulfide),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CondChoice::Null => "null",
            CondChoice::Cyclic => "cyclic",
            CondChoice::Disulfide => "disulfide",
        }
    }

    pub fn label(&self) -> ConditionLabel {
        match self {
            CondChoice::Null => ConditionLabel::Null,
            CondChoice::Cyclic => ConditionLabel::Cyclic,
            CondChoice::Disulfide => ConditionLabel::Disulfide,
        }
    }
}

/// Which intermediate states `sample` should write.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Off,
    /// Every step: `steps + 1` frames including the prior draw.
    All,
    /// Frames nearest to the requested times in `[0, 1]`.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub flow: Flow,
    pub condition: CondChoice,
    pub trajectory: Trajectory,
    pub steps: usize,
    pub iters: usize,
    pub batch: usize,
    pub log_every: usize,
    pub lr: f64,
    pub p_uncond: f64,
    pub guidance: f64,
    pub lambda_pos: f64,
    pub lambda_ori: f64,
    pub lambda_cat: f64,
    pub lambda_con: f64,
    pub lambda_str: f64,
    pub hidden: Vec<usize>,
    pub states: usize,
    pub ring_radius: f64,
    pub ring_sigma: f64,
    pub spread: f64,
    pub n_samples: usize,
    pub n_residues: usize,
    pub probe: f64,
    pub surface_points: usize,
    pub cutoff: f64,
    pub k_rbf: usize,
    pub l_sph: usize,
    pub k_sph: usize,
    pub spacing: f64,
    pub exact_target: Option<[f64; 3]>,
    pub data: String,
    pub checkpoint: String,
    pub samples: String,
    pub reference: String,
    pub out: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            flow: Flow::Pos,
            condition: CondChoice::Null,
            trajectory: Trajectory::Off,
            steps: 200,
            iters: 2000,
            batch: 64,
            log_every: 100,
            lr: 5e-4,
            p_uncond: 0.1,
            guidance: 0.0,
            lambda_pos: 0.2,
            lambda_ori: 0.2,
            lambda_cat: 1.0,
            lambda_con: 1.0,
            lambda_str: 1.0,
            hidden: vec![64, 64],
            states: 21,
            ring_radius: 1.0,
            ring_sigma: 0.1,
            spread: 0.1,
            n_samples: 1024,
            n_residues: 8,
            probe: 1.4,
            surface_points: 512,
            cutoff: 4.0,
            k_rbf: 16,
            l_sph: 4,
            k_sph: 4,
            spacing: 1.0,
            exact_target: None,
            data: String::new(),
            checkpoint: String::new(),
            samples: String::new(),
            reference: String::new(),
            out: "out".to_string(),
        }
    }
}

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::Config(format!("key `{key}`: value `{value}` {why}"))
}

fn p_u64(key: &str, v: &str) -> Result<u64, CliError> {
    v.parse().map_err(|_| bad(key, v, "is not an unsigned integer"))
}

fn p_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| bad(key, v, "is not an unsigned integer"))
}

fn p_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| bad(key, v, "is not a number"))?;
    if !x.is_finite() {
        return Err(bad(key, v, "is not finite"));
    }
    Ok(x)
}

fn p_f64_min(key: &str, v: &str, min: f64, strict: bool) -> Result<f64, CliError> {
    let x = p_f64(key, v)?;
    if strict && x <= min {
        return Err(bad(key, v, &format!("must be > {min}")));
    }
    if !strict && x < min {
        return Err(bad(key, v, &format!("must be >= {min}")));
    }
    Ok(x)
}

fn p_usize_min(key: &str, v: &str, min: usize) -> Result<usize, CliError> {
    let x = p_usize(key, v)?;
    if x < min {
        return Err(bad(key, v, &format!("must be >= {min}")));
    }
    Ok(x)
}

impl RunConfig {
    /// Applies one key=value override with range validation.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "seed" => self.seed = p_u64(key, value)?,
            "flow" => {
                self.flow = Flow::parse(value)
                    .ok_or_else(|| bad(key, value, "is not one of pos|so3|torus|cat|con|joint"))?
            }
            "condition" => {
                self.condition = CondChoice::parse(value)
                    .ok_or_else(|| bad(key, value, "is not one of null|cyclic|disulfide"))?
            }
            "trajectory" => self.trajectory = parse_trajectory(value)?,
            "steps" => self.steps = p_usize_min(key, value, 1)?,
            "iters" => self.iters = p_usize(key, value)?,
            "batch" => self.batch = p_usize_min(key, value, 1)?,
            "log_every" => self.log_every = p_usize_min(key, value, 1)?,
            "lr" => self.lr = p_f64_min(key, value, 0.0, true)?,
            "p_uncond" => {
                let x = p_f64(key, value)?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(bad(key, value, "must lie in [0, 1]"));
                }
                self.p_uncond = x;
            }
            "guidance" => self.guidance = p_f64_min(key, value, 0.0, false)?,
            "lambda_pos" => self.lambda_pos = p_f64_min(key, value, 0.0, false)?,
            "lambda_ori" => self.lambda_ori = p_f64_min(key, value, 0.0, false)?,
            "lambda_cat" => self.lambda_cat = p_f64_min(key, value, 0.0, false)?,
            "lambda_con" => self.lambda_con = p_f64_min(key, value, 0.0, false)?,
            "lambda_str" => self.lambda_str = p_f64_min(key, value, 0.0, false)?,
            "hidden" => {
                let mut sizes = Vec::new();
                for part in value.split(',') {
                    sizes.push(p_usize_min(key, part.trim(), 1)?);
                }
                if sizes.is_empty() {
                    return Err(bad(key, value, "needs at least one layer size"));
                }
                self.hidden = sizes;
            }
            "states" => self.states = p_usize_min(key, value, 2)?,
            "ring_radius" => self.ring_radius = p_f64_min(key, value, 0.0, true)?,
            "ring_sigma" => self.ring_sigma = p_f64_min(key, value, 0.0, true)?,
            "spread" => self.spread = p_f64_min(key, value, 0.0, true)?,
            "n_samples" => self.n_samples = p_usize_min(key, value, 1)?,
            "n_residues" => self.n_residues = p_usize_min(key, value, 1)?,
            "probe" => self.probe = p_f64_min(key, value, 0.0, false)?,
            "surface_points" => self.surface_points = p_usize_min(key, value, 1)?,
            "cutoff" => self.cutoff = p_f64_min(key, value, 0.0, true)?,
            "k_rbf" => self.k_rbf = p_usize_min(key, value, 2)?,
            "l_sph" => self.l_sph = p_usize_min(key, value, 1)?,
            "k_sph" => self.k_sph = p_usize_min(key, value, 1)?,
            "spacing" => self.spacing = p_f64_min(key, value, 0.0, true)?,
            "exact_target" => {
                if value.is_empty() {
                    self.exact_target = None;
                } else {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 3 {
                        return Err(bad(key, value, "needs exactly three coordinates"));
                    }
                    let mut t = [0.0; 3];
                    for (slot, part) in t.iter_mut().zip(&parts) {
                        *slot = p_f64(key, part.trim())?;
                    }
                    self.exact_target = Some(t);
                }
            }
            "data" => self.data = value.to_string(),
            "checkpoint" => self.checkpoint = value.to_string(),
            "samples" => self.samples = value.to_string(),
            "reference" => self.reference = value.to_string(),
            "out" => self.out = value.to_string(),
            _ => return Err(CliError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Reads a flat key=value file, skipping blank lines and `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected key=value, found `{line}`",
                    path.display(),
                    n + 1
                ))
            })?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// The effective configuration as a canonical key=value listing.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let hidden =
            self.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",");
        let trajectory = match &self.trajectory {
            Trajectory::Off => String::new(),
            Trajectory::All => "all".to_string(),
            Trajectory::Times(ts) => {
                ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        let exact = match &self.exact_target {
            None => String::new(),
            Some([x, y, z]) => format!("{x},{y},{z}"),
        };
        let _ = writeln!(s, "batch={}", self.batch);
        let _ = writeln!(s, "checkpoint={}", self.checkpoint);
        let _ = writeln!(s, "condition={}", self.condition.name());
        let _ = writeln!(s, "cutoff={}", self.cutoff);
        let _ = writeln!(s, "data={}", self.data);
        let _ = writeln!(s, "exact_target={exact}");
        let _ = writeln!(s, "flow={}", self.flow.name());
        let _ = writeln!(s, "guidance={}", self.guidance);
        let _ = writeln!(s, "hidden={hidden}");
        let _ = writeln!(s, "iters={}", self.iters);
        let _ = writeln!(s, "k_rbf={}", self.k_rbf);
        let _ = writeln!(s, "k_sph={}", self.k_sph);
        let _ = writeln!(s, "l_sph={}", self.l_sph);
        let _ = writeln!(s, "lambda_cat={}", self.lambda_cat);
        let _ = writeln!(s, "lambda_con={}", self.lambda_con);
        let _ = writeln!(s, "lambda_ori={}", self.lambda_ori);
        let _ = writeln!(s, "lambda_pos={}", self.lambda_pos);
        let _ = writeln!(s, "lambda_str={}", self.lambda_str);
        let _ = writeln!(s, "log_every={}", self.log_every);
        let _ = writeln!(s, "lr={}", self.lr);
        let _ = writeln!(s, "n_residues={}", self.n_residues);
        let _ = writeln!(s, "n_samples={}", self.n_samples);
        let _ = writeln!(s, "out={}", self.out);
        let _ = writeln!(s, "p_uncond={}", self.p_uncond);
        let _ = writeln!(s, "probe={}", self.probe);
        let _ = writeln!(s, "reference={}", self.reference);
        let _ = writeln!(s, "ring_radius={}", self.ring_radius);
        let _ = writeln!(s, "ring_sigma={}", self.ring_sigma);
        let _ = writeln!(s, "samples={}", self.samples);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "spacing={}", self.spacing);
        let _ = writeln!(s, "spread={}", self.spread);
        let _ = writeln!(s, "states={}", self.states);
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "surface_points={}", self.surface_points);
        let _ = writeln!(s, "trajectory={trajectory}");
        s
    }

    pub fn weights(&self) -> mmflow::nn::loss::LossWeights {
        mmflow::nn::loss::LossWeights {
            pos: self.lambda_pos,
            ori: self.lambda_ori,
            cat: self.lambda_cat,
            con: self.lambda_con,
            structural: self.lambda_str,
        }
    }
}

fn parse_trajectory(value: &str) -> Result<Trajectory, CliError> {
    match value {
        "" => Ok(Trajectory::Off),
        "all" => Ok(Trajectory::All),
        list => {
            let mut times = Vec::new();
            for part in list.split(',') {
                let t = p_f64("trajectory", part.trim())?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(bad("trajectory", part, "must lie in [0, 1]"));
                }
                times.push(t);
            }
            Ok(Trajectory::Times(times))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_rejected() {
        let mut c = RunConfig::default();
        let e = c.apply("no_such_key", "1").unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
        assert!(e.to_string().contains("no_such_key"));
    }

    #[test]
    fn range_violations_are_rejected() {
        let mut c = RunConfig::default();
        assert!(c.apply("p_uncond", "1.5").is_err());
        assert!(c.apply("lr", "0").is_err());
        assert!(c.apply("steps", "0").is_err());
        assert!(c.apply("states", "1").is_err());
        assert!(c.apply("flow", "warp").is_err());
        assert!(c.apply("trajectory", "0.5,2.0").is_err());
        assert!(c.apply("seed", "-1").is_err());
    }

    #[test]
    fn echo_round_trips_to_the_same_config() {
        let mut c = RunConfig::default();
        c.apply("seed", "7").unwrap();
        c.apply("flow", "so3").unwrap();
        c.apply("hidden", "32, 16").unwrap();
        c.apply("trajectory", "0.25,0.5").unwrap();
        c.apply("exact_target", "1.5,-2,0.25").unwrap();
        c.apply("lr", "0.001").unwrap();
        let echo = c.echo();
        let mut back = RunConfig::default();
        for line in echo.lines() {
            let (k, v) = line.split_once('=').unwrap();
            back.apply(k, v).unwrap();
        }
        assert_eq!(c, back);
        assert_eq!(echo, back.echo());
    }
}
