use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attack::{
    attack_sequence, cross_task_depth_inputs, iterations_for, transfer_eval, AdversarialPair,
    AttackBudget, AttackKind, AttackModels, AttackSpec,
};
use crate::evaluation::{
    align_origin, depth_rmse, integrate_trajectory, parse_kitti_poses, ratio_report, rpe,
    write_kitti_poses, RpeReport, Trajectory,
};
use crate::geometry::{EulerPose, TransformSE3};
use crate::image::{DepthMap, ImagePair, ImageTensor};
use crate::losses::Intrinsics;
use crate::models::{predict_depth, PoseModel, ToyDepthModel, ToyPoseModel, ToyWeights};
use crate::{Error, Result};

use super::config::ExperimentConfig;
use super::io::{load_depth_sequence, load_sequence};

/// Bumped on any change to the record columns.
pub const SCHEMA_VERSION: u32 = 1;

/// Name of the attacked model in records.
pub const PRIMARY_MODEL: &str = "primary";

/// One row of `results.csv`: a (kind, epsilon, sequence, model) run.
///
/// Ratios are adversarial over clean and are left empty when the clean
/// value is zero (no ground truth to measure against).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub sequence_id: String,
    /// Attack kind, or `clean` for the baseline.
    pub attack: String,
    pub epsilon: f64,
    pub iterations: usize,
    pub model: String,
    /// `ok`, or the error that stopped the run.
    pub status: String,
    pub rpe_m: Option<f64>,
    pub rpe_deg: Option<f64>,
    pub clean_rpe_m: Option<f64>,
    pub clean_rpe_deg: Option<f64>,
    pub ratio_m: Option<f64>,
    pub ratio_deg: Option<f64>,
    /// Mean RMSE of adversarial depth against clean depth predictions.
    pub depth_rmse: Option<f64>,
    /// Adversarial over clean depth RMSE against ground-truth depth.
    pub depth_rmse_ratio: Option<f64>,
    /// Objective means over pairs, before and after the attack.
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
    pub max_perturbation: Option<f64>,
    pub stagnated_pairs: Option<usize>,
    /// Kept out of the result files so they stay byte-reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl ResultRecord {
    fn empty(cfg: &ExperimentConfig, attack: &str, epsilon: f64, iterations: usize, model: &str) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            sequence_id: cfg.sequence_id.clone(),
            attack: attack.to_string(),
            epsilon,
            iterations,
            model: model.to_string(),
            status: "ok".into(),
            rpe_m: None,
            rpe_deg: None,
            clean_rpe_m: None,
            clean_rpe_deg: None,
            ratio_m: None,
            ratio_deg: None,
            depth_rmse: None,
            depth_rmse_ratio: None,
            initial_loss: None,
            final_loss: None,
            max_perturbation: None,
            stagnated_pairs: None,
            wall_time_s: 0.0,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<ResultRecord>,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }

    /// 0 if every run succeeded, 2 if all failed, else 1.
    pub fn exit_code(&self) -> i32 {
        match self.failed() {
            0 => 0,
            n if n == self.records.len() => 2,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    sequence_id: &'a str,
    frames: usize,
    ground_truth: bool,
    attacks: Vec<&'static str>,
    epsilons: &'a [f64],
    failed_runs: usize,
    records: &'a [ResultRecord],
}

#[derive(Serialize)]
struct Timing<'a> {
    attack: &'a str,
    epsilon: f64,
    model: &'a str,
    wall_time_s: f64,
}

struct Evaluated {
    trajectory: Trajectory,
    report: RpeReport,
}

struct Context<'c> {
    cfg: &'c ExperimentConfig,
    frames: Vec<ImageTensor>,
    intrinsics: Intrinsics,
    pose: ToyPoseModel,
    depth: ToyDepthModel,
    transfer: Vec<(String, ToyPoseModel)>,
    reference: Trajectory,
    ground_truth: bool,
    gt_depth: Option<Vec<DepthMap>>,
    clean_depth: Vec<DepthMap>,
    clean: Vec<Evaluated>,
    pool: rayon::ThreadPool,
}

fn load_pose_model(path: Option<&Path>, seed: u64, frame: [usize; 3]) -> Result<ToyPoseModel> {
    let weights = match path {
        Some(p) => ToyWeights::load(p)?,
        None => ToyWeights::seeded_pose(seed, frame[0], frame[1]),
    };
    let model = ToyPoseModel::new(weights)?;
    if model.input_shape() != Some(frame) {
        return Err(Error::Input(format!(
            "pose model expects {:?}, frames are {frame:?}",
            model.input_shape()
        )));
    }
    Ok(model)
}

fn pairs_of(frames: &[ImageTensor]) -> Result<Vec<ImagePair>> {
    frames
        .windows(2)
        .map(|w| ImagePair::new(w[0].clone(), w[1].clone()))
        .collect()
}

fn to_transforms(poses: &[EulerPose]) -> Vec<TransformSE3> {
    poses.iter().map(EulerPose::to_transform).collect()
}

/// `adversarial / clean`, or nothing when the clean value cannot divide.
fn ratio(metric: &str, adversarial: f64, clean: f64) -> Option<f64> {
    ratio_report(metric, adversarial, clean).ok().map(|r| r.ratio)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

impl<'c> Context<'c> {
    fn new(cfg: &'c ExperimentConfig) -> Result<Self> {
        let frames = load_sequence(&cfg.sequence)?;
        if frames.len() < cfg.delta + 1 || frames.len() < 2 {
            return Err(Error::Input(format!(
                "{} frames cannot support delta {}",
                frames.len(),
                cfg.delta
            )));
        }
        let shape = frames[0].shape();
        let intrinsics = cfg.intrinsics.unwrap_or_else(|| Intrinsics::default_for(shape[0], shape[1]));
        intrinsics.validate(Some((shape[0], shape[1])))?;

        let pose = load_pose_model(cfg.models.pose.as_deref(), cfg.seed, shape)?;
        let depth_weights = match &cfg.models.depth {
            Some(p) => ToyWeights::load(p)?,
            None => ToyWeights::seeded_depth(cfg.seed.wrapping_add(1)),
        };
        let depth = ToyDepthModel::new(depth_weights)?;
        let transfer = cfg
            .transfer
            .iter()
            .map(|t| {
                let m = load_pose_model(t.pose.as_deref(), t.seed.unwrap_or(0), shape)?;
                Ok((t.name.clone(), m))
            })
            .collect::<Result<Vec<_>>>()?;

        let pairs = pairs_of(&frames)?;
        let ground_truth = match &cfg.ground_truth {
            Some(p) => {
                let gt = parse_kitti_poses(p)?;
                if gt.len() != frames.len() {
                    return Err(Error::Input(format!(
                        "{} ground-truth poses for {} frames",
                        gt.len(),
                        frames.len()
                    )));
                }
                Some(gt)
            }
            None => None,
        };
        let (pose, transfer) = match (&ground_truth, cfg.calibrate) {
            (Some(gt), true) => {
                let targets = gt
                    .relatives()
                    .iter()
                    .map(|t| t.to_euler().map_err(Error::from))
                    .collect::<Result<Vec<_>>>()?;
                let transfer = transfer
                    .into_iter()
                    .map(|(n, m)| Ok((n, m.calibrated(&pairs, &targets)?)))
                    .collect::<Result<Vec<_>>>()?;
                (pose.calibrated(&pairs, &targets)?, transfer)
            }
            _ => (pose, transfer),
        };
        let (reference, ground_truth) = match ground_truth {
            Some(gt) => (gt, true),
            None => (integrate_trajectory(&to_transforms(&transfer_eval(&pairs, &pose)?))?, false),
        };
        let gt_depth = match &cfg.ground_truth_depth {
            Some(dir) => {
                let maps = load_depth_sequence(dir)?;
                if maps.len() != frames.len() {
                    return Err(Error::Input(format!(
                        "{} ground-truth depth maps for {} frames",
                        maps.len(),
                        frames.len()
                    )));
                }
                Some(maps)
            }
            None => None,
        };
        let clean_depth = frames.iter().map(|f| predict_depth(&depth, f)).collect::<Result<Vec<_>>>()?;
        let threads = if cfg.parallelism == 0 { 0 } else { cfg.parallelism };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Input(format!("worker pool: {e}")))?;

        let mut ctx = Self {
            cfg,
            frames,
            intrinsics,
            pose,
            depth,
            transfer,
            reference,
            ground_truth,
            gt_depth,
            clean_depth,
            clean: Vec::new(),
            pool,
        };
        ctx.clean = ctx
            .models()
            .iter()
            .map(|(_, m)| ctx.evaluate(&pairs, *m))
            .collect::<Result<Vec<_>>>()?;
        Ok(ctx)
    }

    fn models(&self) -> Vec<(&str, &dyn PoseModel)> {
        let mut all: Vec<(&str, &dyn PoseModel)> = vec![(PRIMARY_MODEL, &self.pose)];
        all.extend(self.transfer.iter().map(|(n, m)| (n.as_str(), m as &dyn PoseModel)));
        all
    }

    /// Integrated, origin-aligned trajectory of `model` on `pairs` and its
    /// error against the reference.
    fn evaluate(&self, pairs: &[ImagePair], model: &dyn PoseModel) -> Result<Evaluated> {
        let relatives = to_transforms(&transfer_eval(pairs, model)?);
        let trajectory = align_origin(&integrate_trajectory(&relatives)?, &self.reference);
        let report = rpe(&trajectory, &self.reference, self.cfg.delta)?;
        Ok(Evaluated { trajectory, report })
    }

    fn mean_depth_rmse(&self, maps: &[DepthMap], against: &[DepthMap]) -> Result<f64> {
        let values = maps
            .iter()
            .zip(against)
            .map(|(a, b)| depth_rmse(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean(values))
    }

    fn attack(&self, kind: AttackKind, epsilon: f64) -> Result<(Vec<AdversarialPair>, f64)> {
        let start = Instant::now();
        let budget = AttackBudget::new(epsilon, self.cfg.alpha, iterations_for(epsilon))?;
        let spec = AttackSpec::new(kind, budget);
        let models = AttackModels {
            pose: &self.pose,
            depth: Some(&self.depth),
        };
        let parallel = self.cfg.parallelism != 1;
        let pairs = self.pool.install(|| {
            attack_sequence(&spec, &self.frames, models, &self.cfg.loss, &self.intrinsics, parallel)
        })?;
        Ok((pairs, start.elapsed().as_secs_f64()))
    }

    /// Records for one (kind, epsilon): the attacked model plus every
    /// transfer model, fed the same adversarial pairs.
    fn run(&self, kind: AttackKind, epsilon: f64, out: &Path) -> Result<Vec<ResultRecord>> {
        let iterations = iterations_for(epsilon);
        let (attacked, wall) = self.attack(kind, epsilon)?;
        let adversarial: Vec<ImagePair> = attacked.iter().map(|p| p.adversarial.clone()).collect();

        let depth_inputs = cross_task_depth_inputs(&attacked)?;
        let adv_depth = depth_inputs
            .iter()
            .map(|f| predict_depth(&self.depth, f))
            .collect::<Result<Vec<_>>>()?;
        let rmse = self.mean_depth_rmse(&adv_depth, &self.clean_depth)?;
        let rmse_ratio = match &self.gt_depth {
            Some(gt) => ratio(
                "depth_rmse",
                self.mean_depth_rmse(&adv_depth, gt)?,
                self.mean_depth_rmse(&self.clean_depth, gt)?,
            ),
            None => None,
        };

        let mut records = Vec::new();
        for ((name, model), clean) in self.models().into_iter().zip(&self.clean) {
            let adv = self.evaluate(&adversarial, model)?;
            let stem = format!("{}_{}_{}_eps{}", self.cfg.sequence_id, name, kind, epsilon);
            write_kitti_poses(&adv.trajectory, &out.join("trajectories").join(format!("{stem}.txt")))?;
            emit_plot_data(&clean.trajectory, &adv.trajectory, &out.join("plots"), &stem)?;

            let mut r = ResultRecord::empty(self.cfg, kind.name(), epsilon, iterations, name);
            r.rpe_m = Some(adv.report.translation_m);
            r.rpe_deg = Some(adv.report.rotation_deg);
            r.clean_rpe_m = Some(clean.report.translation_m);
            r.clean_rpe_deg = Some(clean.report.rotation_deg);
            r.ratio_m = ratio("rpe_m", adv.report.translation_m, clean.report.translation_m);
            r.ratio_deg = ratio("rpe_deg", adv.report.rotation_deg, clean.report.rotation_deg);
            if name == PRIMARY_MODEL {
                r.depth_rmse = Some(rmse);
                r.depth_rmse_ratio = rmse_ratio;
                r.initial_loss = Some(mean(attacked.iter().map(|p| p.initial_loss)));
                r.final_loss = Some(mean(attacked.iter().map(AdversarialPair::final_loss)));
                r.max_perturbation = Some(attacked.iter().map(AdversarialPair::max_perturbation).fold(0.0, f64::max));
                r.stagnated_pairs = Some(attacked.iter().filter(|p| p.stagnated).count());
            }
            r.wall_time_s = wall;
            records.push(r);
        }
        Ok(records)
    }

    /// Clean-vs-clean records; every ratio is 1 by construction.
    fn baseline(&self) -> Vec<ResultRecord> {
        self.models()
            .into_iter()
            .zip(&self.clean)
            .map(|((name, _), clean)| {
                let mut r = ResultRecord::empty(self.cfg, "clean", 0.0, 0, name);
                let (m, d) = (clean.report.translation_m, clean.report.rotation_deg);
                r.rpe_m = Some(m);
                r.rpe_deg = Some(d);
                r.clean_rpe_m = Some(m);
                r.clean_rpe_deg = Some(d);
                r.ratio_m = Some(ratio("rpe_m", m, m).unwrap_or(1.0));
                r.ratio_deg = Some(ratio("rpe_deg", d, d).unwrap_or(1.0));
                if name == PRIMARY_MODEL {
                    r.depth_rmse = Some(0.0);
                    r.depth_rmse_ratio = Some(1.0);
                }
                r
            })
            .collect()
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Ground-plane `(x, z)` track of a trajectory, one row per frame.
pub fn write_plot_csv(t: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "z"])?;
    for p in t.poses() {
        let tr = p.translation();
        w.write_record([tr.x.to_string(), tr.z.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `<stem>_clean.csv` and `<stem>_adversarial.csv` into `dir`.
pub fn emit_plot_data(
    clean: &Trajectory,
    adversarial: &Trajectory,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf)> {
    create_dir(dir)?;
    let a = dir.join(format!("{stem}_clean.csv"));
    let b = dir.join(format!("{stem}_adversarial.csv"));
    write_plot_csv(clean, &a)?;
    write_plot_csv(adversarial, &b)?;
    Ok((a, b))
}

/// Runs every (kind, epsilon) of `cfg` and writes `results.csv`,
/// `summary.json`, `timings.csv`, `trajectories/` and `plots/` under the
/// output directory. Failing runs are recorded and do not stop the others.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let ctx = Context::new(cfg)?;
    let out = &cfg.output_dir;
    create_dir(&out.join("trajectories"))?;
    create_dir(&out.join("plots"))?;
    write_kitti_poses(&ctx.reference, &out.join("trajectories").join(format!("{}_reference.txt", cfg.sequence_id)))?;
    for ((name, _), clean) in ctx.models().into_iter().zip(&ctx.clean) {
        let path = out.join("trajectories").join(format!("{}_{}_clean.txt", cfg.sequence_id, name));
        write_kitti_poses(&clean.trajectory, &path)?;
    }

    let mut records = Vec::new();
    if cfg.epsilons.is_empty() {
        records.extend(ctx.baseline());
    }
    for &kind in &cfg.attacks {
        for &epsilon in &cfg.epsilons {
            match ctx.run(kind, epsilon, out) {
                Ok(rs) => records.extend(rs),
                Err(e) => {
                    log::error!("{kind} at epsilon {epsilon}: {e}");
                    for (name, _) in ctx.models() {
                        let mut r = ResultRecord::empty(cfg, kind.name(), epsilon, iterations_for(epsilon), name);
                        r.status = format!("error: {e}");
                        records.push(r);
                    }
                }
            }
        }
    }

    write_csv(&records, &out.join("results.csv"))?;
    let timings: Vec<Timing> = records
        .iter()
        .map(|r| Timing {
            attack: &r.attack,
            epsilon: r.epsilon,
            model: &r.model,
            wall_time_s: r.wall_time_s,
        })
        .collect();
    write_csv(&timings, &out.join("timings.csv"))?;
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        sequence_id: &cfg.sequence_id,
        frames: ctx.frames.len(),
        ground_truth: ctx.ground_truth,
        attacks: cfg.attacks.iter().map(|k| k.name()).collect(),
        epsilons: &cfg.epsilons,
        failed_runs: records.iter().filter(|r| !r.is_ok()).count(),
        records: &records,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    let path = out.join("summary.json");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

    Ok(RunOutcome {
        records,
        output_dir: out.clone(),
    })
}
