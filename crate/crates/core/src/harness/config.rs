//! Experiment configuration, read from TOML.
//!
//! ```toml
//! sequence = "data/seq00"            # required; numbered frames
//! ground_truth = "data/seq00/poses.txt"  # optional; default <sequence>/poses.txt if present
//! ground_truth_depth = "data/seq00/depth" # optional; default <sequence>/depth if present
//! sequence_id = "seq00"              # default: sequence directory name
//! attacks = ["untargeted", "invert_yaw"]
//! epsilons = [1.0, 2.0, 4.0]         # default 0.25 ... 16; [] runs the clean baseline only
//! alpha = 1.0
//! delta = 1
//! seed = 0
//! output_dir = "results"             # default $POSE_ATTACK_OUT, else "results"
//! parallelism = 1                    # worker threads; 0 = one per core
//! calibrate = false                  # fit pose-head biases to ground truth first
//!
//! [intrinsics]                       # default: fx = fy = width, centred
//! fx = 32.0
//! fy = 32.0
//! cx = 15.5
//! cy = 15.5
//!
//! [loss]
//! w1 = 1.0
//! w2 = 0.1
//! w3 = 0.5
//! lambda_p = 0.85
//!
//! [models]                           # default: seeded toy models
//! pose = "weights/pose.pawt"
//! depth = "weights/depth.pawt"
//!
//! [[transfer]]                       # extra pose models fed the adversarial pairs
//! name = "other"
//! pose = "weights/other.pawt"        # or: seed = 7
//! ```
//!
//! Relative paths are resolved against the configuration file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{AttackKind, DEFAULT_EPSILONS};
use crate::losses::{Intrinsics, LossWeights};
use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "POSE_ATTACK_OUT";

const DEFAULT_ATTACKS: [AttackKind; 4] = [
    AttackKind::Untargeted,
    AttackKind::InvertYaw,
    AttackKind::MoveBackwards,
    AttackKind::InvertPose,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<PathBuf>,
}

/// A second pose model, loaded from a file or seeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferModel {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sequence: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_depth: Option<PathBuf>,
    #[serde(default)]
    pub sequence_id: String,
    #[serde(default = "default_attacks")]
    pub attacks: Vec<AttackKind>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "delta_one")]
    pub delta: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: PathBuf,
    #[serde(default = "delta_one")]
    pub parallelism: usize,
    /// Shift every toy pose model's head biases so its clean predictions
    /// match the ground-truth relatives on average. Needs ground truth.
    #[serde(default)]
    pub calibrate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<Intrinsics>,
    #[serde(default)]
    pub loss: LossWeights,
    #[serde(default = "no_models")]
    pub models: ModelPaths,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transfer: Vec<TransferModel>,
}

fn default_attacks() -> Vec<AttackKind> {
    DEFAULT_ATTACKS.to_vec()
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

fn one() -> f64 {
    1.0
}

fn delta_one() -> usize {
    1
}

fn no_models() -> ModelPaths {
    ModelPaths {
        pose: None,
        depth: None,
    }
}

/// Key an error refers to: the named field of a missing-field message,
/// else the key on the line the error points at.
fn key_of(text: &str, message: &str, span: Option<std::ops::Range<usize>>) -> String {
    let quoted = message.split('`').nth(1).filter(|k| !k.is_empty());
    if message.starts_with("missing field") {
        if let Some(k) = quoted {
            return k.to_string();
        }
    }
    let from_line = span.and_then(|s| {
        let start = text[..s.start.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
        let line = text[start..].lines().next()?;
        let (key, _) = line.split_once('=')?;
        Some(key.trim().trim_matches('"').to_string()).filter(|k| !k.is_empty())
    });
    from_line
        .or_else(|| quoted.map(str::to_string))
        .unwrap_or_else(|| "<document>".to_string())
}

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// Config with every default and the given sequence directory.
    pub fn for_sequence(sequence: impl Into<PathBuf>) -> Self {
        Self {
            sequence: sequence.into(),
            ground_truth: None,
            ground_truth_depth: None,
            sequence_id: String::new(),
            attacks: default_attacks(),
            epsilons: default_epsilons(),
            alpha: 1.0,
            delta: 1,
            seed: 0,
            output_dir: PathBuf::new(),
            parallelism: 1,
            calibrate: false,
            intrinsics: None,
            loss: LossWeights::default(),
            models: no_models(),
            transfer: Vec::new(),
        }
    }

    /// Parses TOML, resolving relative paths against `base` and filling
    /// defaults.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            config_error(&key_of(text, &message, e.span()), message)
        })?;
        cfg.resolve(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) -> Result<()> {
        let abs = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        self.sequence = abs(&self.sequence);
        if !self.sequence.is_dir() {
            return Err(config_error("sequence", format!("{} is not a directory", self.sequence.display())));
        }
        if self.sequence_id.is_empty() {
            self.sequence_id = self
                .sequence
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sequence".into());
        }
        self.ground_truth = match &self.ground_truth {
            Some(p) => Some(existing(abs(p), "ground_truth")?),
            None => Some(self.sequence.join("poses.txt")).filter(|p| p.is_file()),
        };
        self.ground_truth_depth = match &self.ground_truth_depth {
            Some(p) => Some(existing(abs(p), "ground_truth_depth")?),
            None => Some(self.sequence.join("depth")).filter(|p| p.is_dir()),
        };
        self.output_dir = if !self.output_dir.as_os_str().is_empty() {
            abs(&self.output_dir)
        } else if let Some(env) = std::env::var_os(OUTPUT_DIR_ENV) {
            // Relative to the working directory, like any shell path.
            std::path::absolute(&env).map_err(|e| Error::io(Path::new(&env), e))?
        } else {
            base.join("results")
        };
        if let Some(p) = &self.models.pose {
            self.models.pose = Some(existing(abs(p), "models.pose")?);
        }
        if let Some(p) = &self.models.depth {
            self.models.depth = Some(existing(abs(p), "models.depth")?);
        }
        for t in &mut self.transfer {
            if let Some(p) = &t.pose {
                t.pose = Some(existing(abs(p), "transfer.pose")?);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(config_error("epsilons", format!("epsilon must be > 0, got {bad}")));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(config_error("alpha", format!("must be > 0, got {}", self.alpha)));
        }
        if self.delta == 0 {
            return Err(config_error("delta", "must be >= 1"));
        }
        if self.calibrate && self.ground_truth.is_none() {
            return Err(config_error("calibrate", "needs ground_truth poses"));
        }
        self.loss
            .validate()
            .map_err(|e| config_error("loss", e.to_string()))?;
        if let Some(k) = &self.intrinsics {
            k.validate(None).map_err(|e| config_error("intrinsics", e.to_string()))?;
        }
        let mut names = std::collections::BTreeSet::new();
        for t in &self.transfer {
            if t.pose.is_some() == t.seed.is_some() {
                return Err(config_error("transfer", format!("'{}' needs exactly one of pose, seed", t.name)));
            }
            if t.name.is_empty() || t.name == "primary" || !names.insert(t.name.as_str()) {
                return Err(config_error("transfer", format!("invalid or duplicate name '{}'", t.name)));
            }
        }
        Ok(())
    }

    /// TOML that [`load_config`] reads back to an equal config.
    pub fn dump(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error("<document>", e.to_string()))
    }
}

fn existing(path: PathBuf, key: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(config_error(key, format!("{} does not exist", path.display())))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    ExperimentConfig::from_toml(&text, base)
}
