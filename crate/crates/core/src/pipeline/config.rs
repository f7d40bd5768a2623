use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::enhance::{DrcConfig, SsConfig};
use crate::vc::{ClassifierTrainConfig, ConditioningMode, VcTrainConfig, BETA_KL, LAMBDA_S};
use crate::{Error, Result};

/// Step budgets of a named profile: (classifier, vc, joint).
fn profile_steps(name: &str) -> Result<(usize, usize, usize)> {
    match name {
        "desk" => Ok((500, 1500, 500)),
        "paper" => Ok((5_000, 100_000, 100_000)),
        other => Err(Error::invalid(format!("unknown profile '{other}' (desk or paper)"))),
    }
}

/// Experiment configuration read from `key = value` lines.
///
/// `profile` sets the three step budgets; explicit step keys override it.
/// `conditioning` and `style_loss` select a system within an experiment and
/// are left out of [`ExperimentConfig::hash`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub profile: String,
    pub seed: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub classifier_learning_rate: f64,
    pub classifier_steps: usize,
    pub vc_steps: usize,
    pub joint_steps: usize,
    pub beta_kl: f64,
    pub lambda_s: f64,
    pub max_frames: usize,
    pub val_fraction: f64,
    pub targets: Vec<String>,
    pub griffin_lim_iters: usize,
    pub noise_seed: u64,
    pub snrs: Vec<f64>,
    pub conditioning: ConditioningMode,
    pub style_loss: bool,
    pub ss: SsConfig,
    pub drc: DrcConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let (c, v, j) = profile_steps("desk").unwrap();
        Self {
            profile: "desk".into(),
            seed: 1,
            batch_size: 16,
            learning_rate: 1e-4,
            classifier_learning_rate: 1e-4,
            classifier_steps: c,
            vc_steps: v,
            joint_steps: j,
            beta_kl: BETA_KL,
            lambda_s: LAMBDA_S,
            max_frames: 400,
            val_fraction: 0.05,
            targets: vec!["s27".into(), "s43".into()],
            griffin_lim_iters: 60,
            noise_seed: 7,
            snrs: vec![-1.0, -3.0],
            conditioning: ConditioningMode::None,
            style_loss: false,
            ss: SsConfig::default(),
            drc: DrcConfig::default(),
        }
    }
}

const SELECTOR_KEYS: [&str; 2] = ["conditioning", "style_loss"];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::invalid(format!("config key {key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(Error::invalid(format!("config key {key}: expected on/off, got '{v}'"))),
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 29] = [
        "profile",
        "seed",
        "batch_size",
        "learning_rate",
        "classifier_learning_rate",
        "classifier_steps",
        "vc_steps",
        "joint_steps",
        "beta_kl",
        "lambda_s",
        "max_frames",
        "val_fraction",
        "targets",
        "griffin_lim_iters",
        "noise_seed",
        "snrs",
        "conditioning",
        "style_loss",
        "ss.beta",
        "ss.lifter",
        "ss.boost_db",
        "ss.boost_lo_hz",
        "ss.boost_hi_hz",
        "drc.attack_ms",
        "drc.release_ms",
        "drc.threshold_db",
        "drc.ratio",
        "drc.knee_db",
        "drc.makeup_db",
    ];

    /// Parses `key = value` lines; `#` starts a comment. Unknown or repeated
    /// keys are rejected.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("config line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !Self::KEYS.contains(&k) {
                return Err(Error::invalid(format!("config line {}: unknown key '{k}'", n + 1)));
            }
            if pairs.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::invalid(format!("config line {}: key '{k}' repeated", n + 1)));
            }
        }
        let mut cfg = Self::default();
        if let Some(p) = pairs.get("profile") {
            let (c, v, j) = profile_steps(p)?;
            cfg.profile = p.clone();
            (cfg.classifier_steps, cfg.vc_steps, cfg.joint_steps) = (c, v, j);
        }
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    fn set(&mut self, k: &str, v: &str) -> Result<()> {
        match k {
            "profile" => {}
            "seed" => self.seed = parse(k, v)?,
            "batch_size" => self.batch_size = parse(k, v)?,
            "learning_rate" => self.learning_rate = parse(k, v)?,
            "classifier_learning_rate" => self.classifier_learning_rate = parse(k, v)?,
            "classifier_steps" => self.classifier_steps = parse(k, v)?,
            "vc_steps" => self.vc_steps = parse(k, v)?,
            "joint_steps" => self.joint_steps = parse(k, v)?,
            "beta_kl" => self.beta_kl = parse(k, v)?,
            "lambda_s" => self.lambda_s = parse(k, v)?,
            "max_frames" => self.max_frames = parse(k, v)?,
            "val_fraction" => self.val_fraction = parse(k, v)?,
            "targets" => self.targets = list(v).map(str::to_owned).collect(),
            "griffin_lim_iters" => self.griffin_lim_iters = parse(k, v)?,
            "noise_seed" => self.noise_seed = parse(k, v)?,
            "snrs" => self.snrs = list(v).map(|s| parse(k, s)).collect::<Result<_>>()?,
            "conditioning" => self.conditioning = v.parse()?,
            "style_loss" => self.style_loss = parse_bool(k, v)?,
            "ss.beta" => self.ss.beta = parse(k, v)?,
            "ss.lifter" => self.ss.lifter = parse(k, v)?,
            "ss.boost_db" => self.ss.boost_db = parse(k, v)?,
            "ss.boost_lo_hz" => self.ss.boost_lo_hz = parse(k, v)?,
            "ss.boost_hi_hz" => self.ss.boost_hi_hz = parse(k, v)?,
            "drc.attack_ms" => self.drc.attack_ms = parse(k, v)?,
            "drc.release_ms" => self.drc.release_ms = parse(k, v)?,
            "drc.threshold_db" => self.drc.threshold_db = parse(k, v)?,
            "drc.ratio" => self.drc.ratio = parse(k, v)?,
            "drc.knee_db" => self.drc.knee_db = parse(k, v)?,
            "drc.makeup_db" => self.drc.makeup_db = parse(k, v)?,
            _ => return Err(Error::invalid(format!("unknown key '{k}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("batch_size", self.batch_size),
            ("classifier_steps", self.classifier_steps),
            ("vc_steps", self.vc_steps),
            ("joint_steps", self.joint_steps),
            ("max_frames", self.max_frames),
            ("griffin_lim_iters", self.griffin_lim_iters),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{k} must be at least 1")));
        }
        for (k, v) in [
            ("learning_rate", self.learning_rate),
            ("classifier_learning_rate", self.classifier_learning_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{k} must be positive")));
            }
        }
        if !(self.beta_kl >= 0.0 && self.lambda_s >= 0.0) {
            return Err(Error::invalid("loss weights must be non-negative"));
        }
        if !(0.0..0.5).contains(&self.val_fraction) {
            return Err(Error::invalid("val_fraction must lie in [0, 0.5)"));
        }
        if self.targets.is_empty() {
            return Err(Error::invalid("at least one target speaker is required"));
        }
        if self.snrs.is_empty() || self.snrs.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snrs must be a non-empty list of finite values"));
        }
        self.ss.validate()?;
        self.drc.validate()
    }

    /// Resolved `key = value` lines in key order.
    pub fn canonical(&self) -> String {
        let fmt_list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let values: BTreeMap<&str, String> = [
            ("profile", self.profile.clone()),
            ("seed", self.seed.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("classifier_learning_rate", self.classifier_learning_rate.to_string()),
            ("classifier_steps", self.classifier_steps.to_string()),
            ("vc_steps", self.vc_steps.to_string()),
            ("joint_steps", self.joint_steps.to_string()),
            ("beta_kl", self.beta_kl.to_string()),
            ("lambda_s", self.lambda_s.to_string()),
            ("max_frames", self.max_frames.to_string()),
            ("val_fraction", self.val_fraction.to_string()),
            ("targets", self.targets.join(",")),
            ("griffin_lim_iters", self.griffin_lim_iters.to_string()),
            ("noise_seed", self.noise_seed.to_string()),
            ("snrs", fmt_list(&self.snrs)),
            ("conditioning", self.conditioning.to_string()),
            ("style_loss", if self.style_loss { "on" } else { "off" }.to_string()),
            ("ss.beta", self.ss.beta.to_string()),
            ("ss.lifter", self.ss.lifter.to_string()),
            ("ss.boost_db", self.ss.boost_db.to_string()),
            ("ss.boost_lo_hz", self.ss.boost_lo_hz.to_string()),
            ("ss.boost_hi_hz", self.ss.boost_hi_hz.to_string()),
            ("drc.attack_ms", self.drc.attack_ms.to_string()),
            ("drc.release_ms", self.drc.release_ms.to_string()),
            ("drc.threshold_db", self.drc.threshold_db.to_string()),
            ("drc.ratio", self.drc.ratio.to_string()),
            ("drc.knee_db", self.drc.knee_db.to_string()),
            ("drc.makeup_db", self.drc.makeup_db.to_string()),
        ]
        .into_iter()
        .collect();
        values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 (hex, 16 characters) of the canonical form without the
    /// per-system selectors.
    pub fn hash(&self) -> String {
        let text: String = self
            .canonical()
            .lines()
            .filter(|l| !SELECTOR_KEYS.iter().any(|k| l.starts_with(&format!("{k} ="))))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn classifier_train(&self) -> ClassifierTrainConfig {
        ClassifierTrainConfig {
            steps: self.classifier_steps,
            batch_size: self.batch_size,
            lr: self.classifier_learning_rate,
            max_frames: self.max_frames,
            seed: self.seed,
        }
    }

    pub fn vc_train(&self) -> VcTrainConfig {
        VcTrainConfig {
            vc_steps: self.vc_steps,
            joint_steps: self.joint_steps,
            batch_size: self.batch_size,
            lr: self.learning_rate,
            beta_kl: self.beta_kl,
            lambda_s: self.lambda_s,
            style_loss: self.style_loss,
            max_frames: self.max_frames,
            seed: self.seed,
        }
    }
}
