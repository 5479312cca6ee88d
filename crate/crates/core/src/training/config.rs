use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::extensional::NormKind;
use crate::intensional::{BridgeKind, InitMode};

/// Which side-choice rule negative sampling uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Fair coin.
    #[default]
    Unif,
    /// Head replaced with probability `tph / (tph + hpt)`.
    Bern,
}

impl Sampling {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampling::Unif => "unif",
            Sampling::Bern => "bern",
        }
    }
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unif" => Ok(Sampling::Unif),
            "bern" => Ok(Sampling::Bern),
            _ => Err(Error::Config(format!("unknown sampling {s:?} (expected unif or bern)"))),
        }
    }
}

/// Validation metric used to pick the best checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    #[default]
    Accuracy,
    Hits10,
}

impl Selection {
    pub fn as_str(self) -> &'static str {
        match self {
            Selection::Accuracy => "accuracy",
            Selection::Hits10 => "hits10",
        }
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('@', "").as_str() {
            "accuracy" => Ok(Selection::Accuracy),
            "hits10" => Ok(Selection::Hits10),
            _ => Err(Error::Config(format!(
                "unknown selection {s:?} (expected accuracy or hits10)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub dim: usize,
    pub lr: f64,
    pub margin_rel: f64,
    pub margin_ins: f64,
    pub margin_sub: f64,
    pub alpha: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub sampling: Sampling,
    pub bridge: BridgeKind,
    pub init: InitMode,
    pub seed: u64,
    pub norm: NormKind,
    /// Negatives drawn per positive per epoch.
    pub negatives: usize,
    /// Keep intensional concept vectors fixed at their initial values.
    pub freeze_intensional: bool,
    /// Validate every this many epochs; 0 disables validation.
    pub eval_every: usize,
    pub selection: Selection,
    /// Worker threads for gradient computation; 1 is the deterministic
    /// reference mode.
    pub threads: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            lr: 0.001,
            margin_rel: 1.0,
            margin_ins: 0.4,
            margin_sub: 0.3,
            alpha: 0.5,
            epochs: 1000,
            batch_size: 256,
            sampling: Sampling::Unif,
            bridge: BridgeKind::Identity,
            init: InitMode::Random,
            seed: 0,
            norm: NormKind::L2,
            negatives: 1,
            freeze_intensional: false,
            eval_every: 0,
            selection: Selection::Accuracy,
            threads: 1,
        }
    }
}

pub const CONFIG_KEYS: [&str; 18] = [
    "dim",
    "lr",
    "margin_rel",
    "margin_ins",
    "margin_sub",
    "alpha",
    "epochs",
    "batch_size",
    "sampling",
    "bridge",
    "init",
    "seed",
    "norm",
    "negatives",
    "freeze_intensional",
    "eval_every",
    "selection",
    "threads",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.dim == 0 {
            return fail("dim must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        for (name, m) in [
            ("margin_rel", self.margin_rel),
            ("margin_ins", self.margin_ins),
            ("margin_sub", self.margin_sub),
        ] {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be non-negative");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.negatives == 0 {
            return fail("negatives must be at least 1");
        }
        if self.threads == 0 {
            return fail("threads must be at least 1");
        }
        Ok(())
    }

    /// Sets one field from its textual key/value form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "dim" => self.dim = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "margin_rel" => self.margin_rel = parse(key, value)?,
            "margin_ins" => self.margin_ins = parse(key, value)?,
            "margin_sub" => self.margin_sub = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "sampling" => self.sampling = value.parse()?,
            "bridge" => self.bridge = value.parse()?,
            "init" => self.init = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "norm" => self.norm = value.parse()?,
            "negatives" => self.negatives = parse(key, value)?,
            "freeze_intensional" => self.freeze_intensional = parse(key, value)?,
            "eval_every" => self.eval_every = parse(key, value)?,
            "selection" => self.selection = value.parse()?,
            "threads" => self.threads = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected \"key = value\"", n + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "dim" => self.dim.to_string(),
            "lr" => format!("{:?}", self.lr),
            "margin_rel" => format!("{:?}", self.margin_rel),
            "margin_ins" => format!("{:?}", self.margin_ins),
            "margin_sub" => format!("{:?}", self.margin_sub),
            "alpha" => format!("{:?}", self.alpha),
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "sampling" => self.sampling.as_str().to_string(),
            "bridge" => self.bridge.as_str().to_string(),
            "init" => self.init.as_str().to_string(),
            "seed" => self.seed.to_string(),
            "norm" => self.norm.as_str().to_string(),
            "negatives" => self.negatives.to_string(),
            "freeze_intensional" => self.freeze_intensional.to_string(),
            "eval_every" => self.eval_every.to_string(),
            "selection" => self.selection.as_str().to_string(),
            "threads" => self.threads.to_string(),
            _ => return None,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }
}
