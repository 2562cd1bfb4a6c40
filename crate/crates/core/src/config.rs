//! Experiment configuration.
//!
//! The primary format is flat `key = value` text with `#` comments; a flat
//! JSON object with the same keys is also accepted. Unknown keys are errors.
//! The digest of a config is the SHA-256 of its canonical rendering, which
//! lists every key in [`KEYS`] order.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::guesser::GuesserMode;
use crate::policy::SelectionMode;
use crate::rewards::Aggregation;
use crate::trainer::TrainConfig;
use crate::world::{Attribute, AttributeSchema, WorldSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldKind {
    Random,
    Bitworld,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub kind: WorldKind,
    pub n_objects: usize,
    pub n_attributes: usize,
    pub n_values: usize,
    /// Explicit schema `attr:v1|v2;attr2:...`; overrides n_attributes/n_values.
    pub schema: String,
    /// Attribute names that may be UNDEFINED.
    pub optional: Vec<String>,
    pub n_bits: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            kind: WorldKind::Random,
            n_objects: 16,
            n_attributes: 4,
            n_values: 4,
            schema: String::new(),
            optional: Vec::new(),
            n_bits: 3,
        }
    }
}

impl WorldConfig {
    pub fn schema(&self) -> Result<AttributeSchema> {
        let mut attrs: Vec<Attribute> = if self.schema.trim().is_empty() {
            AttributeSchema::uniform(self.n_attributes, self.n_values)?.into()
        } else {
            self.schema
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|part| {
                    let (name, values) = part
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("schema entry {part:?} is not name:v1|v2")))?;
                    let values: Vec<&str> = values.split('|').map(str::trim).collect();
                    Ok(Attribute::new(name.trim(), &values))
                })
                .collect::<Result<_>>()?
        };
        for name in &self.optional {
            let a = attrs
                .iter_mut()
                .find(|a| &a.name == name)
                .ok_or_else(|| Error::Config(format!("optional attribute {name:?} not in schema")))?;
            a.optional = true;
        }
        AttributeSchema::new(attrs).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn spec(&self) -> Result<WorldSpec> {
        let spec = match self.kind {
            WorldKind::Random => WorldSpec::Random { n_objects: self.n_objects, schema: Arc::new(self.schema()?) },
            WorldKind::Bitworld => WorldSpec::Bitworld { n_bits: self.n_bits },
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub world: WorldConfig,
    pub eval_n_games: usize,
    pub eval_modes: Vec<SelectionMode>,
    pub eval_seed: u64,
    /// Write a checkpoint every this many epochs; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub ablate_seeds: Vec<u64>,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let world = WorldConfig::default();
        let mut train = TrainConfig::default();
        train.episode.world = world.spec().expect("default world is valid");
        ExperimentConfig {
            train,
            world,
            eval_n_games: 1000,
            eval_modes: vec![SelectionMode::Greedy, SelectionMode::Sample],
            eval_seed: 1_000_003,
            checkpoint_every: 0,
            ablate_seeds: vec![0, 1, 2, 3, 4],
            output_dir: "runs".into(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "master_seed",
    "epochs",
    "games_per_epoch",
    "batch_size",
    "learning_rate",
    "baseline_decay",
    "temperature",
    "stop_enabled",
    "fixed_world",
    "per_round_shaping",
    "j_max",
    "alpha",
    "beta",
    "gamma",
    "use_rs",
    "include_alpha_with_rs",
    "rb_aggregation",
    "oracle.noise_rate",
    "oracle.seed",
    "guesser.mode",
    "guesser.softness",
    "world.kind",
    "world.n_objects",
    "world.n_attributes",
    "world.n_values",
    "world.schema",
    "world.optional",
    "world.n_bits",
    "eval.n_games",
    "eval.modes",
    "eval.seed",
    "checkpoint_every",
    "ablate.seeds",
    "output_dir",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        let r = &mut t.episode.reward;
        let v = value.trim();
        match key {
            "master_seed" => t.master_seed = parse(key, v)?,
            "epochs" => t.epochs = parse(key, v)?,
            "games_per_epoch" => t.games_per_epoch = parse(key, v)?,
            "batch_size" => t.batch_size = parse(key, v)?,
            "learning_rate" => t.learning_rate = parse(key, v)?,
            "baseline_decay" => t.baseline_decay = parse(key, v)?,
            "temperature" => t.temperature = parse(key, v)?,
            "stop_enabled" => t.stop_enabled = parse_bool(key, v)?,
            "fixed_world" => t.fixed_world = parse_bool(key, v)?,
            "per_round_shaping" => t.episode.per_round_shaping = parse_bool(key, v)?,
            "j_max" => t.episode.j_max = parse(key, v)?,
            "alpha" => r.alpha = parse(key, v)?,
            "beta" => r.beta = parse(key, v)?,
            "gamma" => r.gamma = parse(key, v)?,
            "use_rs" => r.use_rs = parse_bool(key, v)?,
            "include_alpha_with_rs" => r.include_alpha_with_rs = parse_bool(key, v)?,
            "rb_aggregation" => {
                r.rb_aggregation = match v.to_ascii_lowercase().as_str() {
                    "sum" => Aggregation::Sum,
                    "mean" => Aggregation::Mean,
                    _ => return Err(Error::Config(format!("{key}: expected sum|mean, got {v:?}"))),
                }
            }
            "oracle.noise_rate" => t.episode.oracle.noise_rate = parse(key, v)?,
            "oracle.seed" => t.episode.oracle.seed = parse(key, v)?,
            "guesser.mode" => {
                t.episode.guesser.mode = match v.to_ascii_lowercase().as_str() {
                    "consistent_uniform" => GuesserMode::ConsistentUniform,
                    "soft_consistency" => GuesserMode::SoftConsistency,
                    _ => {
                        return Err(Error::Config(format!(
                            "{key}: expected consistent_uniform|soft_consistency, got {v:?}"
                        )))
                    }
                }
            }
            "guesser.softness" => t.episode.guesser.softness = parse(key, v)?,
            "world.kind" => {
                self.world.kind = match v.to_ascii_lowercase().as_str() {
                    "random" => WorldKind::Random,
                    "bitworld" => WorldKind::Bitworld,
                    _ => return Err(Error::Config(format!("{key}: expected random|bitworld, got {v:?}"))),
                }
            }
            "world.n_objects" => self.world.n_objects = parse(key, v)?,
            "world.n_attributes" => self.world.n_attributes = parse(key, v)?,
            "world.n_values" => self.world.n_values = parse(key, v)?,
            "world.schema" => self.world.schema = v.to_string(),
            "world.optional" => self.world.optional = parse_list(key, v)?,
            "world.n_bits" => self.world.n_bits = parse(key, v)?,
            "eval.n_games" => self.eval_n_games = parse(key, v)?,
            "eval.modes" => self.eval_modes = parse_list(key, v)?,
            "eval.seed" => self.eval_seed = parse(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "ablate.seeds" => self.ablate_seeds = parse_list(key, v)?,
            "output_dir" => self.output_dir = v.to_string(),
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let t = &self.train;
        let r = &t.episode.reward;
        Some(match key {
            "master_seed" => t.master_seed.to_string(),
            "epochs" => t.epochs.to_string(),
            "games_per_epoch" => t.games_per_epoch.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "baseline_decay" => t.baseline_decay.to_string(),
            "temperature" => t.temperature.to_string(),
            "stop_enabled" => t.stop_enabled.to_string(),
            "fixed_world" => t.fixed_world.to_string(),
            "per_round_shaping" => t.episode.per_round_shaping.to_string(),
            "j_max" => t.episode.j_max.to_string(),
            "alpha" => r.alpha.to_string(),
            "beta" => r.beta.to_string(),
            "gamma" => r.gamma.to_string(),
            "use_rs" => r.use_rs.to_string(),
            "include_alpha_with_rs" => r.include_alpha_with_rs.to_string(),
            "rb_aggregation" => match r.rb_aggregation {
                Aggregation::Sum => "sum".into(),
                Aggregation::Mean => "mean".into(),
            },
            "oracle.noise_rate" => t.episode.oracle.noise_rate.to_string(),
            "oracle.seed" => t.episode.oracle.seed.to_string(),
            "guesser.mode" => match t.episode.guesser.mode {
                GuesserMode::ConsistentUniform => "consistent_uniform".into(),
                GuesserMode::SoftConsistency => "soft_consistency".into(),
            },
            "guesser.softness" => t.episode.guesser.softness.to_string(),
            "world.kind" => match self.world.kind {
                WorldKind::Random => "random".into(),
                WorldKind::Bitworld => "bitworld".into(),
            },
            "world.n_objects" => self.world.n_objects.to_string(),
            "world.n_attributes" => self.world.n_attributes.to_string(),
            "world.n_values" => self.world.n_values.to_string(),
            "world.schema" => self.world.schema.clone(),
            "world.optional" => self.world.optional.join(","),
            "world.n_bits" => self.world.n_bits.to_string(),
            "eval.n_games" => self.eval_n_games.to_string(),
            "eval.modes" => join(&self.eval_modes).to_ascii_lowercase(),
            "eval.seed" => self.eval_seed.to_string(),
            "checkpoint_every" => self.checkpoint_every.to_string(),
            "ablate.seeds" => join(&self.ablate_seeds),
            "output_dir" => self.output_dir.clone(),
            _ => return None,
        })
    }

    /// Parses `key=value` text or, when the text is a JSON object, JSON.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?;
            let obj = value.as_object().ok_or_else(|| Error::Config("JSON config must be an object".into()))?;
            for (k, v) in obj {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|i| i.as_str().map(str::to_string).unwrap_or_else(|| i.to_string()))
                        .collect::<Vec<_>>()
                        .join(","),
                    other => other.to_string(),
                };
                cfg.set(k, &s)?;
            }
        } else {
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
                cfg.set(k.trim(), v)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Resolves derived fields and checks every invariant.
    pub fn finalize(mut self) -> Result<Self> {
        self.train.episode.world = self.world.spec()?;
        self.train.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.eval_n_games == 0 {
            return Err(Error::Config("eval.n_games must be >= 1".into()));
        }
        if self.eval_modes.is_empty() {
            return Err(Error::Config("eval.modes must not be empty".into()));
        }
        if self.ablate_seeds.is_empty() {
            return Err(Error::Config("ablate.seeds must not be empty".into()));
        }
        Ok(self)
    }

    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("every listed key renders"));
        }
        out
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}
