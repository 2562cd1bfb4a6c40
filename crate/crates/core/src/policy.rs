//! Softmax question policy over a fixed, hand-designed feature set.
//!
//! The policy sees only the objects and the public question/answer history.
//! It works out which objects are still consistent with that history by
//! itself; the reward-side candidate tracker is never an input.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::truthful_answer;
use crate::world::{enumerate_questions, Answer, AttributeSchema, GameInstance, ObjectSpec, Question};

pub const N_FEATURES: usize = 6;

/// Feature order is part of the checkpoint format. Append, never reorder.
pub const FEATURE_NAMES: [&str; N_FEATURES] =
    ["balance", "repeat", "yes_frac", "question_bias", "stop_bias", "singleton"];

pub const F_BALANCE: usize = 0;
pub const F_REPEAT: usize = 1;
pub const F_YES_FRAC: usize = 2;
pub const F_QUESTION_BIAS: usize = 3;
pub const F_STOP_BIAS: usize = 4;
pub const F_SINGLETON: usize = 5;

pub type FeatureVec = [f64; N_FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Ask(Question),
    Stop,
}

impl Action {
    pub fn question(&self) -> Option<Question> {
        match self {
            Action::Ask(q) => Some(*q),
            Action::Stop => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SelectionMode {
    #[default]
    Greedy,
    Sample,
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMode::Greedy => "GREEDY",
            SelectionMode::Sample => "SAMPLE",
        })
    }
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" | "g" => Ok(SelectionMode::Greedy),
            "sample" | "s" => Ok(SelectionMode::Sample),
            other => Err(Error::Config(format!("unknown mode {other:?} (expected greedy|sample)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub theta: Vec<f64>,
    pub temperature: f64,
    pub stop_enabled: bool,
    pub feature_names: Vec<String>,
}

impl Default for PolicyParams {
    /// Zero weights, i.e. the uniform policy.
    fn default() -> Self {
        PolicyParams::zeros(1.0, true)
    }
}

impl PolicyParams {
    pub fn zeros(temperature: f64, stop_enabled: bool) -> Self {
        PolicyParams {
            theta: vec![0.0; N_FEATURES],
            temperature,
            stop_enabled,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Hand-set greedy bisector: strongly prefers even splits and never repeats.
    pub fn bisection_reference() -> Self {
        let mut p = PolicyParams::zeros(1.0, true);
        p.theta[F_BALANCE] = 50.0;
        p.theta[F_REPEAT] = -50.0;
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.len() != self.feature_names.len() {
            return Err(Error::Validation(format!(
                "theta has {} weights for {} features",
                self.theta.len(),
                self.feature_names.len()
            )));
        }
        if self.feature_names.len() != N_FEATURES || self.feature_names.iter().zip(FEATURE_NAMES).any(|(a, b)| a != b) {
            return Err(Error::Validation(format!("unsupported feature set {:?}", self.feature_names)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Validation(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("theta contains a non-finite weight".into()));
        }
        Ok(())
    }

    fn logit(&self, phi: &FeatureVec) -> f64 {
        self.theta.iter().zip(phi).map(|(t, f)| t * f).sum::<f64>() / self.temperature
    }
}

/// What the questioner can see: the objects and the dialogue so far.
/// There is deliberately no target here.
#[derive(Debug, Clone, Copy)]
pub struct DialogueState<'a> {
    pub schema: &'a AttributeSchema,
    pub objects: &'a [ObjectSpec],
    pub history: &'a [(Question, Answer)],
}

impl<'a> DialogueState<'a> {
    pub fn new(game: &'a GameInstance, history: &'a [(Question, Answer)]) -> Self {
        DialogueState { schema: &game.schema, objects: &game.objects, history }
    }

    pub fn round_index(&self) -> usize {
        self.history.len()
    }
}

/// Objects whose truthful answers agree with every history entry. May be
/// empty when the answers came from a noisy oracle.
pub fn consistent_set(state: &DialogueState<'_>) -> Vec<usize> {
    state
        .objects
        .iter()
        .filter(|o| state.history.iter().all(|(q, a)| truthful_answer(*q, o).is_ok_and(|t| t == *a)))
        .map(|o| o.id)
        .collect()
}

/// The consistent set, or every object if nothing is consistent.
pub fn belief_set(state: &DialogueState<'_>) -> Vec<usize> {
    let s = consistent_set(state);
    if s.is_empty() {
        (0..state.objects.len()).collect()
    } else {
        s
    }
}

fn question_features(state: &DialogueState<'_>, belief: &[usize], q: Question) -> FeatureVec {
    let m = belief.len() as f64;
    let yes =
        belief.iter().filter(|&&id| truthful_answer(q, &state.objects[id]).is_ok_and(|a| a == Answer::Yes)).count()
            as f64;
    let p = yes / m;
    let repeat = state.history.iter().any(|(h, _)| *h == q);
    let mut phi = [0.0; N_FEATURES];
    phi[F_BALANCE] = 1.0 - (2.0 * p - 1.0).abs();
    phi[F_REPEAT] = if repeat { 1.0 } else { 0.0 };
    phi[F_YES_FRAC] = p;
    phi[F_QUESTION_BIAS] = 1.0;
    phi
}

fn stop_features(belief: &[usize]) -> FeatureVec {
    let mut phi = [0.0; N_FEATURES];
    phi[F_STOP_BIAS] = 1.0;
    phi[F_SINGLETON] = if belief.len() == 1 { 1.0 } else { 0.0 };
    phi
}

pub fn features(state: &DialogueState<'_>, action: Action) -> FeatureVec {
    let belief = belief_set(state);
    match action {
        Action::Ask(q) => question_features(state, &belief, q),
        Action::Stop => stop_features(&belief),
    }
}

/// Every question in schema order, then STOP when it is allowed this round.
pub fn action_space(params: &PolicyParams, state: &DialogueState<'_>) -> Vec<Action> {
    let mut actions: Vec<Action> = enumerate_questions(state.schema).into_iter().map(Action::Ask).collect();
    if params.stop_enabled && state.round_index() >= 1 {
        actions.push(Action::Stop);
    }
    actions
}

#[derive(Debug, Clone)]
pub struct ActionDistribution {
    pub actions: Vec<Action>,
    pub features: Vec<FeatureVec>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    log_norm: f64,
}

impl ActionDistribution {
    pub fn prob(&self, action: Action) -> Option<f64> {
        self.index_of(action).map(|i| self.probs[i])
    }

    pub fn index_of(&self, action: Action) -> Option<usize> {
        self.actions.iter().position(|a| *a == action)
    }

    pub fn log_prob_at(&self, i: usize) -> f64 {
        self.logits[i] - self.log_norm
    }

    /// Policy-weighted mean feature vector.
    pub fn mean_features(&self) -> FeatureVec {
        let mut mean = [0.0; N_FEATURES];
        for (p, phi) in self.probs.iter().zip(&self.features) {
            for (m, f) in mean.iter_mut().zip(phi) {
                *m += p * f;
            }
        }
        mean
    }

    /// `d log pi(a) / d theta` for the action at index `i`.
    pub fn score_gradient_at(&self, i: usize, temperature: f64) -> Vec<f64> {
        let mean = self.mean_features();
        self.features[i].iter().zip(mean).map(|(f, m)| (f - m) / temperature).collect()
    }

    pub fn greedy_index(&self) -> usize {
        let mut best = 0;
        for (i, l) in self.logits.iter().enumerate().skip(1) {
            if *l > self.logits[best] {
                best = i;
            }
        }
        best
    }
}

pub fn action_distribution(params: &PolicyParams, state: &DialogueState<'_>) -> ActionDistribution {
    let belief = belief_set(state);
    let actions = action_space(params, state);
    let features: Vec<FeatureVec> = actions
        .iter()
        .map(|a| match a {
            Action::Ask(q) => question_features(state, &belief, *q),
            Action::Stop => stop_features(&belief),
        })
        .collect();
    let logits: Vec<f64> = features.iter().map(|phi| params.logit(phi)).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / z).collect();
    ActionDistribution { actions, features, logits, probs, log_norm: max + z.ln() }
}

pub fn log_prob(params: &PolicyParams, state: &DialogueState<'_>, action: Action) -> Option<f64> {
    let d = action_distribution(params, state);
    d.index_of(action).map(|i| d.log_prob_at(i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionChoice {
    pub action: Action,
    pub log_prob: f64,
    pub score_gradient: Vec<f64>,
}

pub fn select_action<R: Rng + ?Sized>(
    params: &PolicyParams,
    state: &DialogueState<'_>,
    mode: SelectionMode,
    rng: &mut R,
) -> ActionChoice {
    let d = action_distribution(params, state);
    let i = match mode {
        SelectionMode::Greedy => d.greedy_index(),
        SelectionMode::Sample => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = d.probs.len() - 1;
            for (i, p) in d.probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        }
    };
    ActionChoice {
        action: d.actions[i],
        log_prob: d.log_prob_at(i),
        score_gradient: d.score_gradient_at(i, params.temperature),
    }
}

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub theta: Vec<f64>,
    pub temperature: f64,
    pub stop_enabled: bool,
    pub training_config_digest: String,
    pub rng_seed: u64,
    pub epoch: usize,
}

impl Checkpoint {
    pub fn new(params: &PolicyParams, training_config_digest: &str, rng_seed: u64, epoch: usize) -> Self {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            feature_names: params.feature_names.clone(),
            theta: params.theta.clone(),
            temperature: params.temperature,
            stop_enabled: params.stop_enabled,
            training_config_digest: training_config_digest.to_string(),
            rng_seed,
            epoch,
        }
    }

    pub fn params(&self) -> Result<PolicyParams> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Version { found: self.format_version, expected: CHECKPOINT_FORMAT_VERSION });
        }
        let p = PolicyParams {
            theta: self.theta.clone(),
            temperature: self.temperature,
            stop_enabled: self.stop_enabled,
            feature_names: self.feature_names.clone(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        // Peek at the version first so a newer layout reports a version error
        // rather than a field error.
        let raw: serde_json::Value = serde_json::from_str(&text)?;
        if let Some(v) = raw.get("format_version").and_then(|v| v.as_u64()) {
            if v != CHECKPOINT_FORMAT_VERSION as u64 {
                return Err(Error::Version { found: v as u32, expected: CHECKPOINT_FORMAT_VERSION });
            }
        }
        Ok(serde_json::from_value(raw)?)
    }
}
