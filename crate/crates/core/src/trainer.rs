//! Episode rollouts and REINFORCE training of the question policy.

use serde::{Deserialize, Serialize};

use crate::ade::{CandidateTracker, RoundStat};
use crate::error::{Error, Result};
use crate::guesser::{self, GuesserConfig};
use crate::metrics::{EvalReport, ReportAccumulator};
use crate::oracle::{self, OracleConfig};
use crate::par::{self, Execution};
use crate::policy::{select_action, Action, ActionChoice, DialogueState, PolicyParams, SelectionMode};
use crate::rewards::{self, Aggregation, EpisodeOutcome, RewardBreakdown, RewardConfig};
use crate::rng::{self, stream, SimRng};
use crate::world::{Answer, GameInstance, Question, WorldSpec};

/// Everything needed to play and score one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub world: WorldSpec,
    pub j_max: usize,
    pub reward: RewardConfig,
    pub oracle: OracleConfig,
    pub guesser: GuesserConfig,
    /// Credit each question only with the round scores from its own round on.
    pub per_round_shaping: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            world: WorldSpec::default(),
            j_max: 5,
            reward: RewardConfig::default(),
            oracle: OracleConfig::default(),
            guesser: GuesserConfig::default(),
            per_round_shaping: false,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j_max == 0 {
            return Err(Error::Validation("j_max must be >= 1".into()));
        }
        self.world.validate()?;
        self.reward.validate()?;
        self.oracle.validate()?;
        self.guesser.validate()
    }

    /// Seed of the per-episode rollout stream, mixed with the oracle seed.
    pub fn rollout_seed(&self, master: u64, tag: u64, index: u64) -> u64 {
        rng::derive_seed(rng::derive_seed(master, tag, index), self.oracle.seed, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episode: EpisodeConfig,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub games_per_epoch: usize,
    pub baseline_decay: f64,
    pub master_seed: u64,
    pub temperature: f64,
    pub stop_enabled: bool,
    /// Train on a single world (seeded from the master seed) instead of fresh ones.
    pub fixed_world: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episode: EpisodeConfig::default(),
            learning_rate: 0.001,
            batch_size: 64,
            epochs: 150,
            games_per_epoch: 6400,
            baseline_decay: 0.99,
            master_seed: 0,
            temperature: 1.0,
            stop_enabled: true,
            fixed_world: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.episode.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Validation(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.games_per_epoch == 0 {
            return Err(Error::Validation("batch_size and games_per_epoch must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return Err(Error::Validation(format!("baseline_decay must be in [0,1), got {}", self.baseline_decay)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Validation(format!("temperature must be > 0, got {}", self.temperature)));
        }
        Ok(())
    }

    pub fn initial_params(&self) -> PolicyParams {
        PolicyParams::zeros(self.temperature, self.stop_enabled)
    }

    fn world_seed(&self, index: u64) -> u64 {
        let index = if self.fixed_world { 0 } else { index };
        rng::derive_seed(self.master_seed, stream::TRAIN_WORLD, index)
    }
}

/// One played game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub game_seed: u64,
    pub rollout_seed: u64,
    pub n_objects: usize,
    pub target_id: usize,
    pub actions: Vec<ActionChoice>,
    pub history: Vec<(Question, Answer)>,
    /// One per asked question (STOP has none).
    pub round_stats: Vec<RoundStat>,
    /// Tracker size after each update.
    pub candidates_after: Vec<usize>,
    pub k_end: usize,
    /// True when a noisy oracle made the tracker lose every candidate.
    pub candidates_exhausted: bool,
    pub guess: usize,
    pub guess_correct: bool,
    pub rewards: RewardBreakdown,
    /// Return credited to each action, aligned with `actions`.
    pub action_returns: Vec<f64>,
    pub j_end: usize,
}

impl EpisodeRecord {
    /// Repeated questions in this game (exact duplicates of an earlier one).
    pub fn repeated_questions(&self) -> usize {
        self.history.iter().enumerate().filter(|(i, (q, _))| self.history[..*i].iter().any(|(p, _)| p == q)).count()
    }

    /// 1-based round at which the tracker first held a single candidate.
    pub fn rounds_to_singleton(&self) -> Option<usize> {
        self.candidates_after.iter().position(|&c| c == 1).map(|i| i + 1)
    }
}

/// Plays one game. The tracker only feeds reward bookkeeping; the policy sees
/// the objects and history alone.
pub fn rollout(
    params: &PolicyParams,
    game: &GameInstance,
    config: &EpisodeConfig,
    mode: SelectionMode,
    rng: &mut SimRng,
) -> Result<EpisodeRecord> {
    let mut history: Vec<(Question, Answer)> = Vec::with_capacity(config.j_max);
    let mut actions = Vec::with_capacity(config.j_max);
    let mut tracker = CandidateTracker::new(game);
    let mut round_stats = Vec::with_capacity(config.j_max);
    let mut candidates_after = Vec::with_capacity(config.j_max);

    for _ in 0..config.j_max {
        let choice = select_action(params, &DialogueState::new(game, &history), mode, rng);
        let action = choice.action;
        actions.push(choice);
        let Action::Ask(q) = action else { break };
        let answer = oracle::answer_for_target(q, game, &config.oracle, rng)?;
        let dist = tracker.answer_distribution(q, game, &config.oracle, rng)?;
        let (next, stat) = tracker.update(q, &dist, answer, &config.oracle)?;
        tracker = next;
        round_stats.push(stat);
        candidates_after.push(tracker.len());
        history.push((q, answer));
    }

    let guess = guesser::guess(game, &history, &config.guesser, rng);
    let guess_correct = guess == game.target_id;
    let candidates_exhausted = tracker.is_empty();
    let k_end = if candidates_exhausted { game.n_objects() } else { tracker.len() };
    let outcome = EpisodeOutcome { round_stats, k_end, n_objects: game.n_objects(), guess_correct };
    let breakdown = rewards::combined_reward(&outcome, &config.reward);
    let action_returns = action_returns(&outcome, &breakdown, &config.reward, actions.len(), config.per_round_shaping);
    let j_end = outcome.round_stats.len();

    Ok(EpisodeRecord {
        game_seed: game.seed,
        rollout_seed: 0,
        n_objects: game.n_objects(),
        target_id: game.target_id,
        actions,
        history,
        round_stats: outcome.round_stats,
        candidates_after,
        k_end,
        candidates_exhausted,
        guess,
        guess_correct,
        rewards: breakdown,
        action_returns,
        j_end,
    })
}

fn action_returns(
    outcome: &EpisodeOutcome,
    breakdown: &RewardBreakdown,
    config: &RewardConfig,
    n_actions: usize,
    per_round: bool,
) -> Vec<f64> {
    if !per_round {
        return vec![breakdown.total; n_actions];
    }
    let terminal = rewards::combine(0.0, breakdown.r_c, breakdown.r_s, config);
    let scale = match config.rb_aggregation {
        Aggregation::Sum => 1.0,
        Aggregation::Mean => 1.0 / outcome.round_stats.len().max(1) as f64,
    };
    let scores: Vec<f64> = outcome.round_stats.iter().map(crate::ade::round_binary_score).collect();
    (0..n_actions)
        .map(|t| {
            let to_go: f64 = scores.iter().skip(t).sum();
            config.gamma * scale * to_go + terminal
        })
        .collect()
}

/// Builds the world for `game_seed`, seeds a fresh stream and plays it.
pub fn play_seeded(
    params: &PolicyParams,
    config: &EpisodeConfig,
    game_seed: u64,
    rollout_seed: u64,
    mode: SelectionMode,
) -> Result<(GameInstance, EpisodeRecord)> {
    let game = config.world.build(game_seed)?;
    let mut rng = rng::rng_from_seed(rollout_seed);
    let mut record = rollout(params, &game, config, mode, &mut rng)?;
    record.rollout_seed = rollout_seed;
    Ok((game, record))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineState {
    pub value: Option<f64>,
    pub decay: f64,
}

impl BaselineState {
    pub fn new(decay: f64) -> Self {
        BaselineState { value: None, decay }
    }
}

/// One REINFORCE step with a moving-average baseline.
///
/// The advantage uses the baseline from before this batch (the batch mean on
/// the very first call); the baseline is then moved toward the batch mean.
pub fn reinforce_update(
    params: &PolicyParams,
    batch: &[EpisodeRecord],
    baseline: BaselineState,
    learning_rate: f64,
) -> Result<(PolicyParams, BaselineState)> {
    if batch.is_empty() {
        return Err(Error::Validation("reinforce_update needs a non-empty batch".into()));
    }
    let batch_mean = batch.iter().map(|e| e.rewards.total).sum::<f64>() / batch.len() as f64;
    let b = baseline.value.unwrap_or(batch_mean);

    let mut grad = vec![0.0; params.theta.len()];
    for ep in batch {
        for (choice, ret) in ep.actions.iter().zip(&ep.action_returns) {
            let adv = ret - b;
            if adv == 0.0 {
                continue;
            }
            for (g, s) in grad.iter_mut().zip(&choice.score_gradient) {
                *g += adv * s;
            }
        }
    }
    let scale = learning_rate / batch.len() as f64;
    let mut next = params.clone();
    for (t, g) in next.theta.iter_mut().zip(&grad) {
        *t += scale * g;
    }
    if grad.iter().chain(&next.theta).any(|x| !x.is_finite()) || !batch_mean.is_finite() {
        return Err(Error::NonFinite(format!("gradient {grad:?} with baseline {b} and batch mean {batch_mean}")));
    }
    let value = baseline.decay * b + (1.0 - baseline.decay) * batch_mean;
    Ok((next, BaselineState { value: Some(value), decay: baseline.decay }))
}

/// Per-epoch training summary, computed from that epoch's sampled rollouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub report: EvalReport,
    pub theta: Vec<f64>,
}

pub fn train(config: &TrainConfig) -> Result<(PolicyParams, Vec<EpochLog>)> {
    train_with(config, Execution::default(), |_, _| Ok(()))
}

/// Trains and calls `on_epoch` after each epoch with the log row and the
/// current parameters. Results do not depend on `exec`.
pub fn train_with<F>(config: &TrainConfig, exec: Execution, mut on_epoch: F) -> Result<(PolicyParams, Vec<EpochLog>)>
where
    F: FnMut(&EpochLog, &PolicyParams) -> Result<()>,
{
    config.validate()?;
    let mut params = config.initial_params();
    let mut baseline = BaselineState::new(config.baseline_decay);
    let mut logs = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut acc = ReportAccumulator::new(SelectionMode::Sample);
        let epoch_start = (epoch * config.games_per_epoch) as u64;
        let mut done = 0;
        while done < config.games_per_epoch {
            let n = config.batch_size.min(config.games_per_epoch - done);
            let first = epoch_start + done as u64;
            let batch = rollout_batch(&params, config, first, n, exec)?;
            for ep in &batch {
                acc.add(ep);
            }
            (params, baseline) = reinforce_update(&params, &batch, baseline, config.learning_rate)?;
            done += n;
        }
        let log = EpochLog { epoch: epoch + 1, report: acc.finish(), theta: params.theta.clone() };
        on_epoch(&log, &params)?;
        logs.push(log);
    }
    Ok((params, logs))
}

/// Plays training episodes `first..first + n` with sampled actions.
pub fn rollout_batch(
    params: &PolicyParams,
    config: &TrainConfig,
    first: u64,
    n: usize,
    exec: Execution,
) -> Result<Vec<EpisodeRecord>> {
    par::try_map_indexed(n, exec, |i| {
        let index = first + i as u64;
        let rollout_seed = config.episode.rollout_seed(config.master_seed, stream::TRAIN_ROLLOUT, index);
        play_seeded(params, &config.episode, config.world_seed(index), rollout_seed, SelectionMode::Sample)
            .map(|(_, r)| r)
    })
}

/// The reward ablations, each differing from `base` only in its rewards.
pub fn ablation_suite(base: &TrainConfig) -> Vec<(String, TrainConfig)> {
    let with_reward = |f: &dyn Fn(&mut RewardConfig)| {
        let mut c = base.clone();
        f(&mut c.episode.reward);
        c
    };
    vec![
        ("wo_rb".to_string(), with_reward(&|r| r.gamma = 0.0)),
        (
            "wo_rc".to_string(),
            with_reward(&|r| {
                r.alpha = 0.0;
                r.beta = 0.0;
            }),
        ),
        (
            "rs_only".to_string(),
            with_reward(&|r| {
                r.gamma = 0.0;
                r.alpha = 0.0;
                r.beta = 0.0;
                r.use_rs = true;
            }),
        ),
    ]
}
