//! Final target prediction. The guess always ranges over every object in
//! the game, never over the reward-side candidate set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::truthful_answer;
use crate::policy::{consistent_set, DialogueState};
use crate::world::{Answer, GameInstance, Question};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GuesserMode {
    /// Uniform over the history-consistent objects.
    #[default]
    ConsistentUniform,
    /// Softmax over the number of matching history answers.
    SoftConsistency,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GuesserConfig {
    pub mode: GuesserMode,
    /// Softmax temperature for `SoftConsistency`; 0 means hard argmax.
    pub softness: f64,
}

impl GuesserConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.softness.is_finite() || self.softness < 0.0 {
            return Err(Error::Validation(format!("softness must be finite and >= 0, got {}", self.softness)));
        }
        Ok(())
    }
}

pub fn guess<R: Rng + ?Sized>(
    game: &GameInstance,
    history: &[(Question, Answer)],
    config: &GuesserConfig,
    rng: &mut R,
) -> usize {
    let n = game.n_objects();
    match config.mode {
        GuesserMode::ConsistentUniform => {
            let set = consistent_set(&DialogueState::new(game, history));
            if set.is_empty() {
                rng.gen_range(0..n)
            } else {
                set[rng.gen_range(0..set.len())]
            }
        }
        GuesserMode::SoftConsistency => {
            let scores: Vec<f64> = game
                .objects
                .iter()
                .map(|o| history.iter().filter(|(q, a)| truthful_answer(*q, o).is_ok_and(|t| t == *a)).count() as f64)
                .collect();
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = if config.softness == 0.0 {
                scores.iter().map(|s| if *s == max { 1.0 } else { 0.0 }).collect()
            } else {
                scores.iter().map(|s| ((s - max) / config.softness).exp()).collect()
            };
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    return i;
                }
                u -= w;
            }
            weights.iter().rposition(|w| *w > 0.0).unwrap_or(n - 1)
        }
    }
}
