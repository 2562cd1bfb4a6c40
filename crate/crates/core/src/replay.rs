//! Versioned per-game replay documents.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{Checkpoint, SelectionMode};
use crate::rng;
use crate::trainer::{rollout, EpisodeConfig, EpisodeRecord};
use crate::world::GameInstance;

pub const REPLAY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayGame {
    pub game: GameInstance,
    pub rollout_seed: u64,
    pub record: EpisodeRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFile {
    pub format_version: u32,
    pub config_digest: String,
    pub master_seed: u64,
    pub mode: SelectionMode,
    pub checkpoint: Checkpoint,
    pub episode: EpisodeConfig,
    pub games: Vec<ReplayGame>,
}

impl ReplayFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        let found = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
        if found != REPLAY_FORMAT_VERSION as u64 {
            return Err(Error::Version { found: found as u32, expected: REPLAY_FORMAT_VERSION });
        }
        Ok(serde_json::from_value(raw)?)
    }

    /// Replays every game from its stored world and seed.
    pub fn reconstruct(&self) -> Result<Vec<EpisodeRecord>> {
        let params = self.checkpoint.params()?;
        self.games
            .iter()
            .map(|g| {
                let mut rng = rng::rng_from_seed(g.rollout_seed);
                let mut rec = rollout(&params, &g.game, &self.episode, self.mode, &mut rng)?;
                rec.rollout_seed = g.rollout_seed;
                Ok(rec)
            })
            .collect()
    }

    /// Indices of games whose replayed record differs from the stored one.
    pub fn mismatches(&self) -> Result<Vec<usize>> {
        let rebuilt = self.reconstruct()?;
        Ok(self.games.iter().zip(&rebuilt).enumerate().filter(|(_, (g, r))| g.record != **r).map(|(i, _)| i).collect())
    }
}
