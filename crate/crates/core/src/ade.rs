//! Candidate tracking for reward computation.
//!
//! The tracker knows the target's answers, so it is only ever consulted to
//! compute rewards and efficiency metrics. Nothing in here is visible to the
//! question policy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{self, OracleConfig};
use crate::world::{Answer, GameInstance, Question};

/// How one question split the candidates that were alive when it was asked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStat {
    /// Candidate count before the update.
    pub k: usize,
    /// max(yes_count, no_count).
    pub l: usize,
    pub yes_count: usize,
    pub no_count: usize,
    pub na_count: usize,
}

impl RoundStat {
    pub fn from_counts(yes_count: usize, no_count: usize, na_count: usize) -> Self {
        RoundStat { k: yes_count + no_count + na_count, l: yes_count.max(no_count), yes_count, no_count, na_count }
    }

    /// Convenience for tests and examples that only care about (k, l).
    pub fn from_kl(k: usize, l: usize) -> Self {
        assert!(l <= k, "l must not exceed k");
        RoundStat { k, l, yes_count: l, no_count: k - l, na_count: 0 }
    }
}

/// Per-round score `1 - |l - k/2| / (k/2)`; zero when a single candidate is left.
pub fn round_binary_score(stat: &RoundStat) -> f64 {
    if stat.k <= 1 {
        return 0.0;
    }
    let half = stat.k as f64 / 2.0;
    1.0 - (stat.l as f64 - half).abs() / half
}

/// Answers of every current candidate, in candidate order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerDistribution {
    pub entries: Vec<(usize, Answer)>,
}

impl AnswerDistribution {
    pub fn get(&self, id: usize) -> Option<Answer> {
        self.entries.iter().find(|(i, _)| *i == id).map(|(_, a)| *a)
    }

    pub fn stat(&self) -> RoundStat {
        let (mut y, mut n, mut na) = (0, 0, 0);
        for (_, a) in &self.entries {
            match a {
                Answer::Yes => y += 1,
                Answer::No => n += 1,
                Answer::Na => na += 1,
            }
        }
        RoundStat::from_counts(y, n, na)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTracker {
    candidates: Vec<usize>,
    rounds: Vec<RoundStat>,
    history: Vec<(Question, Answer)>,
}

impl CandidateTracker {
    /// Starts with every object as a candidate.
    pub fn new(game: &GameInstance) -> Self {
        CandidateTracker { candidates: (0..game.n_objects()).collect(), rounds: Vec::new(), history: Vec::new() }
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn rounds(&self) -> &[RoundStat] {
        &self.rounds
    }

    pub fn history(&self) -> &[(Question, Answer)] {
        &self.history
    }

    pub fn answer_distribution<R: Rng + ?Sized>(
        &self,
        question: Question,
        game: &GameInstance,
        config: &OracleConfig,
        rng: &mut R,
    ) -> Result<AnswerDistribution> {
        let entries = self
            .candidates
            .iter()
            .map(|&id| Ok((id, oracle::answer(question, &game.objects[id], config, rng)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(AnswerDistribution { entries })
    }

    /// Keeps the candidates whose answer equals the target's. The returned
    /// stat describes the split before pruning.
    pub fn update(
        mut self,
        question: Question,
        distribution: &AnswerDistribution,
        target_answer: Answer,
        config: &OracleConfig,
    ) -> Result<(CandidateTracker, RoundStat)> {
        if distribution.entries.len() != self.candidates.len()
            || distribution.entries.iter().zip(&self.candidates).any(|((id, _), c)| id != c)
        {
            return Err(Error::Consistency("answer distribution does not cover the current candidates".into()));
        }
        let stat = distribution.stat();
        let next: Vec<usize> =
            distribution.entries.iter().filter(|(_, a)| *a == target_answer).map(|(id, _)| *id).collect();
        if next.is_empty() && config.is_truthful() {
            return Err(Error::Consistency(format!("no candidate answered {target_answer} under a truthful oracle")));
        }
        self.candidates = next;
        self.rounds.push(stat);
        self.history.push((question, target_answer));
        Ok((self, stat))
    }
}
