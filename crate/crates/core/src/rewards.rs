//! Episode rewards: the per-round bisection reward, the candidate
//! minimization reward paid on success, the 0-1 success reward, and their
//! weighted sum.

use serde::{Deserialize, Serialize};

use crate::ade::{round_binary_score, RoundStat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub use_rs: bool,
    /// Keep the alpha success bonus even when the 0-1 reward is also paid.
    pub include_alpha_with_rs: bool,
    pub rb_aggregation: Aggregation,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha: 4.0,
            beta: 0.7,
            gamma: 0.8,
            use_rs: false,
            include_alpha_with_rs: false,
            rb_aggregation: Aggregation::Sum,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// The success bonus actually paid inside the candidate reward.
    pub fn effective_alpha(&self) -> f64 {
        if self.use_rs && !self.include_alpha_with_rs {
            0.0
        } else {
            self.alpha
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub round_stats: Vec<RoundStat>,
    /// Candidate count after the final update.
    pub k_end: usize,
    pub n_objects: usize,
    pub guess_correct: bool,
}

pub fn binary_reward(outcome: &EpisodeOutcome, config: &RewardConfig) -> f64 {
    let sum: f64 = outcome.round_stats.iter().map(round_binary_score).sum();
    match config.rb_aggregation {
        Aggregation::Sum => sum,
        Aggregation::Mean if outcome.round_stats.is_empty() => 0.0,
        Aggregation::Mean => sum / outcome.round_stats.len() as f64,
    }
}

pub fn candidate_min_reward(outcome: &EpisodeOutcome, config: &RewardConfig) -> f64 {
    if !outcome.guess_correct {
        return 0.0;
    }
    let spread = (outcome.k_end as f64 - 1.0) / (outcome.n_objects as f64 - 1.0);
    config.effective_alpha() + config.beta * (1.0 - spread)
}

pub fn success_reward(outcome: &EpisodeOutcome) -> f64 {
    if outcome.guess_correct {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_b: f64,
    pub r_c: f64,
    pub r_s: f64,
    pub total: f64,
}

pub fn combine(r_b: f64, r_c: f64, r_s: f64, config: &RewardConfig) -> f64 {
    config.gamma * r_b + r_c + if config.use_rs { r_s } else { 0.0 }
}

pub fn combined_reward(outcome: &EpisodeOutcome, config: &RewardConfig) -> RewardBreakdown {
    let r_b = binary_reward(outcome, config);
    let r_c = candidate_min_reward(outcome, config);
    let r_s = success_reward(outcome);
    RewardBreakdown { r_b, r_c, r_s, total: combine(r_b, r_c, r_s, config) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn outcome(stats: &[(usize, usize)], k_end: usize, n: usize, ok: bool) -> EpisodeOutcome {
        EpisodeOutcome {
            round_stats: stats.iter().map(|&(k, l)| RoundStat::from_kl(k, l)).collect(),
            k_end,
            n_objects: n,
            guess_correct: ok,
        }
    }

    #[test]
    fn binary_reward_examples() {
        let c = RewardConfig::default();
        assert_eq!(binary_reward(&outcome(&[(8, 4), (4, 2), (2, 1)], 1, 8, true), &c), 3.0);
        assert_eq!(binary_reward(&outcome(&[(8, 8)], 8, 8, false), &c), 0.0);
        assert!((binary_reward(&outcome(&[(4, 3), (2, 2)], 2, 8, false), &c) - 0.5).abs() < 1e-15);
        let mean = RewardConfig { rb_aggregation: Aggregation::Mean, ..c };
        assert!((binary_reward(&outcome(&[(4, 3), (2, 2)], 2, 8, false), &mean) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn candidate_reward_examples() {
        let c = RewardConfig::default();
        assert_eq!(candidate_min_reward(&outcome(&[(10, 5)], 1, 10, true), &c), 4.7);
        assert_eq!(candidate_min_reward(&outcome(&[(10, 10)], 10, 10, true), &c), 4.0);
        assert_eq!(candidate_min_reward(&outcome(&[(10, 5)], 1, 10, false), &c), 0.0);
        assert_eq!(candidate_min_reward(&outcome(&[(10, 5)], 5, 10, false), &c), 0.0);
    }

    #[test]
    fn alpha_dropped_with_rs_unless_requested() {
        let o = outcome(&[(10, 5)], 1, 10, true);
        let with_rs = RewardConfig { use_rs: true, ..RewardConfig::default() };
        assert!((candidate_min_reward(&o, &with_rs) - 0.7).abs() < 1e-15);
        let both = RewardConfig { include_alpha_with_rs: true, ..with_rs };
        assert_eq!(candidate_min_reward(&o, &both), 4.7);
    }

    #[test]
    fn success_reward_cases() {
        assert_eq!(success_reward(&outcome(&[(4, 2)], 2, 4, true)), 1.0);
        assert_eq!(success_reward(&outcome(&[(4, 2)], 2, 4, false)), 0.0);
        assert_eq!(success_reward(&outcome(&[(4, 4)], 4, 4, true)), 1.0);
    }

    #[test]
    fn combined_examples() {
        let c = RewardConfig::default();
        assert!((combine(3.0, 4.7, 1.0, &c) - 7.1).abs() < 1e-12);
        let rs = RewardConfig { use_rs: true, ..c };
        let failed = outcome(&[(4, 4)], 4, 4, false);
        assert_eq!(combined_reward(&failed, &rs).total, 0.0);
        let o = outcome(&[(8, 4), (4, 3)], 2, 8, true);
        let no_rb = RewardConfig { gamma: 0.0, ..c };
        let b = combined_reward(&o, &no_rb);
        assert_eq!(b.total, b.r_c);
    }

    proptest! {
        #[test]
        fn candidate_reward_strictly_decreasing(n in 2usize..200, beta in 0.01f64..10.0, alpha in 0.0f64..10.0) {
            let c = RewardConfig { alpha, beta, ..RewardConfig::default() };
            let mut prev = f64::INFINITY;
            for k_end in 1..=n {
                let r = candidate_min_reward(&outcome(&[(n, n)], k_end, n, true), &c);
                prop_assert!(r < prev);
                prop_assert!(r >= 0.0 && r <= alpha + beta + 1e-12);
                prev = r;
            }
        }

        #[test]
        fn ablation_identities(
            ks in proptest::collection::vec((1usize..40, 0.0f64..1.0), 1..6),
            k_end in 1usize..10,
            ok in any::<bool>(),
            use_rs in any::<bool>(),
        ) {
            let stats: Vec<(usize, usize)> =
                ks.iter().map(|&(k, f)| (k, ((k as f64 * f).round() as usize).clamp(k.div_ceil(2), k))).collect();
            let o = outcome(&stats, k_end, 10, ok);
            let base = RewardConfig { use_rs, ..RewardConfig::default() };
            let full = combined_reward(&o, &base);

            prop_assert!(full.r_b >= 0.0 && full.r_b <= stats.len() as f64 + 1e-12);
            let linear = base.gamma * full.r_b + full.r_c + if use_rs { full.r_s } else { 0.0 };
            prop_assert_eq!(full.total, linear);

            let wo_rb = combined_reward(&o, &RewardConfig { gamma: 0.0, ..base });
            prop_assert_eq!(wo_rb.total, full.r_c + if use_rs { full.r_s } else { 0.0 });

            let wo_rc = combined_reward(&o, &RewardConfig { alpha: 0.0, beta: 0.0, ..base });
            prop_assert_eq!(wo_rc.r_c, 0.0);
            prop_assert_eq!(wo_rc.total, base.gamma * full.r_b + if use_rs { full.r_s } else { 0.0 });
        }
    }

    #[test]
    fn rejects_negative_weights() {
        assert!(RewardConfig { beta: -1.0, ..RewardConfig::default() }.validate().is_err());
        assert!(RewardConfig { gamma: f64::NAN, ..RewardConfig::default() }.validate().is_err());
    }
}
