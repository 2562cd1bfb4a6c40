//! Evaluation statistics: success rate, question repetition rate and the
//! rounds-to-singleton efficiency measures T, R and T/R.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::policy::{PolicyParams, SelectionMode};
use crate::rng::stream;
use crate::trainer::{play_seeded, EpisodeConfig, EpisodeRecord};
use crate::world::GameInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_games: usize,
    pub success_rate: f64,
    pub repetition_rate: f64,
    /// Mean rounds to the first single-candidate round, over games that got there.
    #[serde(rename = "T")]
    pub t: f64,
    /// Fraction of games that got down to one candidate.
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "T_over_R")]
    pub t_over_r: Option<f64>,
    pub mean_r_b: f64,
    pub mean_r_c: f64,
    pub mean_return: f64,
    pub mode: SelectionMode,
}

/// Streaming reduction over episodes. Feed episodes in a fixed order for
/// bit-identical results.
#[derive(Debug, Clone)]
pub struct ReportAccumulator {
    mode: SelectionMode,
    games: usize,
    successes: usize,
    questions: usize,
    repeats: usize,
    singleton_games: usize,
    singleton_rounds: usize,
    sum_rb: f64,
    sum_rc: f64,
    sum_return: f64,
}

impl ReportAccumulator {
    pub fn new(mode: SelectionMode) -> Self {
        ReportAccumulator {
            mode,
            games: 0,
            successes: 0,
            questions: 0,
            repeats: 0,
            singleton_games: 0,
            singleton_rounds: 0,
            sum_rb: 0.0,
            sum_rc: 0.0,
            sum_return: 0.0,
        }
    }

    pub fn add(&mut self, ep: &EpisodeRecord) {
        self.games += 1;
        self.successes += ep.guess_correct as usize;
        self.questions += ep.history.len();
        self.repeats += ep.repeated_questions();
        if let Some(t) = ep.rounds_to_singleton() {
            self.singleton_games += 1;
            self.singleton_rounds += t;
        }
        self.sum_rb += ep.rewards.r_b;
        self.sum_rc += ep.rewards.r_c;
        self.sum_return += ep.rewards.total;
    }

    pub fn finish(&self) -> EvalReport {
        let n = self.games.max(1) as f64;
        let r = self.singleton_games as f64 / n;
        let t = if self.singleton_games > 0 { self.singleton_rounds as f64 / self.singleton_games as f64 } else { 0.0 };
        EvalReport {
            n_games: self.games,
            success_rate: self.successes as f64 / n,
            repetition_rate: if self.questions > 0 { self.repeats as f64 / self.questions as f64 } else { 0.0 },
            t,
            r,
            t_over_r: (self.singleton_games > 0).then(|| t / r),
            mean_r_b: self.sum_rb / n,
            mean_r_c: self.sum_rc / n,
            mean_return: self.sum_return / n,
            mode: self.mode,
        }
    }
}

pub fn summarize<'a>(episodes: impl IntoIterator<Item = &'a EpisodeRecord>, mode: SelectionMode) -> EvalReport {
    let mut acc = ReportAccumulator::new(mode);
    for ep in episodes {
        acc.add(ep);
    }
    acc.finish()
}

/// Plays `n_games` evaluation games. Game `i` uses the same world and
/// rollout stream for any policy, so reports are paired across policies.
pub fn evaluate_games(
    params: &PolicyParams,
    config: &EpisodeConfig,
    n_games: usize,
    mode: SelectionMode,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<(GameInstance, EpisodeRecord)>> {
    if n_games == 0 {
        return Err(Error::Validation("n_games must be >= 1".into()));
    }
    config.validate()?;
    par::try_map_indexed(n_games, exec, |i| {
        let game_seed = crate::rng::derive_seed(master_seed, stream::EVAL_WORLD, i as u64);
        let rollout_seed = config.rollout_seed(master_seed, stream::EVAL_ROLLOUT, i as u64);
        play_seeded(params, config, game_seed, rollout_seed, mode)
    })
}

pub fn evaluate(
    params: &PolicyParams,
    config: &EpisodeConfig,
    n_games: usize,
    mode: SelectionMode,
    master_seed: u64,
) -> Result<EvalReport> {
    let games = evaluate_games(params, config, n_games, mode, master_seed, Execution::default())?;
    Ok(summarize(games.iter().map(|(_, r)| r), mode))
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) })
}

/// Field-wise median of several reports (e.g. one per training seed).
/// `T_over_R` takes the median over the reports that have it.
pub fn median_report(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports.first().ok_or_else(|| Error::Validation("median of zero reports".into()))?;
    let field = |f: fn(&EvalReport) -> f64| median(reports.iter().map(f).collect()).unwrap_or(0.0);
    Ok(EvalReport {
        n_games: first.n_games,
        success_rate: field(|r| r.success_rate),
        repetition_rate: field(|r| r.repetition_rate),
        t: field(|r| r.t),
        r: field(|r| r.r),
        t_over_r: median(reports.iter().filter_map(|r| r.t_over_r).collect()),
        mean_r_b: field(|r| r.mean_r_b),
        mean_r_c: field(|r| r.mean_r_c),
        mean_return: field(|r| r.mean_return),
        mode: first.mode,
    })
}

pub const CSV_HEADER: [&str; 12] = [
    "epoch",
    "mode",
    "n_games",
    "success_rate",
    "repetition_rate",
    "T",
    "R",
    "T_over_R",
    "mean_rb",
    "mean_rc",
    "mean_return",
    "seed",
];

/// `%.6g`-style rendering: 6 significant digits, trailing zeros trimmed.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_record(epoch: usize, report: &EvalReport, seed: u64) -> Vec<String> {
    vec![
        epoch.to_string(),
        report.mode.to_string(),
        report.n_games.to_string(),
        fmt_sig6(report.success_rate),
        fmt_sig6(report.repetition_rate),
        fmt_sig6(report.t),
        fmt_sig6(report.r),
        report.t_over_r.map(fmt_sig6).unwrap_or_default(),
        fmt_sig6(report.mean_r_b),
        fmt_sig6(report.mean_r_c),
        fmt_sig6(report.mean_return),
        seed.to_string(),
    ]
}

pub fn write_report_csv<W: Write>(out: W, rows: &[(usize, &EvalReport, u64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (epoch, report, seed) in rows {
        w.write_record(csv_record(*epoch, report, *seed))?;
    }
    w.flush()?;
    Ok(())
}

const COMPARED: [&str; 8] =
    ["success_rate", "repetition_rate", "T", "R", "T_over_R", "mean_rb", "mean_rc", "mean_return"];

fn compared_values(r: &EvalReport) -> [Option<f64>; 8] {
    [
        Some(r.success_rate),
        Some(r.repetition_rate),
        Some(r.t),
        Some(r.r),
        r.t_over_r,
        Some(r.mean_r_b),
        Some(r.mean_r_c),
        Some(r.mean_return),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub values: [Option<f64>; 8],
    /// Difference to the baseline row; absent when either side is absent.
    pub deltas: [Option<f64>; 8],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

/// Lines up named reports against the `baseline` entry.
pub fn compare(reports: &[(String, EvalReport)], baseline: &str) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Validation(format!("compare needs at least 2 reports, got {}", reports.len())));
    }
    let base = reports
        .iter()
        .find(|(n, _)| n == baseline)
        .ok_or_else(|| Error::Validation(format!("baseline {baseline:?} not among reports")))?;
    let base_vals = compared_values(&base.1);
    let rows = reports
        .iter()
        .map(|(name, r)| {
            let values = compared_values(r);
            let mut deltas = [None; 8];
            for (d, (v, b)) in deltas.iter_mut().zip(values.iter().zip(&base_vals)) {
                *d = v.zip(*b).map(|(v, b)| v - b);
            }
            ComparisonRow { name: name.clone(), values, deltas }
        })
        .collect();
    Ok(Comparison { baseline: baseline.to_string(), rows })
}

impl Comparison {
    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["name".to_string(), "baseline".to_string()];
        header.extend(COMPARED.iter().map(|c| c.to_string()));
        header.extend(COMPARED.iter().map(|c| format!("delta_{c}")));
        w.write_record(&header)?;
        let cell = |v: &Option<f64>| v.map(fmt_sig6).unwrap_or_default();
        for row in &self.rows {
            let mut rec = vec![row.name.clone(), self.baseline.clone()];
            rec.extend(row.values.iter().map(cell));
            rec.extend(row.deltas.iter().map(cell));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guesser;
    use crate::policy::F_REPEAT;
    use crate::rng::rng_from_seed;
    use crate::world::WorldSpec;

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1");
        assert_eq!(fmt_sig6(0.8), "0.8");
        assert_eq!(fmt_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig6(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_sig6(12.345678), "12.3457");
        assert_eq!(fmt_sig6(123456.7), "123457");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig6(0.0001234567), "0.000123457");
        assert_eq!(fmt_sig6(0.00001234567), "1.23457e-05");
        assert_eq!(fmt_sig6(-7.1), "-7.1");
        assert_eq!(fmt_sig6(999999.7), "1e+06");
    }

    #[test]
    fn bisection_policy_report_on_three_bits() {
        let cfg = EpisodeConfig { world: WorldSpec::Bitworld { n_bits: 3 }, j_max: 3, ..EpisodeConfig::default() };
        let games = evaluate_games(
            &PolicyParams::bisection_reference(),
            &cfg,
            100,
            SelectionMode::Greedy,
            0,
            Execution::default(),
        )
        .unwrap();
        // Per-game brute force: three halvings 8 -> 4 -> 2 -> 1.
        for (game, rec) in &games {
            assert_eq!(rec.candidates_after, vec![4, 2, 1]);
            assert_eq!(rec.round_stats.iter().map(|s| s.k).collect::<Vec<_>>(), vec![8, 4, 2]);
            assert_eq!(rec.guess, game.target_id);
        }
        let r = summarize(games.iter().map(|(_, r)| r), SelectionMode::Greedy);
        assert_eq!(r.success_rate, 1.0);
        assert_eq!(r.repetition_rate, 0.0);
        assert_eq!((r.t, r.r, r.t_over_r), (3.0, 1.0, Some(3.0)));
    }

    #[test]
    fn fixed_question_policy_repeats_four_of_five() {
        let mut p = PolicyParams::zeros(1.0, false);
        p.theta[F_REPEAT] = 20.0;
        let r = evaluate(&p, &EpisodeConfig::default(), 50, SelectionMode::Greedy, 3).unwrap();
        assert!((r.repetition_rate - 0.8).abs() < 1e-15);
    }

    #[test]
    fn failed_single_game() {
        // Untrained greedy policy on 16 objects: find a seed whose single game fails.
        let p = PolicyParams::default();
        let seed = (0..100)
            .find(|&s| {
                !evaluate_games(&p, &EpisodeConfig::default(), 1, SelectionMode::Greedy, s, Execution::Sequential)
                    .unwrap()[0]
                    .1
                    .guess_correct
            })
            .unwrap();
        let r = evaluate(&p, &EpisodeConfig::default(), 1, SelectionMode::Greedy, seed).unwrap();
        assert_eq!(r.success_rate, 0.0);
        assert_eq!(r.n_games, 1);
    }

    #[test]
    fn never_repeating_policy_has_zero_repetition() {
        let r =
            evaluate(&PolicyParams::bisection_reference(), &EpisodeConfig::default(), 200, SelectionMode::Greedy, 9)
                .unwrap();
        assert_eq!(r.repetition_rate, 0.0);
    }

    #[test]
    fn singleton_metric_matches_history_replay() {
        // R from tracker sizes vs R from re-deriving the consistent set after each prefix.
        let p = PolicyParams { theta: vec![2.0, -1.0, 0.3, 0.0, 0.0, 0.0], ..PolicyParams::default() };
        let games =
            evaluate_games(&p, &EpisodeConfig::default(), 300, SelectionMode::Sample, 5, Execution::default()).unwrap();
        for (game, rec) in &games {
            let replay = (1..=rec.history.len()).find(|&j| {
                crate::policy::consistent_set(&crate::policy::DialogueState::new(game, &rec.history[..j])).len() == 1
            });
            assert_eq!(rec.rounds_to_singleton(), replay);
        }
    }

    #[test]
    fn empty_dialogue_success_is_one_over_n() {
        let spec = WorldSpec::default();
        let mut rng = rng_from_seed(17);
        let trials = 20_000;
        let hits = (0..trials)
            .filter(|&i| {
                let g = spec.build(i as u64).unwrap();
                guesser::guess(&g, &[], &Default::default(), &mut rng) == g.target_id
            })
            .count();
        let p = 1.0 / 16.0;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p).abs() <= 3.0 * se);
    }

    #[test]
    fn compare_deltas() {
        let r = evaluate(&PolicyParams::bisection_reference(), &EpisodeConfig::default(), 20, SelectionMode::Greedy, 1)
            .unwrap();
        let c = compare(&[("a".into(), r.clone()), ("b".into(), r.clone())], "a").unwrap();
        for row in &c.rows {
            for d in row.deltas.iter().flatten() {
                assert_eq!(*d, 0.0);
            }
        }
        let mut other = r.clone();
        other.t_over_r = Some(r.t_over_r.unwrap() + 1.5);
        let c = compare(&[("full".into(), r.clone()), ("rs_only".into(), other)], "full").unwrap();
        assert!((c.row("rs_only").unwrap().deltas[4].unwrap() - 1.5).abs() < 1e-12);
        assert!(compare(&[], "a").is_err());
        assert!(compare(&[("a".into(), r)], "a").is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
        assert!(median_report(&[]).is_err());
    }

    #[test]
    fn csv_layout() {
        let r = evaluate(&PolicyParams::default(), &EpisodeConfig::default(), 10, SelectionMode::Greedy, 0).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &[(3, &r, 42)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,mode,n_games,success_rate,repetition_rate,T,R,T_over_R,mean_rb,mean_rc,mean_return,seed"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 12);
        assert_eq!((row[0], row[1], row[2], row[11]), ("3", "GREEDY", "10", "42"));
    }
}
