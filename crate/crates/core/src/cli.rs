//! Command-line front end: train, evaluate, run the reward ablations,
//! verify replays and play interactively against a human oracle.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration or
//! version error, 3 numerical failure during training.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::guesser;
use crate::metrics::{self, compare, median_report, EvalReport};
use crate::par::Execution;
use crate::policy::{self, consistent_set, Action, Checkpoint, DialogueState, PolicyParams, SelectionMode};
use crate::replay::{ReplayFile, ReplayGame, REPLAY_FORMAT_VERSION};
use crate::rng::{self, stream};
use crate::trainer::{self, ablation_suite};
use crate::world::{Answer, GameInstance, Question};

#[derive(Debug, Parser)]
#[command(name = "qsearch", version, about = "Question-asking game simulator and policy-gradient trainer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// Experiment config (key = value text, or a JSON object).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy and write checkpoints, log.csv and a manifest.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides master_seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on fresh worlds.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluation seed (overrides eval.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// greedy or sample (overrides eval.modes).
        #[arg(long)]
        mode: Option<SelectionMode>,
        /// Number of games (overrides eval.n_games).
        #[arg(long)]
        games: Option<usize>,
        /// Also write per-game replay files.
        #[arg(long)]
        replay: bool,
    },
    /// Train the full model and each reward ablation over the seed list.
    Ablate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the games stored in a replay file and check they match.
    Replay {
        #[arg(long)]
        replay: PathBuf,
    },
    /// Play against the agent: you pick an object and answer its questions.
    Play {
        /// Policy checkpoint; defaults to the hand-set bisection policy.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Seed for the world and the final guess.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the resolved configuration and its digest.
    Config {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Validation(_) | Error::Version { .. } => 2,
        Error::NonFinite(_) => 3,
        _ => 1,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdin = io::stdin();
    let mut stdout = io::stdout();
    match dispatch(cli.command, &mut stdin.lock(), &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn dispatch<R: BufRead, W: Write>(command: Command, input: &mut R, out: &mut W) -> Result<()> {
    match command {
        Command::Train { cfg, out: dir, seed } => {
            let config = load_config(&cfg, |c| {
                if let Some(s) = seed {
                    c.train.master_seed = s;
                }
            })?;
            let dir = out_dir(dir, &config);
            cmd_train(&config, &dir)?;
            writeln!(out, "wrote {}", dir.display())?;
        }
        Command::Eval { checkpoint, cfg, out: dir, seed, mode, games, replay } => {
            let config = load_config(&cfg, |c| {
                if let Some(s) = seed {
                    c.eval_seed = s;
                }
                if let Some(m) = mode {
                    c.eval_modes = vec![m];
                }
                if let Some(g) = games {
                    c.eval_n_games = g;
                }
            })?;
            let dir = out_dir(dir, &config);
            let reports = cmd_eval(&checkpoint, &config, &dir, replay)?;
            for r in &reports {
                writeln!(
                    out,
                    "{}: success {:.4} repetition {:.4} T {:.3} R {:.4} T/R {}",
                    r.mode,
                    r.success_rate,
                    r.repetition_rate,
                    r.t,
                    r.r,
                    r.t_over_r.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
                )?;
            }
        }
        Command::Ablate { cfg, out: dir } => {
            let config = load_config(&cfg, |_| {})?;
            let dir = out_dir(dir, &config);
            cmd_ablate(&config, &dir)?;
            writeln!(out, "wrote {}", dir.display())?;
        }
        Command::Replay { replay } => {
            let file = ReplayFile::load(&replay)?;
            let bad = file.mismatches()?;
            if bad.is_empty() {
                writeln!(out, "{} games reconstructed identically", file.games.len())?;
            } else {
                return Err(Error::Consistency(format!("replayed games differ at indices {bad:?}")));
            }
        }
        Command::Play { checkpoint, cfg, seed } => {
            let config = load_config(&cfg, |_| {})?;
            let params = match checkpoint {
                Some(p) => Checkpoint::load(&p)?.params()?,
                None => PolicyParams::bisection_reference(),
            };
            cmd_play(&params, &config, seed, input, out)?;
        }
        Command::Config { cfg } => {
            let config = load_config(&cfg, |_| {})?;
            write!(out, "{}", config.canonical())?;
            writeln!(out, "# digest {}", config.digest())?;
        }
    }
    Ok(())
}

fn load_config(args: &ConfigArgs, flags: impl FnOnce(&mut ExperimentConfig)) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    config.apply_overrides(&args.overrides)?;
    flags(&mut config);
    config.finalize()
}

fn out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(&config.output_dir))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    format_version: u32,
    command: &'a str,
    config_digest: String,
    master_seed: u64,
    eval_seed: u64,
    version: &'a str,
    files: Vec<String>,
    config: String,
}

fn write_manifest(dir: &Path, command: &str, config: &ExperimentConfig, files: Vec<String>) -> Result<()> {
    let m = Manifest {
        format_version: 1,
        command,
        config_digest: config.digest(),
        master_seed: config.train.master_seed,
        eval_seed: config.eval_seed,
        version: env!("CARGO_PKG_VERSION"),
        files,
        config: config.canonical(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}

pub fn cmd_train(config: &ExperimentConfig, dir: &Path) -> Result<PolicyParams> {
    fs::create_dir_all(dir)?;
    let digest = config.digest();
    let seed = config.train.master_seed;
    let mut files = vec!["log.csv".to_string()];
    let (params, logs) = trainer::train_with(&config.train, Execution::default(), |log, params| {
        if config.checkpoint_every > 0 && log.epoch % config.checkpoint_every == 0 {
            let name = format!("checkpoint_epoch_{:04}.json", log.epoch);
            Checkpoint::new(params, &digest, seed, log.epoch).save(&dir.join(&name))?;
            files.push(name);
        }
        Ok(())
    })?;
    let rows: Vec<(usize, &EvalReport, u64)> = logs.iter().map(|l| (l.epoch, &l.report, seed)).collect();
    metrics::write_report_csv(fs::File::create(dir.join("log.csv"))?, &rows)?;
    Checkpoint::new(&params, &digest, seed, config.train.epochs).save(&dir.join("checkpoint_final.json"))?;
    files.push("checkpoint_final.json".into());
    write_manifest(dir, "train", config, files)?;
    Ok(params)
}

pub fn cmd_eval(
    checkpoint: &Path,
    config: &ExperimentConfig,
    dir: &Path,
    with_replay: bool,
) -> Result<Vec<EvalReport>> {
    let ck = Checkpoint::load(checkpoint)?;
    let params = ck.params()?;
    fs::create_dir_all(dir)?;
    let mut files = vec!["report.csv".to_string()];
    let mut reports = Vec::new();
    for &mode in &config.eval_modes {
        let games = metrics::evaluate_games(
            &params,
            &config.train.episode,
            config.eval_n_games,
            mode,
            config.eval_seed,
            Execution::default(),
        )?;
        reports.push(metrics::summarize(games.iter().map(|(_, r)| r), mode));
        if with_replay {
            let name = format!("replay_{}.json", mode.to_string().to_ascii_lowercase());
            ReplayFile {
                format_version: REPLAY_FORMAT_VERSION,
                config_digest: config.digest(),
                master_seed: config.eval_seed,
                mode,
                checkpoint: ck.clone(),
                episode: config.train.episode.clone(),
                games: games
                    .into_iter()
                    .map(|(game, record)| ReplayGame { game, rollout_seed: record.rollout_seed, record })
                    .collect(),
            }
            .save(&dir.join(&name))?;
            files.push(name);
        }
    }
    let rows: Vec<(usize, &EvalReport, u64)> = reports.iter().map(|r| (ck.epoch, r, config.eval_seed)).collect();
    metrics::write_report_csv(fs::File::create(dir.join("report.csv"))?, &rows)?;
    write_manifest(dir, "eval", config, files)?;
    Ok(reports)
}

/// Variant name -> per-seed reports, for each evaluation mode.
pub type AblationResults = Vec<(String, Vec<(u64, Vec<EvalReport>)>)>;

pub fn cmd_ablate(config: &ExperimentConfig, dir: &Path) -> Result<AblationResults> {
    fs::create_dir_all(dir)?;
    let mut variants = vec![("full".to_string(), config.train.clone())];
    variants.extend(ablation_suite(&config.train));

    let mut results: AblationResults = Vec::new();
    let mut runs = csv::Writer::from_writer(fs::File::create(dir.join("ablation_runs.csv"))?);
    let mut header = vec!["variant".to_string(), "train_seed".to_string()];
    header.extend(metrics::CSV_HEADER.iter().map(|h| h.to_string()));
    runs.write_record(&header)?;
    let mut files = vec!["ablation_runs.csv".to_string()];

    for (name, base) in &variants {
        let mut per_seed = Vec::new();
        for &seed in &config.ablate_seeds {
            let train_cfg = trainer::TrainConfig { master_seed: seed, ..base.clone() };
            let (params, _) = trainer::train(&train_cfg)?;
            let ck_name = format!("checkpoint_{name}_seed{seed}.json");
            Checkpoint::new(&params, &config.digest(), seed, train_cfg.epochs).save(&dir.join(&ck_name))?;
            files.push(ck_name);
            let mut reports = Vec::new();
            for &mode in &config.eval_modes {
                let r = metrics::evaluate(&params, &train_cfg.episode, config.eval_n_games, mode, config.eval_seed)?;
                let mut rec = vec![name.clone(), seed.to_string()];
                rec.extend(metrics::csv_record(train_cfg.epochs, &r, config.eval_seed));
                runs.write_record(&rec)?;
                reports.push(r);
            }
            per_seed.push((seed, reports));
        }
        results.push((name.clone(), per_seed));
    }
    runs.flush()?;

    for (mi, mode) in config.eval_modes.iter().enumerate() {
        let medians = results
            .iter()
            .map(|(name, seeds)| {
                let reports: Vec<EvalReport> = seeds.iter().map(|(_, r)| r[mi].clone()).collect();
                Ok((name.clone(), median_report(&reports)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let name = format!("ablation_compare_{}.csv", mode.to_string().to_ascii_lowercase());
        compare(&medians, "full")?.write_csv(fs::File::create(dir.join(&name))?)?;
        files.push(name);
    }
    write_manifest(dir, "ablate", config, files)?;
    Ok(results)
}

fn parse_answer(line: &str) -> Option<Answer> {
    match line.trim().to_ascii_lowercase().as_str() {
        "y" | "yes" => Some(Answer::Yes),
        "n" | "no" => Some(Answer::No),
        "na" | "n/a" => Some(Answer::Na),
        _ => None,
    }
}

fn print_objects<W: Write>(game: &GameInstance, out: &mut W) -> io::Result<()> {
    let schema = &game.schema;
    write!(out, "{:>4}", "id")?;
    for a in schema.attributes() {
        write!(out, "  {:<10}", a.name)?;
    }
    writeln!(out)?;
    for o in &game.objects {
        write!(out, "{:>4}", o.id)?;
        for (i, v) in o.values.iter().enumerate() {
            write!(out, "  {:<10}", schema.value_name(i, *v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Interactive game with a human answering. The world's stored target is
/// never shown or used; the human's private choice is the target.
pub fn cmd_play<R: BufRead, W: Write>(
    params: &PolicyParams,
    config: &ExperimentConfig,
    seed: u64,
    input: &mut R,
    out: &mut W,
) -> Result<()> {
    let game = config.train.episode.world.build(rng::derive_seed(seed, stream::PLAY, 0))?;
    let mut rng = rng::derive_rng(seed, stream::PLAY, 1);
    writeln!(out, "Pick one of these objects and keep it to yourself:")?;
    print_objects(&game, out)?;
    writeln!(out, "Answer each question with y, n or na.")?;

    let mut history: Vec<(Question, Answer)> = Vec::new();
    'rounds: for round in 1..=config.train.episode.j_max {
        let choice =
            policy::select_action(params, &DialogueState::new(&game, &history), SelectionMode::Greedy, &mut rng);
        let Action::Ask(q) = choice.action else {
            writeln!(out, "I have enough information.")?;
            break;
        };
        loop {
            write!(out, "Q{round}: is it {}? [y/n/na] ", game.schema.describe(q))?;
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                writeln!(out)?;
                writeln!(out, "Input closed; ending the game.")?;
                return Ok(());
            }
            match parse_answer(&line) {
                Some(a) => {
                    history.push((q, a));
                    continue 'rounds;
                }
                None => writeln!(out, "Please answer y, n or na.")?,
            }
        }
    }

    let guess = guesser::guess(&game, &history, &config.train.episode.guesser, &mut rng);
    let survivors = consistent_set(&DialogueState::new(&game, &history));
    writeln!(out, "My guess: object {guess}")?;
    if survivors.is_empty() {
        writeln!(out, "No object matches all of your answers.")?;
    } else {
        let ids: Vec<String> = survivors.iter().map(usize::to_string).collect();
        writeln!(out, "Objects still consistent with your answers: {}", ids.join(", "))?;
    }
    Ok(())
}
