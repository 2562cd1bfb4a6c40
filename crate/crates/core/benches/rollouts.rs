use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use qsearch::metrics::evaluate_games;
use qsearch::par::Execution;
use qsearch::policy::{action_distribution, DialogueState, PolicyParams, SelectionMode};
use qsearch::trainer::{rollout_batch, EpisodeConfig, TrainConfig};
use qsearch::world::WorldSpec;

fn trained_like() -> PolicyParams {
    PolicyParams { theta: vec![5.0, -1.0, 1.9, 0.7, -0.7, 0.0], ..PolicyParams::default() }
}

// Training batches: parallel vs sequential over the same 256 episodes.
fn bench_rollout_batch(c: &mut Criterion) {
    let cfg = TrainConfig::default();
    let params = trained_like();
    let mut group = c.benchmark_group("rollout_batch_256");
    for exec in [Execution::Parallel, Execution::Sequential] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| rollout_batch(black_box(&params), &cfg, 0, 256, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_evaluation(c: &mut Criterion) {
    let params = trained_like();
    let mut group = c.benchmark_group("evaluate_1000");
    for (name, world) in [("default16", WorldSpec::default()), ("bitworld6", WorldSpec::Bitworld { n_bits: 6 })] {
        let cfg = EpisodeConfig { world, ..EpisodeConfig::default() };
        for exec in [Execution::Parallel, Execution::Sequential] {
            group.bench_function(format!("{name}/{exec:?}"), |b| {
                b.iter(|| evaluate_games(&params, &cfg, 1000, SelectionMode::Greedy, 7, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_action_distribution(c: &mut Criterion) {
    let params = trained_like();
    let game = WorldSpec::default().build(3).unwrap();
    c.bench_function("action_distribution_16x16", |b| {
        b.iter(|| action_distribution(black_box(&params), &DialogueState::new(&game, &[])))
    });
}

criterion_group!(benches, bench_rollout_batch, bench_evaluation, bench_action_distribution);
criterion_main!(benches);
