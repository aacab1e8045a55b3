use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sasoc::exec::{try_map_indexed, Execution};
use sasoc::model::fixtures;
use sasoc::optimizer::{initial_state, sasoc_iteration, simulation_model, Algorithm, Hyperparams, StageModel};
use sasoc::ServiceSystem;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

/// The 2K replications of one optimizer iteration, at a fixed staffing.
fn replication_batch(c: &mut Criterion) {
    let system = ServiceSystem::new(fixtures::two_by_two()).expect("fixture is valid");
    let hp = Hyperparams::default();
    let model = simulation_model(&system, &hp).expect("fixture has workload");
    let point = vec![2.0; model.dimension()];
    let mut group = c.benchmark_group("replication_batch");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| try_map_indexed(2 * hp.replications, mode, |m| model.sample(&point, m as u64)).expect("simulation succeeds"))
        });
    }
    group.finish();
}

/// One full SASOC-W iteration, including the inverse-Hessian update.
fn optimizer_iteration(c: &mut Criterion) {
    let system = ServiceSystem::new(fixtures::two_by_two()).expect("fixture is valid");
    let hp = Hyperparams { algorithm: Algorithm::Woodbury, ..Default::default() };
    let model = simulation_model(&system, &hp).expect("fixture has workload");
    let mut group = c.benchmark_group("sasoc_w_iteration");
    for (name, mode) in MODES {
        let cfg = hp.iteration_config(mode).expect("defaults are valid");
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter_batched(
                || initial_state(&model, &hp).expect("defaults are valid"),
                |mut state| sasoc_iteration(&model, &mut state, cfg).expect("iteration succeeds"),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = replication_batch, optimizer_iteration
}
criterion_main!(benches);
