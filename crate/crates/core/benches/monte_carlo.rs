//! Parallel vs sequential replicate loops. On a single-core machine the two
//! should be within noise of each other; the gap grows with the core count.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spotvol::inference::CouplingLaw;
use spotvol::par::{map_indexed, map_indexed_seq};
use spotvol::path::{simulate_observed, ModelConfig};
use spotvol::rng::{Channel, SeedStream};

fn coupling(c: &mut Criterion) {
    let law = CouplingLaw::fixed_k(false, 1.6, 1.0, 15).unwrap();
    let draw = law.draw_fn().unwrap();
    let streams = SeedStream::new(1);
    let chunks = 64;
    let per_chunk = 1024;
    let job = |i: usize| {
        let mut rng = streams.substream(Channel::Coupling, i as u64);
        (0..per_chunk).map(|_| draw(&mut rng)).sum::<f64>()
    };
    let mut g = c.benchmark_group("coupling_draws");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", chunks * per_chunk), |b| b.iter(|| map_indexed(chunks, job)));
    g.bench_function(BenchmarkId::new("sequential", chunks * per_chunk), |b| b.iter(|| map_indexed_seq(chunks, job)));
    g.finish();
}

fn paths(c: &mut Criterion) {
    let model = ModelConfig::standard(1.6, 2);
    let reps = 16;
    let job = |r: usize| simulate_observed(&model, r as u64).unwrap().returns.len();
    let mut g = c.benchmark_group("path_replicates");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", reps), |b| b.iter(|| map_indexed(reps, job)));
    g.bench_function(BenchmarkId::new("sequential", reps), |b| b.iter(|| map_indexed_seq(reps, job)));
    g.finish();
}

criterion_group!(benches, coupling, paths);
criterion_main!(benches);
