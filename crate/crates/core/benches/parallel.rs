//! Sequential vs. data-parallel corpus Smatch on the bundled corpus.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use drskit::exec::Execution;
use drskit::smatch::{corpus_f1, CorpusOptions};

const CORPUS: &str = include_str!("../tests/data/roundtrip.drs");

// Perturbs every third line so the searches have work to do.
fn system_side(gold: &[&str]) -> Vec<String> {
    gold.iter()
        .enumerate()
        .map(|(i, l)| match i % 3 {
            0 => l.replace("Agent", "Theme"),
            1 => l.replacen(".n.01", ".n.02", 1),
            _ => l.to_string(),
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let gold: Vec<&str> = CORPUS.lines().collect();
    let system = system_side(&gold);
    let gold: Vec<String> = gold.iter().map(|s| s.to_string()).collect();

    let mut group = c.benchmark_group("corpus_f1");
    group.sample_size(20);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let opts = CorpusOptions { execution: exec, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &opts, |b, opts| {
            b.iter(|| corpus_f1(black_box(&system), black_box(&gold), opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
