use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use curbtrack::{FilterConfig, FilterState};
use curbtrack_bench::saturated_stream;

fn ingest_throughput(c: &mut Criterion) {
    let (geom, stream) = saturated_stream(10, 150);
    let mut group = c.benchmark_group("ingest_10_vehicles");
    group.throughput(Throughput::Elements(stream.len() as u64));
    for memory in [5usize, 25, 101] {
        group.bench_with_input(BenchmarkId::from_parameter(memory), &memory, |b, &memory| {
            b.iter(|| {
                let config =
                    FilterConfig { sample_period: 15.0, ..FilterConfig::with_memory(memory) };
                let mut state = FilterState::new(config).unwrap();
                let mut emitted = 0usize;
                for obs in &stream {
                    emitted += state.ingest_frame(obs, &geom).unwrap().len();
                }
                std::hint::black_box(emitted)
            })
        });
    }
    group.finish();
}

fn flush_cost(c: &mut Criterion) {
    let (geom, stream) = saturated_stream(10, 150);
    c.bench_function("flush_after_150_frames_n101", |b| {
        b.iter_batched(
            || {
                let config =
                    FilterConfig { sample_period: 15.0, ..FilterConfig::with_memory(101) };
                let mut state = FilterState::new(config).unwrap();
                for obs in &stream {
                    state.ingest_frame(obs, &geom).unwrap();
                }
                state
            },
            |mut state| std::hint::black_box(state.flush(&geom).unwrap().len()),
            criterion::BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, ingest_throughput, flush_cost);
criterion_main!(benches);
