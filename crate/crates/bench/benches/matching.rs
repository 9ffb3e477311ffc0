use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use matchbench_bench::{binary_descriptors, float_descriptors};
use matchbench_core::matching::{nn_match, nn_match_reverse, ratio_filter, symmetrize, SymmetrizeMode};
use matchbench_core::metrics::maa;

fn nearest_neighbours(c: &mut Criterion) {
    let mut group = c.benchmark_group("nn_match");
    group.sample_size(20);
    for n in [500, 2000] {
        let (a, b) = (float_descriptors(n, 128, 1), float_descriptors(n, 128, 2));
        group.bench_with_input(BenchmarkId::new("float128", n), &(a, b), |bench, (a, b)| {
            bench.iter(|| nn_match(black_box(a), black_box(b)))
        });
        let (a, b) = (binary_descriptors(n, 256, 3), binary_descriptors(n, 256, 4));
        group.bench_with_input(BenchmarkId::new("binary256", n), &(a, b), |bench, (a, b)| {
            bench.iter(|| nn_match(black_box(a), black_box(b)))
        });
    }
    group.finish();
}

fn filters(c: &mut Criterion) {
    let (a, b) = (float_descriptors(2000, 128, 5), float_descriptors(2000, 128, 6));
    let fwd = nn_match(&a, &b).unwrap();
    let bwd = nn_match_reverse(&a, &b).unwrap();
    c.bench_function("ratio_filter", |bench| bench.iter(|| ratio_filter(black_box(&fwd), 0.8)));
    c.bench_function("symmetrize_both", |bench| {
        bench.iter(|| symmetrize(black_box(&fwd), black_box(&bwd), SymmetrizeMode::Both))
    });
    let errors: Vec<f64> = (0..4950).map(|k| (k % 200) as f64 * 0.1).collect();
    c.bench_function("maa_4950_pairs", |bench| bench.iter(|| maa(black_box(&errors))));
}

criterion_group!(benches, nearest_neighbours, filters);
criterion_main!(benches);
