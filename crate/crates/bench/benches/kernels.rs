use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gffperc::field::SpectralSampler;
use gffperc::topology::{level_clusters_in, OpenGrid};
use gffperc_bench::{fixture, window, SIZES};

fn sampler(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_sample");
    g.sample_size(10);
    for n in SIZES {
        let s = SpectralSampler::padded(3, n, 2).unwrap();
        g.throughput(Throughput::Elements(window(n).len() as u64));
        let mut i = 0;
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                i += 1;
                black_box(s.sample(7, i))
            })
        });
    }
    g.finish();
}

fn labeling(c: &mut Criterion) {
    let mut g = c.benchmark_group("cluster_labeling");
    for n in SIZES {
        let f = fixture(n);
        let w = window(n);
        g.throughput(Throughput::Elements(w.len() as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(level_clusters_in(&f, 0.0, &w)))
        });
    }
    g.finish();
}

fn bfs(c: &mut Criterion) {
    let mut g = c.benchmark_group("level_set_bfs");
    for n in SIZES {
        let f = fixture(n);
        let grid = OpenGrid::level_set(&f, -0.5, &window(n));
        let src: Vec<usize> = grid.interior().filter(|&i| grid.is_open(i)).take(1).collect();
        let mut dist = Vec::new();
        g.throughput(Throughput::Elements(window(n).len() as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                grid.bfs(black_box(&src), u32::MAX, &mut dist);
                black_box(dist.len())
            })
        });
    }
    g.finish();
}

criterion_group!(benches, sampler, labeling, bfs);
criterion_main!(benches);
