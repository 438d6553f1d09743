use criterion::{criterion_group, criterion_main, Criterion};
use polyvem::{ElementCache, ElementConfig, LocalElement};
use polyvem_bench::bench_polygon;
use std::hint::black_box;

fn element_build(c: &mut Criterion) {
    let mesh = bench_polygon();
    let mut group = c.benchmark_group("element_build");
    for (m, k) in [(1usize, 1usize), (2, 3), (3, 4)] {
        let config = ElementConfig::new(2, m, k).unwrap();
        group.bench_function(format!("polygon_m{m}_k{k}"), |b| {
            b.iter(|| {
                let cache = ElementCache::new();
                let elem = LocalElement::build(&mesh, 0, &config, &cache).unwrap();
                black_box(elem.a_loc[(0, 0)])
            })
        });
    }
    group.finish();
}

criterion_group!(benches, element_build);
criterion_main!(benches);
