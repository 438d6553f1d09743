use criterion::{criterion_group, criterion_main, Criterion};
use polyvem::femsolve::{assemble, build_elements, manufactured, GlobalDofMap, ManufacturedCase};
use polyvem::ElementConfig;
use polyvem_bench::bench_grid;
use std::hint::black_box;

fn global_assembly(c: &mut Criterion) {
    let mesh = bench_grid();
    let config = ElementConfig::new(2, 1, 1).unwrap();
    let problem = manufactured(ManufacturedCase::Bump, 2, 1).unwrap();

    c.bench_function("build_elements_16x16_m1_k1", |b| {
        b.iter(|| black_box(build_elements(&mesh, &config).unwrap().len()))
    });

    let elems = build_elements(&mesh, &config).unwrap();
    let dofmap = GlobalDofMap::new(&mesh, &config);
    c.bench_function("assemble_16x16_m1_k1", |b| {
        b.iter(|| {
            let sys = assemble(
                &mesh,
                &elems,
                &dofmap,
                problem.f.as_ref(),
                problem.f_poly.as_ref(),
                12,
            )
            .unwrap();
            black_box(sys.nnz())
        })
    });
}

criterion_group!(benches, global_assembly);
criterion_main!(benches);
