use criterion::{black_box, criterion_group, criterion_main, Criterion};

use csvrptw::lp::{Simplex, Tolerances};
use csvrptw_bench::packing_lp;

fn simplex(c: &mut Criterion) {
    let mut group = c.benchmark_group("simplex");
    for (rows, cols) in [(20, 100), (50, 400)] {
        let prob = packing_lp(rows, cols);
        group.bench_function(format!("{rows}x{cols}"), |b| {
            b.iter(|| Simplex::new(black_box(prob.clone()), Tolerances::default()).solve())
        });
    }
    group.finish();
}

criterion_group!(benches, simplex);
criterion_main!(benches);
