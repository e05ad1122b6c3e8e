use criterion::{criterion_group, criterion_main, Criterion};

use ssr_sim::bench::{run_experiment, Experiment, ExperimentId};

fn grid() -> Experiment {
    let mut e = Experiment::new(ExperimentId::SvPsVGrid);
    e.sweep.densities = vec![0.001, 0.01, 0.1, 0.3];
    e.sweep.vector_len = 20000;
    e
}

fn sweeps(c: &mut Criterion) {
    let mut g = c.benchmark_group("svpsv_grid");
    g.sample_size(10);
    for parallel in [false, true] {
        let mut e = grid();
        e.parallel = parallel;
        let name = if parallel { "parallel" } else { "sequential" };
        g.bench_function(name, |b| b.iter(|| run_experiment(&e).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
