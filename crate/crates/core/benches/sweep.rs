//! Sequential against rayon execution of an ε sweep, cold and warm started.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use orlicz_bounds::gamma_dist::GammaParams;
use orlicz_bounds::par::ExecMode;
use orlicz_bounds::sweep::{run_sweep, EpsGrid, ParamSource, RunConfig};

fn config(exec: ExecMode, warm_start: bool) -> RunConfig {
    let mut c = RunConfig::new(ParamSource::Explicit(
        GammaParams::new(4.60, 0.142).unwrap(),
    ));
    c.grid = EpsGrid::new(-4.0, -0.5, 32).unwrap();
    c.dof = 12;
    c.threshold = Some(1.0);
    c.exec = exec;
    c.warm_start = warm_start;
    c
}

fn sweep(c: &mut Criterion) {
    let mut modes = vec![("sequential", ExecMode::Sequential)];
    if orlicz_bounds::par::parallel_available() {
        modes.push(("parallel", ExecMode::Parallel));
    }
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for warm in [false, true] {
        let start = if warm { "warm" } else { "cold" };
        for (name, mode) in &modes {
            let cfg = config(*mode, warm);
            group.bench_with_input(BenchmarkId::new(*name, start), &cfg, |b, cfg| {
                b.iter(|| run_sweep(cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
