use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quarton::circuit::CircuitParams;
use quarton::config::RunConfig;
use quarton::dynamics::{run_trajectories, ReadoutConfig};
use quarton::exec::Exec;
use quarton::pipeline::readout_setup;
use quarton::sweep::{run_sweep, Axis, SweepSpec};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sweep(c: &mut Criterion) {
    let base = CircuitParams::nominal();
    let spec = SweepSpec {
        axis1: Axis::linspace("e_q", 60.0, 80.0, 4),
        axis2: None,
        constraints: Vec::new(),
        point: Default::default(),
    };
    let mut g = c.benchmark_group("sweep_4_points");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_sweep(&base, &spec, exec).unwrap())
        });
    }
    g.finish();
}

fn trajectories(c: &mut Criterion) {
    let readout = ReadoutConfig { eps0: Some(0.27), n_traj: 32, ..Default::default() };
    let cfg = RunConfig { readout: readout.clone(), ..Default::default() };
    let s = readout_setup(&cfg).unwrap();
    let mut g = c.benchmark_group("trajectories_32x1ns");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_trajectories(&s.model, s.eps0, &readout, &[1.0], exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, trajectories);
criterion_main!(benches);
