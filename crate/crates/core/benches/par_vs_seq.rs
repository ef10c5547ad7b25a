//! Parallel vs sequential throughput on the two hot sweeps: disc-grid
//! geometry evaluation and the closed-form Sylvester parameter box.

use cdlab_core::atomic::ModelSpec;
use cdlab_core::geometry::{grid_report, grid_report_seq, DiscGrid};
use cdlab_core::intertwiner::solve_sylvester_closed;
use cdlab_core::par::{map_collect, map_collect_seq};
use cdlab_core::C64;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn geometry_grid(c: &mut Criterion) {
    let spec = ModelSpec::new(
        1.0,
        1.5,
        3,
        &[
            (0, 1, C64::new(1.0, 0.3)),
            (1, 2, C64::new(-0.5, 0.2)),
            (0, 2, C64::new(0.1, 0.1)),
        ],
        256,
    )
    .unwrap();
    let grid = DiscGrid::default_grid();
    let mut group = c.benchmark_group("geometry_grid");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("rayon", grid.points.len()), &grid, |b, g| {
        b.iter(|| grid_report(&spec, g).unwrap())
    });
    group.bench_with_input(
        BenchmarkId::new("sequential", grid.points.len()),
        &grid,
        |b, g| b.iter(|| grid_report_seq(&spec, g).unwrap()),
    );
    group.finish();
}

fn sylvester_box(c: &mut Criterion) {
    let mut cells = Vec::new();
    for &l0 in &[1.0, 1.5, 2.0] {
        for &v in &[1.0, 2.0, 3.0] {
            for &k in &[0usize, 1, 2] {
                cells.push((l0, v, k));
            }
        }
    }
    let solve = |&(l0, v, k): &(f64, f64, usize)| {
        let lk1 = l0 + (k as f64 + 1.0) * v;
        solve_sylvester_closed(l0, lk1, k, 2048).unwrap().residual
    };
    let mut group = c.benchmark_group("sylvester_box");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("rayon", cells.len()), |b| {
        b.iter(|| map_collect(&cells, solve))
    });
    group.bench_function(BenchmarkId::new("sequential", cells.len()), |b| {
        b.iter(|| map_collect_seq(&cells, solve))
    });
    group.finish();
}

criterion_group!(benches, geometry_grid, sylvester_box);
criterion_main!(benches);
