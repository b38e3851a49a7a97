use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use delaunay4::exec::Execution;
use delaunay4::orbit::{a_grid, orbit_table, shoot, Spacing};
use delaunay4::spectral::{band_scan, monodromy, MonodromyOptions, Variant};
use delaunay4::{DimensionParams, ShootOptions};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn orbit_tables(c: &mut Criterion) {
    let p = DimensionParams::new(5).unwrap();
    let grid = a_grid(&p, 0.3 * p.a0, p.a0, 16, Spacing::Linear).unwrap();
    let opts = ShootOptions::default();
    let mut g = c.benchmark_group("orbit_table_16");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| orbit_table(&p, black_box(&grid), &opts, exec))
        });
    }
    g.finish();
}

fn band_scans(c: &mut Criterion) {
    let p = DimensionParams::new(5).unwrap();
    let o = shoot(&p, 0.6 * p.a0, &ShootOptions::default()).unwrap();
    let opts = MonodromyOptions::default();
    let sigma: Vec<f64> = (0..32).map(|k| -1.0 + k as f64 / 16.0).collect();
    let mut g = c.benchmark_group("band_scan_32");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                band_scan(
                    &p,
                    &o,
                    1,
                    Variant::Scalar,
                    black_box(&sigma),
                    1e-4,
                    &opts,
                    exec,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

fn spectra(c: &mut Criterion) {
    let p = DimensionParams::new(5).unwrap();
    let grid = a_grid(&p, 0.4 * p.a0, 0.95 * p.a0, 8, Spacing::Linear).unwrap();
    let table: Vec<_> = orbit_table(&p, &grid, &ShootOptions::default(), Execution::Parallel)
        .into_iter()
        .map(|o| o.unwrap())
        .collect();
    let jobs: Vec<(usize, u32)> = (0..table.len())
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .collect();
    let opts = MonodromyOptions::default();
    let mut g = c.benchmark_group("spectrum_8x3");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                exec.map(&jobs, |&(i, j)| {
                    monodromy(&p, &table[i], j, Variant::Scalar, &opts).unwrap()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, orbit_tables, band_scans, spectra);
criterion_main!(benches);
