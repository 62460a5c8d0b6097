use cmin_bench::{circle, sphere_sample};
use cmin_core::compact::{epsilon_net_flat, hausdorff_with, HausdorffKernel};
use cmin_core::gallery::{make_flow, FlowOptions};
use cmin_core::harvest_cmin;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn hausdorff(c: &mut Criterion) {
    let mut g = c.benchmark_group("hausdorff");
    for n in [250, 1000, 4000] {
        let a = sphere_sample(4, n, 1);
        let b = sphere_sample(4, n, 2);
        for (label, k) in [
            ("brute", HausdorffKernel::Brute),
            ("early-break", HausdorffKernel::EarlyBreak),
            ("grid", HausdorffKernel::Grid),
        ] {
            if n > 1000 && k == HausdorffKernel::Brute {
                continue;
            }
            g.bench_with_input(BenchmarkId::new(label, n), &n, |bench, _| {
                bench.iter(|| hausdorff_with(k, black_box(&a), black_box(&b)).unwrap())
            });
        }
    }
    let (a, b) = (circle(1.0, 20_000), circle(1.01, 20_000));
    g.bench_function("grid/near-circles-20000", |bench| {
        bench.iter(|| hausdorff_with(HausdorffKernel::Grid, black_box(&a), black_box(&b)).unwrap())
    });
    g.finish();
}

fn nets(c: &mut Criterion) {
    let s = sphere_sample(3, 20_000, 3);
    let mut g = c.benchmark_group("epsilon-net");
    for eps in [0.2, 0.05, 0.02] {
        g.bench_with_input(BenchmarkId::from_parameter(eps), &eps, |bench, &eps| {
            bench.iter(|| epsilon_net_flat(&s.space, black_box(s.coords()), eps).unwrap())
        });
    }
    g.finish();
}

fn harvest(c: &mut Criterion) {
    let entry = make_flow("nested_rings", &FlowOptions::default()).unwrap();
    let mut g = c.benchmark_group("harvest");
    g.sample_size(10);
    g.bench_function("nested_rings", |bench| {
        bench
            .iter(|| harvest_cmin(&entry.flow, &entry.params.seeds, &entry.params.harvest).unwrap())
    });
    g.finish();
}

criterion_group!(benches, hausdorff, nets, harvest);
criterion_main!(benches);
