use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nonlocal_bench::oscillatory_field;
use nonlocal_core::kernels::convolve_with;
use nonlocal_core::{kernel_weights, Alignment, BoundaryRule, ConvolutionMethod, KernelProfile};
use std::hint::black_box;

fn convolution(c: &mut Criterion) {
    let field = oscillatory_field(4000);
    let mut group = c.benchmark_group("convolution");
    for eps in [0.01, 0.05, 0.2] {
        let kernel = kernel_weights(
            KernelProfile::BoxBackward,
            eps,
            field.grid(),
            Alignment::InterfaceCentered,
        )
        .unwrap();
        for (name, method) in [
            ("direct", ConvolutionMethod::Direct),
            ("sliding-box", ConvolutionMethod::SlidingBox),
        ] {
            group.bench_with_input(BenchmarkId::new(name, eps), &kernel, |b, k| {
                b.iter(|| convolve_with(black_box(&field), k, BoundaryRule::Periodic, method))
            });
        }
    }
    group.finish();
}

fn weights(c: &mut Criterion) {
    let grid = *oscillatory_field(4000).grid();
    let mut group = c.benchmark_group("kernel_weights");
    for profile in KernelProfile::ALL {
        group.bench_function(profile.name(), |b| {
            b.iter(|| {
                kernel_weights(profile, black_box(0.1), &grid, Alignment::CellCentered).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, convolution, weights);
criterion_main!(benches);
