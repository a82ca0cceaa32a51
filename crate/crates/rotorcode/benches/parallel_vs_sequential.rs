//! Compares the data-parallel distance kernels against single-threaded
//! execution. With the `parallel` feature the same code runs under rayon
//! pools of 1 and N threads; without it only the sequential fallback exists.

use criterion::{criterion_group, criterion_main, Criterion};
use rotorcode::constructions as cons;
use rotorcode::distance::{x_distance_exact, z_upper_spread, SpreadOptions};
use std::f64::consts::PI;

#[cfg(feature = "parallel")]
fn with_threads<T>(threads: usize, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T>(_threads: usize, f: impl FnOnce() -> T) -> T {
    f()
}

fn thread_counts() -> Vec<usize> {
    #[cfg(feature = "parallel")]
    {
        let cores = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(4);
        if cores > 1 {
            vec![1, cores]
        } else {
            vec![1]
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        vec![1]
    }
}

fn bench_x_distance(c: &mut Criterion) {
    let code = cons::torus2(3, 4).unwrap();
    let mut group = c.benchmark_group("x_distance/torus2(3,4)");
    group.sample_size(10);
    for threads in thread_counts() {
        group.bench_function(format!("{threads}-threads"), |b| {
            b.iter(|| with_threads(threads, || x_distance_exact(&code, 3).unwrap().d_x))
        });
    }
    group.finish();
}

fn bench_spread(c: &mut Criterion) {
    let code = cons::rp2_9();
    let opts = SpreadOptions { restarts: 16, ..SpreadOptions::default() };
    let mut group = c.benchmark_group("z_spread/rp2_9");
    group.sample_size(10);
    for threads in thread_counts() {
        group.bench_function(format!("{threads}-threads"), |b| {
            b.iter(|| with_threads(threads, || z_upper_spread(&code, 0, PI, &opts).value))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_x_distance, bench_spread);
criterion_main!(benches);
