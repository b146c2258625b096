use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavectl_core::localctl::random_perturbation;
use wavectl_core::par;
use wavectl_core::wavesolver::{integrate_steps, ForcingMode};
use wavectl_core::{energy, Grid, Nonlinearity, State};

// A batch of independent damped runs, the shape of work behind heteroclinic
// branches, calibration pairs and survey pairs.
fn batch(n: usize, jobs: usize) -> (Grid, Vec<State>) {
    let g = Grid::with_defaults(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let states = (0..jobs).map(|_| random_perturbation(&mut rng, 1.5, &g)).collect();
    (g, states)
}

fn run(s: &State, g: &Grid, nl: &Nonlinearity) -> f64 {
    let tr = integrate_steps(s, ForcingMode::Damped, g.steps_in(2.0), g, nl, None).unwrap();
    energy(tr.last(), nl, g).unwrap()
}

fn bench_batch(c: &mut Criterion) {
    let nl = Nonlinearity::cubic(15.0);
    let mut group = c.benchmark_group("damped_batch");
    group.sample_size(10);
    for &n in &[63usize, 255] {
        let (g, states) = batch(n, 8);
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| par::map_sequential(&states, |s| run(s, &g, &nl)))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| par::map_parallel(&states, |s| run(s, &g, &nl)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
