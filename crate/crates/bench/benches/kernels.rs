use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use possfuse::experiment::{initial_state, ExperimentConfig};
use possfuse::oracle::random_state;
use possfuse::simulator::{build_birth_mixture, generate_measurements, generate_truth};
use possfuse::{fuse_chernoff, fuse_independent, Scan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn filter_step(c: &mut Criterion) {
    let config = ExperimentConfig::default();
    let sensor = &config.scenario.sensors[0];
    let filter = config.filter_for(sensor).unwrap();
    let truth = generate_truth(&config.scenario, 1);
    let scans = generate_measurements(&truth, sensor, &config.scenario.region, 2);

    // warm the filter up so the mixture has a realistic size
    let mut state = initial_state(&filter);
    let mut previous = Scan::empty(0);
    for scan in &scans[..20] {
        let birth = build_birth_mixture(&previous, &filter.birth).unwrap();
        state = filter.model.step(&state, &birth, scan).unwrap().updated;
        previous = scan.clone();
    }
    let birth = build_birth_mixture(&previous, &filter.birth).unwrap();
    let scan = &scans[20];
    c.bench_function("filter_step", |b| {
        b.iter(|| filter.model.step(&state, &birth, scan).unwrap())
    });
}

fn fusion(c: &mut Criterion) {
    let mut group = c.benchmark_group("fusion");
    for n in [1usize, 10, 50] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let a = random_state(&mut rng, 4, n);
        let b = random_state(&mut rng, 4, n);
        group.bench_with_input(BenchmarkId::new("chernoff", n), &n, |bench, _| {
            bench.iter(|| fuse_chernoff(&a, &b, 0.5).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("independent", n), &n, |bench, _| {
            bench.iter(|| fuse_independent(&a, &b).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, filter_step, fusion);
criterion_main!(benches);
