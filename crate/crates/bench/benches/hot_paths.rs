use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morphogrow::morphology::{build_robot, MorphKind, MAX_EXTENSION};
use morphogrow::neat::{Genome, InnovationDb, NeatParams, Network, NodeId, FIRST_OUTPUT};
use morphogrow::physics::SolverSettings;
use morphogrow::rollout::{evaluate_model, EpisodeConfig};
use morphogrow::stats::{mann_whitney_exact, mann_whitney_normal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: [MorphKind; 3] = [MorphKind::Quadruped, MorphKind::Hexapod, MorphKind::Octopod];

fn genome(kind: MorphKind, structural_steps: usize) -> Genome {
    let outputs = kind.actuated_joints();
    let mut db = InnovationDb::new(FIRST_OUTPUT + outputs as NodeId);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = Genome::minimal(outputs, &mut db, &mut rng, 1.0);
    let params = NeatParams {
        add_node_prob: 0.5,
        add_connection_prob: 0.5,
        ..NeatParams::default()
    };
    for _ in 0..structural_steps {
        g.mutate(&mut rng, &mut db, &params);
    }
    g
}

fn physics_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("physics_step");
    for kind in KINDS {
        let model = build_robot(kind, MAX_EXTENSION).unwrap();
        let episode = EpisodeConfig::default();
        group.bench_function(BenchmarkId::from_parameter(kind), |b| {
            b.iter_batched(
                || {
                    model
                        .instantiate(episode.physics_dt, SolverSettings::default())
                        .unwrap()
                },
                |mut world| {
                    for _ in 0..10 {
                        world.step().unwrap();
                    }
                    world
                },
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn episode(c: &mut Criterion) {
    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    for kind in KINDS {
        let model = build_robot(kind, MAX_EXTENSION).unwrap();
        let g = genome(kind, 10);
        let (episode, physics) = (EpisodeConfig::default(), SolverSettings::default());
        group.bench_function(BenchmarkId::from_parameter(kind), |b| {
            b.iter(|| evaluate_model(black_box(&g), &model, &episode, &physics).unwrap())
        });
    }
    group.finish();
}

fn network(c: &mut Criterion) {
    let g = genome(MorphKind::Octopod, 40);
    let mut net = Network::decode(&g);
    c.bench_function("network_activate_octopod", |b| {
        b.iter(|| net.activate(black_box(0.3))[0])
    });
}

fn mann_whitney(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sample = |n: usize, shift: f64| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>() + shift).collect() };
    let (a8, b8) = (sample(8, 0.0), sample(8, 0.2));
    let (a30, b30) = (sample(30, 0.0), sample(30, 0.2));
    c.bench_function("mann_whitney_exact_8x8", |b| {
        b.iter(|| mann_whitney_exact(black_box(&a8), black_box(&b8)).unwrap())
    });
    c.bench_function("mann_whitney_normal_30x30", |b| {
        b.iter(|| mann_whitney_normal(black_box(&a30), black_box(&b30)).unwrap())
    });
}

criterion_group!(benches, physics_step, episode, network, mann_whitney);
criterion_main!(benches);
