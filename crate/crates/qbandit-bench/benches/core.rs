//! Benchmarks of the hot paths: the Jacobi eigensolver, design updates,
//! median-of-means selection, full policy episodes and the simulators.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qbandit::estimators::{mom_select, DesignMatrix, MomBank};
use qbandit::harness::{
    run_episode, EnvironmentConfig, ExperimentConfig, PolicyConfig, TaskConfig,
};
use qbandit::matcore::{eig_sym, SymMatrix};
use qbandit::policies::WeightRule;
use qbandit::qcb::{run_qcb, ModelKind, QcbConfig};
use qbandit::quantum::random_unit_vector;
use qbandit::thermo::thermal_branch_work;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(dim: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let mut m = SymMatrix::identity(dim);
    for _ in 0..2 * dim {
        m.add_rank1(&random_unit_vector(dim, rng), rng.gen_range(0.1..5.0))
            .unwrap();
    }
    m
}

fn eigensolver(c: &mut Criterion) {
    let mut g = c.benchmark_group("eig_sym");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for dim in [2, 3, 8, 16] {
        let m = random_spd(dim, &mut rng);
        g.bench_with_input(BenchmarkId::from_parameter(dim), &m, |b, m| {
            b.iter(|| eig_sym(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn design_update(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let actions: Vec<Vec<f64>> = (0..64).map(|_| random_unit_vector(3, &mut rng)).collect();
    c.bench_function("design_update_d3", |b| {
        b.iter(|| {
            let mut d = DesignMatrix::new(3, 2.0).unwrap();
            for a in &actions {
                d.update(black_box(a), 1.0).unwrap();
            }
            d.lambda_min()
        })
    });
}

fn median_of_means(c: &mut Criterion) {
    let mut g = c.benchmark_group("mom_select");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in [10, 48] {
        let mut bank = MomBank::new(3, 2.0, k).unwrap();
        for _ in 0..32 {
            let a = random_unit_vector(3, &mut rng);
            let r: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            bank.update(&a, &r, 1.0).unwrap();
        }
        g.bench_with_input(BenchmarkId::from_parameter(k), &bank, |b, bank| {
            b.iter(|| mom_select(black_box(bank)).unwrap())
        });
    }
    g.finish();
}

fn episodes(c: &mut Criterion) {
    let mut g = c.benchmark_group("episode_2000_rounds");
    g.sample_size(10);
    let policies = [
        (
            "vvn",
            PolicyConfig::Vvn {
                lambda0: 2.0,
                k: 10,
                weight: WeightRule::Constant(0.3),
                delta: 0.1,
            },
        ),
        (
            "vn",
            PolicyConfig::Vn {
                lambda0: 2.0,
                weight: WeightRule::Constant(2.0),
                delta: 0.1,
            },
        ),
        ("bandit_pls", PolicyConfig::BanditPls),
    ];
    for (name, policy) in policies {
        let cfg = ExperimentConfig::new(
            2000,
            vec![0],
            TaskConfig::Bandit {
                environment: EnvironmentConfig::PureState { state: None },
                policy,
            },
        );
        g.bench_function(name, |b| {
            b.iter(|| run_episode(black_box(&cfg), 0).unwrap())
        });
    }
    g.finish();
}

fn recommender(c: &mut Criterion) {
    let mut g = c.benchmark_group("qcb_1000_rounds");
    g.sample_size(10);
    for model in [ModelKind::Ising, ModelKind::Cluster] {
        let cfg = QcbConfig::new(model);
        g.bench_function(format!("{model:?}"), |b| {
            b.iter(|| {
                let mut ctx = ChaCha8Rng::seed_from_u64(4);
                let mut env = ChaCha8Rng::seed_from_u64(5);
                run_qcb(black_box(&cfg), 1000, &mut ctx, &mut env).unwrap()
            })
        });
    }
    g.finish();
}

fn thermal_chain(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    c.bench_function("thermal_branch_work_m1000", |b| {
        b.iter(|| thermal_branch_work(0, black_box(1000), 0.1, 1.0, &mut rng))
    });
}

criterion_group!(
    benches,
    eigensolver,
    design_update,
    median_of_means,
    episodes,
    recommender,
    thermal_chain
);
criterion_main!(benches);
