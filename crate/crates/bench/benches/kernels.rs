use criterion::{criterion_group, criterion_main, Criterion};
use pfqmc::estimators::{local_energy, stochastic_reconfiguration};
use pfqmc::hamiltonian::{cholesky_decompose, without_dse};
use pfqmc::model::CavitySpec;
use pfqmc::oracle::fci_ground_state;
use pfqmc::rng::substream;
use pfqmc::walker::{propagate_step, reorthogonalize, Constraint};
use pfqmc_bench::{chain4, coupled_dimer, synthetic_psd_tensor, walker_population};
use std::hint::black_box;

fn bench_propagation(c: &mut Criterion) {
    let setup = coupled_dimer(0.005);
    let mut group = c.benchmark_group("propagation");

    group.bench_function("step_256_walkers", |b| {
        let mut population = walker_population(&setup.trial, 256);
        let mut step = 0u64;
        b.iter(|| {
            step += 1;
            for (slot, walker) in population.iter_mut().enumerate() {
                let mut rng = substream(1, slot as u64, step);
                let _ = propagate_step(
                    walker,
                    &setup.propagator,
                    &setup.trial,
                    &mut rng,
                    Constraint::Phaseless,
                );
            }
        });
    });

    group.bench_function("reorthogonalize_256_walkers", |b| {
        let mut population = walker_population(&setup.trial, 256);
        for (slot, walker) in population.iter_mut().enumerate() {
            let mut rng = substream(2, slot as u64, 1);
            let _ = propagate_step(
                walker,
                &setup.propagator,
                &setup.trial,
                &mut rng,
                Constraint::Phaseless,
            );
        }
        b.iter(|| {
            for walker in population.iter_mut() {
                let _ = reorthogonalize(walker, &setup.trial);
            }
        });
    });

    group.bench_function("local_energy_256_walkers", |b| {
        let population = walker_population(&setup.trial, 256);
        b.iter(|| {
            for walker in &population {
                black_box(
                    local_energy(walker, &setup.trial, &setup.dse, &setup.chol, &setup.cavity)
                        .unwrap(),
                );
            }
        });
    });

    group.bench_function("reconfigure_256_walkers", |b| {
        let template = {
            let mut population = walker_population(&setup.trial, 256);
            for (slot, walker) in population.iter_mut().enumerate() {
                walker.weight = 0.5 + (slot % 7) as f64 * 0.25;
            }
            population
        };
        let mut step = 0u64;
        b.iter(|| {
            step += 1;
            let mut population = template.clone();
            let mut rng = substream(3, pfqmc::rng::STREAM_RECONFIGURE, step);
            stochastic_reconfiguration(&mut population, &mut rng).unwrap();
            black_box(population.len());
        });
    });

    group.finish();
}

fn bench_factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorization");
    for (label, n_orb, rank) in [("m8_rank6", 8usize, 6usize), ("m16_rank10", 16, 10)] {
        let tensor = synthetic_psd_tensor(n_orb, rank);
        group.bench_function(format!("cholesky_{label}"), |b| {
            b.iter(|| black_box(cholesky_decompose(&tensor, 1e-8).unwrap().count()));
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(20);
    let set = chain4();
    let dse = without_dse(&set);
    group.bench_function("fci_chain4_bare", |b| {
        b.iter(|| black_box(fci_ground_state(&dse, &CavitySpec::empty()).unwrap().0));
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_propagation,
    bench_factorization,
    bench_oracle
);
criterion_main!(benches);
