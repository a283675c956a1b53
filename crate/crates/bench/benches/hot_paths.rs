use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use trm_core::{
    build_rm_hamiltonian, evolve_time_dependent, localized_state, run_one_step_protocol,
    winding_number_on_grid, EvolutionOptions, LatticeParams, Level, Propagator, PumpCycle,
    RmParameters,
};

const TWO_PI: f64 = std::f64::consts::TAU;

fn bench_hamiltonian_build(c: &mut Criterion) {
    let lattice = LatticeParams::new(64).unwrap();
    let params = RmParameters::new(TWO_PI * 5.0, TWO_PI * 10.0, 1.0, 0.5);
    c.bench_function("hamiltonian_build_64", |b| {
        b.iter(|| build_rm_hamiltonian(lattice, &params))
    });
}

fn bench_propagator(c: &mut Criterion) {
    let lattice = LatticeParams::new(64).unwrap();
    let params = RmParameters::new(TWO_PI * 5.0, TWO_PI * 10.0, 1.0, 0.5);
    let h = build_rm_hamiltonian(lattice, &params);
    let psi = localized_state(lattice, lattice.center(), Level::Ground).unwrap();
    c.bench_function("propagator_diagonalize_64", |b| {
        b.iter(|| Propagator::new(&h).unwrap())
    });
    let prop = Propagator::new(&h).unwrap();
    c.bench_function("propagator_advance_64", |b| {
        b.iter(|| prop.advance(&psi, 0.05))
    });
}

fn bench_pump_step(c: &mut Criterion) {
    let lattice = LatticeParams::new(64).unwrap();
    let cycle = PumpCycle::new(TWO_PI * 60.0, 0.2).unwrap();
    let psi = localized_state(lattice, lattice.center(), Level::Excited).unwrap();
    let opts = EvolutionOptions::new(cycle.period / 2000.0).without_edge_guard();
    c.bench_function("pump_hundred_steps_64", |b| {
        b.iter_batched(
            || psi.clone(),
            |state| {
                evolve_time_dependent(
                    |t| build_rm_hamiltonian(lattice, &cycle.params_at(t)),
                    0.0,
                    100.0 * cycle.period / 2000.0,
                    &opts,
                    &state,
                )
                .unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_winding(c: &mut Criterion) {
    c.bench_function("winding_4096", |b| {
        b.iter(|| winding_number_on_grid(TWO_PI * 5.0, TWO_PI * 15.0, 4096).unwrap())
    });
}

fn bench_one_step_protocol(c: &mut Criterion) {
    let lattice = LatticeParams::new(64).unwrap();
    let omega_b = TWO_PI * 10.0;
    let params = RmParameters::new(omega_b / 3.0, omega_b, 0.05 * omega_b, 0.0);
    let hold = std::f64::consts::PI / omega_b;
    c.bench_function("one_step_protocol_64", |b| {
        b.iter(|| run_one_step_protocol(lattice, &params, hold, None).unwrap())
    });
}

criterion_group!(
    benches,
    bench_hamiltonian_build,
    bench_propagator,
    bench_pump_step,
    bench_winding,
    bench_one_step_protocol
);
criterion_main!(benches);
