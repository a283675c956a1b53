//! Property tests for the structural guarantees every protocol relies on:
//! hermiticity, chiral spectral symmetry, unitarity, composition, exact
//! adjoints, pulse readout contracts and winding quantization.

use num_complex::Complex64;
use proptest::prelude::*;
use trm_core::evolve::{
    apply_pulse, apply_pulse_adjoint, evolve_const, evolve_schedule, evolve_schedule_adjoint,
    evolve_time_dependent, EvolutionOptions, MeasurementPulse, Schedule,
};
use trm_core::model::{build_rm_hamiltonian, Hamiltonian, LatticeParams, RmParameters};
use trm_core::state::{fidelity, measure, QuantumState};
use trm_core::winding_number_on_grid;

const PI: f64 = std::f64::consts::PI;

fn params_any() -> impl Strategy<Value = RmParameters> {
    (
        1.0..60.0f64,
        1.0..60.0f64,
        -20.0..20.0f64,
        -4.0..4.0f64,
        -PI..PI,
        -PI..PI,
    )
        .prop_map(|(oa, ob, d, dt, pa, pb)| {
            RmParameters::new(oa, ob, d, dt).with_phases(pa, pb)
        })
}

fn chiral_params() -> impl Strategy<Value = RmParameters> {
    (1.0..60.0f64, 1.0..60.0f64, -PI..PI, -PI..PI)
        .prop_map(|(oa, ob, pa, pb)| RmParameters::new(oa, ob, 0.0, 0.0).with_phases(pa, pb))
}

fn normalized(mut amps: Vec<Complex64>) -> Vec<Complex64> {
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-6 {
        amps[0] = Complex64::new(1.0, 0.0);
    } else {
        for a in &mut amps {
            *a /= norm;
        }
    }
    let again = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= again;
    }
    amps
}

fn state_on(cells: usize) -> impl Strategy<Value = QuantumState> {
    let lattice = LatticeParams::new(cells).expect("test lattice");
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), lattice.dim()).prop_map(move |raw| {
        let amps = normalized(
            raw.into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        );
        QuantumState::from_amplitudes(lattice, amps).expect("normalized amplitudes")
    })
}

/// Like `state_on`, but with the two unpaired end slots (g on the first cell,
/// e on the last) emptied so bond-pulse readout identities hold exactly.
fn bulk_state_on(cells: usize) -> impl Strategy<Value = QuantumState> {
    let lattice = LatticeParams::new(cells).expect("test lattice");
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), lattice.dim()).prop_map(move |raw| {
        let mut amps: Vec<Complex64> = raw
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        let dim = amps.len();
        amps[0] = Complex64::new(0.0, 0.0);
        amps[dim - 1] = Complex64::new(0.0, 0.0);
        let mut amps = normalized(amps);
        if amps[0].norm() > 0.0 {
            // The fallback unit vector landed on a forbidden slot; move it.
            amps[0] = Complex64::new(0.0, 0.0);
            amps[2] = Complex64::new(1.0, 0.0);
        }
        QuantumState::from_amplitudes(lattice, amps).expect("normalized amplitudes")
    })
}

fn quadratic_form(h: &Hamiltonian, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
    h.matvec(v, &mut hv);
    u.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn hamiltonian_is_hermitian(
        params in params_any(),
        cells in 2usize..12,
        raw_u in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 24),
        raw_v in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 24),
    ) {
        let lattice = LatticeParams::new(cells).unwrap();
        let h = build_rm_hamiltonian(lattice, &params);
        let dim = lattice.dim();
        let u: Vec<Complex64> = raw_u[..dim].iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let v: Vec<Complex64> = raw_v[..dim].iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let uv = quadratic_form(&h, &u, &v);
        let vu = quadratic_form(&h, &v, &u);
        let scale = h.norm_bound() * 24.0 + 1.0;
        prop_assert!((uv - vu.conj()).norm() <= 1e-12 * scale,
            "<u|Hv> = {uv}, conj(<v|Hu>) = {}", vu.conj());
    }

    #[test]
    fn undetuned_spectrum_is_chirally_symmetric(params in chiral_params(), cells in 2usize..10) {
        let lattice = LatticeParams::new(cells).unwrap();
        let h = build_rm_hamiltonian(lattice, &params);
        let dim = lattice.dim();
        let mut trace1 = 0.0;
        let mut trace3 = Complex64::new(0.0, 0.0);
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        for i in 0..dim {
            let mut e = vec![Complex64::new(0.0, 0.0); dim];
            e[i] = Complex64::new(1.0, 0.0);
            h.matvec(&e, &mut v);
            trace1 += v[i].re;
            h.matvec(&v, &mut w);
            h.matvec(&w, &mut v);
            trace3 += v[i];
        }
        let scale = h.norm_bound().powi(3) * dim as f64 + 1.0;
        prop_assert!(trace1.abs() <= 1e-12 * scale.cbrt() * dim as f64 + 1e-12);
        prop_assert!(trace3.norm() <= 1e-12 * scale,
            "odd moment tr H^3 = {trace3} should vanish for the chiral-symmetric chain");
    }

    #[test]
    fn constant_evolution_is_unitary(
        params in params_any(),
        psi in state_on(6),
        t in 0.01..0.5f64,
    ) {
        let h = build_rm_hamiltonian(psi.lattice(), &params);
        let out = evolve_const(&h, &psi, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_evolution_composes(
        params in params_any(),
        psi in state_on(6),
        t1 in 0.01..0.3f64,
        t2 in 0.01..0.3f64,
    ) {
        let h = build_rm_hamiltonian(psi.lattice(), &params);
        let once = evolve_const(&h, &psi, t1 + t2).unwrap();
        let stage = evolve_const(&h, &psi, t1).unwrap();
        let twice = evolve_const(&h, &stage, t2).unwrap();
        for (a, b) in once.amplitudes().iter().zip(twice.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn stepped_evolution_matches_diagonalization(
        params in params_any(),
        psi in state_on(6),
        t in 0.01..0.4f64,
    ) {
        let lattice = psi.lattice();
        let h = build_rm_hamiltonian(lattice, &params);
        let exact = evolve_const(&h, &psi, t).unwrap();
        let opts = EvolutionOptions::for_max_coupling(params.omega_a.max(params.omega_b))
            .without_edge_guard();
        let stepped = evolve_time_dependent(
            |_| build_rm_hamiltonian(lattice, &params),
            0.0,
            t,
            &opts,
            &psi,
        )
        .unwrap();
        prop_assert!(fidelity(&exact, &stepped).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn schedule_adjoint_inverts_forward_evolution(
        start in params_any(),
        stop in params_any(),
        psi in state_on(6),
        span in 0.05..0.4f64,
    ) {
        let schedule = Schedule::new(
            move |t| {
                let f = t / span;
                RmParameters::new(
                    start.omega_a + f * (stop.omega_a - start.omega_a),
                    start.omega_b + f * (stop.omega_b - start.omega_b),
                    start.delta + f * (stop.delta - start.delta),
                    start.delta_t + f * (stop.delta_t - start.delta_t),
                )
            },
            0.0,
            span,
        )
        .unwrap();
        let opts = EvolutionOptions::new(span / 64.0).without_edge_guard();
        let forward = evolve_schedule(&schedule, &opts, &psi).unwrap();
        let back = evolve_schedule_adjoint(&schedule, &opts, &forward).unwrap();
        prop_assert!(fidelity(&psi, &back).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn pulses_are_unitary_and_adjoints_invert(psi in state_on(7)) {
        for pulse in [
            MeasurementPulse::M1,
            MeasurementPulse::M2,
            MeasurementPulse::CarrierHalf,
            MeasurementPulse::CarrierPi,
            MeasurementPulse::SidebandPi,
        ] {
            let rotated = apply_pulse(pulse, &psi);
            prop_assert!((rotated.norm() - 1.0).abs() < 1e-12);
            let restored = apply_pulse_adjoint(pulse, &rotated);
            for (a, b) in psi.amplitudes().iter().zip(restored.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn readout_pulses_convert_coherences_to_population(psi in bulk_state_on(8)) {
        let before = measure(&psi);
        let after_m1 = measure(&apply_pulse(MeasurementPulse::M1, &psi));
        prop_assert!((after_m1.s_z - before.i_y).abs() < 1e-10,
            "M1 should map I_y = {} onto S_z, got {}", before.i_y, after_m1.s_z);
        let after_m2 = measure(&apply_pulse(MeasurementPulse::M2, &psi));
        prop_assert!((after_m2.s_z - before.i_x).abs() < 1e-10,
            "M2 should map I_x = {} onto S_z, got {}", before.i_x, after_m2.s_z);
        let after_ch = measure(&apply_pulse(MeasurementPulse::CarrierHalf, &psi));
        prop_assert!((after_ch.s_z - before.s_y).abs() < 1e-10,
            "CarrierHalf should map S_y = {} onto S_z, got {}", before.s_y, after_ch.s_z);
    }

    #[test]
    fn winding_is_scale_invariant(
        omega_a in 1.0..50.0f64,
        ratio in prop_oneof![0.05..0.8f64, 1.25..20.0f64],
        lambda in 0.05..20.0f64,
    ) {
        let omega_b = ratio * omega_a;
        let base = winding_number_on_grid(omega_a, omega_b, 1024).unwrap();
        let scaled = winding_number_on_grid(lambda * omega_a, lambda * omega_b, 1024).unwrap();
        prop_assert!((base.raw - scaled.raw).abs() < 1e-9);
        let expected = if ratio > 1.0 { 1 } else { 0 };
        prop_assert_eq!(base.number, expected);
        prop_assert!((base.raw - expected as f64).abs() < 1e-6,
            "raw winding {} failed to quantize toward {}", base.raw, expected);
    }
}
