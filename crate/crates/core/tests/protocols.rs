//! Cross-module checks: brute-force protocols against momentum-space
//! analytics, second-order amplitude-noise immunity of the clock slope, and
//! interferometer phase linearity for both pulse trains and pump ramps.

use trm_core::analytic_iy;
use trm_core::interferometer::{
    ideal_phase_mpp, ideal_phase_tpp, run_mpp, run_tpp, MppSpec, PumpCycle, TppSpec,
};
use trm_core::model::{LatticeParams, RmParameters};
use trm_core::noise::{ensemble_run, NoiseRealization, NoiseSpec};
use trm_core::spectroscopy::{run_md_protocol, run_one_step_protocol};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Detuning slope of the one-step signal in units of delta / omega_b, with
/// both couplings scaled by 1 + eps while the hold time stays at the nominal
/// pi / omega_b.
fn detuning_slope(lattice: LatticeParams, omega_a: f64, omega_b: f64, eps: f64) -> f64 {
    let t = std::f64::consts::PI / omega_b;
    let h = 0.05 * omega_b;
    let ix = |delta: f64| {
        let p = RmParameters::new(omega_a * (1.0 + eps), omega_b * (1.0 + eps), delta, 0.0);
        run_one_step_protocol(lattice, &p, t, None).expect("bulk-safe run")
    };
    (ix(h) - ix(-h)) / (2.0 * h / omega_b)
}

#[test]
fn clock_slope_amplitude_error_is_second_order() {
    let lattice = LatticeParams::new(48).unwrap();
    let (omega_a, omega_b) = (TWO_PI * 10.0 / 3.0, TWO_PI * 10.0);
    let quiet = detuning_slope(lattice, omega_a, omega_b, 0.0);
    let paired = |eps: f64| {
        0.5 * (detuning_slope(lattice, omega_a, omega_b, eps)
            + detuning_slope(lattice, omega_a, omega_b, -eps))
            - quiet
    };
    let small = paired(0.025);
    let large = paired(0.05);
    let ratio = large / small;
    assert!(
        (3.7..4.3).contains(&ratio),
        "even-order residual should scale as eps^2: got ratio {ratio}"
    );
    assert!(
        (large / quiet).abs() < 1e-2,
        "second-order coefficient is O(1): relative residual {}",
        large / quiet
    );
}

#[test]
fn clock_slope_survives_an_amplitude_noise_ensemble() {
    let lattice = LatticeParams::new(48).unwrap();
    let (omega_a, omega_b) = (TWO_PI * 10.0 / 3.0, TWO_PI * 10.0);
    let quiet = detuning_slope(lattice, omega_a, omega_b, 0.0);
    let spec = NoiseSpec::new(0.01, 0.0, 0.0, 41).unwrap();
    let ens = ensemble_run(&spec, 200, |_, draw| {
        Ok(detuning_slope(lattice, omega_a, omega_b, draw.eps_a[0]))
    })
    .unwrap();
    assert!(ens.failures.is_empty());
    let mean = ens.values.iter().sum::<f64>() / ens.values.len() as f64;
    assert!(
        ((mean - quiet) / quiet).abs() < 2e-3,
        "ensemble-averaged slope should sit within the sampling floor of the \
         noise-free value: relative deviation {}",
        (mean - quiet) / quiet
    );
}

#[test]
fn md_current_matches_momentum_space_integral() {
    let lattice = LatticeParams::new(64).unwrap();
    let omega_b = TWO_PI * 10.0;
    let omega_a = omega_b / 2.0;
    let params = RmParameters::new(omega_a, omega_b, 0.0, 0.0);
    let times: Vec<f64> = (1..=9)
        .map(|i| i as f64 * 4.0 * std::f64::consts::PI / 9.0 / omega_b)
        .collect();
    let trace = run_md_protocol(lattice, &params, &times, None).unwrap();
    for (i, &t) in times.iter().enumerate() {
        let reference = analytic_iy(omega_a, omega_b, t);
        assert!(
            (trace.i_y[i] - reference).abs() < 1e-12,
            "I_y({t}) = {} disagrees with the band integral {reference}",
            trace.i_y[i]
        );
    }
}

fn fit_through_origin(points: &[(f64, f64)]) -> (f64, f64) {
    let num: f64 = points.iter().map(|&(x, y)| x * y).sum();
    let den: f64 = points.iter().map(|&(x, _)| x * x).sum();
    let k = num / den;
    let ss_res: f64 = points.iter().map(|&(x, y)| (y - k * x).powi(2)).sum();
    let mean_y = points.iter().map(|&(_, y)| y).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();
    (k, 1.0 - ss_res / ss_tot)
}

#[test]
fn mpp_phase_is_linear_with_the_ideal_slope() {
    let lattice = LatticeParams::new(24).unwrap();
    let quiet = NoiseRealization::quiet();
    let spec = MppSpec::new(TWO_PI * 24.0, 8, 1.0).unwrap();
    let points: Vec<(f64, f64)> = (1..=4)
        .map(|i| {
            let delta_t = 0.002 * i as f64;
            let out = run_mpp(&spec, delta_t, &quiet, lattice).unwrap();
            (delta_t, out.phase)
        })
        .collect();
    let (k, r2) = fit_through_origin(&points);
    let ideal = ideal_phase_mpp(&spec, 1.0);
    assert!(r2 > 0.999999, "R^2 = {r2}");
    assert!(
        (k / ideal - 1.0).abs() < 1e-6,
        "fitted slope {k} vs ideal {ideal}"
    );
}

#[test]
fn tpp_phase_is_linear_with_a_small_discreteness_excess() {
    let lattice = LatticeParams::new(24).unwrap();
    let quiet = NoiseRealization::quiet();
    let cycle = PumpCycle::new(TWO_PI * 60.0, 0.2).unwrap();
    let spec = TppSpec::new(cycle, 4)
        .unwrap()
        .with_steps_per_cycle(800)
        .unwrap();
    let points: Vec<(f64, f64)> = (1..=4)
        .map(|i| {
            let delta_t = 0.01 * i as f64;
            let out = run_tpp(&spec, delta_t, &quiet, lattice).unwrap();
            (delta_t, out.phase)
        })
        .collect();
    let (k, r2) = fit_through_origin(&points);
    let continuum = ideal_phase_tpp(&spec, 1.0);
    assert!(r2 > 0.9999, "R^2 = {r2}");
    // The stepwise separation ramp overshoots the continuum phase by
    // 1 / (3 cycles); at four cycles that is 8.3 percent.
    let excess = k / continuum - 1.0;
    assert!(
        (0.06..0.11).contains(&excess),
        "fitted slope {k} vs continuum {continuum}, excess {excess}"
    );
}
