use anyhow::{bail, Result};
use serde_json::Value;
use trm_core::{
    ensemble_run, evolve_schedule, evolve_schedule_adjoint, fidelity, localized_state,
    run_alternative_ssh, run_md_protocol, run_mpp, run_one_step_protocol, sample_realization,
    single_cycle_transport, winding_number, EvolutionOptions, LatticeParams, Level, MppSpec,
    NoiseRealization, NoiseSpec, PumpCycle, RmParameters, Schedule,
};

use crate::commands::{config_echo, wrap_angle, TWO_PI};
use crate::config::ConfigMap;
use crate::output::Emitter;
use crate::Common;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn run_check<F>(name: &'static str, f: F) -> Check
where
    F: FnOnce() -> Result<(bool, String)>,
{
    match f() {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(err) => Check {
            name,
            passed: false,
            detail: format!("error: {err:#}"),
        },
    }
}

fn winding_quantization() -> Result<(bool, String)> {
    let omega_a = TWO_PI * 5.0;
    let mut worst: f64 = 0.0;
    for (r, expected) in [(0.3, 0.0), (0.5, 0.0), (2.0, 1.0), (3.0, 1.0)] {
        let w = winding_number(omega_a, r * omega_a)?;
        worst = worst.max((w.raw - expected).abs());
    }
    Ok((worst < 1e-6, format!("max |raw - W| = {worst:.2e}")))
}

fn critical_coupling_rejected() -> Result<(bool, String)> {
    let omega = TWO_PI * 5.0;
    let rejected = winding_number(omega, omega).is_err();
    Ok((
        rejected,
        if rejected {
            "equal couplings rejected".into()
        } else {
            "equal couplings accepted".into()
        },
    ))
}

fn dimerized_closed_forms() -> Result<(bool, String)> {
    let lattice = LatticeParams::new(8)?;
    let omega_b = TWO_PI * 10.0;
    let params = RmParameters::new(0.0, omega_b, 0.0, 0.0);
    let samples = 200;
    let times: Vec<f64> = (1..=samples)
        .map(|i| 0.1 * i as f64 / samples as f64)
        .collect();
    let trace = run_md_protocol(lattice, &params, &times, Some(1e-8))?;
    let mut worst_iy: f64 = 0.0;
    let mut worst_x: f64 = 0.0;
    for ((t, iy), x) in trace.times.iter().zip(&trace.i_y).zip(&trace.displacement) {
        worst_iy = worst_iy.max((iy - 0.5 * (omega_b * t).sin()).abs());
        worst_x = worst_x.max((x - 0.5 * (1.0 - (omega_b * t).cos())).abs());
    }
    Ok((
        worst_iy < 1e-9 && worst_x < 1e-3,
        format!("bond current off by {worst_iy:.2e}, displacement by {worst_x:.2e}"),
    ))
}

fn alternative_readout_equivalence() -> Result<(bool, String)> {
    let lattice = LatticeParams::new(32)?;
    let omega_b = TWO_PI * 10.0;
    let omega_a = omega_b / 3.0;
    let hold = std::f64::consts::PI / omega_b;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let delta = (i as f64 - 1.0) * 0.1 * omega_b;
            let delta_t = (j as f64 - 1.0) * 0.1 * omega_b;
            let params = RmParameters::new(omega_a, omega_b, delta, delta_t);
            let a = run_one_step_protocol(lattice, &params, hold, None)?;
            let b = run_alternative_ssh(lattice, &params, hold, None)?;
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst < 1e-6, format!("max readout mismatch = {worst:.2e}")))
}

fn pump_transport_quantization() -> Result<(bool, String)> {
    let lattice = LatticeParams::new(48)?;
    let cycle = PumpCycle::new(TWO_PI * 60.0, 0.2)?;
    let forward = single_cycle_transport(&cycle, lattice, 1000)?;
    let backward = single_cycle_transport(&cycle.reverse(), lattice, 1000)?;
    let ok = (forward - 1.0).abs() < 0.02 && (backward + 1.0).abs() < 0.02;
    Ok((
        ok,
        format!("forward {forward:.4} cells, reversed {backward:.4} cells"),
    ))
}

fn adjoint_round_trip() -> Result<(bool, String)> {
    let lattice = LatticeParams::new(12)?;
    let psi0 = localized_state(lattice, lattice.center(), Level::Ground)?;
    let span = 0.05;
    let schedule = Schedule::new(
        move |t| {
            let f = t / span;
            RmParameters::new(
                TWO_PI * (5.0 + 3.0 * f),
                TWO_PI * (10.0 - 4.0 * f),
                TWO_PI * 2.0 * f,
                TWO_PI * 1.0 * f,
            )
        },
        0.0,
        span,
    )?;
    let opts = EvolutionOptions::new(span / 256.0).without_edge_guard();
    let forward = evolve_schedule(&schedule, &opts, &psi0)?;
    let back = evolve_schedule_adjoint(&schedule, &opts, &forward)?;
    let deficit = 1.0 - fidelity(&psi0, &back)?;
    Ok((deficit < 1e-10, format!("round-trip deficit = {deficit:.2e}")))
}

fn noise_determinism() -> Result<(bool, String)> {
    let spec = NoiseSpec::new(0.02, 0.01, 0.005, 12345)?.with_independent_tones();
    let draws_match = (0..64).all(|i| sample_realization(&spec, i) == sample_realization(&spec, i));
    let run = || ensemble_run(&spec, 32, |_, d| Ok(d.eps_a[0].abs() + d.eps_t));
    let a = run()?;
    let b = run()?;
    let medians_match = a.median.to_bits() == b.median.to_bits()
        && a.interval.0.to_bits() == b.interval.0.to_bits()
        && a.interval.1.to_bits() == b.interval.1.to_bits();
    Ok((
        draws_match && medians_match,
        format!("draws repeat: {draws_match}, ensemble stats repeat: {medians_match}"),
    ))
}

fn ideal_interferometer() -> Result<(bool, String)> {
    let spec = MppSpec::new(TWO_PI * 24.0, 24, 2.0)?;
    let lattice = LatticeParams::new(64)?;
    let delta_t = 0.05;
    let out = run_mpp(&spec, delta_t, &NoiseRealization::quiet(), lattice)?;
    let ideal = 2.0 * delta_t * spec.dark_time * spec.pulses as f64;
    let phase_err = wrap_angle(out.phase - ideal).abs();
    let separation = out
        .turnaround_d_eg
        .map(|d| d.abs() / (2.0 * spec.pulses as f64))
        .unwrap_or(0.0);
    let ok = phase_err < 1e-8 && out.fidelity > 0.9999 && (separation - 1.0).abs() < 1e-6;
    Ok((
        ok,
        format!(
            "phase error {phase_err:.2e} rad, fidelity {:.6}, separation fraction {separation:.6}",
            out.fidelity
        ),
    ))
}

pub fn run(common: &Common, cfg: &ConfigMap, workers: Option<usize>) -> Result<()> {
    cfg.reject_unknown()?;
    let checks = vec![
        run_check("winding quantization", winding_quantization),
        run_check("critical coupling rejected", critical_coupling_rejected),
        run_check("dimerized closed forms", dimerized_closed_forms),
        run_check("alternative readout equivalence", alternative_readout_equivalence),
        run_check("pump transport quantization", pump_transport_quantization),
        run_check("adjoint round trip", adjoint_round_trip),
        run_check("noise determinism", noise_determinism),
        run_check("ideal interferometer", ideal_interferometer),
    ];

    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    println!("{:<width$}  result  detail", "check");
    let mut rows = Vec::with_capacity(checks.len());
    let mut failed = 0usize;
    for c in &checks {
        let result = if c.passed { "PASS" } else { "FAIL" };
        println!("{:<width$}  {result}    {}", c.name, c.detail);
        rows.push(format!("{},{result},\"{}\"", c.name, c.detail.replace('"', "'")));
        if !c.passed {
            failed += 1;
        }
    }

    let mut emitter = Emitter::new(&common.out)?;
    emitter.write_csv("validate.csv", &[], "check,result,detail", &rows)?;
    let summary: Vec<Value> = checks
        .iter()
        .map(|c| {
            let mut m = serde_json::Map::new();
            m.insert("check".into(), Value::from(c.name));
            m.insert("passed".into(), Value::from(c.passed));
            m.insert("detail".into(), Value::from(c.detail.clone()));
            Value::Object(m)
        })
        .collect();
    emitter.write_json("validate_summary.json", &summary)?;
    emitter.finish("validate", None, workers, None, config_echo(common, cfg))?;

    if failed > 0 {
        bail!("{failed} of {} validation checks failed", checks.len());
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}
