use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{Map, Value};
use trm_core::{
    ideal_phase_mpp, ideal_phase_tpp, median_and_interval, run_protocol, sample_realization,
    LatticeParams, MppSpec, MwiOutcome, MwiProtocol, NoiseRealization, NoiseSpec, PumpCycle,
    StarkParams, TppSpec,
};

use crate::commands::{config_echo, require_seed, resolve_seed, wrap_angle, TWO_PI};
use crate::config::ConfigMap;
use crate::output::Emitter;
use crate::Common;

struct Protocol {
    name: String,
    runner: MwiProtocol,
    ideal_phase: f64,
    max_separation: f64,
    lattice: LatticeParams,
}

fn parse_period(text: &str) -> Result<f64> {
    let value = if let Some((num, den)) = text.split_once('/') {
        let num: f64 = num.trim().parse().ok().filter(|v| *v > 0.0).unwrap_or(0.0);
        let den: f64 = den.trim().parse().ok().filter(|v| *v > 0.0).unwrap_or(0.0);
        num / den
    } else {
        text.trim().parse().unwrap_or(0.0)
    };
    if !(value > 0.0) || !value.is_finite() {
        bail!("pump period {text:?} must be a positive number or fraction");
    }
    Ok(value)
}

fn build(
    name: &str,
    mode: &str,
    gap: f64,
    steps: usize,
    cells_override: usize,
    delta_t: f64,
) -> Result<Protocol> {
    let pulse_spec = |omega_hz: f64, pulses: usize, dark: f64| -> Result<Protocol> {
        let mut spec = MppSpec::new(TWO_PI * omega_hz, pulses, dark)?;
        match mode {
            "ideal" => {}
            "driven" => spec = spec.driven(None),
            "driven-stark" => spec = spec.driven(Some(StarkParams::default())),
            other => bail!(
                "mwi.pulse_mode must be one of ideal, driven, driven-stark; got {other:?}"
            ),
        }
        let cells = if cells_override > 0 {
            cells_override
        } else {
            2 * pulses + 16
        };
        Ok(Protocol {
            name: name.to_string(),
            ideal_phase: ideal_phase_mpp(&spec, delta_t),
            max_separation: 2.0 * pulses as f64,
            runner: MwiProtocol::ManyPulse(spec),
            lattice: LatticeParams::new(cells)?,
        })
    };
    match name {
        "p0" => pulse_spec(24.0, 24, 2.0),
        "p1" => pulse_spec(40.0, 15, 3.25),
        "p2" => pulse_spec(40.0, 65, 0.75),
        other => {
            let Some(period_text) = other.strip_prefix("tpp-") else {
                bail!(
                    "unknown protocol {other:?}; expected p0, p1, p2 or tpp-<period>, \
                     e.g. tpp-1/12"
                );
            };
            let period = parse_period(period_text)
                .with_context(|| format!("parsing protocol {other:?}"))?;
            let cycles = (2.0 / period).round().max(1.0) as usize;
            let cycle = PumpCycle::new(gap, period)?;
            let spec = TppSpec::new(cycle, cycles)?.with_steps_per_cycle(steps)?;
            let cells = if cells_override > 0 {
                cells_override
            } else {
                2 * cycles + 16
            };
            Ok(Protocol {
                name: name.to_string(),
                ideal_phase: ideal_phase_tpp(&spec, delta_t),
                max_separation: 2.0 * cycles as f64,
                runner: MwiProtocol::Pump(spec),
                lattice: LatticeParams::new(cells)?,
            })
        }
    }
}

fn outcome_entry(proto: &Protocol, delta_t: f64, out: &MwiOutcome) -> Map<String, Value> {
    let mut entry = Map::new();
    entry.insert("protocol".into(), Value::from(proto.name.clone()));
    entry.insert("cells".into(), Value::from(proto.lattice.cells));
    entry.insert("delta_t_rad_s".into(), Value::from(delta_t));
    entry.insert("ideal_phase_rad".into(), Value::from(proto.ideal_phase));
    entry.insert("phase_rad".into(), Value::from(out.phase));
    entry.insert(
        "phase_error_rad".into(),
        Value::from(wrap_angle(out.phase - proto.ideal_phase)),
    );
    entry.insert("recovery_fidelity".into(), Value::from(out.fidelity));
    if let Some(d) = out.turnaround_d_eg {
        entry.insert("turnaround_d_eg".into(), Value::from(d));
        entry.insert(
            "separation_fraction".into(),
            Value::from(d.abs() / proto.max_separation),
        );
    }
    entry.insert("final_n_e".into(), Value::from(out.final_n_e));
    entry.insert("final_n_g".into(), Value::from(out.final_n_g));
    if !out.warnings.is_empty() {
        entry.insert(
            "warnings".into(),
            Value::from(out.warnings.clone()),
        );
    }
    entry
}

fn interval_value(median: f64, interval: (f64, f64)) -> Value {
    let mut m = Map::new();
    m.insert("median".into(), Value::from(median));
    m.insert("interval".into(), Value::from(vec![interval.0, interval.1]));
    Value::Object(m)
}

pub fn run(common: &Common, cfg: &ConfigMap, workers: Option<usize>) -> Result<()> {
    let names = cfg.string_list(
        "mwi.protocols",
        &["p0", "p1", "p2", "tpp-1/12", "tpp-1/5"],
    )?;
    let delta_t = cfg.f64("mwi.delta_t", 0.05)?;
    let mode = cfg.string("mwi.pulse_mode", "ideal")?;
    let gap_hz = cfg.f64("mwi.gap_hz", 60.0)?;
    let steps = cfg.usize("mwi.steps_per_cycle", 2000)?;
    let cells_override = cfg.usize("lattice.cells", 0)?;
    let realizations = match common.realizations {
        Some(n) => n,
        None => cfg.usize("realizations", 0)?,
    };
    let sigma_a = cfg.f64("noise.sigma_a", 0.02)?;
    let sigma_phi = cfg.f64("noise.sigma_phi", 0.0)?;
    let sigma_t = cfg.f64("noise.sigma_t", 0.0)?;
    let independent = cfg.bool("noise.independent_tones", true)?;
    let seed = if realizations > 0 {
        Some(require_seed(common, cfg)?)
    } else {
        resolve_seed(common, cfg)?
    };
    cfg.reject_unknown()?;

    let protocols: Vec<Protocol> = names
        .iter()
        .map(|name| build(name, &mode, TWO_PI * gap_hz, steps, cells_override, delta_t))
        .collect::<Result<_>>()?;

    let mut emitter = Emitter::new(&common.out)?;
    let mut summaries = Vec::with_capacity(protocols.len());
    for proto in &protocols {
        let file_tag = proto.name.replace('/', "_");
        if realizations == 0 {
            let out = run_protocol(
                &proto.runner,
                delta_t,
                &NoiseRealization::quiet(),
                proto.lattice,
            )
            .with_context(|| format!("running protocol {}", proto.name))?;
            let rows: Vec<String> = out
                .samples
                .iter()
                .map(|s| {
                    let d = s
                        .d_eg
                        .map(|v| format!("{v:.15e}"))
                        .unwrap_or_else(|| "nan".into());
                    format!(
                        "{},{d},{:.15e},{:.15e},{:.15e}",
                        s.index, s.n_e, s.n_g, s.fidelity
                    )
                })
                .collect();
            emitter.write_csv(
                &format!("mwi_samples_{file_tag}.csv"),
                &[format!("protocol = {}", proto.name)],
                "checkpoint,d_eg,n_e,n_g,fidelity",
                &rows,
            )?;
            let entry = outcome_entry(proto, delta_t, &out);
            println!(
                "{}: phase {:.4} rad (ideal {:.4}), recovery fidelity {:.4}",
                proto.name, out.phase, proto.ideal_phase, out.fidelity
            );
            summaries.push(Value::Object(entry));
        } else {
            let noise_spec = {
                let mut n = NoiseSpec::new(sigma_a, sigma_phi, sigma_t, seed.unwrap())?;
                if independent {
                    n = n.with_independent_tones();
                }
                n
            };
            let outcomes: Vec<trm_core::Result<MwiOutcome>> = (0..realizations)
                .into_par_iter()
                .map(|i| {
                    let draw = sample_realization(&noise_spec, i as u64);
                    run_protocol(&proto.runner, delta_t, &draw, proto.lattice)
                })
                .collect();
            let mut phases = Vec::new();
            let mut fidelities = Vec::new();
            let mut separations = Vec::new();
            let mut failures = 0usize;
            for out in &outcomes {
                match out {
                    Ok(o) => {
                        phases.push(wrap_angle(o.phase - proto.ideal_phase));
                        fidelities.push(o.fidelity);
                        if let Some(d) = o.turnaround_d_eg {
                            separations.push(d.abs() / proto.max_separation);
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
            if phases.is_empty() {
                bail!("every realization of protocol {} failed", proto.name);
            }
            let (phase_med, phase_int) = median_and_interval(&phases);
            let (fid_med, fid_int) = median_and_interval(&fidelities);
            let mut entry = Map::new();
            entry.insert("protocol".into(), Value::from(proto.name.clone()));
            entry.insert("cells".into(), Value::from(proto.lattice.cells));
            entry.insert("delta_t_rad_s".into(), Value::from(delta_t));
            entry.insert("ideal_phase_rad".into(), Value::from(proto.ideal_phase));
            entry.insert("realizations".into(), Value::from(realizations));
            entry.insert("failures".into(), Value::from(failures));
            entry.insert(
                "phase_error_rad".into(),
                interval_value(phase_med, phase_int),
            );
            entry.insert(
                "recovery_fidelity".into(),
                interval_value(fid_med, fid_int),
            );
            if !separations.is_empty() {
                let (sep_med, sep_int) = median_and_interval(&separations);
                entry.insert(
                    "separation_fraction".into(),
                    interval_value(sep_med, sep_int),
                );
            }
            println!(
                "{}: median phase error {:.4} rad, median recovery fidelity {:.4} \
                 ({} realizations, {} failed)",
                proto.name, phase_med, fid_med, realizations, failures
            );
            summaries.push(Value::Object(entry));
        }
    }

    emitter.write_json("mwi_summary.json", &summaries)?;
    emitter.finish(
        "mwi",
        seed,
        workers,
        (realizations > 0).then_some(realizations),
        config_echo(common, cfg),
    )?;
    Ok(())
}
