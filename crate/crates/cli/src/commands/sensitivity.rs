use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};
use trm_core::{
    clock_sensitivity, rabi_lineshape, rabi_operating_point, run_one_step_protocol,
    statistical_noise_sigma2, LatticeParams, NoiseChannel, RabiSpec, RmParameters,
};

use crate::commands::{config_echo, DriveConfig};
use crate::config::ConfigMap;
use crate::output::{record_frequency, Emitter};
use crate::Common;

pub fn run(common: &Common, cfg: &ConfigMap, workers: Option<usize>) -> Result<()> {
    let drive = DriveConfig::read(cfg, 64)?;
    let sigma_a = cfg.f64("noise.sigma_a", 0.01)?;
    let atoms_raw = cfg.f64_list("sensitivity.atoms", &[10.0, 100.0, 1000.0])?;
    cfg.reject_unknown()?;

    let mut atoms_list = Vec::with_capacity(atoms_raw.len());
    for a in &atoms_raw {
        if a.fract() != 0.0 || *a < 1.0 {
            bail!("sensitivity.atoms entries must be positive integers, got {a}");
        }
        atoms_list.push(*a as usize);
    }

    let lattice = LatticeParams::new(drive.cells)?;
    let omega_a = drive.omega_a();
    let omega_b = drive.omega_b();
    let hold = std::f64::consts::PI / omega_b;

    let lattice_signal = |oa: f64, ob: f64, delta: f64| -> trm_core::Result<f64> {
        let params = RmParameters::new(oa, ob, delta, 0.0);
        run_one_step_protocol(lattice, &params, hold, None)
    };
    let lattice_channels = [
        NoiseChannel {
            value: omega_a,
            sigma: sigma_a * omega_a,
        },
        NoiseChannel {
            value: omega_b,
            sigma: sigma_a * omega_b,
        },
    ];
    let h = 1e-3 * omega_b;
    let lattice_slope =
        (lattice_signal(omega_a, omega_b, h)? - lattice_signal(omega_a, omega_b, -h)?) / (2.0 * h);

    let rabi_spec = RabiSpec::new(omega_b)?;
    let delta_c = rabi_operating_point(&rabi_spec)?;
    let rabi_channels = [NoiseChannel {
        value: omega_b,
        sigma: sigma_a * omega_b,
    }];
    let rabi_slope = (rabi_lineshape(&rabi_spec, delta_c + h)
        - rabi_lineshape(&rabi_spec, delta_c - h))
        / (2.0 * h);

    let mut rows = Vec::with_capacity(atoms_list.len());
    let mut warnings: Vec<String> = Vec::new();
    let mut all_narrower = true;
    for &atoms in &atoms_list {
        let lat = statistical_noise_sigma2(&lattice_channels, atoms, |v| {
            lattice_signal(v[0], v[1], 0.0)
        })
        .context("lattice technical-noise variance")?;
        let rab = statistical_noise_sigma2(&rabi_channels, atoms, |v| {
            Ok(rabi_lineshape(
                &rabi_spec.with_coupling_error(v[0] / omega_b - 1.0),
                delta_c,
            ))
        })
        .context("Rabi technical-noise variance")?;
        warnings.extend(lat.warnings.iter().cloned());
        warnings.extend(rab.warnings.iter().cloned());

        let n = atoms as f64;
        let var_lat = clock_sensitivity(atoms, lat.sigma2, hold, n * lattice_slope / hold)?;
        let var_rab = clock_sensitivity(atoms, rab.sigma2, hold, n * rabi_slope / hold)?;
        let narrower = lat.sigma2 < rab.sigma2 && var_lat < var_rab;
        all_narrower &= narrower;
        rows.push(format!(
            "{atoms},{:.15e},{:.15e},{:.15e},{:.15e},{narrower}",
            lat.sigma2, rab.sigma2, var_lat, var_rab
        ));
        println!(
            "{atoms} atoms: technical variance {:.3e} (lattice) vs {:.3e} (Rabi), \
             detuning variance {:.3e} vs {:.3e} (rad/s)^2",
            lat.sigma2, rab.sigma2, var_lat, var_rab
        );
    }
    warnings.sort();
    warnings.dedup();

    let mut summary = Map::new();
    record_frequency(&mut summary, "omega_a", drive.omega_a_hz);
    record_frequency(&mut summary, "omega_b", drive.omega_b_hz);
    summary.insert("sigma_a".into(), Value::from(sigma_a));
    summary.insert("hold_time_s".into(), Value::from(hold));
    summary.insert(
        "lattice_slope_per_rad_s".into(),
        Value::from(lattice_slope),
    );
    summary.insert("rabi_slope_per_rad_s".into(), Value::from(rabi_slope));
    summary.insert(
        "rabi_operating_detuning_rad_s".into(),
        Value::from(delta_c),
    );
    summary.insert("lattice_better_everywhere".into(), Value::from(all_narrower));
    if !warnings.is_empty() {
        summary.insert("warnings".into(), Value::from(warnings));
    }

    let mut emitter = Emitter::new(&common.out)?;
    let metadata = vec![
        format!("cells = {}", drive.cells),
        format!("omega_a_hz = {}", drive.omega_a_hz),
        format!("omega_b_hz = {}", drive.omega_b_hz),
        format!("sigma_a = {sigma_a}"),
    ];
    emitter.write_csv(
        "sensitivity.csv",
        &metadata,
        "atoms,sigma_s2_lattice,sigma_s2_rabi,delta_var_lattice,delta_var_rabi,lattice_narrower",
        &rows,
    )?;
    emitter.write_json("sensitivity_summary.json", &summary)?;
    emitter.finish("sensitivity", None, workers, None, config_echo(common, cfg))?;
    Ok(())
}
