use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};
use trm_core::{
    ensemble_run, rabi_lineshape, rabi_operating_point, run_ssh_clock, LatticeParams, NoiseSpec,
    RabiSpec, SshClockSpec,
};

use crate::commands::{config_echo, require_seed, DriveConfig};
use crate::config::ConfigMap;
use crate::output::{record_frequency, Emitter};
use crate::Common;

pub fn run(common: &Common, cfg: &ConfigMap, workers: Option<usize>) -> Result<()> {
    let drive = DriveConfig::read(cfg, 64)?;
    let sigma_a = cfg.f64("noise.sigma_a", 0.01)?;
    let sigma_phi = cfg.f64("noise.sigma_phi", 0.005)?;
    let sigma_t = cfg.f64("noise.sigma_t", 0.001)?;
    let independent = cfg.bool("noise.independent_tones", true)?;
    let realizations = match common.realizations {
        Some(n) => n,
        None => cfg.usize("realizations", 1000)?,
    };
    let seed = require_seed(common, cfg)?;
    cfg.reject_unknown()?;

    let lattice = LatticeParams::new(drive.cells)?;
    let omega_a = drive.omega_a();
    let omega_b = drive.omega_b();
    let mut noise = NoiseSpec::new(sigma_a, sigma_phi, sigma_t, seed)?;
    if independent {
        noise = noise.with_independent_tones();
    }

    let ssh_spec = SshClockSpec::new(lattice, omega_a, omega_b)?;
    let ssh = ensemble_run(&noise, realizations, |_, draw| {
        run_ssh_clock(&ssh_spec, 0.0, 0.0, draw)
    })
    .context("lattice-clock ensemble")?;

    let rabi_spec = RabiSpec::new(omega_b)?;
    let delta_c = rabi_operating_point(&rabi_spec)?;
    let rabi = ensemble_run(&noise, realizations, |_, draw| {
        Ok(rabi_lineshape(
            &rabi_spec.with_coupling_error(draw.eps_a[0]),
            delta_c + draw.eps_t * omega_b,
        ))
    })
    .context("Rabi baseline ensemble")?;

    if !ssh.failures.is_empty() || !rabi.failures.is_empty() {
        bail!(
            "{} lattice and {} Rabi realizations failed; first: {}",
            ssh.failures.len(),
            rabi.failures.len(),
            ssh.failures
                .first()
                .or(rabi.failures.first())
                .map(|e| e.to_string())
                .unwrap_or_default()
        );
    }

    let rows: Vec<String> = ssh
        .values
        .iter()
        .zip(&rabi.values)
        .enumerate()
        .map(|(i, (s, r))| format!("{i},{s:.15e},{r:.15e}"))
        .collect();

    let ssh_width = ssh.interval.1 - ssh.interval.0;
    let rabi_width = rabi.interval.1 - rabi.interval.0;
    let mut summary = Map::new();
    record_frequency(&mut summary, "omega_a", drive.omega_a_hz);
    record_frequency(&mut summary, "omega_b", drive.omega_b_hz);
    summary.insert("realizations".into(), Value::from(realizations));
    summary.insert("lattice_median".into(), Value::from(ssh.median));
    summary.insert(
        "lattice_interval".into(),
        Value::from(vec![ssh.interval.0, ssh.interval.1]),
    );
    summary.insert("lattice_interval_width".into(), Value::from(ssh_width));
    summary.insert("rabi_median".into(), Value::from(rabi.median));
    summary.insert(
        "rabi_interval".into(),
        Value::from(vec![rabi.interval.0, rabi.interval.1]),
    );
    summary.insert("rabi_interval_width".into(), Value::from(rabi_width));
    summary.insert("rabi_operating_detuning_rad_s".into(), Value::from(delta_c));
    summary.insert(
        "lattice_narrower".into(),
        Value::from(ssh_width < rabi_width),
    );

    let mut emitter = Emitter::new(&common.out)?;
    let metadata = vec![
        format!("cells = {}", drive.cells),
        format!("omega_a_hz = {}", drive.omega_a_hz),
        format!("omega_b_hz = {}", drive.omega_b_hz),
        format!("sigma_a = {sigma_a}"),
        format!("sigma_phi = {sigma_phi}"),
        format!("sigma_t = {sigma_t}"),
        format!("independent_tones = {independent}"),
        format!("seed = {seed}"),
    ];
    emitter.write_csv("clock.csv", &metadata, "index,lattice,rabi", &rows)?;
    emitter.write_json("clock_summary.json", &summary)?;
    emitter.finish(
        "clock",
        Some(seed),
        workers,
        Some(realizations),
        config_echo(common, cfg),
    )?;
    println!(
        "lattice interval width {ssh_width:.6}, Rabi interval width {rabi_width:.6} ({})",
        if ssh_width < rabi_width {
            "lattice narrower"
        } else {
            "Rabi narrower"
        }
    );
    Ok(())
}
