use anyhow::{Context, Result};
use serde_json::{Map, Value};
use trm_core::{analytic_mean_displacement, run_md_protocol, LatticeParams, RmParameters};

use crate::commands::{config_echo, DriveConfig};
use crate::config::ConfigMap;
use crate::output::{record_frequency, Emitter};
use crate::Common;

pub fn run(common: &Common, cfg: &ConfigMap, workers: Option<usize>) -> Result<()> {
    let drive = DriveConfig::read(cfg, 64)?;
    let ratios = cfg.f64_list("md.ratios", &[0.3, 1.0, 3.0])?;
    let t_max = cfg.f64("md.t_max_s", 2.0)?;
    let samples = cfg.usize("md.samples", 2000)?;
    let guard = cfg.f64("md.edge_guard", 0.0)?;
    cfg.reject_unknown()?;

    let lattice = LatticeParams::new(drive.cells)?;
    let omega_b = drive.omega_b();
    let edge_guard = (guard > 0.0).then_some(guard);
    let times: Vec<f64> = (1..=samples)
        .map(|i| t_max * i as f64 / samples as f64)
        .collect();

    let mut rows = Vec::with_capacity(ratios.len() * samples);
    let mut summary = Vec::with_capacity(ratios.len());
    for &r in &ratios {
        let omega_a = omega_b / r;
        let params = RmParameters::new(omega_a, omega_b, 0.0, 0.0);
        let trace = run_md_protocol(lattice, &params, &times, edge_guard)
            .with_context(|| format!("mean-displacement run at coupling ratio {r}"))?;
        for ((t, iy), x) in trace.times.iter().zip(&trace.i_y).zip(&trace.displacement) {
            rows.push(format!("{r},{t:.9},{iy:.15e},{x:.15e}"));
        }

        let window: Vec<f64> = trace
            .times
            .iter()
            .zip(&trace.displacement)
            .filter(|(t, _)| **t >= 0.5 * t_max)
            .map(|(_, x)| *x)
            .collect();
        let measured = window.iter().sum::<f64>() / window.len().max(1) as f64;
        let analytic_points = 64;
        let analytic = (0..analytic_points)
            .map(|i| {
                let t = 0.5 * t_max + 0.5 * t_max * (i as f64 + 0.5) / analytic_points as f64;
                analytic_mean_displacement(omega_a, omega_b, t)
            })
            .sum::<f64>()
            / analytic_points as f64;

        let mut entry = Map::new();
        entry.insert("ratio".into(), Value::from(r));
        record_frequency(&mut entry, "omega_a", drive.omega_b_hz / r);
        entry.insert("window_mean_measured".into(), Value::from(measured));
        entry.insert("window_mean_analytic".into(), Value::from(analytic));
        summary.push(Value::Object(entry));
    }

    let mut emitter = Emitter::new(&common.out)?;
    let metadata = vec![
        format!("cells = {}", drive.cells),
        format!("omega_b_hz = {}", drive.omega_b_hz),
        format!("omega_b_rad_s = {omega_b}"),
        format!("t_max_s = {t_max}"),
        format!("samples = {samples}"),
    ];
    emitter.write_csv(
        "md_scan.csv",
        &metadata,
        "ratio,t_s,i_y,x_over_a",
        &rows,
    )?;
    emitter.write_json("md_summary.json", &summary)?;
    emitter.finish("md-scan", None, workers, None, config_echo(common, cfg))?;
    for entry in &summary {
        let r = entry["ratio"].as_f64().unwrap_or(f64::NAN);
        let m = entry["window_mean_measured"].as_f64().unwrap_or(f64::NAN);
        println!("ratio {r}: late-window mean displacement {m:.4}");
    }
    Ok(())
}
