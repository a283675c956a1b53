use anyhow::{Context, Result};
use serde_json::{Map, Value};
use trm_core::{run_one_step_protocol, LatticeParams, RmParameters};

use crate::commands::{config_echo, linear_fit, DriveConfig};
use crate::config::ConfigMap;
use crate::output::Emitter;
use crate::Common;

pub fn run(common: &Common, cfg: &ConfigMap, workers: Option<usize>) -> Result<()> {
    let drive = DriveConfig::read(cfg, 64)?;
    let ratios = cfg.f64_list("ix.ratios", &[3.0, 0.3])?;
    let span = cfg.f64("ix.span", 0.1)?;
    let points = cfg.usize("ix.points", 11)?;
    let guard = cfg.f64("ix.edge_guard", 1e-8)?;
    cfg.reject_unknown()?;
    if points < 2 {
        anyhow::bail!("ix.points must be at least 2, got {points}");
    }

    let lattice = LatticeParams::new(drive.cells)?;
    let omega_b = drive.omega_b();
    let hold = std::f64::consts::PI / omega_b;
    let edge_guard = (guard > 0.0).then_some(guard);

    let mut rows = Vec::with_capacity(ratios.len() * points);
    let mut summary = Vec::with_capacity(ratios.len());
    for &r in &ratios {
        let omega_a = omega_b / r;
        let mut xs = Vec::with_capacity(points);
        let mut ys = Vec::with_capacity(points);
        for i in 0..points {
            let frac = -span + 2.0 * span * i as f64 / (points - 1) as f64;
            let params = RmParameters::new(omega_a, omega_b, frac * omega_b, 0.0);
            let ix = run_one_step_protocol(lattice, &params, hold, edge_guard)
                .with_context(|| format!("one-step run at ratio {r}, detuning {frac} omega_b"))?;
            rows.push(format!("{r},{frac:.6},{ix:.15e}"));
            xs.push(frac);
            ys.push(ix);
        }
        let (slope, intercept, r2) = linear_fit(&xs, &ys);
        let mut entry = Map::new();
        entry.insert("ratio".into(), Value::from(r));
        entry.insert("slope_per_omega_b".into(), Value::from(slope));
        entry.insert("intercept".into(), Value::from(intercept));
        entry.insert("r_squared".into(), Value::from(r2));
        summary.push(Value::Object(entry));
    }

    let mut emitter = Emitter::new(&common.out)?;
    let metadata = vec![
        format!("cells = {}", drive.cells),
        format!("omega_b_hz = {}", drive.omega_b_hz),
        format!("omega_b_rad_s = {omega_b}"),
        format!("hold_time_s = {hold}"),
    ];
    emitter.write_csv(
        "ix_scan.csv",
        &metadata,
        "ratio,delta_over_omega_b,i_x",
        &rows,
    )?;
    emitter.write_json("ix_summary.json", &summary)?;
    emitter.finish("ix-scan", None, workers, None, config_echo(common, cfg))?;
    for entry in &summary {
        let r = entry["ratio"].as_f64().unwrap_or(f64::NAN);
        let s = entry["slope_per_omega_b"].as_f64().unwrap_or(f64::NAN);
        let r2 = entry["r_squared"].as_f64().unwrap_or(f64::NAN);
        println!("ratio {r}: slope {s:.4} per omega_b (R^2 = {r2:.6})");
    }
    Ok(())
}
