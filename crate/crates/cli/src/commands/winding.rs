use anyhow::{Context, Result};
use serde_json::{Map, Value};
use trm_core::{winding_number_on_grid, zak_phase};

use crate::commands::{config_echo, TWO_PI};
use crate::config::ConfigMap;
use crate::output::{record_frequency, Emitter};
use crate::Common;

pub fn run(common: &Common, cfg: &ConfigMap, workers: Option<usize>) -> Result<()> {
    let omega_a_hz = cfg.f64("winding.omega_a_hz", 5.0)?;
    let ratios = cfg.f64_list("winding.ratios", &[0.3, 0.5, 2.0, 3.0])?;
    let points = cfg.usize("winding.points", 4096)?;
    cfg.reject_unknown()?;

    let omega_a = TWO_PI * omega_a_hz;
    let mut rows = Vec::with_capacity(ratios.len());
    let mut summary = Vec::with_capacity(ratios.len());
    for &r in &ratios {
        let omega_b = r * omega_a;
        let w = winding_number_on_grid(omega_a, omega_b, points)
            .with_context(|| format!("winding at coupling ratio {r}"))?;
        let zak = zak_phase(omega_a, omega_b)?;
        rows.push(format!("{r},{:.15e},{},{:.15e}", w.raw, w.number, zak));
        let mut entry = Map::new();
        entry.insert("ratio".into(), Value::from(r));
        record_frequency(&mut entry, "omega_b", r * omega_a_hz);
        entry.insert("winding_raw".into(), Value::from(w.raw));
        entry.insert("winding".into(), Value::from(w.number));
        entry.insert("zak_rad".into(), Value::from(zak));
        summary.push(Value::Object(entry));
    }

    let mut emitter = Emitter::new(&common.out)?;
    let metadata = vec![
        format!("omega_a_hz = {omega_a_hz}"),
        format!("omega_a_rad_s = {omega_a}"),
        format!("grid_points = {points}"),
    ];
    emitter.write_csv(
        "winding.csv",
        &metadata,
        "ratio,winding_raw,winding,zak_rad",
        &rows,
    )?;
    emitter.write_json("winding_summary.json", &summary)?;
    emitter.finish("winding", None, workers, None, config_echo(common, cfg))?;
    for (r, row) in ratios.iter().zip(&rows) {
        let number = row.split(',').nth(2).unwrap_or("?");
        println!("ratio {r}: winding {number}");
    }
    Ok(())
}
