pub mod clock;
pub mod ix_scan;
pub mod md_scan;
pub mod mwi;
pub mod sensitivity;
pub mod validate;
pub mod winding;

use anyhow::{bail, Result};
use serde_json::{Map, Value};

use crate::config::ConfigMap;
use crate::Common;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Shared lattice/drive knobs used by most subcommands.
pub struct DriveConfig {
    pub cells: usize,
    pub omega_a_hz: f64,
    pub omega_b_hz: f64,
}

impl DriveConfig {
    pub fn read(cfg: &ConfigMap, default_cells: usize) -> Result<Self> {
        Ok(Self {
            cells: cfg.usize("lattice.cells", default_cells)?,
            omega_a_hz: cfg.f64("drive.omega_a_hz", 5.0)?,
            omega_b_hz: cfg.f64("drive.omega_b_hz", 10.0)?,
        })
    }

    pub fn omega_a(&self) -> f64 {
        TWO_PI * self.omega_a_hz
    }

    pub fn omega_b(&self) -> f64 {
        TWO_PI * self.omega_b_hz
    }
}

/// Base config echoed into every manifest: seed-independent run parameters.
pub fn config_echo(common: &Common, cfg: &ConfigMap) -> Map<String, Value> {
    let mut map = cfg.echo();
    if let Some(path) = &common.config {
        map.insert(
            "config_file".into(),
            Value::String(path.display().to_string()),
        );
    }
    map
}

pub fn resolve_seed(common: &Common, cfg: &ConfigMap) -> Result<Option<u64>> {
    if common.seed.is_some() {
        return Ok(common.seed);
    }
    cfg.u64_opt("seed")
}

/// Noise ensembles must be reproducible, so a seed is mandatory for them.
pub fn require_seed(common: &Common, cfg: &ConfigMap) -> Result<u64> {
    match resolve_seed(common, cfg)? {
        Some(seed) => Ok(seed),
        None => bail!("this command draws noise; pass --seed (or set `seed` in the config)"),
    }
}

/// Least-squares line y = a x + b with its coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ss_res += r * r;
        ss_tot += (y - my) * (y - my);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, intercept, r2)
}

pub fn wrap_angle(phi: f64) -> f64 {
    let two_pi = TWO_PI;
    let mut w = phi.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

