//! Measurement protocols: Rabi lineshape baseline, mean-displacement winding
//! readout, the one-step bond-coherence measurement, clock operation on the
//! sideband lattice, and resonance solving.

use crate::error::{CoreError, Result};
use crate::evolve::{
    apply_pulse, prepare_bond_superposition, BondPreparation, MeasurementPulse, Propagator,
};
use crate::model::{build_rm_hamiltonian, LatticeParams, RmParameters};
use crate::noise::NoiseRealization;
use crate::state::{localized_state, measure, Level};

/// Carrier Rabi interrogation with a fixed pulse duration.
///
/// The pulse time is locked to the nominal Rabi rate (t_pi = pi / omega_r at
/// construction); amplitude errors change omega_r but not t_pi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiSpec {
    pub omega_r: f64,
    pub t_pi: f64,
}

impl RabiSpec {
    /// Fails on a non-positive Rabi rate.
    pub fn new(omega_r: f64) -> Result<Self> {
        if !(omega_r > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "Rabi rate must be positive, got {omega_r}"
            )));
        }
        Ok(Self {
            omega_r,
            t_pi: std::f64::consts::PI / omega_r,
        })
    }

    /// Same pulse duration, fractionally perturbed coupling.
    pub fn with_coupling_error(&self, eps_a: f64) -> Self {
        Self {
            omega_r: self.omega_r * (1.0 + eps_a),
            t_pi: self.t_pi,
        }
    }
}

/// Two-level excitation signal (n_e - n_g)/2 after the pulse, as a function of
/// laser detuning.
pub fn rabi_lineshape(spec: &RabiSpec, delta_l: f64) -> f64 {
    let w = spec.omega_r.hypot(delta_l);
    let p_e = if w == 0.0 {
        0.0
    } else {
        (spec.omega_r / w).powi(2) * (0.5 * w * spec.t_pi).sin().powi(2)
    };
    p_e - 0.5
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iterations: usize) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(CoreError::NoConvergence(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Steepest-slope detuning of the lineshape (root of its second derivative),
/// near 0.76 omega_r.
pub fn rabi_operating_point(spec: &RabiSpec) -> Result<f64> {
    let h = 1e-4 * spec.omega_r;
    let second = |d: f64| {
        (rabi_lineshape(spec, d + h) - 2.0 * rabi_lineshape(spec, d) + rabi_lineshape(spec, d - h))
            / (h * h)
    };
    bisect(second, 0.3 * spec.omega_r, 1.2 * spec.omega_r, 200)
}

/// Detuning where the excitation falls to half its resonant value, near
/// 0.8 omega_r.
pub fn rabi_half_max_detuning(spec: &RabiSpec) -> Result<f64> {
    bisect(
        |d| rabi_lineshape(spec, d),
        0.2 * spec.omega_r,
        1.5 * spec.omega_r,
        200,
    )
}

/// Time series produced by the mean-displacement protocol: the bond current
/// read after each hold time and its running trapezoid integral
/// x(T) = omega_b * Int I_y dt.
#[derive(Debug, Clone, PartialEq)]
pub struct MdTrace {
    pub times: Vec<f64>,
    pub i_y: Vec<f64>,
    pub displacement: Vec<f64>,
}

fn check_edge(occupation: f64, guard: Option<f64>, time: f64) -> Result<()> {
    if let Some(g) = guard {
        if occupation >= g {
            return Err(CoreError::EdgeLeakage {
                occupation,
                guard: g,
                time,
            });
        }
    }
    Ok(())
}

/// Winding measurement by repeated hold-and-pulse runs: for each requested
/// hold time the centered g state evolves under the untilted couplings, the
/// sideband pi/2 pulse maps I_y into S_z, and the displacement accumulates by
/// trapezoid integration from t = 0.
///
/// Fails unless delta = delta_t = 0, on a non-increasing time grid, or when
/// the edge guard trips.
pub fn run_md_protocol(
    lattice: LatticeParams,
    params: &RmParameters,
    times: &[f64],
    edge_guard: Option<f64>,
) -> Result<MdTrace> {
    if params.delta != 0.0 || params.delta_t != 0.0 {
        return Err(CoreError::InvalidParameter(
            "mean-displacement protocol requires delta = delta_t = 0".into(),
        ));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::InvalidParameter(
            "time grid must be non-empty, non-negative and strictly increasing".into(),
        ));
    }
    let psi0 = localized_state(lattice, lattice.center(), Level::Ground)?;
    let h = build_rm_hamiltonian(lattice, params);
    let prop = Propagator::new(&h)?;
    let coeffs = prop.project(&psi0);

    let mut i_y = Vec::with_capacity(times.len());
    let mut displacement = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    let mut prev_iy = 0.0;
    let mut acc = 0.0;
    for &t in times {
        let psi = prop.synthesize(lattice, &coeffs, t);
        check_edge(psi.edge_occupation(), edge_guard, t)?;
        let read = measure(&apply_pulse(MeasurementPulse::M1, &psi)).s_z;
        acc += 0.5 * (read + prev_iy) * (t - prev_t) * params.omega_b;
        i_y.push(read);
        displacement.push(acc);
        prev_t = t;
        prev_iy = read;
    }
    Ok(MdTrace {
        times: times.to_vec(),
        i_y,
        displacement,
    })
}

/// Single-shot I_x measurement: evolve the centered g state under the tilted
/// model for time t, apply the phase-jumped sideband pi/2 pulse, read S_z.
pub fn run_one_step_protocol(
    lattice: LatticeParams,
    params: &RmParameters,
    t: f64,
    edge_guard: Option<f64>,
) -> Result<f64> {
    let psi0 = localized_state(lattice, lattice.center(), Level::Ground)?;
    let h = build_rm_hamiltonian(lattice, params);
    let psi = Propagator::new(&h)?.advance(&psi0, t);
    check_edge(psi.edge_occupation(), edge_guard, t)?;
    Ok(measure(&apply_pulse(MeasurementPulse::M2, &psi)).s_z)
}

/// Same observable from the pre-spread bond superposition: evolve
/// (|l_0-1,e> + |l_0,g>)/sqrt2 under the tilted model and return -S_z, which
/// analytically equals the one-step I_x.
pub fn run_alternative_ssh(
    lattice: LatticeParams,
    params: &RmParameters,
    t: f64,
    edge_guard: Option<f64>,
) -> Result<f64> {
    let psi0 = prepare_bond_superposition(lattice, lattice.center(), BondPreparation::ExactPulse)?;
    let h = build_rm_hamiltonian(lattice, params);
    let psi = Propagator::new(&h)?.advance(&psi0, t);
    check_edge(psi.edge_occupation(), edge_guard, t)?;
    Ok(-measure(&psi).s_z)
}

/// Clock interrogation of the sideband lattice in its topological phase: a
/// one-step measurement at fixed hold time pi / omega_b with drive
/// imperfections applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SshClockSpec {
    pub lattice: LatticeParams,
    pub omega_a: f64,
    pub omega_b: f64,
    pub edge_guard: Option<f64>,
}

impl SshClockSpec {
    /// Fails unless omega_b > omega_a > 0 (the winding-one phase).
    pub fn new(lattice: LatticeParams, omega_a: f64, omega_b: f64) -> Result<Self> {
        if !(omega_a > 0.0) || !(omega_b > omega_a) {
            return Err(CoreError::InvalidParameter(format!(
                "clock operation needs omega_b > omega_a > 0, got ({omega_a}, {omega_b})"
            )));
        }
        Ok(Self {
            lattice,
            omega_a,
            omega_b,
            edge_guard: None,
        })
    }

    /// Hold time locked to the nominal sideband rate.
    pub fn hold_time(&self) -> f64 {
        std::f64::consts::PI / self.omega_b
    }
}

/// One clock shot at probe detunings (delta, delta_t) under a static noise
/// draw. Amplitude errors rescale each coupling and the tilt error adds
/// eps_t * omega_b to delta_t; static tone phases drop out of this signal
/// because the readout pulse is referenced to the drive phase and a site-local
/// gauge removes them from the Hamiltonian.
pub fn run_ssh_clock(
    spec: &SshClockSpec,
    delta: f64,
    delta_t: f64,
    noise: &NoiseRealization,
) -> Result<f64> {
    let params = RmParameters::new(
        spec.omega_a * (1.0 + noise.eps_a[0]),
        spec.omega_b * (1.0 + noise.eps_a[1]),
        delta,
        delta_t + noise.eps_t * spec.omega_b,
    );
    run_one_step_protocol(spec.lattice, &params, spec.hold_time(), spec.edge_guard)
}

/// Probe amplitudes for the two symmetrized error signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceProbe {
    pub delta: f64,
    pub delta_t: f64,
}

/// Locates detuning offsets (delta*, delta_t*) at which the symmetrized
/// signals s(c + probe) + s(c - probe) vanish along each axis, by alternating
/// derivative-free bisection (a Gauss-Seidel servo).
///
/// Fails when a bracket cannot be established or an underlying signal
/// evaluation fails.
pub fn solve_resonance<F>(
    signal: F,
    probe: ResonanceProbe,
    bracket: f64,
    tolerance: f64,
) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if !(probe.delta > 0.0) || !(probe.delta_t > 0.0) || !(bracket > 0.0) || !(tolerance > 0.0) {
        return Err(CoreError::InvalidParameter(
            "resonance solve needs positive probes, bracket and tolerance".into(),
        ));
    }
    let mut center = (0.0_f64, 0.0_f64);
    for _ in 0..60 {
        let c_t = center.1;
        let along_d = balanced_root(
            |x| {
                let plus = signal(x + probe.delta, c_t)?;
                let minus = signal(x - probe.delta, c_t)?;
                Ok((plus + minus, plus.abs() + minus.abs()))
            },
            center.0,
            bracket,
            tolerance,
        )?;
        let new_d = along_d.position(center.0);
        let along_t = balanced_root(
            |x| {
                let plus = signal(new_d, x + probe.delta_t)?;
                let minus = signal(new_d, x - probe.delta_t)?;
                Ok((plus + minus, plus.abs() + minus.abs()))
            },
            center.1,
            bracket,
            tolerance,
        )?;
        let new_t = along_t.position(center.1);
        if matches!(along_d, AxisOutcome::Flat) && matches!(along_t, AxisOutcome::Flat) {
            return Err(CoreError::NoConvergence(
                "signal is unbalanced but depends on neither axis near the operating point"
                    .into(),
            ));
        }
        let moved = (new_d - center.0).abs().max((new_t - center.1).abs());
        center = (new_d, new_t);
        if moved < tolerance {
            return Ok(center);
        }
    }
    Err(CoreError::NoConvergence(
        "resonance servo did not settle".into(),
    ))
}

enum AxisOutcome {
    Moved(f64),
    Balanced,
    Flat,
}

impl AxisOutcome {
    fn position(&self, current: f64) -> f64 {
        match self {
            Self::Moved(x) => *x,
            _ => current,
        }
    }
}

/// Root of a symmetrized error signal along one axis. The closure returns
/// (error, scale) where scale is the summed magnitude of the two probe
/// signals. An error negligible against the scale counts as balanced; an
/// error the axis cannot change (no variation across the expanded bracket)
/// reports the axis as flat so the servo can leave it to the other one.
fn balanced_root<F>(f: F, center: f64, width: f64, resolution: f64) -> Result<AxisOutcome>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let (e_center, scale) = f(center)?;
    if e_center.abs() <= 1e-9 * scale {
        return Ok(AxisOutcome::Balanced);
    }
    let mut w = width;
    for attempt in 0..8 {
        let (lo, hi) = (center - w, center + w);
        let (f_lo, _) = f(lo)?;
        let (f_hi, _) = f(hi)?;
        if f_lo == 0.0 {
            return Ok(AxisOutcome::Moved(lo));
        }
        if f_hi == 0.0 {
            return Ok(AxisOutcome::Moved(hi));
        }
        if f_lo.signum() != f_hi.signum() {
            let (mut lo, mut hi, mut f_lo) = (lo, hi, f_lo);
            for _ in 0..100 {
                if hi - lo < 0.25 * resolution {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let (f_mid, _) = f(mid)?;
                if f_mid == 0.0 {
                    return Ok(AxisOutcome::Moved(mid));
                }
                if f_mid.signum() == f_lo.signum() {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(AxisOutcome::Moved(0.5 * (lo + hi)));
        }
        let variation = (f_lo - e_center).abs().max((f_hi - e_center).abs());
        if attempt == 7 && variation <= 1e-9 * e_center.abs() {
            return Ok(AxisOutcome::Flat);
        }
        w *= 2.0;
    }
    Err(CoreError::NoConvergence(
        "no sign change found while expanding the bracket".into(),
    ))
}
