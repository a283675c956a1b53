//! Matter-wave interferometer protocols on the two-level lattice: the
//! many-pulse sequence, the Thouless-pump sequence, ideal phase formulas and
//! recovery-fidelity diagnostics.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::evolve::{
    apply_pulse, apply_pulse_adjoint, evolve_time_dependent, EvolutionOptions, MeasurementPulse,
    Propagator,
};
use crate::model::{bessel_j, build_rm_hamiltonian, LatticeParams, RmParameters};
use crate::noise::{ensemble_run, EnsembleResult, NoiseRealization, NoiseSpec};
use crate::state::{localized_state, measure, Level, QuantumState};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const PI: f64 = std::f64::consts::PI;

/// Smooth ramp with vanishing velocity at both endpoints.
fn smooth_progress(u: f64) -> f64 {
    u - (TWO_PI * u).sin() / TWO_PI
}

/// Periodic pump schedule tracing a circle of radius `gap` in the
/// (delta, Omega_A - Omega_B) plane, centered at (delta_offset, 0).
///
/// Each period has two legs. The sideband leg (first) ramps Omega_B through
/// a half turn while the carrier stays off; the carrier leg mirrors it on the
/// other half of the circle. Only one coupling is active at a time, so the
/// instantaneous bond gap stays at `gap` all along an enclosing loop and the
/// two internal states are transported in opposite directions: e up one cell
/// and g down one cell per period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpCycle {
    pub gap: f64,
    pub period: f64,
    pub delta_offset: f64,
    pub carrier_fraction: f64,
    pub reversed: bool,
}

impl PumpCycle {
    /// Fails on non-positive gap or period.
    pub fn new(gap: f64, period: f64) -> Result<Self> {
        if !(gap > 0.0) || !(period > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "pump cycle needs positive gap and period, got ({gap}, {period})"
            )));
        }
        Ok(Self {
            gap,
            period,
            delta_offset: 0.0,
            carrier_fraction: 1.0 / 3.0,
            reversed: false,
        })
    }

    /// Shifts the loop center along delta; offsets beyond the radius stop the
    /// loop from enclosing the critical point and kill the transport.
    pub fn with_delta_offset(mut self, offset: f64) -> Self {
        self.delta_offset = offset;
        self
    }

    /// Fraction of the period spent on the carrier leg. Fails outside (0, 1).
    pub fn with_carrier_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0) || !(fraction < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "carrier fraction must lie in (0, 1), got {fraction}"
            )));
        }
        self.carrier_fraction = fraction;
        Ok(self)
    }

    /// Time-mirrored schedule; transport changes sign.
    pub fn reverse(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    /// Drive parameters at time t (periodically wrapped, tilt left at zero).
    pub fn params_at(&self, t: f64) -> RmParameters {
        let mut u = (t / self.period).rem_euclid(1.0);
        if self.reversed {
            u = 1.0 - u;
        }
        let sideband_fraction = 1.0 - self.carrier_fraction;
        if u < sideband_fraction {
            let v = smooth_progress(u / sideband_fraction);
            let angle = PI * v;
            RmParameters::new(
                0.0,
                self.gap * angle.sin(),
                self.delta_offset + self.gap * angle.cos(),
                0.0,
            )
        } else {
            let v = smooth_progress((u - sideband_fraction) / self.carrier_fraction);
            let angle = PI * v;
            RmParameters::new(
                self.gap * angle.sin(),
                0.0,
                self.delta_offset - self.gap * angle.cos(),
                0.0,
            )
        }
    }
}

/// AC Stark parameters of the modulated drive generating both tones: the
/// modulation depth argument of the Bessel weights and the lattice band
/// splitting (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarkParams {
    pub bessel_argument: f64,
    pub splitting: f64,
}

impl Default for StarkParams {
    fn default() -> Self {
        Self {
            bessel_argument: 1.0039020174158153,
            splitting: TWO_PI * 878.6,
        }
    }
}

impl StarkParams {
    /// Differential detunings applied while each tone drives at matched
    /// coupling `omega`: (during-sideband, during-carrier). The idle tone
    /// shifts both levels through its off-resonant coupling; the sideband
    /// tone lowers the effective carrier detuning and the carrier tone raises
    /// it.
    pub fn pulse_detunings(&self, omega: f64) -> (f64, f64) {
        let j0 = bessel_j(0, self.bessel_argument);
        let j1 = bessel_j(1, self.bessel_argument);
        let during_sideband = -2.0 * (omega * j0 / j1).powi(2) / (4.0 * self.splitting);
        let during_carrier = 2.0 * (omega * j1 / j0).powi(2) / (4.0 * self.splitting);
        (during_sideband, during_carrier)
    }
}

/// How interferometer pulses are realized: instantaneous ideal rotations, or
/// finite-duration resonant drives (optionally with AC Stark detunings).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PulseMode {
    Ideal,
    Driven { stark: Option<StarkParams> },
}

/// Many-pulse interferometer: a carrier pi/2 beamsplitter, `pulses` composite
/// pi-pulses (sideband then carrier) separating the arms, a dark tilt
/// evolution, the phase-inverted pulse train in reverse order, and a final
/// carrier pi/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MppSpec {
    pub omega: f64,
    pub pulses: usize,
    pub dark_time: f64,
    pub mode: PulseMode,
}

impl MppSpec {
    /// Fails on a non-positive Rabi rate, zero pulses or negative dark time.
    pub fn new(omega: f64, pulses: usize, dark_time: f64) -> Result<Self> {
        if !(omega > 0.0) || pulses == 0 || !(dark_time >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "many-pulse spec needs omega > 0, pulses >= 1, dark_time >= 0, got ({omega}, {pulses}, {dark_time})"
            )));
        }
        Ok(Self {
            omega,
            pulses,
            dark_time,
            mode: PulseMode::Ideal,
        })
    }

    pub fn driven(mut self, stark: Option<StarkParams>) -> Self {
        self.mode = PulseMode::Driven { stark };
        self
    }

    /// Duration of one separation train: pulses * (pi/omega + pi/omega).
    pub fn train_time(&self) -> f64 {
        self.pulses as f64 * 2.0 * PI / self.omega
    }

    /// Full sequence duration 2 t_d + T.
    pub fn total_time(&self) -> f64 {
        2.0 * self.train_time() + self.dark_time
    }
}

/// Thouless-pump interferometer: carrier pi/2, `cycles` forward pump periods,
/// `cycles` mirrored periods, final carrier pi/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TppSpec {
    pub cycle: PumpCycle,
    pub cycles: usize,
    pub steps_per_cycle: usize,
}

impl TppSpec {
    /// Fails on zero cycles.
    pub fn new(cycle: PumpCycle, cycles: usize) -> Result<Self> {
        if cycles == 0 {
            return Err(CoreError::InvalidParameter(
                "pump interferometer needs at least one cycle".into(),
            ));
        }
        Ok(Self {
            cycle,
            cycles,
            steps_per_cycle: 2000,
        })
    }

    pub fn with_steps_per_cycle(mut self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(CoreError::InvalidParameter(
                "steps per cycle must be positive".into(),
            ));
        }
        self.steps_per_cycle = steps;
        Ok(self)
    }

    /// Full sequence duration 2 N_p tau.
    pub fn total_time(&self) -> f64 {
        2.0 * self.cycles as f64 * self.cycle.period
    }
}

/// Ideal accumulated phase of the many-pulse sequence: 2 delta_t T N_p, the
/// arm separation 2 N_p cells held for the dark time T.
pub fn ideal_phase_mpp(spec: &MppSpec, delta_t: f64) -> f64 {
    2.0 * delta_t * spec.dark_time * spec.pulses as f64
}

/// Ideal accumulated phase of the pump sequence: delta_t t_f^2 / (2 tau),
/// the quadratic-in-time growth of a separation ramping at 2 cells per cycle.
pub fn ideal_phase_tpp(spec: &TppSpec, delta_t: f64) -> f64 {
    let t_f = spec.total_time();
    delta_t * t_f * t_f / (2.0 * spec.cycle.period)
}

/// State of the interferometer sampled at a checkpoint (after a composite
/// pulse or a pump period).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MwiSample {
    pub index: usize,
    pub d_eg: Option<f64>,
    pub n_e: f64,
    pub n_g: f64,
    pub fidelity: f64,
}

/// Interferometer outputs: the carrier coherence quadrature before the final
/// pulse, the extracted phase relative to a delta_t = 0 reference run, the
/// recovery fidelity against the post-beamsplitter state (branch-resolved,
/// phase-insensitive), per-checkpoint samples, the separation at turnaround,
/// and the populations after the final conversion pulse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MwiOutcome {
    pub s_y: f64,
    pub phase: f64,
    pub fidelity: f64,
    pub samples: Vec<MwiSample>,
    pub turnaround_d_eg: Option<f64>,
    pub final_n_e: f64,
    pub final_n_g: f64,
    pub warnings: Vec<String>,
}

fn carrier_coherence(psi: &QuantumState) -> Complex64 {
    let amps = psi.amplitudes();
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..psi.lattice().cells {
        sum += amps[2 * l + 1].conj() * amps[2 * l];
    }
    sum
}

/// Overlap with the reference resolved by internal state and maximized over
/// the relative phase between the g and e branches:
/// F = (|<ref_g|psi_g>| + |<ref_e|psi_e>|)^2.
///
/// The branch phase is the interferometer's signal (and at finite cycle time
/// it carries a deterministic second-order adiabatic offset), so it is
/// excluded from the recovery figure on purpose.
fn recovery_fidelity(reference: &QuantumState, psi: &QuantumState) -> Result<f64> {
    if reference.lattice() != psi.lattice() {
        return Err(CoreError::InvalidParameter(
            "recovery fidelity needs states on the same lattice".into(),
        ));
    }
    let a = reference.amplitudes();
    let b = psi.amplitudes();
    let mut g = Complex64::new(0.0, 0.0);
    let mut e = Complex64::new(0.0, 0.0);
    for l in 0..reference.lattice().cells {
        g += a[2 * l].conj() * b[2 * l];
        e += a[2 * l + 1].conj() * b[2 * l + 1];
    }
    Ok((g.norm() + e.norm()).powi(2))
}

fn wrap_angle(x: f64) -> f64 {
    x.sin().atan2(x.cos())
}

fn check_arm_room(lattice: LatticeParams, arms: usize) -> Result<()> {
    if lattice.cells < 2 * arms + 8 {
        return Err(CoreError::InvalidParameter(format!(
            "lattice of {} cells cannot hold a separation of {} cells plus guard band",
            lattice.cells,
            2 * arms
        )));
    }
    Ok(())
}

fn sample_state(
    index: usize,
    psi: &QuantumState,
    reference: &QuantumState,
    samples: &mut Vec<MwiSample>,
) -> Result<()> {
    let obs = measure(psi);
    samples.push(MwiSample {
        index,
        d_eg: obs.d_eg,
        n_e: obs.n_e,
        n_g: obs.n_g,
        fidelity: recovery_fidelity(reference, psi)?,
    });
    Ok(())
}

struct DrivenPulses {
    side: Propagator,
    carr: Propagator,
    side_neg: Propagator,
    carr_neg: Propagator,
    t_pi: f64,
}

impl DrivenPulses {
    fn build(
        spec: &MppSpec,
        lattice: LatticeParams,
        delta_t: f64,
        noise: &NoiseRealization,
        stark: Option<StarkParams>,
    ) -> Result<Self> {
        let oa = spec.omega * (1.0 + noise.eps_a[0]);
        let ob = spec.omega * (1.0 + noise.eps_a[1]);
        let (d_side, d_carr) = match stark {
            Some(s) => s.pulse_detunings(spec.omega),
            None => (0.0, 0.0),
        };
        let side = RmParameters::new(0.0, ob, d_side, delta_t);
        let carr = RmParameters::new(oa, 0.0, d_carr, delta_t);
        let side_neg = RmParameters::new(0.0, -ob, d_side, delta_t);
        let carr_neg = RmParameters::new(-oa, 0.0, d_carr, delta_t);
        Ok(Self {
            side: Propagator::new(&build_rm_hamiltonian(lattice, &side))?,
            carr: Propagator::new(&build_rm_hamiltonian(lattice, &carr))?,
            side_neg: Propagator::new(&build_rm_hamiltonian(lattice, &side_neg))?,
            carr_neg: Propagator::new(&build_rm_hamiltonian(lattice, &carr_neg))?,
            t_pi: PI / spec.omega,
        })
    }
}

enum MppPulses {
    Ideal,
    Driven(DrivenPulses),
}

impl MppPulses {
    fn beamsplitter(&self, psi: &QuantumState) -> QuantumState {
        match self {
            Self::Ideal => apply_pulse(MeasurementPulse::CarrierHalf, psi),
            Self::Driven(p) => p.carr.advance(psi, 0.5 * p.t_pi),
        }
    }

    fn composite_forward(&self, psi: &QuantumState) -> QuantumState {
        match self {
            Self::Ideal => apply_pulse(
                MeasurementPulse::CarrierPi,
                &apply_pulse(MeasurementPulse::SidebandPi, psi),
            ),
            Self::Driven(p) => p.carr.advance(&p.side.advance(psi, p.t_pi), p.t_pi),
        }
    }

    fn composite_reversed(&self, psi: &QuantumState) -> QuantumState {
        match self {
            Self::Ideal => apply_pulse_adjoint(
                MeasurementPulse::SidebandPi,
                &apply_pulse_adjoint(MeasurementPulse::CarrierPi, psi),
            ),
            Self::Driven(p) => p.side_neg.advance(&p.carr_neg.advance(psi, p.t_pi), p.t_pi),
        }
    }
}

struct MwiStates {
    split: QuantumState,
    before_final: QuantumState,
    final_state: QuantumState,
    samples: Vec<MwiSample>,
}

fn run_mpp_once(
    spec: &MppSpec,
    delta_t: f64,
    noise: &NoiseRealization,
    lattice: LatticeParams,
) -> Result<MwiStates> {
    check_arm_room(lattice, spec.pulses)?;
    let delta_t_run = delta_t + noise.eps_t * spec.omega;
    let pulses = match spec.mode {
        PulseMode::Ideal => MppPulses::Ideal,
        PulseMode::Driven { stark } => {
            MppPulses::Driven(DrivenPulses::build(spec, lattice, delta_t_run, noise, stark)?)
        }
    };
    let psi0 = localized_state(lattice, lattice.center(), Level::Ground)?;
    let split = pulses.beamsplitter(&psi0);

    let mut samples = Vec::with_capacity(2 * spec.pulses);
    let mut psi = split.clone();
    for i in 0..spec.pulses {
        psi = pulses.composite_forward(&psi);
        sample_state(i + 1, &psi, &split, &mut samples)?;
    }
    if spec.dark_time > 0.0 {
        let h_dark =
            build_rm_hamiltonian(lattice, &RmParameters::new(0.0, 0.0, 0.0, delta_t_run));
        psi = Propagator::new(&h_dark)?.advance(&psi, spec.dark_time);
    }
    for i in 0..spec.pulses {
        psi = pulses.composite_reversed(&psi);
        sample_state(spec.pulses + i + 1, &psi, &split, &mut samples)?;
    }
    let final_state = pulses.beamsplitter(&psi);
    Ok(MwiStates {
        split,
        before_final: psi,
        final_state,
        samples,
    })
}

fn assemble_outcome(
    states: MwiStates,
    phase: f64,
    turnaround_index: usize,
    warnings: Vec<String>,
) -> Result<MwiOutcome> {
    let final_obs = measure(&states.final_state);
    let turnaround_d_eg = states.samples[turnaround_index].d_eg;
    Ok(MwiOutcome {
        s_y: measure(&states.before_final).s_y,
        phase,
        fidelity: recovery_fidelity(&states.split, &states.before_final)?,
        samples: states.samples,
        turnaround_d_eg,
        final_n_e: final_obs.n_e,
        final_n_g: final_obs.n_g,
        warnings,
    })
}

/// Runs the many-pulse interferometer under one noise draw. The extracted
/// phase is referenced to an internal rerun of the same draw at delta_t = 0;
/// the timing error eps_t enters as an extra tilt in units of the nominal
/// Rabi rate and stays in place during the reference run.
///
/// Fails when the lattice cannot hold the separation or a pulse Hamiltonian
/// is singular.
pub fn run_mpp(
    spec: &MppSpec,
    delta_t: f64,
    noise: &NoiseRealization,
    lattice: LatticeParams,
) -> Result<MwiOutcome> {
    let states = run_mpp_once(spec, delta_t, noise, lattice)?;
    let phase = if delta_t == 0.0 {
        0.0
    } else {
        let reference = run_mpp_once(spec, 0.0, noise, lattice)?;
        wrap_angle(
            carrier_coherence(&states.before_final).arg()
                - carrier_coherence(&reference.before_final).arg(),
        )
    };
    assemble_outcome(states, phase, spec.pulses - 1, Vec::new())
}

/// Per-period displacement of an excited-state particle under the noise-free
/// cycle; the quantized-transport diagnostic.
pub fn single_cycle_transport(
    cycle: &PumpCycle,
    lattice: LatticeParams,
    steps_per_cycle: usize,
) -> Result<f64> {
    let psi0 = localized_state(lattice, lattice.center(), Level::Excited)?;
    let opts = EvolutionOptions::new(cycle.period / steps_per_cycle as f64).without_edge_guard();
    let psi = evolve_time_dependent(
        |t| build_rm_hamiltonian(lattice, &cycle.params_at(t)),
        0.0,
        cycle.period,
        &opts,
        &psi0,
    )?;
    Ok(measure(&psi).x - measure(&psi0).x)
}

fn run_tpp_once(
    spec: &TppSpec,
    delta_t: f64,
    noise: &NoiseRealization,
    lattice: LatticeParams,
) -> Result<MwiStates> {
    check_arm_room(lattice, spec.cycles)?;
    let delta_t_run = delta_t + noise.eps_t * spec.cycle.gap;
    let gain = [1.0 + noise.eps_a[0], 1.0 + noise.eps_a[1]];
    let opts =
        EvolutionOptions::new(spec.cycle.period / spec.steps_per_cycle as f64).without_edge_guard();
    let h_at = |cycle: PumpCycle| {
        move |t: f64| {
            let mut p = cycle.params_at(t);
            p.omega_a *= gain[0];
            p.omega_b *= gain[1];
            p.delta_t = delta_t_run;
            build_rm_hamiltonian(lattice, &p)
        }
    };

    let psi0 = localized_state(lattice, lattice.center(), Level::Ground)?;
    let split = apply_pulse(MeasurementPulse::CarrierHalf, &psi0);

    let mut samples = Vec::with_capacity(2 * spec.cycles);
    let mut psi = split.clone();
    let tau = spec.cycle.period;
    let forward = h_at(spec.cycle);
    for i in 0..spec.cycles {
        psi = evolve_time_dependent(&forward, i as f64 * tau, (i + 1) as f64 * tau, &opts, &psi)?;
        sample_state(i + 1, &psi, &split, &mut samples)?;
    }
    let backward = h_at(spec.cycle.reverse());
    for i in 0..spec.cycles {
        psi = evolve_time_dependent(&backward, i as f64 * tau, (i + 1) as f64 * tau, &opts, &psi)?;
        sample_state(spec.cycles + i + 1, &psi, &split, &mut samples)?;
    }
    let final_state = apply_pulse(MeasurementPulse::CarrierHalf, &psi);
    Ok(MwiStates {
        split,
        before_final: psi,
        final_state,
        samples,
    })
}

/// Runs the Thouless-pump interferometer under one noise draw. Amplitude
/// errors rescale the active coupling of each pump leg per tone, the timing
/// error enters as an extra tilt in units of the pump gap, and the phase is
/// referenced to an internal delta_t = 0 rerun. A warning is attached when
/// the noise-free single-cycle transport deviates from one cell by more than
/// five percent.
pub fn run_tpp(
    spec: &TppSpec,
    delta_t: f64,
    noise: &NoiseRealization,
    lattice: LatticeParams,
) -> Result<MwiOutcome> {
    let states = run_tpp_once(spec, delta_t, noise, lattice)?;
    let phase = if delta_t == 0.0 {
        0.0
    } else {
        let reference = run_tpp_once(spec, 0.0, noise, lattice)?;
        wrap_angle(
            carrier_coherence(&states.before_final).arg()
                - carrier_coherence(&reference.before_final).arg(),
        )
    };
    let mut warnings = Vec::new();
    let transport = single_cycle_transport(&spec.cycle, lattice, spec.steps_per_cycle)?;
    if (transport.abs() - 1.0).abs() > 0.05 {
        warnings.push(format!(
            "single-cycle transport {transport:.4} cells deviates from quantization by more than 5%"
        ));
    }
    assemble_outcome(states, phase, spec.cycles - 1, warnings)
}

/// Either interferometer, for ensemble drivers that treat them uniformly.
#[derive(Debug, Clone, Serialize)]
pub enum MwiProtocol {
    ManyPulse(MppSpec),
    Pump(TppSpec),
}

/// Dispatches to the protocol-specific runner.
pub fn run_protocol(
    protocol: &MwiProtocol,
    delta_t: f64,
    noise: &NoiseRealization,
    lattice: LatticeParams,
) -> Result<MwiOutcome> {
    match protocol {
        MwiProtocol::ManyPulse(spec) => run_mpp(spec, delta_t, noise, lattice),
        MwiProtocol::Pump(spec) => run_tpp(spec, delta_t, noise, lattice),
    }
}

/// Distribution of recovery fidelities over a noise ensemble, at zero tilt.
pub fn recovery_fidelity_experiment(
    protocol: &MwiProtocol,
    lattice: LatticeParams,
    noise: &NoiseSpec,
    count: usize,
) -> Result<EnsembleResult> {
    ensemble_run(noise, count, |_, draw| {
        run_protocol(protocol, 0.0, draw, lattice).map(|out| out.fidelity)
    })
}
