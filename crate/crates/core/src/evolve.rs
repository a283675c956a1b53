//! Unitary propagation under static and time-dependent Hamiltonians, ideal
//! measurement pulses, and bond-state preparation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::model::{build_rm_hamiltonian, Hamiltonian, LatticeParams, RmParameters};
use crate::state::{localized_state, Level, QuantumState};

/// Population threshold on the outermost cells beyond which bulk protocols
/// abort.
pub const DEFAULT_EDGE_GUARD: f64 = 1e-8;

/// Step policy for schedule integration.
///
/// The edge guard holds the leakage threshold; None disables the check for
/// runs that deliberately push population into the boundary region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionOptions {
    pub dt: f64,
    pub edge_guard: Option<f64>,
}

impl EvolutionOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            edge_guard: Some(DEFAULT_EDGE_GUARD),
        }
    }

    /// Step size of one two-hundredth of the fastest coupling period.
    pub fn for_max_coupling(omega_max: f64) -> Self {
        Self::new(2.0 * std::f64::consts::PI / omega_max / 200.0)
    }

    pub fn without_edge_guard(mut self) -> Self {
        self.edge_guard = None;
        self
    }

    pub fn with_edge_guard(mut self, guard: f64) -> Self {
        self.edge_guard = Some(guard);
        self
    }
}

/// Cached Hermitian eigendecomposition of a Hamiltonian, for repeated exact
/// propagation over arbitrary durations.
pub struct Propagator {
    basis: DMatrix<Complex64>,
    energies: DVector<f64>,
}

impl Propagator {
    /// Fails on non-finite matrix entries.
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        if !h.is_finite() {
            return Err(CoreError::InvalidParameter(
                "Hamiltonian has non-finite entries".into(),
            ));
        }
        let eig = h.to_dense().symmetric_eigen();
        Ok(Self {
            basis: eig.eigenvectors,
            energies: eig.eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Eigenbasis coefficients of a state, for synthesizing many times from
    /// one decomposition.
    pub fn project(&self, psi: &QuantumState) -> DVector<Complex64> {
        let v = DVector::from_column_slice(psi.amplitudes());
        self.basis.adjoint() * v
    }

    /// Reassembles exp(-i H t) psi from eigenbasis coefficients.
    pub fn synthesize(
        &self,
        lattice: LatticeParams,
        coeffs: &DVector<Complex64>,
        t: f64,
    ) -> QuantumState {
        let rotated = DVector::from_fn(coeffs.len(), |i, _| {
            coeffs[i] * Complex64::from_polar(1.0, -self.energies[i] * t)
        });
        let out = &self.basis * rotated;
        QuantumState::from_amplitudes_unchecked(lattice, out.data.into())
    }

    /// exp(-i H t) psi.
    pub fn advance(&self, psi: &QuantumState, t: f64) -> QuantumState {
        let coeffs = self.project(psi);
        self.synthesize(psi.lattice(), &coeffs, t)
    }
}

/// Exact propagation under a constant Hamiltonian via eigendecomposition.
/// Callers looping over many times should hold a Propagator instead.
pub fn evolve_const(h: &Hamiltonian, psi: &QuantumState, t: f64) -> Result<QuantumState> {
    if h.dim() != psi.lattice().dim() {
        return Err(CoreError::InvalidParameter(format!(
            "Hamiltonian dimension {} does not match state dimension {}",
            h.dim(),
            psi.lattice().dim()
        )));
    }
    let state = Propagator::new(h)?.advance(psi, t);
    state.check_norm()?;
    Ok(state)
}

/// Time-parameterized drive over a closed interval.
#[derive(Debug, Clone)]
pub struct Schedule<F> {
    pub params_at: F,
    pub t_start: f64,
    pub t_end: f64,
}

impl<F: Fn(f64) -> RmParameters> Schedule<F> {
    /// Fails unless t_end > t_start.
    pub fn new(params_at: F, t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(CoreError::InvalidParameter(format!(
                "schedule needs t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        Ok(Self {
            params_at,
            t_start,
            t_end,
        })
    }
}

fn step_count(span: f64, dt: f64) -> usize {
    ((span / dt - 1e-9).ceil().max(1.0)) as usize
}

/// Applies exp(direction * -i * H * dt) by scaling-and-squaring-free Taylor
/// summation; `dt` must already satisfy |H| dt <= 1/2 or so for fast
/// convergence.
fn taylor_apply(
    h: &Hamiltonian,
    dt: f64,
    direction: f64,
    psi: &mut [Complex64],
    term: &mut [Complex64],
    scratch: &mut [Complex64],
) {
    term.copy_from_slice(psi);
    let max_terms = 60;
    for k in 1..=max_terms {
        h.matvec(term, scratch);
        let coeff = Complex64::new(0.0, -direction * dt / k as f64);
        let mut term_norm = 0.0;
        for i in 0..term.len() {
            let next = coeff * scratch[i];
            term[i] = next;
            psi[i] += next;
            term_norm += next.norm_sqr();
        }
        if term_norm < 1e-32 {
            return;
        }
    }
}

fn propagate_step(
    h: &Hamiltonian,
    dt: f64,
    direction: f64,
    psi: &mut [Complex64],
    term: &mut [Complex64],
    scratch: &mut [Complex64],
) {
    let substeps = (h.norm_bound() * dt / 0.5).ceil().max(1.0) as usize;
    let dt_sub = dt / substeps as f64;
    for _ in 0..substeps {
        taylor_apply(h, dt_sub, direction, psi, term, scratch);
    }
}

fn edge_occupation_of(amplitudes: &[Complex64]) -> f64 {
    let n = amplitudes.len();
    amplitudes[0].norm_sqr()
        + amplitudes[1].norm_sqr()
        + amplitudes[n - 2].norm_sqr()
        + amplitudes[n - 1].norm_sqr()
}

/// Piecewise-constant integration of an arbitrary time-dependent Hamiltonian,
/// with parameters sampled at step midpoints.
///
/// Fails when the edge-leakage guard trips; the error carries the simulation
/// time of the offending step.
pub fn evolve_time_dependent<H>(
    h_at: H,
    t_start: f64,
    t_end: f64,
    opts: &EvolutionOptions,
    psi: &QuantumState,
) -> Result<QuantumState>
where
    H: Fn(f64) -> Hamiltonian,
{
    if !(t_end > t_start) || !(opts.dt > 0.0) {
        return Err(CoreError::InvalidParameter(
            "evolution interval must be forward in time with positive dt".into(),
        ));
    }
    let span = t_end - t_start;
    let steps = step_count(span, opts.dt);
    let dt = span / steps as f64;

    let mut amplitudes = psi.amplitudes().to_vec();
    let mut term = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
    let mut scratch = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
    for i in 0..steps {
        let t_mid = t_start + (i as f64 + 0.5) * dt;
        let h = h_at(t_mid);
        propagate_step(&h, dt, 1.0, &mut amplitudes, &mut term, &mut scratch);
        if let Some(guard) = opts.edge_guard {
            let occupation = edge_occupation_of(&amplitudes);
            if occupation >= guard {
                return Err(CoreError::EdgeLeakage {
                    occupation,
                    guard,
                    time: t_start + (i as f64 + 1.0) * dt,
                });
            }
        }
    }
    let out = QuantumState::from_amplitudes_unchecked(psi.lattice(), amplitudes);
    out.check_norm()?;
    Ok(out)
}

/// Integrates a parameter schedule on the lattice of the input state.
pub fn evolve_schedule<F>(
    schedule: &Schedule<F>,
    opts: &EvolutionOptions,
    psi: &QuantumState,
) -> Result<QuantumState>
where
    F: Fn(f64) -> RmParameters,
{
    let lattice = psi.lattice();
    evolve_time_dependent(
        |t| build_rm_hamiltonian(lattice, &(schedule.params_at)(t)),
        schedule.t_start,
        schedule.t_end,
        opts,
        psi,
    )
}

/// Exact inverse of `evolve_schedule` on the same step grid: the steps are
/// replayed in reverse order with conjugated phases, so forward followed by
/// adjoint restores the input up to integrator rounding.
pub fn evolve_schedule_adjoint<F>(
    schedule: &Schedule<F>,
    opts: &EvolutionOptions,
    psi: &QuantumState,
) -> Result<QuantumState>
where
    F: Fn(f64) -> RmParameters,
{
    let lattice = psi.lattice();
    let span = schedule.t_end - schedule.t_start;
    if !(span > 0.0) || !(opts.dt > 0.0) {
        return Err(CoreError::InvalidParameter(
            "adjoint evolution needs a forward interval and positive dt".into(),
        ));
    }
    let steps = step_count(span, opts.dt);
    let dt = span / steps as f64;
    let mut amplitudes = psi.amplitudes().to_vec();
    let mut term = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
    let mut scratch = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
    for i in (0..steps).rev() {
        let t_mid = schedule.t_start + (i as f64 + 0.5) * dt;
        let h = build_rm_hamiltonian(lattice, &(schedule.params_at)(t_mid));
        propagate_step(&h, dt, -1.0, &mut amplitudes, &mut term, &mut scratch);
        if let Some(guard) = opts.edge_guard {
            let occupation = edge_occupation_of(&amplitudes);
            if occupation >= guard {
                return Err(CoreError::EdgeLeakage {
                    occupation,
                    guard,
                    time: schedule.t_start + (i as f64) * dt,
                });
            }
        }
    }
    let out = QuantumState::from_amplitudes_unchecked(lattice, amplitudes);
    out.check_norm()?;
    Ok(out)
}

/// Ideal instantaneous measurement pulses.
///
/// M1 and M2 are the sideband pi/2 rotations reading out I_y and I_x; they act
/// on the bond pairs (e of cell l-1, g of cell l) and leave the two unpaired
/// edge slots untouched. CarrierHalf and CarrierPi act on the on-site (g, e)
/// pairs. SidebandPi is the bond-pair pi rotation used by pulse trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementPulse {
    M1,
    M2,
    CarrierHalf,
    CarrierPi,
    SidebandPi,
}

#[derive(Clone, Copy)]
struct Block {
    m: [[Complex64; 2]; 2],
    on_bond_pairs: bool,
}

fn pulse_block(pulse: MeasurementPulse) -> Block {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match pulse {
        // After M1, S_z reads the prior I_y: block (1/sqrt2) [[1, -i], [-i, 1]]
        // on (e, g).
        MeasurementPulse::M1 => Block {
            m: [[c(r, 0.0), c(0.0, -r)], [c(0.0, -r), c(r, 0.0)]],
            on_bond_pairs: true,
        },
        // After M2, S_z reads the prior I_x: block (1/sqrt2) [[1, 1], [-1, 1]]
        // on (e, g).
        MeasurementPulse::M2 => Block {
            m: [[c(r, 0.0), c(r, 0.0)], [c(-r, 0.0), c(r, 0.0)]],
            on_bond_pairs: true,
        },
        // After CarrierHalf, S_z reads the prior S_y.
        MeasurementPulse::CarrierHalf => Block {
            m: [[c(r, 0.0), c(0.0, -r)], [c(0.0, -r), c(r, 0.0)]],
            on_bond_pairs: false,
        },
        MeasurementPulse::CarrierPi => Block {
            m: [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, -1.0), c(0.0, 0.0)]],
            on_bond_pairs: false,
        },
        MeasurementPulse::SidebandPi => Block {
            m: [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, -1.0), c(0.0, 0.0)]],
            on_bond_pairs: true,
        },
    }
}

fn apply_block(block: &Block, psi: &QuantumState) -> QuantumState {
    let lattice = psi.lattice();
    let mut amp = psi.amplitudes().to_vec();
    let m = block.m;
    if block.on_bond_pairs {
        // Pairs (e_{l-1}, g_l) live at slots (2l-1, 2l).
        for l in 1..lattice.cells {
            let (i, j) = (2 * l - 1, 2 * l);
            let (a, b) = (amp[i], amp[j]);
            amp[i] = m[0][0] * a + m[0][1] * b;
            amp[j] = m[1][0] * a + m[1][1] * b;
        }
    } else {
        // On-site pairs (g_l, e_l) at slots (2l, 2l+1).
        for l in 0..lattice.cells {
            let (i, j) = (2 * l, 2 * l + 1);
            let (a, b) = (amp[i], amp[j]);
            amp[i] = m[0][0] * a + m[0][1] * b;
            amp[j] = m[1][0] * a + m[1][1] * b;
        }
    }
    QuantumState::from_amplitudes_unchecked(lattice, amp)
}

/// Applies an ideal pulse.
pub fn apply_pulse(pulse: MeasurementPulse, psi: &QuantumState) -> QuantumState {
    apply_block(&pulse_block(pulse), psi)
}

/// Applies the inverse of an ideal pulse.
pub fn apply_pulse_adjoint(pulse: MeasurementPulse, psi: &QuantumState) -> QuantumState {
    let b = pulse_block(pulse);
    let adj = Block {
        m: [
            [b.m[0][0].conj(), b.m[1][0].conj()],
            [b.m[0][1].conj(), b.m[1][1].conj()],
        ],
        on_bond_pairs: b.on_bond_pairs,
    };
    apply_block(&adj, psi)
}

/// How to realize the bond superposition (|l_0-1, e> + |l_0, g>) / sqrt2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BondPreparation {
    /// Ideal phase-jumped sideband pi/2 pulse; exact and instantaneous.
    ExactPulse,
    /// Half-gap sweep delta: G -> 0 while the sideband coupling ramps
    /// 0 -> G, riding the upper dressed state; `cycles` counts coupling
    /// periods 2 pi / G spent on the sweep.
    AdiabaticRamp { gap: f64, cycles: f64 },
}

impl Default for BondPreparation {
    fn default() -> Self {
        BondPreparation::ExactPulse
    }
}

/// Prepares (|l_0-1, e> + |l_0, g>)/sqrt2 up to global phase. Fails when l_0
/// is not an interior site.
pub fn prepare_bond_superposition(
    lattice: LatticeParams,
    l_0: usize,
    method: BondPreparation,
) -> Result<QuantumState> {
    if l_0 == 0 || l_0 >= lattice.cells {
        return Err(CoreError::InvalidParameter(format!(
            "bond preparation needs 1 <= l_0 < {}, got {l_0}",
            lattice.cells
        )));
    }
    let start = localized_state(lattice, l_0, Level::Ground)?;
    match method {
        BondPreparation::ExactPulse => Ok(apply_pulse(MeasurementPulse::M2, &start)),
        BondPreparation::AdiabaticRamp { gap, cycles } => {
            if !(gap > 0.0) || !(cycles > 0.0) {
                return Err(CoreError::InvalidParameter(
                    "adiabatic ramp needs positive gap and cycle count".into(),
                ));
            }
            let duration = cycles * 2.0 * std::f64::consts::PI / gap;
            let schedule = Schedule::new(
                move |t| {
                    let s = t / duration;
                    let v = s - (2.0 * std::f64::consts::PI * s).sin()
                        / (2.0 * std::f64::consts::PI);
                    let angle = 0.5 * std::f64::consts::PI * v;
                    RmParameters::new(0.0, gap * angle.sin(), gap * angle.cos(), 0.0)
                },
                0.0,
                duration,
            )?;
            let opts = EvolutionOptions::for_max_coupling(gap).without_edge_guard();
            evolve_schedule(&schedule, &opts, &start)
        }
    }
}
