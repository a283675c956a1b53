//! Simulation library for a two-level atom array with carrier and sideband
//! couplings forming a tilted Rice-Mele chain: band analytics, unitary time
//! evolution, spectroscopy protocols, matter-wave interferometers and static
//! drive-noise ensembles.

pub mod analytics;
pub mod error;
pub mod evolve;
pub mod interferometer;
pub mod model;
pub mod noise;
pub mod spectroscopy;
pub mod state;

pub use analytics::{
    analytic_iy, analytic_mean_displacement, band_data, delta_response, s_function, winding_number,
    winding_number_on_grid, zak_phase, BandData, Winding,
};
pub use error::{CoreError, Result};
pub use evolve::{
    apply_pulse, apply_pulse_adjoint, evolve_const, evolve_schedule, evolve_schedule_adjoint,
    evolve_time_dependent, prepare_bond_superposition, BondPreparation, EvolutionOptions,
    MeasurementPulse, Propagator, Schedule,
};
pub use interferometer::{
    ideal_phase_mpp, ideal_phase_tpp, recovery_fidelity_experiment, run_mpp, run_protocol,
    run_tpp, single_cycle_transport, MppSpec, MwiOutcome, MwiProtocol, MwiSample, PulseMode,
    PumpCycle, StarkParams, TppSpec,
};
pub use model::{
    ac_stark_shift, bessel_j, build_counterrotating_hamiltonian, build_rm_hamiltonian,
    derive_effective_drives, ws_coupling_matrix, BareDrives, CounterRotatingTone, EffectiveDrives,
    Hamiltonian, LatticeParams, RmParameters, Tone,
};
pub use noise::{
    clock_sensitivity, ensemble_run, median_and_interval, sample_realization,
    statistical_noise_sigma2, EnsembleResult, NoiseChannel, NoiseRealization, NoiseSpec,
    StatNoiseReport,
};
pub use spectroscopy::{
    rabi_half_max_detuning, rabi_lineshape, rabi_operating_point, run_alternative_ssh,
    run_md_protocol, run_one_step_protocol, run_ssh_clock, solve_resonance, MdTrace, RabiSpec,
    ResonanceProbe, SshClockSpec,
};
pub use state::{
    fidelity, localized_state, measure, Level, ObservableSet, QuantumState,
};
