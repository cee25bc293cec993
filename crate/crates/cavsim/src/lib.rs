//! Deterministic state-vector simulator and analysis toolkit for hybrid
//! photon-spin quantum gates (CNOT, Toffoli, Fredkin) mediated by quantum
//! dots in double-sided optical microcavities.
//!
//! The crate is organized around the pipeline:
//!
//! * [`state`] — sparse complex-amplitude states over labeled basis states
//!   (photon polarization x path mode x propagation direction x electron
//!   spins).
//! * [`elements`] — unitary maps for the passive optics (PBS, wave plates,
//!   phase shifters, switches) and spin rotations.
//! * [`cavity`] — the dot-cavity scattering unit: coefficients, ideal and
//!   lossy transition rules, exciton dephasing.
//! * [`circuits`] — unrolled gate circuits with stage checkpoints, plus the
//!   executor.
//! * [`checkpoints`] — independent closed-form evaluators for every tagged
//!   intermediate state.
//! * [`analysis`] — closed-form and simulated fidelities/efficiencies,
//!   parameter sweeps, cross-validation.
//! * [`circfile`] — the line-oriented `.circ` circuit description format.

pub mod analysis;
pub mod cavity;
pub mod checkpoints;
pub mod circfile;
pub mod circuits;
pub mod elements;
pub mod state;

pub use analysis::{
    cross_validation_report, efficiency_closed, efficiency_simulated, fidelity_closed,
    fidelity_simulated, ideal_gate_matrix, matrix_distance, sweep, sweep_with_threads,
    SquareMatrix, SweepGrid, SweepResult,
};
pub use cavity::{
    dephasing_factor, resonant_coefficients, transmission_coefficient, CavityParams,
    CoeffMagnitudes, DephasingParams, ScatterCoefficients,
};
pub use checkpoints::{expected_checkpoint, verify_checkpoints, InputAmplitudes, TraceReport};
pub use circuits::{
    build_cnot, build_fredkin, build_toffoli, extract_gate_matrix, run_circuit, run_with_trace,
    CavityModel, CircuitSpec, GateKind,
};
pub use circfile::{emit_circuit, parse_circuit};
pub use state::{
    BasisLabel, Direction, HybridState, Mode, PhotonLabel, Polarization, Spin, SpinConfig, C64,
};
