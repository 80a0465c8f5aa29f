//! Remote creation of quantum correlations through an engineered XY spin chain.
//!
//! A three-node sender prepares a one-excitation pure state, the chain evolves
//! it under a nearest-neighbour XY Hamiltonian whose couplings interpolate
//! between the homogeneous chain and the perfect-transfer (Ekert) profile, and
//! the two-node receiver ends up in an X-shaped density matrix. The crate
//! computes two correlation measures of that receiver state:
//!
//! - `Q_ext`, the discord between the receiver and the rest of the chain
//!   (equal to the entanglement entropy, the global state being pure);
//! - `Q_R`, the discord between the two receiver qubits.
//!
//! Modules, bottom-up:
//!
//! - [`chain`]: coupling profile, one-excitation Hamiltonian, spectral
//!   decomposition and exact transition amplitudes.
//! - [`correlations`]: sender/receiver states and both discords, including a
//!   measurement-minimisation reference for `Q_R`.
//! - [`optimizer`]: first maximum of the transfer probability in time, sweeps
//!   over the inhomogeneity, exponential fits and scaling exponents.
//! - [`sweep`]: maps of the control-parameter square onto the `(Q_ext, Q_R)`
//!   plane with coverage accounting.
//! - [`io`] and [`cli`]: CSV/JSON emission and the command-line front end.

pub mod chain;
pub mod cli;
pub mod correlations;
pub mod error;
pub mod io;
pub mod optimizer;
pub mod sweep;

pub use chain::{
    amplitudes, coupling_profile, hamiltonian_matrix, spectral_decomposition, AmplitudeMatrix,
    ChainSpec, CouplingProfile, SpectralDecomposition,
};
pub use correlations::{
    discord_curves, q_ext, q_r_closed_form, q_r_measurement_oracle, receiver_state, sender_state,
    CurveRow, DiscordPair, OracleDiscord, ReceiverState, SenderState,
};
pub use error::{Error, Result};
pub use optimizer::{
    find_first_maximum, fit_exponential, limiting_curve, phi_sweep, scaling_exponent,
    transfer_probability, FitResult, ScalingResult, TimeOptimum,
};
pub use sweep::{
    coverage, run_map_experiment, sweep, CoverageReport, MapExperiment, SubDomain, SweepPoint,
};
