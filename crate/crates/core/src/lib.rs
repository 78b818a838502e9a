//! Worst-case frequency nadir of linearized power networks.
//!
//! The crate is organized bottom-up:
//!
//! - [`netmodel`]: bus units, the network Laplacian, JSON ingestion and
//!   validation, random test networks.
//! - [`modal`]: scaled-Laplacian eigenbasis and closed-form modal responses.
//! - [`nadir`]: dual norms, the bus-by-time worst-case table, and the
//!   disturbance that attains it.
//! - [`simulate`]: an independent RK4 integrator of the swing dynamics used
//!   to check the analytic path, plus norm-ball samplers.

pub use nalgebra;

pub mod error;
pub mod modal;
pub mod nadir;
pub mod netmodel;
pub mod simulate;

pub use error::{Error, Result};
pub use modal::{
    coi_frequency, decompose_disturbance, eigendecompose, frequency_response, mode_kinetics, scaled_laplacian,
    ModalBasis, ModeKinetics, Regime, Trajectory,
};
pub use nadir::{
    dual_norm, heterogeneous_asymptote_check, objective_value, recover_worst_disturbance, search_basis,
    strong_connectivity_check, worst_case_search, DisturbanceSpec, NadirResult, NadirTable, NormKind, SearchOptions,
};
pub use netmodel::{
    build_laplacian_from_lines, generate_random_network, load_network, validate_network, BusParams, LineData,
    NetworkModel, RandomNetworkConfig, Topology, ValidationReport,
};
pub use simulate::{
    dominance_report, per_bus_nadir, sample_norm_ball, simulate_step_response, DominanceReport, SampleSet, SimConfig,
    SwingIntegrator,
};
