//! Entanglement and quantum-state geometry diagnostics for layered
//! variational circuits on the transverse-field Ising chain.
//!
//! Two interchangeable simulators ([`StateVector`] and [`MpsState`]) run
//! hardware-efficient and Hamiltonian-variational circuits; per-layer
//! entanglement entropy, geodesic distance to the exact ground space and
//! the geometric phase fraction are collected over seeded trial ensembles.

pub mod ansatz;
pub mod backend;
pub mod error;
pub mod experiment;
pub mod gates;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod state;
pub mod stats;
pub mod vqe;

pub use ansatz::{build, AnsatzKind, Circuit, GateKind, GateOp};
pub use backend::{Backend, BackendKind, QuantumState, SimState};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentResults, LayerRecord, Stage};
pub use model::{ground_space, tfim_terms, Boundary, Expectation, GroundSpace, PauliTermList, TfimParams};
pub use mps::{MpsConfig, MpsState};
pub use state::{LogBase, StateVector};

pub use num_complex::Complex64 as C64;

/// Environment variable that overrides the trial pool size.
pub const THREADS_ENV: &str = "ENTGEO_THREADS";
