//! Lindblad master-equation engine for the transmon–resonator system.

pub mod dop853;
pub mod evolve;
pub mod liouvillian;
pub mod model;
pub mod state;

pub use dop853::{Dop853, Stats, StepControl};
pub use evolve::{
    dressed_qubit_populations, evolve, populations, EngineSettings, InvariantReport, Observable, Trajectory,
};
pub use liouvillian::Liouvillian;
pub use model::{build_hamiltonian, CollapseSet, Frame, Hamiltonian, HilbertConfig, DEFAULT_MAX_DIMENSION};
pub use state::{DensityMatrix, HERMITICITY_TOLERANCE, POSITIVITY_TOLERANCE, TRACE_TOLERANCE};
