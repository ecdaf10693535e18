//! Parametric flux-modulation reset of tunable transmons.
//!
//! The crate is organized in layers:
//!
//! * [`device`], [`drive`] and [`fourier`]: transmon dispersion, flux waveforms
//!   and the harmonic content of the modulated qubit frequency.
//! * [`analytics`]: closed-form sideband theory, the non-Hermitian two-level
//!   model, rate equations and fit models.
//! * [`engine`]: a Lindblad master-equation integrator for the qubit coupled
//!   to a truncated resonator.
//! * [`experiments`]: scan maps, time traces and repeated-reset drivers built
//!   on the engine.
//!
//! Internal units are rad/s for angular frequencies, 1/s for rates and seconds
//! for times; see [`units`].

pub mod analytics;
pub mod device;
pub mod drive;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod special;
pub mod units;

pub use device::{CouplingSpec, DeviceSpec, FrequencyConvention, ResonatorSpec, ThermalSpec, TransmonSpec};
pub use drive::{FilterKind, FluxDrive, OutputFilter, Tone, Waveform};
pub use error::{Error, Result};
pub use fourier::{fourier_expand, fourier_expand_on, AnalysisGrid, SidebandDecomposition};
