//! Computational experiments built on the engine: scans, traces, repeated
//! reset and rethermalization, plus the calibration helpers they share.

pub mod calibration;
pub mod scan;
pub mod setup;
pub mod strips;
pub mod traces;

pub use calibration::{
    drive_for_coupling, effective_detuning, harmonic_order, regime_points, resonant_drive, rhombus_point,
    two_tone_drive, RegimePoint, ResonantDrive,
};
pub use scan::{run_scan, single_tone_scan, two_tone_scan, Cell, ScanGrid, ScanMetadata, ScanSpec};
pub use setup::{Axis, AxisUnit, DriveTemplate, ExperimentKind, InitialState, Param, RunSetup, ToneTemplate};
pub use strips::{detect_strips, OrderMatch, Strip, StripOptions, StripRow, DEFAULT_STRIP_THRESHOLD};
pub use traces::{
    closed_form_companion, repeated_reset, rethermalization, time_trace, two_tone_trace, uniform_times, CascadeFit,
    ClosedFormCompanion, Preparation, ResetSequence, RethermalizationResult, RethermalizationSpec, TraceResult,
    TraceSpec,
};
