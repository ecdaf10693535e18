//! Benchmark fixtures shared by the criterion targets.

use preset_core::units::mhz;
use preset_core::{DeviceSpec, FluxDrive, OutputFilter, Tone};

/// Q1 with a single sweet-spot tone near the first red sideband.
pub fn fixture(amplitude: f64, duration: f64) -> (DeviceSpec, FluxDrive) {
    let drive = FluxDrive::single(0.0, Tone::cosine(amplitude, mhz(340.0)), duration, OutputFilter::none());
    (DeviceSpec::q1(), drive)
}
