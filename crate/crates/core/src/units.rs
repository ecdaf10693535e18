//! Conversions between laboratory units (GHz, MHz, ns) and the internal
//! convention: angular frequencies in rad/s, rates in 1/s, times in s.
//!
//! Conversion happens only at ingestion and reporting boundaries; every
//! struct in this crate stores internal units.

use std::f64::consts::TAU;

pub const NS: f64 = 1e-9;
pub const US: f64 = 1e-6;

/// Cyclic frequency in GHz to angular frequency.
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}

/// Cyclic frequency in MHz to angular frequency.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Angular frequency to cyclic MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU / 1e6
}

/// Angular frequency to cyclic GHz.
pub fn to_ghz(omega: f64) -> f64 {
    omega / TAU / 1e9
}

/// Rate in 1/s from a lifetime in ns.
pub fn per_ns(lifetime_ns: f64) -> f64 {
    1.0 / (lifetime_ns * NS)
}
