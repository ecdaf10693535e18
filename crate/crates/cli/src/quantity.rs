//! Dimensioned configuration values such as `"5.784 GHz"` or `"50 ns"`.
//!
//! Values are converted to the internal convention at parse time: angular
//! frequencies in rad/s, cyclic frequencies in Hz, rates in 1/s, times in s,
//! flux in Φ₀ and angles in rad. Serialization writes the internal unit so
//! that a parse of the output reproduces the value exactly.

use std::f64::consts::TAU;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Qubit, resonator and modulation frequencies; cyclic units gain 2π.
    AngularFrequency,
    /// Sample rates and filter corners, kept cyclic.
    CyclicFrequency,
    /// Decay rates. A time unit gives the lifetime, so `"50 ns"` is 1/(50 ns).
    Rate,
    Time,
    Flux,
    Angle,
}

impl Dimension {
    fn name(&self) -> &'static str {
        match self {
            Dimension::AngularFrequency | Dimension::CyclicFrequency => "a frequency",
            Dimension::Rate => "a rate",
            Dimension::Time => "a time",
            Dimension::Flux => "a flux",
            Dimension::Angle => "an angle",
        }
    }

    fn accepted(&self) -> &'static str {
        match self {
            Dimension::AngularFrequency => "Hz, kHz, MHz, GHz, rad/s",
            Dimension::CyclicFrequency => "Hz, kHz, MHz, GHz",
            Dimension::Rate => "1/s, 1/us, 1/ns, Hz, kHz, MHz, or a lifetime in s, ms, us, ns",
            Dimension::Time => "s, ms, us, ns",
            Dimension::Flux => "Phi0",
            Dimension::Angle => "rad, deg",
        }
    }

    /// Unit written on serialization, equal to the internal unit.
    pub fn canonical_unit(&self) -> &'static str {
        match self {
            Dimension::AngularFrequency => "rad/s",
            Dimension::CyclicFrequency => "Hz",
            Dimension::Rate => "1/s",
            Dimension::Time => "s",
            Dimension::Flux => "Phi0",
            Dimension::Angle => "rad",
        }
    }
}

fn hertz_scale(unit: &str) -> Option<f64> {
    match unit {
        "Hz" => Some(1.0),
        "kHz" => Some(1e3),
        "MHz" => Some(1e6),
        "GHz" => Some(1e9),
        _ => None,
    }
}

fn second_scale(unit: &str) -> Option<f64> {
    match unit {
        "s" => Some(1.0),
        "ms" => Some(1e-3),
        "us" | "µs" | "μs" => Some(1e-6),
        "ns" => Some(1e-9),
        _ => None,
    }
}

fn convert(value: f64, unit: &str, dim: Dimension) -> Option<f64> {
    match dim {
        Dimension::AngularFrequency => match unit {
            "rad/s" => Some(value),
            _ => hertz_scale(unit).map(|s| TAU * value * s),
        },
        Dimension::CyclicFrequency => hertz_scale(unit).map(|s| value * s),
        Dimension::Rate => {
            if let Some(per) = unit.strip_prefix("1/").or_else(|| unit.strip_prefix('/')) {
                second_scale(per).map(|s| value / s)
            } else if let Some(s) = hertz_scale(unit) {
                Some(value * s)
            } else {
                second_scale(unit).map(|s| 1.0 / (value * s))
            }
        }
        Dimension::Time => second_scale(unit).map(|s| value * s),
        Dimension::Flux => matches!(unit, "Phi0" | "Φ0" | "Φ₀").then_some(value),
        Dimension::Angle => match unit {
            "rad" => Some(value),
            "deg" => Some(value.to_radians()),
            _ => None,
        },
    }
}

/// Parses `"<number> <unit>"` for the configuration key `field`.
pub fn parse(field: &str, text: &str, dim: Dimension) -> Result<f64, CliError> {
    let invalid = |what: String| CliError::invalid(field, what);
    let mut parts = text.split_whitespace();
    let (number, unit) = match (parts.next(), parts.next(), parts.next()) {
        (Some(n), Some(u), None) => (n, u),
        _ => {
            return Err(invalid(format!(
                "expected \"<value> <unit>\" with {} unit ({}), got \"{text}\"",
                dim.name(),
                dim.accepted()
            )))
        }
    };
    let value: f64 = number
        .parse()
        .map_err(|_| invalid(format!("\"{number}\" is not a number")))?;
    if !value.is_finite() {
        return Err(invalid(format!("\"{number}\" is not finite")));
    }
    if dim == Dimension::Rate && second_scale(unit).is_some() && !(value > 0.0) {
        return Err(invalid("a lifetime must be positive".to_string()));
    }
    convert(value, unit, dim).ok_or_else(|| {
        invalid(format!(
            "\"{unit}\" is not {} unit; expected one of {}",
            dim.name(),
            dim.accepted()
        ))
    })
}

/// Canonical text for an internal value.
pub fn format(value: f64, dim: Dimension) -> String {
    match dim {
        Dimension::Flux | Dimension::Angle => format!("{value} {}", dim.canonical_unit()),
        _ => format!("{value:e} {}", dim.canonical_unit()),
    }
}
