//! Experiment descriptions: drive templates with swept placeholders, axes and
//! initial states.

use serde::{Deserialize, Serialize};

use crate::device::DeviceSpec;
use crate::drive::{FluxDrive, OutputFilter, Tone};
use crate::engine::{DensityMatrix, EngineSettings, HilbertConfig};
use crate::error::{Error, Result};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SingleToneScan,
    TwoToneScan,
    TimeTrace,
    TwoToneTrace,
    RepeatedReset,
    Rethermalization,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SingleToneScan => "single_tone_scan",
            ExperimentKind::TwoToneScan => "two_tone_scan",
            ExperimentKind::TimeTrace => "time_trace",
            ExperimentKind::TwoToneTrace => "two_tone_trace",
            ExperimentKind::RepeatedReset => "repeated_reset",
            ExperimentKind::Rethermalization => "rethermalization",
        }
    }

    pub fn is_scan(&self) -> bool {
        matches!(self, ExperimentKind::SingleToneScan | ExperimentKind::TwoToneScan)
    }
}

/// A drive parameter that is either fixed or taken from a scan axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Fixed(f64),
    X,
    Y,
}

impl Param {
    fn resolve(&self, x: Option<f64>, y: Option<f64>) -> Result<f64> {
        match self {
            Param::Fixed(v) => Ok(*v),
            Param::X => x.ok_or_else(|| Error::config("drive uses the x axis but none is given")),
            Param::Y => y.ok_or_else(|| Error::config("drive uses the y axis but none is given")),
        }
    }

    pub fn is_swept(&self) -> bool {
        !matches!(self, Param::Fixed(_))
    }
}

/// Φ(t) tone `amplitude·cos(omega t + phase)` with possibly swept fields.
/// `omega` is angular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneTemplate {
    pub amplitude: Param,
    pub omega: Param,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveTemplate {
    pub park_flux: f64,
    pub tones: Vec<ToneTemplate>,
    pub duration: f64,
    pub filter: OutputFilter,
}

impl DriveTemplate {
    pub fn fixed(drive: &FluxDrive) -> Self {
        DriveTemplate {
            park_flux: drive.park_flux,
            tones: drive
                .tones
                .iter()
                .map(|t| ToneTemplate {
                    amplitude: Param::Fixed(t.amplitude),
                    omega: Param::Fixed(t.omega),
                    phase: t.phase,
                })
                .collect(),
            duration: drive.duration,
            filter: drive.filter,
        }
    }

    /// Number of distinct axes the template depends on.
    pub fn placeholders(&self) -> usize {
        let uses = |p: Param| self.tones.iter().any(|t| t.amplitude == p || t.omega == p);
        uses(Param::X) as usize + uses(Param::Y) as usize
    }

    pub fn swept_fields(&self) -> usize {
        self.tones
            .iter()
            .map(|t| t.amplitude.is_swept() as usize + t.omega.is_swept() as usize)
            .sum()
    }

    pub fn instantiate(&self, x: Option<f64>, y: Option<f64>) -> Result<FluxDrive> {
        let tones = self
            .tones
            .iter()
            .map(|t| {
                Ok(Tone {
                    amplitude: t.amplitude.resolve(x, y)?,
                    omega: t.omega.resolve(x, y)?,
                    phase: t.phase,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FluxDrive {
            park_flux: self.park_flux,
            tones,
            duration: self.duration,
            filter: self.filter,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisUnit {
    /// Flux in units of Φ₀.
    FluxQuantum,
    /// Angular frequency, displayed as cyclic MHz.
    Megahertz,
}

impl AxisUnit {
    pub fn label(&self) -> &'static str {
        match self {
            AxisUnit::FluxQuantum => "Phi0",
            AxisUnit::Megahertz => "MHz",
        }
    }

    pub fn to_display(&self, v: f64) -> f64 {
        match self {
            AxisUnit::FluxQuantum => v,
            AxisUnit::Megahertz => units::to_mhz(v),
        }
    }

    pub fn from_display(&self, v: f64) -> f64 {
        match self {
            AxisUnit::FluxQuantum => v,
            AxisUnit::Megahertz => units::mhz(v),
        }
    }
}

/// Scan axis; `values` are in internal units (Φ₀ or rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub label: String,
    pub unit: AxisUnit,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(label: impl Into<String>, unit: AxisUnit, values: Vec<f64>) -> Self {
        Axis {
            label: label.into(),
            unit,
            values,
        }
    }

    /// `count` evenly spaced points from `start` to `stop` inclusive, internal units.
    pub fn linear(label: impl Into<String>, unit: AxisUnit, start: f64, stop: f64, count: usize) -> Self {
        let values = match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|i| match i {
                    i if i + 1 == count => stop,
                    i => start + (stop - start) * i as f64 / (count - 1) as f64,
                })
                .collect(),
        };
        Axis::new(label, unit, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config(format!("axis '{}' has no points", self.label)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("axis '{}' has non-finite points", self.label)));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config(format!(
                "axis '{}' must be strictly increasing",
                self.label
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Qubit level with the resonator in vacuum.
    Level(usize),
    /// Diagonal qubit populations with the resonator in vacuum.
    Populations(Vec<f64>),
}

impl InitialState {
    pub fn prepare(&self, hilbert: HilbertConfig) -> Result<DensityMatrix> {
        match self {
            InitialState::Level(q) => DensityMatrix::basis(hilbert, *q, 0),
            InitialState::Populations(p) => DensityMatrix::qubit_mixture(hilbert, p),
        }
    }

    pub fn validate(&self, hilbert: &HilbertConfig) -> Result<()> {
        self.prepare(*hilbert)
            .map(|_| ())
            .map_err(|e| Error::config(format!("initial state: {e}")))
    }
}

/// Everything a single engine run needs besides the drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetup {
    pub device: DeviceSpec,
    pub hilbert: HilbertConfig,
    pub engine: EngineSettings,
    pub initial: InitialState,
}

impl RunSetup {
    pub fn new(device: DeviceSpec, hilbert: HilbertConfig, initial: InitialState) -> Self {
        RunSetup {
            device,
            hilbert,
            engine: EngineSettings::default(),
            initial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.hilbert.validate()?;
        self.engine.validate()?;
        self.initial.validate(&self.hilbert)
    }
}
