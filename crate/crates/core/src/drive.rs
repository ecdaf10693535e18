//! Flux drive synthesis: parking flux plus cosine tones, seen through the
//! AWG output filter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::device::TransmonSpec;
use crate::error::{Error, Result};

/// One modulation tone `amplitude·cos(omega·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    /// Flux amplitude in Φ₀.
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl Tone {
    pub fn cosine(amplitude: f64, omega: f64) -> Self {
        Tone {
            amplitude,
            omega,
            phase: 0.0,
        }
    }

    /// `amplitude·sin(omega·t)`.
    pub fn sine(amplitude: f64, omega: f64) -> Self {
        Tone {
            amplitude,
            omega,
            phase: -FRAC_PI_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) {
            return Err(Error::domain("tone amplitude must be non-negative"));
        }
        if !(self.omega > 0.0) {
            return Err(Error::domain("tone frequency must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    #[default]
    None,
    ZeroOrderHoldPlusPole,
}

/// AWG output chain: zero-order hold at `sample_rate` followed by a single
/// real pole at `pole_frequency`. Both in Hz (cyclic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputFilter {
    pub kind: FilterKind,
    pub sample_rate: f64,
    pub pole_frequency: f64,
}

impl Default for OutputFilter {
    fn default() -> Self {
        OutputFilter::none()
    }
}

impl OutputFilter {
    pub fn none() -> Self {
        OutputFilter {
            kind: FilterKind::None,
            sample_rate: 2e9,
            pole_frequency: 800e6,
        }
    }

    /// 2 GS/s hold with an 800 MHz pole.
    pub fn awg_default() -> Self {
        OutputFilter {
            kind: FilterKind::ZeroOrderHoldPlusPole,
            ..OutputFilter::none()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != FilterKind::None && !(self.sample_rate > 0.0 && self.pole_frequency > 0.0) {
            return Err(Error::domain("filter sample_rate and pole_frequency must be positive"));
        }
        Ok(())
    }

    /// Complex gain at angular frequency `omega`.
    pub fn response(&self, omega: f64) -> Complex64 {
        match self.kind {
            FilterKind::None => Complex64::new(1.0, 0.0),
            FilterKind::ZeroOrderHoldPlusPole => {
                let f = omega / TAU;
                let x = f / self.sample_rate;
                let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
                let hold = Complex64::from_polar(sinc, -PI * x);
                let pole = Complex64::new(1.0, f / self.pole_frequency).inv();
                hold * pole
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxDrive {
    pub park_flux: f64,
    pub tones: Vec<Tone>,
    /// Pulse length in seconds.
    pub duration: f64,
    pub filter: OutputFilter,
}

impl FluxDrive {
    pub fn idle(park_flux: f64, duration: f64) -> Self {
        FluxDrive {
            park_flux,
            tones: Vec::new(),
            duration,
            filter: OutputFilter::none(),
        }
    }

    pub fn single(park_flux: f64, tone: Tone, duration: f64, filter: OutputFilter) -> Self {
        FluxDrive {
            park_flux,
            tones: vec![tone],
            duration,
            filter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::domain("drive duration must be positive"));
        }
        self.filter.validate()?;
        self.tones.iter().try_for_each(Tone::validate)
    }

    /// Tones as they reach the chip, amplitude and phase adjusted by the filter.
    pub fn delivered_tones(&self) -> Vec<Tone> {
        self.tones
            .iter()
            .map(|t| {
                let h = self.filter.response(t.omega);
                Tone {
                    amplitude: t.amplitude * h.norm(),
                    omega: t.omega,
                    phase: t.phase + h.arg(),
                }
            })
            .collect()
    }

    /// Upper bound on |Φ(t)|.
    pub fn max_excursion(&self) -> f64 {
        self.park_flux.abs() + self.delivered_tones().iter().map(|t| t.amplitude).sum::<f64>()
    }

    /// Rejects drives that would leave the transmon's trusted flux window.
    pub fn check_window(&self, transmon: &TransmonSpec) -> Result<()> {
        let excursion = self.max_excursion();
        if excursion > transmon.flux_validity {
            return Err(Error::domain(format!(
                "flux excursion {excursion:.4} Φ₀ exceeds the validity window {} Φ₀",
                transmon.flux_validity
            )));
        }
        Ok(())
    }

    pub fn compile(&self) -> Waveform {
        Waveform {
            park: self.park_flux,
            tones: self.delivered_tones(),
        }
    }

    /// Flux at time `t` (0 ≤ t ≤ duration).
    pub fn flux_waveform(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.duration) {
            return Err(Error::domain(format!(
                "t = {t:e} s outside the pulse [0, {:e}] s",
                self.duration
            )));
        }
        Ok(self.compile().flux(t))
    }
}

/// Pre-filtered waveform for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    park: f64,
    tones: Vec<Tone>,
}

impl Waveform {
    pub fn new(park: f64, tones: Vec<Tone>) -> Self {
        Waveform { park, tones }
    }

    #[inline]
    pub fn flux(&self, t: f64) -> f64 {
        self.park
            + self
                .tones
                .iter()
                .map(|tone| tone.amplitude * (tone.omega * t + tone.phase).cos())
                .sum::<f64>()
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    pub fn park(&self) -> f64 {
        self.park
    }
}
