//! Composite qubit ⊗ resonator space, Hamiltonian and collapse operators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device::{DeviceSpec, TransmonSpec};
use crate::drive::{FluxDrive, Waveform};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_DIMENSION: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    #[default]
    ResonatorRotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertConfig {
    pub qubit_levels: usize,
    pub fock_cutoff: usize,
    pub frame: Frame,
    pub max_dimension: usize,
}

impl Default for HilbertConfig {
    fn default() -> Self {
        HilbertConfig::new(2, 3)
    }
}

impl HilbertConfig {
    pub fn new(qubit_levels: usize, fock_cutoff: usize) -> Self {
        HilbertConfig {
            qubit_levels,
            fock_cutoff,
            frame: Frame::ResonatorRotating,
            max_dimension: DEFAULT_MAX_DIMENSION,
        }
    }

    pub fn with_frame(self, frame: Frame) -> Self {
        HilbertConfig { frame, ..self }
    }

    pub fn dimension(&self) -> usize {
        self.qubit_levels * self.fock_cutoff
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.qubit_levels) {
            return Err(Error::domain(format!(
                "qubit_levels must be 2 or 3, got {}",
                self.qubit_levels
            )));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::domain("fock_cutoff must be at least 2"));
        }
        if self.dimension() > self.max_dimension {
            return Err(Error::domain(format!(
                "Hilbert dimension {} exceeds the cap of {}",
                self.dimension(),
                self.max_dimension
            )));
        }
        Ok(())
    }

    /// Basis index of |q⟩ ⊗ |n⟩.
    #[inline]
    pub fn index(&self, q: usize, n: usize) -> usize {
        q * self.fock_cutoff + n
    }

    /// (qubit level, photon number) of a basis index.
    #[inline]
    pub fn levels_of(&self, i: usize) -> (usize, usize) {
        (i / self.fock_cutoff, i % self.fock_cutoff)
    }
}

/// H(t) = H_static + ω_q(Φ(t))·N_q, where N_q counts qubit excitations.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    hilbert: HilbertConfig,
    static_part: DMatrix<Complex64>,
    transmon: TransmonSpec,
    waveform: Waveform,
    duration: f64,
    /// Frequency subtracted per qubit excitation by the frame.
    frame_offset: f64,
}

impl Hamiltonian {
    pub fn hilbert(&self) -> &HilbertConfig {
        &self.hilbert
    }

    pub fn static_part(&self) -> &DMatrix<Complex64> {
        &self.static_part
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Same Hamiltonian with the qubit–resonator exchange removed.
    pub fn decoupled(&self) -> Hamiltonian {
        let mut out = self.clone();
        out.static_part = DMatrix::from_diagonal(&self.static_part.diagonal());
        out
    }

    /// Coefficient multiplying N_q at time t, frame offset included.
    #[inline]
    pub fn qubit_term(&self, t: f64) -> f64 {
        self.transmon.qubit_frequency_unchecked(self.waveform.flux(t)) - self.frame_offset
    }

    /// Bare qubit frequency ω_q(Φ(t)).
    pub fn qubit_frequency(&self, t: f64) -> f64 {
        self.transmon.qubit_frequency_unchecked(self.waveform.flux(t))
    }

    /// Full matrix H(t).
    pub fn at(&self, t: f64) -> DMatrix<Complex64> {
        let mut h = self.static_part.clone();
        let w = self.qubit_term(t);
        for i in 0..self.hilbert.dimension() {
            let (q, _) = self.hilbert.levels_of(i);
            h[(i, i)] += Complex64::new(q as f64 * w, 0.0);
        }
        h
    }
}

/// Builds the flux-modulated Jaynes-Cummings Hamiltonian. Device
/// frequencies given in the dressed convention are converted to bare
/// Hamiltonian parameters first.
pub fn build_hamiltonian(device: &DeviceSpec, drive: &FluxDrive, hilbert: HilbertConfig) -> Result<Hamiltonian> {
    hilbert.validate()?;
    device.validate()?;
    drive.validate()?;
    drive.check_window(&device.transmon)?;
    let bare = device.to_bare();
    let d = hilbert.dimension();
    let omega_r = bare.resonator.omega_r;
    let eta = bare.transmon.eta;
    let g = bare.coupling.g_bar;
    let frame_offset = match hilbert.frame {
        Frame::Lab => 0.0,
        Frame::ResonatorRotating => omega_r,
    };

    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for q in 0..hilbert.qubit_levels {
        let anharm = (q * q.saturating_sub(1)) as f64 / 2.0 * eta;
        for n in 0..hilbert.fock_cutoff {
            let i = hilbert.index(q, n);
            let resonator = match hilbert.frame {
                Frame::Lab => n as f64 * omega_r,
                Frame::ResonatorRotating => 0.0,
            };
            h[(i, i)] = Complex64::new(anharm + resonator, 0.0);
        }
    }
    // g Σ_q √(q+1) (|q⟩⟨q+1| ⊗ a† + h.c.)
    for q in 0..hilbert.qubit_levels - 1 {
        let amp = g * ((q + 1) as f64).sqrt();
        for n in 0..hilbert.fock_cutoff - 1 {
            let lower = hilbert.index(q, n + 1);
            let upper = hilbert.index(q + 1, n);
            let coupling = amp * ((n + 1) as f64).sqrt();
            h[(lower, upper)] = Complex64::new(coupling, 0.0);
            h[(upper, lower)] = Complex64::new(coupling, 0.0);
        }
    }

    Ok(Hamiltonian {
        hilbert,
        static_part: h,
        transmon: bare.transmon,
        waveform: drive.compile(),
        duration: drive.duration,
        frame_offset,
    })
}

/// Dissipation channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseSet {
    pub kappa_r: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    /// Pure dephasing rate of the g-e coherence.
    pub gamma_phi: f64,
}

impl CollapseSet {
    pub fn from_device(device: &DeviceSpec) -> Self {
        CollapseSet {
            kappa_r: device.resonator.kappa_r,
            gamma_down: device.thermal.gamma_down,
            gamma_up: device.thermal.gamma_up,
            gamma_phi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa_r, self.gamma_down, self.gamma_up, self.gamma_phi];
        if all.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::domain("collapse rates must be non-negative"));
        }
        Ok(())
    }

    /// Collapse operators as sparse (row, col, value) lists.
    pub fn operators(&self, hilbert: &HilbertConfig) -> Vec<Vec<(usize, usize, Complex64)>> {
        let mut ops = Vec::new();
        let (levels, fock) = (hilbert.qubit_levels, hilbert.fock_cutoff);
        let mut push = |rate: f64, entries: Vec<(usize, usize, f64)>| {
            if rate > 0.0 {
                let s = rate.sqrt();
                ops.push(
                    entries
                        .into_iter()
                        .map(|(i, j, v)| (i, j, Complex64::new(s * v, 0.0)))
                        .collect(),
                );
            }
        };
        // a
        let mut a = Vec::new();
        for q in 0..levels {
            for n in 1..fock {
                a.push((hilbert.index(q, n - 1), hilbert.index(q, n), (n as f64).sqrt()));
            }
        }
        push(self.kappa_r, a);
        // Qubit ladder b with ⟨q−1|b|q⟩ = √q.
        let mut down = Vec::new();
        let mut up = Vec::new();
        for q in 1..levels {
            for n in 0..fock {
                let v = (q as f64).sqrt();
                down.push((hilbert.index(q - 1, n), hilbert.index(q, n), v));
                up.push((hilbert.index(q, n), hilbert.index(q - 1, n), v));
            }
        }
        push(self.gamma_down, down);
        push(self.gamma_up, up);
        // √(2Γ_φ) N_q
        let mut number = Vec::new();
        for q in 1..levels {
            for n in 0..fock {
                let i = hilbert.index(q, n);
                number.push((i, i, q as f64));
            }
        }
        push(2.0 * self.gamma_phi, number);
        ops
    }
}
