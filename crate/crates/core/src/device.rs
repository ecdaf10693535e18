//! Static device parameters: transmon flux dispersion, readout resonator,
//! coupling and thermal rates.

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units;

/// Default trusted flux window, in units of the flux quantum.
pub const DEFAULT_FLUX_VALIDITY: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpec {
    /// Sweet-spot angular frequency.
    pub omega_max: f64,
    /// Anharmonicity (negative for transmons).
    pub eta: f64,
    /// Half-width of the flux window where the dispersion is trusted, in Φ₀.
    pub flux_validity: f64,
}

impl TransmonSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_max > 0.0) {
            return Err(Error::domain("transmon.omega_max must be positive"));
        }
        if !(self.eta < 0.0) {
            return Err(Error::domain("transmon.eta must be negative"));
        }
        if !(self.flux_validity > 0.0 && self.flux_validity <= 0.5) {
            return Err(Error::domain("transmon.flux_validity must lie in (0, 0.5]"));
        }
        Ok(())
    }

    pub fn check_flux(&self, flux: f64) -> Result<()> {
        if flux.is_finite() && flux.abs() <= self.flux_validity {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "flux {flux} Φ₀ outside the validity window [-{0}, {0}] Φ₀",
                self.flux_validity
            )))
        }
    }

    /// Symmetric-junction dispersion `(ω_max + |η|)·√|cos(πΦ)| − |η|`.
    pub fn qubit_frequency(&self, flux: f64) -> Result<f64> {
        self.check_flux(flux)?;
        Ok(self.qubit_frequency_unchecked(flux))
    }

    /// Dispersion without the window check, for inner loops whose flux
    /// excursion has been validated up front.
    #[inline]
    pub fn qubit_frequency_unchecked(&self, flux: f64) -> f64 {
        let scale = self.omega_max - self.eta;
        scale * (PI * flux).cos().abs().sqrt() + self.eta
    }

    /// Analytic derivative dω_q/dΦ (per Φ₀).
    pub fn qubit_frequency_slope(&self, flux: f64) -> Result<f64> {
        self.check_flux(flux)?;
        let scale = self.omega_max - self.eta;
        let c = (PI * flux).cos();
        Ok(-scale * PI * (PI * flux).sin() * c.signum() / (2.0 * c.abs().sqrt()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    pub omega_r: f64,
    pub kappa_r: f64,
    pub fock_cutoff: usize,
}

impl ResonatorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r > 0.0) {
            return Err(Error::domain("resonator.omega_r must be positive"));
        }
        if !(self.kappa_r > 0.0) {
            return Err(Error::domain("resonator.kappa_r must be positive"));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::domain("resonator.fock_cutoff must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub g_qr: f64,
    /// Coupling averaged over the modulation; held equal to `g_qr` by the engine.
    pub g_bar: f64,
}

impl CouplingSpec {
    pub fn new(g_qr: f64) -> Self {
        CouplingSpec { g_qr, g_bar: g_qr }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_qr > 0.0 && self.g_bar > 0.0) {
            return Err(Error::domain("coupling strengths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub gamma_up: f64,
    pub gamma_down: f64,
}

impl ThermalSpec {
    /// Rates reproducing an equilibrium excited population at a given 1/T₁.
    pub fn from_equilibrium(p_excited: f64, total_rate: f64) -> Self {
        let gamma_up = p_excited * total_rate;
        ThermalSpec {
            gamma_up,
            gamma_down: total_rate - gamma_up,
        }
    }

    pub fn t1(&self) -> f64 {
        1.0 / (self.gamma_up + self.gamma_down)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_up >= 0.0) {
            return Err(Error::domain("thermal.gamma_up must be non-negative"));
        }
        if !(self.gamma_down > 0.0) {
            return Err(Error::domain("thermal.gamma_down must be positive"));
        }
        Ok(())
    }
}

/// How the frequencies of a [`DeviceSpec`] are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyConvention {
    /// Hamiltonian parameters, used verbatim.
    Bare,
    /// Spectroscopic values (qubit at the sweet spot, resonator, anharmonicity)
    /// including the static qubit-resonator dressing.
    #[default]
    Dressed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub transmon: TransmonSpec,
    pub resonator: ResonatorSpec,
    pub coupling: CouplingSpec,
    pub thermal: ThermalSpec,
    pub convention: FrequencyConvention,
}

impl DeviceSpec {
    /// Qubit Q1 of the three-qubit device: sweet spot 5.784 GHz, resonator
    /// 6.441 GHz, g/2π = 78 MHz, 1/κ = 50 ns, η/2π = −254 MHz,
    /// 1/T₁ = 86.6 kHz with 2.38 % equilibrium excitation.
    pub fn q1() -> Self {
        DeviceSpec {
            transmon: TransmonSpec {
                omega_max: units::ghz(5.784),
                eta: units::mhz(-254.0),
                flux_validity: DEFAULT_FLUX_VALIDITY,
            },
            resonator: ResonatorSpec {
                omega_r: units::ghz(6.441),
                kappa_r: units::per_ns(50.0),
                fock_cutoff: 3,
            },
            coupling: CouplingSpec::new(units::mhz(78.0)),
            thermal: ThermalSpec::from_equilibrium(0.0238, 86.6e3),
            convention: FrequencyConvention::Dressed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.transmon.validate()?;
        self.resonator.validate()?;
        self.coupling.validate()?;
        self.thermal.validate()
    }

    /// Sweet-spot detuning ω_q − ω_r of the stored parameters.
    pub fn detuning(&self) -> f64 {
        self.transmon.omega_max - self.resonator.omega_r
    }

    pub fn without_thermal(mut self) -> Self {
        self.thermal.gamma_up = 0.0;
        self
    }

    /// Hamiltonian parameters for the engine. Dressed specs are inverted so that
    /// the static Jaynes-Cummings spectrum at the sweet spot reproduces the
    /// stored qubit frequency, resonator frequency and anharmonicity.
    pub fn to_bare(&self) -> DeviceSpec {
        if self.convention == FrequencyConvention::Bare {
            return *self;
        }
        let target = [self.transmon.omega_max, self.resonator.omega_r, self.transmon.eta];
        let g = self.coupling.g_qr;
        let mut bare = target;
        for _ in 0..100 {
            let dressed = dressed_levels(bare[0], bare[1], bare[2], g);
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                let d = target[i] - dressed[i];
                bare[i] += d;
                worst = worst.max(d.abs());
            }
            if worst < 1e-6 {
                break;
            }
        }
        let mut out = *self;
        out.transmon.omega_max = bare[0];
        out.resonator.omega_r = bare[1];
        out.transmon.eta = bare[2];
        out.convention = FrequencyConvention::Bare;
        out
    }

    /// Spectroscopic (dressed) qubit frequency, resonator frequency and
    /// anharmonicity at the sweet spot.
    pub fn dressed(&self) -> [f64; 3] {
        match self.convention {
            FrequencyConvention::Dressed => [self.transmon.omega_max, self.resonator.omega_r, self.transmon.eta],
            FrequencyConvention::Bare => dressed_levels(
                self.transmon.omega_max,
                self.resonator.omega_r,
                self.transmon.eta,
                self.coupling.g_qr,
            ),
        }
    }
}

/// Dressed [ω_q, ω_r, η] of the static three-level Jaynes-Cummings model.
fn dressed_levels(omega_q: f64, omega_r: f64, eta: f64, g: f64) -> [f64; 3] {
    // One excitation: {|e0>, |g1>}.
    let one = Matrix2::new(omega_q, g, g, omega_r).symmetric_eigen();
    let (iq, ir) = if one.eigenvectors[(0, 0)].abs() > one.eigenvectors[(0, 1)].abs() {
        (0, 1)
    } else {
        (1, 0)
    };
    let e0 = one.eigenvalues[iq];
    let g1 = one.eigenvalues[ir];
    // Two excitations: {|f0>, |e1>, |g2>}.
    let s = std::f64::consts::SQRT_2 * g;
    let two = Matrix3::new(
        2.0 * omega_q + eta,
        s,
        0.0,
        s,
        omega_q + omega_r,
        s,
        0.0,
        s,
        2.0 * omega_r,
    )
    .symmetric_eigen();
    let f_col = (0..3)
        .max_by(|&a, &b| {
            two.eigenvectors[(0, a)]
                .abs()
                .partial_cmp(&two.eigenvectors[(0, b)].abs())
                .unwrap()
        })
        .unwrap();
    let f0 = two.eigenvalues[f_col];
    [e0, g1, f0 - 2.0 * e0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweet_spot_is_omega_max() {
        let t = DeviceSpec::q1().transmon;
        assert_eq!(t.qubit_frequency(0.0).unwrap(), t.omega_max);
        assert!((units::to_ghz(t.qubit_frequency(0.0).unwrap()) - 5.784).abs() < 1e-12);
    }

    #[test]
    fn quarter_flux_value() {
        let t = DeviceSpec::q1().transmon;
        // (5.784 + 0.254)·√cos(π/4) − 0.254
        let expected = 6.038 * (0.5f64).sqrt().sqrt() - 0.254;
        let got = units::to_ghz(t.qubit_frequency(0.25).unwrap());
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 4.823).abs() < 1e-3);
    }

    #[test]
    fn flux_outside_window_is_rejected() {
        let t = DeviceSpec::q1().transmon;
        let err = t.qubit_frequency(0.46).unwrap_err();
        assert!(err.to_string().contains("0.45"));
        assert!(t.qubit_frequency(-0.45).is_ok());
    }

    #[test]
    fn slope_matches_finite_difference() {
        let t = DeviceSpec::q1().transmon;
        for &phi in &[-0.3, -0.1, 0.05, 0.2, 0.4] {
            let h = 1e-6;
            let fd = (t.qubit_frequency(phi + h).unwrap() - t.qubit_frequency(phi - h).unwrap()) / (2.0 * h);
            let an = t.qubit_frequency_slope(phi).unwrap();
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{phi}: {fd} vs {an}");
        }
    }

    #[test]
    fn undressing_round_trips() {
        let dev = DeviceSpec::q1();
        let bare = dev.to_bare();
        assert_eq!(bare.convention, FrequencyConvention::Bare);
        let back = bare.dressed();
        let target = dev.dressed();
        for i in 0..3 {
            assert!((back[i] - target[i]).abs() < 1e-5, "{i}");
        }
        // Level repulsion pushes the bare qubit up and the bare resonator down.
        assert!(bare.transmon.omega_max > dev.transmon.omega_max);
        assert!(bare.resonator.omega_r < dev.resonator.omega_r);
        assert_eq!(bare.to_bare(), bare);
    }

    #[test]
    fn thermal_from_equilibrium() {
        let th = ThermalSpec::from_equilibrium(0.0238, 86.6e3);
        assert!((th.gamma_up - 2061.08).abs() < 1e-6);
        assert!((th.t1() - 1.0 / 86.6e3).abs() < 1e-15);
    }
}
