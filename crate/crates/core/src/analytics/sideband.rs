//! Bessel sideband couplings and resonance conditions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device::DeviceSpec;
use crate::drive::FluxDrive;
use crate::error::{Error, Result};
use crate::fourier::{fourier_expand, SidebandDecomposition};
use crate::special::bessel_j;

/// Which argument convention to use for the sideband Bessel functions.
///
/// `Methods`: y = A^(α)/(α ω_m), β_n = nαθ_m − y sin(αθ_m).
/// `Results`: y = A^(α)/ω_m, β_n = nθ_m − A^(α)/(α ω_m)·sin(αθ_m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingConvention {
    #[default]
    Methods,
    Results,
}

/// g_n = ḡ·J_n(y)·e^{iβ_n} in the default convention.
pub fn sideband_coupling(
    n: i64,
    decomposition: &SidebandDecomposition,
    alpha: usize,
    omega_m: f64,
    theta_m: f64,
    g_bar: f64,
) -> Result<Complex64> {
    sideband_coupling_with(
        n,
        decomposition,
        alpha,
        omega_m,
        theta_m,
        g_bar,
        CouplingConvention::Methods,
    )
}

pub fn sideband_coupling_with(
    n: i64,
    decomposition: &SidebandDecomposition,
    alpha: usize,
    omega_m: f64,
    theta_m: f64,
    g_bar: f64,
    convention: CouplingConvention,
) -> Result<Complex64> {
    if !(alpha == 1 || alpha == 2) {
        return Err(Error::domain(format!("alpha must be 1 or 2, got {alpha}")));
    }
    if !(omega_m > 0.0) {
        return Err(Error::domain("omega_m must be positive"));
    }
    let a = if decomposition.harmonics.is_empty() {
        0.0
    } else if decomposition.harmonics.contains_key(&alpha) {
        decomposition.signed_amplitude(alpha, theta_m)
    } else {
        return Err(Error::domain(format!("decomposition has no harmonic of order {alpha}")));
    };
    let af = alpha as f64;
    let depth = a / (af * omega_m);
    let (y, beta) = match convention {
        CouplingConvention::Methods => (depth, n as f64 * af * theta_m - depth * (af * theta_m).sin()),
        CouplingConvention::Results => (a / omega_m, n as f64 * theta_m - depth * (af * theta_m).sin()),
    };
    Ok(Complex64::from_polar(g_bar * bessel_j(n, y), beta))
}

/// ω_m = −Δ̄/(nα), the modulation frequency putting sideband n on resonance.
pub fn resonance_frequency(n: i64, alpha: usize, delta_bar: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("sideband order n must be at least 1"));
    }
    if alpha == 0 {
        return Err(Error::domain("alpha must be positive"));
    }
    if !(delta_bar < 0.0) {
        return Err(Error::domain(
            "effective detuning must be negative (qubit below the resonator)",
        ));
    }
    Ok(-delta_bar / (n as f64 * alpha as f64))
}

/// ν + 2S for the |e,0⟩ ↔ |g,1⟩ transition carried by sideband `m_star` of
/// `exp(i∫(ω_q − ω̄))`: the bare sideband detuning ν = Δ̄ + m*ω_base plus the
/// second-order shifts S = Σ_{m≠m*} |ḡ s_m|²/(Δ̄ + mω_base) from every other
/// sideband. Zero on the exact resonance of the modulated Jaynes–Cummings model.
pub fn shifted_sideband_detuning(decomposition: &SidebandDecomposition, omega_r: f64, g_bar: f64, m_star: i64) -> f64 {
    let delta = decomposition.omega_bar - omega_r;
    let w = decomposition.omega_base;
    let shift: f64 = decomposition
        .sideband_spectrum()
        .iter()
        .filter(|(&m, _)| m != m_star)
        .map(|(&m, s)| g_bar * g_bar * s.norm_sqr() / (delta + m as f64 * w))
        .sum();
    delta + m_star as f64 * w + 2.0 * shift
}

/// Modulation frequency of a single-tone drive that puts sideband n exactly on
/// resonance, including the shifts from off-resonant sidebands. The template's
/// tone supplies amplitude, phase and park flux; its frequency is replaced.
pub fn calibrate_resonance(device: &DeviceSpec, template: &FluxDrive, n: i64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("sideband order n must be at least 1"));
    }
    if template.tones.len() != 1 {
        return Err(Error::domain("resonance calibration needs a single-tone drive"));
    }
    let bare = device.to_bare();
    let at = |omega: f64| -> Result<SidebandDecomposition> {
        let mut drive = template.clone();
        drive.tones[0].omega = omega;
        fourier_expand(&bare.transmon, &drive)
    };
    let mut d = at(template.tones[0].omega)?;
    let h1 = d.harmonic(1).norm();
    let alpha = if h1 <= 1e-6 * d.harmonic(2).norm() { 2 } else { 1 };
    let m_star = n * alpha as i64;
    let mut guess = resonance_frequency(n, alpha, d.omega_bar - bare.resonator.omega_r)?;
    for _ in 0..3 {
        d = at(guess)?;
        guess = resonance_frequency(n, alpha, d.omega_bar - bare.resonator.omega_r)?;
    }
    let f = |omega: f64| -> Result<f64> {
        Ok(shifted_sideband_detuning(
            &at(omega)?,
            bare.resonator.omega_r,
            bare.coupling.g_bar,
            m_star,
        ))
    };
    // The neighbouring sidebands m* ± 1 hit resonance outside this bracket.
    let m = m_star as f64;
    let (mut lo, mut hi) = (guess * m / (m + 0.5), guess * m / (m - 0.5));
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::domain(format!(
            "no shifted resonance for sideband {n} near {guess:e} rad/s"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)?.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First-order couplings of a multi-component modulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoToneCouplings {
    pub g0: f64,
    /// g_{1,k} indexed like the input components.
    pub g1: Vec<f64>,
}

/// g₀ = ḡ Π J₀(A_k/ω_k), g_{1,k} = ḡ J₁(A_k/ω_k) Π_{m≠k} J₀(A_m/ω_m).
///
/// `components` are the (A_k, ω_k) Fourier components of ω_q(t).
pub fn two_tone_couplings(components: &[(f64, f64)], g_bar: f64) -> Result<TwoToneCouplings> {
    if components.iter().any(|&(_, w)| !(w > 0.0)) {
        return Err(Error::domain("component frequencies must be positive"));
    }
    let j0: Vec<f64> = components.iter().map(|&(a, w)| bessel_j(0, a / w)).collect();
    let g0 = g_bar * j0.iter().product::<f64>();
    let g1 = components
        .iter()
        .enumerate()
        .map(|(k, &(a, w))| {
            let others: f64 = j0.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, v)| v).product();
            g_bar * bessel_j(1, a / w) * others
        })
        .collect();
    Ok(TwoToneCouplings { g0, g1 })
}
