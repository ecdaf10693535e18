//! Drive settings derived from the analytic layer: effective detuning,
//! resonant single-tone drives of prescribed coupling, regime-equivalent
//! trace points and the two-tone rhombus point.

use serde::{Deserialize, Serialize};

use crate::analytics::{calibrate_resonance, coupling_for_first_minimum, sideband_coupling, EffectiveModel};
use crate::device::{DeviceSpec, TransmonSpec};
use crate::drive::{FluxDrive, Tone};
use crate::error::{Error, Result};
use crate::fourier::{fourier_expand, SidebandDecomposition};
use crate::units;

/// Δ̄ = ω̄_q − ω_r in the spectroscopic (dressed) frame: the sweet-spot
/// dressed frequencies moved by the modulation-induced shift of ω̄_q.
pub fn effective_detuning(device: &DeviceSpec, drive: &FluxDrive) -> Result<f64> {
    let [omega_q, omega_r, eta] = device.dressed();
    let transmon = TransmonSpec {
        omega_max: omega_q,
        eta,
        ..device.transmon
    };
    Ok(fourier_expand(&transmon, drive)?.omega_bar - omega_r)
}

/// Harmonic order α of the sideband ladder: 2 when the drive only produces
/// even harmonics (sweet-spot operation), 1 otherwise.
pub fn harmonic_order(decomposition: &SidebandDecomposition) -> usize {
    let h1 = decomposition.harmonic(1).norm();
    let h2 = decomposition.harmonic(2).norm();
    if h1 <= 1e-6 * h2.max(f64::MIN_POSITIVE) {
        2
    } else {
        1
    }
}

/// Single-tone drive placed on the shifted resonance of sideband n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantDrive {
    pub n: i64,
    pub alpha: usize,
    pub drive: FluxDrive,
    /// |g_n| from the Bessel sideband formula on the engine's bare transmon.
    pub g_abs: f64,
}

/// Puts `template`'s single tone on the shifted resonance of sideband n and
/// evaluates |g_n| there.
pub fn resonant_drive(device: &DeviceSpec, template: &FluxDrive, n: i64) -> Result<ResonantDrive> {
    let omega = calibrate_resonance(device, template, n)?;
    let mut drive = template.clone();
    drive.tones[0].omega = omega;
    let bare = device.to_bare();
    let decomposition = fourier_expand(&bare.transmon, &drive)?;
    let alpha = harmonic_order(&decomposition);
    let theta = decomposition.tones[0].phase;
    let g = sideband_coupling(n, &decomposition, alpha, omega, theta, bare.coupling.g_bar)?;
    Ok(ResonantDrive {
        n,
        alpha,
        drive,
        g_abs: g.norm(),
    })
}

/// Resonant drive whose |g_n| equals `g_target`, found by bisection on the
/// tone amplitude inside the first Bessel lobe.
pub fn drive_for_coupling(device: &DeviceSpec, template: &FluxDrive, n: i64, g_target: f64) -> Result<ResonantDrive> {
    if template.tones.len() != 1 {
        return Err(Error::domain("coupling calibration needs a single-tone drive"));
    }
    if !(g_target > 0.0) {
        return Err(Error::domain("target coupling must be positive"));
    }
    let at = |a: f64| {
        let mut d = template.clone();
        d.tones[0].amplitude = a;
        resonant_drive(device, &d, n)
    };
    let room = device.transmon.flux_validity - template.park_flux.abs();
    let (mut lo, mut hi) = (1e-4, 0.75 * room);
    if !(hi > lo) {
        return Err(Error::domain("no flux room for the modulation"));
    }
    let top = at(hi)?;
    if top.g_abs < g_target {
        return Err(Error::domain(format!(
            "|g_{n}| = {:.4e} rad/s at the largest amplitude is below the target {:.4e}",
            top.g_abs, g_target
        )));
    }
    let mut best = top;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let r = at(mid)?;
        if r.g_abs < g_target {
            lo = mid;
        } else {
            hi = mid;
            best = r;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    Ok(best)
}

/// Trace settings reproducing a damping regime of the effective model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePoint {
    pub label: String,
    pub regime: String,
    pub g_target: f64,
    pub resonant: ResonantDrive,
}

/// Regime-equivalent stand-ins for the three trace points: A overdamped
/// (|g| = κ/8), B moderately underdamped (|g| = 3κ/8), C with the first
/// minimum of the closed form at `t_star_c`.
pub fn regime_points(device: &DeviceSpec, template: &FluxDrive, t_star_c: f64) -> Result<Vec<RegimePoint>> {
    let kappa = device.resonator.kappa_r;
    let targets = [
        ("A", kappa / 8.0),
        ("B", 3.0 * kappa / 8.0),
        ("C", coupling_for_first_minimum(kappa, t_star_c)?),
    ];
    targets
        .iter()
        .map(|&(label, g)| {
            let resonant = drive_for_coupling(device, template, 1, g)?;
            let regime = EffectiveModel::new(g, 0.0, kappa)?.regime().label().to_string();
            Ok(RegimePoint {
                label: format!("regime-equivalent point {label}"),
                regime,
                g_target: g,
                resonant,
            })
        })
        .collect()
}

/// Two-tone drive with Φ(t) = A₁ sin ω₁t + A₂ sin ω₂t parked at `park_flux`.
pub fn two_tone_drive(park_flux: f64, a1: f64, omega1: f64, a2: f64, omega2: f64, template: &FluxDrive) -> FluxDrive {
    FluxDrive {
        park_flux,
        tones: vec![Tone::sine(a1, omega1), Tone::sine(a2, omega2)],
        duration: template.duration,
        filter: template.filter,
    }
}

/// (ω₁, ω₂) with 2ω₁ = −Δ̄ (|e,0⟩ ↔ |g,1⟩) and ω₁ + ω₂ = −Δ̄ − η
/// (|f,0⟩ ↔ |e,1⟩), Δ̄ evaluated self-consistently at the given amplitudes.
pub fn rhombus_point(device: &DeviceSpec, a1: f64, a2: f64, template: &FluxDrive) -> Result<(f64, f64)> {
    let eta = device.dressed()[2];
    let nominal = -(device.dressed()[0] - device.dressed()[1]);
    let (mut w1, mut w2) = (nominal / 2.0, nominal / 2.0 - eta);
    for _ in 0..8 {
        let drive = two_tone_drive(template.park_flux, a1, w1, a2, w2, template);
        let delta = effective_detuning(device, &drive)?;
        let (n1, n2) = (-delta / 2.0, -delta / 2.0 - eta);
        let moved = (n1 - w1).abs().max((n2 - w2).abs());
        w1 = n1;
        w2 = n2;
        if moved < units::mhz(1e-3) {
            break;
        }
    }
    Ok((w1, w2))
}
