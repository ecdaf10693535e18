//! Harmonic decomposition of the modulated qubit frequency ω_q(Φ(t)).

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::device::TransmonSpec;
use crate::drive::{FluxDrive, Tone, Waveform};
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 256;
const MAX_SAMPLES: usize = 1 << 20;

/// Rational grid on which multi-tone drives are made periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisGrid {
    /// Grid spacing in Hz; `None` means 1/duration.
    pub spacing: Option<f64>,
    /// Round tone frequencies onto the grid instead of rejecting them.
    pub snap: bool,
}

impl Default for AnalysisGrid {
    fn default() -> Self {
        AnalysisGrid {
            spacing: None,
            snap: true,
        }
    }
}

/// ω_q(t) = omega_bar + Σ_k Re(A_k e^{i k omega_base t}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandDecomposition {
    pub omega_bar: f64,
    pub omega_base: f64,
    /// Complex harmonic amplitudes keyed by k ≥ 1.
    pub harmonics: BTreeMap<usize, Complex64>,
    /// Tones (after filtering and snapping) the decomposition describes.
    pub tones: Vec<Tone>,
}

impl SidebandDecomposition {
    /// Reconstructed qubit frequency.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.omega_bar
            + self
                .harmonics
                .iter()
                .map(|(&k, a)| (a * Complex64::from_polar(1.0, k as f64 * self.omega_base * t)).re)
                .sum::<f64>()
    }

    pub fn harmonic(&self, k: usize) -> Complex64 {
        self.harmonics.get(&k).copied().unwrap_or_default()
    }

    /// Real, signed amplitude A^(k) in the convention
    /// `A^(k) cos[k(ω_m t + θ_m)]` for a single tone with phase `theta`.
    pub fn signed_amplitude(&self, k: usize, theta: f64) -> f64 {
        (self.harmonic(k) * Complex64::from_polar(1.0, -(k as f64) * theta)).re
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega_base
    }

    /// Coefficients s_m of `exp(i ∫₀ᵗ (ω_q − ω̄) dt') = Σ_m s_m e^{i m ω_base t}`:
    /// the exact sideband weights of the qubit-resonator coupling, all
    /// harmonics included.
    pub fn sideband_spectrum(&self) -> BTreeMap<i64, Complex64> {
        let mut out = BTreeMap::new();
        if self.harmonics.is_empty() {
            out.insert(0, Complex64::new(1.0, 0.0));
            return out;
        }
        let kmax = *self.harmonics.keys().next_back().unwrap();
        let depth: f64 = self
            .harmonics
            .iter()
            .map(|(&k, a)| a.norm() / (k as f64 * self.omega_base))
            .sum();
        let span = (kmax as f64 * (depth + 8.0) * 4.0) as usize;
        let n = span.max(MIN_SAMPLES).next_power_of_two().min(MAX_SAMPLES);
        let dt = self.period() / n as f64;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| {
                let t = j as f64 * dt;
                let phi: f64 = self
                    .harmonics
                    .iter()
                    .map(|(&k, a)| {
                        let w = k as f64 * self.omega_base;
                        (a * Complex64::from_polar(1.0, w * t) / Complex64::new(0.0, w)).re
                    })
                    .sum();
                Complex64::from_polar(1.0, phi)
            })
            .collect();
        let phi0: f64 = self
            .harmonics
            .iter()
            .map(|(&k, a)| (a / Complex64::new(0.0, k as f64 * self.omega_base)).re)
            .sum();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        // Referencing the phase to t = 0 makes it the integral from 0 to t.
        let norm = Complex64::from_polar(1.0 / n as f64, -phi0);
        for (j, c) in buf.into_iter().enumerate() {
            let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
            let c = c * norm;
            if c.norm() > 1e-14 {
                out.insert(m, c);
            }
        }
        out
    }
}

/// Decompose ω_q(Φ(t)) for the given drive.
pub fn fourier_expand(transmon: &TransmonSpec, drive: &FluxDrive) -> Result<SidebandDecomposition> {
    fourier_expand_on(transmon, drive, AnalysisGrid::default())
}

pub fn fourier_expand_on(
    transmon: &TransmonSpec,
    drive: &FluxDrive,
    grid: AnalysisGrid,
) -> Result<SidebandDecomposition> {
    drive.validate()?;
    drive.check_window(transmon)?;
    let active: Vec<Tone> = drive
        .delivered_tones()
        .into_iter()
        .filter(|t| t.amplitude > 0.0)
        .collect();

    if active.is_empty() {
        return Ok(SidebandDecomposition {
            omega_bar: transmon.qubit_frequency(drive.park_flux)?,
            omega_base: drive.tones.first().map_or(TAU / drive.duration, |t| t.omega),
            harmonics: BTreeMap::new(),
            tones: Vec::new(),
        });
    }

    let (omega_base, tones, multiples) = commensurate(&active, drive.duration, grid)?;
    let kmax = *multiples.iter().max().unwrap();
    let waveform = Waveform::new(drive.park_flux, tones.clone());

    let mut n = (64 * kmax).max(MIN_SAMPLES).next_power_of_two();
    let mut planner = FftPlanner::new();
    loop {
        let dt = TAU / omega_base / n as f64;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(transmon.qubit_frequency_unchecked(waveform.flux(j as f64 * dt)), 0.0))
            .collect();
        planner.plan_fft_forward(n).process(&mut buf);
        let omega_bar = buf[0].re / n as f64;
        let scale = omega_bar.abs().max(1.0);
        let tail = buf[n / 4..n / 2].iter().map(|c| c.norm()).fold(0.0, f64::max) * 2.0 / n as f64;
        if tail > 1e-13 * scale && n < MAX_SAMPLES {
            n *= 2;
            continue;
        }
        let harmonics = buf[1..n / 2]
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let a = c * (2.0 / n as f64);
                (a.norm() > 1e-14 * scale).then_some((i + 1, a))
            })
            .collect();
        return Ok(SidebandDecomposition {
            omega_bar,
            omega_base,
            harmonics,
            tones,
        });
    }
}

/// Common fundamental of the tones, the tones placed on it, and their
/// integer multiples of that fundamental.
fn commensurate(tones: &[Tone], duration: f64, grid: AnalysisGrid) -> Result<(f64, Vec<Tone>, Vec<usize>)> {
    if tones.len() == 1 {
        return Ok((tones[0].omega, tones.to_vec(), vec![1]));
    }
    let spacing = grid.spacing.unwrap_or(1.0 / duration);
    if !(spacing > 0.0) {
        return Err(Error::config("analysis grid spacing must be positive"));
    }
    let mut ints = Vec::with_capacity(tones.len());
    for t in tones {
        let m = t.omega / TAU / spacing;
        let r = m.round();
        if r < 1.0 || (!grid.snap && (m - r).abs() > 1e-6 * m.max(1.0)) {
            return Err(Error::config(format!(
                "tone at {:.6e} Hz is not commensurate with the {:.6e} Hz analysis grid",
                t.omega / TAU,
                spacing
            )));
        }
        ints.push(r as u64);
    }
    let base = ints.iter().copied().fold(0, gcd);
    let placed = tones
        .iter()
        .zip(&ints)
        .map(|(t, &m)| Tone {
            omega: TAU * spacing * m as f64,
            ..*t
        })
        .collect();
    let multiples = ints.iter().map(|&m| (m / base) as usize).collect();
    Ok((TAU * spacing * base as f64, placed, multiples))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceSpec;
    use crate::drive::OutputFilter;
    use crate::units::mhz;

    fn single(park: f64, amp: f64, f_mhz: f64) -> FluxDrive {
        FluxDrive::single(park, Tone::cosine(amp, mhz(f_mhz)), 1e-6, OutputFilter::none())
    }

    #[test]
    fn zero_amplitude_is_static() {
        let t = DeviceSpec::q1().transmon;
        let d = fourier_expand(&t, &single(0.1, 0.0, 300.0)).unwrap();
        assert_eq!(d.omega_bar, t.qubit_frequency(0.1).unwrap());
        assert!(d.harmonics.is_empty());
    }

    #[test]
    fn sweet_spot_suppresses_odd_harmonics() {
        let t = DeviceSpec::q1().transmon;
        for &amp in &[0.02, 0.1, 0.2, 0.3] {
            let d = fourier_expand(&t, &single(0.0, amp, 329.5)).unwrap();
            let dominant = d.harmonic(2).norm();
            for k in (1..40).step_by(2) {
                assert!(d.harmonic(k).norm() < 1e-6 * dominant, "amp {amp}, k {k}");
            }
        }
    }

    #[test]
    fn small_modulation_first_harmonic_is_slope() {
        let t = DeviceSpec::q1().transmon;
        let d = fourier_expand(&t, &single(0.1, 1e-3, 200.0)).unwrap();
        let h = 1e-6;
        let slope = (t.qubit_frequency(0.1 + h).unwrap() - t.qubit_frequency(0.1 - h).unwrap()) / (2.0 * h);
        let a1 = d.harmonic(1).norm();
        assert!((a1 - slope.abs() * 1e-3).abs() < 0.01 * a1);
    }

    #[test]
    fn reconstruction_matches_direct_evaluation() {
        let t = DeviceSpec::q1().transmon;
        let drive = FluxDrive::single(
            0.05,
            Tone {
                amplitude: 0.25,
                omega: mhz(150.0),
                phase: 0.7,
            },
            1e-6,
            OutputFilter::none(),
        );
        let d = fourier_expand(&t, &drive).unwrap();
        let wf = drive.compile();
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..997 {
            let time = d.period() * j as f64 / 997.0;
            let direct = t.qubit_frequency(wf.flux(time)).unwrap();
            num += (d.evaluate(time) - direct).powi(2);
            den += direct * direct;
        }
        assert!((num / den).sqrt() < 1e-9);
    }

    #[test]
    fn incommensurate_tones_without_snapping_fail() {
        let t = DeviceSpec::q1().transmon;
        let drive = FluxDrive {
            park_flux: 0.0,
            tones: vec![Tone::sine(0.02, mhz(230.0)), Tone::sine(0.02, mhz(230.25))],
            duration: 1e-6,
            filter: OutputFilter::none(),
        };
        let strict = AnalysisGrid {
            spacing: None,
            snap: false,
        };
        assert!(matches!(fourier_expand_on(&t, &drive, strict), Err(Error::Config(_))));
        let fine = AnalysisGrid {
            spacing: Some(0.25e6),
            snap: false,
        };
        let d = fourier_expand_on(&t, &drive, fine).unwrap();
        assert!((d.omega_base - mhz(0.25)).abs() < 1e-3);
        // Snapping onto the 1 MHz default grid moves the second tone.
        let d = fourier_expand(&t, &drive).unwrap();
        assert!((d.tones[1].omega - mhz(230.0)).abs() < 1e-3);
    }

    #[test]
    fn sideband_spectrum_is_jacobi_anger() {
        // At the sweet spot the leading harmonic is k = 2; the spectrum of the
        // accumulated phase must follow J_n(A/(2ω)) on even indices.
        let t = DeviceSpec::q1().transmon;
        let d = fourier_expand(&t, &single(0.0, 0.05, 300.0)).unwrap();
        let spec = d.sideband_spectrum();
        let total: f64 = spec.values().map(|c| c.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-10);
        let y = d.signed_amplitude(2, 0.0) / (2.0 * mhz(300.0));
        let j1 = crate::special::bessel_j(1, y.abs());
        let s2 = spec.get(&2).unwrap().norm();
        assert!((s2 - j1).abs() < 2e-3 * j1, "{s2} vs {j1}");
    }
}
