//! The non-Hermitian two-level model on {|e,0⟩, |g,1⟩}:
//!
//! ```text
//! H_eff = [[0,            |g| e^{iβ}],
//!          [|g| e^{-iβ},  -iκ/2     ]]
//! ```

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative width of the band around |g| = κ/4 classified as critical.
pub const CRITICAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub g_abs: f64,
    pub beta: f64,
    pub kappa_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum DampingRegime {
    Overdamped { m: f64 },
    Critical,
    Underdamped { m: f64 },
}

impl DampingRegime {
    pub fn label(&self) -> &'static str {
        match self {
            DampingRegime::Overdamped { .. } => "overdamped",
            DampingRegime::Critical => "critical",
            DampingRegime::Underdamped { .. } => "underdamped",
        }
    }
}

/// Basis states of the single-excitation subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleExcitation {
    E0,
    G1,
}

impl EffectiveModel {
    pub fn new(g_abs: f64, beta: f64, kappa_r: f64) -> Result<Self> {
        if !(g_abs >= 0.0) {
            return Err(Error::domain("|g_n| must be non-negative"));
        }
        if !(kappa_r > 0.0) {
            return Err(Error::domain("kappa_r must be positive"));
        }
        Ok(EffectiveModel { g_abs, beta, kappa_r })
    }

    pub fn regime(&self) -> DampingRegime {
        let quarter = self.kappa_r / 4.0;
        if (self.g_abs - quarter).abs() <= CRITICAL_TOLERANCE * self.kappa_r {
            DampingRegime::Critical
        } else if self.g_abs < quarter {
            DampingRegime::Overdamped {
                m: (self.kappa_r.powi(2) - 16.0 * self.g_abs.powi(2)).sqrt() / 4.0,
            }
        } else {
            DampingRegime::Underdamped {
                m: (16.0 * self.g_abs.powi(2) - self.kappa_r.powi(2)).sqrt() / 4.0,
            }
        }
    }

    pub fn hamiltonian(&self) -> Matrix2<Complex64> {
        let off = Complex64::from_polar(self.g_abs, self.beta);
        Matrix2::new(
            Complex64::new(0.0, 0.0),
            off,
            off.conj(),
            Complex64::new(0.0, -self.kappa_r / 2.0),
        )
    }
}

/// λ = −iκ/4 ± √(|g|² − κ²/16).
pub fn effective_eigenvalues(model: &EffectiveModel) -> [Complex64; 2] {
    let centre = Complex64::new(0.0, -model.kappa_r / 4.0);
    let root = Complex64::new(model.g_abs.powi(2) - model.kappa_r.powi(2) / 16.0, 0.0).sqrt();
    [centre + root, centre - root]
}

/// Γ = 2 min_k |Im λ_k|.
pub fn reset_rate(model: &EffectiveModel) -> f64 {
    let k = model.kappa_r;
    if model.g_abs < k / 4.0 {
        let disc = k * k - 16.0 * model.g_abs.powi(2);
        // (κ − √disc)/2, written to avoid cancellation at small |g|.
        8.0 * model.g_abs.powi(2) / (k + disc.sqrt())
    } else {
        k / 2.0
    }
}

/// Excited-state population p_e(t) for |e,0⟩ preparation.
pub fn pe_closed_form(model: &EffectiveModel, t: f64) -> f64 {
    let k = model.kappa_r;
    let envelope = (-k * t / 2.0).exp();
    match model.regime() {
        DampingRegime::Critical => envelope * (k * t / 4.0 + 1.0).powi(2),
        DampingRegime::Underdamped { m } => envelope * ((m * t).cos() + k / (4.0 * m) * (m * t).sin()).powi(2),
        DampingRegime::Overdamped { m } => {
            if m * t < 1e-8 {
                // sinh(Mt)/M → t as M → 0.
                envelope * (1.0 + k * t / 4.0).powi(2)
            } else {
                envelope * ((m * t).cosh() + k / (4.0 * m) * (m * t).sinh()).powi(2)
            }
        }
    }
}

/// (P_e0, P_g1) after time `t` from `initial`, via the matrix exponential.
pub fn evolve_effective(model: &EffectiveModel, initial: SingleExcitation, t: f64) -> (f64, f64) {
    let propagator = (model.hamiltonian() * Complex64::new(0.0, -t)).exp();
    let col = match initial {
        SingleExcitation::E0 => 0,
        SingleExcitation::G1 => 1,
    };
    (propagator[(0, col)].norm_sqr(), propagator[(1, col)].norm_sqr())
}

/// Time of the first zero of p_e in the underdamped regime,
/// t* = (π − arctan(4M/κ))/M.
pub fn first_minimum_time(model: &EffectiveModel) -> Result<f64> {
    match model.regime() {
        DampingRegime::Underdamped { m } => Ok(first_zero(m, model.kappa_r)),
        other => Err(Error::domain(format!(
            "no finite-time minimum in the {} regime",
            other.label()
        ))),
    }
}

fn first_zero(m: f64, kappa: f64) -> f64 {
    (PI - (4.0 * m / kappa).atan()) / m
}

/// |g| whose underdamped first minimum falls at `t_star`, for a given κ.
pub fn coupling_for_first_minimum(kappa_r: f64, t_star: f64) -> Result<f64> {
    if !(kappa_r > 0.0 && t_star > 0.0) {
        return Err(Error::domain("kappa_r and t_star must be positive"));
    }
    // t*(M) decreases monotonically from ∞ (M → 0) to 0 (M → ∞).
    let (mut lo, mut hi) = (1e-12 * kappa_r, 1e12 * kappa_r);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if first_zero(mid, kappa_r) > t_star {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    let m = 0.5 * (lo + hi);
    Ok((m * m + kappa_r * kappa_r / 16.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz, per_ns};

    fn model(g: f64, k: f64) -> EffectiveModel {
        EffectiveModel::new(g, 0.3, k).unwrap()
    }

    #[test]
    fn decoupled_eigenvalues() {
        let [a, b] = effective_eigenvalues(&model(0.0, 2.0));
        let mut ims = [a.im, b.im];
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-15 && ims[1].abs() < 1e-15);
        assert!(a.re.abs() < 1e-15 && b.re.abs() < 1e-15);
    }

    #[test]
    fn exceptional_point_is_degenerate() {
        let [a, b] = effective_eigenvalues(&model(0.25, 1.0));
        assert!((a - b).norm() < 1e-12);
        assert!((a.im + 0.25).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_against_trace_determinant() {
        let m = model(mhz(5.0), per_ns(46.0));
        let h = m.hamiltonian();
        let tr = h[(0, 0)] + h[(1, 1)];
        let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
        let disc = (tr * tr - det * 4.0).sqrt();
        let oracle = [(tr + disc) / 2.0, (tr - disc) / 2.0];
        let got = effective_eigenvalues(&m);
        for o in oracle {
            assert!(got.iter().any(|g| (g - o).norm() < 1e-6 * o.norm()));
        }
        // −i·5.435e6 ± 3.094e7
        assert!((got[0].im + 5.435e6).abs() < 1e3);
        assert!((got[0].re.abs() - 3.094e7).abs() < 1e4);
    }

    #[test]
    fn reset_rate_examples() {
        let k = per_ns(50.0);
        assert_eq!(reset_rate(&model(0.0, k)), 0.0);
        assert_eq!(reset_rate(&model(k / 4.0, k)), k / 2.0);
        assert!((reset_rate(&model(2.0 * k, k)) - 1e7).abs() < 1e-6);
        let expected = k * (1.0 - 3f64.sqrt() / 2.0) / 2.0;
        assert!((reset_rate(&model(k / 8.0, k)) - expected).abs() < 1e-9 * expected);
        assert!((expected / k - 0.0670).abs() < 1e-4);
    }

    #[test]
    fn closed_form_examples() {
        let k = 1.0;
        assert_eq!(pe_closed_form(&model(0.7, k), 0.0), 1.0);
        let crit = pe_closed_form(&model(0.25, k), 4.0);
        assert!((crit - 4.0 * (-2.0f64).exp()).abs() < 1e-14);
        // Lossless limit: cos²(|g| t).
        let g = 3.0;
        let m = model(g, 1e-9);
        for i in 0..20 {
            let t = 0.05 * i as f64;
            assert!((pe_closed_form(&m, t) - (g * t).cos().powi(2)).abs() < 1e-8);
        }
        let tz = first_minimum_time(&m).unwrap();
        assert!((tz - PI / (2.0 * g)).abs() < 1e-9);
    }

    #[test]
    fn matrix_exponential_limits() {
        let k = 2.0;
        let m = model(0.0, k);
        assert_eq!(evolve_effective(&m, SingleExcitation::E0, 0.0), (1.0, 0.0));
        for &t in &[0.1, 0.5, 2.0] {
            let (_, pg1) = evolve_effective(&m, SingleExcitation::G1, t);
            assert!((pg1 - (-k * t).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn first_minimum_errors_outside_underdamped() {
        assert!(first_minimum_time(&model(0.1, 1.0)).is_err());
        assert!(first_minimum_time(&model(0.25, 1.0)).is_err());
    }

    #[test]
    fn first_minimum_strong_coupling() {
        let k = 1.0;
        let m = model(k, k);
        let big_m = k * 15f64.sqrt() / 4.0;
        let expected = (PI - 15f64.sqrt().atan()) / big_m;
        let t = first_minimum_time(&m).unwrap();
        assert!((t - expected).abs() < 1e-12);
        assert!(pe_closed_form(&m, t) < 1e-12);
    }

    #[test]
    fn inversion_recovers_coupling() {
        let k = per_ns(46.0);
        let g = coupling_for_first_minimum(k, 34e-9).unwrap();
        let m = model(g, k);
        assert!((first_minimum_time(&m).unwrap() - 34e-9).abs() < 1e-18);
        assert!(pe_closed_form(&m, 34e-9) < 1e-12);
    }
}
