//! Dispersive shift, thermal-photon dephasing and rate-equation models.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// χ = g²/(Δ(1 + Δ/η)).
pub fn dispersive_shift(g_qr: f64, delta: f64, eta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::domain(
            "dispersive shift undefined at Δ = 0 (qubit-resonator resonance)",
        ));
    }
    if !eta.is_finite() {
        return Ok(g_qr * g_qr / delta);
    }
    let factor = 1.0 + delta / eta;
    if factor == 0.0 {
        return Err(Error::domain(
            "dispersive shift undefined at Δ = −η (f-e transition resonant with the resonator)",
        ));
    }
    Ok(g_qr * g_qr / (delta * factor))
}

/// Γ_φ = n̄κχ²/(χ² + κ²).
pub fn thermal_dephasing(n_bar: f64, kappa: f64, chi: f64) -> f64 {
    n_bar * kappa * chi * chi / (chi * chi + kappa * kappa)
}

/// Mean resonator photon number for which thermal dephasing alone gives T₂*.
pub fn thermal_photons_for_t2(t2_star: f64, kappa: f64, chi: f64) -> Result<f64> {
    if !(t2_star > 0.0) {
        return Err(Error::domain("T2* must be positive"));
    }
    let per_photon = thermal_dephasing(1.0, kappa, chi);
    if per_photon == 0.0 {
        return Err(Error::domain("no dephasing per photon when χ = 0"));
    }
    Ok(1.0 / (t2_star * per_photon))
}

/// Two-level detailed-balance picture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub gamma_up: f64,
    pub gamma_down: f64,
}

impl RateModel {
    pub fn new(gamma_up: f64, gamma_down: f64) -> Result<Self> {
        if !(gamma_up >= 0.0 && gamma_down >= 0.0 && gamma_up + gamma_down > 0.0) {
            return Err(Error::domain("rates must be non-negative with a positive sum"));
        }
        Ok(RateModel { gamma_up, gamma_down })
    }

    /// Excitation rate that gives equilibrium population `p_e` at total rate `total`.
    pub fn from_equilibrium(p_e: f64, total: f64) -> Result<Self> {
        RateModel::new(p_e * total, (1.0 - p_e) * total)
    }

    pub fn total(&self) -> f64 {
        self.gamma_up + self.gamma_down
    }

    /// Same Γ↑ with the total rate replaced, as during a reset.
    pub fn with_total(&self, total: f64) -> Result<Self> {
        RateModel::new(self.gamma_up, total - self.gamma_up)
    }

    /// p_e(t) = p∞ + (p₀ − p∞) e^{−(Γ↑+Γ↓)t}.
    pub fn excited_population(&self, p0: f64, t: f64) -> f64 {
        let p_inf = rate_model_steady_state(self);
        p_inf + (p0 - p_inf) * (-self.total() * t).exp()
    }
}

/// p_e = Γ↑/(Γ↑ + Γ↓).
pub fn rate_model_steady_state(model: &RateModel) -> f64 {
    model.gamma_up / model.total()
}

/// Transition rates of the g/e/f cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CascadeRates {
    pub f_to_e: f64,
    pub e_to_g: f64,
    /// Direct f→g decay; zero in the sequential picture.
    pub f_to_g: f64,
    pub g_to_e: f64,
    pub e_to_f: f64,
}

impl CascadeRates {
    pub fn sequential(f_to_e: f64, e_to_g: f64) -> Self {
        CascadeRates {
            f_to_e,
            e_to_g,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.f_to_e, self.e_to_g, self.f_to_g, self.g_to_e, self.e_to_f];
        if all.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::domain("cascade rates must be non-negative"));
        }
        Ok(())
    }

    /// Generator of d(P_g, P_e, P_f)/dt.
    fn generator(&self) -> Matrix3<f64> {
        let CascadeRates {
            f_to_e,
            e_to_g,
            f_to_g,
            g_to_e,
            e_to_f,
        } = *self;
        Matrix3::new(
            -g_to_e,
            e_to_g,
            f_to_g,
            g_to_e,
            -(e_to_g + e_to_f),
            f_to_e,
            0.0,
            e_to_f,
            -(f_to_e + f_to_g),
        )
    }
}

/// (P_g, P_e, P_f) on `times` from the initial populations `p0`.
pub fn three_level_decay(rates: &CascadeRates, p0: [f64; 3], times: &[f64]) -> Result<Vec<[f64; 3]>> {
    rates.validate()?;
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::domain("times must be non-negative"));
    }
    let gen = rates.generator();
    let start = Vector3::from(p0);
    Ok(times
        .iter()
        .map(|&t| {
            let p = (gen * t).exp() * start;
            // Renormalize away the rounding of the exponential; columns of the
            // generator sum to zero so the exact solution conserves the total.
            let s = p.sum() / start.sum();
            [p[0] / s, p[1] / s, p[2] / s]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz, per_ns, to_mhz};

    #[test]
    fn q1_dispersive_shift() {
        let chi = dispersive_shift(mhz(78.0), mhz(-659.0), mhz(-254.0)).unwrap();
        assert!((to_mhz(chi) + 2.57).abs() < 5e-3);
        let stark = 2.0 * to_mhz(chi).abs() * 1e3 * 0.01;
        assert!((stark - 51.4).abs() < 0.1, "{stark} kHz");
    }

    #[test]
    fn dispersive_limits_and_errors() {
        let (g, d) = (1.0, -10.0);
        let two_level = dispersive_shift(g, d, f64::NEG_INFINITY).unwrap();
        assert_eq!(two_level, g * g / d);
        let far = dispersive_shift(g, d, -1e12).unwrap();
        assert!((far - g * g / d).abs() < 1e-10);
        assert!(dispersive_shift(g, 0.0, -3.0).is_err());
        let err = dispersive_shift(g, 3.0, -3.0).unwrap_err();
        assert!(err.to_string().contains("Δ = −η"));
    }

    #[test]
    fn dephasing_limits() {
        assert_eq!(thermal_dephasing(0.0, 1e7, 1e7), 0.0);
        let k = 1e6;
        assert!((thermal_dephasing(0.02, k, 1e12) / (0.02 * k) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn thermal_photons_from_t2() {
        let chi = dispersive_shift(mhz(78.0), mhz(-659.0), mhz(-254.0)).unwrap();
        let n = thermal_photons_for_t2(11.0e-6, per_ns(50.0), chi).unwrap();
        // Order-of-magnitude bound: the inversion lands at about 0.011.
        assert!(n > 0.005 && n < 0.015, "{n}");
        let back = 1.0 / thermal_dephasing(n, per_ns(50.0), chi);
        assert!((back - 11.0e-6).abs() < 1e-15);
    }

    #[test]
    fn rate_model_examples() {
        let m = RateModel::from_equilibrium(0.0238, 86.6e3).unwrap();
        assert!((m.gamma_up - 2061.08).abs() < 0.01);
        let reset = m.with_total(1e7).unwrap();
        let p = rate_model_steady_state(&reset);
        assert!((p * 100.0 - 0.0206).abs() < 5e-5);
        assert_eq!(rate_model_steady_state(&RateModel::new(0.0, 5.0).unwrap()), 0.0);
        assert!((1.0 / m.total() - 11.547e-6).abs() < 1e-9);
        assert!(RateModel::new(0.0, 0.0).is_err());
    }

    #[test]
    fn rethermalization_curve() {
        let m = RateModel::from_equilibrium(0.0238, 86.6e3).unwrap();
        assert!((m.excited_population(0.0002, 0.0) - 0.0002).abs() < 1e-16);
        let late = m.excited_population(0.0002, 1e-3);
        assert!((late - 0.0238).abs() < 1e-12);
    }

    #[test]
    fn paper_cascade_reaches_floor() {
        let rates = CascadeRates::sequential(per_ns(117.0), per_ns(100.0));
        let out = three_level_decay(&rates, [0.0, 0.0, 1.0], &[1e-6]).unwrap();
        assert!(1.0 - out[0][0] < 0.01, "{:?}", out[0]);
    }

    #[test]
    fn frozen_without_decay() {
        let out = three_level_decay(&CascadeRates::default(), [0.0, 0.0, 1.0], &[0.0, 1.0, 5.0]).unwrap();
        for p in out {
            assert_eq!(p, [0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn equal_rate_cascade_matches_textbook() {
        let g = 3.0e6;
        let rates = CascadeRates::sequential(g, g);
        let ts: Vec<f64> = (0..40).map(|i| i as f64 * 5e-8).collect();
        let out = three_level_decay(&rates, [0.0, 0.0, 1.0], &ts).unwrap();
        for (t, p) in ts.iter().zip(&out) {
            assert!((p[1] - g * t * (-g * t).exp()).abs() < 1e-12);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cascade_matches_numerical_ode() {
        // RK4 oracle with thermal up-rates switched on.
        let rates = CascadeRates {
            f_to_e: 2.0,
            e_to_g: 1.3,
            f_to_g: 0.2,
            g_to_e: 0.05,
            e_to_f: 0.01,
        };
        let gen = rates.generator();
        let mut p = Vector3::new(0.1, 0.2, 0.7);
        let h = 1e-4;
        for _ in 0..20000 {
            let k1 = gen * p;
            let k2 = gen * (p + k1 * (h / 2.0));
            let k3 = gen * (p + k2 * (h / 2.0));
            let k4 = gen * (p + k3 * h);
            p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        let out = three_level_decay(&rates, [0.1, 0.2, 0.7], &[2.0]).unwrap();
        for i in 0..3 {
            assert!((out[0][i] - p[i]).abs() < 1e-10);
        }
    }
}
