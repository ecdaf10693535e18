//! Model functions for measured traces and least-squares fitting.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::effective::{pe_closed_form, EffectiveModel};
use crate::error::{Error, Result};

/// Parameters of the two-frequency Ramsey fringe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyParams {
    pub t2: f64,
    pub a1: f64,
    pub omega1: f64,
    pub a2: f64,
    pub omega2: f64,
    pub phi1: f64,
    pub b: f64,
}

impl RamseyParams {
    fn to_vec(self) -> Vec<f64> {
        vec![self.t2, self.a1, self.omega1, self.a2, self.omega2, self.phi1, self.b]
    }

    fn from_slice(p: &[f64]) -> Self {
        RamseyParams {
            t2: p[0],
            a1: p[1],
            omega1: p[2],
            a2: p[3],
            omega2: p[4],
            phi1: p[5],
            b: p[6],
        }
    }
}

/// P_t = e^{−t/T₂}(A₁cos(ω₁t+φ₁) + A₂cos(ω₂t+φ₁)) + B.
pub fn ramsey_beating(t: f64, p: &RamseyParams) -> f64 {
    (-t / p.t2).exp() * (p.a1 * (p.omega1 * t + p.phi1).cos() + p.a2 * (p.omega2 * t + p.phi1).cos()) + p.b
}

/// f = λ·p_e + μ.
pub fn spam_rescale(p_e_model: f64, lambda: f64, mu: f64) -> f64 {
    lambda * p_e_model + mu
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct CurveProblem<'a, F> {
    model: F,
    x: &'a [f64],
    y: &'a [f64],
    p: DVector<f64>,
}

impl<F: Fn(&[f64], f64) -> f64> CurveProblem<'_, F> {
    fn eval(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).map(|(&x, &y)| (self.model)(p, x) - y),
        )
    }
}

impl<F: Fn(&[f64], f64) -> f64> LeastSquaresProblem<f64, Dyn, Dyn> for CurveProblem<'_, F> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.eval(self.p.as_slice());
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let base = self.eval(self.p.as_slice());
        let mut jac = DMatrix::zeros(self.x.len(), self.p.len());
        let mut probe = self.p.as_slice().to_vec();
        for j in 0..probe.len() {
            let h = 1e-7 * probe[j].abs().max(1e-7);
            let keep = probe[j];
            probe[j] = keep + h;
            let shifted = self.eval(&probe);
            probe[j] = keep;
            jac.set_column(j, &((shifted - &base) / h));
        }
        jac.iter().all(|v| v.is_finite()).then_some(jac)
    }
}

/// Least-squares fit of `model(params, x)` to the points (x, y).
pub fn fit_curve<F>(model: F, x: &[f64], y: &[f64], initial: &[f64]) -> Result<FitReport>
where
    F: Fn(&[f64], f64) -> f64,
{
    if x.len() != y.len() || x.len() < initial.len() {
        return Err(Error::domain("need at least as many points as parameters"));
    }
    let problem = CurveProblem {
        model,
        x,
        y,
        p: DVector::from_column_slice(initial),
    };
    let (solved, report) = LevenbergMarquardt::new()
        .with_ftol(1e-14)
        .with_xtol(1e-14)
        .with_patience(400)
        .minimize(problem);
    Ok(FitReport {
        params: solved.p.as_slice().to_vec(),
        residual_norm: report.objective_function.sqrt() * std::f64::consts::SQRT_2,
        evaluations: report.number_of_evaluations,
        converged: report.termination.was_successful(),
    })
}

pub fn fit_ramsey(t: &[f64], y: &[f64], guess: RamseyParams) -> Result<(RamseyParams, FitReport)> {
    let report = fit_curve(
        |p, x| ramsey_beating(x, &RamseyParams::from_slice(p)),
        t,
        y,
        &guess.to_vec(),
    )?;
    Ok((RamseyParams::from_slice(&report.params), report))
}

/// Reset-trace fit result: effective model plus SPAM gain and offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetTraceFit {
    pub g_abs: f64,
    pub kappa_r: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Fits λ·p_e(t; |g|, κ) + μ to a measured reset trace.
pub fn fit_reset_trace(t: &[f64], y: &[f64], guess: ResetTraceFit) -> Result<(ResetTraceFit, FitReport)> {
    // Rates are fitted in units of the guessed κ to keep the problem well scaled.
    let scale = guess.kappa_r;
    let model = move |p: &[f64], x: f64| {
        let (g, k) = (p[0].abs() * scale, p[1].abs() * scale);
        EffectiveModel::new(g, 0.0, k)
            .map(|m| spam_rescale(pe_closed_form(&m, x), p[2], p[3]))
            .unwrap_or(f64::NAN)
    };
    let init = [guess.g_abs / scale, 1.0, guess.lambda, guess.mu];
    let report = fit_curve(model, t, y, &init)?;
    let p = &report.params;
    let fit = ResetTraceFit {
        g_abs: p[0].abs() * scale,
        kappa_r: p[1].abs() * scale,
        lambda: p[2],
        mu: p[3],
    };
    Ok((fit, report))
}

/// y = c + (y₀ − c)·e^{−t/τ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub asymptote: f64,
    pub initial: f64,
    pub tau: f64,
}

pub fn fit_exponential(t: &[f64], y: &[f64], tau_guess: f64) -> Result<(ExponentialFit, FitReport)> {
    if t.is_empty() {
        return Err(Error::domain("empty trace"));
    }
    let model = move |p: &[f64], x: f64| p[0] + (p[1] - p[0]) * (-x / (p[2].abs() * tau_guess)).exp();
    let init = [*y.last().unwrap(), y[0], 1.0];
    let report = fit_curve(model, t, y, &init)?;
    let p = &report.params;
    Ok((
        ExponentialFit {
            asymptote: p[0],
            initial: p[1],
            tau: p[2].abs() * tau_guess,
        },
        report,
    ))
}

/// Ordinary least-squares line with a two-sided confidence interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SlopeEstimate {
    pub fn contains_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

pub fn linear_trend(x: &[f64], y: &[f64], confidence: f64) -> Result<SlopeEstimate> {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::domain("linear trend needs at least three paired points"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 2.0).map_err(|e| Error::domain(e.to_string()))?;
    let q = dist.inverse_cdf(0.5 + confidence / 2.0);
    Ok(SlopeEstimate {
        slope,
        intercept,
        stderr,
        ci_low: slope - q * stderr,
        ci_high: slope + q * stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz, per_ns};

    /// Deterministic noise in [−1, 1] from a linear congruential sequence.
    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn ramsey_trivial_cases() {
        let p = RamseyParams {
            t2: 1e-6,
            a1: 0.3,
            omega1: 2e7,
            a2: 0.1,
            omega2: 3e7,
            phi1: 0.0,
            b: 0.5,
        };
        assert!((ramsey_beating(0.0, &p) - 0.9).abs() < 1e-15);
        let single = RamseyParams { a2: 0.0, ..p };
        let t = 2.1e-7;
        let expected = (-t / 1e-6f64).exp() * 0.3 * (2e7 * t).cos() + 0.5;
        assert!((ramsey_beating(t, &single) - expected).abs() < 1e-15);
    }

    #[test]
    fn ramsey_round_trip() {
        let truth = RamseyParams {
            t2: 11e-6,
            a1: 0.3,
            omega1: mhz(1.0),
            a2: 0.15,
            omega2: mhz(1.3),
            phi1: 0.2,
            b: 0.5,
        };
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 25e-9).collect();
        let n = noise(t.len(), 7);
        // SNR 100 relative to the fringe amplitude.
        let y: Vec<f64> = t
            .iter()
            .zip(&n)
            .map(|(&x, e)| ramsey_beating(x, &truth) + 0.45e-2 * e)
            .collect();
        let guess = RamseyParams {
            t2: 9e-6,
            a1: 0.28,
            omega1: mhz(1.01),
            a2: 0.16,
            omega2: mhz(1.29),
            phi1: 0.15,
            b: 0.49,
        };
        let (fit, report) = fit_ramsey(&t, &y, guess).unwrap();
        assert!(report.converged);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(fit.t2, truth.t2) < 0.01, "{fit:?}");
        assert!(rel(fit.a1, truth.a1) < 0.01 && rel(fit.a2, truth.a2) < 0.01);
        assert!(rel(fit.omega1, truth.omega1) < 0.01 && rel(fit.omega2, truth.omega2) < 0.01);
        assert!(rel(fit.b, truth.b) < 0.01);
    }

    #[test]
    fn spam_examples() {
        assert_eq!(spam_rescale(0.37, 1.0, 0.0), 0.37);
        assert!((spam_rescale(1.0, 0.9, 0.05) - 0.95).abs() < 1e-15);
    }

    #[test]
    fn spam_round_trip() {
        let kappa = per_ns(46.0);
        let model = EffectiveModel::new(kappa * 0.4, 0.0, kappa).unwrap();
        let t: Vec<f64> = (0..300).map(|i| i as f64 * 1e-9).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&x| spam_rescale(pe_closed_form(&model, x), 0.93, 0.03))
            .collect();
        let guess = ResetTraceFit {
            g_abs: kappa * 0.35,
            kappa_r: kappa * 1.1,
            lambda: 1.0,
            mu: 0.0,
        };
        let (fit, _) = fit_reset_trace(&t, &y, guess).unwrap();
        assert!(
            (fit.lambda - 0.93).abs() < 1e-3 && (fit.mu - 0.03).abs() < 1e-3,
            "{fit:?}"
        );
    }

    #[test]
    fn exponential_round_trip() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 2e-7).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&x| 0.0238 + (0.0002 - 0.0238) * (-x / 11.5e-6).exp())
            .collect();
        let (fit, _) = fit_exponential(&t, &y, 5e-6).unwrap();
        assert!((fit.tau - 11.5e-6).abs() < 1e-10);
        assert!((fit.asymptote - 0.0238).abs() < 1e-9);
    }

    #[test]
    fn trend_on_flat_and_sloped_data() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let n = noise(100, 3);
        let flat: Vec<f64> = n.iter().map(|e| 1e-4 + 1e-6 * e).collect();
        let est = linear_trend(&x, &flat, 0.95).unwrap();
        assert!(est.ci_low < est.ci_high);
        let sloped: Vec<f64> = x.iter().zip(&n).map(|(a, e)| 1e-4 + 1e-6 * a + 1e-7 * e).collect();
        let est = linear_trend(&x, &sloped, 0.95).unwrap();
        assert!(!est.contains_zero());
        assert!((est.slope - 1e-6).abs() < 1e-8);
    }
}
