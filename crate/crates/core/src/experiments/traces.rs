//! Time-resolved experiments: reset traces, repeated reset cycles and
//! post-reset rethermalization.

use serde::{Deserialize, Serialize};

use super::calibration::{effective_detuning, harmonic_order};
use super::setup::RunSetup;
use crate::analytics::{
    fit_curve, fit_exponential, linear_trend, pe_closed_form, rate_model_steady_state, sideband_coupling,
    three_level_decay, CascadeRates, EffectiveModel, ExponentialFit, RateModel, SlopeEstimate,
};
use crate::drive::FluxDrive;
use crate::engine::{build_hamiltonian, evolve, CollapseSet, DensityMatrix, InvariantReport, Trajectory};
use crate::error::{Error, Result};
use crate::fourier::fourier_expand;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub setup: RunSetup,
    pub drive: FluxDrive,
    /// Sample times within [0, drive.duration].
    pub times: Vec<f64>,
    /// Free-form tag carried into the outputs.
    pub label: Option<String>,
}

impl TraceSpec {
    pub fn validate(&self) -> Result<()> {
        self.setup.validate()?;
        self.drive.validate()?;
        self.drive.check_window(&self.setup.device.transmon)?;
        if self.times.is_empty() {
            return Err(Error::config("trace needs at least one sample time"));
        }
        Ok(())
    }
}

/// Evenly spaced samples 0, duration/steps, …, duration.
pub fn uniform_times(duration: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| duration * i as f64 / steps as f64).collect()
}

/// Eq.-level prediction of the single-excitation reset for a single-tone drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCompanion {
    pub n: i64,
    pub alpha: usize,
    pub g_abs: f64,
    pub kappa_r: f64,
    pub regime: String,
    pub p_e: Vec<f64>,
}

/// Sequential cascade rates fitted to (P_e, P_f).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeFit {
    pub rates: CascadeRates,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceResult {
    pub label: Option<String>,
    pub trajectory: Trajectory,
    pub closed_form: Option<ClosedFormCompanion>,
    /// Exponential fit of 1 − P_g.
    pub decay: Option<ExponentialFit>,
    pub cascade: Option<CascadeFit>,
}

impl TraceResult {
    pub fn excited(&self) -> Vec<f64> {
        self.trajectory.qubit.iter().map(|p| 1.0 - p[0]).collect()
    }
}

fn run(spec: &TraceSpec) -> Result<Trajectory> {
    spec.validate()?;
    let h = build_hamiltonian(&spec.setup.device, &spec.drive, spec.setup.hilbert)?;
    let collapse = CollapseSet::from_device(&spec.setup.device);
    let rho0 = spec.setup.initial.prepare(spec.setup.hilbert)?;
    evolve(&h, &collapse, &rho0, &spec.times, &spec.setup.engine)
}

/// Closed-form p_e(t) for the sideband the single tone is closest to.
pub fn closed_form_companion(spec: &TraceSpec) -> Result<Option<ClosedFormCompanion>> {
    let tone = match spec.drive.tones.as_slice() {
        [t] if t.amplitude > 0.0 => *t,
        _ => return Ok(None),
    };
    let device = &spec.setup.device;
    let bare = device.to_bare();
    let decomposition = fourier_expand(&bare.transmon, &spec.drive)?;
    let alpha = harmonic_order(&decomposition);
    let delta = effective_detuning(device, &spec.drive)?;
    let n = (-delta / (alpha as f64 * tone.omega)).round() as i64;
    if n < 1 {
        return Ok(None);
    }
    let theta = decomposition.tones[0].phase;
    let g = sideband_coupling(n, &decomposition, alpha, tone.omega, theta, bare.coupling.g_bar)?.norm();
    let kappa = device.resonator.kappa_r;
    let model = EffectiveModel::new(g, 0.0, kappa)?;
    Ok(Some(ClosedFormCompanion {
        n,
        alpha,
        g_abs: g,
        kappa_r: kappa,
        regime: model.regime().label().to_string(),
        p_e: spec.times.iter().map(|&t| pe_closed_form(&model, t)).collect(),
    }))
}

/// Single-drive trace with the closed-form companion when one applies.
pub fn time_trace(spec: &TraceSpec) -> Result<TraceResult> {
    let trajectory = run(spec)?;
    Ok(TraceResult {
        label: spec.label.clone(),
        trajectory,
        closed_form: closed_form_companion(spec)?,
        decay: None,
        cascade: None,
    })
}

/// Two-tone trace on a three-level qubit with an exponential fit of 1 − P_g
/// and, from |f⟩, a sequential cascade fit.
pub fn two_tone_trace(spec: &TraceSpec) -> Result<TraceResult> {
    if spec.setup.hilbert.qubit_levels != 3 {
        return Err(Error::config("two_tone_trace needs qubit_levels = 3"));
    }
    let trajectory = run(spec)?;
    let t = &trajectory.times;
    let excited: Vec<f64> = trajectory.qubit.iter().map(|p| 1.0 - p[0]).collect();
    let decay = if t.len() >= 4 && excited[0] > 0.5 {
        Some(fit_exponential(t, &excited, 100e-9)?.0)
    } else {
        None
    };
    let cascade = if t.len() >= 4 && trajectory.qubit[0][2] > 0.5 {
        Some(fit_cascade(&trajectory)?)
    } else {
        None
    };
    Ok(TraceResult {
        label: spec.label.clone(),
        trajectory,
        closed_form: None,
        decay,
        cascade,
    })
}

fn fit_cascade(traj: &Trajectory) -> Result<CascadeFit> {
    let n = traj.len();
    let p0 = [traj.qubit[0][0], traj.qubit[0][1], traj.qubit[0][2]];
    let scale = 1e7;
    let times = traj.times.clone();
    // Points 0..n are P_e, n..2n are P_f.
    let x: Vec<f64> = (0..2 * n).map(|i| i as f64).collect();
    let y: Vec<f64> = traj
        .qubit
        .iter()
        .map(|p| p[1])
        .chain(traj.qubit.iter().map(|p| p[2]))
        .collect();
    let model = move |p: &[f64], xi: f64| {
        let i = xi as usize;
        let rates = CascadeRates::sequential(p[0].abs() * scale, p[1].abs() * scale);
        match three_level_decay(&rates, p0, &[times[i % n]]) {
            Ok(v) => v[0][1 + i / n],
            Err(_) => f64::NAN,
        }
    };
    let report = fit_curve(model, &x, &y, &[1.0, 1.0])?;
    let rates = CascadeRates::sequential(report.params[0].abs() * scale, report.params[1].abs() * scale);
    Ok(CascadeFit {
        rates,
        residual_norm: report.residual_norm,
    })
}

/// Instantaneous π pulses applied before each reset, as (level, level) swaps.
pub type Preparation = Vec<(usize, usize)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetSequence {
    /// 1 − P_g at the end of each cycle.
    pub residuals: Vec<f64>,
    /// Least-squares drift of the residual per cycle with its 95% interval.
    pub trend: Option<SlopeEstimate>,
    pub invariants: InvariantReport,
}

fn tag_cycle(e: Error, cycle: usize) -> Error {
    match e {
        Error::Integration { t, reason } => Error::Integration {
            t,
            reason: format!("cycle {cycle}: {reason}"),
        },
        Error::Integrity { t, what } => Error::Integrity {
            t,
            what: format!("cycle {cycle}: {what}"),
        },
        other => other,
    }
}

/// Repeats preparation + reset drive, carrying the full state between cycles.
/// `spec.setup.initial` is the state before the first preparation.
pub fn repeated_reset(spec: &TraceSpec, repetitions: usize, preparation: &[(usize, usize)]) -> Result<ResetSequence> {
    if repetitions == 0 {
        return Err(Error::config("repetitions must be at least 1"));
    }
    spec.validate()?;
    let hil = spec.setup.hilbert;
    let h = build_hamiltonian(&spec.setup.device, &spec.drive, hil)?;
    let collapse = CollapseSet::from_device(&spec.setup.device);
    let mut settings = spec.setup.engine;
    settings.keep_states = true;
    let mut state = spec.setup.initial.prepare(hil)?;
    let mut residuals = Vec::with_capacity(repetitions);
    let mut invariants = InvariantReport {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    let times = [0.0, spec.drive.duration];
    for cycle in 0..repetitions {
        for &(a, b) in preparation {
            state.apply_qubit_swap(a, b)?;
        }
        let traj = evolve(&h, &collapse, &state, &times, &settings).map_err(|e| tag_cycle(e, cycle))?;
        residuals.push(1.0 - traj.final_qubit()[0]);
        invariants.trace = invariants.trace.max(traj.invariants.trace);
        invariants.hermiticity = invariants.hermiticity.max(traj.invariants.hermiticity);
        invariants.min_eigenvalue = invariants.min_eigenvalue.min(traj.invariants.min_eigenvalue);
        state = last_state(traj)?;
    }
    let trend = if repetitions >= 3 {
        let x: Vec<f64> = (1..=repetitions).map(|k| k as f64).collect();
        Some(linear_trend(&x, &residuals, 0.95)?)
    } else {
        None
    };
    Ok(ResetSequence {
        residuals,
        trend,
        invariants,
    })
}

fn last_state(traj: Trajectory) -> Result<DensityMatrix> {
    traj.states
        .and_then(|mut s| s.pop())
        .ok_or_else(|| Error::domain("trajectory kept no states"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RethermalizationSpec {
    pub setup: RunSetup,
    pub park_flux: f64,
    pub duration: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RethermalizationResult {
    pub trajectory: Trajectory,
    /// Exponential fit of P_e(t).
    pub fit: ExponentialFit,
    /// 1/(Γ↑ + Γ↓).
    pub model_time_constant: f64,
    /// Γ↑/(Γ↑ + Γ↓).
    pub model_asymptote: f64,
}

/// Free evolution after the reset with the modulation off. The exchange
/// coupling is dropped so the qubit relaxes only through the thermal rates,
/// as in the two-level rate model.
pub fn rethermalization(spec: &RethermalizationSpec) -> Result<RethermalizationResult> {
    spec.setup.validate()?;
    let thermal = spec.setup.device.thermal;
    let model = RateModel::new(thermal.gamma_up, thermal.gamma_down)
        .map_err(|_| Error::config("rethermalization needs thermal rates"))?;
    if spec.steps < 3 {
        return Err(Error::config("rethermalization needs at least three steps"));
    }
    let drive = FluxDrive::idle(spec.park_flux, spec.duration);
    let h = build_hamiltonian(&spec.setup.device, &drive, spec.setup.hilbert)?.decoupled();
    let collapse = CollapseSet::from_device(&spec.setup.device);
    let rho0 = spec.setup.initial.prepare(spec.setup.hilbert)?;
    let times = uniform_times(spec.duration, spec.steps);
    let trajectory = evolve(&h, &collapse, &rho0, &times, &spec.setup.engine)?;
    let pe: Vec<f64> = trajectory.qubit.iter().map(|p| p[1]).collect();
    let tau = 1.0 / model.total();
    let (fit, _) = fit_exponential(&times, &pe, tau)?;
    Ok(RethermalizationResult {
        trajectory,
        fit,
        model_time_constant: tau,
        model_asymptote: rate_model_steady_state(&model),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceSpec, ThermalSpec};
    use crate::drive::{OutputFilter, Tone};
    use crate::engine::HilbertConfig;
    use crate::experiments::calibration::drive_for_coupling;
    use crate::experiments::setup::InitialState;
    use crate::units::mhz;

    fn reset_spec(g: f64, initial: usize) -> TraceSpec {
        let dev = DeviceSpec::q1();
        let template = FluxDrive::single(0.0, Tone::cosine(0.1, mhz(330.0)), 1e-6, OutputFilter::none());
        let drive = drive_for_coupling(&dev, &template, 1, g).unwrap().drive;
        TraceSpec {
            setup: RunSetup::new(dev, HilbertConfig::new(2, 3), InitialState::Level(initial)),
            drive,
            times: uniform_times(1e-6, 200),
            label: None,
        }
    }

    #[test]
    fn trace_has_companion_and_resets() {
        let r = time_trace(&reset_spec(mhz(1.5), 1)).unwrap();
        let cf = r.closed_form.as_ref().unwrap();
        assert_eq!((cf.n, cf.alpha), (1, 2));
        assert_eq!(cf.regime, "underdamped");
        assert!(*r.excited().last().unwrap() < 1e-3);
        // Micromotion at the modulation frequency rides on the slow envelope.
        let gaps: Vec<f64> = r
            .trajectory
            .qubit
            .iter()
            .zip(&cf.p_e)
            .map(|(p, c)| (p[1] - c).abs())
            .collect();
        let worst = gaps.iter().cloned().fold(0.0, f64::max);
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(worst < 0.15 && mean < 0.02, "{worst} {mean}");
    }

    #[test]
    fn single_cycle_equals_trace_endpoint() {
        let mut spec = reset_spec(mhz(1.5), 0);
        let seq = repeated_reset(&spec, 1, &[(0, 1)]).unwrap();
        spec.setup.initial = InitialState::Level(1);
        spec.times = vec![0.0, spec.drive.duration];
        let tr = time_trace(&spec).unwrap();
        assert!((seq.residuals[0] - tr.excited()[1]).abs() < 1e-12);
        assert!(repeated_reset(&spec, 0, &[(0, 1)]).is_err());
    }

    #[test]
    fn rethermalization_follows_rate_model() {
        let mut dev = DeviceSpec::q1();
        dev.thermal = ThermalSpec::from_equilibrium(0.0238, 86.6e3);
        let spec = RethermalizationSpec {
            setup: RunSetup::new(dev, HilbertConfig::new(2, 2), InitialState::Level(0)),
            park_flux: 0.0,
            duration: 60e-6,
            steps: 120,
        };
        let r = rethermalization(&spec).unwrap();
        assert!((r.fit.tau - r.model_time_constant).abs() < 1e-3 * r.model_time_constant);
        assert!((r.fit.asymptote - r.model_asymptote).abs() < 1e-5);
        assert!((r.model_time_constant - 11.547e-6).abs() < 1e-8);

        let mut cold = spec.clone();
        cold.setup.device.thermal.gamma_up = 0.0;
        cold.setup.initial = InitialState::Level(1);
        let r = rethermalization(&cold).unwrap();
        let pe: Vec<f64> = r.trajectory.qubit.iter().map(|p| p[1]).collect();
        assert!(pe.windows(2).all(|w| w[1] < w[0]));
        assert!(r.fit.asymptote.abs() < 1e-6);
    }
}
