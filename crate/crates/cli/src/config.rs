//! Run configuration: a TOML document with `device`, `engine`, `experiment`
//! and `output` tables, resolved into the core types with all defaults filled
//! in and all units converted.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use preset_core::device::DEFAULT_FLUX_VALIDITY;
use preset_core::engine::{EngineSettings, Frame, HilbertConfig};
use preset_core::experiments::uniform_times;
use preset_core::experiments::{
    Axis, AxisUnit, DriveTemplate, ExperimentKind, InitialState, Param, RethermalizationSpec, RunSetup, ScanSpec,
    ToneTemplate, TraceSpec, DEFAULT_STRIP_THRESHOLD,
};
use preset_core::{
    CouplingSpec, DeviceSpec, FilterKind, FrequencyConvention, OutputFilter, ResonatorSpec, ThermalSpec, TransmonSpec,
};

use crate::error::CliError;
use crate::quantity::{self, Dimension};

pub const DEFAULT_TRACE_STEPS: usize = 200;
pub const DEFAULT_REPETITIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub hilbert: HilbertConfig,
    pub settings: EngineSettings,
}

/// Experiment block with kind-specific fields present exactly when the kind
/// uses them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub label: Option<String>,
    pub initial: InitialState,
    /// Tones are empty for rethermalization.
    pub drive: DriveTemplate,
    pub x: Option<Axis>,
    pub y: Option<Axis>,
    pub steps: Option<usize>,
    pub repetitions: Option<usize>,
    pub preparation: Option<Vec<(usize, usize)>>,
    pub strip_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub format: Format,
    /// File name stem shared by the data, metadata and summary files.
    pub stem: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub device: DeviceSpec,
    pub engine: EngineConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

/// A validated experiment ready to run.
#[derive(Debug, Clone)]
pub enum Job {
    Scan(ScanSpec),
    Trace(TraceSpec),
    Reset {
        spec: TraceSpec,
        repetitions: usize,
        preparation: Vec<(usize, usize)>,
    },
    Rethermalization(RethermalizationSpec),
}

// Document layout. Every key is optional here so that missing keys are
// reported with their full path during resolution.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub device: Option<RawDevice>,
    pub engine: Option<RawEngine>,
    pub experiment: Option<RawExperiment>,
    pub output: Option<RawOutput>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDevice {
    pub convention: Option<FrequencyConvention>,
    pub transmon: Option<RawTransmon>,
    pub resonator: Option<RawResonator>,
    pub coupling: Option<RawCoupling>,
    pub thermal: Option<RawThermal>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTransmon {
    pub omega_max: Option<String>,
    pub eta: Option<String>,
    pub flux_validity: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawResonator {
    pub omega_r: Option<String>,
    pub kappa_r: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCoupling {
    pub g_qr: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawThermal {
    pub gamma_up: Option<String>,
    pub gamma_down: Option<String>,
    pub equilibrium_excitation: Option<f64>,
    pub total_rate: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEngine {
    pub frame: Option<Frame>,
    pub qubit_levels: Option<usize>,
    pub fock_cutoff: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_steps: Option<usize>,
    pub check_invariants: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawInitial {
    /// `"g"`, `"e"`, `"f"` or a level index.
    Level(String),
    Populations(Vec<f64>),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExperiment {
    pub kind: Option<ExperimentKind>,
    pub label: Option<String>,
    pub initial: Option<RawInitial>,
    pub park_flux: Option<String>,
    pub duration: Option<String>,
    pub steps: Option<usize>,
    pub repetitions: Option<usize>,
    pub preparation: Option<Vec<[usize; 2]>>,
    pub strip_threshold: Option<f64>,
    pub filter: Option<RawFilter>,
    pub x: Option<RawAxis>,
    pub y: Option<RawAxis>,
    pub tones: Option<Vec<RawTone>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFilter {
    pub kind: Option<FilterKind>,
    pub sample_rate: Option<String>,
    pub pole_frequency: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAxis {
    pub label: Option<String>,
    pub start: Option<String>,
    pub stop: Option<String>,
    pub points: Option<usize>,
}

/// `amplitude` and `frequency` take a quantity or `"x"` / `"y"` for a scan axis.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTone {
    pub amplitude: Option<String>,
    pub frequency: Option<String>,
    pub phase: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub directory: Option<String>,
    pub format: Option<Format>,
    pub stem: Option<String>,
}

fn required<T>(value: Option<T>, field: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::invalid(field, "required field is missing"))
}

fn quantity(value: &Option<String>, field: &str, dim: Dimension) -> Result<f64, CliError> {
    quantity::parse(field, required(value.as_deref(), field)?, dim)
}

fn optional_quantity(value: &Option<String>, field: &str, dim: Dimension) -> Result<Option<f64>, CliError> {
    value.as_deref().map(|v| quantity::parse(field, v, dim)).transpose()
}

fn unused<T>(value: &Option<T>, field: &str, kind: ExperimentKind) -> Result<(), CliError> {
    match value {
        Some(_) => Err(CliError::invalid(field, format!("not used by {}", kind.name()))),
        None => Ok(()),
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and resolves a configuration document. `origin` names the source
/// in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        CliError::Parse {
            path: origin.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    resolve(raw)
}

pub fn resolve(raw: RawConfig) -> Result<RunConfig, CliError> {
    let experiment_raw = required(raw.experiment, "experiment")?;
    let kind = required(experiment_raw.kind, "experiment.kind")?;
    let engine = resolve_engine(raw.engine.unwrap_or_default(), kind)?;
    let device = resolve_device(required(raw.device, "device")?, engine.hilbert.fock_cutoff)?;
    let experiment = resolve_experiment(experiment_raw, kind, &engine.hilbert)?;
    let out = raw.output.unwrap_or_default();
    let output = OutputConfig {
        directory: PathBuf::from(out.directory.unwrap_or_else(|| "out".to_string())),
        format: out.format.unwrap_or_default(),
        stem: out.stem.unwrap_or_else(|| kind.name().to_string()),
    };
    if output.stem.is_empty() || output.stem.contains(['/', '\\']) {
        return Err(CliError::invalid("output.stem", "must be a plain, non-empty file name"));
    }
    Ok(RunConfig {
        device,
        engine,
        experiment,
        output,
    })
}

fn resolve_device(raw: RawDevice, fock_cutoff: usize) -> Result<DeviceSpec, CliError> {
    let t = required(raw.transmon, "device.transmon")?;
    let r = required(raw.resonator, "device.resonator")?;
    let c = required(raw.coupling, "device.coupling")?;
    let th = required(raw.thermal, "device.thermal")?;
    let transmon = TransmonSpec {
        omega_max: quantity(&t.omega_max, "device.transmon.omega_max", Dimension::AngularFrequency)?,
        eta: quantity(&t.eta, "device.transmon.eta", Dimension::AngularFrequency)?,
        flux_validity: optional_quantity(&t.flux_validity, "device.transmon.flux_validity", Dimension::Flux)?
            .unwrap_or(DEFAULT_FLUX_VALIDITY),
    };
    let resonator = ResonatorSpec {
        omega_r: quantity(&r.omega_r, "device.resonator.omega_r", Dimension::AngularFrequency)?,
        kappa_r: quantity(&r.kappa_r, "device.resonator.kappa_r", Dimension::Rate)?,
        fock_cutoff,
    };
    let coupling = CouplingSpec::new(quantity(&c.g_qr, "device.coupling.g_qr", Dimension::AngularFrequency)?);
    let explicit = th.gamma_up.is_some() || th.gamma_down.is_some();
    let equilibrium = th.equilibrium_excitation.is_some() || th.total_rate.is_some();
    let thermal = match (explicit, equilibrium) {
        (true, true) => {
            return Err(CliError::invalid(
                "device.thermal",
                "give either gamma_up and gamma_down or equilibrium_excitation and total_rate",
            ))
        }
        (false, true) => {
            let p = required(th.equilibrium_excitation, "device.thermal.equilibrium_excitation")?;
            if !(0.0..0.5).contains(&p) {
                return Err(CliError::invalid(
                    "device.thermal.equilibrium_excitation",
                    "must lie in [0, 0.5)",
                ));
            }
            let total = quantity(&th.total_rate, "device.thermal.total_rate", Dimension::Rate)?;
            ThermalSpec::from_equilibrium(p, total)
        }
        _ => ThermalSpec {
            gamma_up: quantity(&th.gamma_up, "device.thermal.gamma_up", Dimension::Rate)?,
            gamma_down: quantity(&th.gamma_down, "device.thermal.gamma_down", Dimension::Rate)?,
        },
    };
    let device = DeviceSpec {
        transmon,
        resonator,
        coupling,
        thermal,
        convention: raw.convention.unwrap_or_default(),
    };
    device
        .validate()
        .map_err(|e| CliError::invalid("device", e.to_string()))?;
    Ok(device)
}

fn resolve_engine(raw: RawEngine, kind: ExperimentKind) -> Result<EngineConfig, CliError> {
    let two_tone = matches!(kind, ExperimentKind::TwoToneScan | ExperimentKind::TwoToneTrace);
    let levels = raw.qubit_levels.unwrap_or(if two_tone { 3 } else { 2 });
    if two_tone && levels != 3 {
        return Err(CliError::invalid(
            "engine.qubit_levels",
            format!("{} needs 3 qubit levels", kind.name()),
        ));
    }
    let mut hilbert = HilbertConfig::new(levels, raw.fock_cutoff.unwrap_or(3));
    hilbert.frame = raw.frame.unwrap_or_default();
    let defaults = EngineSettings::default();
    let settings = EngineSettings {
        rtol: raw.rtol.unwrap_or(defaults.rtol),
        atol: raw.atol.unwrap_or(defaults.atol),
        max_steps: raw.max_steps.unwrap_or(defaults.max_steps),
        check_invariants: raw.check_invariants.unwrap_or(defaults.check_invariants),
        keep_states: false,
    };
    settings
        .validate()
        .map_err(|e| CliError::invalid("engine", e.to_string()))?;
    hilbert
        .validate()
        .map_err(|e| CliError::invalid("engine", e.to_string()))?;
    Ok(EngineConfig { hilbert, settings })
}

fn parse_initial(raw: &RawInitial, hilbert: &HilbertConfig) -> Result<InitialState, CliError> {
    let levels = hilbert.qubit_levels;
    let field = "experiment.initial";
    let state = match raw {
        RawInitial::Level(name) => {
            let level = match name.as_str() {
                "g" => 0,
                "e" => 1,
                "f" => 2,
                other => other
                    .parse()
                    .map_err(|_| CliError::invalid(field, format!("\"{other}\" is not g, e, f or a level index")))?,
            };
            if level >= levels {
                return Err(CliError::invalid(
                    field,
                    format!("level {level} needs more than {levels} qubit levels"),
                ));
            }
            InitialState::Level(level)
        }
        RawInitial::Populations(p) => {
            let state = InitialState::Populations(p.clone());
            state
                .validate(hilbert)
                .map_err(|e| CliError::invalid(field, e.to_string()))?;
            state
        }
    };
    Ok(state)
}

fn parse_param(text: &Option<String>, field: &str, dim: Dimension) -> Result<Param, CliError> {
    match required(text.as_deref(), field)? {
        "x" => Ok(Param::X),
        "y" => Ok(Param::Y),
        v => Ok(Param::Fixed(quantity::parse(field, v, dim)?)),
    }
}

/// Unit and default label of the axis `p`, read off the tones that use it.
fn axis_use(tones: &[ToneTemplate], p: Param, field: &str) -> Result<(AxisUnit, String), CliError> {
    let mut uses = Vec::new();
    for (i, t) in tones.iter().enumerate() {
        let suffix = if tones.len() > 1 {
            format!("_{}", i + 1)
        } else {
            String::new()
        };
        if t.amplitude == p {
            uses.push((AxisUnit::FluxQuantum, format!("amplitude{suffix}")));
        }
        if t.omega == p {
            let name = if tones.len() > 1 {
                format!("omega{suffix}")
            } else {
                "omega_m".to_string()
            };
            uses.push((AxisUnit::Megahertz, name));
        }
    }
    match uses.as_slice() {
        [] => Err(CliError::invalid(field, "no tone uses this axis")),
        [(unit, label)] => Ok((*unit, label.clone())),
        [(unit, label), rest @ ..] if rest.iter().all(|(u, _)| u == unit) => Ok((*unit, label.clone())),
        _ => Err(CliError::invalid(
            field,
            "one axis cannot sweep both an amplitude and a frequency",
        )),
    }
}

fn resolve_axis(raw: Option<RawAxis>, field: &str, tones: &[ToneTemplate], p: Param) -> Result<Axis, CliError> {
    let raw = required(raw, field)?;
    let (unit, default_label) = axis_use(tones, p, field)?;
    let dim = match unit {
        AxisUnit::FluxQuantum => Dimension::Flux,
        AxisUnit::Megahertz => Dimension::AngularFrequency,
    };
    let start = quantity(&raw.start, &format!("{field}.start"), dim)?;
    let stop = quantity(&raw.stop, &format!("{field}.stop"), dim)?;
    let points = required(raw.points, &format!("{field}.points"))?;
    if points < 2 {
        return Err(CliError::invalid(
            format!("{field}.points"),
            "a scan axis needs at least 2 points",
        ));
    }
    if !(stop > start) {
        return Err(CliError::invalid(field, "stop must exceed start"));
    }
    Ok(Axis::linear(
        raw.label.unwrap_or(default_label),
        unit,
        start,
        stop,
        points,
    ))
}

fn resolve_filter(raw: Option<RawFilter>) -> Result<OutputFilter, CliError> {
    let raw = raw.unwrap_or_default();
    let defaults = OutputFilter::awg_default();
    let filter = OutputFilter {
        kind: raw.kind.unwrap_or_default(),
        sample_rate: optional_quantity(
            &raw.sample_rate,
            "experiment.filter.sample_rate",
            Dimension::CyclicFrequency,
        )?
        .unwrap_or(defaults.sample_rate),
        pole_frequency: optional_quantity(
            &raw.pole_frequency,
            "experiment.filter.pole_frequency",
            Dimension::CyclicFrequency,
        )?
        .unwrap_or(defaults.pole_frequency),
    };
    filter
        .validate()
        .map_err(|e| CliError::invalid("experiment.filter", e.to_string()))?;
    Ok(filter)
}

fn resolve_experiment(
    raw: RawExperiment,
    kind: ExperimentKind,
    hilbert: &HilbertConfig,
) -> Result<ExperimentConfig, CliError> {
    use ExperimentKind::*;
    let levels = hilbert.qubit_levels;
    let default_initial = if kind == Rethermalization { "g" } else { "e" };
    let initial = parse_initial(
        raw.initial
            .as_ref()
            .unwrap_or(&RawInitial::Level(default_initial.to_string())),
        hilbert,
    )?;
    let park_flux = optional_quantity(&raw.park_flux, "experiment.park_flux", Dimension::Flux)?.unwrap_or(0.0);
    let duration = quantity(&raw.duration, "experiment.duration", Dimension::Time)?;
    if !(duration > 0.0) {
        return Err(CliError::invalid("experiment.duration", "must be positive"));
    }
    let tones = match kind {
        Rethermalization => {
            unused(&raw.tones, "experiment.tones", kind)?;
            unused(&raw.filter, "experiment.filter", kind)?;
            Vec::new()
        }
        _ => required(raw.tones.as_ref(), "experiment.tones")?
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let f = |k: &str| format!("experiment.tones[{i}].{k}");
                Ok(ToneTemplate {
                    amplitude: parse_param(&t.amplitude, &f("amplitude"), Dimension::Flux)?,
                    omega: parse_param(&t.frequency, &f("frequency"), Dimension::AngularFrequency)?,
                    phase: optional_quantity(&t.phase, &f("phase"), Dimension::Angle)?.unwrap_or(0.0),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?,
    };
    let filter = match kind {
        Rethermalization => OutputFilter::none(),
        _ => resolve_filter(raw.filter)?,
    };
    let drive = DriveTemplate {
        park_flux,
        tones,
        duration,
        filter,
    };
    check_tones(kind, &drive.tones)?;

    let scan = kind.is_scan();
    let (x, y) = if scan {
        (
            Some(resolve_axis(raw.x, "experiment.x", &drive.tones, Param::X)?),
            Some(resolve_axis(raw.y, "experiment.y", &drive.tones, Param::Y)?),
        )
    } else {
        unused(&raw.x, "experiment.x", kind)?;
        unused(&raw.y, "experiment.y", kind)?;
        (None, None)
    };
    let steps = if scan {
        unused(&raw.steps, "experiment.steps", kind)?;
        None
    } else {
        let steps = raw.steps.unwrap_or(DEFAULT_TRACE_STEPS);
        if steps < 3 {
            return Err(CliError::invalid("experiment.steps", "must be at least 3"));
        }
        Some(steps)
    };
    let (repetitions, preparation) = if kind == RepeatedReset {
        let repetitions = raw.repetitions.unwrap_or(DEFAULT_REPETITIONS);
        if repetitions == 0 {
            return Err(CliError::invalid("experiment.repetitions", "must be at least 1"));
        }
        let preparation: Vec<(usize, usize)> = raw
            .preparation
            .map_or(vec![(0, 1)], |p| p.iter().map(|[a, b]| (*a, *b)).collect());
        if preparation.iter().any(|&(a, b)| a >= levels || b >= levels || a == b) {
            return Err(CliError::invalid(
                "experiment.preparation",
                "swaps must pair two distinct existing levels",
            ));
        }
        (Some(repetitions), Some(preparation))
    } else {
        unused(&raw.repetitions, "experiment.repetitions", kind)?;
        unused(&raw.preparation, "experiment.preparation", kind)?;
        (None, None)
    };
    let strip_threshold = if kind == SingleToneScan {
        let t = raw.strip_threshold.unwrap_or(DEFAULT_STRIP_THRESHOLD);
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::invalid("experiment.strip_threshold", "must lie in (0, 1)"));
        }
        Some(t)
    } else {
        unused(&raw.strip_threshold, "experiment.strip_threshold", kind)?;
        None
    };
    Ok(ExperimentConfig {
        kind,
        label: raw.label,
        initial,
        drive,
        x,
        y,
        steps,
        repetitions,
        preparation,
        strip_threshold,
    })
}

fn check_tones(kind: ExperimentKind, tones: &[ToneTemplate]) -> Result<(), CliError> {
    use ExperimentKind::*;
    let field = "experiment.tones";
    let swept = tones.iter().any(|t| t.amplitude.is_swept() || t.omega.is_swept());
    match kind {
        SingleToneScan => match tones {
            [t] if matches!((t.amplitude, t.omega), (Param::X, Param::Y) | (Param::Y, Param::X)) => Ok(()),
            _ => Err(CliError::invalid(
                field,
                "single_tone_scan needs one tone sweeping amplitude and frequency",
            )),
        },
        TwoToneScan => match tones {
            [a, b]
                if matches!((a.omega, b.omega), (Param::X, Param::Y) | (Param::Y, Param::X))
                    && !a.amplitude.is_swept()
                    && !b.amplitude.is_swept() =>
            {
                Ok(())
            }
            _ => Err(CliError::invalid(
                field,
                "two_tone_scan needs two tones sweeping their frequencies",
            )),
        },
        Rethermalization => Ok(()),
        _ if swept => Err(CliError::invalid(
            field,
            format!("{} takes fixed tone parameters", kind.name()),
        )),
        TwoToneTrace if tones.len() != 2 => Err(CliError::invalid(field, "two_tone_trace needs two tones")),
        _ if tones.is_empty() => Err(CliError::invalid(field, "at least one tone is required")),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn setup(&self) -> RunSetup {
        RunSetup {
            device: self.device,
            hilbert: self.engine.hilbert,
            engine: self.engine.settings,
            initial: self.experiment.initial.clone(),
        }
    }

    /// Builds the experiment and checks it completely, including the flux
    /// window of every scan cell, without integrating anything.
    pub fn job(&self) -> Result<Job, CliError> {
        let e = &self.experiment;
        let setup = self.setup();
        let job = match e.kind {
            ExperimentKind::SingleToneScan | ExperimentKind::TwoToneScan => {
                let spec = ScanSpec {
                    setup,
                    drive: e.drive.clone(),
                    x: e.x.clone().expect("scan axes are resolved"),
                    y: e.y.clone().expect("scan axes are resolved"),
                };
                spec.validate()?;
                Job::Scan(spec)
            }
            ExperimentKind::Rethermalization => {
                let spec = RethermalizationSpec {
                    setup,
                    park_flux: e.drive.park_flux,
                    duration: e.drive.duration,
                    steps: e.steps.unwrap_or(DEFAULT_TRACE_STEPS),
                };
                spec.setup.validate()?;
                self.device.transmon.check_flux(spec.park_flux)?;
                Job::Rethermalization(spec)
            }
            kind => {
                let drive = e.drive.instantiate(None, None)?;
                let spec = TraceSpec {
                    setup,
                    times: uniform_times(drive.duration, e.steps.unwrap_or(DEFAULT_TRACE_STEPS)),
                    drive,
                    label: e.label.clone(),
                };
                spec.validate()?;
                if kind == ExperimentKind::RepeatedReset {
                    Job::Reset {
                        spec,
                        repetitions: e.repetitions.unwrap_or(DEFAULT_REPETITIONS),
                        preparation: e.preparation.clone().unwrap_or_default(),
                    }
                } else {
                    Job::Trace(spec)
                }
            }
        };
        Ok(job)
    }

    /// The fully resolved document, every default written out.
    pub fn to_raw(&self) -> RawConfig {
        let q = quantity::format;
        let d = &self.device;
        let e = &self.experiment;
        let angular = Dimension::AngularFrequency;
        let axis = |a: &Option<Axis>| {
            a.as_ref().map(|a| {
                let dim = match a.unit {
                    AxisUnit::FluxQuantum => Dimension::Flux,
                    AxisUnit::Megahertz => angular,
                };
                RawAxis {
                    label: Some(a.label.clone()),
                    start: Some(q(a.values[0], dim)),
                    stop: Some(q(a.values[a.len() - 1], dim)),
                    points: Some(a.len()),
                }
            })
        };
        let param = |p: Param, dim| match p {
            Param::X => "x".to_string(),
            Param::Y => "y".to_string(),
            Param::Fixed(v) => q(v, dim),
        };
        let rethermalization = e.kind == ExperimentKind::Rethermalization;
        RawConfig {
            device: Some(RawDevice {
                convention: Some(d.convention),
                transmon: Some(RawTransmon {
                    omega_max: Some(q(d.transmon.omega_max, angular)),
                    eta: Some(q(d.transmon.eta, angular)),
                    flux_validity: Some(q(d.transmon.flux_validity, Dimension::Flux)),
                }),
                resonator: Some(RawResonator {
                    omega_r: Some(q(d.resonator.omega_r, angular)),
                    kappa_r: Some(q(d.resonator.kappa_r, Dimension::Rate)),
                }),
                coupling: Some(RawCoupling {
                    g_qr: Some(q(d.coupling.g_qr, angular)),
                }),
                thermal: Some(RawThermal {
                    gamma_up: Some(q(d.thermal.gamma_up, Dimension::Rate)),
                    gamma_down: Some(q(d.thermal.gamma_down, Dimension::Rate)),
                    equilibrium_excitation: None,
                    total_rate: None,
                }),
            }),
            engine: Some(RawEngine {
                frame: Some(self.engine.hilbert.frame),
                qubit_levels: Some(self.engine.hilbert.qubit_levels),
                fock_cutoff: Some(self.engine.hilbert.fock_cutoff),
                rtol: Some(self.engine.settings.rtol),
                atol: Some(self.engine.settings.atol),
                max_steps: Some(self.engine.settings.max_steps),
                check_invariants: Some(self.engine.settings.check_invariants),
            }),
            experiment: Some(RawExperiment {
                kind: Some(e.kind),
                label: e.label.clone(),
                initial: Some(match &e.initial {
                    InitialState::Level(l) => RawInitial::Level(match l {
                        0 => "g".to_string(),
                        1 => "e".to_string(),
                        2 => "f".to_string(),
                        l => l.to_string(),
                    }),
                    InitialState::Populations(p) => RawInitial::Populations(p.clone()),
                }),
                park_flux: Some(q(e.drive.park_flux, Dimension::Flux)),
                duration: Some(q(e.drive.duration, Dimension::Time)),
                steps: e.steps,
                repetitions: e.repetitions,
                preparation: e.preparation.as_ref().map(|p| p.iter().map(|&(a, b)| [a, b]).collect()),
                strip_threshold: e.strip_threshold,
                filter: (!rethermalization).then(|| RawFilter {
                    kind: Some(e.drive.filter.kind),
                    sample_rate: Some(q(e.drive.filter.sample_rate, Dimension::CyclicFrequency)),
                    pole_frequency: Some(q(e.drive.filter.pole_frequency, Dimension::CyclicFrequency)),
                }),
                x: axis(&e.x),
                y: axis(&e.y),
                tones: (!rethermalization).then(|| {
                    e.drive
                        .tones
                        .iter()
                        .map(|t| RawTone {
                            amplitude: Some(param(t.amplitude, Dimension::Flux)),
                            frequency: Some(param(t.omega, angular)),
                            phase: Some(q(t.phase, Dimension::Angle)),
                        })
                        .collect()
                }),
            }),
            output: Some(RawOutput {
                directory: Some(self.output.directory.to_string_lossy().into_owned()),
                format: Some(self.output.format),
                stem: Some(self.output.stem.clone()),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("configuration documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use preset_core::units::{ghz, mhz, per_ns};

    const SCAN: &str = include_str!("../configs/q1_single_tone_scan.toml");

    #[test]
    fn bundled_example_encodes_q1() {
        let c = parse_config(SCAN, "scan").unwrap();
        assert!((c.device.resonator.omega_r - ghz(6.441)).abs() < 1.0);
        assert!((c.device.coupling.g_qr - mhz(78.0)).abs() < 1e-3);
        assert!((c.device.resonator.kappa_r - per_ns(50.0)).abs() < 1e-6);
        assert_eq!(
            c.experiment.x.as_ref().unwrap().len() * c.experiment.y.as_ref().unwrap().len(),
            1681
        );
        c.job().unwrap();
    }

    #[test]
    fn missing_fields_are_named() {
        let text = SCAN.replace("kappa_r = \"50 ns\"\n", "");
        let msg = parse_config(&text, "scan").unwrap_err().to_string();
        assert!(msg.contains("resonator.kappa_r"), "{msg}");
    }

    #[test]
    fn parse_errors_carry_positions() {
        let text = SCAN.replace("[device.coupling]", "[device.coupling]\nstrength = \"1 MHz\"");
        match parse_config(&text, "scan").unwrap_err() {
            CliError::Parse { line, column, .. } => {
                let expected = text.lines().position(|l| l.starts_with("strength")).unwrap() + 1;
                assert_eq!((line, column), (expected, 1));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn kind_specific_fields_are_checked() {
        let text = SCAN.replace("kind = \"single_tone_scan\"", "kind = \"single_tone_scan\"\nsteps = 10");
        let msg = parse_config(&text, "scan").unwrap_err().to_string();
        assert!(msg.contains("experiment.steps"), "{msg}");
    }

    #[test]
    fn flux_window_is_checked_before_running() {
        let text = SCAN.replace("stop = \"0.3 Phi0\"", "stop = \"0.6 Phi0\"");
        let c = parse_config(&text, "scan").unwrap();
        assert!(matches!(c.job(), Err(CliError::Model(_))));
    }

    #[test]
    fn resolved_documents_round_trip() {
        let c = parse_config(SCAN, "scan").unwrap();
        let again = parse_config(&c.to_toml(), "resolved").unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_toml(), again.to_toml());
    }
}
