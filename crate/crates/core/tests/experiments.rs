//! Experiment drivers against their defining properties.

use preset_core::engine::{build_hamiltonian, dressed_qubit_populations, HilbertConfig};
use preset_core::experiments::{
    regime_points, repeated_reset, rethermalization, rhombus_point, run_scan, time_trace, two_tone_drive,
    two_tone_trace, uniform_times, Axis, AxisUnit, DriveTemplate, InitialState, Param, RethermalizationSpec, RunSetup,
    ScanSpec, ToneTemplate, TraceSpec,
};
use preset_core::units::mhz;
use preset_core::{DeviceSpec, FluxDrive, OutputFilter, Tone};

fn point(index: usize, duration: f64) -> FluxDrive {
    let template = FluxDrive::single(0.0, Tone::cosine(0.1, mhz(330.0)), duration, OutputFilter::none());
    regime_points(&DeviceSpec::q1(), &template, 34e-9)
        .unwrap()
        .remove(index)
        .resonant
        .drive
}

fn trace(drive: FluxDrive, levels: usize, initial: usize, steps: usize) -> TraceSpec {
    TraceSpec {
        setup: RunSetup::new(
            DeviceSpec::q1(),
            HilbertConfig::new(levels, 3),
            InitialState::Level(initial),
        ),
        times: uniform_times(drive.duration, steps),
        drive,
        label: None,
    }
}

#[test]
fn overdamped_point_decays_without_oscillation() {
    let mut spec = trace(point(0, 1e-6), 2, 1, 100);
    spec.setup.engine.keep_states = true;
    let r = time_trace(&spec).unwrap();
    // The bare populations ripple at the modulation frequency through the
    // modulated hybridization; the dressed qubit population is the envelope.
    let h = build_hamiltonian(&spec.setup.device, &spec.drive, spec.setup.hilbert).unwrap();
    let states = r.trajectory.states.as_ref().unwrap();
    let pe: Vec<f64> = r
        .trajectory
        .times
        .iter()
        .zip(states)
        .map(|(&t, rho)| dressed_qubit_populations(&h, t, rho).unwrap()[1])
        .collect();
    assert!(pe.windows(2).all(|w| w[1] < w[0] + 1e-3), "{pe:?}");
    assert_eq!(r.closed_form.unwrap().regime, "overdamped");
}

#[test]
fn underdamped_point_has_its_first_minimum_near_34_ns() {
    let r = time_trace(&trace(point(2, 100e-9), 2, 1, 200)).unwrap();
    let t = &r.trajectory.times;
    let pe: Vec<f64> = r.trajectory.qubit.iter().map(|p| p[1]).collect();
    let (i_min, _) = pe
        .iter()
        .enumerate()
        .take_while(|(i, _)| t[*i] < 60e-9)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!(
        (t[i_min] - 34e-9).abs() < 5e-9,
        "first minimum at {:.1} ns",
        t[i_min] * 1e9
    );
    assert!(pe[i_min] < 0.15);
}

#[test]
fn one_reset_cycle_is_the_trace_endpoint() {
    let spec = trace(point(2, 300e-9), 2, 1, 30);
    let seq = repeated_reset(
        &TraceSpec {
            setup: RunSetup {
                initial: InitialState::Level(0),
                ..spec.setup.clone()
            },
            ..spec.clone()
        },
        1,
        &[(0, 1)],
    )
    .unwrap();
    let end = time_trace(&spec).unwrap().trajectory.final_qubit()[0];
    assert!((seq.residuals[0] - (1.0 - end)).abs() < 1e-6);
    assert!(seq.trend.is_none());
}

#[test]
fn rethermalization_follows_the_rate_model() {
    let setup = RunSetup::new(DeviceSpec::q1(), HilbertConfig::new(2, 3), InitialState::Level(0));
    let spec = RethermalizationSpec {
        setup,
        park_flux: 0.0,
        duration: 60e-6,
        steps: 120,
    };
    let r = rethermalization(&spec).unwrap();
    let thermal = DeviceSpec::q1().thermal;
    let tau = 1.0 / (thermal.gamma_up + thermal.gamma_down);
    assert!((r.fit.tau / tau - 1.0).abs() < 1e-3);
    assert!((r.fit.asymptote - 0.0238).abs() < 1e-4);

    let cold = RunSetup::new(
        DeviceSpec::q1().without_thermal(),
        HilbertConfig::new(2, 3),
        InitialState::Level(1),
    );
    let r = rethermalization(&RethermalizationSpec { setup: cold, ..spec }).unwrap();
    let pe: Vec<f64> = r.trajectory.qubit.iter().map(|p| p[1]).collect();
    assert!(pe.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.fit.asymptote.abs() < 1e-3);
}

#[test]
fn equal_amplitude_two_tone_scan_is_swap_symmetric() {
    let tone = |omega| ToneTemplate {
        amplitude: Param::Fixed(0.06),
        omega,
        phase: -std::f64::consts::FRAC_PI_2,
    };
    let axis = |label| Axis::linear(label, AxisUnit::Megahertz, mhz(300.0), mhz(500.0), 3);
    let spec = ScanSpec {
        setup: RunSetup::new(DeviceSpec::q1(), HilbertConfig::new(3, 3), InitialState::Level(2)),
        drive: DriveTemplate {
            park_flux: 0.0,
            tones: vec![tone(Param::X), tone(Param::Y)],
            duration: 200e-9,
            filter: OutputFilter::none(),
        },
        x: axis("omega_1"),
        y: axis("omega_2"),
    };
    let grid = run_scan(&spec, None).unwrap();
    let tol = 10.0 * spec.setup.engine.rtol.max(spec.setup.engine.atol);
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (grid.cell(i, j), grid.cell(j, i));
            for (p, q) in a.populations.iter().zip(&b.populations) {
                assert!((p - q).abs() <= tol.max(1e-6), "({i},{j}): {p} vs {q}");
            }
        }
    }
}

#[test]
fn two_tone_reset_empties_e_and_f() {
    let dev = DeviceSpec::q1();
    let template = FluxDrive::idle(0.0, 1e-6);
    let (w1, w2) = rhombus_point(&dev, 0.08, 0.144, &template).unwrap();
    let drive = two_tone_drive(0.0, 0.08, w1, 0.144, w2, &template);
    let from_e = two_tone_trace(&trace(drive.clone(), 3, 1, 200)).unwrap();
    let from_f = two_tone_trace(&trace(drive, 3, 2, 200)).unwrap();
    // The tail of a resonator-limited reset cannot beat the κ/2 cap.
    let cap = 2.0 / dev.resonator.kappa_r;
    let (tau_e, tau_f) = (from_e.decay.unwrap().tau, from_f.decay.unwrap().tau);
    assert!(tau_e >= 0.99 * cap && tau_e < 1.3 * cap, "{tau_e}");
    assert!(tau_f > tau_e);
    assert!(1.0 - from_f.trajectory.final_qubit()[0] < 0.02);
    let cascade = from_f.cascade.unwrap().rates;
    assert!(cascade.f_to_e > 0.0 && cascade.e_to_g > 0.0);
}

#[test]
fn initial_ground_state_is_left_alone() {
    let dev = DeviceSpec::q1();
    let template = FluxDrive::idle(0.0, 1e-6);
    let (w1, w2) = rhombus_point(&dev, 0.08, 0.144, &template).unwrap();
    let drive = two_tone_drive(0.0, 0.08, w1, 0.144, w2, &template);
    let r = two_tone_trace(&trace(drive, 3, 0, 50)).unwrap();
    // Only thermal excitation and the static dressing move population.
    for p in &r.trajectory.qubit {
        assert!(p[0] > 0.99, "{p:?}");
    }
}
