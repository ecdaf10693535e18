//! Time integration of the master equation and trajectory bookkeeping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dop853::{Dop853, Stats, StepControl};
use super::liouvillian::Liouvillian;
use super::model::{CollapseSet, Hamiltonian, HilbertConfig};
use super::state::DensityMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Verify trace, Hermiticity and positivity at every sample.
    pub check_invariants: bool,
    /// Keep the full density matrix at every sample.
    pub keep_states: bool,
}

impl Default for EngineSettings {
    fn default() -> Self {
        let c = StepControl::default();
        EngineSettings {
            rtol: c.rtol,
            atol: c.atol,
            max_steps: c.max_steps,
            check_invariants: true,
            keep_states: false,
        }
    }
}

impl EngineSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::config("engine tolerances must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("engine max_steps must be positive"));
        }
        Ok(())
    }
}

/// Largest invariant deviations seen over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct InvariantReport {
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub hilbert: HilbertConfig,
    pub times: Vec<f64>,
    /// Qubit level populations at each sample.
    pub qubit: Vec<Vec<f64>>,
    /// ⟨a†a⟩ at each sample.
    pub photons: Vec<f64>,
    /// Photons leaked through the resonator, κ∫⟨a†a⟩dt.
    pub emitted: Vec<f64>,
    /// Diagonal of ρ at each sample.
    pub diagonal: Vec<Vec<f64>>,
    #[serde(skip)]
    pub states: Option<Vec<DensityMatrix>>,
    pub invariants: InvariantReport,
    #[serde(skip)]
    pub stats: Stats,
    /// Entries of ρ retained after the reachability reduction.
    pub retained_entries: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_qubit(&self) -> &[f64] {
        self.qubit.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Integrates dρ/dt = −i[H(t), ρ] + Σ_c D[c]ρ from `times[0]` and samples on `times`.
pub fn evolve(
    hamiltonian: &Hamiltonian,
    collapse: &CollapseSet,
    rho0: &DensityMatrix,
    times: &[f64],
    settings: &EngineSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    collapse.validate()?;
    let hil = *hamiltonian.hilbert();
    if *rho0.hilbert() != hil {
        return Err(Error::domain("initial state and Hamiltonian live in different spaces"));
    }
    rho0.check(0.0)
        .map_err(|e| Error::domain(format!("initial state invalid: {e}")))?;
    if times.is_empty() {
        return Err(Error::domain("empty time grid"));
    }
    let end = hamiltonian.duration() * (1.0 + 1e-12);
    if times[0] < 0.0 || times.windows(2).any(|w| !(w[1] >= w[0])) || times[times.len() - 1] > end {
        return Err(Error::domain(format!(
            "time grid must be nondecreasing within [0, {:e}] s",
            hamiltonian.duration()
        )));
    }

    let liouv = Liouvillian::build(hamiltonian, collapse, rho0.matrix());
    let m = liouv.len();
    let photon_diag: Vec<(usize, f64)> = liouv
        .support()
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| i == j && hil.levels_of(i).1 > 0)
        .map(|(p, &(i, _))| (p, hil.levels_of(i).1 as f64))
        .collect();
    let kappa = collapse.kappa_r;

    let mut y = liouv.gather(rho0.matrix());
    y.push(Complex64::new(0.0, 0.0));
    let mut rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        liouv.apply(hamiltonian.qubit_term(t), &y[..m], &mut out[..m]);
        let n: f64 = photon_diag.iter().map(|&(p, k)| k * y[p].re).sum();
        out[m] = Complex64::new(kappa * n, 0.0);
    };
    let control = StepControl {
        rtol: settings.rtol,
        atol: settings.atol,
        max_steps: settings.max_steps,
        h_max: f64::INFINITY,
    };
    let mut solver = Dop853::new(m + 1, control);

    let mut traj = Trajectory {
        hilbert: hil,
        times: Vec::with_capacity(times.len()),
        qubit: Vec::with_capacity(times.len()),
        photons: Vec::with_capacity(times.len()),
        emitted: Vec::with_capacity(times.len()),
        diagonal: Vec::with_capacity(times.len()),
        states: settings.keep_states.then(Vec::new),
        invariants: InvariantReport {
            min_eigenvalue: f64::INFINITY,
            ..Default::default()
        },
        stats: Stats::default(),
        retained_entries: m,
    };

    let mut t = times[0];
    for &ts in times {
        solver.integrate(&mut rhs, t, ts, &mut y)?;
        t = ts;
        let state = DensityMatrix::from_parts(hil, liouv.scatter(&y[..m]));
        record(&mut traj, &state, t, y[m].re, settings)?;
    }
    traj.stats = solver.stats;
    Ok(traj)
}

fn record(traj: &mut Trajectory, state: &DensityMatrix, t: f64, emitted: f64, settings: &EngineSettings) -> Result<()> {
    if settings.check_invariants {
        state.check(t)?;
        let inv = &mut traj.invariants;
        inv.trace = inv.trace.max((state.trace() - 1.0).norm());
        inv.hermiticity = inv.hermiticity.max(state.hermiticity_error());
        inv.min_eigenvalue = inv.min_eigenvalue.min(state.min_eigenvalue());
    }
    traj.times.push(t);
    traj.qubit.push(state.qubit_populations());
    traj.photons.push(state.photon_number());
    traj.emitted.push(emitted);
    traj.diagonal.push(state.diagonal());
    if let Some(states) = traj.states.as_mut() {
        states.push(state.clone());
    }
    Ok(())
}

/// Quantity extracted from a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    QubitLevel(usize),
    PhotonNumber,
    Emitted,
    /// Population of the product state |q, n⟩.
    Basis {
        qubit: usize,
        photons: usize,
    },
}

pub fn populations(trajectory: &Trajectory, observable: Observable) -> Result<Vec<f64>> {
    if trajectory.is_empty() {
        return Err(Error::domain("empty trajectory"));
    }
    let hil = trajectory.hilbert;
    match observable {
        Observable::QubitLevel(q) if q < hil.qubit_levels => Ok(trajectory.qubit.iter().map(|p| p[q]).collect()),
        Observable::PhotonNumber => Ok(trajectory.photons.clone()),
        Observable::Emitted => Ok(trajectory.emitted.clone()),
        Observable::Basis { qubit, photons } if qubit < hil.qubit_levels && photons < hil.fock_cutoff => {
            let i = hil.index(qubit, photons);
            Ok(trajectory.diagonal.iter().map(|d| d[i]).collect())
        }
        other => Err(Error::domain(format!("{other:?} is outside the simulated space"))),
    }
}

/// Qubit populations in the instantaneous eigenbasis of H(t). Each
/// eigenvector is labelled by the product state it overlaps most, assigned
/// greedily so labels stay unique near avoided crossings.
pub fn dressed_qubit_populations(h: &Hamiltonian, t: f64, state: &DensityMatrix) -> Result<Vec<f64>> {
    let hil = *h.hilbert();
    if state.hilbert() != &hil {
        return Err(Error::domain("state and Hamiltonian live in different spaces"));
    }
    let eig = h.at(t).symmetric_eigen();
    let d = hil.dimension();
    let mut pairs: Vec<(f64, usize, usize)> = (0..d)
        .flat_map(|k| (0..d).map(move |i| (k, i)))
        .map(|(k, i)| (eig.eigenvectors[(i, k)].norm_sqr(), k, i))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut vec_used, mut basis_used) = (vec![false; d], vec![false; d]);
    let mut out = vec![0.0; hil.qubit_levels];
    let rho = state.matrix();
    for (_, k, i) in pairs {
        if vec_used[k] || basis_used[i] {
            continue;
        }
        vec_used[k] = true;
        basis_used[i] = true;
        let v = eig.eigenvectors.column(k);
        out[hil.levels_of(i).0] += (v.adjoint() * rho * v)[(0, 0)].re;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceSpec, ThermalSpec};
    use crate::drive::FluxDrive;
    use crate::engine::model::build_hamiltonian;

    fn idle(device: &DeviceSpec, hil: HilbertConfig, duration: f64) -> Hamiltonian {
        build_hamiltonian(device, &FluxDrive::idle(0.0, duration), hil).unwrap()
    }

    fn grid(n: usize, end: f64) -> Vec<f64> {
        (0..=n).map(|i| end * i as f64 / n as f64).collect()
    }

    #[test]
    fn populations_of_static_states() {
        let dev = DeviceSpec::q1();
        let hil = HilbertConfig::new(2, 3);
        let h = idle(&dev, hil, 1e-7);
        let none = CollapseSet {
            kappa_r: 0.0,
            gamma_down: 0.0,
            gamma_up: 0.0,
            gamma_phi: 0.0,
        };
        let t = grid(10, 1e-7);
        let g0 = DensityMatrix::basis(hil, 0, 0).unwrap();
        let tr = evolve(&h, &none, &g0, &t, &EngineSettings::default()).unwrap();
        assert!(populations(&tr, Observable::QubitLevel(0))
            .unwrap()
            .iter()
            .all(|p| *p == 1.0));
        let mix = DensityMatrix::qubit_mixture(hil, &[0.5, 0.5]).unwrap();
        let mut d = DeviceSpec::q1();
        d.coupling.g_bar = 1e-30;
        let h = idle(&d, hil, 1e-7);
        let tr = evolve(&h, &none, &mix, &t, &EngineSettings::default()).unwrap();
        for p in &tr.qubit {
            assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        }
        assert!(populations(&tr, Observable::QubitLevel(2)).is_err());
    }

    #[test]
    fn pure_relaxation() {
        let mut dev = DeviceSpec::q1();
        dev.coupling.g_bar = 1e-30;
        dev.thermal = ThermalSpec {
            gamma_up: 0.0,
            gamma_down: 86.6e3,
        };
        let hil = HilbertConfig::new(2, 2);
        let h = idle(&dev, hil, 20e-6);
        let only = CollapseSet {
            kappa_r: 0.0,
            gamma_down: dev.thermal.gamma_down,
            gamma_up: 0.0,
            gamma_phi: 0.0,
        };
        let t = grid(40, 20e-6);
        let tr = evolve(
            &h,
            &only,
            &DensityMatrix::basis(hil, 1, 0).unwrap(),
            &t,
            &EngineSettings::default(),
        )
        .unwrap();
        for (ti, p) in t.iter().zip(&tr.qubit) {
            assert!((p[1] - (-dev.thermal.gamma_down * ti).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn photon_decay_and_emission() {
        let mut dev = DeviceSpec::q1();
        dev.coupling.g_bar = 1e-30;
        let hil = HilbertConfig::new(2, 3);
        let h = idle(&dev, hil, 300e-9);
        let only = CollapseSet {
            kappa_r: dev.resonator.kappa_r,
            gamma_down: 0.0,
            gamma_up: 0.0,
            gamma_phi: 0.0,
        };
        let t = grid(30, 300e-9);
        let tr = evolve(
            &h,
            &only,
            &DensityMatrix::basis(hil, 0, 1).unwrap(),
            &t,
            &EngineSettings::default(),
        )
        .unwrap();
        for (i, ti) in t.iter().enumerate() {
            let k = dev.resonator.kappa_r;
            assert!((tr.photons[i] - (-k * ti).exp()).abs() < 1e-6);
            assert!((tr.emitted[i] + tr.photons[i] - 1.0).abs() < 1e-6);
        }
        // The vanishing coupling still links |0,1⟩ with |1,0⟩ and both decay to |0,0⟩.
        assert_eq!(tr.retained_entries, 5);
    }

    #[test]
    fn rejects_bad_grids() {
        let dev = DeviceSpec::q1();
        let hil = HilbertConfig::default();
        let h = idle(&dev, hil, 1e-7);
        let c = CollapseSet::from_device(&dev);
        let s = DensityMatrix::basis(hil, 1, 0).unwrap();
        let e = EngineSettings::default();
        assert!(evolve(&h, &c, &s, &[], &e).is_err());
        assert!(evolve(&h, &c, &s, &[0.0, 2e-7], &e).is_err());
        assert!(evolve(&h, &c, &s, &[5e-8, 1e-8], &e).is_err());
        let other = DensityMatrix::basis(HilbertConfig::new(3, 3), 1, 0).unwrap();
        assert!(evolve(&h, &c, &other, &[0.0], &e).is_err());
    }

    #[test]
    fn dressed_populations_remove_static_hybridization() {
        let dev = DeviceSpec::q1().without_thermal();
        let hil = HilbertConfig::new(2, 3);
        let h = idle(&dev, hil, 1e-9);
        // The dressed |e,0⟩ eigenvector is a stationary state of the unitary part.
        let eig = h.at(0.0).symmetric_eigen();
        let i = hil.index(1, 0);
        let k = (0..hil.dimension())
            .max_by(|&a, &b| {
                eig.eigenvectors[(i, a)]
                    .norm_sqr()
                    .total_cmp(&eig.eigenvectors[(i, b)].norm_sqr())
            })
            .unwrap();
        let psi = eig.eigenvectors.column(k).into_owned();
        let state = DensityMatrix::pure(hil, &psi).unwrap();
        let p = dressed_qubit_populations(&h, 0.0, &state).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12 && p[0].abs() < 1e-12);
        // In the product basis the same state is visibly hybridized.
        assert!(state.qubit_populations()[1] < 0.99);
        let other = DensityMatrix::basis(HilbertConfig::new(2, 2), 1, 0).unwrap();
        assert!(dressed_qubit_populations(&h, 0.0, &other).is_err());
    }
}
