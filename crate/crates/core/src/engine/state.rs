//! Density matrices on the composite basis |q⟩ ⊗ |n⟩.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::model::HilbertConfig;
use crate::error::{Error, Result};

pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    hilbert: HilbertConfig,
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(hilbert: HilbertConfig, rho: DMatrix<Complex64>) -> Result<Self> {
        let d = hilbert.dimension();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::domain(format!("density matrix must be {d}×{d}")));
        }
        let state = DensityMatrix { hilbert, rho };
        state.check(0.0)?;
        Ok(state)
    }

    /// Wraps an engine-produced matrix without checking it.
    pub(crate) fn from_parts(hilbert: HilbertConfig, rho: DMatrix<Complex64>) -> Self {
        DensityMatrix { hilbert, rho }
    }

    /// |q, n⟩⟨q, n|.
    pub fn basis(hilbert: HilbertConfig, q: usize, n: usize) -> Result<Self> {
        if q >= hilbert.qubit_levels || n >= hilbert.fock_cutoff {
            return Err(Error::domain(format!(
                "basis state |{q},{n}⟩ outside the truncated space"
            )));
        }
        let d = hilbert.dimension();
        let mut rho = DMatrix::zeros(d, d);
        let i = hilbert.index(q, n);
        rho[(i, i)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { hilbert, rho })
    }

    /// |ψ⟩⟨ψ| for a normalized state vector.
    pub fn pure(hilbert: HilbertConfig, psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if psi.len() != hilbert.dimension() || norm == 0.0 {
            return Err(Error::domain("state vector has the wrong length or is zero"));
        }
        let psi = psi / Complex64::new(norm, 0.0);
        Ok(DensityMatrix {
            hilbert,
            rho: &psi * psi.adjoint(),
        })
    }

    /// Diagonal qubit state with the given level populations, resonator in vacuum.
    pub fn qubit_mixture(hilbert: HilbertConfig, populations: &[f64]) -> Result<Self> {
        if populations.len() != hilbert.qubit_levels
            || populations.iter().any(|p| !(*p >= 0.0))
            || (populations.iter().sum::<f64>() - 1.0).abs() > TRACE_TOLERANCE
        {
            return Err(Error::domain("qubit populations must be non-negative and sum to one"));
        }
        let d = hilbert.dimension();
        let mut rho = DMatrix::zeros(d, d);
        for (q, &p) in populations.iter().enumerate() {
            let i = hilbert.index(q, 0);
            rho[(i, i)] = Complex64::new(p, 0.0);
        }
        Ok(DensityMatrix { hilbert, rho })
    }

    pub fn hilbert(&self) -> &HilbertConfig {
        &self.hilbert
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.rho.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Symmetrize so the Hermitian solver sees an exactly Hermitian input.
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trace, Hermiticity and positivity within the engine tolerances.
    pub fn check(&self, t: f64) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOLERANCE || tr.im.abs() > TRACE_TOLERANCE {
            return Err(Error::Integrity {
                t,
                what: format!("trace drifted to {tr}"),
            });
        }
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOLERANCE {
            return Err(Error::Integrity {
                t,
                what: format!("Hermiticity error {herm:e}"),
            });
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOLERANCE {
            return Err(Error::Integrity {
                t,
                what: format!("negative eigenvalue {min:e}"),
            });
        }
        Ok(())
    }

    /// Qubit level populations (partial trace over the resonator).
    pub fn qubit_populations(&self) -> Vec<f64> {
        let h = self.hilbert;
        (0..h.qubit_levels)
            .map(|q| {
                (0..h.fock_cutoff)
                    .map(|n| self.rho[(h.index(q, n), h.index(q, n))].re)
                    .sum()
            })
            .collect()
    }

    /// ⟨a†a⟩.
    pub fn photon_number(&self) -> f64 {
        let h = self.hilbert;
        (0..h.dimension())
            .map(|i| h.levels_of(i).1 as f64 * self.rho[(i, i)].re)
            .sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re).collect()
    }

    /// Instantaneous π pulse between qubit levels `a` and `b`: ρ → XρX with
    /// X swapping |a⟩ and |b⟩ on the qubit and acting trivially elsewhere.
    pub fn apply_qubit_swap(&mut self, a: usize, b: usize) -> Result<()> {
        let h = self.hilbert;
        if a >= h.qubit_levels || b >= h.qubit_levels {
            return Err(Error::domain("swap levels outside the qubit space"));
        }
        let perm: Vec<usize> = (0..h.dimension())
            .map(|i| {
                let (q, n) = h.levels_of(i);
                let q = if q == a {
                    b
                } else if q == b {
                    a
                } else {
                    q
                };
                h.index(q, n)
            })
            .collect();
        let old = self.rho.clone();
        for i in 0..perm.len() {
            for j in 0..perm.len() {
                self.rho[(perm[i], perm[j])] = old[(i, j)];
            }
        }
        Ok(())
    }
}
