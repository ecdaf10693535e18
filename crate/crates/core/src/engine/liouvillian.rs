//! Sparse vectorized Lindblad generator restricted to the reachable
//! density-matrix entries.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::model::{CollapseSet, Hamiltonian};

/// dρ/dt = L₀ρ + w(t)·D ρ, where D is diagonal with entries −i(q_i − q_j)
/// and w(t) is the qubit term of the Hamiltonian.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    /// Matrix position (i, j) of each retained entry, in row-major order.
    support: Vec<(usize, usize)>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    qubit_diff: Vec<f64>,
}

impl Liouvillian {
    /// Generator acting on every entry reachable from the nonzero entries of `seed`.
    pub fn build(h: &Hamiltonian, collapse: &CollapseSet, seed: &DMatrix<Complex64>) -> Self {
        let hil = *h.hilbert();
        let d = hil.dimension();
        let flat = |i: usize, j: usize| i * d + j;

        // H_eff = H₀ − (i/2) Σ c†c
        let ops = collapse.operators(&hil);
        let mut heff = h.static_part().clone();
        for op in &ops {
            let mut dense = DMatrix::<Complex64>::zeros(d, d);
            for &(i, j, v) in op {
                dense[(i, j)] += v;
            }
            heff -= (dense.adjoint() * &dense) * Complex64::new(0.0, 0.5);
        }
        let heff_entries: Vec<(usize, usize, Complex64)> = (0..d)
            .flat_map(|i| (0..d).map(move |k| (i, k)))
            .filter_map(|(i, k)| {
                let v = heff[(i, k)];
                (v != Complex64::new(0.0, 0.0)).then_some((i, k, v))
            })
            .collect();

        // (target, source) → coefficient
        let mut full: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        let mi = Complex64::new(0.0, -1.0);
        for &(i, k, v) in &heff_entries {
            // −i H_eff ρ: (i, j) ← (k, j)
            for j in 0..d {
                *full.entry((flat(i, j), flat(k, j))).or_default() += mi * v;
            }
            // +i ρ H_eff†: (j, i) ← (j, k) with coefficient i·conj(H_eff[i, k])
            for j in 0..d {
                *full.entry((flat(j, i), flat(j, k))).or_default() += -mi * v.conj();
            }
        }
        for op in &ops {
            for &(i, k, a) in op {
                for &(j, l, b) in op {
                    *full.entry((flat(i, j), flat(k, l))).or_default() += a * b.conj();
                }
            }
        }
        full.retain(|_, v| *v != Complex64::new(0.0, 0.0));

        let mut forward: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(target, source) in full.keys() {
            forward.entry(source).or_default().push(target);
        }

        let mut reached = BTreeSet::new();
        let mut queue = VecDeque::new();
        for i in 0..d {
            for j in 0..d {
                if seed[(i, j)] != Complex64::new(0.0, 0.0) {
                    let f = flat(i, j);
                    if reached.insert(f) {
                        queue.push_back(f);
                    }
                }
            }
        }
        while let Some(s) = queue.pop_front() {
            if let Some(targets) = forward.get(&s) {
                for &t in targets {
                    if reached.insert(t) {
                        queue.push_back(t);
                    }
                }
            }
        }

        let order: Vec<usize> = reached.into_iter().collect();
        let position: BTreeMap<usize, usize> = order.iter().enumerate().map(|(p, &f)| (f, p)).collect();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &target in &order {
            for (&(_, source), &v) in full.range((target, 0)..(target + 1, 0)) {
                // Unreached sources stay zero for all time.
                if let Some(&p) = position.get(&source) {
                    cols.push(p);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        let support: Vec<(usize, usize)> = order.iter().map(|&f| (f / d, f % d)).collect();
        let qubit_diff = support
            .iter()
            .map(|&(i, j)| (hil.levels_of(i).0 as f64) - (hil.levels_of(j).0 as f64))
            .collect();
        Liouvillian {
            dim: d,
            support,
            row_ptr,
            cols,
            vals,
            qubit_diff,
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[(usize, usize)] {
        &self.support
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// out = (L₀ + w D) y.
    #[inline]
    pub fn apply(&self, w: f64, y: &[Complex64], out: &mut [Complex64]) {
        for r in 0..self.support.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * y[self.cols[idx]];
            }
            // −i w Δq ρ_ij
            let phase = w * self.qubit_diff[r];
            let v = y[r];
            acc += Complex64::new(phase * v.im, -phase * v.re);
            out[r] = acc;
        }
    }

    pub fn gather(&self, rho: &DMatrix<Complex64>) -> Vec<Complex64> {
        self.support.iter().map(|&(i, j)| rho[(i, j)]).collect()
    }

    pub fn scatter(&self, y: &[Complex64]) -> DMatrix<Complex64> {
        let mut rho = DMatrix::zeros(self.dim, self.dim);
        for (&(i, j), &v) in self.support.iter().zip(y) {
            rho[(i, j)] = v;
        }
        rho
    }
}
