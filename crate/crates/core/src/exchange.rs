//! Two-spin Heisenberg exchange: Hamiltonians, the closed-form evolution
//! unitary, the distance-dependent coupling law, and per-tick evolution.
//!
//! Units are natural (ħ = 1); `J` is an energy and `t` a time.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::gates::{conjugate, embed_two_qubit};
use crate::linalg::{c, CMatrix, ONE};
use crate::state::DensityMatrix;

/// Parameters of the distance → coupling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// Coupling approached as the two qubits coincide.
    pub j_max: f64,
    /// Cutoff distance; at or beyond it the pair does not interact.
    pub theta_d: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            j_max: 1.0,
            theta_d: 5.0,
        }
    }
}

impl CouplingParams {
    pub fn new(j_max: f64, theta_d: f64) -> Result<Self> {
        let p = Self { j_max, theta_d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_max > 0.0 && self.j_max.is_finite()) {
            return Err(contract(format!("j_max must be positive, got {}", self.j_max)));
        }
        if !(self.theta_d > 0.0 && self.theta_d.is_finite()) {
            return Err(contract(format!("theta_d must be positive, got {}", self.theta_d)));
        }
        Ok(())
    }
}

/// Current coupling of one qubit pair (`i < j`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCoupling {
    pub i: usize,
    pub j: usize,
    pub j_strength: f64,
    pub delta_r: f64,
}

/// `H = (J/4) σ·σ`, written out in the computational basis.
pub fn heisenberg_two_spin(j: f64) -> CMatrix {
    CMatrix::from_real_rows(&[
        vec![0.5, 0.0, 0.0, 0.0],
        vec![0.0, -0.5, 1.0, 0.0],
        vec![0.0, 1.0, -0.5, 0.0],
        vec![0.0, 0.0, 0.0, 0.5],
    ])
    .expect("static 4x4")
    .scale_real(j / 2.0)
}

/// `H − (J/4) I₄`; differs from [`heisenberg_two_spin`] only by a global phase.
pub fn shifted_hamiltonian(j: f64) -> CMatrix {
    CMatrix::from_real_rows(&[
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, -1.0, 1.0, 0.0],
        vec![0.0, 1.0, -1.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ])
    .expect("static 4x4")
    .scale_real(j / 2.0)
}

/// `e^{−itH̃}` in closed form.
///
/// `|00⟩` and `|11⟩` are left alone; the `{|01⟩, |10⟩}` block is
/// `e^{iJt/2} [[cos, −i sin], [−i sin, cos]]` at angle `Jt/2`.
pub fn exchange_unitary(t: f64, j: f64) -> CMatrix {
    let half = j * t / 2.0;
    let phase = c(half.cos(), half.sin());
    let diag = phase * half.cos();
    let off = phase * c(0.0, -half.sin());
    let mut u = CMatrix::identity(4).expect("static 4x4");
    u[(1, 1)] = diag;
    u[(2, 2)] = diag;
    u[(1, 2)] = off;
    u[(2, 1)] = off;
    u[(0, 0)] = ONE;
    u[(3, 3)] = ONE;
    u
}

/// `J(Δr) = (J_max/2)(1 + tanh(Θ_d/2 − Δr))`, clamped to zero at `Δr ≥ Θ_d`.
pub fn coupling_strength(delta_r: f64, params: &CouplingParams) -> f64 {
    if delta_r >= params.theta_d {
        return 0.0;
    }
    params.j_max / 2.0 * (1.0 + (params.theta_d / 2.0 - delta_r).tanh())
}

/// One piecewise-constant exchange step on qubits `(pair.i, pair.j)`.
pub fn evolve_pair(rho: &DensityMatrix, pair: &PairCoupling, dt: f64) -> Result<DensityMatrix> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(contract(format!("dt must be positive, got {dt}")));
    }
    let n = rho.n_qubits();
    if pair.i >= pair.j || pair.j >= n {
        return Err(contract(format!(
            "invalid pair ({}, {}) for {n} qubits",
            pair.i, pair.j
        )));
    }
    if pair.j_strength == 0.0 {
        return Ok(rho.clone());
    }
    let u = embed_two_qubit(&exchange_unitary(dt, pair.j_strength), pair.i, pair.j, n)?;
    conjugate(rho, &u)
}

/// Applies every pair in ascending `(i, j)` order with the same `dt`.
pub fn evolve_scene_step(rho: &DensityMatrix, pairs: &[PairCoupling], dt: f64) -> Result<DensityMatrix> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(contract(format!("dt must be positive, got {dt}")));
    }
    let mut ordered: Vec<&PairCoupling> = pairs.iter().collect();
    ordered.sort_by_key(|p| (p.i, p.j));
    ordered
        .into_iter()
        .try_fold(rho.clone(), |acc, pair| evolve_pair(&acc, pair, dt))
}
