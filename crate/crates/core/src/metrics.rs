//! Rényi-2 entropies, the pairwise entanglement parameter, and per-qubit
//! Bloch data for display.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SimError};
use crate::state::{bloch_from_density, partial_trace, BlochVector, DensityMatrix};

/// Negative entropies down to this value are rounding noise and clamp to 0.
const NEG_ENTROPY_TOL: f64 = 1e-9;

/// `Tr ρ² = Σ |ρ_kl|²` for hermitian ρ.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// `S₂(ρ) = −ln Tr ρ²`
pub fn renyi2(rho: &DensityMatrix) -> Result<f64> {
    let p = purity(rho);
    if !p.is_finite() || p <= 0.0 {
        return Err(SimError::Numeric(format!("purity {p} is not positive")));
    }
    let s = -p.ln();
    if s < -NEG_ENTROPY_TOL {
        return Err(SimError::Numeric(format!(
            "Rényi-2 entropy {s} is negative; purity {p} exceeds 1"
        )));
    }
    Ok(s.max(0.0))
}

/// `S̃ᵢⱼ = S₂(ρᵢ) + S₂(ρⱼ) − S₂(ρᵢⱼ)`, all reduced from the global state.
pub fn pairwise_entanglement(rho: &DensityMatrix, i: usize, j: usize) -> Result<f64> {
    let n = rho.n_qubits();
    if n < 2 || i >= j || j >= n {
        return Err(contract(format!("invalid pair ({i}, {j}) for {n} qubits")));
    }
    let s_i = renyi2(&partial_trace(rho, &[i])?)?;
    let s_j = renyi2(&partial_trace(rho, &[j])?)?;
    let s_ij = renyi2(&partial_trace(rho, &[i, j])?)?;
    Ok(s_i + s_j - s_ij)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub per_qubit_entropy: Vec<f64>,
    pub per_qubit_bloch: Vec<BlochVector>,
    /// Probability of reading 0 on each qubit.
    pub per_qubit_p0: Vec<f64>,
    /// Keyed by `(i, j)` with `i < j`.
    pub pair_parameters: BTreeMap<(usize, usize), f64>,
}

impl EntanglementReport {
    pub fn n_qubits(&self) -> usize {
        self.per_qubit_entropy.len()
    }

    pub fn radius(&self, qubit: usize) -> f64 {
        self.per_qubit_bloch[qubit].radius()
    }

    pub fn s_tilde(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pair_parameters.get(&key).copied().unwrap_or(0.0)
    }
}

pub fn build_report(rho: &DensityMatrix) -> Result<EntanglementReport> {
    let n = rho.n_qubits();
    let mut report = EntanglementReport {
        per_qubit_entropy: Vec::with_capacity(n),
        per_qubit_bloch: Vec::with_capacity(n),
        per_qubit_p0: Vec::with_capacity(n),
        pair_parameters: BTreeMap::new(),
    };
    for q in 0..n {
        let reduced = partial_trace(rho, &[q])?;
        report.per_qubit_entropy.push(renyi2(&reduced)?);
        report.per_qubit_bloch.push(bloch_from_density(&reduced)?);
        report.per_qubit_p0.push(reduced.population(0));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let s_ij = renyi2(&partial_trace(rho, &[i, j])?)?;
            let s = report.per_qubit_entropy[i] + report.per_qubit_entropy[j] - s_ij;
            report.pair_parameters.insert((i, j), s);
        }
    }
    Ok(report)
}
