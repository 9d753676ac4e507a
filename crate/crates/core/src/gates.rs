//! Gate matrices, embedding into the scene register, and `ρ → UρU†`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SimError};
use crate::linalg::{c, is_unitary, CMatrix, ONE, ZERO};
use crate::state::{qubit_bit, DensityMatrix};

/// Unitarity tolerance enforced by [`apply_unitary`].
pub const APPLY_UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    I,
    X,
    Z,
    H,
    S,
    #[serde(rename = "CNOT")]
    Cnot,
}

impl Gate {
    pub const ALL: [Gate; 6] = [Gate::I, Gate::X, Gate::Z, Gate::H, Gate::S, Gate::Cnot];

    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::I => "I",
            Gate::X => "X",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::S => "S",
            Gate::Cnot => "CNOT",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gate {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Gate::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownGate(s.to_string()))
    }
}

/// A gate together with the qubits it acts on (control first for CNOT).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub gate: Gate,
    pub targets: Vec<usize>,
}

impl GateSpec {
    pub fn new(gate: Gate, targets: Vec<usize>) -> Self {
        Self { gate, targets }
    }

    pub fn single(gate: Gate, qubit: usize) -> Self {
        Self::new(gate, vec![qubit])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(Gate::Cnot, vec![control, target])
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.targets.len() != self.gate.arity() {
            return Err(contract(format!(
                "{} takes {} target(s), got {}",
                self.gate,
                self.gate.arity(),
                self.targets.len()
            )));
        }
        if let Some(&q) = self.targets.iter().find(|&&q| q >= n_qubits) {
            return Err(contract(format!("qubit {q} out of range for {n_qubits} qubits")));
        }
        if self.targets.len() == 2 && self.targets[0] == self.targets[1] {
            return Err(contract("CNOT control and target must differ"));
        }
        Ok(())
    }
}

pub fn gate_matrix(gate: Gate) -> CMatrix {
    let m = match gate {
        Gate::I => CMatrix::identity(2),
        Gate::X => CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]),
        Gate::Z => CMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]),
        Gate::H => CMatrix::from_real_rows(&[
            vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        ]),
        Gate::S => CMatrix::diag(&[ONE, c(0.0, 1.0)]),
        Gate::Cnot => CMatrix::from_real_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]),
    };
    m.expect("gate matrices are statically well-formed")
}

/// Lookup by name, e.g. `"H"` or `"cnot"`.
pub fn gate_matrix_by_name(name: &str) -> Result<CMatrix> {
    Ok(gate_matrix(name.parse()?))
}

/// Tensor product over `n_qubits` wires with the given 2×2 factors placed on
/// their qubits and identity everywhere else.
pub fn embed_factors(n_qubits: usize, factors: &[(usize, &CMatrix)]) -> Result<CMatrix> {
    if n_qubits == 0 {
        return Err(contract("register must hold at least one qubit"));
    }
    let id = CMatrix::identity(2)?;
    let wire = |q: usize| -> Result<&CMatrix> {
        let hits: Vec<&CMatrix> = factors.iter().filter(|(fq, _)| *fq == q).map(|(_, m)| *m).collect();
        match hits.as_slice() {
            [] => Ok(&id),
            [m] if m.dim() == 2 => Ok(m),
            [_] => Err(contract("embedded factor must be 2x2")),
            _ => Err(contract(format!("qubit {q} given more than one factor"))),
        }
    };
    if let Some((q, _)) = factors.iter().find(|(q, _)| *q >= n_qubits) {
        return Err(contract(format!("qubit {q} out of range for {n_qubits} qubits")));
    }
    let mut acc = wire(0)?.clone();
    for q in 1..n_qubits {
        acc = acc.kron(wire(q)?)?;
    }
    Ok(acc)
}

/// Places a 4×4 operator on qubits `(first, second)` of an `n`-qubit
/// register; `first` indexes the operator's more significant factor.
pub fn embed_two_qubit(op: &CMatrix, first: usize, second: usize, n_qubits: usize) -> Result<CMatrix> {
    if op.dim() != 4 {
        return Err(contract("two-qubit operator must be 4x4"));
    }
    if first == second || first >= n_qubits || second >= n_qubits {
        return Err(contract(format!(
            "invalid qubit pair ({first}, {second}) for {n_qubits} qubits"
        )));
    }
    let (bf, bs) = (qubit_bit(first, n_qubits), qubit_bit(second, n_qubits));
    let pair_mask = (1 << bf) | (1 << bs);
    let local = |idx: usize| (((idx >> bf) & 1) << 1) | ((idx >> bs) & 1);
    let dim = 1 << n_qubits;
    let mut out = CMatrix::zeros(dim)?;
    for r in 0..dim {
        for col in 0..dim {
            if r & !pair_mask == col & !pair_mask {
                out[(r, col)] = op[(local(r), local(col))];
            }
        }
    }
    Ok(out)
}

/// Full-register unitary for a gate spec.
///
/// CNOT is assembled as `|0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ X_t`, which handles any
/// control/target order without wire swaps.
pub fn embed_gate(spec: &GateSpec, n_qubits: usize) -> Result<CMatrix> {
    spec.validate(n_qubits)?;
    match spec.gate {
        Gate::Cnot => {
            let (ctl, tgt) = (spec.targets[0], spec.targets[1]);
            let p0 = CMatrix::diag(&[ONE, ZERO])?;
            let p1 = CMatrix::diag(&[ZERO, ONE])?;
            let x = gate_matrix(Gate::X);
            let off = embed_factors(n_qubits, &[(ctl, &p0)])?;
            let on = embed_factors(n_qubits, &[(ctl, &p1), (tgt, &x)])?;
            Ok(&off + &on)
        }
        g => embed_factors(n_qubits, &[(spec.targets[0], &gate_matrix(g))]),
    }
}

/// `ρ̃ = U ρ U†`. Refuses non-unitary `u` so norm corruption cannot slip in.
pub fn apply_unitary(rho: &DensityMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    if u.dim() != rho.dim() {
        return Err(contract(format!(
            "operator dim {} does not match state dim {}",
            u.dim(),
            rho.dim()
        )));
    }
    if !is_unitary(u, APPLY_UNITARY_TOL) {
        return Err(contract("operator is not unitary"));
    }
    conjugate(rho, u)
}

/// `U ρ U†` without the unitarity check; for callers that built `u` from
/// unitary parts themselves.
pub(crate) fn conjugate(rho: &DensityMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    let out = u.matmul(rho.matrix())?.matmul(&u.dagger())?;
    DensityMatrix::from_matrix(out)
}

pub fn apply_gate(rho: &DensityMatrix, spec: &GateSpec) -> Result<DensityMatrix> {
    apply_unitary(rho, &embed_gate(spec, rho.n_qubits())?)
}

/// CNOT(0 → 1) on a two-qubit state; `|+⟩⊗|0⟩` becomes `|Φ₊⟩`.
pub fn make_bell(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n_qubits() != 2 {
        return Err(contract("make_bell expects a two-qubit state"));
    }
    apply_gate(rho, &GateSpec::cnot(0, 1))
}
