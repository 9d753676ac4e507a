//! Qubit state representations: pure states, density matrices, Bloch vectors.
//!
//! Qubit 0 is always the leftmost (most significant) tensor factor, so in a
//! basis index of an `n`-qubit operator qubit `q` lives at bit `n - 1 - q`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SimError};
use crate::linalg::{c, CMatrix, Ket, C64, ZERO};

/// Largest number of qubits a density matrix may hold.
pub const MAX_QUBITS: usize = 3;

const NORM_TOL: f64 = 1e-9;

/// Imaginary residue tolerated (and dropped) in Bloch components.
const BLOCH_IMAG_TOL: f64 = 1e-9;

/// Bit of basis index that encodes `qubit` in an `n`-qubit register.
#[inline]
pub(crate) fn qubit_bit(qubit: usize, n_qubits: usize) -> usize {
    n_qubits - 1 - qubit
}

/// Polar angles on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    /// `theta` must lie in `[0, π]` and `phi` in `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(contract(format!("theta {theta} outside [0, π]")));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(contract(format!("phi {phi} outside [0, 2π)")));
        }
        Ok(Self { theta, phi })
    }

    pub fn zero() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn one() -> Self {
        Self { theta: PI, phi: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.theta, self.phi).map(|_| ())
    }
}

/// Normalized single-qubit pure state `α|0⟩ + β|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    alpha: C64,
    beta: C64,
}

impl PureState {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(contract(format!("|α|² + |β|² = {norm}, expected 1")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn ket(&self) -> Ket {
        Ket::new(vec![self.alpha, self.beta]).expect("dimension 2 is always valid")
    }
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`
pub fn state_from_angles(angles: BlochAngles) -> Result<PureState> {
    angles.validate()?;
    let half = angles.theta / 2.0;
    Ok(PureState {
        alpha: c(half.cos(), 0.0),
        beta: C64::from_polar(half.sin(), angles.phi),
    })
}

/// Density matrix over one to three qubits.
///
/// Construction only checks the shape. Use [`validate_density`] to check
/// trace, hermiticity and positivity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let n_qubits = mat.n_qubits();
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(contract(format!("{n_qubits} qubits outside 1..={MAX_QUBITS}")));
        }
        Ok(Self { n_qubits, mat })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        density_from_state(psi)
    }

    /// `|ψ⟩⟨ψ|` for a normalized multi-qubit ket.
    pub fn from_ket(ket: &Ket) -> Result<Self> {
        let norm: f64 = ket.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(contract(format!("ket norm² {norm}, expected 1")));
        }
        Self::from_matrix(CMatrix::outer(ket)?)
    }

    /// Computational basis projector `|index⟩⟨index|`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        Self::from_ket(&Ket::basis(1 << n_qubits, index)?)
    }

    /// Tensor product `self ⊗ other`; `other` is appended on the right.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        Self::from_matrix(self.mat.kron(&other.mat)?)
    }

    /// Tensor product of single-qubit states, first state leftmost.
    pub fn product(states: &[DensityMatrix]) -> Result<Self> {
        let (first, rest) = states
            .split_first()
            .ok_or_else(|| contract("product of zero states"))?;
        rest.iter().try_fold(first.clone(), |acc, s| acc.tensor(s))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Real part of the diagonal entry `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.mat[(index, index)].re
    }

    /// Elementwise distance to another state of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }
}

/// `ρ = |ψ⟩⟨ψ|`
pub fn density_from_state(psi: &PureState) -> DensityMatrix {
    let mat = CMatrix::outer(&psi.ket()).expect("dimension 2 is always valid");
    DensityMatrix { n_qubits: 1, mat }
}

/// Cartesian Bloch coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochVector {
    pub fn new(u: f64, v: f64, w: f64) -> Self {
        Self { u, v, w }
    }

    pub fn radius(&self) -> f64 {
        bloch_radius(self)
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        ((self.u - other.u).powi(2) + (self.v - other.v).powi(2) + (self.w - other.w).powi(2))
            .sqrt()
    }
}

/// `u = ρ₀₁ + ρ₁₀`, `v = i(ρ₀₁ − ρ₁₀) = 2 Im ρ₁₀`, `w = ρ₀₀ − ρ₁₁`.
///
/// With this sign of `v` the S gate rotates +X onto +Y. Imaginary residue up
/// to 1e-9 is dropped; anything larger means the input lost hermiticity.
pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.n_qubits != 1 {
        return Err(contract(format!(
            "Bloch vector needs a single-qubit state, got {} qubits",
            rho.n_qubits
        )));
    }
    let m = &rho.mat;
    let (r00, r01, r10, r11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let u = r01 + r10;
    let v = c(0.0, 1.0) * (r01 - r10);
    let w = r00 - r11;
    for (name, z) in [("u", u), ("v", v), ("w", w)] {
        if z.im.abs() > BLOCH_IMAG_TOL || !z.re.is_finite() {
            return Err(SimError::Numeric(format!(
                "Bloch component {name} = {z} is not real; state is not hermitian"
            )));
        }
    }
    Ok(BlochVector::new(u.re, v.re, w.re))
}

pub fn bloch_radius(b: &BlochVector) -> f64 {
    (b.u * b.u + b.v * b.v + b.w * b.w).sqrt()
}

/// Reduced density matrix over the qubits in `keep` (strictly increasing).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits;
    if keep.is_empty() {
        return Err(contract("partial trace must keep at least one qubit"));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(contract(format!("kept qubits {keep:?} not strictly increasing")));
    }
    if let Some(&q) = keep.iter().find(|&&q| q >= n) {
        return Err(contract(format!("qubit {q} out of range for {n} qubits")));
    }
    if keep.len() == n {
        return Ok(rho.clone());
    }

    let k = keep.len();
    let kept_mask: usize = keep.iter().map(|&q| 1 << qubit_bit(q, n)).sum();
    // Maps a full basis index to its index in the kept subsystem.
    let reduce = |idx: usize| -> usize {
        keep.iter()
            .fold(0, |acc, &q| (acc << 1) | ((idx >> qubit_bit(q, n)) & 1))
    };

    let dim = rho.dim();
    let mut out = CMatrix::zeros(1 << k)?;
    for r in 0..dim {
        for col in 0..dim {
            if (r & !kept_mask) != (col & !kept_mask) {
                continue;
            }
            let z = rho.mat[(r, col)];
            if z != ZERO {
                out[(reduce(r), reduce(col))] += z;
            }
        }
    }
    DensityMatrix::from_matrix(out)
}

/// Diagnostics from [`validate_density`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityReport {
    /// `|Tr ρ − 1|`
    pub trace_deviation: f64,
    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub hermiticity_violation: f64,
    pub min_eigenvalue: f64,
    pub tol: f64,
}

impl DensityReport {
    pub fn passed(&self) -> bool {
        self.trace_deviation <= self.tol
            && self.hermiticity_violation <= self.tol
            && self.min_eigenvalue >= -self.tol
    }

    pub fn describe(&self) -> String {
        format!(
            "trace deviation {:.3e}, hermiticity violation {:.3e}, min eigenvalue {:.3e} (tol {:.1e})",
            self.trace_deviation, self.hermiticity_violation, self.min_eigenvalue, self.tol
        )
    }
}

pub fn validate_density(rho: &DensityMatrix, tol: f64) -> DensityReport {
    let finite = rho.mat.is_finite();
    let trace = rho.mat.trace();
    DensityReport {
        trace_deviation: if finite { (trace - 1.0).norm() } else { f64::INFINITY },
        hermiticity_violation: if finite {
            rho.mat.hermiticity_violation()
        } else {
            f64::INFINITY
        },
        min_eigenvalue: if finite {
            rho.mat.hermitian_eigenvalues()[0]
        } else {
            f64::NEG_INFINITY
        },
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn real_diag(d: &[f64]) -> DensityMatrix {
        let entries: Vec<C64> = d.iter().map(|&x| c(x, 0.0)).collect();
        DensityMatrix::from_matrix(CMatrix::diag(&entries).unwrap()).unwrap()
    }

    #[test]
    fn angles_reject_out_of_range() {
        assert!(BlochAngles::new(-0.1, 0.0).is_err());
        assert!(BlochAngles::new(PI + 1e-6, 0.0).is_err());
        assert!(BlochAngles::new(0.0, TAU).is_err());
        assert!(BlochAngles::new(PI, 0.0).is_ok());
        let bad = BlochAngles { theta: 4.0, phi: 0.0 };
        assert!(state_from_angles(bad).is_err());
    }

    #[test]
    fn poles_and_plus_state() {
        let zero = state_from_angles(BlochAngles::zero()).unwrap();
        assert_eq!((zero.alpha(), zero.beta()), (c(1.0, 0.0), ZERO));
        let one = state_from_angles(BlochAngles::one()).unwrap();
        assert!(one.alpha().norm() < 1e-16);
        assert!((one.beta() - c(1.0, 0.0)).norm() < 1e-16);
        let plus = state_from_angles(BlochAngles::new(FRAC_PI_2, 0.0).unwrap()).unwrap();
        assert!((plus.alpha().re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((plus.beta().re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn pure_state_requires_normalization() {
        assert!(PureState::new(c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn density_matrix_explicit_form() {
        let zero = density_from_state(&state_from_angles(BlochAngles::zero()).unwrap());
        assert_eq!(zero, real_diag(&[1.0, 0.0]));

        let (theta, phi) = (1.1, 2.3);
        let rho = density_from_state(&state_from_angles(BlochAngles::new(theta, phi).unwrap()).unwrap());
        let m = rho.matrix();
        assert!((m[(0, 0)].re - (theta / 2.0).cos().powi(2)).abs() < 1e-15);
        assert!((m[(1, 1)].re - (theta / 2.0).sin().powi(2)).abs() < 1e-15);
        assert!((m[(0, 1)] - C64::from_polar(0.5 * theta.sin(), -phi)).norm() < 1e-15);
        assert!((m[(1, 0)] - C64::from_polar(0.5 * theta.sin(), phi)).norm() < 1e-15);

        let plus = density_from_state(&state_from_angles(BlochAngles::new(FRAC_PI_2, 0.0).unwrap()).unwrap());
        for z in plus.matrix().as_slice() {
            assert!((z - c(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn bloch_examples() {
        assert_eq!(bloch_from_density(&real_diag(&[1.0, 0.0])).unwrap(), BlochVector::new(0.0, 0.0, 1.0));
        let plus = DensityMatrix::from_ket(&Ket::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()).unwrap();
        let b = bloch_from_density(&plus).unwrap();
        assert!(b.distance(&BlochVector::new(1.0, 0.0, 0.0)) < 1e-15);
        assert_eq!(bloch_from_density(&real_diag(&[0.5, 0.5])).unwrap(), BlochVector::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn bloch_v_sign_convention() {
        // (|0⟩ + i|1⟩)/√2 sits on +Y.
        let ket = Ket::new(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]).unwrap();
        let b = bloch_from_density(&DensityMatrix::from_ket(&ket).unwrap()).unwrap();
        assert!(b.distance(&BlochVector::new(0.0, 1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn bloch_rejects_multi_qubit_and_non_hermitian() {
        assert!(matches!(
            bloch_from_density(&DensityMatrix::basis(2, 0).unwrap()),
            Err(SimError::Contract(_))
        ));
        let bad = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.3), ZERO]]).unwrap();
        assert!(matches!(
            bloch_from_density(&DensityMatrix::from_matrix(bad).unwrap()),
            Err(SimError::Numeric(_))
        ));
    }

    #[test]
    fn radius_examples() {
        assert_eq!(bloch_radius(&BlochVector::new(0.0, 0.0, 1.0)), 1.0);
        assert_eq!(bloch_radius(&BlochVector::new(0.0, 0.0, 0.0)), 0.0);
        assert!((bloch_radius(&BlochVector::new(0.6, 0.0, 0.8)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn angle_round_trip_grid() {
        for i in 0..10 {
            for j in 0..10 {
                let theta = PI * i as f64 / 9.0;
                let phi = TAU * j as f64 / 10.0;
                let rho = density_from_state(&state_from_angles(BlochAngles::new(theta, phi).unwrap()).unwrap());
                let b = bloch_from_density(&rho).unwrap();
                let want = BlochVector::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
                assert!(b.distance(&want) < 1e-9, "theta {theta} phi {phi}");
                assert!((b.radius() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn partial_trace_product_recovery() {
        let a = density_from_state(&state_from_angles(BlochAngles::new(0.7, 1.9).unwrap()).unwrap());
        let b = density_from_state(&state_from_angles(BlochAngles::new(2.1, 4.4).unwrap()).unwrap());
        let ab = a.tensor(&b).unwrap();
        assert!(partial_trace(&ab, &[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(partial_trace(&ab, &[1]).unwrap().max_abs_diff(&b) < 1e-15);
        assert_eq!(partial_trace(&ab, &[0, 1]).unwrap(), ab);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let phi_plus = DensityMatrix::from_ket(&Ket::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()).unwrap();
        // Brute force: (ρ_A)_{ab} = Σ_k ρ_{(a,k),(b,k)}
        let m = phi_plus.matrix();
        for a in 0..2 {
            for b in 0..2 {
                let brute: C64 = (0..2).map(|k| m[(2 * a + k, 2 * b + k)]).sum();
                let got = partial_trace(&phi_plus, &[0]).unwrap().matrix()[(a, b)];
                assert!((got - brute).norm() < 1e-15);
            }
        }
        assert!(partial_trace(&phi_plus, &[0]).unwrap().max_abs_diff(&real_diag(&[0.5, 0.5])) < 1e-15);
        assert!(partial_trace(&phi_plus, &[1]).unwrap().max_abs_diff(&real_diag(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn partial_trace_three_qubit_subsets() {
        let states: Vec<DensityMatrix> = [(0.3, 0.2), (1.2, 3.0), (2.8, 5.5)]
            .iter()
            .map(|&(t, p)| density_from_state(&state_from_angles(BlochAngles::new(t, p).unwrap()).unwrap()))
            .collect();
        let full = DensityMatrix::product(&states).unwrap();
        let pair02 = states[0].tensor(&states[2]).unwrap();
        assert!(partial_trace(&full, &[0, 2]).unwrap().max_abs_diff(&pair02) < 1e-15);
        for (q, single) in states.iter().enumerate() {
            assert!(partial_trace(&full, &[q]).unwrap().max_abs_diff(single) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_index_sets() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[1, 0]).is_err());
        assert!(partial_trace(&rho, &[0, 0]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
    }

    #[test]
    fn validate_examples() {
        assert!(validate_density(&real_diag(&[1.0, 0.0]), 1e-9).passed());
        let heavy = validate_density(&real_diag(&[0.6, 0.6]), 1e-9);
        assert!(!heavy.passed());
        assert!((heavy.trace_deviation - 0.2).abs() < 1e-12);
        let skew = CMatrix::from_real_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap();
        let rep = validate_density(&DensityMatrix::from_matrix(skew).unwrap(), 1e-9);
        assert!(!rep.passed());
        assert_eq!(rep.hermiticity_violation, 1.0);
        let negative = validate_density(&real_diag(&[1.5, -0.5]), 1e-9);
        assert!(!negative.passed());
        assert!((negative.min_eigenvalue + 0.5).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_has_zero_radius() {
        let b = bloch_from_density(&real_diag(&[0.5, 0.5])).unwrap();
        assert_eq!(b.radius(), 0.0);
    }
}
