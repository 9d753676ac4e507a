//! Single-qubit z-basis projective measurement with seeded collapse.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SimError};
use crate::gates::embed_factors;
use crate::linalg::{CMatrix, ONE, ZERO};
use crate::state::{qubit_bit, DensityMatrix};

/// Probability above which an outcome is taken as certain.
pub const FORCED_OUTCOME_THRESHOLD: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub qubit: usize,
    /// 0 or 1.
    pub s: u8,
    pub p0: f64,
    pub p1: f64,
    pub rng_draw: f64,
}

/// `Π_z(s) = (I + (−1)^s σ_z) / 2`
pub fn projector_z(s: u8) -> Result<CMatrix> {
    match s {
        0 => CMatrix::diag(&[ONE, ZERO]),
        1 => CMatrix::diag(&[ZERO, ONE]),
        _ => Err(contract(format!("measurement outcome must be 0 or 1, got {s}"))),
    }
}

/// `(P₀, P₁)` for measuring `qubit`, i.e. the diagonal of its reduced state.
pub fn outcome_probabilities(rho: &DensityMatrix, qubit: usize) -> Result<(f64, f64)> {
    let n = rho.n_qubits();
    if qubit >= n {
        return Err(contract(format!("qubit {qubit} out of range for {n} qubits")));
    }
    let bit = qubit_bit(qubit, n);
    let (mut p0, mut p1) = (0.0, 0.0);
    for idx in 0..rho.dim() {
        if (idx >> bit) & 1 == 0 {
            p0 += rho.population(idx);
        } else {
            p1 += rho.population(idx);
        }
    }
    Ok((p0, p1))
}

/// Collapse `qubit` using an explicit uniform draw in `[0, 1)`.
///
/// Outcome 0 iff `draw < p0`, unless one outcome has probability at least
/// [`FORCED_OUTCOME_THRESHOLD`]. The post-state is `Π ρ Π / p_s` with `Π`
/// the projector embedded on `qubit`.
pub fn collapse_with_draw(
    rho: &DensityMatrix,
    qubit: usize,
    draw: f64,
) -> Result<(MeasurementOutcome, DensityMatrix)> {
    if !(0.0..1.0).contains(&draw) {
        return Err(contract(format!("draw {draw} outside [0, 1)")));
    }
    let (p0, p1) = outcome_probabilities(rho, qubit)?;
    let s: u8 = if p0 >= FORCED_OUTCOME_THRESHOLD {
        0
    } else if p1 >= FORCED_OUTCOME_THRESHOLD {
        1
    } else if draw < p0 {
        0
    } else {
        1
    };
    let p_s = if s == 0 { p0 } else { p1 };
    if !p_s.is_finite() || p_s <= 0.0 {
        return Err(SimError::Numeric(format!(
            "cannot renormalize outcome {s} of qubit {qubit}: probability {p_s}"
        )));
    }

    let proj = embed_factors(rho.n_qubits(), &[(qubit, &projector_z(s)?)])?;
    let projected = proj.matmul(rho.matrix())?.matmul(&proj)?;
    let post = DensityMatrix::from_matrix(projected.scale_real(1.0 / p_s))?;
    let outcome = MeasurementOutcome {
        qubit,
        s,
        p0,
        p1,
        rng_draw: draw,
    };
    Ok((outcome, post))
}

/// Draws one uniform number from `rng` and collapses `qubit` with it.
pub fn measure_collapse<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    qubit: usize,
    rng: &mut R,
) -> Result<(MeasurementOutcome, DensityMatrix)> {
    let draw: f64 = rng.random();
    collapse_with_draw(rho, qubit, draw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Ket;
    use crate::metrics::pairwise_entanglement;
    use crate::state::{partial_trace, validate_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn plus() -> DensityMatrix {
        DensityMatrix::from_ket(&Ket::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()).unwrap()
    }

    fn bell() -> DensityMatrix {
        DensityMatrix::from_ket(&Ket::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()).unwrap()
    }

    #[test]
    fn projectors() {
        let p0 = projector_z(0).unwrap();
        let p1 = projector_z(1).unwrap();
        assert_eq!(p0, CMatrix::diag(&[ONE, ZERO]).unwrap());
        assert_eq!(p1, CMatrix::diag(&[ZERO, ONE]).unwrap());
        assert_eq!(&p0 + &p1, CMatrix::identity(2).unwrap());
        assert_eq!(p0.matmul(&p0).unwrap(), p0);
        assert_eq!(p1.matmul(&p1).unwrap(), p1);
        assert!(projector_z(2).is_err());
    }

    #[test]
    fn probabilities() {
        assert_eq!(outcome_probabilities(&DensityMatrix::basis(1, 0).unwrap(), 0).unwrap(), (1.0, 0.0));
        let (a, b) = outcome_probabilities(&plus(), 0).unwrap();
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        let (a, b) = outcome_probabilities(&bell(), 0).unwrap();
        let reduced = partial_trace(&bell(), &[0]).unwrap();
        assert!((a - reduced.population(0)).abs() < 1e-15);
        assert!((b - reduced.population(1)).abs() < 1e-15);
        assert!((a - 0.5).abs() < 1e-15);
        assert!(outcome_probabilities(&bell(), 2).is_err());
    }

    #[test]
    fn forced_outcome_leaves_basis_state_alone() {
        let one = DensityMatrix::basis(1, 1).unwrap();
        for draw in [0.0, 0.3, 0.999] {
            let (out, post) = collapse_with_draw(&one, 0, draw).unwrap();
            assert_eq!(out.s, 1);
            assert_eq!(post, one);
        }
    }

    #[test]
    fn plus_state_collapses_to_zero_on_low_draw() {
        let (out, post) = collapse_with_draw(&plus(), 0, 0.3).unwrap();
        assert_eq!(out.s, 0);
        assert!(post.max_abs_diff(&DensityMatrix::basis(1, 0).unwrap()) < 1e-15);
        // Tie rule is strict: draw == p0 selects outcome 1.
        let (out, _) = collapse_with_draw(&plus(), 0, out.p0).unwrap();
        assert_eq!(out.s, 1);
    }

    #[test]
    fn bell_collapse_breaks_entanglement() {
        let (out, post) = collapse_with_draw(&bell(), 0, 0.7).unwrap();
        assert_eq!(out.s, 1);
        let want = DensityMatrix::basis(2, 0b11).unwrap();
        assert!(post.max_abs_diff(&want) < 1e-15);
        assert!(validate_density(&post, 1e-8).passed());
        assert!(pairwise_entanglement(&post, 0, 1).unwrap().abs() < 1e-6);
    }

    #[test]
    fn draw_must_be_unit_interval() {
        assert!(collapse_with_draw(&plus(), 0, 1.0).is_err());
        assert!(collapse_with_draw(&plus(), 0, -0.1).is_err());
    }

    #[test]
    fn repeated_measurement_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (first, post) = measure_collapse(&bell(), 1, &mut rng).unwrap();
            let (second, again) = measure_collapse(&post, 1, &mut rng).unwrap();
            assert_eq!(first.s, second.s);
            assert!(again.max_abs_diff(&post) < 1e-10);
            assert!((again.matrix().trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn collapsed_qubit_is_in_basis_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = bell().tensor(&plus()).unwrap();
        for q in 0..3 {
            let (out, post) = measure_collapse(&rho, q, &mut rng).unwrap();
            let reduced = partial_trace(&post, &[q]).unwrap();
            let want = DensityMatrix::basis(1, out.s as usize).unwrap();
            assert!(reduced.max_abs_diff(&want) < 1e-8);
            assert!(validate_density(&post, 1e-8).passed());
        }
    }
}
