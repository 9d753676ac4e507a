use std::f64::consts::{LN_2, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use qsandbox_core::exchange::{evolve_pair, heisenberg_two_spin};
use qsandbox_core::gates::{apply_gate, apply_unitary, embed_gate, gate_matrix};
use qsandbox_core::linalg::{c, expm, is_unitary, CMatrix, Ket, C64};
use qsandbox_core::metrics::{renyi2, build_report};
use qsandbox_core::state::{bloch_from_density, partial_trace, validate_density, DensityMatrix};
use qsandbox_core::{exchange_unitary, Gate, GateSpec, PairCoupling};

fn matrix_from(dim: usize, vals: &[f64]) -> CMatrix {
    let rows: Vec<Vec<C64>> = (0..dim)
        .map(|r| (0..dim).map(|k| c(vals[2 * (r * dim + k)], vals[2 * (r * dim + k) + 1])).collect())
        .collect();
    CMatrix::from_rows(&rows).unwrap()
}

fn arb_matrix(dim: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| matrix_from(dim, &v))
}

fn ket_from(dim: usize, vals: &[f64]) -> Option<Ket> {
    let amps: Vec<C64> = (0..dim).map(|k| c(vals[2 * k], vals[2 * k + 1])).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (norm > 1e-3).then(|| Ket::new(amps.iter().map(|z| z / norm).collect()).unwrap())
}

fn arb_pure(n: usize) -> impl Strategy<Value = DensityMatrix> {
    let dim = 1 << n;
    prop::collection::vec(-1.0f64..1.0, 2 * dim)
        .prop_filter_map("zero ket", move |v| ket_from(dim, &v))
        .prop_map(|k| DensityMatrix::from_ket(&k).unwrap())
}

/// Mixture of two random pure states.
fn arb_density(n: usize) -> impl Strategy<Value = DensityMatrix> {
    (arb_pure(n), arb_pure(n), 0.0f64..1.0).prop_map(|(a, b, w)| {
        let m = &a.matrix().scale_real(w) + &b.matrix().scale_real(1.0 - w);
        DensityMatrix::from_matrix(m).unwrap()
    })
}

fn arb_hermitian(dim: usize, max_norm: f64) -> impl Strategy<Value = CMatrix> {
    arb_matrix(dim).prop_map(move |m| {
        let h = (&m + &m.dagger()).scale_real(0.5);
        let norm = h.frobenius_norm();
        if norm > max_norm { h.scale_real(max_norm / norm) } else { h }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(2), m in arb_matrix(2)) {
        let left = a.kron(&b).unwrap().kron(&m).unwrap();
        let right = a.kron(&b.kron(&m).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn trace_is_cyclic(a in arb_matrix(4), b in arb_matrix(4)) {
        let ab = a.matmul(&b).unwrap().trace();
        let ba = b.matmul(&a).unwrap().trace();
        prop_assert!((ab - ba).norm() <= 1e-12);
    }

    #[test]
    fn dagger_reverses_products(va in prop::collection::vec(-4i32..4, 32), vb in prop::collection::vec(-4i32..4, 32)) {
        let to_f = |v: &[i32]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
        let a = matrix_from(4, &to_f(&va));
        let b = matrix_from(4, &to_f(&vb));
        prop_assert_eq!(a.matmul(&b).unwrap().dagger(), b.dagger().matmul(&a.dagger()).unwrap());
        prop_assert_eq!(a.dagger().dagger(), a);
    }

    #[test]
    fn expm_inverse_pair(h in arb_hermitian(4, 5.0), imaginary in any::<bool>()) {
        let tol = 1e-9;
        let a = if imaginary { h.scale(c(0.0, 1.0)) } else { h };
        let prod = expm(&a, tol).unwrap().matmul(&expm(&a.scale_real(-1.0), tol).unwrap()).unwrap();
        prop_assert!(prod.max_abs_diff(&CMatrix::identity(4).unwrap()) <= 10.0 * tol);
    }

    #[test]
    fn partial_trace_keeps_validity_and_is_linear(
        a in arb_density(3),
        b in arb_density(3),
        wa in 0.0f64..1.0,
        keep_mask in 1usize..7,
    ) {
        let keep: Vec<usize> = (0..3).filter(|q| keep_mask & (1 << q) != 0).collect();
        let reduced = partial_trace(&a, &keep).unwrap();
        prop_assert!(validate_density(&reduced, 1e-8).passed());

        let wb = 1.0 - wa;
        let mix = DensityMatrix::from_matrix(&a.matrix().scale_real(wa) + &b.matrix().scale_real(wb)).unwrap();
        let lhs = partial_trace(&mix, &keep).unwrap();
        let rhs = &partial_trace(&a, &keep).unwrap().matrix().scale_real(wa)
            + &partial_trace(&b, &keep).unwrap().matrix().scale_real(wb);
        prop_assert!(lhs.matrix().max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn self_inverse_gates(rho in arb_density(2), q in 0usize..2) {
        for g in [Gate::X, Gate::Z, Gate::H] {
            let spec = GateSpec::single(g, q);
            let twice = apply_gate(&apply_gate(&rho, &spec).unwrap(), &spec).unwrap();
            prop_assert!(twice.max_abs_diff(&rho) <= 1e-12);
        }
        let s = GateSpec::single(Gate::S, q);
        let mut four = rho.clone();
        for _ in 0..4 {
            four = apply_gate(&four, &s).unwrap();
        }
        prop_assert!(four.max_abs_diff(&rho) <= 1e-12);
    }

    #[test]
    fn pauli_actions_on_bloch_vector(rho in arb_pure(1)) {
        let b = bloch_from_density(&rho).unwrap();
        let z = bloch_from_density(&apply_unitary(&rho, &gate_matrix(Gate::Z)).unwrap()).unwrap();
        prop_assert!((z.u + b.u).abs() < 1e-9 && (z.v + b.v).abs() < 1e-9 && (z.w - b.w).abs() < 1e-9);
        let x = bloch_from_density(&apply_unitary(&rho, &gate_matrix(Gate::X)).unwrap()).unwrap();
        prop_assert!((x.u - b.u).abs() < 1e-9 && (x.v + b.v).abs() < 1e-9 && (x.w + b.w).abs() < 1e-9);
        prop_assert!((b.radius() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn local_gates_leave_other_factors_alone(
        a in arb_pure(1), b in arb_pure(1), m in arb_pure(1),
        q in 0usize..3, gate_idx in 0usize..5,
    ) {
        let gate = [Gate::I, Gate::X, Gate::Z, Gate::H, Gate::S][gate_idx];
        let rho = DensityMatrix::product(&[a, b, m]).unwrap();
        let after = apply_gate(&rho, &GateSpec::single(gate, q)).unwrap();
        let others: Vec<usize> = (0..3).filter(|&k| k != q).collect();
        for keep in [vec![others[0]], vec![others[1]], others.clone()] {
            let before = partial_trace(&rho, &keep).unwrap();
            let now = partial_trace(&after, &keep).unwrap();
            prop_assert!(before.max_abs_diff(&now) <= 1e-12);
        }
    }

    #[test]
    fn embedded_gates_unitary(ctl in 0usize..3, tgt in 0usize..3) {
        prop_assume!(ctl != tgt);
        prop_assert!(is_unitary(&embed_gate(&GateSpec::cnot(ctl, tgt), 3).unwrap(), 1e-10));
    }

    #[test]
    fn renyi_invariant_under_unitaries_on_traced_qubits(rho in arb_pure(2), g in arb_hermitian(2, 3.0)) {
        let u = expm(&g.scale(c(0.0, -1.0)), 1e-12).unwrap();
        let local = CMatrix::identity(2).unwrap().kron(&u).unwrap();
        let rotated = apply_unitary(&rho, &local).unwrap();
        let before = renyi2(&partial_trace(&rho, &[0]).unwrap()).unwrap();
        let after = renyi2(&partial_trace(&rotated, &[0]).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn entropy_bounds_and_radius_link(rho in arb_pure(2), j in 0.05f64..2.0, t in 0.0f64..10.0) {
        let pair = PairCoupling { i: 0, j: 1, j_strength: j, delta_r: 0.0 };
        let evolved = if t > 0.0 { evolve_pair(&rho, &pair, t).unwrap() } else { rho };
        let report = build_report(&evolved).unwrap();
        for q in 0..2 {
            let s = report.per_qubit_entropy[q];
            prop_assert!((0.0..=LN_2 + 1e-9).contains(&s));
            let r = report.radius(q);
            prop_assert!((s + ((1.0 + r * r) / 2.0).ln()).abs() < 1e-8);
        }
    }
}

#[test]
fn exchange_unitary_always_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let t = rng.random_range(0.0..100.0);
        let j = rng.random_range(0.0..5.0);
        assert!(is_unitary(&exchange_unitary(t, j), 1e-10), "t={t} J={j}");
    }
}

#[test]
fn heisenberg_is_exactly_hermitian() {
    for j in [0.1, 1.0, 3.7] {
        assert_eq!(heisenberg_two_spin(j).hermiticity_violation(), 0.0);
    }
}

#[test]
fn anti_aligned_pair_returns_after_one_period() {
    for (start, j) in [(0b01, 1.0), (0b10, 0.7), (0b01, 2.3)] {
        let rho = DensityMatrix::basis(2, start).unwrap();
        let steps = 1000;
        let dt = 2.0 * PI / j / steps as f64;
        let pair = PairCoupling { i: 0, j: 1, j_strength: j, delta_r: 0.0 };
        let mut state = rho.clone();
        for _ in 0..steps {
            state = evolve_pair(&state, &pair, dt).unwrap();
        }
        assert!(state.max_abs_diff(&rho) < 1e-8, "start {start:02b} J {j}");
    }
}

#[test]
fn maximal_entanglement_at_quarter_period() {
    for j in [0.4, 1.0, 3.0] {
        let pair = PairCoupling { i: 0, j: 1, j_strength: j, delta_r: 0.0 };
        let state = evolve_pair(&DensityMatrix::basis(2, 0b01).unwrap(), &pair, PI / (2.0 * j)).unwrap();
        let reduced = partial_trace(&state, &[0]).unwrap();
        let half = DensityMatrix::from_matrix(CMatrix::diag(&[c(0.5, 0.0), c(0.5, 0.0)]).unwrap()).unwrap();
        assert!(reduced.max_abs_diff(&half) < 1e-8);
        assert!((renyi2(&reduced).unwrap() - LN_2).abs() < 1e-6);
    }
}

#[test]
fn stepping_matches_single_closed_form_application() {
    let j = 0.85;
    let (k, dt) = (500, 0.013);
    let pair = PairCoupling { i: 0, j: 1, j_strength: j, delta_r: 0.0 };
    let start = DensityMatrix::from_ket(&Ket::new(vec![c(0.1, 0.2), c(0.5, -0.3), c(0.0, 0.6), c(-0.4, 0.3)]).unwrap().normalized()).unwrap();
    let mut stepped = start.clone();
    for _ in 0..k {
        stepped = evolve_pair(&stepped, &pair, dt).unwrap();
    }
    let once = evolve_pair(&start, &pair, k as f64 * dt).unwrap();
    assert!(stepped.max_abs_diff(&once) < 1e-9);
}

trait Normalize {
    fn normalized(self) -> Ket;
}

impl Normalize for Ket {
    fn normalized(self) -> Ket {
        let norm = self.amplitudes().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ket::new(self.amplitudes().iter().map(|z| z / norm).collect()).unwrap()
    }
}
