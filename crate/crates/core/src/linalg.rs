//! Dense complex linear algebra for operators on at most three qubits.
//!
//! Everything here works on square matrices whose dimension is 2, 4 or 8,
//! stored row-major. Sizes are tiny, so the routines favour clarity and
//! exactness over blocking or SIMD tricks.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SimError};

pub type C64 = Complex64;

/// Largest supported operator dimension (three qubits).
pub const MAX_DIM: usize = 8;

/// Default tolerance of the structural predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Upper bound on Taylor terms evaluated by [`expm`].
const EXPM_MAX_TERMS: usize = 64;

/// Scaled norm that [`expm`] squares down to before summing the series.
const EXPM_SCALED_NORM: f64 = 0.5;

pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) const ZERO: C64 = c(0.0, 0.0);
pub(crate) const ONE: C64 = c(1.0, 0.0);

fn check_dim(dim: usize) -> Result<()> {
    if matches!(dim, 2 | 4 | 8) {
        Ok(())
    } else {
        Err(contract(format!("matrix dimension {dim} not in {{2, 4, 8}}")))
    }
}

/// Square complex matrix of dimension 2, 4 or 8.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(contract("ragged or non-square rows"));
        }
        let data: Vec<C64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SimError::Numeric("non-finite matrix entry".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(entries: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(entries.len())?;
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        Ok(m)
    }

    /// `|ket⟩⟨ket|`
    pub fn outer(ket: &Ket) -> Result<Self> {
        let dim = ket.len();
        let mut m = Self::zeros(dim)?;
        for r in 0..dim {
            for col in 0..dim {
                m[(r, col)] = ket[r] * ket[col].conj();
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits the operator acts on.
    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.dim != other.dim {
            return Err(contract(format!(
                "matmul dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(CMatrix { dim: n, data: out })
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for col in 0..n {
                data[col * n + r] = self.data[r * n + col].conj();
            }
        }
        CMatrix { dim: n, data }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> CMatrix {
        self.scale(c(factor, 0.0))
    }

    /// Kronecker product with `self` as the left (more significant) factor.
    pub fn kron(&self, other: &CMatrix) -> Result<CMatrix> {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        if dim > MAX_DIM {
            return Err(contract(format!("tensor product dimension {dim} exceeds {MAX_DIM}")));
        }
        let mut out = CMatrix::zeros(dim)?;
        for r1 in 0..n {
            for c1 in 0..n {
                let a = self[(r1, c1)];
                if a == ZERO {
                    continue;
                }
                for r2 in 0..m {
                    for c2 in 0..m {
                        out[(r1 * m + r2, c1 * m + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise modulus of `self - self†`.
    pub fn hermiticity_violation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for r in 0..n {
            for col in r..n {
                worst = worst.max((self[(r, col)] - self[(col, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_violation() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigenvalues of the hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let herm = DMatrix::from_fn(n, n, |r, col| (self[(r, col)] + self[(col, r)].conj()) * 0.5);
        let mut eig: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, col): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + col]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + col]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix add dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sub dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    /// Panics on dimension mismatch; use [`CMatrix::matmul`] for the checked form.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Wire form: nested rows of `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct MatrixRepr(Vec<Vec<[f64; 2]>>);

impl From<CMatrix> for MatrixRepr {
    fn from(m: CMatrix) -> Self {
        MatrixRepr(
            m.data
                .chunks(m.dim)
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        )
    }
}

impl TryFrom<MatrixRepr> for CMatrix {
    type Error = SimError;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        let rows: Vec<Vec<C64>> = repr
            .0
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| c(re, im)).collect())
            .collect();
        CMatrix::from_rows(&rows)
    }
}

/// Column state vector of length 2, 4 or 8.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket(Vec<C64>);

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        Ok(Ket(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(contract(format!("basis index {index} out of range for dim {dim}")));
        }
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Ok(Ket(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    /// `(α, β) ⊗ (γ, δ) = (αγ, αδ, βγ, βδ)`
    pub fn kron(&self, other: &Ket) -> Result<Ket> {
        let out: Vec<C64> = self
            .0
            .iter()
            .flat_map(|&a| other.0.iter().map(move |&b| a * b))
            .collect();
        if out.len() > MAX_DIM {
            return Err(contract(format!(
                "tensor product dimension {} exceeds {MAX_DIM}",
                out.len()
            )));
        }
        Ok(Ket(out))
    }

    pub fn apply(&self, op: &CMatrix) -> Result<Ket> {
        if op.dim() != self.len() {
            return Err(contract("operator and ket dimensions differ"));
        }
        let n = self.len();
        Ok(Ket((0..n)
            .map(|r| (0..n).map(|k| op[(r, k)] * self.0[k]).sum())
            .collect()))
    }
}

impl Index<usize> for Ket {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

/// `true` iff `max |U·U† − I| <= tol` elementwise.
pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    let Ok(id) = CMatrix::identity(u.dim()) else {
        return false;
    };
    match u.matmul(&u.dagger()) {
        Ok(prod) => prod.max_abs_diff(&id) <= tol,
        Err(_) => false,
    }
}

/// Matrix exponential by scaling and squaring a truncated Taylor series.
///
/// `a` is scaled by `2^-s` until its Frobenius norm is at most 0.5, the
/// series is summed until the bound on the next term drops below
/// `tol / (dim · 2^s)`, and the result is squared `s` times. The extra
/// `2^s` factor keeps the truncation error below `tol` after squaring.
pub fn expm(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(contract(format!("expm tolerance must be positive, got {tol}")));
    }
    let norm = a.frobenius_norm();
    if !norm.is_finite() {
        return Err(SimError::Numeric("expm input is not finite".into()));
    }

    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > EXPM_SCALED_NORM {
        squarings += 1;
    }
    let factor = 2f64.powi(squarings as i32);
    let scaled = a.scale_real(1.0 / factor);
    let scaled_norm = norm / factor;
    let term_tol = tol / (a.dim() as f64 * factor);

    let mut sum = CMatrix::identity(a.dim())?;
    let mut term = sum.clone();
    let mut converged = scaled_norm == 0.0;
    for k in 1..=EXPM_MAX_TERMS {
        if converged {
            break;
        }
        term = term.matmul(&scaled)?.scale_real(1.0 / k as f64);
        sum = &sum + &term;
        let next_bound = term.frobenius_norm() * scaled_norm / (k + 1) as f64;
        if next_bound < term_tol {
            converged = true;
        }
    }
    if !converged {
        return Err(SimError::Numeric(format!(
            "expm series did not reach tolerance {tol} within {EXPM_MAX_TERMS} terms"
        )));
    }

    for _ in 0..squarings {
        sum = sum.matmul(&sum)?;
    }
    Ok(sum)
}
