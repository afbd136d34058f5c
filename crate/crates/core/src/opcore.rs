//! Dense complex linear algebra over small qubit registers.
//!
//! Everything here works on `2^n x 2^n` matrices with `n` at most four or
//! so. Multi-qubit operators are ordered control-first: the basis of a
//! control/target pair is `|00>, |01>, |10>, |11>` with the control bit
//! most significant.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::Mul;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const UNITARY_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

/// A dense square complex matrix acting on `dim = 2^n` basis states.
#[derive(Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() < 2 || !m.nrows().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(m.nrows()));
        }
        Ok(Operator { m })
    }

    /// Builds an operator from row-major entries. Panics if `rows` is not a
    /// square power-of-two table; meant for literal gate definitions.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(m).expect("gate literal must be square with power-of-two size")
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim)).expect("identity dim must be a power of two")
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(dim, dim)).expect("zero dim must be a power of two")
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
            .expect("diagonal length must be a power of two")
    }

    pub fn real_diagonal(entries: &[f64]) -> Self {
        let d: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diagonal(&d)
    }

    /// `|v><v|` for a state vector `v`.
    pub fn projector(v: &DVector<C64>) -> Self {
        Self::from_matrix(v * v.adjoint()).expect("state length must be a power of two")
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Number of qubits spanned.
    pub fn qubits(&self) -> u32 {
        self.dim().trailing_zeros()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Operator { m: self.m.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator { m: &self.m * s }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Operator { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Operator { m: &self.m - &other.m })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Operator { m: &self.m * &other.m })
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        check_dims(self.dim(), v.len())?;
        Ok(&self.m * v)
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(max_abs(&(&self.m - &other.m)))
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.m - self.m.adjoint()))
    }

    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        max_abs(&(&self.m * self.m.adjoint() - DMatrix::identity(n, n)))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= UNITARY_TOL
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `U^p` by repeated squaring.
    pub fn pow(&self, mut p: usize) -> Self {
        let mut base = self.clone();
        let mut acc = Operator::identity(self.dim());
        while p > 0 {
            if p & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            p >>= 1;
        }
        acc
    }
}

impl Mul for &Operator {
    type Output = Operator;

    /// Panics on dimension mismatch; use [`Operator::try_mul`] for checked products.
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { m: &self.m * &rhs.m }
    }
}

impl Mul for Operator {
    type Output = Operator;

    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.m[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// A Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const EIGEN_TOL: f64 = -1e-10;

    /// Validates Hermiticity, trace and positivity.
    pub fn new(op: Operator) -> Result<Self> {
        let rho = DensityMatrix { op };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps an operator produced by a trace- and positivity-preserving map.
    pub(crate) fn new_unchecked(op: Operator) -> Self {
        DensityMatrix { op }
    }

    /// `|v><v|` after normalizing `v`.
    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Ok(DensityMatrix {
            op: Operator::projector(&(v / C64::new(norm, 0.0))),
        })
    }

    /// The computational basis state `|index><index|`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Self::pure(&v).expect("basis vector is nonzero")
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            op: Operator::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.op.get(row, col)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.op.hermiticity_error();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.op.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < Self::EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // symmetrize so the eigensolver sees an exactly Hermitian input
        let h = (self.op.matrix() + self.op.matrix().adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &x| acc.min(x))
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Density{:?}", self.op)
    }
}

/// Kronecker product `a ⊗ b`; `a` acts on the more significant bits.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator { m: a.m.kronecker(&b.m) }
}

/// Kronecker product of a list of operators, first factor most significant.
pub fn tensor_all(ops: &[Operator]) -> Operator {
    let mut iter = ops.iter();
    let first = iter.next().expect("tensor_all needs at least one factor").clone();
    iter.fold(first, |acc, op| tensor(&acc, op))
}

/// `U rho U†`.
pub fn evolve(rho: &DensityMatrix, u: &Operator) -> Result<DensityMatrix> {
    check_dims(rho.dim(), u.dim())?;
    let m = &u.m * &rho.op.m * u.m.adjoint();
    Ok(DensityMatrix::new_unchecked(Operator { m }))
}

/// Reduced state of the leading (control) qubit after tracing out an
/// `n_target`-qubit register.
pub fn partial_trace_target(rho: &DensityMatrix, n_target: u32) -> Result<DensityMatrix> {
    let t = 1usize << n_target;
    check_dims(2 * t, rho.dim())?;
    let m = DMatrix::from_fn(2, 2, |a, b| {
        (0..t).map(|k| rho.op.m[(a * t + k, b * t + k)]).sum::<C64>()
    });
    Ok(DensityMatrix::new_unchecked(Operator { m }))
}

/// `Tr(rho O)` for Hermitian `O`.
pub fn expectation(rho: &DensityMatrix, obs: &Operator) -> Result<f64> {
    check_dims(rho.dim(), obs.dim())?;
    let herm = obs.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NonHermitianObservable(herm));
    }
    let z = (&rho.op.m * &obs.m).trace();
    debug_assert!(z.im.abs() <= 1e-10, "imaginary expectation residue {}", z.im);
    Ok(z.re)
}

/// `exp(-i h t)` for Hermitian `h`, via eigendecomposition.
pub fn expm_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    let herm = h.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NonHermitianInput(herm));
    }
    let sym = (&h.m + h.m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t));
    let v = &eig.eigenvectors;
    let m = v * DMatrix::from_diagonal(&phases) * v.adjoint();
    Ok(Operator { m })
}

/// True when `u = e^{iα} v` entrywise within `tol` for some real `α`.
pub fn equal_up_to_global_phase(u: &Operator, v: &Operator, tol: f64) -> Result<bool> {
    Ok(global_phase_distance(u, v)? <= tol)
}

/// `max|u - e^{iα} v|` with `α = arg tr(v† u)`, the phase that minimizes the
/// Frobenius distance. Falls back to the dominant entry of `v† u` when the
/// trace vanishes.
pub fn global_phase_distance(u: &Operator, v: &Operator) -> Result<f64> {
    check_dims(u.dim(), v.dim())?;
    let w = v.m.adjoint() * &u.m;
    let tr = w.trace();
    let pivot = if tr.norm() > 1e-9 {
        tr
    } else {
        w.iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(ONE)
    };
    let phase = if pivot.norm() > 0.0 { pivot / pivot.norm() } else { ONE };
    Ok(max_abs(&(&u.m - &v.m * phase)))
}

pub fn sigma_x() -> Operator {
    Operator::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn sigma_y() -> Operator {
    Operator::from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn sigma_z() -> Operator {
    Operator::real_diagonal(&[1.0, -1.0])
}

/// The Walsh-Hadamard gate.
pub fn hadamard() -> Operator {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    Operator::from_rows(&[&[s, s], &[s, -s]])
}

/// `R_φ(θ) = exp(-i θ (cos φ σx + sin φ σy) / 2)`, angles in radians.
pub fn rotation(theta: f64, phase: f64) -> Operator {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let off = -I * s;
    Operator::from_rows(&[
        &[c, off * C64::from_polar(1.0, -phase)],
        &[off * C64::from_polar(1.0, phase), c],
    ])
}

/// `R_z(θ) = exp(-i θ σz / 2)`.
pub fn rotation_z(theta: f64) -> Operator {
    Operator::diagonal(&[C64::from_polar(1.0, -theta / 2.0), C64::from_polar(1.0, theta / 2.0)])
}

/// The NMR pseudo-Hadamard `h = R_y(90°)`.
pub fn pseudo_hadamard() -> Operator {
    rotation(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
}

/// `|0...0>` on `qubits` qubits.
pub fn zero_state(qubits: u32) -> DVector<C64> {
    let mut v = DVector::zeros(1 << qubits);
    v[0] = ONE;
    v
}
