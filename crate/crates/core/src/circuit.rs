//! Gate-level counting: oracles, the Grover iterate and its eigenphases,
//! and the controlled-iterate circuit whose control qubit carries the count.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::opcore::{
    self, hadamard, partial_trace_target, pseudo_hadamard, tensor, tensor_all, DensityMatrix, Operator, C64, ONE, ZERO,
};

/// A total boolean function on `n`-bit inputs, stored as its truth table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OracleSpec {
    n: u32,
    table: Vec<bool>,
}

impl OracleSpec {
    pub fn new(table: Vec<bool>) -> Result<Self> {
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidOracle(format!(
                "truth table length {len} is not a power of two >= 2"
            )));
        }
        Ok(OracleSpec {
            n: len.trailing_zeros(),
            table,
        })
    }

    /// Oracle on `n` bits that is true exactly on `matches`.
    pub fn from_matches(n: u32, matches: &[usize]) -> Result<Self> {
        let size = 1usize << n;
        let mut table = vec![false; size];
        for &x in matches {
            if x >= size {
                return Err(Error::InvalidOracle(format!("match {x} outside 0..{size}")));
            }
            table[x] = true;
        }
        Self::new(table)
    }

    pub fn f00() -> Self {
        Self::new(vec![false, false]).unwrap()
    }

    pub fn f01() -> Self {
        Self::new(vec![false, true]).unwrap()
    }

    pub fn f10() -> Self {
        Self::new(vec![true, false]).unwrap()
    }

    pub fn f11() -> Self {
        Self::new(vec![true, true]).unwrap()
    }

    /// The four one-bit functions in the order f00, f01, f10, f11.
    pub fn one_bit_all() -> [OracleSpec; 4] {
        [Self::f00(), Self::f01(), Self::f10(), Self::f11()]
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Size of the search space, `N = 2^n`.
    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn eval(&self, x: usize) -> bool {
        self.table[x]
    }

    /// Number of matching inputs.
    pub fn k(&self) -> usize {
        self.table.iter().filter(|&&b| b).count()
    }

    /// `f ∧ [x < m]`: the same function restricted to the prefix `0..m`.
    pub fn restrict_prefix(&self, m: usize) -> Self {
        let table = self.table.iter().enumerate().map(|(x, &b)| b && x < m).collect();
        OracleSpec { n: self.n, table }
    }

    /// `f00`..`f11` for one-bit oracles, otherwise the truth table as a bit string.
    pub fn label(&self) -> String {
        let bits: String = self.table.iter().map(|&b| if b { '1' } else { '0' }).collect();
        if self.n == 1 {
            format!("f{bits}")
        } else {
            bits
        }
    }
}

impl fmt::Debug for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OracleSpec({}, k={})", self.label(), self.k())
    }
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Accepts `f00`/`f01`/`f10`/`f11` or a raw truth table such as `01101000`.
impl FromStr for OracleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s.strip_prefix('f').filter(|b| b.len() == 2).unwrap_or(s);
        let table = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidOracle(format!("unexpected character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(table)
    }
}

/// The single-qubit gate used to build the uniform superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisGate {
    Hadamard,
    /// `h = R_y(90°)`, whose inverse is `R_y(-90°)`.
    PseudoHadamard,
}

impl BasisGate {
    pub fn single(self) -> Operator {
        match self {
            BasisGate::Hadamard => hadamard(),
            BasisGate::PseudoHadamard => pseudo_hadamard(),
        }
    }
}

/// `U_f̄ |x> = (-1)^{f(x)+1} |x>`.
pub fn oracle_unitary(f: &OracleSpec) -> Operator {
    let d: Vec<f64> = f.table.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
    Operator::real_diagonal(&d)
}

/// `U_0`: flips the sign of `|0...0>` only.
pub fn u0_unitary(n: u32) -> Result<Operator> {
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "qubit count",
            detail: "n must be at least 1".into(),
        });
    }
    let mut d = vec![1.0; 1 << n];
    d[0] = -1.0;
    Ok(Operator::real_diagonal(&d))
}

fn register_gate(single: &Operator, n: u32) -> Operator {
    tensor_all(&vec![single.clone(); n as usize])
}

/// `G = B U_0 B^{-1} U_f̄`.
pub fn grover_iterate(f: &OracleSpec, basis: BasisGate) -> Operator {
    grover_iterate_with(f, &basis.single())
}

/// Grover iterate built from an arbitrary single-qubit basis gate.
pub fn grover_iterate_with(f: &OracleSpec, basis: &Operator) -> Operator {
    let b = register_gate(basis, f.n());
    let u0 = u0_unitary(f.n()).expect("oracle has n >= 1");
    &(&(&b * &u0) * &b.adjoint()) * &oracle_unitary(f)
}

/// Eigenphase `φ_k` with `cos φ_k = 1 - 2k/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenphase {
    pub phi: f64,
    pub k: usize,
    pub n_items: usize,
}

impl Eigenphase {
    pub fn new(k: usize, n_items: usize) -> Result<Self> {
        if n_items == 0 || k > n_items {
            return Err(Error::OutOfRange {
                what: "match count",
                detail: format!("k={k}, N={n_items}"),
            });
        }
        let c = 1.0 - 2.0 * k as f64 / n_items as f64;
        Ok(Eigenphase {
            phi: c.clamp(-1.0, 1.0).acos(),
            k,
            n_items,
        })
    }
}

/// Eigen-decomposition of the uniform superposition under `G`.
#[derive(Debug, Clone)]
pub struct GroverEigensystem {
    /// Formula value `arccos(1 - 2k/N)`.
    pub phase: Eigenphase,
    /// Eigenphase read off the numerically diagonalized invariant plane.
    pub numeric_phi: f64,
    pub plus: DVector<C64>,
    pub minus: DVector<C64>,
    pub eigenvalue_plus: C64,
    pub eigenvalue_minus: C64,
}

/// Uniform superposition over all inputs, `H|0...0>`.
pub fn uniform_state(size: usize) -> DVector<C64> {
    DVector::from_element(size, C64::new(1.0 / (size as f64).sqrt(), 0.0))
}

fn uniform_over(f: &OracleSpec, want: bool) -> DVector<C64> {
    let count = f.table.iter().filter(|&&b| b == want).count();
    let amp = C64::new(1.0 / (count as f64).sqrt(), 0.0);
    DVector::from_iterator(f.size(), f.table.iter().map(|&b| if b == want { amp } else { ZERO }))
}

fn inner(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.dotc(b)
}

/// Eigenvalues and unit eigenvectors of a 2x2 complex matrix, ordered by
/// descending eigenvalue argument.
pub(crate) fn eigen_2x2(m: [[C64; 2]; 2]) -> [(C64, [C64; 2]); 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    let mut out = [(tr + disc) / 2.0, (tr - disc) / 2.0].map(|lam| {
        let a = [m[0][1], lam - m[0][0]];
        let b = [lam - m[1][1], m[1][0]];
        let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
        let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
        let v = if na >= nb && na > 1e-300 {
            [a[0] / na, a[1] / na]
        } else if nb > 1e-300 {
            [b[0] / nb, b[1] / nb]
        } else {
            [ONE, ZERO]
        };
        (lam, v)
    });
    if out[0].0.arg() < out[1].0.arg() {
        out.swap(0, 1);
    }
    out
}

/// Splits `H|0...0>` into the two eigenvectors of `G` on its invariant plane.
///
/// For `0 < k < N` the plane is spanned by the uniform superpositions over
/// matching and non-matching inputs; `G` is diagonalized there numerically
/// and the eigenvector phases fixed so `H|0...0> = (Ψ+ + Ψ-)/√2`. For `k = 0`
/// and `k = N` both vectors are `H|0...0>` itself.
pub fn grover_eigensystem(f: &OracleSpec) -> GroverEigensystem {
    let k = f.k();
    let size = f.size();
    let phase = Eigenphase::new(k, size).expect("k <= N by construction");
    let g = grover_iterate(f, BasisGate::Hadamard);
    let s = uniform_state(size);

    if k == 0 || k == size {
        let lam = inner(&s, &g.apply(&s).unwrap());
        return GroverEigensystem {
            phase,
            numeric_phi: lam.arg().abs(),
            plus: s.clone(),
            minus: s,
            eigenvalue_plus: lam,
            eigenvalue_minus: lam,
        };
    }

    let bad = uniform_over(f, false);
    let good = uniform_over(f, true);
    let basis = [&bad, &good];
    let g_basis: Vec<DVector<C64>> = basis.iter().map(|v| g.apply(v).unwrap()).collect();
    let block = [
        [inner(&bad, &g_basis[0]), inner(&bad, &g_basis[1])],
        [inner(&good, &g_basis[0]), inner(&good, &g_basis[1])],
    ];
    let [(lam_plus, v_plus), (lam_minus, v_minus)] = eigen_2x2(block);

    let lift = |v: [C64; 2]| -> DVector<C64> {
        let w = &bad * v[0] + &good * v[1];
        let overlap = inner(&w, &s);
        let fix = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        w * fix
    };

    GroverEigensystem {
        phase,
        numeric_phi: (lam_plus.arg() - lam_minus.arg()) / 2.0,
        plus: lift(v_plus),
        minus: lift(v_minus),
        eigenvalue_plus: lam_plus,
        eigenvalue_minus: lam_minus,
    }
}

/// `|0><0| ⊗ I + |1><1| ⊗ U`.
pub fn controlled(u: &Operator) -> Operator {
    let p0 = Operator::real_diagonal(&[1.0, 0.0]);
    let p1 = Operator::real_diagonal(&[0.0, 1.0]);
    tensor(&p0, &Operator::identity(u.dim()))
        .add(&tensor(&p1, u))
        .expect("blocks share a dimension")
}

/// One pass of the bracketed loop body: controlled-`U_f̄`, `B^{-1}` on the
/// target, controlled-`U_0`, `B` on the target. The basis gates are left
/// uncontrolled, which is exact because they cancel when the control is `|0>`.
pub fn controlled_iterate(f: &OracleSpec, basis: BasisGate) -> Operator {
    controlled_iterate_with(f, &basis.single())
}

pub fn controlled_iterate_with(f: &OracleSpec, basis: &Operator) -> Operator {
    let n = f.n();
    let id = Operator::identity(2);
    let b_t = tensor(&id, &register_gate(basis, n));
    let b_inv_t = b_t.adjoint();
    let cu0 = controlled(&u0_unitary(n).expect("n >= 1"));
    let cuf = controlled(&oracle_unitary(f));
    &(&(&b_t * &cu0) * &b_inv_t) * &cuf
}

/// The full circuit unitary from `|0>|0...0>`: `B` on every qubit, `r` loop
/// bodies, then `B^{-1}` on every qubit.
pub fn counting_unitary(f: &OracleSpec, r: usize, basis: BasisGate) -> Operator {
    counting_unitary_with(f, r, &basis.single())
}

pub fn counting_unitary_with(f: &OracleSpec, r: usize, basis: &Operator) -> Operator {
    let all = register_gate(basis, f.n() + 1);
    let body = controlled_iterate_with(f, basis);
    &(&all.adjoint() * &body.pow(r)) * &all
}

/// Initial state of the target register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetStart {
    /// `|0...0>` followed by the basis gate, as in the hardware circuit.
    Uniform,
    /// The eigenvector `Ψ+` of `G`.
    EigenPlus,
    /// The eigenvector `Ψ-` of `G`.
    EigenMinus,
}

/// Reduced state of the control qubit after `r` controlled iterations,
/// starting from `|0>|0...0>`.
pub fn counting_circuit_state(f: &OracleSpec, r: usize, basis: BasisGate) -> DensityMatrix {
    counting_circuit_state_from(f, r, basis, TargetStart::Uniform)
}

pub fn counting_circuit_state_from(f: &OracleSpec, r: usize, basis: BasisGate, start: TargetStart) -> DensityMatrix {
    let b = basis.single();
    let n = f.n();
    let psi = match start {
        TargetStart::Uniform => {
            let u = counting_unitary_with(f, r, &b);
            u.apply(&opcore::zero_state(n + 1)).unwrap()
        }
        TargetStart::EigenPlus | TargetStart::EigenMinus => {
            let eig = grover_eigensystem(f);
            let target = if start == TargetStart::EigenPlus {
                eig.plus
            } else {
                eig.minus
            };
            let ctrl = b.apply(&opcore::zero_state(1)).unwrap();
            let body = controlled_iterate_with(f, &b).pow(r);
            let out = body.apply(&ctrl.kronecker(&target)).unwrap();
            let close = tensor(&b.adjoint(), &Operator::identity(f.size()));
            close.apply(&out).unwrap()
        }
    };
    let rho = DensityMatrix::pure(&psi).expect("unitary image of a unit vector");
    partial_trace_target(&rho, n).expect("dimension is 2^(n+1)")
}

/// Evolves `|0><0| ⊗ |0..0><0..0|` step by step and returns `<σz>` of the
/// control for every `r` in `0..=r_max`.
pub fn counting_signals(f: &OracleSpec, r_max: usize, basis: BasisGate) -> Vec<f64> {
    let b = basis.single();
    let all = register_gate(&b, f.n() + 1);
    let body = controlled_iterate_with(f, &b);
    let close = all.adjoint();
    let z_ctrl = tensor(&opcore::sigma_z(), &Operator::identity(f.size()));
    let mut state = all.apply(&opcore::zero_state(f.n() + 1)).unwrap();
    let mut out = Vec::with_capacity(r_max + 1);
    for r in 0..=r_max {
        if r > 0 {
            state = body.apply(&state).unwrap();
        }
        let fin = close.apply(&state).unwrap();
        out.push(inner(&fin, &z_ctrl.apply(&fin).unwrap()).re);
    }
    out
}

/// `cos(r φ_k)`.
pub fn ideal_signal(k: usize, n_items: usize, r: usize) -> Result<f64> {
    let phase = Eigenphase::new(k, n_items)?;
    Ok((r as f64 * phase.phi).cos())
}

/// The control-qubit matrix `½[[1+cos a, i sin a], [-i sin a, 1-cos a]]`
/// for accumulated phase `a = r φ_k`.
pub fn kickback_control_state(accumulated_phase: f64) -> Operator {
    let (s, c) = accumulated_phase.sin_cos();
    Operator::from_rows(&[
        &[C64::new((1.0 + c) / 2.0, 0.0), C64::new(0.0, s / 2.0)],
        &[C64::new(0.0, -s / 2.0), C64::new((1.0 - c) / 2.0, 0.0)],
    ])
}
