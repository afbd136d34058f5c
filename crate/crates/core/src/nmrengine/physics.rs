use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::opcore::{expm_hermitian, rotation, sigma_x, sigma_y, sigma_z, tensor, DensityMatrix, Operator, C64, ZERO};
use crate::pulsecompile::{DelayKind, PulseEvent, PulseSequence};

use super::system::{PulseMode, SpinSystem};

fn half(op: Operator) -> Operator {
    op.scale(C64::new(0.5, 0.0))
}

/// `I_a = σ_a/2 ⊗ 1` and `S_a = 1 ⊗ σ_a/2`.
pub fn spin_operator(spin_i: bool, pauli: Operator) -> Operator {
    let id = Operator::identity(2);
    if spin_i {
        tensor(&half(pauli), &id)
    } else {
        tensor(&id, &half(pauli))
    }
}

fn total_transverse(phase: f64) -> Operator {
    let fx = spin_operator(true, sigma_x())
        .add(&spin_operator(false, sigma_x()))
        .expect("4x4");
    let fy = spin_operator(true, sigma_y())
        .add(&spin_operator(false, sigma_y()))
        .expect("4x4");
    fx.scale(C64::new(phase.cos(), 0.0))
        .add(&fy.scale(C64::new(phase.sin(), 0.0)))
        .expect("4x4")
}

/// Energies of `|00>, |01>, |10>, |11>`, optionally without the coupling.
fn energies(system: &SpinSystem, coupled: bool) -> [f64; 4] {
    let zeeman = system.omega / 2.0;
    let jj = if coupled { PI * system.j / 2.0 } else { 0.0 };
    [jj, zeeman - jj, -zeeman - jj, jj]
}

/// The rotating-frame Hamiltonian `(ω/2)I_z - (ω/2)S_z + πJ 2I_zS_z`.
pub fn hamiltonian(system: &SpinSystem) -> Operator {
    Operator::real_diagonal(&energies(system, true))
}

fn diagonal_propagator(e: [f64; 4], t: f64) -> Operator {
    let phases: Vec<C64> = e.iter().map(|&x| C64::from_polar(1.0, -x * t)).collect();
    Operator::diagonal(&phases)
}

/// `exp(-i H t)`; the Hamiltonian is diagonal so this is exact.
pub fn free_propagator(system: &SpinSystem, t: f64) -> Operator {
    diagonal_propagator(energies(system, true), t)
}

/// Free evolution for a delay, honoring the system's treatment of
/// composite-pulse delays.
pub fn delay_propagator(system: &SpinSystem, t: f64, kind: DelayKind) -> Operator {
    let coupled = kind == DelayKind::Free || system.couples_composites();
    diagonal_propagator(energies(system, coupled), t)
}

/// A non-selective pulse of nominal `angle` at `phase` (degrees), with the
/// amplitude scaled by `b1_scale`.
pub fn pulse_propagator(system: &SpinSystem, angle: f64, phase: f64, b1_scale: f64) -> Operator {
    let theta = angle.to_radians();
    let phi = phase.to_radians();
    match system.pulse_mode {
        PulseMode::Ideal => {
            let r = rotation(theta * b1_scale, phi);
            tensor(&r, &r)
        }
        PulseMode::Realistic => {
            let drive = total_transverse(phi).scale(C64::new(system.omega1 * b1_scale, 0.0));
            let h = hamiltonian(system).add(&drive).expect("4x4");
            expm_hermitian(&h, theta / system.omega1).expect("pulse Hamiltonian is Hermitian")
        }
    }
}

fn damp_off_diagonal(m: &mut DMatrix<C64>, factor: f64) {
    let n = m.nrows();
    for r in 0..n {
        for c in 0..n {
            if r != c {
                m[(r, c)] *= factor;
            }
        }
    }
}

fn t2_factor(system: &SpinSystem, t: f64) -> f64 {
    if system.t2.is_infinite() {
        1.0
    } else {
        (-t / system.t2).exp()
    }
}

/// Uniform exponential decay of every coherence over `t`.
pub fn apply_t2(rho: &DensityMatrix, system: &SpinSystem, t: f64) -> DensityMatrix {
    let mut m = rho.matrix().clone();
    damp_off_diagonal(&mut m, t2_factor(system, t));
    DensityMatrix::new_unchecked(Operator::from_matrix(m).expect("square"))
}

fn crush_in_place(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    for r in 0..n {
        for c in 0..n {
            let zero_quantum = (r, c) == (1, 2) || (r, c) == (2, 1);
            if r != c && !zero_quantum {
                m[(r, c)] = ZERO;
            }
        }
    }
}

/// Removes every coherence except the zero-quantum pair `|01><10|`.
pub fn gradient_crush(rho: &DensityMatrix) -> DensityMatrix {
    let mut m = rho.matrix().clone();
    crush_in_place(&mut m);
    DensityMatrix::new_unchecked(Operator::from_matrix(m).expect("square"))
}

fn zq_filter_in_place(m: &mut DMatrix<C64>, system: &SpinSystem) {
    let steps = system.zq_filter_steps;
    if steps == 0 {
        return;
    }
    let mut acc = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
    for k in 0..steps {
        let t = 2.0 * PI * k as f64 / (system.omega * steps as f64);
        let u = free_propagator(system, t);
        acc += u.matrix() * &*m * u.matrix().adjoint();
    }
    *m = acc / C64::new(steps as f64, 0.0);
}

/// Averages the state over `zq_filter_steps` delays spanning one
/// zero-quantum period, which cancels the `±ω` coherences.
pub fn zero_quantum_filter(rho: &DensityMatrix, system: &SpinSystem) -> DensityMatrix {
    let mut m = rho.matrix().clone();
    zq_filter_in_place(&mut m, system);
    DensityMatrix::new_unchecked(Operator::from_matrix(m).expect("square"))
}

/// `(1 - p) 1/4 + p |00><00|`.
pub fn initial_state(system: &SpinSystem) -> DensityMatrix {
    let p = system.polarization;
    let mixed = (1.0 - p) / 4.0;
    DensityMatrix::new_unchecked(Operator::real_diagonal(&[mixed + p, mixed, mixed, mixed]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EventKey {
    Pulse(u64, u64),
    Delay(u64, DelayKind),
}

/// Interprets events against one B1 scale, caching their propagators.
pub(crate) struct Evolver<'a> {
    system: &'a SpinSystem,
    b1: f64,
    cache: HashMap<EventKey, DMatrix<C64>>,
}

impl<'a> Evolver<'a> {
    pub(crate) fn new(system: &'a SpinSystem, b1: f64) -> Self {
        Evolver {
            system,
            b1,
            cache: HashMap::new(),
        }
    }

    fn unitary(&mut self, event: &PulseEvent) -> Option<&DMatrix<C64>> {
        let (system, b1) = (self.system, self.b1);
        match *event {
            PulseEvent::HardPulse { angle, phase } => Some(
                self.cache
                    .entry(EventKey::Pulse(angle.to_bits(), phase.to_bits()))
                    .or_insert_with(|| pulse_propagator(system, angle, phase, b1).into_matrix()),
            ),
            PulseEvent::Delay { duration, kind } => Some(
                self.cache
                    .entry(EventKey::Delay(duration.to_bits(), kind))
                    .or_insert_with(|| delay_propagator(system, duration, kind).into_matrix()),
            ),
            PulseEvent::GradientCrush => None,
        }
    }

    pub(crate) fn step(&mut self, rho: &mut DMatrix<C64>, event: &PulseEvent) {
        let elapsed = event.duration(self.system);
        match self.unitary(event) {
            Some(u) => *rho = u * &*rho * u.adjoint(),
            None => crush_in_place(rho),
        }
        if elapsed > 0.0 {
            damp_off_diagonal(rho, t2_factor(self.system, elapsed));
        }
    }

    pub(crate) fn run(&mut self, rho: &mut DMatrix<C64>, seq: &PulseSequence) {
        for e in &seq.events {
            self.step(rho, e);
        }
    }

    /// Crush, zero-quantum filter, 90° read pulse at `90 + shift` degrees,
    /// then the complex transverse magnetization of the control spin.
    pub(crate) fn readout(&mut self, rho: &DMatrix<C64>, shift: f64) -> C64 {
        let mut m = rho.clone();
        crush_in_place(&mut m);
        zq_filter_in_place(&mut m, self.system);
        self.step(&mut m, &PulseEvent::pulse(90.0, 90.0 + shift));
        control_magnetization(&m)
    }
}

/// `<σx ⊗ 1> + i<σy ⊗ 1>`, which is `2(ρ[10,00] + ρ[11,01])`.
fn control_magnetization(m: &DMatrix<C64>) -> C64 {
    (m[(2, 0)] + m[(3, 1)]) * 2.0
}

/// Folds the events of `seq` over `rho0`: delays and realistic pulses are
/// followed by T2 decay over their length, crush events project.
pub fn run_sequence(
    system: &SpinSystem,
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    b1_scale: f64,
) -> Result<DensityMatrix> {
    check_two_spins(rho0)?;
    seq.validate()?;
    let mut m = rho0.matrix().clone();
    Evolver::new(system, b1_scale).run(&mut m, seq);
    Ok(DensityMatrix::new_unchecked(Operator::from_matrix(m)?))
}

/// Like [`run_sequence`] but returns the state after every event.
pub fn run_sequence_trace(
    system: &SpinSystem,
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    b1_scale: f64,
) -> Result<Vec<DensityMatrix>> {
    check_two_spins(rho0)?;
    seq.validate()?;
    let mut m = rho0.matrix().clone();
    let mut ev = Evolver::new(system, b1_scale);
    let mut out = Vec::with_capacity(seq.len());
    for e in &seq.events {
        ev.step(&mut m, e);
        out.push(DensityMatrix::new_unchecked(Operator::from_matrix(m.clone())?));
    }
    Ok(out)
}

/// The unitary of a crush-free sequence, relaxation ignored.
pub fn sequence_propagator(system: &SpinSystem, seq: &PulseSequence, b1_scale: f64) -> Result<Operator> {
    seq.validate()?;
    let mut ev = Evolver::new(system, b1_scale);
    let mut u = DMatrix::<C64>::identity(4, 4);
    for e in &seq.events {
        let step = ev
            .unitary(e)
            .ok_or_else(|| Error::InvalidConfig("a gradient crush has no propagator".into()))?;
        u = step * u;
    }
    Operator::from_matrix(u)
}

fn check_two_spins(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    Ok(())
}

/// How the control qubit is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutMethod {
    /// `Tr(ρ σz ⊗ 1)` directly.
    SigmaZ,
    /// Crush, zero-quantum filter, 90°_y, then `Tr(ρ σx ⊗ 1)`.
    NmrReadout,
}

pub fn measure_signal(system: &SpinSystem, rho: &DensityMatrix, method: ReadoutMethod) -> Result<f64> {
    check_two_spins(rho)?;
    Ok(match method {
        ReadoutMethod::SigmaZ => {
            let obs = tensor(&sigma_z(), &Operator::identity(2));
            crate::opcore::expectation(rho, &obs)?
        }
        ReadoutMethod::NmrReadout => Evolver::new(system, 1.0).readout(rho.matrix(), 0.0).re,
    })
}
