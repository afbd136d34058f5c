//! Lowering of the one-bit counting circuit to hard pulses and delays.
//!
//! Only non-selective hard pulses are emitted. Rotations of a single spin
//! are built from composites that sandwich a short Zeeman precession
//! between a pair of 90° pulses, and the controlled phase gates come from
//! J-coupling evolution refocused by 180° pulses.

use std::f64::consts::PI;
use std::fmt;

use crate::circuit::OracleSpec;
use crate::error::{Error, Result};
use crate::nmrengine::{PulseMode, SpinSystem};
use crate::numfmt::format_sig;

/// How a delay interacts with the scalar coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DelayKind {
    /// Free precession under the full Hamiltonian.
    Free,
    /// A short Zeeman-precession period inside a composite pulse. Ideal
    /// pulse mode treats it as coupling-free; realistic mode does not.
    Composite,
}

/// One element of a pulse program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseEvent {
    /// Non-selective pulse; angle and phase in degrees, phase 0 = x, 90 = y.
    HardPulse {
        angle: f64,
        phase: f64,
    },
    Delay {
        duration: f64,
        kind: DelayKind,
    },
    GradientCrush,
}

impl PulseEvent {
    /// A hard pulse with its phase reduced to `[0, 360)`.
    pub fn pulse(angle: f64, phase: f64) -> Self {
        PulseEvent::HardPulse {
            angle,
            phase: normalize_phase(phase),
        }
    }

    pub fn delay(duration: f64) -> Self {
        PulseEvent::Delay {
            duration,
            kind: DelayKind::Free,
        }
    }

    pub fn composite_delay(duration: f64) -> Self {
        PulseEvent::Delay {
            duration,
            kind: DelayKind::Composite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseEvent::HardPulse { angle, phase } => {
                if !(angle > 0.0 && angle <= 360.0) {
                    return Err(Error::OutOfRange {
                        what: "pulse angle",
                        detail: format!("{angle} deg not in (0, 360]"),
                    });
                }
                if !phase.is_finite() {
                    return Err(Error::OutOfRange {
                        what: "pulse phase",
                        detail: format!("{phase}"),
                    });
                }
            }
            PulseEvent::Delay { duration, .. } => {
                if !(duration >= 0.0 && duration.is_finite()) {
                    return Err(Error::OutOfRange {
                        what: "delay",
                        detail: format!("{duration} s"),
                    });
                }
            }
            PulseEvent::GradientCrush => {}
        }
        Ok(())
    }

    /// Wall-clock length of the event under the system's pulse model.
    pub fn duration(&self, system: &SpinSystem) -> f64 {
        match *self {
            PulseEvent::HardPulse { angle, .. } => match system.pulse_mode {
                PulseMode::Ideal => 0.0,
                PulseMode::Realistic => angle.to_radians() / system.omega1,
            },
            PulseEvent::Delay { duration, .. } => duration,
            PulseEvent::GradientCrush => 0.0,
        }
    }
}

impl fmt::Display for PulseEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PulseEvent::HardPulse { angle, phase } => {
                write!(f, "PULSE {}deg {}deg", format_sig(angle, 12), format_sig(phase, 12))
            }
            PulseEvent::Delay { duration, .. } => write!(f, "DELAY {}", format_sig(duration, 12)),
            PulseEvent::GradientCrush => f.write_str("CRUSH"),
        }
    }
}

fn normalize_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if p >= 360.0 {
        0.0
    } else {
        p
    }
}

/// An ordered pulse program with a human-readable label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub label: String,
    pub events: Vec<PulseEvent>,
}

impl PulseSequence {
    pub fn new(label: impl Into<String>) -> Self {
        PulseSequence {
            label: label.into(),
            events: Vec::new(),
        }
    }

    pub fn from_events(label: impl Into<String>, events: Vec<PulseEvent>) -> Self {
        PulseSequence {
            label: label.into(),
            events,
        }
    }

    pub fn push(&mut self, event: PulseEvent) {
        self.events.push(event);
    }

    pub fn append(&mut self, other: &PulseSequence) {
        self.events.extend_from_slice(&other.events);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn pulse_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, PulseEvent::HardPulse { .. }))
            .count()
    }

    pub fn total_duration(&self, system: &SpinSystem) -> f64 {
        self.events.iter().fold(0.0, |acc, e| acc + e.duration(system))
    }

    /// The same program with every pulse phase advanced by `degrees`.
    pub fn phase_shifted(&self, degrees: f64) -> PulseSequence {
        let events = self
            .events
            .iter()
            .map(|e| match *e {
                PulseEvent::HardPulse { angle, phase } => PulseEvent::pulse(angle, phase + degrees),
                other => other,
            })
            .collect();
        PulseSequence {
            label: self.label.clone(),
            events,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.events.iter().try_for_each(PulseEvent::validate)
    }
}

/// One event per line, no trailing label.
impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Delays of the refocused coupling gate and the selective composites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSolution {
    pub delta: f64,
    pub eps270: f64,
    pub eps45: f64,
}

impl fmt::Display for TimingSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "delta={} eps270={} eps45={}",
            format_sig(self.delta, 12),
            format_sig(self.eps270, 12),
            format_sig(self.eps45, 12)
        )
    }
}

pub fn solve_timing(system: &SpinSystem) -> Result<TimingSolution> {
    if !(system.omega > 0.0 && system.j > 0.0) {
        return Err(Error::InvalidSystem(format!(
            "timing needs omega > 0 and J > 0, got omega={} J={}",
            system.omega, system.j
        )));
    }
    let half_period = 1.0 / (2.0 * system.j);
    let eps270 = 3.0 * PI / system.omega;
    if half_period <= eps270 {
        return Err(Error::InfeasibleTiming { half_period, eps270 });
    }
    Ok(TimingSolution {
        delta: (half_period - eps270) / 4.0,
        eps270,
        eps45: PI / (2.0 * system.omega),
    })
}

/// Which spin a selective operation addresses. The control qubit is spin I.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Control,
    Target,
}

/// A transverse rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    MinusX,
    MinusY,
}

impl Axis {
    pub fn phase_deg(self) -> f64 {
        match self {
            Axis::X => 0.0,
            Axis::Y => 90.0,
            Axis::MinusX => 180.0,
            Axis::MinusY => 270.0,
        }
    }
}

/// A 90° rotation of one spin about `axis`, leaving the other untouched
/// when the coupling is negligible during the short precession period.
pub fn compile_selective_90(target: Spin, axis: Axis, system: &SpinSystem) -> Result<PulseSequence> {
    let timing = solve_timing(system)?;
    let phase = axis.phase_deg();
    // The sandwich turns the +/- 45 deg Zeeman precession of the two spins
    // into rotations about `axis`; its handedness picks which spin adds to
    // the leading 45 and which cancels it.
    let sandwich = match target {
        Spin::Control => phase - 90.0,
        Spin::Target => phase + 90.0,
    };
    Ok(PulseSequence::from_events(
        format!("sel90({target:?},{axis:?})"),
        vec![
            PulseEvent::pulse(45.0, phase),
            PulseEvent::pulse(90.0, sandwich),
            PulseEvent::composite_delay(timing.eps45),
            PulseEvent::pulse(90.0, sandwich + 180.0),
        ],
    ))
}

/// Two selective 90° composites back to back.
pub fn compile_selective_180(target: Spin, axis: Axis, system: &SpinSystem) -> Result<PulseSequence> {
    let half = compile_selective_90(target, axis, system)?;
    let mut seq = PulseSequence::new(format!("sel180({target:?},{axis:?})"));
    seq.append(&half);
    seq.append(&half);
    Ok(seq)
}

/// `diag(1, 1, -1, 1)`: a phase flip on `|10>` from J evolution over
/// `1/(2J)` with the Zeeman terms refocused.
fn coupling_gate(system: &SpinSystem) -> Result<PulseSequence> {
    let t = solve_timing(system)?;
    Ok(PulseSequence::from_events(
        "cphase",
        vec![
            PulseEvent::delay(t.delta),
            PulseEvent::pulse(180.0, 0.0),
            PulseEvent::delay(2.0 * t.delta + t.eps270),
            PulseEvent::pulse(180.0, 0.0),
            PulseEvent::delay(t.delta),
        ],
    ))
}

/// `Z` on the control spin alone: a Zeeman precession of `π/ω` turns I and
/// S by opposite quarter turns about z, then a z composite built from three
/// hard 90s turns both spins a further quarter turn the same way.
fn control_z(system: &SpinSystem) -> Result<PulseSequence> {
    solve_timing(system)?;
    Ok(PulseSequence::from_events(
        "controlZ",
        vec![
            PulseEvent::composite_delay(PI / system.omega),
            PulseEvent::pulse(90.0, 0.0),
            PulseEvent::pulse(90.0, 270.0),
            PulseEvent::pulse(90.0, 180.0),
        ],
    ))
}

fn require_one_bit(f: &OracleSpec) -> Result<()> {
    if f.n() != 1 {
        return Err(Error::InvalidOracle(format!(
            "pulse compilation exists only for one-bit oracles, got n={}",
            f.n()
        )));
    }
    Ok(())
}

/// The oracle phase flip controlled by spin I.
pub fn compile_controlled_oracle(f: &OracleSpec, system: &SpinSystem) -> Result<PulseSequence> {
    require_one_bit(f)?;
    let mut seq = PulseSequence::new(format!("c-oracle({})", f.label()));
    match (f.eval(0), f.eval(1)) {
        (false, false) => seq.append(&control_z(system)?),
        (false, true) => seq.append(&coupling_gate(system)?),
        (true, false) => {
            let flip = compile_selective_180(Spin::Target, Axis::X, system)?;
            seq.append(&flip);
            seq.append(&coupling_gate(system)?);
            seq.append(&flip);
        }
        (true, true) => {
            solve_timing(system)?;
        }
    }
    Ok(seq)
}

/// Controlled `U0` on one target qubit, which is the same matrix as the
/// controlled `f01` oracle.
pub fn compile_controlled_u0(system: &SpinSystem) -> Result<PulseSequence> {
    let mut seq = coupling_gate(system)?;
    seq.label = "c-U0".into();
    Ok(seq)
}

/// One controlled Grover iterate: oracle, `h⁻¹`, `U0`, `h` on the target.
pub fn compile_iteration_block(f: &OracleSpec, system: &SpinSystem) -> Result<PulseSequence> {
    let mut seq = PulseSequence::new(format!("iterate({})", f.label()));
    seq.append(&compile_controlled_oracle(f, system)?);
    seq.append(&compile_selective_90(Spin::Target, Axis::MinusY, system)?);
    seq.append(&compile_controlled_u0(system)?);
    seq.append(&compile_selective_90(Spin::Target, Axis::Y, system)?);
    Ok(seq)
}

/// The full counting program without readout: `h` on both spins, `r`
/// iteration blocks, `h⁻¹` on both spins.
pub fn compile_counting_sequence(f: &OracleSpec, r: usize, system: &SpinSystem) -> Result<PulseSequence> {
    let block = compile_iteration_block(f, system)?;
    let mut seq = PulseSequence::new(format!("count({},r={r})", f.label()));
    seq.push(PulseEvent::pulse(90.0, 90.0));
    for _ in 0..r {
        seq.append(&block);
    }
    seq.push(PulseEvent::pulse(90.0, 270.0));
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{controlled, counting_unitary, oracle_unitary, u0_unitary, BasisGate};
    use crate::nmrengine::sequence_propagator;
    use crate::opcore::{global_phase_distance, rotation, tensor, Operator};
    use std::f64::consts::FRAC_PI_2;

    fn ideal() -> SpinSystem {
        SpinSystem::ideal()
    }

    fn prop(seq: &PulseSequence, system: &SpinSystem) -> Operator {
        sequence_propagator(system, seq, 1.0).unwrap()
    }

    fn id2() -> Operator {
        Operator::identity(2)
    }

    fn assert_gate(seq: &PulseSequence, target: &Operator, tol: f64) {
        let d = global_phase_distance(&prop(seq, &ideal()), target).unwrap();
        assert!(d <= tol, "{}: distance {d:e}", seq.label);
    }

    #[test]
    fn default_timing() {
        let t = solve_timing(&SpinSystem::default()).unwrap();
        assert!((t.eps270 - 2.142857142857e-3).abs() < 1e-12);
        assert!((t.delta - 17.32142857142857e-3).abs() < 1e-12);
        assert!((t.eps45 - 0.357142857142857e-3).abs() < 1e-12);
    }

    #[test]
    fn infeasible_at_boundary() {
        let mut s = SpinSystem::default();
        s.j = s.omega / (6.0 * PI);
        assert!(matches!(solve_timing(&s), Err(Error::InfeasibleTiming { .. })));
        s.j *= 1.0 - 1e-9;
        assert!(solve_timing(&s).is_ok());
    }

    #[test]
    fn selective_90_layout_matches_drawn_composites() {
        let s = ideal();
        let a = compile_selective_90(Spin::Control, Axis::Y, &s).unwrap();
        let t = solve_timing(&s).unwrap();
        assert_eq!(
            a.events,
            vec![
                PulseEvent::pulse(45.0, 90.0),
                PulseEvent::pulse(90.0, 0.0),
                PulseEvent::composite_delay(t.eps45),
                PulseEvent::pulse(90.0, 180.0),
            ]
        );
        let b = compile_selective_90(Spin::Target, Axis::Y, &s).unwrap();
        assert_eq!(b.events[1], PulseEvent::pulse(90.0, 180.0));
        assert_eq!(b.events[3], PulseEvent::pulse(90.0, 0.0));
    }

    #[test]
    fn selective_90_all_variants() {
        let s = ideal();
        for axis in [Axis::X, Axis::Y, Axis::MinusX, Axis::MinusY] {
            let r = rotation(FRAC_PI_2, axis.phase_deg().to_radians());
            let seq = compile_selective_90(Spin::Control, axis, &s).unwrap();
            assert_gate(&seq, &tensor(&r, &id2()), 1e-10);
            let seq = compile_selective_90(Spin::Target, axis, &s).unwrap();
            assert_gate(&seq, &tensor(&id2(), &r), 1e-10);
        }
    }

    #[test]
    fn selective_180() {
        let s = ideal();
        let seq = compile_selective_180(Spin::Target, Axis::X, &s).unwrap();
        assert_eq!(seq.len(), 8);
        assert_gate(&seq, &tensor(&id2(), &rotation(PI, 0.0)), 1e-10);

        let mut twice = seq.clone();
        twice.append(&seq);
        assert_gate(&twice, &Operator::identity(4), 1e-10);

        let mut pair = compile_selective_180(Spin::Control, Axis::Y, &s).unwrap();
        pair.append(&compile_selective_180(Spin::Control, Axis::MinusY, &s).unwrap());
        assert_gate(&pair, &Operator::identity(4), 1e-10);
    }

    #[test]
    fn leakage_scales_with_coupling() {
        // Realistic-delay physics but instantaneous pulses: J acts during eps45.
        let mut s = SpinSystem::ideal();
        s.composite_coupling = true;
        let omega = s.omega;
        let target = tensor(&rotation(FRAC_PI_2, FRAC_PI_2), &id2());
        let eps45 = PI / (2.0 * omega);
        let mut points = Vec::new();
        for jeps in [1e-5, 1e-4, 1e-3, 1e-2] {
            s.j = jeps / eps45;
            let seq = compile_selective_90(Spin::Control, Axis::Y, &s).unwrap();
            let d = global_phase_distance(&prop(&seq, &s), &target).unwrap();
            points.push((jeps.ln(), d.ln()));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 1.0).abs() <= 0.1, "slope {slope}");

        // At J/(omega/2pi) = 0.01 the error stays of order pi*J*eps45.
        s.j = 0.01 * omega / (2.0 * PI);
        let seq = compile_selective_90(Spin::Control, Axis::Y, &s).unwrap();
        let d = global_phase_distance(&prop(&seq, &s), &target).unwrap();
        assert!(d <= 2.0 * PI * s.j * eps45, "{d}");
        assert!(d > 1e-4);
    }

    #[test]
    fn controlled_oracles() {
        let s = ideal();
        for f in OracleSpec::one_bit_all() {
            let seq = compile_controlled_oracle(&f, &s).unwrap();
            assert_gate(&seq, &controlled(&oracle_unitary(&f)), 1e-8);
        }
        assert!(compile_controlled_oracle(&OracleSpec::f11(), &s).unwrap().is_empty());
        let f00 = compile_controlled_oracle(&OracleSpec::f00(), &s).unwrap();
        assert_gate(&f00, &Operator::real_diagonal(&[1.0, 1.0, -1.0, -1.0]), 1e-8);
        let f10 = compile_controlled_oracle(&OracleSpec::f10(), &s).unwrap();
        assert_gate(&f10, &Operator::real_diagonal(&[1.0, 1.0, 1.0, -1.0]), 1e-8);
    }

    #[test]
    fn refocused_coupling_gate_with_exact_evolution() {
        // No composite delays in this block, so the coupled and uncoupled
        // delay models agree.
        let mut s = ideal();
        s.composite_coupling = true;
        let seq = compile_controlled_oracle(&OracleSpec::f01(), &s).unwrap();
        let d = global_phase_distance(&prop(&seq, &s), &Operator::real_diagonal(&[1.0, 1.0, -1.0, 1.0])).unwrap();
        assert!(d <= 1e-8, "{d}");
    }

    #[test]
    fn controlled_u0_is_the_f01_gate() {
        let s = ideal();
        let u0 = compile_controlled_u0(&s).unwrap();
        assert_gate(&u0, &controlled(&u0_unitary(1).unwrap()), 1e-8);
        assert_eq!(
            controlled(&u0_unitary(1).unwrap()),
            controlled(&oracle_unitary(&OracleSpec::f01()))
        );
        let f01 = compile_controlled_oracle(&OracleSpec::f01(), &s).unwrap();
        assert_eq!(u0.events, f01.events);
        assert_eq!(u0.total_duration(&s), f01.total_duration(&s));
    }

    #[test]
    fn counting_sequence_shapes() {
        let s = ideal();
        let r0 = compile_counting_sequence(&OracleSpec::f11(), 0, &s).unwrap();
        assert_eq!(
            r0.events,
            vec![PulseEvent::pulse(90.0, 90.0), PulseEvent::pulse(90.0, 270.0)]
        );
        assert_gate(&r0, &Operator::identity(4), 1e-12);

        let r1 = compile_counting_sequence(&OracleSpec::f11(), 1, &s).unwrap();
        assert_eq!(r1.len(), 2 + 4 + 5 + 4);
    }

    #[test]
    fn counting_sequence_matches_circuit() {
        let s = ideal();
        for f in OracleSpec::one_bit_all() {
            for r in 0..=3 {
                let seq = compile_counting_sequence(&f, r, &s).unwrap();
                assert_gate(&seq, &counting_unitary(&f, r, BasisGate::PseudoHadamard), 1e-7);
            }
        }
    }

    #[test]
    fn composes_structurally() {
        let s = SpinSystem::default();
        for f in OracleSpec::one_bit_all() {
            let block = compile_iteration_block(&f, &s).unwrap();
            for r in [0, 1, 4] {
                let seq = compile_counting_sequence(&f, r, &s).unwrap();
                let n = seq.len();
                assert_eq!(n, 2 + r * block.len());
                for (i, e) in seq.events[1..n - 1].iter().enumerate() {
                    assert_eq!(*e, block.events[i % block.len()]);
                }
            }
        }
    }

    #[test]
    fn durations() {
        let s = SpinSystem::realistic();
        let t = solve_timing(&s).unwrap();
        let dur = |f: &OracleSpec| compile_iteration_block(f, &s).unwrap().total_duration(&s);
        let fig2 = compile_controlled_oracle(&OracleSpec::f01(), &s).unwrap();
        let pulses = 2.0 * PI / s.omega1;
        assert!((fig2.total_duration(&s) - (4.0 * t.delta + t.eps270 + pulses)).abs() < 1e-15);
        let d11 = dur(&OracleSpec::f11());
        for f in [OracleSpec::f00(), OracleSpec::f01(), OracleSpec::f10()] {
            assert!(dur(&f) > d11);
        }
        assert!(dur(&OracleSpec::f10()) > dur(&OracleSpec::f01()));
        let f = OracleSpec::f10();
        let base = compile_counting_sequence(&f, 0, &s).unwrap().total_duration(&s);
        for r in 1..6 {
            let total = compile_counting_sequence(&f, r, &s).unwrap().total_duration(&s);
            assert!((total - base - r as f64 * dur(&f)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wide_oracles() {
        let f = OracleSpec::from_matches(2, &[1]).unwrap();
        assert!(matches!(
            compile_controlled_oracle(&f, &ideal()),
            Err(Error::InvalidOracle(_))
        ));
    }

    #[test]
    fn printer() {
        let s = SpinSystem::default();
        let seq = compile_controlled_oracle(&OracleSpec::f01(), &s).unwrap();
        let text = seq.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "PULSE 180deg 0deg");
        assert_eq!(lines[0], "DELAY 0.0173214285714");
        assert_eq!(PulseEvent::pulse(90.0, -90.0).to_string(), "PULSE 90deg 270deg");
        assert_eq!(PulseEvent::GradientCrush.to_string(), "CRUSH");
    }

    #[test]
    fn phase_shift_wraps() {
        let seq = PulseSequence::from_events("x", vec![PulseEvent::pulse(90.0, 270.0), PulseEvent::delay(1.0)]);
        let shifted = seq.phase_shifted(180.0);
        assert_eq!(shifted.events[0], PulseEvent::pulse(90.0, 90.0));
        assert_eq!(shifted.events[1], PulseEvent::delay(1.0));
    }

    #[test]
    fn event_validation() {
        assert!(PulseEvent::pulse(0.0, 0.0).validate().is_err());
        assert!(PulseEvent::pulse(360.0, 0.0).validate().is_ok());
        assert!(PulseEvent::delay(-1.0).validate().is_err());
    }
}
