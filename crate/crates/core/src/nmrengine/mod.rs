//! Two-spin NMR simulation: free precession under the weak-coupling
//! Hamiltonian, hard pulses, T2 decay, B1 spread and the readout chain
//! (crush, zero-quantum filter, read pulse, CYCLOPS, phase correction).

mod physics;
mod system;

pub use physics::{
    apply_t2, delay_propagator, free_propagator, gradient_crush, hamiltonian, initial_state, measure_signal,
    pulse_propagator, run_sequence, run_sequence_trace, sequence_propagator, spin_operator, zero_quantum_filter,
    ReadoutMethod,
};
pub use system::{PulseMode, SpinSystem};

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::circuit::OracleSpec;
use crate::counting::SignalBackend;
use crate::error::{Error, Result};
use crate::opcore::{DensityMatrix, Operator, C64};
use crate::pulsecompile::{compile_counting_sequence, compile_iteration_block, PulseEvent, PulseSequence};
use physics::Evolver;

/// One row of an experiment: the phase-corrected signal and its value
/// relative to the `r = 0` run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRecord {
    pub oracle_id: String,
    pub r: usize,
    pub raw: f64,
    pub normalized: f64,
}

/// Pulse-amplitude scale factors for the ensemble, drawn from
/// `Normal(1, b1_sigma)` with non-positive draws rejected.
pub fn b1_scales(system: &SpinSystem) -> Result<Vec<f64>> {
    if system.b1_sigma == 0.0 {
        return Ok(vec![1.0; system.ensemble_samples]);
    }
    let normal = Normal::new(1.0, system.b1_sigma).map_err(|e| Error::InvalidSystem(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(system.rng_seed);
    Ok((0..system.ensemble_samples)
        .map(|_| loop {
            let x = normal.sample(&mut rng);
            if x > 0.0 {
                break x;
            }
        })
        .collect())
}

fn cyclops_steps(system: &SpinSystem) -> usize {
    if system.cyclops {
        4
    } else {
        1
    }
}

/// Receiver with a quadrature imbalance `eps`, followed by the digital
/// reference rotation of CYCLOPS step `k`.
fn receive(m: C64, eps: f64, k: usize) -> C64 {
    let detected = C64::new(m.re, m.im * eps.cos() - m.re * eps.sin());
    detected * C64::from_polar(1.0, -FRAC_PI_2 * k as f64)
}

fn phase_corrected(m: C64, reference: C64) -> Result<f64> {
    let norm = reference.norm();
    if norm < 1e-12 {
        return Err(Error::ZeroReference(norm));
    }
    Ok((m * reference.conj()).re / norm)
}

// Looser than DensityMatrix::new: a few thousand conjugations by
// eigendecomposition-built unitaries walk the trace by ~1e-12.
const DRIFT_TOL: f64 = 1e-9;

fn check_state(m: &DMatrix<C64>) -> Result<()> {
    let op = Operator::from_matrix(m.clone())?;
    let herm = op.hermiticity_error();
    let trace = op.trace();
    if herm > DRIFT_TOL || (trace - C64::new(1.0, 0.0)).norm() > DRIFT_TOL {
        return Err(Error::InvalidState(format!(
            "propagated state drifted: hermiticity {herm:e}, trace {trace}"
        )));
    }
    let min_eig = DensityMatrix::new_unchecked(op).min_eigenvalue();
    if min_eig < -DRIFT_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
    }
    Ok(())
}

/// Received signals for `r = 0..=r_max` of one ensemble member in one
/// CYCLOPS step, stepping the state one iteration block at a time.
fn member_trace(system: &SpinSystem, block: &PulseSequence, r_max: usize, b1: f64, step: usize) -> Result<Vec<C64>> {
    let shift = 90.0 * step as f64;
    let block = block.phase_shifted(shift);
    let open = PulseEvent::pulse(90.0, 90.0 + shift);
    let close = PulseEvent::pulse(90.0, 270.0 + shift);

    let mut ev = Evolver::new(system, b1);
    let mut rho = initial_state(system).matrix().clone();
    ev.step(&mut rho, &open);
    let mut out = Vec::with_capacity(r_max + 1);
    for r in 0..=r_max {
        if r > 0 {
            ev.run(&mut rho, &block);
        }
        let mut closed = rho.clone();
        ev.step(&mut closed, &close);
        check_state(&closed)?;
        let m = ev.readout(&closed, shift);
        out.push(receive(m, system.receiver_phase_error, step));
    }
    Ok(out)
}

/// Step-averaged complex signal per ensemble member, indexed `[member][r]`.
fn ensemble_traces(system: &SpinSystem, f: &OracleSpec, r_max: usize) -> Result<Vec<Vec<C64>>> {
    system.validate()?;
    let block = compile_iteration_block(f, system)?;
    let scales = b1_scales(system)?;
    let steps = cyclops_steps(system);
    let grid: Vec<(usize, usize)> = (0..scales.len())
        .flat_map(|m| (0..steps).map(move |s| (m, s)))
        .collect();
    let traces: Vec<Vec<C64>> = grid
        .par_iter()
        .map(|&(m, s)| member_trace(system, &block, r_max, scales[m], s))
        .collect::<Result<_>>()?;
    Ok(traces
        .chunks(steps)
        .map(|chunk| {
            (0..=r_max)
                .map(|r| chunk.iter().map(|t| t[r]).sum::<C64>() / steps as f64)
                .collect()
        })
        .collect())
}

fn ensemble_mean(traces: &[Vec<C64>], r_max: usize) -> Vec<C64> {
    let n = traces.len() as f64;
    (0..=r_max)
        .map(|r| traces.iter().map(|t| t[r]).sum::<C64>() / n)
        .collect()
}

/// The full experiment for `r = 0..=r_max`, one record per `r`.
pub fn nmr_series(system: &SpinSystem, f: &OracleSpec, r_max: usize) -> Result<Vec<ReadoutRecord>> {
    let mean = ensemble_mean(&ensemble_traces(system, f, r_max)?, r_max);
    let reference = mean[0];
    let raw0 = phase_corrected(reference, reference)?;
    mean.iter()
        .enumerate()
        .map(|(r, &m)| {
            let raw = phase_corrected(m, reference)?;
            Ok(ReadoutRecord {
                oracle_id: f.label(),
                r,
                raw,
                normalized: raw / raw0,
            })
        })
        .collect()
}

/// The phase-corrected ensemble signal after `r` iterations, computed by
/// compiling and running the complete sequence for `r` and for the `r = 0`
/// reference.
pub fn nmr_signal(system: &SpinSystem, f: &OracleSpec, r: usize) -> Result<f64> {
    system.validate()?;
    let scales = b1_scales(system)?;
    let steps = cyclops_steps(system);
    let rho0 = initial_state(system);
    let acquire = |reps: usize| -> Result<C64> {
        let seq = compile_counting_sequence(f, reps, system)?;
        let mut total = C64::new(0.0, 0.0);
        for &b1 in &scales {
            let mut member = C64::new(0.0, 0.0);
            for k in 0..steps {
                let shift = 90.0 * k as f64;
                let rho = run_sequence(system, &rho0, &seq.phase_shifted(shift), b1)?;
                let m = Evolver::new(system, b1).readout(rho.matrix(), shift);
                member += receive(m, system.receiver_phase_error, k);
            }
            total += member / steps as f64;
        }
        Ok(total / scales.len() as f64)
    };
    let reference = acquire(0)?;
    phase_corrected(acquire(r)?, reference)
}

/// Normalized signal of each ensemble member on its own, referenced to the
/// ensemble-mean `r = 0` phase.
pub fn member_signals(system: &SpinSystem, f: &OracleSpec, r: usize) -> Result<Vec<f64>> {
    let traces = ensemble_traces(system, f, r)?;
    let reference = ensemble_mean(&traces, r)[0];
    traces
        .iter()
        .map(|t| Ok(phase_corrected(t[r], reference)? / phase_corrected(t[0], reference)?))
        .collect()
}

/// [`SignalBackend`] over the simulated spectrometer.
#[derive(Debug, Clone)]
pub struct NmrBackend {
    pub system: SpinSystem,
}

impl NmrBackend {
    pub fn new(system: SpinSystem) -> Self {
        NmrBackend { system }
    }
}

impl SignalBackend for NmrBackend {
    fn id(&self) -> String {
        "nmr".into()
    }

    fn signal(&self, f: &OracleSpec, r: usize) -> Result<f64> {
        Ok(nmr_series(&self.system, f, r)?[r].raw)
    }

    fn signals(&self, f: &OracleSpec, r_max: usize) -> Result<Vec<f64>> {
        Ok(nmr_series(&self.system, f, r_max)?
            .into_iter()
            .map(|rec| rec.raw)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ideal_signal;
    use crate::counting::{acquire_series, fit_damped_cosine};
    use std::f64::consts::PI;

    fn quiet(mode: PulseMode) -> SpinSystem {
        SpinSystem {
            pulse_mode: mode,
            ..SpinSystem::ideal()
        }
    }

    #[test]
    fn ideal_physics_matches_gates() {
        let s = SpinSystem::ideal();
        for f in OracleSpec::one_bit_all() {
            let series = nmr_series(&s, &f, 10).unwrap();
            for rec in &series {
                let want = ideal_signal(f.k(), 2, rec.r).unwrap();
                assert!((rec.normalized - want).abs() < 1e-6, "{} r={}", f, rec.r);
            }
        }
    }

    #[test]
    fn f11_alternates_exactly() {
        let s = SpinSystem::ideal();
        for rec in nmr_series(&s, &OracleSpec::f11(), 10).unwrap() {
            let want = if rec.r % 2 == 0 { 1.0 } else { -1.0 };
            assert!((rec.normalized - want).abs() < 1e-7);
        }
    }

    #[test]
    fn incremental_series_matches_full_runs() {
        let s = SpinSystem {
            ensemble_samples: 3,
            receiver_phase_error: 0.1,
            ..SpinSystem::default()
        };
        for f in [OracleSpec::f10(), OracleSpec::f00()] {
            let series = nmr_series(&s, &f, 3).unwrap();
            for rec in &series {
                let direct = nmr_signal(&s, &f, rec.r).unwrap();
                assert!((direct - rec.raw).abs() < 1e-12, "{f} r={}", rec.r);
            }
        }
    }

    #[test]
    fn reference_normalizes_to_one() {
        let s = SpinSystem {
            ensemble_samples: 4,
            polarization: 0.3,
            ..SpinSystem::default()
        };
        let series = nmr_series(&s, &OracleSpec::f01(), 2).unwrap();
        assert_eq!(series[0].normalized, 1.0);
        assert!(series[0].raw > 0.0);
    }

    #[test]
    fn polarization_cancels_in_noiseless_mode() {
        let full = nmr_series(&SpinSystem::ideal(), &OracleSpec::f01(), 4).unwrap();
        let weak = SpinSystem {
            polarization: 0.25,
            ..SpinSystem::ideal()
        };
        let part = nmr_series(&weak, &OracleSpec::f01(), 4).unwrap();
        for (a, b) in full.iter().zip(&part) {
            assert!((a.normalized - b.normalized).abs() < 1e-12);
            assert!((b.raw - 0.25 * a.raw).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_ensemble_is_reproducible() {
        let s = SpinSystem {
            ensemble_samples: 8,
            ..SpinSystem::default()
        };
        let a = nmr_series(&s, &OracleSpec::f01(), 3).unwrap();
        let b = nmr_series(&s, &OracleSpec::f01(), 3).unwrap();
        assert_eq!(a, b);
        let scales = b1_scales(&s).unwrap();
        assert_eq!(scales.len(), 8);
        assert!(scales.iter().all(|&x| x > 0.0));
        let other = b1_scales(&SpinSystem { rng_seed: 1, ..s }).unwrap();
        assert_ne!(scales, other);
    }

    #[test]
    fn cyclops_cancels_receiver_image() {
        let eps = 0.2;
        let m = C64::from_polar(0.7, 0.9);
        // advancing every pulse by 90 deg advances the signal phase by 90 deg
        let cycled: C64 = (0..4)
            .map(|k| receive(m * C64::from_polar(1.0, FRAC_PI_2 * k as f64), eps, k))
            .sum::<C64>()
            / 4.0;
        let gain = (C64::new(1.0, 0.0) + C64::from_polar(1.0, -eps)) / 2.0;
        assert!((cycled - gain * m).norm() < 1e-15);
        let single = receive(m, eps, 0);
        assert!((single / m - gain).norm() > 1e-2);
    }

    #[test]
    fn cyclops_run_matches_clean_receiver() {
        let base = SpinSystem {
            receiver_phase_error: 0.2,
            ..quiet(PulseMode::Realistic)
        };
        let clean = SpinSystem {
            receiver_phase_error: 0.0,
            ..base.clone()
        };
        let with = nmr_series(&base, &OracleSpec::f01(), 3).unwrap();
        let reference = nmr_series(&clean, &OracleSpec::f01(), 3).unwrap();
        for (x, y) in with.iter().zip(&reference) {
            assert!((x.normalized - y.normalized).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclops_is_transparent_without_receiver_error() {
        let s = quiet(PulseMode::Realistic);
        let on = nmr_series(&s, &OracleSpec::f10(), 3).unwrap();
        let off = nmr_series(&SpinSystem { cyclops: false, ..s }, &OracleSpec::f10(), 3).unwrap();
        for (a, b) in on.iter().zip(&off) {
            assert!((a.raw - b.raw).abs() < 1e-12);
        }
    }

    #[test]
    fn b1_spread_gives_member_variance() {
        let s = SpinSystem {
            ensemble_samples: 8,
            ..SpinSystem::default()
        };
        let members = member_signals(&s, &OracleSpec::f01(), 3).unwrap();
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        let var = members.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        assert!(var > 0.0);
        let flat = member_signals(&SpinSystem { b1_sigma: 0.0, ..s }, &OracleSpec::f01(), 3).unwrap();
        assert!(flat.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn realistic_f01_is_a_damped_quarter_cosine() {
        // Off-resonance errors need omega1 well above omega to stay small.
        let base = SpinSystem::realistic();
        let s = SpinSystem {
            omega1: 100.0 * base.omega,
            b1_sigma: 0.0,
            ensemble_samples: 1,
            ..base
        };
        let series = acquire_series(&NmrBackend::new(s), &OracleSpec::f01(), 16).unwrap();
        let fit = fit_damped_cosine(&series).unwrap();
        assert!((fit.phi_hat - PI / 2.0).abs() <= 0.02 * PI / 2.0, "{fit:?}");
        assert!(fit.decay_rate > 0.0);
    }

    #[test]
    fn infeasible_timing_propagates() {
        let s = SpinSystem {
            j: 300.0,
            ..SpinSystem::ideal()
        };
        assert!(matches!(
            nmr_series(&s, &OracleSpec::f01(), 2),
            Err(Error::InfeasibleTiming { .. })
        ));
    }
}
