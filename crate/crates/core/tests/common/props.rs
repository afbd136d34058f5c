//! Randomized invariant suites. Each suite runs a fixed-seed proptest
//! runner, so the `properties` target and the acceptance summary see the
//! same cases.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};

use qcount::circuit::{counting_circuit_state, grover_eigensystem, ideal_signal, uniform_state, BasisGate, OracleSpec};
use qcount::counting::{first_match_with, phase_to_count, IdealBackend};
use qcount::nmrengine::{initial_state, run_sequence_trace, PulseMode, SpinSystem};
use qcount::opcore::{
    equal_up_to_global_phase, evolve, expectation, expm_hermitian, global_phase_distance, partial_trace_target,
    sigma_z, tensor, DensityMatrix, Operator, C64,
};
use qcount::pulsecompile::{
    compile_counting_sequence, compile_iteration_block, solve_timing, PulseEvent, PulseSequence,
};
use qcount::Error;

pub type Suite = (&'static str, fn() -> Result<(), String>);

pub fn all() -> Vec<Suite> {
    vec![
        ("evolve keeps trace and hermiticity", evolve_preserves_state),
        (
            "target unitaries leave the control marginal",
            target_unitary_keeps_marginal,
        ),
        ("expm is additive in time", expm_additive),
        ("global-phase equality", global_phase_equivalence),
        ("circuit signal identity", signal_identity),
        ("uniform state splits into eigenvectors", uniform_decomposition),
        ("phase to count round trip", count_round_trip),
        ("first match equals linear scan", first_match_linear_scan),
        ("timing residuals", timing_residuals),
        ("compiled sequence matches circuit", compiled_sequence_matches_circuit),
        ("sequence composability", sequence_composability),
        ("duration affine in r", duration_affine),
        ("state validity after every event", state_validity),
    ]
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn finish<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn fail(e: Error) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

/// `(qubits, 2 d^2 reals)` for a random complex matrix.
fn raw_matrix(max_qubits: u32) -> impl Strategy<Value = (u32, Vec<f64>)> {
    (1..=max_qubits).prop_flat_map(|q| {
        let d = 1usize << q;
        (Just(q), vec(-1.0f64..1.0, 2 * d * d))
    })
}

fn complex_matrix(q: u32, data: &[f64]) -> DMatrix<C64> {
    let d = 1usize << q;
    DMatrix::from_fn(d, d, |i, j| {
        let at = 2 * (i * d + j);
        C64::new(data[at], data[at + 1])
    })
}

fn hermitian(q: u32, data: &[f64]) -> Operator {
    let m = complex_matrix(q, data);
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    Operator::from_matrix(h).unwrap()
}

fn density(q: u32, data: &[f64]) -> DensityMatrix {
    let m = complex_matrix(q, data);
    let mut p = &m * m.adjoint();
    let tr = p.trace();
    p /= tr;
    DensityMatrix::new(Operator::from_matrix(p).unwrap()).unwrap()
}

fn oracle() -> impl Strategy<Value = OracleSpec> {
    (1u32..=3)
        .prop_flat_map(|n| vec(any::<bool>(), 1usize << n))
        .prop_map(|t| OracleSpec::new(t).unwrap())
}

fn one_bit() -> impl Strategy<Value = OracleSpec> {
    (0usize..4).prop_map(|i| OracleSpec::one_bit_all()[i].clone())
}

/// A weakly coupled system whose timing is always feasible.
fn feasible_system() -> impl Strategy<Value = SpinSystem> {
    (1.0f64..25.0, 12.0f64..200.0).prop_map(|(j, ratio)| SpinSystem {
        j,
        omega: 2.0 * PI * j * ratio,
        ..SpinSystem::ideal()
    })
}

pub fn evolve_preserves_state() -> Result<(), String> {
    let strategy = raw_matrix(3).prop_flat_map(|(q, h)| {
        let d = 1usize << q;
        (Just(q), Just(h), vec(-1.0f64..1.0, 2 * d * d), -3.0f64..3.0)
    });
    finish(runner(1000).run(&strategy, |(q, h, r, t)| {
        let u = expm_hermitian(&hermitian(q, &h), t).map_err(fail)?;
        let out = evolve(&density(q, &r), &u).map_err(fail)?;
        prop_assert!((out.operator().trace() - C64::new(1.0, 0.0)).norm() <= 1e-12);
        prop_assert!(out.operator().hermiticity_error() <= 1e-12);
        Ok(())
    }))
}

pub fn target_unitary_keeps_marginal() -> Result<(), String> {
    let strategy = (1u32..=2).prop_flat_map(|n| {
        let d = 1usize << n;
        let dd = 2 * d;
        (Just(n), vec(-1.0f64..1.0, 2 * d * d), vec(-1.0f64..1.0, 2 * dd * dd))
    });
    finish(runner(1000).run(&strategy, |(n, h, r)| {
        let rho = density(n + 1, &r);
        let u = tensor(
            &Operator::identity(2),
            &expm_hermitian(&hermitian(n, &h), 1.0).map_err(fail)?,
        );
        let before = partial_trace_target(&rho, n).map_err(fail)?;
        let after = partial_trace_target(&evolve(&rho, &u).map_err(fail)?, n).map_err(fail)?;
        prop_assert!(before.operator().max_abs_diff(after.operator()).map_err(fail)? <= 1e-12);
        Ok(())
    }))
}

pub fn expm_additive() -> Result<(), String> {
    let strategy = (raw_matrix(3), -2.0f64..2.0, -2.0f64..2.0);
    finish(runner(1000).run(&strategy, |((q, h), t1, t2)| {
        let h = hermitian(q, &h);
        let a = expm_hermitian(&h, t1).map_err(fail)?;
        let b = expm_hermitian(&h, t2).map_err(fail)?;
        let ab = expm_hermitian(&h, t1 + t2).map_err(fail)?;
        prop_assert!((&a * &b).max_abs_diff(&ab).map_err(fail)? <= 1e-10);
        Ok(())
    }))
}

pub fn global_phase_equivalence() -> Result<(), String> {
    let strategy = (raw_matrix(3), raw_matrix(3), -PI..PI);
    finish(runner(1000).run(&strategy, |((q, h), (q2, h2), alpha)| {
        let u = expm_hermitian(&hermitian(q, &h), 1.0).map_err(fail)?;
        let v = expm_hermitian(&hermitian(q2, &h2), 1.0).map_err(fail)?;
        let shifted = u.scale(C64::from_polar(1.0, alpha));
        prop_assert!(equal_up_to_global_phase(&u, &u, 1e-12).map_err(fail)?);
        prop_assert!(equal_up_to_global_phase(&u, &shifted, 1e-12).map_err(fail)?);
        prop_assert!(equal_up_to_global_phase(&shifted, &u, 1e-12).map_err(fail)?);
        if q == q2 {
            let d_uv = global_phase_distance(&u, &v).map_err(fail)?;
            let d_vu = global_phase_distance(&v, &u).map_err(fail)?;
            prop_assert!((d_uv - d_vu).abs() <= 1e-12);
        }
        Ok(())
    }))
}

pub fn signal_identity() -> Result<(), String> {
    let strategy = (oracle(), 0usize..=16, prop::bool::ANY);
    finish(runner(1000).run(&strategy, |(f, r, pseudo)| {
        let basis = if pseudo {
            BasisGate::PseudoHadamard
        } else {
            BasisGate::Hadamard
        };
        let rho = counting_circuit_state(&f, r, basis);
        let got = expectation(&rho, &sigma_z()).map_err(fail)?;
        let want = ideal_signal(f.k(), f.size(), r).map_err(fail)?;
        prop_assert!((got - want).abs() <= 1e-9, "{f} r={r}: {got} vs {want}");
        Ok(())
    }))
}

pub fn uniform_decomposition() -> Result<(), String> {
    let strategy = oracle().prop_filter("0 < k < N", |f| f.k() > 0 && f.k() < f.size());
    finish(runner(1000).run(&strategy, |f| {
        let eig = grover_eigensystem(&f);
        let split = (&eig.plus + &eig.minus) / C64::new(2f64.sqrt(), 0.0);
        prop_assert!((uniform_state(f.size()) - split).norm() <= 1e-9);
        Ok(())
    }))
}

pub fn count_round_trip() -> Result<(), String> {
    for n_items in [2usize, 4, 8] {
        for k in 0..=n_items {
            let phi = (1.0 - 2.0 * k as f64 / n_items as f64).acos();
            let (_, got) = phase_to_count(phi, n_items).map_err(|e| e.to_string())?;
            if got != k {
                return Err(format!("N={n_items} k={k} came back as {got}"));
            }
        }
    }
    let strategy = (1u32..=20).prop_flat_map(|b| (Just(1usize << b), 0..=(1usize << b)));
    finish(runner(1000).run(&strategy, |(n_items, k)| {
        let phi = (1.0 - 2.0 * k as f64 / n_items as f64).acos();
        prop_assert_eq!(phase_to_count(phi, n_items).map_err(fail)?.1, k);
        Ok(())
    }))
}

pub fn first_match_linear_scan() -> Result<(), String> {
    let strategy = (2u32..=4).prop_flat_map(|n| vec(any::<bool>(), 1usize << n));
    let backend = IdealBackend::default();
    finish(runner(200).run(&strategy, |table| {
        let f = OracleSpec::new(table.clone()).map_err(fail)?;
        let scan = table.iter().position(|&b| b);
        match (first_match_with(&f, f.size(), &backend, 32), scan) {
            (Ok(found), Some(i)) => {
                prop_assert_eq!(found.index, i);
                prop_assert!(found.counting_calls <= f.n() as usize + 1);
            }
            (Err(Error::NoMatch), None) => {}
            (other, scan) => prop_assert!(false, "{f}: {other:?} vs scan {scan:?}"),
        }
        Ok(())
    }))
}

pub fn timing_residuals() -> Result<(), String> {
    let strategy = (0.5f64..50.0, 10.0f64..20000.0);
    finish(runner(1000).run(&strategy, |(j, omega_hz)| {
        let system = SpinSystem {
            j,
            omega: 2.0 * PI * omega_hz,
            ..SpinSystem::ideal()
        };
        match solve_timing(&system) {
            Ok(t) => {
                prop_assert!(t.delta >= 0.0 && t.eps270 > 0.0 && t.eps45 > 0.0);
                prop_assert!(((4.0 * t.delta + t.eps270) - 1.0 / (2.0 * j)).abs() * 2.0 * j <= 1e-12);
                prop_assert!((t.eps270 * system.omega - 3.0 * PI).abs() <= 1e-12);
            }
            Err(Error::InfeasibleTiming { .. }) => {
                prop_assert!(1.0 / (2.0 * j) < 3.0 * PI / system.omega);
            }
            Err(e) => return Err(fail(e)),
        }
        Ok(())
    }))
}

pub fn compiled_sequence_matches_circuit() -> Result<(), String> {
    use qcount::circuit::counting_unitary;
    use qcount::nmrengine::sequence_propagator;
    let strategy = (feasible_system(), one_bit(), 0usize..=3);
    finish(runner(1000).run(&strategy, |(system, f, r)| {
        let seq = compile_counting_sequence(&f, r, &system).map_err(fail)?;
        let u = sequence_propagator(&system, &seq, 1.0).map_err(fail)?;
        let target = counting_unitary(&f, r, BasisGate::PseudoHadamard);
        let d = global_phase_distance(&u, &target).map_err(fail)?;
        prop_assert!(d <= 1e-7, "{f} r={r} J={} omega={}: {d:e}", system.j, system.omega);
        Ok(())
    }))
}

pub fn sequence_composability() -> Result<(), String> {
    let strategy = (feasible_system(), one_bit(), 0usize..=20);
    finish(runner(1000).run(&strategy, |(system, f, r)| {
        let seq = compile_counting_sequence(&f, r, &system).map_err(fail)?;
        let block = compile_iteration_block(&f, &system).map_err(fail)?;
        let mut want = PulseSequence::new("expected");
        want.push(PulseEvent::pulse(90.0, 90.0));
        for _ in 0..r {
            want.append(&block);
        }
        want.push(PulseEvent::pulse(90.0, 270.0));
        prop_assert_eq!(&seq.events, &want.events);
        Ok(())
    }))
}

pub fn duration_affine() -> Result<(), String> {
    let strategy = (feasible_system(), prop::bool::ANY, 2usize..=40);
    finish(runner(1000).run(&strategy, |(mut system, realistic, r)| {
        if realistic {
            system.pulse_mode = PulseMode::Realistic;
        }
        let mut blocks = Vec::new();
        for f in OracleSpec::one_bit_all() {
            let d = |r| compile_counting_sequence(&f, r, &system).map(|s| s.total_duration(&system));
            let (d0, d1, dr) = (d(0).map_err(fail)?, d(1).map_err(fail)?, d(r).map_err(fail)?);
            let step = d1 - d0;
            prop_assert!((dr - (d0 + r as f64 * step)).abs() <= 1e-12 * dr.max(1.0));
            blocks.push(step);
        }
        let shortest = blocks.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(blocks[3], shortest);
        prop_assert!(blocks[1] > blocks[3]);
        Ok(())
    }))
}

pub fn state_validity() -> Result<(), String> {
    let strategy = (
        feasible_system(),
        one_bit(),
        0usize..=3,
        0.8f64..1.2,
        prop_oneof![Just(f64::INFINITY), 0.05f64..10.0],
        prop::bool::ANY,
    );
    finish(runner(300).run(&strategy, |(mut system, f, r, b1, t2, realistic)| {
        system.t2 = t2;
        system.polarization = 1.0;
        if realistic {
            system.pulse_mode = PulseMode::Realistic;
            system.omega1 = 20.0 * system.omega;
        }
        let mut seq = compile_counting_sequence(&f, r, &system).map_err(fail)?;
        seq.push(PulseEvent::GradientCrush);
        seq.push(PulseEvent::pulse(90.0, 90.0));
        let states = run_sequence_trace(&system, &initial_state(&system), &seq, b1).map_err(fail)?;
        for (i, rho) in states.iter().enumerate() {
            prop_assert!(rho.validate().is_ok(), "event {i}: {:?}", rho.validate());
        }
        Ok(())
    }))
}
