//! The Grover iterate's eigenphases and the phase kicked back onto the
//! control qubit.

use qcount::circuit::{
    counting_circuit_state_from, grover_eigensystem, kickback_control_state, BasisGate, OracleSpec, TargetStart,
};

fn main() {
    for n in 1..=3u32 {
        let size = 1usize << n;
        for k in 0..=size {
            let f = OracleSpec::from_matches(n, &(0..k).collect::<Vec<_>>()).unwrap();
            let eig = grover_eigensystem(&f);
            println!(
                "N={size:<2} k={k:<2} phi={:.9} numeric={:.9} lambda+={:.4}",
                eig.phase.phi, eig.numeric_phi, eig.eigenvalue_plus
            );
        }
    }

    let f = OracleSpec::f01();
    let phi = grover_eigensystem(&f).phase.phi;
    println!("\ncontrol qubit, f01 with the target in an eigenstate:");
    for r in 0..=4 {
        let rho = counting_circuit_state_from(&f, r, BasisGate::Hadamard, TargetStart::EigenPlus);
        let want = kickback_control_state(r as f64 * phi);
        let gap = rho.operator().max_abs_diff(&want).unwrap();
        println!(
            "r={r} rho00={:.6} rho01={:.6} deviation={gap:.1e}",
            rho.get(0, 0),
            rho.get(0, 1)
        );
    }
}
