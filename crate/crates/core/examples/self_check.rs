//! Run the cross-module checks, once as built and once with a deliberate
//! sign error in the pseudo-Hadamard.

use qcount::verify::{run_checks, VerifyOptions};

fn main() {
    let clean = run_checks(&VerifyOptions::default());
    println!("{clean}\n");
    let broken = run_checks(&VerifyOptions {
        flip_pseudo_hadamard: true,
        ..VerifyOptions::default()
    });
    for c in broken.failures() {
        println!("caught: {} ({})", c.name, c.detail);
    }
}
