//! Timing solution and compiled pulse programs for the two-spin machine.

use qcount::circuit::OracleSpec;
use qcount::nmrengine::SpinSystem;
use qcount::pulsecompile::{
    compile_controlled_oracle, compile_counting_sequence, compile_selective_90, solve_timing, Axis, Spin,
};

fn main() -> qcount::Result<()> {
    let system = SpinSystem::default();
    let timing = solve_timing(&system)?;
    println!("omega/2pi = {:.1} Hz, J = {} Hz", system.omega_hz(), system.j);
    println!("{timing}\n");

    println!("{}", compile_selective_90(Spin::Target, Axis::Y, &system)?);
    for f in OracleSpec::one_bit_all() {
        let seq = compile_controlled_oracle(&f, &system)?;
        println!(
            "{}: {} pulses, {:.6} s",
            seq.label,
            seq.pulse_count(),
            seq.total_duration(&system)
        );
    }

    let seq = compile_counting_sequence(&OracleSpec::f10(), 1, &system)?;
    println!("\n{seq}");

    let mut tight = system.clone();
    tight.omega = 2.0 * std::f64::consts::PI * 20.0;
    println!("\nomega/2pi = 20 Hz: {}", solve_timing(&tight).unwrap_err());
    Ok(())
}
