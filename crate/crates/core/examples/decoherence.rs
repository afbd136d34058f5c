//! Fitted decay rate against T2. The oracles with longer pulse programs
//! lose signal faster.

use qcount::circuit::OracleSpec;
use qcount::counting::{acquire_series, fit_damped_cosine};
use qcount::nmrengine::{NmrBackend, SpinSystem};

fn main() -> qcount::Result<()> {
    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "T2", "f00", "f01", "f10", "f11");
    for t2 in [f64::INFINITY, 5.0, 1.5, 0.5] {
        let system = SpinSystem {
            t2,
            b1_sigma: 0.0,
            ensemble_samples: 1,
            ..SpinSystem::default()
        };
        let backend = NmrBackend::new(system);
        let mut row = format!("{t2:>6}");
        for f in OracleSpec::one_bit_all() {
            let fit = fit_damped_cosine(&acquire_series(&backend, &f, 30)?)?;
            row.push_str(&format!(" {:>8.4}", fit.decay_rate));
        }
        println!("{row}");
    }
    Ok(())
}
