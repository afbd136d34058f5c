//! Simulated NMR signals for the four one-bit oracles, with fits.
//!
//! Pass a directory to also write one CSV per oracle.

use std::fs;
use std::path::PathBuf;

use qcount::circuit::OracleSpec;
use qcount::counting::{acquire_series, fit_damped_cosine};
use qcount::nmrengine::{NmrBackend, SpinSystem};

fn main() -> qcount::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let backend = NmrBackend::new(SpinSystem::default());
    for f in OracleSpec::one_bit_all() {
        let series = acquire_series(&backend, &f, 24)?;
        let fit = fit_damped_cosine(&series)?;
        println!("{} phi={:.4} lambda={:.4}", f.label(), fit.phi_hat, fit.decay_rate);
        let trace: Vec<String> = series.values().iter().map(|v| format!("{v:+.2}")).collect();
        println!("  {}", trace.join(" "));
        if let Some(dir) = &out_dir {
            fs::create_dir_all(dir).expect("output directory");
            let mut csv = String::from("r,normalized\n");
            for p in &series.points {
                csv.push_str(&format!("{},{}\n", p.r, p.value));
            }
            fs::write(dir.join(format!("{}.csv", f.label())), csv).expect("write csv");
        }
    }
    Ok(())
}
