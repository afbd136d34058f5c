//! Finite-power pulses: the f00 signal ripples around the fitted curve,
//! alternating sign from one iteration to the next.

use qcount::circuit::OracleSpec;
use qcount::counting::{acquire_series, fit_damped_cosine};
use qcount::nmrengine::{NmrBackend, PulseMode, SpinSystem};

fn main() -> qcount::Result<()> {
    for ratio in [20.0, 50.0, 200.0] {
        let base = SpinSystem::realistic();
        let system = SpinSystem {
            omega1: ratio * base.omega,
            b1_sigma: 0.0,
            ensemble_samples: 1,
            pulse_mode: PulseMode::Realistic,
            ..base
        };
        let series = acquire_series(&NmrBackend::new(system), &OracleSpec::f00(), 10)?;
        let fit = fit_damped_cosine(&series)?;
        let res = fit.residuals(&series);
        let alternating = res.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        let worst = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("omega1/omega = {ratio:>5}: {alternating}/10 sign changes, max residual {worst:.2e}");
    }
    Ok(())
}
