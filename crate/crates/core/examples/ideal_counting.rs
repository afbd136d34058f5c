//! Count the marked items of a few oracles with the exact gate-level backend.

use qcount::circuit::OracleSpec;
use qcount::counting::{estimate_count, IdealBackend};

fn main() -> qcount::Result<()> {
    let backend = IdealBackend::default();
    let oracles = [
        OracleSpec::f00(),
        OracleSpec::f01(),
        OracleSpec::f10(),
        OracleSpec::f11(),
        OracleSpec::from_matches(3, &[1, 4, 6])?,
        "0110100110010110".parse()?,
    ];
    println!(
        "{:>18} {:>4} {:>10} {:>10} {:>4}",
        "oracle", "N", "phi_hat", "k_real", "k"
    );
    for f in &oracles {
        let est = estimate_count(&backend, f, f.size(), 32)?;
        println!(
            "{:>18} {:>4} {:>10.6} {:>10.6} {:>4}",
            f.label(),
            f.size(),
            est.fit.phi_hat,
            est.k_real,
            est.k
        );
        assert_eq!(est.k, f.k());
    }
    Ok(())
}
