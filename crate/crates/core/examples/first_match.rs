//! Locate the first marked item by bisection on counted prefixes.

use qcount::circuit::OracleSpec;
use qcount::counting::{first_match, IdealBackend};

fn main() -> qcount::Result<()> {
    let backend = IdealBackend::default();
    for matches in [&[5usize][..], &[3, 12][..], &[0, 1, 2, 15][..], &[14][..]] {
        let f = OracleSpec::from_matches(4, matches)?;
        let found = first_match(&f, f.size(), &backend)?;
        println!(
            "{}: first match {} after {} counting calls",
            f.label(),
            found.index,
            found.counting_calls
        );
    }
    let none = OracleSpec::from_matches(4, &[])?;
    println!("{}: {}", none.label(), first_match(&none, 16, &backend).unwrap_err());
    Ok(())
}
