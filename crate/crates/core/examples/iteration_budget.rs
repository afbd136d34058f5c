//! How many iterations a count needs, exactly or to relative accuracy.

use qcount::counting::iteration_budget;

fn main() -> qcount::Result<()> {
    println!("{:>8} {:>6} {:>12} {:>14}", "N", "k", "exact", "eps=0.1");
    for n in [16usize, 1 << 10, 1 << 20] {
        for k in [1, n / 8, n / 2] {
            let b = iteration_budget(n, k, 0.1)?;
            println!("{n:>8} {k:>6} {:>12.1} {:>14.1}", b.exact, b.relative);
        }
    }
    Ok(())
}
