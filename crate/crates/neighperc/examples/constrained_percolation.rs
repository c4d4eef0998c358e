//! Bond percolation with the forbidden pattern: a path may not run along a
//! 5-edge trail whose two designated edges are closed. Compares constrained
//! and plain connection probabilities and shows one admissible path.

use neighperc::constrained::{constrained_connect, path_uses_pattern, sample_bond};
use neighperc::estimate::constrained_survival;
use neighperc::lattice::Window;

fn main() -> Result<(), neighperc::Error> {
    let bonds = sample_bond(0.6, Window::square(0, 0, 10), 4);
    match constrained_connect(&bonds, (0, 0), 8)? {
        Some(path) => {
            println!("admissible path of {} steps, uses a pattern: {}", path.len() - 1, path_uses_pattern(&path, &bonds)?);
            println!("  {path:?}");
        }
        None => println!("no admissible path in this sample"),
    }

    println!("\n   q    n   P(o -> boundary without pattern)");
    for q in [0.45, 0.5, 0.55] {
        for n in [4, 8, 16] {
            let e = constrained_survival(q, n, 4000, 1)?;
            println!("{q:>5} {n:>4}   {:.4} ± {:.4}", e.mean, e.half_width());
        }
    }
    Ok(())
}
