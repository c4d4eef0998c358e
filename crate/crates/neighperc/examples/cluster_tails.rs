//! Tails of the dual forward set and of the first visited cluster, next to
//! pattern-constrained bond percolation at q = 1/2.

use neighperc::estimate::{constrained_survival, dual_tail, first_cluster_tail};
use neighperc::models::{param, ModelSpec};

fn main() -> Result<(), neighperc::Error> {
    let spec = ModelSpec::TwoEps { eps: param(0, 1) };
    let trials = 5000;

    let tail = dual_tail(&spec, 100, trials, 1)?;
    print!("P(|For(o*)| >= n):");
    for pt in tail.iter().filter(|pt| pt.n % 20 == 0 || pt.n == 1) {
        print!("  n={} {:.3}", pt.n, pt.estimate.mean);
    }
    println!();

    println!("\n  n   |Cl_1|>=n   Cl_1 reaches n   constrained q=1/2");
    for pt in first_cluster_tail(&spec, &[2, 4, 8, 16], trials, 1)? {
        let c = constrained_survival(0.5, pt.n as u32, trials, 2)?;
        println!("{:>3}   {:.4}      {:.4}           {:.4}", pt.n, pt.size.mean, pt.reach.mean, c.mean);
    }
    Ok(())
}
