//! Survival at p = 1/2 across the comparison models, then along the
//! isotropic degree-two family from ρ = 0 (corner-free) to ρ = 1/4.
//!
//! `cargo run --release --example compare_models -- [n] [trials]`

use neighperc::estimate::{theta_comparison, theta_vs_rho};
use neighperc::models::param;

fn main() -> Result<(), neighperc::Error> {
    let mut args = std::env::args().skip(1);
    let n: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(64);
    let trials: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);

    println!("survival to the boundary of Λ_{n}, {trials} trials");
    for row in theta_comparison(n, trials, 1)? {
        let e = &row.estimate;
        println!("  {:<12} {:.4}  [{:.4}, {:.4}]", row.name, e.mean, e.ci95[0], e.ci95[1]);
    }
    let rhos = [param(0, 1), param(1, 16), param(1, 8), param(3, 16), param(1, 4)];
    println!("isotropic degree-two family");
    for row in theta_vs_rho(&rhos, n, trials, 1)? {
        println!("  {:<24} {:.4}", row.spec.to_string(), row.estimate.mean);
    }
    Ok(())
}
