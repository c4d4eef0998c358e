//! Finite-size thresholds by bisection on p: survival to the boundary of
//! Λ_n crosses 1/2. Expect roughly 0.45 (d=2), 0.23 (d=3) and 0.50 for the
//! i.i.d. directed model.
//!
//! `cargo run --release --example critical_threshold -- [trials]`

use neighperc::estimate::estimate_pc;
use neighperc::models::{param, ModelSpec};

fn main() -> Result<(), neighperc::Error> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let runs = [
        ("2-neighbor, d=2", ModelSpec::TwoDpNeighbor { d: 2, p: param(1, 2) }, 128),
        ("2-neighbor, d=3", ModelSpec::TwoDpNeighbor { d: 3, p: param(1, 2) }, 24),
        ("iid directed", ModelSpec::IidDirected { p: param(1, 2) }, 128),
    ];
    for (name, family, n) in runs {
        let r = estimate_pc(&family, n, trials, 0.01, 7)?;
        println!("{name:<16} n={n:<4} p_c in [{:.4}, {:.4}]", r.lo, r.hi);
        for probe in &r.probes {
            println!("    p={:<7} survival {:.3}", probe.p.to_string(), probe.survival.mean);
        }
    }
    Ok(())
}
