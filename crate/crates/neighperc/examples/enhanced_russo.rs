//! The enhanced model: diagonal q-edges bypass forbidden patterns. Lists the
//! pivotal edges of one sample, then compares pivotal-count derivatives
//! with central finite differences.
//!
//! `cargo run --release --example enhanced_russo -- [trials]`

use neighperc::enhance::{enhanced_sample, finite_difference, pivotal_sweep, russo_estimates, Axis};
use neighperc::lattice::Window;

fn main() -> Result<(), neighperc::Error> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5000);
    let (p, q, n) = (0.5, 0.3, 6);

    let config = enhanced_sample(p, q, Window::square(0, 0, n + 2), 11)?;
    let sweep = pivotal_sweep(&config, n)?;
    let (good, bad) = sweep.good_bad(n);
    println!(
        "sample: connected {}, {} pivotal p-edges ({good} good, {bad} bad), {} pivotal q-edges, {} open q-edges",
        sweep.connected,
        sweep.p_pivotal.len(),
        sweep.q_pivotal.len(),
        config.open_q_edges().len()
    );

    let r = russo_estimates(p, q, n, trials, 1)?;
    let fp = finite_difference(p, q, Axis::P, 0.02, n, trials, 2)?;
    let fq = finite_difference(p, q, Axis::Q, 0.02, n, trials, 3)?;
    println!("theta_{n}({p},{q}) = {:.4}", r.theta.mean);
    println!("d/dp: pivotal count {:.4} ± {:.4}, finite difference {:.4} ± {:.4}", r.dp.mean, r.dp.half_width(), fp.mean, fp.half_width());
    println!("d/dq: pivotal count {:.5} ± {:.5}, finite difference {:.5} ± {:.5}", r.dq.mean, r.dq.half_width(), fq.mean, fq.half_width());
    Ok(())
}
