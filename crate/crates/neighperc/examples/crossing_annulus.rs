//! Rectangle crossings and circuits around an annulus, the two box events
//! used in renormalization arguments, for the (2,ε)-model at a few ε.

use neighperc::estimate::{annulus_cycle, crossing};
use neighperc::models::{param, ModelSpec};

fn main() -> Result<(), neighperc::Error> {
    let trials = 2000;
    for eps in [param(0, 1), param(1, 4), param(1, 1)] {
        let spec = ModelSpec::TwoEps { eps };
        for l in [8, 16, 32] {
            let c = crossing(&spec, l, trials, 3)?;
            let a = annulus_cycle(&spec, l, trials / 4, 3)?;
            println!(
                "{spec:<16} L={l:<3} cross 3L×L {:.3}   circuit {:.3} (glued {:.3})",
                c.mean, a.exact.mean, a.glued.mean
            );
        }
    }
    Ok(())
}
