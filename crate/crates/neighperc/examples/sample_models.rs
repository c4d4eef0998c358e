//! Samples each model on a small window, prints its debug grid and checks
//! the empirical edge density against the exact marginal.

use neighperc::models::{edge_marginal, param, rational_string, sample_configuration, ModelSpec};
use neighperc::lattice::Window;

fn main() -> Result<(), neighperc::Error> {
    let specs = [
        ModelSpec::TwoEps { eps: param(0, 1) },
        ModelSpec::TwoEps { eps: param(1, 2) },
        ModelSpec::Corner { p: param(1, 2) },
        ModelSpec::NsEw { p: param(1, 2) },
        ModelSpec::IidDirected { p: param(1, 2) },
        ModelSpec::AllOrNone { p: param(1, 2) },
        ModelSpec::IsotropicDegreeTwo { rho: param(1, 8) },
    ];
    for spec in specs {
        let small = sample_configuration(&spec, Window::square(0, 0, 2), 7)?;
        println!("{spec}\n{}", small.debug_grid());

        let big = sample_configuration(&spec, Window::square(0, 0, 100), 7)?;
        let open: u32 = big.outcomes.iter().map(|o| o.count()).sum();
        let density = open as f64 / (4 * big.outcomes.len()) as f64;
        println!("  edge density {density:.4}, exact marginal {}\n", rational_string(&edge_marginal(&spec)?));
    }
    Ok(())
}
