//! Exact rational answers: conditional probabilities of a dual edge given
//! what the exploration has revealed, a small-window escape probability by
//! full enumeration, and self-avoiding walk counts with the union bound.

use neighperc::models::{param, rational_string, ModelSpec};
use neighperc::oracle::{
    conditional_dual_probability, connective_constant_upper, exhaustive_window_probability, origin_escapes, saw_count,
    threshold_lower_bound, ConditionalScenario, Support,
};

fn main() -> Result<(), neighperc::Error> {
    for eps in [param(0, 1), param(1, 2)] {
        let spec = ModelSpec::TwoEps { eps };
        for name in ["none", "w-closed", "s-open", "w-s-open"] {
            let p = conditional_dual_probability(&ConditionalScenario::preset(name, spec)?)?;
            println!("{spec:<14} {name:<9} {}", rational_string(&p));
        }
    }
    let corner = ModelSpec::Corner { p: param(1, 2) };
    for name in ["w-closed", "w-open"] {
        let p = conditional_dual_probability(&ConditionalScenario::preset(name, corner)?)?;
        println!("{corner:<14} {name:<9} {}", rational_string(&p));
    }

    let exact = exhaustive_window_probability(&corner, 2, Support::Interior, origin_escapes)?;
    println!("\nP(origin escapes Λ_2) under {corner}: {}", rational_string(&exact));

    let counts: Vec<u64> = (1..=12).map(saw_count).collect::<Result<_, _>>()?;
    println!("\nself-avoiding walks c_1..c_12: {counts:?}");
    println!(
        "connective constant <= {}, so p_c >= {:.4}",
        rational_string(&connective_constant_upper()),
        num_traits::ToPrimitive::to_f64(&threshold_lower_bound()).unwrap_or(f64::NAN)
    );
    Ok(())
}
