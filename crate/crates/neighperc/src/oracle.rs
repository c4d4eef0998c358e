//! Exact ground truth: conditional probabilities at one vertex, exhaustive
//! enumeration on tiny windows, and self-avoiding walk counts. Everything
//! here is rational arithmetic.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::explore::{escapes, SearchScratch};
use crate::lattice::{dual_to_primal, primal_to_dual, square_siblings, Dir, DirectedPrimalEdge, PrimalVertex, Window};
use crate::models::{to_big, vertex_outcome_distribution, Configuration, ModelSpec, Param, VertexOutcome};
use crate::Error;

/// Largest number of configurations [`exhaustive_window_probability`] visits.
pub const EXHAUSTIVE_GUARD: u128 = 100_000_000;
/// Longest walk [`saw_count`] enumerates.
pub const SAW_MAX_LEN: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiblingStatus {
    #[default]
    Unknown,
    RevealedOpen,
    RevealedClosed,
}

/// What is known about the three other sides of the target's unit square.
/// The target plays the east role; all four are dual images of the out-edges
/// of one primal vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalScenario {
    pub spec: ModelSpec,
    pub north: SiblingStatus,
    pub west: SiblingStatus,
    pub south: SiblingStatus,
}

impl ConditionalScenario {
    pub fn new(spec: ModelSpec) -> Self {
        ConditionalScenario { spec, north: SiblingStatus::Unknown, west: SiblingStatus::Unknown, south: SiblingStatus::Unknown }
    }

    /// Named presets: `w-closed`, `s-open`, `w-s-open`, `w-open`, `none`.
    pub fn preset(name: &str, spec: ModelSpec) -> Result<Self, Error> {
        use SiblingStatus::*;
        let mut s = ConditionalScenario::new(spec);
        match name {
            "none" => {}
            "w-closed" => s.west = RevealedClosed,
            "w-open" => s.west = RevealedOpen,
            "s-open" => s.south = RevealedOpen,
            "w-s-open" => {
                s.west = RevealedOpen;
                s.south = RevealedOpen;
            }
            _ => return Err(Error::InvalidParameter(format!("unknown scenario {name:?}"))),
        }
        Ok(s)
    }
}

/// Primal direction, at the common owner, of each role (east, north, west,
/// south) for the dual edge whose primal edge leaves the origin eastwards.
pub fn role_directions() -> [Dir; 4] {
    let target = primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::ORIGIN, Dir::E));
    let sib = square_siblings(target);
    [target, sib.north, sib.west, sib.south].map(|e| dual_to_primal(e).dir)
}

/// `P(target dual edge open | conditioning)`, exact. A dual edge revealed
/// open means its primal edge is closed and vice versa.
pub fn conditional_dual_probability(sc: &ConditionalScenario) -> Result<BigRational, Error> {
    if sc.spec.dim() != 2 {
        return Err(Error::Unsupported("conditionals are planar".into()));
    }
    let [east, north, west, south] = role_directions();
    let fits = |o: VertexOutcome, d: Dir, s: SiblingStatus| match s {
        SiblingStatus::Unknown => true,
        SiblingStatus::RevealedOpen => !o.has_dir(d),
        SiblingStatus::RevealedClosed => o.has_dir(d),
    };
    let mut num = BigRational::zero();
    let mut den = BigRational::zero();
    for (o, m) in vertex_outcome_distribution(&sc.spec)? {
        if fits(o, north, sc.north) && fits(o, west, sc.west) && fits(o, south, sc.south) {
            if !o.has_dir(east) {
                num += &m;
            }
            den += m;
        }
    }
    if den.is_zero() {
        return Err(Error::ZeroProbability);
    }
    Ok(num / den)
}

/// Which vertices of the window get enumerated. Outcomes elsewhere are fixed
/// to "no edges"; use `Interior` only for events that ignore them, such as
/// reaching the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    All,
    Interior,
}

/// Exact probability of `event` over all configurations of the window
/// `Λ_radius`, by enumeration.
pub fn exhaustive_window_probability(
    spec: &ModelSpec,
    radius: u32,
    support: Support,
    event: impl Fn(&Configuration) -> bool,
) -> Result<BigRational, Error> {
    if spec.dim() != 2 {
        return Err(Error::Unsupported("exhaustive enumeration is planar".into()));
    }
    if radius > 2 {
        return Err(Error::Guard(format!("radius {radius} exceeds 2")));
    }
    let window = Window::square(0, 0, radius);
    let dist: Vec<(VertexOutcome, BigRational)> = vertex_outcome_distribution(spec)?.into_iter().filter(|(_, m)| !m.is_zero()).collect();
    // Integer numerators over a common denominator keep the inner loop cheap.
    let denom = dist.iter().fold(BigInt::one(), |acc, (_, m)| num_integer::Integer::lcm(&acc, m.denom()));
    let nums: Vec<u128> = dist
        .iter()
        .map(|(_, m)| (m.numer() * (&denom / m.denom())).to_u128().ok_or_else(|| Error::Guard("mass numerator too large".into())))
        .collect::<Result<_, _>>()?;
    let sites: Vec<usize> = (0..window.len())
        .filter(|&i| {
            let (x, y) = window.point2(i);
            support == Support::All || !window.on_boundary2(x, y)
        })
        .collect();
    let total = (dist.len() as u128).checked_pow(sites.len() as u32).unwrap_or(u128::MAX);
    if total > EXHAUSTIVE_GUARD {
        return Err(Error::Guard(format!("{total} configurations exceed {EXHAUSTIVE_GUARD}")));
    }
    let mut config = Configuration::from_fn(*spec, window, |_, _| VertexOutcome::EMPTY);
    let mut digits = vec![0usize; sites.len()];
    for &i in &sites {
        config.outcomes[i] = dist[0].0;
    }
    let mut hit = BigUint::zero();
    let mut acc: u128 = 0;
    loop {
        if event(&config) {
            let mut w: u128 = 1;
            for &d in &digits {
                w = w.checked_mul(nums[d]).ok_or_else(|| Error::Guard("mass product overflow".into()))?;
            }
            match acc.checked_add(w) {
                Some(a) => acc = a,
                None => {
                    hit += BigUint::from(acc);
                    acc = w;
                }
            }
        }
        // Odometer step.
        let mut k = 0;
        loop {
            if k == sites.len() {
                hit += BigUint::from(acc);
                let den = denom.pow(sites.len() as u32);
                return Ok(BigRational::new(BigInt::from(hit), den));
            }
            digits[k] += 1;
            if digits[k] < dist.len() {
                config.outcomes[sites[k]] = dist[digits[k]].0;
                break;
            }
            digits[k] = 0;
            config.outcomes[sites[k]] = dist[0].0;
            k += 1;
        }
    }
}

/// The event "the origin's forward set reaches the window boundary".
pub fn origin_escapes(config: &Configuration) -> bool {
    escapes(config, &config.window, &mut SearchScratch::new(&config.window))
}

/// Number of self-avoiding walks of length `n` from the origin in `Z^2`.
pub fn saw_count(n: usize) -> Result<u64, Error> {
    if n > SAW_MAX_LEN {
        return Err(Error::Guard(format!("walk length {n} exceeds {SAW_MAX_LEN}")));
    }
    if n == 0 {
        return Ok(1);
    }
    let r = n as i32;
    let side = (2 * r + 1) as usize;
    let mut occupied = vec![false; side * side];
    let at = |x: i32, y: i32| (y + r) as usize * side + (x + r) as usize;
    occupied[at(0, 0)] = true;
    occupied[at(1, 0)] = true;
    // By symmetry: first step east (x4); walks staying on the axis count
    // once, the rest are split by their first turn, which we fix to north (x2).
    fn go(occ: &mut [bool], at: &dyn Fn(i32, i32) -> usize, x: i32, y: i32, left: usize, turned: bool) -> (u64, u64) {
        if left == 0 {
            return if turned { (0, 1) } else { (1, 0) };
        }
        let mut tot = (0, 0);
        for d in Dir::ALL {
            if !turned && d == Dir::S {
                continue;
            }
            let (u, v) = (x + d.delta().0, y + d.delta().1);
            let i = at(u, v);
            if occ[i] {
                continue;
            }
            occ[i] = true;
            let (a, b) = go(occ, at, u, v, left - 1, turned || v != 0);
            occ[i] = false;
            tot.0 += a;
            tot.1 += b;
        }
        tot
    }
    let (straight, turned) = go(&mut occupied, &at, 1, 0, n - 1, false);
    Ok(4 * (straight + 2 * turned))
}

/// `c_k p^k` for `k = 1..=n`, the union bound on reaching distance `k`.
pub fn union_bound_curve(p: Param, n: usize) -> Result<Vec<(usize, BigRational)>, Error> {
    let p = to_big(p);
    (1..=n)
        .map(|k| {
            let c = BigRational::from_integer(BigInt::from(saw_count(k)?));
            Ok((k, c * num_traits::pow(p.clone(), k)))
        })
        .collect()
}

/// Known upper bound on the square-lattice connective constant.
pub fn connective_constant_upper() -> BigRational {
    BigRational::new(BigInt::from(2_679_192_495u64), BigInt::from(1_000_000_000u64))
}

/// Lower bound `1 / c(2)` on any threshold the union bound controls.
pub fn threshold_lower_bound() -> BigRational {
    connective_constant_upper().recip()
}
