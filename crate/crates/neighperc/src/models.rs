//! Per-vertex outgoing-edge laws, their exact distributions, samplers and
//! the two coupling constructions.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::lattice::{Dir, PrimalVertex, UEdge, Window, MAX_DIM};
use crate::rng::{coord_tag, tag, Stream};
use crate::Error;

/// Exact parameter value. Decimal CLI input such as `0.45` becomes `45/100`.
pub type Param = Ratio<i64>;

pub fn param(num: i64, den: i64) -> Param {
    Ratio::new(num, den)
}

/// Parses `"0.45"`, `"1/3"` or `"1"` into an exact rational.
pub fn parse_param(s: &str) -> Result<Param, Error> {
    let bad = || Error::InvalidParameter(format!("not a number: {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 15 {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let den = 10i64.pow(frac.len() as u32);
    let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
    Ok(Ratio::new(if neg { -num } else { num }, den))
}

pub fn to_big(r: Param) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn to_f64(r: Param) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Renders a rational as `"num/den"` (or just `"num"` for integers).
pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub mod ratio_str {
    use super::{parse_param, Param};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Param, s: S) -> Result<S::Ok, S::Error> {
        if *r.denom() == 1 {
            s.serialize_str(&r.numer().to_string())
        } else {
            s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Param, D::Error> {
        let s = String::deserialize(d)?;
        parse_param(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    TwoDpNeighbor {
        d: usize,
        #[serde(with = "ratio_str")]
        p: Param,
    },
    TwoEps {
        #[serde(with = "ratio_str")]
        eps: Param,
    },
    IidDirected {
        #[serde(with = "ratio_str")]
        p: Param,
    },
    AllOrNone {
        #[serde(with = "ratio_str")]
        p: Param,
    },
    NsEw {
        #[serde(with = "ratio_str")]
        p: Param,
    },
    Corner {
        #[serde(with = "ratio_str")]
        p: Param,
    },
    IsotropicDegreeTwo {
        #[serde(with = "ratio_str")]
        rho: Param,
    },
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelSpec::TwoDpNeighbor { d, p } => format!("2dp-neighbor(d={d}, p={p})"),
            ModelSpec::TwoEps { eps } => format!("2eps(eps={eps})"),
            ModelSpec::IidDirected { p } => format!("iid(p={p})"),
            ModelSpec::AllOrNone { p } => format!("all-or-none(p={p})"),
            ModelSpec::NsEw { p } => format!("ns-ew(p={p})"),
            ModelSpec::Corner { p } => format!("corner(p={p})"),
            ModelSpec::IsotropicDegreeTwo { rho } => format!("isotropic(rho={rho})"),
        };
        // `pad` so width and alignment flags work in tables.
        f.pad(&s)
    }
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::TwoDpNeighbor { d, .. } => *d,
            _ => 2,
        }
    }

    /// The edge-marginal parameter, where one is part of the definition.
    pub fn p(&self) -> Param {
        match *self {
            ModelSpec::TwoDpNeighbor { p, .. }
            | ModelSpec::IidDirected { p }
            | ModelSpec::AllOrNone { p }
            | ModelSpec::NsEw { p }
            | ModelSpec::Corner { p } => p,
            ModelSpec::TwoEps { eps } => param(1, 2) + eps / 4,
            ModelSpec::IsotropicDegreeTwo { .. } => param(1, 2),
        }
    }

    /// Same family with the marginal replaced by `p`; `None` for the ρ-family.
    pub fn with_p(&self, p: Param) -> Option<ModelSpec> {
        Some(match *self {
            ModelSpec::TwoDpNeighbor { d, .. } => ModelSpec::TwoDpNeighbor { d, p },
            ModelSpec::TwoEps { .. } => ModelSpec::TwoDpNeighbor { d: 2, p },
            ModelSpec::IidDirected { .. } => ModelSpec::IidDirected { p },
            ModelSpec::AllOrNone { .. } => ModelSpec::AllOrNone { p },
            ModelSpec::NsEw { .. } => ModelSpec::NsEw { p },
            ModelSpec::Corner { .. } => ModelSpec::Corner { p },
            ModelSpec::IsotropicDegreeTwo { .. } => return None,
        })
    }

    pub fn validate(&self) -> Result<(), Error> {
        let unit = |name: &str, v: Param| {
            if v < Param::zero() || v > Param::one() {
                Err(Error::InvalidParameter(format!("{name}={v} outside [0,1]")))
            } else {
                Ok(())
            }
        };
        match *self {
            ModelSpec::TwoDpNeighbor { d, p } => {
                if d == 0 || d > MAX_DIM {
                    return Err(Error::Unsupported(format!("dimension {d}")));
                }
                unit("p", p)
            }
            ModelSpec::TwoEps { eps } => {
                if eps < Param::zero() || eps > param(2, 1) {
                    return Err(Error::InvalidParameter(format!("eps={eps} outside [0,2]")));
                }
                Ok(())
            }
            ModelSpec::IidDirected { p }
            | ModelSpec::AllOrNone { p }
            | ModelSpec::NsEw { p }
            | ModelSpec::Corner { p } => unit("p", p),
            ModelSpec::IsotropicDegreeTwo { rho } => {
                if rho < Param::zero() || rho > param(1, 4) {
                    return Err(Error::InvalidParameter(format!("rho={rho} outside [0,1/4]")));
                }
                Ok(())
            }
        }
    }

    /// `k = floor(2dp)` and `eps = 2dp - k` for the staged models.
    pub fn k_eps(&self) -> (usize, Param) {
        let x = self.p() * (2 * self.dim() as i64);
        let k = x.floor();
        (k.to_integer() as usize, x - k)
    }
}

/// Set of open out-directions at one vertex (bit `j` = direction `j`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexOutcome(pub u16);

impl VertexOutcome {
    pub const EMPTY: VertexOutcome = VertexOutcome(0);

    pub fn from_dirs(dirs: &[Dir]) -> Self {
        VertexOutcome(dirs.iter().fold(0, |m, d| m | 1 << d.index()))
    }

    #[inline]
    pub fn has(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    #[inline]
    pub fn has_dir(self, d: Dir) -> bool {
        self.has(d.index())
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Planar debug mask such as `"EN--"`.
    pub fn mask_string(self) -> String {
        Dir::ALL
            .iter()
            .map(|&d| if self.has_dir(d) { d.letter() } else { '-' })
            .collect()
    }
}

fn binom(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1))
}

fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = u16> {
    (0u16..(1 << n)).filter(move |m| m.count_ones() as usize == k)
}

const CORNERS: [u16; 4] = [0b0011, 0b0110, 0b1100, 0b1001];
const NS: u16 = 0b1010;
const EW: u16 = 0b0101;

/// Full support with exact masses summing to one.
pub fn vertex_outcome_distribution(spec: &ModelSpec) -> Result<Vec<(VertexOutcome, BigRational)>, Error> {
    spec.validate()?;
    let mut out: Vec<(u16, BigRational)> = Vec::new();
    let big = |r: Param| to_big(r);
    match *spec {
        ModelSpec::TwoDpNeighbor { .. } | ModelSpec::TwoEps { .. } => {
            let n = 2 * spec.dim();
            let (k, eps) = spec.k_eps();
            if k >= n {
                out.push((((1u32 << n) - 1) as u16, BigRational::one()));
            } else {
                if eps != Param::one() {
                    let m = big((Param::one() - eps) / binom(n, k));
                    out.extend(subsets_of_size(n, k).map(|s| (s, m.clone())));
                }
                if !eps.is_zero() {
                    let m = big(eps / binom(n, k + 1));
                    out.extend(subsets_of_size(n, k + 1).map(|s| (s, m.clone())));
                }
            }
        }
        ModelSpec::IidDirected { p } => {
            let (p, q) = (big(p), big(Param::one() - p));
            for m in 0u16..16 {
                let open = m.count_ones() as usize;
                let mass = (0..open).fold(BigRational::one(), |a, _| a * &p);
                let mass = (0..4 - open).fold(mass, |a, _| a * &q);
                out.push((m, mass));
            }
        }
        ModelSpec::AllOrNone { p } => {
            out.push((0b1111, big(p)));
            out.push((0, big(Param::one() - p)));
        }
        ModelSpec::NsEw { .. } | ModelSpec::Corner { .. } => {
            let (k, eps) = spec.k_eps();
            let corner = matches!(spec, ModelSpec::Corner { .. });
            let e = big(eps);
            let one_minus = BigRational::one() - &e;
            let quarter = BigRational::new(1.into(), 4.into());
            match k {
                0 => {
                    out.push((0, one_minus));
                    out.extend((0..4).map(|j| (1u16 << j, &e * &quarter)));
                }
                1 => {
                    out.extend((0..4).map(|j| (1u16 << j, &one_minus * &quarter)));
                    if corner {
                        out.extend(CORNERS.iter().map(|&c| (c, &e * &quarter)));
                    } else {
                        let half = BigRational::new(1.into(), 2.into());
                        out.push((EW, &e * &half));
                        out.push((NS, &e * &half));
                    }
                }
                2 => {
                    if corner {
                        out.extend(CORNERS.iter().map(|&c| (c, &one_minus * &quarter)));
                    } else {
                        let half = BigRational::new(1.into(), 2.into());
                        out.push((EW, &one_minus * &half));
                        out.push((NS, &one_minus * &half));
                    }
                    out.extend(subsets_of_size(4, 3).map(|s| (s, &e * &quarter)));
                }
                3 => {
                    out.extend(subsets_of_size(4, 3).map(|s| (s, &one_minus * &quarter)));
                    out.push((0b1111, e));
                }
                _ => out.push((0b1111, BigRational::one())),
            }
        }
        ModelSpec::IsotropicDegreeTwo { rho } => {
            let r = big(rho);
            let psi = big((Param::one() - rho * 4) / 2);
            out.extend(CORNERS.iter().map(|&c| (c, r.clone())));
            out.push((EW, psi.clone()));
            out.push((NS, psi));
        }
    }
    // Merge duplicates and drop null outcomes so the support is exact.
    let mut merged: Vec<(u16, BigRational)> = Vec::new();
    out.sort_by_key(|(m, _)| *m);
    for (m, w) in out {
        match merged.last_mut() {
            Some((lm, lw)) if *lm == m => *lw += w,
            _ => merged.push((m, w)),
        }
    }
    Ok(merged
        .into_iter()
        .filter(|(_, w)| w.is_positive())
        .map(|(m, w)| (VertexOutcome(m), w))
        .collect())
}

/// Probability that a fixed out-edge (direction 0) is open.
pub fn edge_marginal(spec: &ModelSpec) -> Result<BigRational, Error> {
    direction_marginal(spec, 0)
}

pub fn direction_marginal(spec: &ModelSpec, j: usize) -> Result<BigRational, Error> {
    Ok(vertex_outcome_distribution(spec)?
        .into_iter()
        .filter(|(o, _)| o.has(j))
        .fold(BigRational::zero(), |a, (_, w)| a + w))
}

/// Precomputed floating-point form of a spec, used in the sampling hot path.
#[derive(Clone, Copy, Debug)]
pub struct Sampler {
    kind: Kind,
    slots: usize,
    k: usize,
    eps: f64,
    x: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Neighbor,
    Iid,
    AllOrNone,
    NsEw,
    Corner,
    Isotropic,
}

impl Sampler {
    pub fn new(spec: &ModelSpec) -> Result<Self, Error> {
        spec.validate()?;
        let (k, eps) = spec.k_eps();
        let kind = match spec {
            ModelSpec::TwoDpNeighbor { .. } | ModelSpec::TwoEps { .. } => Kind::Neighbor,
            ModelSpec::IidDirected { .. } => Kind::Iid,
            ModelSpec::AllOrNone { .. } => Kind::AllOrNone,
            ModelSpec::NsEw { .. } => Kind::NsEw,
            ModelSpec::Corner { .. } => Kind::Corner,
            ModelSpec::IsotropicDegreeTwo { .. } => Kind::Isotropic,
        };
        let x = match *spec {
            ModelSpec::IsotropicDegreeTwo { rho } => to_f64(rho * 4),
            _ => to_f64(spec.p()),
        };
        Ok(Sampler { kind, slots: 2 * spec.dim(), k, eps: to_f64(eps), x })
    }

    /// One vertex draw. The number and order of raw draws depends only on the
    /// family, never on the parameter, which is what makes couplings free.
    #[inline]
    pub fn draw(&self, s: &mut Stream) -> VertexOutcome {
        match self.kind {
            Kind::Neighbor => {
                let n = self.slots;
                let mut perm = [0u8; 2 * MAX_DIM];
                for (i, v) in perm.iter_mut().enumerate().take(n) {
                    *v = i as u8;
                }
                for i in (1..n).rev() {
                    let j = s.below(i as u64 + 1) as usize;
                    perm.swap(i, j);
                }
                let u = s.uniform();
                let mut m = 0u16;
                for &slot in perm.iter().take(self.k.min(n)) {
                    m |= 1 << slot;
                }
                if self.k < n && u < self.eps {
                    m |= 1 << perm[self.k];
                }
                VertexOutcome(m)
            }
            Kind::Iid => {
                let mut m = 0u16;
                for j in 0..4 {
                    if s.uniform() < self.x {
                        m |= 1 << j;
                    }
                }
                VertexOutcome(m)
            }
            Kind::AllOrNone => VertexOutcome(if s.uniform() < self.x { 0b1111 } else { 0 }),
            Kind::NsEw | Kind::Corner => {
                let i0 = s.below(4) as u32;
                let coin = s.uniform() < self.eps;
                let b = s.below(2) as u32;
                let c = s.below(2) as u32;
                let bit = |j: u32| 1u16 << (j % 4);
                let m = match self.k {
                    0 => {
                        if coin {
                            bit(i0)
                        } else {
                            0
                        }
                    }
                    1 => {
                        let second = if self.kind == Kind::NsEw { i0 + 2 } else { i0 + 1 + 2 * b };
                        bit(i0) | if coin { bit(second) } else { 0 }
                    }
                    2 => {
                        let base = if self.kind == Kind::NsEw {
                            bit(i0) | bit(i0 + 2)
                        } else {
                            bit(i0) | bit(i0 + 1)
                        };
                        if coin {
                            let free: Vec<u32> = (0..4).filter(|&j| base & bit(j) == 0).collect();
                            base | bit(free[c as usize])
                        } else {
                            base
                        }
                    }
                    3 => 0b1111 & !bit(i0) | if coin { bit(i0) } else { 0 },
                    _ => 0b1111,
                };
                VertexOutcome(m)
            }
            Kind::Isotropic => {
                let u = s.uniform();
                let i0 = s.below(4) as u32;
                let b = s.below(2);
                VertexOutcome(if u < self.x {
                    1 << i0 | 1 << ((i0 + 1) % 4)
                } else if b == 0 {
                    EW
                } else {
                    NS
                })
            }
        }
    }
}

/// Stream for the vertex with the given coordinates.
#[inline]
pub fn vertex_stream(seed: u64, coords: &[i32]) -> Stream {
    let mut tags = [0u64; MAX_DIM + 1];
    tags[0] = tag::VERTEX;
    for (t, &c) in tags[1..].iter_mut().zip(coords) {
        *t = coord_tag(c);
    }
    Stream::new(seed, &tags[..=coords.len()])
}

/// Read access to vertex outcomes. Implemented by the dense [`Configuration`]
/// and by [`LazyField`], which evaluates the same draws on demand.
pub trait Environment: Sync {
    fn dim(&self) -> usize;
    fn outcome(&self, coords: &[i32]) -> VertexOutcome;

    #[inline]
    fn outcome2(&self, x: i32, y: i32) -> VertexOutcome {
        self.outcome(&[x, y])
    }

    /// Whether the outcome at planar vertex `(x, y)` is available.
    fn covers2(&self, _x: i32, _y: i32) -> bool {
        true
    }

    #[inline]
    fn primal_open(&self, v: PrimalVertex, d: Dir) -> bool {
        self.outcome2(v.x, v.y).has_dir(d)
    }

    /// Dual edges are open exactly when their primal edge is closed.
    #[inline]
    fn dual_open(&self, e: crate::lattice::DirectedDualEdge) -> bool {
        let p = crate::lattice::dual_to_primal(e);
        !self.primal_open(p.tail, p.dir)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Configuration {
    pub window: Window,
    pub spec: ModelSpec,
    pub seed: u64,
    pub outcomes: Vec<VertexOutcome>,
}

impl Configuration {
    pub fn get2(&self, x: i32, y: i32) -> Option<VertexOutcome> {
        self.window.index2(x, y).map(|i| self.outcomes[i])
    }

    /// Hand-built planar configuration, for fixtures.
    pub fn from_fn(spec: ModelSpec, window: Window, f: impl Fn(i32, i32) -> VertexOutcome) -> Self {
        let outcomes = (0..window.len())
            .map(|i| {
                let (x, y) = window.point2(i);
                f(x, y)
            })
            .collect();
        Configuration { window, spec, seed: 0, outcomes }
    }

    /// One text row per lattice row, top row first, masks separated by spaces.
    pub fn debug_grid(&self) -> String {
        let side = self.window.side();
        let mut s = String::new();
        for row in (0..side).rev() {
            let line: Vec<String> =
                (0..side).map(|col| self.outcomes[row * side + col].mask_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

impl Environment for Configuration {
    fn dim(&self) -> usize {
        self.window.dim
    }

    fn covers2(&self, x: i32, y: i32) -> bool {
        self.window.contains2(x, y)
    }

    #[inline]
    fn outcome(&self, coords: &[i32]) -> VertexOutcome {
        match self.window.index(coords) {
            Some(i) => self.outcomes[i],
            None => panic!("vertex {coords:?} outside the sampled window"),
        }
    }

    #[inline]
    fn outcome2(&self, x: i32, y: i32) -> VertexOutcome {
        match self.window.index2(x, y) {
            Some(i) => self.outcomes[i],
            None => panic!("vertex ({x},{y}) outside the sampled window"),
        }
    }
}

/// The infinite configuration, sampled vertex by vertex when read. Agrees
/// with `sample_configuration` on every window for the same seed.
#[derive(Clone, Debug)]
pub struct LazyField {
    pub spec: ModelSpec,
    pub seed: u64,
    sampler: Sampler,
}

impl LazyField {
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self, Error> {
        Ok(LazyField { spec, seed, sampler: Sampler::new(&spec)? })
    }
}

impl Environment for LazyField {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    #[inline]
    fn outcome(&self, coords: &[i32]) -> VertexOutcome {
        self.sampler.draw(&mut vertex_stream(self.seed, coords))
    }
}

/// Dense sample over `window`. Draws are keyed by absolute coordinates, so
/// nested windows with the same seed agree where they overlap.
pub fn sample_configuration(spec: &ModelSpec, window: Window, seed: u64) -> Result<Configuration, Error> {
    if window.radius < 1 {
        return Err(Error::Precondition("window radius must be at least 1".into()));
    }
    if window.dim != spec.dim() {
        return Err(Error::Precondition(format!(
            "window dimension {} does not match model dimension {}",
            window.dim,
            spec.dim()
        )));
    }
    let sampler = Sampler::new(spec)?;
    let outcomes = (0..window.len())
        .map(|i| {
            let p = window.point(i);
            sampler.draw(&mut vertex_stream(seed, &p[..window.dim]))
        })
        .collect();
    Ok(Configuration { window, spec: *spec, seed, outcomes })
}

/// Two configurations from shared per-vertex randomness; the low one's open
/// edges are a subset of the high one's.
pub fn sample_coupled_monotone(
    lo: &ModelSpec,
    hi: &ModelSpec,
    window: Window,
    seed: u64,
) -> Result<(Configuration, Configuration), Error> {
    let neighbor = |s: &ModelSpec| matches!(s, ModelSpec::TwoDpNeighbor { .. } | ModelSpec::TwoEps { .. });
    if !neighbor(lo) || !neighbor(hi) || lo.dim() != hi.dim() {
        return Err(Error::Precondition("monotone coupling needs two 2dp-neighbor specs of equal dimension".into()));
    }
    if lo.p() > hi.p() {
        return Err(Error::Precondition(format!("p_lo={} exceeds p_hi={}", lo.p(), hi.p())));
    }
    Ok((sample_configuration(lo, window, seed)?, sample_configuration(hi, window, seed)?))
}

/// Site field of an all-or-none configuration: open iff every out-edge is.
pub fn aon_to_site(config: &Configuration) -> Result<Vec<bool>, Error> {
    if !matches!(config.spec, ModelSpec::AllOrNone { .. }) {
        return Err(Error::Unsupported(format!("aon_to_site on {}", config.spec)));
    }
    let full = (1u16 << (2 * config.window.dim)) - 1;
    Ok(config.outcomes.iter().map(|o| o.0 == full).collect())
}

/// Result of running the directed/undirected exploration coupling.
#[derive(Clone, Debug)]
pub struct IidCoupling {
    /// The i.i.d. directed configuration the uniforms define.
    pub directed: Configuration,
    /// Undirected state of every window edge with the tail whose uniform set it.
    pub bonds: HashMap<UEdge, (bool, PrimalVertex)>,
    /// Directed forward set of the window centre inside the window graph.
    pub forward: HashSet<PrimalVertex>,
    /// Undirected open cluster of the centre inside the window graph.
    pub cluster: HashSet<PrimalVertex>,
    /// Vertices reached by the exploration itself.
    pub explored: HashSet<PrimalVertex>,
}

/// Explores from the window centre, deciding each undirected edge from the
/// first of its two directed uniforms the exploration meets; edges never met
/// use the uniform of their lexicographically smaller endpoint.
pub fn couple_iid_directed_undirected(p: Param, window: Window, seed: u64) -> Result<IidCoupling, Error> {
    let spec = ModelSpec::IidDirected { p };
    let directed = sample_configuration(&spec, window, seed)?;
    let pf = to_f64(p);
    // Same stream layout as the iid sampler: four uniforms in E,N,W,S order.
    let uniforms = |v: PrimalVertex| {
        let mut s = vertex_stream(seed, &[v.x, v.y]);
        [s.uniform(), s.uniform(), s.uniform(), s.uniform()]
    };
    let o = PrimalVertex::new(window.center[0], window.center[1]);
    let mut bonds: HashMap<UEdge, (bool, PrimalVertex)> = HashMap::new();
    let mut explored: HashSet<PrimalVertex> = HashSet::from([o]);
    let mut list: VecDeque<(PrimalVertex, Dir)> = Dir::ALL.iter().map(|&d| (o, d)).collect();
    while let Some((x, d)) = list.pop_front() {
        let y = x.step(d);
        if !window.contains2(y.x, y.y) {
            continue;
        }
        let edge = UEdge::between(x, y);
        if bonds.contains_key(&edge) {
            continue;
        }
        let open = uniforms(x)[d.index()] < pf;
        bonds.insert(edge, (open, x));
        if open && explored.insert(y) {
            for &d2 in Dir::ALL.iter().rev() {
                list.push_front((y, d2));
            }
        }
    }
    for i in 0..window.len() {
        let (x, y) = window.point2(i);
        let u = PrimalVertex::new(x, y);
        for d in [Dir::E, Dir::N] {
            let v = u.step(d);
            if window.contains2(v.x, v.y) {
                bonds.entry(UEdge::between(u, v)).or_insert_with(|| (uniforms(u)[d.index()] < pf, u));
            }
        }
    }

    let mut forward = HashSet::from([o]);
    let mut queue = VecDeque::from([o]);
    while let Some(v) = queue.pop_front() {
        for d in Dir::ALL {
            let w = v.step(d);
            if window.contains2(w.x, w.y) && directed.primal_open(v, d) && forward.insert(w) {
                queue.push_back(w);
            }
        }
    }
    let mut cluster = HashSet::from([o]);
    let mut queue = VecDeque::from([o]);
    while let Some(v) = queue.pop_front() {
        for d in Dir::ALL {
            let w = v.step(d);
            if window.contains2(w.x, w.y) && bonds[&UEdge::between(v, w)].0 && cluster.insert(w) {
                queue.push_back(w);
            }
        }
    }
    Ok(IidCoupling { directed, bonds, forward, cluster, explored })
}

#[cfg(test)]
fn big_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}
