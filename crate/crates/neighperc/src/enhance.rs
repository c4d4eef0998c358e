//! The enhanced model: Bernoulli(p) bonds ("p-edges") plus one diagonal
//! "q-edge" per forbidden pattern, open with probability q when that
//! pattern occurs. Connectivity is the constrained notion of
//! [`crate::constrained`] with open q-edges as extra moves.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::constrained::{bond_uniform, pattern_free_search, BondConfig, PatternInstance, Shape};
use crate::estimate::{par_trials, Estimate};
use crate::lattice::{Dir, UEdge, Window};
use crate::rng::{coord_tag, tag, trial_seed, Stream};
use crate::Error;

/// Largest radius for which full per-sample pivotal sweeps are allowed.
pub const SWEEP_MAX_N: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "lowercase")]
pub enum EdgeId {
    P(UEdge),
    Q(PatternInstance),
}

#[inline]
pub fn diagonal_uniform(seed: u64, inst: PatternInstance) -> f64 {
    let (ax, ay) = inst.anchor;
    Stream::new(seed, &[tag::DIAGONAL, inst.shape as u64, coord_tag(ax), coord_tag(ay)]).uniform()
}

/// The q-edge paired with a p-edge. A vertical edge `{(a,b),(a,b+1)}` maps
/// to the horizontal pattern anchored at `(a,b)`, a horizontal edge
/// `{(a-1,b),(a,b)}` to the vertical pattern anchored at `(a,b)`.
pub fn q_edge_of(e: UEdge) -> PatternInstance {
    if e.horizontal {
        PatternInstance::new(Shape::Vertical, (e.x + 1, e.y))
    } else {
        PatternInstance::new(Shape::Horizontal, (e.x, e.y))
    }
}

const BAD: [((i32, i32), (i32, i32)); 8] = [
    ((0, -1), (0, 0)),
    ((-1, -1), (-1, 0)),
    ((-1, 0), (-1, 1)),
    ((-2, 0), (-2, 1)),
    ((0, 0), (1, 0)),
    ((0, -1), (1, -1)),
    ((-1, -1), (-1, 0)),
    ((-2, -1), (-2, 0)),
];

/// Edges near the origin whose paired q-edge can never be pivotal because
/// the origin sits inside the paired pattern.
pub fn is_bad(e: UEdge) -> bool {
    BAD.iter().any(|&(a, b)| UEdge::between(a, b) == e)
}

fn interior(v: (i32, i32), n: i32) -> bool {
    v.0.abs().max(v.1.abs()) < n
}

fn in_box(v: (i32, i32), n: i32) -> bool {
    v.0.abs().max(v.1.abs()) <= n
}

/// p-edges inside `Λ_n` with at least one endpoint off the boundary.
pub fn p_edges_in(n: u32) -> Vec<UEdge> {
    let n = n as i32;
    let mut out = vec![];
    for y in -n..=n {
        for x in -n..=n {
            for (h, w) in [(true, (x + 1, y)), (false, (x, y + 1))] {
                if in_box(w, n) && (interior((x, y), n) || interior(w, n)) {
                    out.push(UEdge { x, y, horizontal: h });
                }
            }
        }
    }
    out
}

pub fn p_edge_in(e: UEdge, n: u32) -> bool {
    let (a, b) = e.endpoints();
    let n = n as i32;
    in_box(a, n) && in_box(b, n) && (interior(a, n) || interior(b, n))
}

/// q-edges with both endpoints off the boundary of `Λ_n`.
pub fn q_edges_in(n: u32) -> Vec<PatternInstance> {
    let n = n as i32;
    let mut out = vec![];
    for y in -n..=n {
        for x in -n..=n {
            for shape in [Shape::Horizontal, Shape::Vertical] {
                let inst = PatternInstance::new(shape, (x, y));
                if q_edge_in(inst, n as u32) {
                    out.push(inst);
                }
            }
        }
    }
    out
}

pub fn q_edge_in(inst: PatternInstance, n: u32) -> bool {
    let (a, b) = inst.diagonal();
    interior(a, n as i32) && interior(b, n as i32)
}

/// Good p-edges are the ones whose own q-edge can take over their role.
pub fn is_good(e: UEdge, n: u32) -> bool {
    q_edge_in(q_edge_of(e), n) && !is_bad(e)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnhancedConfig {
    pub window: Window,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    /// Current p-layer (after any forcing).
    bonds: BondConfig,
    /// Per anchor in the window, horizontal then vertical: `U_q < q`, or the
    /// forced value. Instances that do not fit in the window stay false.
    q_pass: Vec<bool>,
}

/// Uniforms for every p-edge of `window` and every q-edge whose pattern
/// fits in it.
pub fn enhanced_sample(p: f64, q: f64, window: Window, seed: u64) -> Result<EnhancedConfig, Error> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name} = {v} outside [0,1]")));
        }
    }
    if window.dim != 2 {
        return Err(Error::Unsupported("the enhanced model is planar".into()));
    }
    let mut bonds = BondConfig::empty(window);
    bonds.q = p;
    bonds.seed = seed;
    let edges: Vec<UEdge> = bonds.edges().collect();
    for e in edges {
        bonds.set(e, bond_uniform(seed, e) < p);
    }
    let mut q_pass = vec![false; 2 * window.len()];
    for i in 0..window.len() {
        let anchor = window.point2(i);
        for (k, shape) in [Shape::Horizontal, Shape::Vertical].into_iter().enumerate() {
            let inst = PatternInstance::new(shape, anchor);
            if inst.edges().all(|e| bonds.contains_edge(e)) {
                q_pass[2 * i + k] = diagonal_uniform(seed, inst) < q;
            }
        }
    }
    Ok(EnhancedConfig { window, p, q, seed, bonds, q_pass })
}

impl EnhancedConfig {
    fn q_slot(&self, inst: PatternInstance) -> Option<usize> {
        if !inst.edges().all(|e| self.bonds.contains_edge(e)) {
            return None;
        }
        let i = self.window.index2(inst.anchor.0, inst.anchor.1)?;
        Some(2 * i + (inst.shape == Shape::Vertical) as usize)
    }

    pub fn bonds(&self) -> &BondConfig {
        &self.bonds
    }

    #[inline]
    pub fn p_open(&self, e: UEdge) -> bool {
        self.bonds.is_open(e)
    }

    /// Pattern present in the p-layer. False for instances not inside the window.
    pub fn pattern_occurs(&self, inst: PatternInstance) -> bool {
        self.q_slot(inst).is_some()
            && inst.trail_edges().iter().all(|&e| self.bonds.is_open(e))
            && inst.closed_edges().iter().all(|&e| !self.bonds.is_open(e))
    }

    pub fn q_open(&self, inst: PatternInstance) -> bool {
        self.q_slot(inst).is_some_and(|i| self.q_pass[i]) && self.pattern_occurs(inst)
    }

    pub fn is_open(&self, id: EdgeId) -> bool {
        match id {
            EdgeId::P(e) => self.p_open(e),
            EdgeId::Q(inst) => self.q_open(inst),
        }
    }

    /// Pin an edge's uniform to 0 (`open`) or 1. A q-edge pinned open is
    /// still closed unless its pattern occurs.
    pub fn force(&mut self, id: EdgeId, open: bool) -> Result<(), Error> {
        match id {
            EdgeId::P(e) => {
                if !self.bonds.contains_edge(e) {
                    return Err(Error::Precondition(format!("{e:?} not inside the window")));
                }
                self.bonds.set(e, open);
            }
            EdgeId::Q(inst) => {
                let i = self.q_slot(inst).ok_or_else(|| Error::Precondition(format!("{inst:?} not inside the window")))?;
                self.q_pass[i] = open;
            }
        }
        Ok(())
    }

    pub fn forced(&self, id: EdgeId, open: bool) -> Result<Self, Error> {
        let mut c = self.clone();
        c.force(id, open)?;
        Ok(c)
    }

    /// All open q-edges, in anchor order.
    pub fn open_q_edges(&self) -> Vec<PatternInstance> {
        (0..self.window.len())
            .flat_map(|i| {
                let a = self.window.point2(i);
                [PatternInstance::new(Shape::Horizontal, a), PatternInstance::new(Shape::Vertical, a)]
            })
            .filter(|&inst| self.q_open(inst))
            .collect()
    }

    /// Open q-edges of `D_n^in` touching `v`, as their other endpoints.
    fn jumps(&self, v: (i32, i32), n: u32, out: &mut Vec<(i32, i32)>) {
        let (x, y) = v;
        let candidates = [
            (PatternInstance::new(Shape::Horizontal, v), (x + 2, y + 1)),
            (PatternInstance::new(Shape::Vertical, v), (x - 1, y + 2)),
            (PatternInstance::new(Shape::Horizontal, (x - 2, y - 1)), (x - 2, y - 1)),
            (PatternInstance::new(Shape::Vertical, (x + 1, y - 2)), (x + 1, y - 2)),
        ];
        for (inst, w) in candidates {
            if q_edge_in(inst, n) && self.q_open(inst) {
                out.push(w);
            }
        }
    }
}

fn check_box(config: &EnhancedConfig, n: u32) -> Result<(), Error> {
    let r = n as i32;
    if !(config.window.contains2(-r, -r) && config.window.contains2(r, r)) {
        return Err(Error::Precondition(format!("Λ_{n} not inside the window")));
    }
    Ok(())
}

fn search(config: &EnhancedConfig, n: u32, want_path: bool) -> Option<Vec<(i32, i32)>> {
    pattern_free_search((0, 0), n, |e| config.p_open(e), |v, out| config.jumps(v, n, out), want_path)
}

/// Admissible path from the origin to `∂Λ_n`; consecutive vertices that
/// are not lattice neighbours are q-edge jumps.
pub fn enhanced_path(config: &EnhancedConfig, n: u32) -> Result<Option<Vec<(i32, i32)>>, Error> {
    check_box(config, n)?;
    Ok(search(config, n, true))
}

pub fn enhanced_connect(config: &EnhancedConfig, n: u32) -> Result<bool, Error> {
    check_box(config, n)?;
    Ok(search(config, n, false).is_some())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PivotalReport {
    pub edge: EdgeId,
    pub pivotal: bool,
    pub with_open: bool,
    pub with_closed: bool,
}

impl PivotalReport {
    /// Closing the edge connects while opening it does not.
    pub fn negative(&self) -> bool {
        !self.with_open && self.with_closed
    }
}

fn check_in(edge: EdgeId, n: u32) -> Result<(), Error> {
    let ok = match edge {
        EdgeId::P(e) => p_edge_in(e, n),
        EdgeId::Q(inst) => q_edge_in(inst, n),
    };
    if !ok {
        return Err(Error::Precondition(format!("{edge:?} outside the in-sets of Λ_{n}")));
    }
    Ok(())
}

pub fn is_pivotal_enhanced(config: &EnhancedConfig, edge: EdgeId, n: u32) -> Result<PivotalReport, Error> {
    check_in(edge, n)?;
    check_box(config, n)?;
    let with_open = enhanced_connect(&config.forced(edge, true)?, n)?;
    let with_closed = enhanced_connect(&config.forced(edge, false)?, n)?;
    Ok(PivotalReport { edge, pivotal: with_open && !with_closed, with_open, with_closed })
}

/// Pivotal edges of one configuration, both signs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PivotalSweep {
    pub connected: bool,
    pub p_pivotal: Vec<UEdge>,
    pub q_pivotal: Vec<PatternInstance>,
    /// Edges whose closing connects (never seen if the event is monotone).
    pub p_negative: Vec<UEdge>,
    pub q_negative: Vec<PatternInstance>,
}

impl PivotalSweep {
    pub fn good_bad(&self, n: u32) -> (usize, usize) {
        let good = self.p_pivotal.iter().filter(|&&e| is_good(e, n)).count();
        (good, self.p_pivotal.len() - good)
    }
}

fn sweep_over(
    config: &EnhancedConfig,
    n: u32,
    connected: bool,
    p_cands: impl IntoIterator<Item = UEdge>,
    q_cands: impl IntoIterator<Item = PatternInstance>,
) -> PivotalSweep {
    let mut out = PivotalSweep { connected, ..Default::default() };
    let mut c = config.clone();
    for e in p_cands {
        let cur = c.p_open(e);
        c.bonds.set(e, !cur);
        let other = search(&c, n, false).is_some();
        c.bonds.set(e, cur);
        let (with_open, with_closed) = if cur { (connected, other) } else { (other, connected) };
        if with_open && !with_closed {
            out.p_pivotal.push(e);
        } else if with_closed && !with_open {
            out.p_negative.push(e);
        }
    }
    for inst in q_cands {
        if !c.pattern_occurs(inst) {
            continue;
        }
        let i = c.q_slot(inst).expect("occurring pattern lies in the window");
        let cur = c.q_pass[i];
        c.q_pass[i] = !cur;
        let other = search(&c, n, false).is_some();
        c.q_pass[i] = cur;
        let (with_open, with_closed) = if cur { (connected, other) } else { (other, connected) };
        if with_open && !with_closed {
            out.q_pivotal.push(inst);
        } else if with_closed && !with_open {
            out.q_negative.push(inst);
        }
    }
    out
}

/// Reference sweep: toggles every edge of `E_n^in ∪ D_n^in`.
pub fn pivotal_sweep_exhaustive(config: &EnhancedConfig, n: u32) -> Result<PivotalSweep, Error> {
    check_box(config, n)?;
    let connected = search(config, n, false).is_some();
    Ok(sweep_over(config, n, connected, p_edges_in(n), q_edges_in(n)))
}

/// Same result as [`pivotal_sweep_exhaustive`], toggling only edges that
/// can matter. When connected, a found path survives any toggle outside its
/// own edges, the designated edges of trail-shaped runs along it and the
/// patterns of the q-edges it uses. When not, a toggle can only help next to
/// the set reached while ignoring patterns.
pub fn pivotal_sweep(config: &EnhancedConfig, n: u32) -> Result<PivotalSweep, Error> {
    if n > SWEEP_MAX_N {
        return Err(Error::Guard(format!("pivotal sweeps need n <= {SWEEP_MAX_N}, got {n}")));
    }
    check_box(config, n)?;
    let mut p_cands: BTreeSet<UEdge> = BTreeSet::new();
    let mut q_cands: BTreeSet<PatternInstance> = BTreeSet::new();
    let connected = match search(config, n, true) {
        Some(path) => {
            let mut run: Vec<Dir> = vec![];
            let mut run_start = 0;
            for (i, w) in path.windows(2).enumerate() {
                let (a, b) = (w[0], w[1]);
                match unit_dir(a, b) {
                    Some(d) => {
                        p_cands.insert(UEdge::between(a, b));
                        if run.is_empty() {
                            run_start = i;
                        }
                        run.push(d);
                        if run.len() >= 5 {
                            let k = run.len() - 5;
                            let dirs: [Dir; 5] = run[k..].try_into().unwrap();
                            if let Some(inst) = PatternInstance::from_trail_walk(path[run_start + k], &dirs) {
                                p_cands.extend(inst.closed_edges());
                            }
                        }
                    }
                    None => {
                        run.clear();
                        let inst = diagonal_between(a, b).expect("non-unit step is a q-edge");
                        q_cands.insert(inst);
                        p_cands.extend(inst.edges());
                    }
                }
            }
            true
        }
        None => {
            let reach = free_reach(config, n);
            let r = n as i32;
            let side = (2 * r + 1) as usize;
            let mut near = vec![false; side * side];
            for &(x, y) in &reach {
                for dy in -2..=2 {
                    for dx in -2..=2 {
                        let (u, v) = (x + dx, y + dy);
                        if in_box((u, v), r) {
                            near[((v + r) as usize) * side + (u + r) as usize] = true;
                        }
                    }
                }
            }
            let is_near = |(x, y): (i32, i32)| near[((y + r) as usize) * side + (x + r) as usize];
            for e in p_edges_in(n) {
                let (a, b) = e.endpoints();
                if is_near(a) || is_near(b) {
                    p_cands.insert(e);
                }
            }
            for inst in q_edges_in(n) {
                let (a, b) = inst.diagonal();
                if (reach.contains(&a) || reach.contains(&b)) && !config.q_open(inst) {
                    q_cands.insert(inst);
                }
            }
            false
        }
    };
    let p_cands = p_cands.into_iter().filter(|&e| p_edge_in(e, n));
    let q_cands = q_cands.into_iter().filter(|&inst| q_edge_in(inst, n));
    let mut s = sweep_over(config, n, connected, p_cands, q_cands);
    // Canonical order, identical to the exhaustive sweep.
    let rank: std::collections::HashMap<UEdge, usize> = p_edges_in(n).into_iter().enumerate().map(|(i, e)| (e, i)).collect();
    s.p_pivotal.sort_by_key(|e| rank[e]);
    s.p_negative.sort_by_key(|e| rank[e]);
    let qrank: std::collections::HashMap<PatternInstance, usize> =
        q_edges_in(n).into_iter().enumerate().map(|(i, e)| (e, i)).collect();
    s.q_pivotal.sort_by_key(|e| qrank[e]);
    s.q_negative.sort_by_key(|e| qrank[e]);
    Ok(s)
}

fn unit_dir(a: (i32, i32), b: (i32, i32)) -> Option<Dir> {
    Dir::ALL.into_iter().find(|d| (a.0 + d.delta().0, a.1 + d.delta().1) == b)
}

fn diagonal_between(a: (i32, i32), b: (i32, i32)) -> Option<PatternInstance> {
    let (lo, hi) = if (a.1, a.0) <= (b.1, b.0) { (a, b) } else { (b, a) };
    match (hi.0 - lo.0, hi.1 - lo.1) {
        (2, 1) => Some(PatternInstance::new(Shape::Horizontal, lo)),
        (-1, 2) => Some(PatternInstance::new(Shape::Vertical, lo)),
        _ => None,
    }
}

/// Vertices reached from the origin through open p- and q-edges while
/// ignoring patterns; boundary vertices are reached but not expanded.
fn free_reach(config: &EnhancedConfig, n: u32) -> HashSet<(i32, i32)> {
    let r = n as i32;
    let mut seen = HashSet::from([(0, 0)]);
    let mut stack = vec![(0, 0)];
    let mut buf = vec![];
    while let Some(v) = stack.pop() {
        if !interior(v, r) {
            continue;
        }
        buf.clear();
        for d in Dir::ALL {
            let w = (v.0 + d.delta().0, v.1 + d.delta().1);
            if config.p_open(UEdge::between(v, w)) {
                buf.push(w);
            }
        }
        config.jumps(v, n, &mut buf);
        for &w in &buf {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen
}

/// Monte Carlo estimate of the probability that the origin reaches `∂Λ_n`
/// in the enhanced model.
pub fn theta_n(p: f64, q: f64, n: u32, trials: u64, seed: u64) -> Result<Estimate, Error> {
    enhanced_sample(p, q, Window::square(0, 0, 0), 0)?;
    let window = Window::square(0, 0, n);
    let hits = par_trials(trials, |t| {
        let c = enhanced_sample(p, q, window, trial_seed(seed, t)).expect("validated");
        search(&c, n, false).is_some()
    });
    Ok(Estimate::proportion(hits.iter().filter(|&&h| h).count() as u64, trials, seed))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RussoEstimates {
    /// Mean number of pivotal p-edges, i.e. the p-derivative of Θ_n.
    pub dp: Estimate,
    /// Mean number of pivotal q-edges.
    pub dq: Estimate,
    pub theta: Estimate,
    pub dp_good: Estimate,
    pub dp_bad: Estimate,
    /// Samples with at least one edge whose closing connects.
    pub negative_samples: u64,
}

pub fn russo_estimates(p: f64, q: f64, n: u32, trials: u64, seed: u64) -> Result<RussoEstimates, Error> {
    if n > SWEEP_MAX_N {
        return Err(Error::Guard(format!("pivotal sweeps need n <= {SWEEP_MAX_N}, got {n}")));
    }
    enhanced_sample(p, q, Window::square(0, 0, 0), 0)?;
    let window = Window::square(0, 0, n);
    let rows = par_trials(trials, |t| {
        let c = enhanced_sample(p, q, window, trial_seed(seed, t)).expect("validated");
        let s = pivotal_sweep(&c, n).expect("guarded");
        let good_neg = s.p_negative.iter().filter(|&&e| is_good(e, n)).count() as f64;
        let (good, bad) = s.good_bad(n);
        let bad_neg = s.p_negative.len() as f64 - good_neg;
        [
            s.p_pivotal.len() as f64 - s.p_negative.len() as f64,
            s.q_pivotal.len() as f64 - s.q_negative.len() as f64,
            s.connected as u8 as f64,
            good as f64 - good_neg,
            bad as f64 - bad_neg,
            (!s.p_negative.is_empty() || !s.q_negative.is_empty()) as u8 as f64,
        ]
    });
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let theta = col(2).iter().sum::<f64>() as u64;
    Ok(RussoEstimates {
        dp: Estimate::mean_of(&col(0), seed),
        dq: Estimate::mean_of(&col(1), seed),
        theta: Estimate::proportion(theta, trials, seed),
        dp_good: Estimate::mean_of(&col(3), seed),
        dp_bad: Estimate::mean_of(&col(4), seed),
        negative_samples: col(5).iter().sum::<f64>() as u64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    P,
    Q,
}

/// Central difference `(Θ(x+h) − Θ(x−h)) / 2h` along one parameter, each
/// trial evaluating both sides on the same uniforms.
pub fn finite_difference(p: f64, q: f64, axis: Axis, h: f64, n: u32, trials: u64, seed: u64) -> Result<Estimate, Error> {
    let (lo, hi) = match axis {
        Axis::P => ((p - h, q), (p + h, q)),
        Axis::Q => ((p, q - h), (p, q + h)),
    };
    enhanced_sample(lo.0, lo.1, Window::square(0, 0, 0), 0)?;
    enhanced_sample(hi.0, hi.1, Window::square(0, 0, 0), 0)?;
    let window = Window::square(0, 0, n);
    let rows = par_trials(trials, |t| {
        let s = trial_seed(seed, t);
        let a = search(&enhanced_sample(hi.0, hi.1, window, s).expect("validated"), n, false).is_some();
        let b = search(&enhanced_sample(lo.0, lo.1, window, s).expect("validated"), n, false).is_some();
        (a as u8 as f64 - b as u8 as f64) / (2.0 * h)
    });
    Ok(Estimate::mean_of(&rows, seed))
}

/// Pathwise monotonicity along a componentwise non-decreasing `(p,q)` grid,
/// all points sharing the uniforms of `seed`. Counts consecutive pairs where
/// the event holds at the smaller parameters but not at the larger.
pub fn monotone_event_check(window: Window, seed: u64, grid: &[(f64, f64)]) -> Result<u64, Error> {
    if grid.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1) {
        return Err(Error::Precondition("grid must be non-decreasing in both parameters".into()));
    }
    if window.center[..2] != [0, 0] {
        return Err(Error::Precondition("window must be centred at the origin".into()));
    }
    let n = window.radius;
    let mut prev: Option<bool> = None;
    let mut violations = 0;
    for &(p, q) in grid {
        let now = enhanced_connect(&enhanced_sample(p, q, window, seed)?, n)?;
        if prev == Some(true) && !now {
            violations += 1;
        }
        prev = Some(now);
    }
    Ok(violations)
}
