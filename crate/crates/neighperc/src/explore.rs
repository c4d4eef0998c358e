//! Forward sets and the depth-first, counter-clockwise exploration of a dual
//! forward set with its two cleaning rules, pivotal edges and visited
//! clusters.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::lattice::{
    square_siblings, Dir, DirectedDualEdge, DualVertex, FilledRegion, PrimalVertex, Window, MAX_DIM,
};
use crate::models::{param, Environment, ModelSpec};
use crate::Error;

/// Starting point of a forward set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Root {
    Primal(PrimalVertex),
    Dual(DualVertex),
}

impl From<PrimalVertex> for Root {
    fn from(v: PrimalVertex) -> Self {
        Root::Primal(v)
    }
}

impl From<DualVertex> for Root {
    fn from(v: DualVertex) -> Self {
        Root::Dual(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForwardSet {
    pub vertices: HashSet<(i32, i32)>,
    pub escaped: bool,
}

/// Breadth-first closure under open directed edges (dual edges for a dual
/// root) inside the window. Edges whose outcome the environment does not
/// hold are treated as absent.
pub fn forward_set<E: Environment + ?Sized>(env: &E, root: impl Into<Root>, window: Window) -> Result<ForwardSet, Error> {
    let root = root.into();
    let (start, dual) = match root {
        Root::Primal(v) => ((v.x, v.y), false),
        Root::Dual(v) => ((v.a, v.b), true),
    };
    if window.dim != 2 || !window.contains2(start.0, start.1) {
        return Err(Error::Precondition(format!("root {start:?} outside window")));
    }
    let open = |(x, y): (i32, i32), d: Dir| {
        if dual {
            let e = DirectedDualEdge::new(DualVertex::new(x, y), d);
            let z = e.owner();
            env.covers2(z.x, z.y) && env.dual_open(e)
        } else {
            env.primal_open(PrimalVertex::new(x, y), d)
        }
    };
    let mut vertices = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut escaped = false;
    while let Some(v) = queue.pop_front() {
        escaped |= window.on_boundary2(v.0, v.1);
        for d in Dir::ALL {
            let (dx, dy) = d.delta();
            let w = (v.0 + dx, v.1 + dy);
            if window.contains2(w.0, w.1) && open(v, d) {
                if vertices.insert(w) {
                    queue.push_back(w);
                }
            }
        }
    }
    Ok(ForwardSet { vertices, escaped })
}

/// Reusable scratch space for repeated escape searches on one window shape.
#[derive(Clone, Debug)]
pub struct SearchScratch {
    stamp: Vec<u32>,
    generation: u32,
    stack: Vec<usize>,
}

impl SearchScratch {
    pub fn new(window: &Window) -> Self {
        SearchScratch { stamp: vec![0; window.len()], generation: 0, stack: Vec::new() }
    }

    fn reset(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.stack.clear();
    }
}

/// Does the primal forward set of the window centre reach the boundary?
/// Any dimension. Depth-first with early exit; reads outcomes on demand, so
/// with a [`crate::models::LazyField`] only the explored part is sampled.
pub fn escapes<E: Environment + ?Sized>(env: &E, window: &Window, scratch: &mut SearchScratch) -> bool {
    let d = window.dim;
    let r = window.radius as i32;
    if r == 0 {
        return true;
    }
    scratch.reset();
    let g = scratch.generation;
    let strides: Vec<usize> = (0..d).map(|k| window.stride(k)).collect();
    let center = window.center;
    let origin = window.index(&center[..d]).expect("centre inside window");
    scratch.stamp[origin] = g;
    scratch.stack.push(origin);
    let mut coords = [0i32; MAX_DIM];
    while let Some(i) = scratch.stack.pop() {
        let p = window.point(i);
        coords[..d].copy_from_slice(&p[..d]);
        let out = env.outcome(&coords[..d]);
        for j in 0..2 * d {
            if !out.has(j) {
                continue;
            }
            let axis = j % d;
            let forward = j < d;
            let c = coords[axis] + if forward { 1 } else { -1 };
            if (c - center[axis]).abs() == r {
                return true;
            }
            let ni = if forward { i + strides[axis] } else { i - strides[axis] };
            if scratch.stamp[ni] != g {
                scratch.stamp[ni] = g;
                scratch.stack.push(ni);
            }
        }
    }
    false
}

/// Size of the dual forward set of `x`, stopping once `cap` vertices are
/// found. Search never leaves `x + [-cap, cap]^2`, which is enough because a
/// set reaching that far already has more than `cap` vertices.
pub fn dual_forward_size<E: Environment + ?Sized>(env: &E, x: DualVertex, cap: usize) -> usize {
    let mut seen = HashSet::from([(x.a, x.b)]);
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        if seen.len() >= cap {
            break;
        }
        for d in Dir::ALL {
            if env.dual_open(DirectedDualEdge::new(v, d)) {
                let w = v.step(d);
                if seen.insert((w.a, w.b)) {
                    stack.push(w);
                }
            }
        }
    }
    seen.len().min(cap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Stopped,
    WindowEscaped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    /// 1-based step number.
    pub n: usize,
    pub edge: DirectedDualEdge,
    pub open: bool,
    /// Length of the to-explore list when this edge was taken from its front.
    pub list_len: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotalEvent {
    pub step: usize,
    pub edge: DirectedDualEdge,
    pub open: bool,
    pub auto_open: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationRecord {
    pub start: DualVertex,
    pub window: Window,
    pub steps: Vec<Step>,
    /// Visited vertices in visiting order; `visit_step[i]` is the step that
    /// added `visited[i]` (0 for the start).
    pub visited: Vec<DualVertex>,
    pub visit_step: Vec<usize>,
    pub pivotal_events: Vec<PivotalEvent>,
    pub pivotal_times: Vec<usize>,
    pub clusters: Vec<Vec<DualVertex>>,
    pub termination: Termination,
    /// To-explore list left when the run ended (empty iff stopped).
    pub remaining: Vec<DirectedDualEdge>,
}

impl ExplorationRecord {
    pub fn revealed(&self) -> HashMap<DirectedDualEdge, bool> {
        self.steps.iter().map(|s| (s.edge, s.open)).collect()
    }

    pub fn visited_set(&self) -> HashSet<(i32, i32)> {
        self.visited.iter().map(|v| (v.a, v.b)).collect()
    }

    /// Number of open pivotal edges.
    pub fn t_piv(&self) -> usize {
        self.pivotal_events.iter().filter(|e| e.open).count()
    }

    /// Index (0-based) of the cluster each visited vertex belongs to.
    pub fn cluster_of(&self) -> HashMap<DualVertex, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.iter().map(move |&v| (v, k)))
            .collect()
    }

    /// Triples of consecutive revealed open edges inside one visited
    /// cluster, each edge leaving the head of the previous one.
    pub fn open_trail_triples(&self) -> Vec<[DirectedDualEdge; 3]> {
        let cluster = self.cluster_of();
        let mut by_tail: HashMap<DualVertex, Vec<DirectedDualEdge>> = HashMap::new();
        for s in self.steps.iter().filter(|s| s.open) {
            by_tail.entry(s.edge.tail).or_default().push(s.edge);
        }
        let same = |a: DualVertex, b: DualVertex| cluster.get(&a).is_some() && cluster.get(&a) == cluster.get(&b);
        let mut out = Vec::new();
        for s in self.steps.iter().filter(|s| s.open) {
            let e1 = s.edge;
            for &e2 in by_tail.get(&e1.head()).into_iter().flatten() {
                for &e3 in by_tail.get(&e2.head()).into_iter().flatten() {
                    let vs = [e1.tail, e2.tail, e3.tail, e3.head()];
                    if vs.iter().all(|&v| same(v, e1.tail)) {
                        out.push([e1, e2, e3]);
                    }
                }
            }
        }
        out
    }
}

/// Edge state history as the exploration sees it.
pub type History = HashMap<DirectedDualEdge, bool>;

/// Pivotal iff one of the other three sides of the unit square was revealed
/// closed.
pub fn is_pivotal(history: &History, e: DirectedDualEdge) -> Result<bool, Error> {
    if history.contains_key(&e) {
        return Err(Error::Precondition(format!("{e:?} already revealed")));
    }
    Ok(square_siblings(e).as_array().iter().any(|s| history.get(s) == Some(&false)))
}

/// For the corner model at p = 1/2: a pivotal edge is open with certainty
/// exactly when its west sibling has been revealed closed.
pub fn classify_auto_open(history: &History, e: DirectedDualEdge, spec: &ModelSpec) -> Result<bool, Error> {
    if *spec != (ModelSpec::Corner { p: param(1, 2) }) {
        return Err(Error::Unsupported(format!("auto-open classification for {spec}")));
    }
    if !is_pivotal(history, e)? {
        return Err(Error::Precondition(format!("{e:?} is not pivotal")));
    }
    Ok(history.get(&square_siblings(e).west) == Some(&false))
}

const UNSEEN: u8 = 0;
const OPEN: u8 = 1;
const CLOSED: u8 = 2;

/// Runs the exploration from `x` inside the dual `window`. The environment
/// must cover the primal window of the same centre and radius.
pub fn explore_dual_forward<E: Environment + ?Sized>(
    env: &E,
    spec: &ModelSpec,
    x: DualVertex,
    window: Window,
) -> Result<ExplorationRecord, Error> {
    if window.dim != 2 || !window.contains2(x.a, x.b) || window.on_boundary2(x.a, x.b) {
        return Err(Error::Precondition(format!("start {x:?} must be interior to the window")));
    }
    let corner_half = *spec == ModelSpec::Corner { p: param(1, 2) };
    let n_vertices = window.len();
    let mut visited_flag = vec![false; n_vertices];
    let mut state = vec![UNSEEN; 4 * n_vertices];
    let slot = |e: DirectedDualEdge| -> Option<usize> {
        window.index2(e.tail.a, e.tail.b).map(|i| 4 * i + e.dir.index())
    };
    let state_of = |state: &[u8], e: DirectedDualEdge| slot(e).map_or(UNSEEN, |i| state[i]);

    let mut visited = vec![x];
    let mut visit_step = vec![0];
    visited_flag[window.index2(x.a, x.b).unwrap()] = true;

    // Front of the list is the end of the vector.
    let mut list: Vec<DirectedDualEdge> = Dir::ALL.iter().rev().map(|&d| DirectedDualEdge::new(x, d)).collect();
    let mut steps = Vec::new();
    let mut pivotal_events = Vec::new();
    let mut termination = Termination::Stopped;

    while let Some(e) = list.pop() {
        let n = steps.len() + 1;
        let list_len = list.len() + 1;
        let sib = square_siblings(e);
        let pivotal = sib.as_array().iter().any(|&s| state_of(&state, s) == CLOSED);
        let auto_open = pivotal && corner_half && state_of(&state, sib.west) == CLOSED;
        let open = env.dual_open(e);
        state[slot(e).expect("explored edges start inside the window")] = if open { OPEN } else { CLOSED };
        steps.push(Step { n, edge: e, open, list_len });
        if pivotal {
            pivotal_events.push(PivotalEvent { step: n, edge: e, open, auto_open });
        }
        if !open {
            continue;
        }
        let y = e.head();
        visited.push(y);
        visit_step.push(n);
        visited_flag[window.index2(y.a, y.b).expect("head inside window")] = true;
        if window.on_boundary2(y.a, y.b) {
            termination = Termination::WindowEscaped;
            break;
        }
        for d in e.dir.turns().iter().rev() {
            list.push(DirectedDualEdge::new(y, *d));
        }
        let filled = FilledRegion::from_points(visited.iter().map(|v| (v.a, v.b)))?;
        list.retain(|f| {
            let h = f.head();
            let seen = window.index2(h.a, h.b).is_some_and(|i| visited_flag[i]);
            !seen && !filled.contains(h.a, h.b)
        });
    }

    let pivotal_times: Vec<usize> = pivotal_events.iter().map(|p| p.step).collect();
    let mut record = ExplorationRecord {
        start: x,
        window,
        steps,
        visited,
        visit_step,
        pivotal_events,
        pivotal_times,
        clusters: Vec::new(),
        termination,
        remaining: list.into_iter().rev().collect(),
    };
    record.clusters = decompose(&record);
    Ok(record)
}

/// Splits the visited vertices at the pivotal times: a vertex added at step
/// `s` belongs to cluster `1 + #{pivotal steps <= s}`.
pub fn decompose(record: &ExplorationRecord) -> Vec<Vec<DualVertex>> {
    let times = &record.pivotal_times;
    let mut clusters: Vec<Vec<DualVertex>> = vec![Vec::new()];
    for (&v, &s) in record.visited.iter().zip(&record.visit_step) {
        let k = times.iter().take_while(|&&t| t <= s).count();
        if clusters.len() <= k {
            clusters.resize(k + 1, Vec::new());
        }
        clusters[k].push(v);
    }
    while clusters.len() > 1 && clusters.last().is_some_and(|c| c.is_empty()) {
        clusters.pop();
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{dual_to_primal, primal_to_dual, DirectedPrimalEdge};
    use crate::models::{sample_configuration, Configuration, VertexOutcome};

    fn corner() -> ModelSpec {
        ModelSpec::Corner { p: param(1, 2) }
    }

    fn two_eps() -> ModelSpec {
        ModelSpec::TwoEps { eps: param(0, 1) }
    }

    /// Configuration in which every dual edge is closed: every vertex opens
    /// all four primal out-edges.
    fn all_primal_open(r: u32) -> Configuration {
        Configuration::from_fn(ModelSpec::IidDirected { p: param(1, 1) }, Window::square(0, 0, r), |_, _| VertexOutcome(15))
    }

    fn de(a: (i32, i32), d: Dir) -> DirectedDualEdge {
        DirectedDualEdge::new(DualVertex::new(a.0, a.1), d)
    }

    #[test]
    fn immediate_stop() {
        let c = all_primal_open(4);
        let rec = explore_dual_forward(&c, &c.spec, DualVertex::ORIGIN, Window::square(0, 0, 4)).unwrap();
        assert_eq!(rec.steps.len(), 4);
        assert!(rec.steps.iter().all(|s| !s.open));
        assert_eq!(rec.visited, vec![DualVertex::ORIGIN]);
        assert_eq!(rec.termination, Termination::Stopped);
        assert!(rec.remaining.is_empty());
        assert_eq!(rec.clusters, vec![vec![DualVertex::ORIGIN]]);
        // Order of the initial list: E, N, W, S.
        let dirs: Vec<Dir> = rec.steps.iter().map(|s| s.edge.dir).collect();
        assert_eq!(dirs, Dir::ALL.to_vec());
    }

    #[test]
    fn start_must_be_interior() {
        let c = all_primal_open(2);
        assert!(explore_dual_forward(&c, &c.spec, DualVertex::new(2, 0), Window::square(0, 0, 2)).is_err());
    }

    #[test]
    fn forward_set_extremes() {
        let w = Window::square(0, 0, 3);
        let closed = sample_configuration(&ModelSpec::IidDirected { p: param(0, 1) }, w, 1).unwrap();
        let f = forward_set(&closed, PrimalVertex::ORIGIN, w).unwrap();
        assert_eq!(f.vertices, HashSet::from([(0, 0)]));
        assert!(!f.escaped);
        let open = all_primal_open(3);
        let f = forward_set(&open, PrimalVertex::ORIGIN, w).unwrap();
        assert_eq!(f.vertices.len(), 49);
        assert!(f.escaped);
        assert!(forward_set(&open, PrimalVertex::new(9, 0), w).is_err());
    }

    #[test]
    fn forward_set_on_hand_traced_fixture() {
        // 5x5 window; a spiral of single arrows starting at the origin.
        let w = Window::square(0, 0, 2);
        let arrows: HashMap<(i32, i32), Vec<Dir>> = HashMap::from([
            ((0, 0), vec![Dir::E]),
            ((1, 0), vec![Dir::N, Dir::S]),
            ((1, 1), vec![Dir::W]),
            ((0, 1), vec![Dir::W]),
            ((-1, 1), vec![Dir::S]),
            ((-1, 0), vec![Dir::E]),
            ((1, -1), vec![Dir::W]),
            ((0, -1), vec![Dir::N]),
        ]);
        let c = Configuration::from_fn(ModelSpec::IidDirected { p: param(1, 2) }, w, |x, y| {
            VertexOutcome::from_dirs(arrows.get(&(x, y)).map(|v| v.as_slice()).unwrap_or(&[]))
        });
        // Independent recursive closure.
        fn closure(c: &Configuration, v: (i32, i32), acc: &mut HashSet<(i32, i32)>) {
            if !acc.insert(v) {
                return;
            }
            for d in Dir::ALL {
                if c.get2(v.0, v.1).unwrap().has_dir(d) {
                    let (dx, dy) = d.delta();
                    closure(c, (v.0 + dx, v.1 + dy), acc);
                }
            }
        }
        let mut expect = HashSet::new();
        closure(&c, (0, 0), &mut expect);
        let f = forward_set(&c, PrimalVertex::ORIGIN, w).unwrap();
        assert_eq!(f.vertices, expect);
        assert_eq!(expect.len(), 8);
        assert!(!f.escaped);
    }

    #[test]
    fn pivotal_predicate() {
        let e = primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::ORIGIN, Dir::E));
        let s = square_siblings(e);
        let mut h = History::new();
        assert!(!is_pivotal(&h, e).unwrap());
        h.insert(s.west, true);
        assert!(!is_pivotal(&h, e).unwrap());
        h.insert(s.west, false);
        assert!(is_pivotal(&h, e).unwrap());
        h.insert(e, true);
        assert!(is_pivotal(&h, e).is_err());
    }

    #[test]
    fn auto_open_classification() {
        let e = primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::ORIGIN, Dir::E));
        let s = square_siblings(e);
        let mut h = History::from([(s.west, false)]);
        assert!(classify_auto_open(&h, e, &corner()).unwrap());
        h = History::from([(s.south, false)]);
        assert!(!classify_auto_open(&h, e, &corner()).unwrap());
        h = History::from([(s.west, true)]);
        assert!(classify_auto_open(&h, e, &corner()).is_err());
        h = History::from([(s.west, false)]);
        assert!(classify_auto_open(&h, e, &two_eps()).is_err());
    }

    /// Builds a primal configuration from a set of dual edges that must be
    /// open; every other out-edge is primal-open (dual closed).
    fn from_open_dual(r: u32, open: &[DirectedDualEdge]) -> Configuration {
        let closed_primal: HashSet<DirectedPrimalEdge> = open.iter().map(|&e| dual_to_primal(e)).collect();
        Configuration::from_fn(ModelSpec::IidDirected { p: param(1, 2) }, Window::square(0, 0, r), |x, y| {
            let v = PrimalVertex::new(x, y);
            let dirs: Vec<Dir> = Dir::ALL
                .into_iter()
                .filter(|&d| !closed_primal.contains(&DirectedPrimalEdge::new(v, d)))
                .collect();
            VertexOutcome::from_dirs(&dirs)
        })
    }

    #[test]
    fn pivotal_reveal_with_list_of_length_one() {
        // Open dual loop (0,0) -> (0,1) -> (-1,1) -> (-1,0); every other dual
        // edge closed, so later reveals meet closed siblings.
        let open = [de((0, 0), Dir::N), de((0, 1), Dir::W), de((-1, 1), Dir::S)];
        let c = from_open_dual(5, &open);
        let rec = explore_dual_forward(&c, &c.spec, DualVertex::ORIGIN, Window::square(0, 0, 5)).unwrap();
        assert_eq!(rec.termination, Termination::Stopped);
        for ev in &rec.pivotal_events {
            assert_eq!(rec.steps[ev.step - 1].list_len, 1, "{ev:?}");
        }
        assert_eq!(rec.visited_set().len(), 4);
    }

    #[test]
    fn decompose_cases() {
        let c = all_primal_open(3);
        let rec = explore_dual_forward(&c, &c.spec, DualVertex::ORIGIN, Window::square(0, 0, 3)).unwrap();
        assert_eq!(decompose(&rec), vec![vec![DualVertex::ORIGIN]]);

        // Hand record: one open pivotal at step 3, then a closed step.
        let v = |a, b| DualVertex::new(a, b);
        let rec = ExplorationRecord {
            start: v(0, 0),
            window: Window::square(0, 0, 5),
            steps: vec![],
            visited: vec![v(0, 0), v(1, 0), v(1, 1), v(2, 1)],
            visit_step: vec![0, 1, 3, 4],
            pivotal_events: vec![PivotalEvent { step: 3, edge: de((1, 0), Dir::N), open: true, auto_open: false }],
            pivotal_times: vec![3],
            clusters: vec![],
            termination: Termination::Stopped,
            remaining: vec![],
        };
        assert_eq!(decompose(&rec), vec![vec![v(0, 0), v(1, 0)], vec![v(1, 1), v(2, 1)]]);
    }

    #[test]
    fn exploration_is_deterministic_and_sandwiched() {
        let w = Window::square(0, 0, 12);
        for seed in 0..300 {
            let c = sample_configuration(&two_eps(), w, seed).unwrap();
            let a = explore_dual_forward(&c, &c.spec, DualVertex::ORIGIN, w).unwrap();
            let b = explore_dual_forward(&c, &c.spec, DualVertex::ORIGIN, w).unwrap();
            assert_eq!(a, b);
            if a.termination == Termination::Stopped {
                let ex = a.visited_set();
                let f = forward_set(&c, DualVertex::ORIGIN, w).unwrap().vertices;
                let fill = crate::lattice::fill(&ex).unwrap();
                assert!(ex.is_subset(&f) && f.is_subset(&fill), "seed {seed}");
            }
            for ev in &a.pivotal_events {
                assert_eq!(a.steps[ev.step - 1].list_len, 1);
            }
        }
    }

    #[test]
    fn dual_size_matches_forward_set() {
        let w = Window::square(0, 0, 30);
        for seed in 0..100 {
            let c = sample_configuration(&two_eps(), w, seed).unwrap();
            let f = forward_set(&c, DualVertex::ORIGIN, w).unwrap();
            if !f.escaped {
                assert_eq!(dual_forward_size(&c, DualVertex::ORIGIN, 25), f.vertices.len().min(25));
            }
        }
    }
}
