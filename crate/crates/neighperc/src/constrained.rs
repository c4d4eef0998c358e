//! Undirected bond percolation with two forbidden patterns, and the search
//! for open paths that never traverse a pattern's open trail while its two
//! designated edges are closed.
//!
//! Horizontal pattern at anchor `(0,0)`: open trail
//! `(0,0)-(0,1)-(1,1)-(1,0)-(2,0)-(2,1)`, closed edges `{(0,0),(1,0)}` and
//! `{(1,1),(2,1)}`. The vertical pattern is its rotation by +π/2 about the
//! anchor.

use std::collections::{HashSet, VecDeque};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::lattice::{Dir, UEdge, Window};
use crate::rng::{coord_tag, tag, Stream};
use crate::Error;

/// Latent uniform of an undirected edge. Shared with the p-layer of the
/// enhanced model, so both see the same sample for the same seed.
#[inline]
pub fn bond_uniform(seed: u64, e: UEdge) -> f64 {
    Stream::new(seed, &[tag::BOND, coord_tag(e.x), coord_tag(e.y), e.horizontal as u64]).uniform()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BondConfig {
    pub window: Window,
    pub q: f64,
    pub seed: u64,
    /// Two slots per window vertex: horizontal then vertical edge leaving it
    /// to the east / north. Slots whose other endpoint is outside stay false.
    open: Vec<bool>,
}

impl BondConfig {
    pub fn empty(window: Window) -> Self {
        BondConfig { window, q: 0.0, seed: 0, open: vec![false; 2 * window.len()] }
    }

    pub fn from_open_edges(window: Window, edges: impl IntoIterator<Item = UEdge>) -> Self {
        let mut c = BondConfig::empty(window);
        for e in edges {
            c.set(e, true);
        }
        c
    }

    #[inline]
    fn slot(&self, e: UEdge) -> Option<usize> {
        let (_, (x2, y2)) = e.endpoints();
        if !self.window.contains2(x2, y2) {
            return None;
        }
        self.window.index2(e.x, e.y).map(|i| 2 * i + (!e.horizontal) as usize)
    }

    pub fn contains_edge(&self, e: UEdge) -> bool {
        self.slot(e).is_some()
    }

    /// Absent edges (outside the window) read as closed.
    #[inline]
    pub fn is_open(&self, e: UEdge) -> bool {
        self.slot(e).is_some_and(|i| self.open[i])
    }

    pub fn set(&mut self, e: UEdge, open: bool) {
        let i = self.slot(e).unwrap_or_else(|| panic!("{e:?} not inside the window"));
        self.open[i] = open;
    }

    pub fn edges(&self) -> impl Iterator<Item = UEdge> + '_ {
        (0..self.window.len()).flat_map(move |i| {
            let (x, y) = self.window.point2(i);
            [true, false]
                .into_iter()
                .map(move |h| UEdge { x, y, horizontal: h })
                .filter(|&e| self.contains_edge(e))
        })
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }
}

/// I.i.d. Bernoulli(q) bonds on every edge with both endpoints in `window`.
pub fn sample_bond(q: f64, window: Window, seed: u64) -> BondConfig {
    let mut c = BondConfig::empty(window);
    c.q = q;
    c.seed = seed;
    let edges: Vec<UEdge> = c.edges().collect();
    for e in edges {
        c.set(e, bond_uniform(seed, e) < q);
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shape {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatternInstance {
    pub shape: Shape,
    pub anchor: (i32, i32),
}

const H_TRAIL: [(i32, i32); 6] = [(0, 0), (0, 1), (1, 1), (1, 0), (2, 0), (2, 1)];
const H_CLOSED: [[(i32, i32); 2]; 2] = [[(0, 0), (1, 0)], [(1, 1), (2, 1)]];

// Step directions along the trail, forwards and backwards, per shape.
const H_FWD: [Dir; 5] = [Dir::N, Dir::E, Dir::S, Dir::E, Dir::N];
const H_REV: [Dir; 5] = [Dir::S, Dir::W, Dir::N, Dir::W, Dir::S];
const V_FWD: [Dir; 5] = [Dir::W, Dir::N, Dir::E, Dir::N, Dir::W];
const V_REV: [Dir; 5] = [Dir::E, Dir::S, Dir::W, Dir::S, Dir::E];

impl PatternInstance {
    pub fn new(shape: Shape, anchor: (i32, i32)) -> Self {
        PatternInstance { shape, anchor }
    }

    fn place(&self, (x, y): (i32, i32)) -> (i32, i32) {
        let (ax, ay) = self.anchor;
        match self.shape {
            Shape::Horizontal => (ax + x, ay + y),
            Shape::Vertical => (ax - y, ay + x),
        }
    }

    pub fn trail_vertices(&self) -> [(i32, i32); 6] {
        H_TRAIL.map(|p| self.place(p))
    }

    pub fn trail_edges(&self) -> [UEdge; 5] {
        let v = self.trail_vertices();
        [0, 1, 2, 3, 4].map(|i| UEdge::between(v[i], v[i + 1]))
    }

    pub fn closed_edges(&self) -> [UEdge; 2] {
        H_CLOSED.map(|[a, b]| UEdge::between(self.place(a), self.place(b)))
    }

    /// Endpoints of the diagonal edge that bypasses this pattern.
    pub fn diagonal(&self) -> ((i32, i32), (i32, i32)) {
        (self.place((0, 0)), self.place((2, 1)))
    }

    pub fn edges(&self) -> impl Iterator<Item = UEdge> {
        self.trail_edges().into_iter().chain(self.closed_edges())
    }

    /// The instance whose trail, walked from `start`, follows `dirs`.
    pub fn from_trail_walk(start: (i32, i32), dirs: &[Dir; 5]) -> Option<Self> {
        let (x, y) = start;
        if *dirs == H_FWD {
            Some(PatternInstance::new(Shape::Horizontal, (x, y)))
        } else if *dirs == H_REV {
            Some(PatternInstance::new(Shape::Horizontal, (x - 2, y - 1)))
        } else if *dirs == V_FWD {
            Some(PatternInstance::new(Shape::Vertical, (x, y)))
        } else if *dirs == V_REV {
            Some(PatternInstance::new(Shape::Vertical, (x + 1, y - 2)))
        } else {
            None
        }
    }
}

/// All five trail edges open and both designated edges closed.
pub fn pattern_occurs(config: &BondConfig, inst: &PatternInstance) -> Result<bool, Error> {
    if !inst.edges().all(|e| config.contains_edge(e)) {
        return Err(Error::Precondition(format!("{inst:?} not inside the window")));
    }
    Ok(inst.trail_edges().iter().all(|&e| config.is_open(e)) && inst.closed_edges().iter().all(|&e| !config.is_open(e)))
}

fn step_dir(a: (i32, i32), b: (i32, i32)) -> Option<Dir> {
    match (b.0 - a.0, b.1 - a.1) {
        (1, 0) => Some(Dir::E),
        (0, 1) => Some(Dir::N),
        (-1, 0) => Some(Dir::W),
        (0, -1) => Some(Dir::S),
        _ => None,
    }
}

/// Does some run of five consecutive path edges walk a pattern trail whose
/// designated edges are closed?
pub fn path_uses_pattern(path: &[(i32, i32)], config: &BondConfig) -> Result<bool, Error> {
    let mut dirs = Vec::with_capacity(path.len());
    for w in path.windows(2) {
        let d = step_dir(w[0], w[1]).ok_or_else(|| Error::Precondition(format!("{:?} -> {:?} is not an edge", w[0], w[1])))?;
        if !config.is_open(UEdge::between(w[0], w[1])) {
            return Err(Error::Precondition(format!("path edge {:?}-{:?} is closed", w[0], w[1])));
        }
        dirs.push(d);
    }
    Ok(dirs.windows(5).enumerate().any(|(i, run)| {
        let run: &[Dir; 5] = run.try_into().unwrap();
        PatternInstance::from_trail_walk(path[i], run)
            .is_some_and(|inst| inst.closed_edges().iter().all(|&e| !config.is_open(e)))
    }))
}

const TRAIL_WORDS: [[Dir; 5]; 4] = [H_FWD, H_REV, V_FWD, V_REV];

/// Aho-Corasick style automaton over the four trail words. A state is the
/// longest suffix of the step history (at most four steps) that is a prefix
/// of some word, so a step completes a trail exactly when the state has
/// length four and the step extends it to a full word.
struct Automaton {
    next: Vec<[u8; 4]>,
    completes: Vec<[bool; 4]>,
    /// Displacement accumulated along the state's steps.
    offset: Vec<(i32, i32)>,
    word: Vec<Vec<Dir>>,
}

fn automaton() -> &'static Automaton {
    static CELL: OnceLock<Automaton> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut word: Vec<Vec<Dir>> = vec![vec![]];
        for w in TRAIL_WORDS {
            for k in 1..5 {
                if !word.iter().any(|p| p[..] == w[..k]) {
                    word.push(w[..k].to_vec());
                }
            }
        }
        let find = |seq: &[Dir]| -> u8 {
            (0..=seq.len().min(4))
                .find_map(|cut| word.iter().position(|p| p[..] == seq[cut..]))
                .expect("empty suffix is always a state") as u8
        };
        let mut next = vec![];
        let mut completes = vec![];
        for p in &word {
            let mut row = [0u8; 4];
            let mut done = [false; 4];
            for d in Dir::ALL {
                let mut seq = p.clone();
                seq.push(d);
                done[d.index()] = TRAIL_WORDS.iter().any(|w| w[..] == seq[..]);
                row[d.index()] = find(&seq);
            }
            next.push(row);
            completes.push(done);
        }
        debug_assert_eq!(word.len(), 17);
        let offset = word
            .iter()
            .map(|p| p.iter().fold((0, 0), |(x, y), d| (x + d.delta().0, y + d.delta().1)))
            .collect();
        Automaton { next, completes, offset, word }
    })
}

const CODES: usize = 22;

/// Breadth-first search over (vertex, trail-automaton state, last step)
/// from `source` towards `source + ∂Λ_n`. Unit steps go along `open` edges;
/// `jumps` lists extra neighbours (diagonal edges) whose traversal clears
/// the history. Immediate reversal of a unit step is not allowed. All
/// expanded vertices and jump targets must lie in `source + Λ_n`.
pub(crate) fn pattern_free_search(
    source: (i32, i32),
    n: u32,
    open: impl Fn(UEdge) -> bool,
    jumps: impl Fn((i32, i32), &mut Vec<(i32, i32)>),
    want_path: bool,
) -> Option<Vec<(i32, i32)>> {
    if n == 0 {
        return Some(vec![source]);
    }
    let auto = automaton();
    let n = n as i32;
    let side = 2 * n + 1;
    let rel = |v: (i32, i32)| (v.0 - source.0, v.1 - source.1);
    let boundary = |v: (i32, i32)| {
        let (dx, dy) = rel(v);
        dx.abs().max(dy.abs()) == n
    };
    // Empty automaton state carries the last step separately (4 = none).
    let code = |s: u8, last: Option<Dir>| -> usize {
        if s > 0 {
            s as usize
        } else {
            17 + last.map_or(4, Dir::index)
        }
    };
    let slot = |v: (i32, i32), c: usize| -> usize {
        let (dx, dy) = rel(v);
        debug_assert!(dx.abs() <= n && dy.abs() <= n, "{v:?} outside the search box");
        (((dy + n) * side + (dx + n)) as usize) * CODES + c
    };
    let mut seen = vec![false; (side * side) as usize * CODES];
    let mut parent: Vec<u32> = if want_path { vec![u32::MAX; seen.len()] } else { vec![] };
    let mut queue: VecDeque<((i32, i32), u8, Option<Dir>)> = VecDeque::new();
    let s0 = slot(source, code(0, None));
    seen[s0] = true;
    queue.push_back((source, 0, None));
    let mut buf = Vec::new();
    let finish = |end: usize, parent: &[u32]| -> Vec<(i32, i32)> {
        if !want_path {
            return vec![];
        }
        let mut path = vec![];
        let mut k = end;
        loop {
            let cell = (k / CODES) as i32;
            path.push((cell % side - n + source.0, cell / side - n + source.1));
            if parent[k] == u32::MAX {
                break;
            }
            k = parent[k] as usize;
        }
        path.reverse();
        path
    };
    while let Some((v, s, last)) = queue.pop_front() {
        let here = slot(v, code(s, last));
        let mut visit = |w: (i32, i32), ns: u8, nl: Option<Dir>, queue: &mut VecDeque<_>| -> Option<usize> {
            let k = slot(w, code(ns, nl));
            if seen[k] {
                return None;
            }
            seen[k] = true;
            if want_path {
                parent[k] = here as u32;
            }
            if boundary(w) {
                return Some(k);
            }
            queue.push_back((w, ns, nl));
            None
        };
        for d in Dir::ALL {
            if last == Some(d.opposite()) {
                continue;
            }
            let (dx, dy) = d.delta();
            let w = (v.0 + dx, v.1 + dy);
            if !open(UEdge::between(v, w)) {
                continue;
            }
            let si = s as usize;
            if auto.completes[si][d.index()] {
                let (ox, oy) = auto.offset[si];
                let mut run = [d; 5];
                run[..4].copy_from_slice(&auto.word[si]);
                let inst = PatternInstance::from_trail_walk((v.0 - ox, v.1 - oy), &run).expect("completed word is a trail");
                if inst.closed_edges().iter().all(|&e| !open(e)) {
                    continue;
                }
            }
            if let Some(k) = visit(w, auto.next[si][d.index()], Some(d), &mut queue) {
                return Some(finish(k, &parent));
            }
        }
        buf.clear();
        jumps(v, &mut buf);
        for &w in &buf {
            if let Some(k) = visit(w, 0, None, &mut queue) {
                return Some(finish(k, &parent));
            }
        }
    }
    None
}

fn check_region(config: &BondConfig, source: (i32, i32), n: u32) -> Result<(), Error> {
    let w = &config.window;
    let r = n as i32;
    let inside = w.contains2(source.0 - r, source.1 - r) && w.contains2(source.0 + r, source.1 + r);
    if !inside {
        return Err(Error::Precondition(format!("source {source:?} + Λ_{n} not inside the window")));
    }
    Ok(())
}

/// Open path from `source` to `source + ∂Λ_n` that never walks a forbidden
/// trail, if one exists.
pub fn constrained_connect(config: &BondConfig, source: (i32, i32), n: u32) -> Result<Option<Vec<(i32, i32)>>, Error> {
    check_region(config, source, n)?;
    Ok(pattern_free_search(source, n, |e| config.is_open(e), |_, _| {}, true))
}

pub fn constrained_reaches(config: &BondConfig, source: (i32, i32), n: u32) -> Result<bool, Error> {
    check_region(config, source, n)?;
    Ok(pattern_free_search(source, n, |e| config.is_open(e), |_, _| {}, false).is_some())
}

/// Plain open-path connectivity to `source + ∂Λ_n`.
pub fn bond_reaches(config: &BondConfig, source: (i32, i32), n: u32) -> Result<bool, Error> {
    check_region(config, source, n)?;
    Ok(open_cluster_reaches(source, n, |e| config.is_open(e)))
}

pub(crate) fn open_cluster_reaches(source: (i32, i32), n: u32, open: impl Fn(UEdge) -> bool) -> bool {
    let n = n as i32;
    if n == 0 {
        return true;
    }
    let mut seen = HashSet::from([source]);
    let mut stack = vec![source];
    while let Some(v) = stack.pop() {
        for d in Dir::ALL {
            let (dx, dy) = d.delta();
            let w = (v.0 + dx, v.1 + dy);
            if open(UEdge::between(v, w)) && seen.insert(w) {
                if (w.0 - source.0).abs().max((w.1 - source.1).abs()) == n {
                    return true;
                }
                stack.push(w);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trail_only(inst: PatternInstance, w: Window) -> BondConfig {
        BondConfig::from_open_edges(w, inst.trail_edges())
    }

    #[test]
    fn pattern_geometry() {
        let h = PatternInstance::new(Shape::Horizontal, (0, 0));
        assert_eq!(h.trail_vertices(), H_TRAIL);
        assert_eq!(h.diagonal(), ((0, 0), (2, 1)));
        let v = PatternInstance::new(Shape::Vertical, (0, 0));
        assert_eq!(v.trail_vertices(), [(0, 0), (-1, 0), (-1, 1), (0, 1), (0, 2), (-1, 2)]);
        assert_eq!(v.closed_edges(), [UEdge::between((0, 0), (0, 1)), UEdge::between((-1, 1), (-1, 2))]);
        assert_eq!(v.diagonal(), ((0, 0), (-1, 2)));
        // Walk tables agree with the placed trails, both directions.
        for inst in [h, v, PatternInstance::new(Shape::Vertical, (3, -2))] {
            let t = inst.trail_vertices();
            let fwd: Vec<Dir> = t.windows(2).map(|w| step_dir(w[0], w[1]).unwrap()).collect();
            assert_eq!(PatternInstance::from_trail_walk(t[0], &fwd.clone().try_into().unwrap()), Some(inst));
            let rev: Vec<Dir> = t.windows(2).rev().map(|w| step_dir(w[1], w[0]).unwrap()).collect();
            assert_eq!(PatternInstance::from_trail_walk(t[5], &rev.try_into().unwrap()), Some(inst));
        }
    }

    #[test]
    fn occurrence_examples() {
        let w = Window::square(0, 0, 4);
        let h = PatternInstance::new(Shape::Horizontal, (0, 0));
        let full = BondConfig::from_open_edges(w, BondConfig::empty(w).edges().collect::<Vec<_>>());
        assert!(!pattern_occurs(&full, &h).unwrap());
        let mut c = trail_only(h, w);
        assert!(pattern_occurs(&c, &h).unwrap());
        c.set(h.trail_edges()[2], false);
        assert!(!pattern_occurs(&c, &h).unwrap());
        assert!(pattern_occurs(&c, &PatternInstance::new(Shape::Horizontal, (3, 3))).is_err());
    }

    #[test]
    fn path_pattern_examples() {
        let w = Window::square(0, 0, 4);
        let h = PatternInstance::new(Shape::Horizontal, (0, 0));
        let c = trail_only(h, w);
        let t = h.trail_vertices();
        assert!(path_uses_pattern(&t, &c).unwrap());
        let mut rev = t;
        rev.reverse();
        assert!(path_uses_pattern(&rev, &c).unwrap());
        assert!(!path_uses_pattern(&t[..5], &c).unwrap());
        // Same walk with one designated edge open is allowed.
        let mut c2 = c.clone();
        c2.set(h.closed_edges()[0], true);
        assert!(!path_uses_pattern(&t, &c2).unwrap());
        assert!(path_uses_pattern(&[(0, 0), (1, 0)], &c).is_err());
    }

    #[test]
    fn corridor_is_blocked() {
        // The trail continued north from (2,1) up to (2,3), which is the only
        // way out to ∂Λ_3, and it requires walking the whole trail.
        let w = Window::square(0, 0, 4);
        let h = PatternInstance::new(Shape::Horizontal, (0, 0));
        let mut c = trail_only(h, w);
        c.set(UEdge::between((2, 1), (2, 2)), true);
        c.set(UEdge::between((2, 2), (2, 3)), true);
        assert_eq!(constrained_connect(&c, (0, 0), 3).unwrap(), None);
        assert!(bond_reaches(&c, (0, 0), 3).unwrap());
        c.set(h.closed_edges()[1], true);
        assert_eq!(constrained_connect(&c, (0, 0), 3).unwrap().unwrap().last(), Some(&(2, 3)));
        let all = BondConfig::from_open_edges(w, BondConfig::empty(w).edges().collect::<Vec<_>>());
        let p = constrained_connect(&all, (0, 0), 3).unwrap().unwrap();
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn every_trail_word_is_blocked_both_ways() {
        let w = Window::square(0, 0, 8);
        for shape in [Shape::Horizontal, Shape::Vertical] {
            let inst = PatternInstance::new(shape, (0, 0));
            let t = inst.trail_vertices();
            for (from, to) in [(t[0], t[5]), (t[5], t[0])] {
                // Exit leg pointing away from the trail, far enough that the
                // only way to ∂Λ_4 of `from` is the whole trail.
                let away = (to.0 + (to.0 - from.0) * 3, to.1 + (to.1 - from.1) * 3);
                let mut c = trail_only(inst, w);
                let (mut x, mut y) = to;
                while (x, y) != away {
                    let nx = (x + (away.0 - x).signum(), y + if x == away.0 { (away.1 - y).signum() } else { 0 });
                    c.set(UEdge::between((x, y), nx), true);
                    (x, y) = nx;
                }
                let n = 4;
                let open_only = |e: UEdge| c.is_open(e);
                assert!(open_cluster_reaches(from, n, open_only));
                assert_eq!(pattern_free_search(from, n, open_only, |_, _| {}, false), None, "{shape:?} {from:?}");
                let mut relieved = c.clone();
                relieved.set(inst.closed_edges()[0], true);
                let ok = |e: UEdge| relieved.is_open(e);
                assert!(pattern_free_search(from, n, ok, |_, _| {}, false).is_some());
            }
        }
    }

    #[test]
    fn found_paths_are_admissible() {
        let w = Window::square(0, 0, 6);
        for seed in 0..300 {
            let c = sample_bond(0.55, w, seed);
            let found = constrained_connect(&c, (0, 0), 6).unwrap();
            if let Some(p) = &found {
                assert!(!path_uses_pattern(p, &c).unwrap());
                assert!(bond_reaches(&c, (0, 0), 6).unwrap());
            }
            assert_eq!(found.is_some(), constrained_reaches(&c, (0, 0), 6).unwrap());
        }
    }

    #[test]
    fn sample_bond_extremes_and_nesting() {
        let w = Window::square(0, 0, 3);
        assert_eq!(sample_bond(0.0, w, 1).open_count(), 0);
        let all = sample_bond(1.0, w, 1);
        assert_eq!(all.open_count(), 2 * 6 * 7);
        let small = sample_bond(0.5, w, 9);
        let big = sample_bond(0.5, Window::square(0, 0, 5), 9);
        for e in small.edges() {
            assert_eq!(small.is_open(e), big.is_open(e));
        }
    }
}
