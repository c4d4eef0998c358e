//! Square-lattice geometry: directions, primal and dual edges, the duality
//! rotation, windows, `fill` and winding classification.
//!
//! Dual vertex `(a, b)` stands for the point `(a + 1/2, b + 1/2)`, so all
//! arithmetic stays in integers.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::Error;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 6;

/// Planar directions in counter-clockwise order. For general `d` the index
/// convention extends this: direction `j < d` is `+e_j`, `j >= d` is `-e_{j-d}`,
/// which for `d = 2` gives exactly E, N, W, S.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    E,
    N,
    W,
    S,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::E, Dir::N, Dir::W, Dir::S];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Dir {
        Dir::ALL[i & 3]
    }

    #[inline]
    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::E => (1, 0),
            Dir::N => (0, 1),
            Dir::W => (-1, 0),
            Dir::S => (0, -1),
        }
    }

    #[inline]
    pub fn ccw(self) -> Dir {
        Dir::from_index(self.index() + 1)
    }

    #[inline]
    pub fn cw(self) -> Dir {
        Dir::from_index(self.index() + 3)
    }

    #[inline]
    pub fn opposite(self) -> Dir {
        Dir::from_index(self.index() + 2)
    }

    pub fn letter(self) -> char {
        ['E', 'N', 'W', 'S'][self.index()]
    }

    /// Out-directions after arriving along `self`, as [right, straight, left].
    #[inline]
    pub fn turns(self) -> [Dir; 3] {
        [self.cw(), self, self.ccw()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimalVertex {
    pub x: i32,
    pub y: i32,
}

impl PrimalVertex {
    pub const ORIGIN: PrimalVertex = PrimalVertex { x: 0, y: 0 };

    pub fn new(x: i32, y: i32) -> Self {
        PrimalVertex { x, y }
    }

    #[inline]
    pub fn step(self, d: Dir) -> Self {
        let (dx, dy) = d.delta();
        PrimalVertex { x: self.x + dx, y: self.y + dy }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualVertex {
    pub a: i32,
    pub b: i32,
}

impl DualVertex {
    pub const ORIGIN: DualVertex = DualVertex { a: 0, b: 0 };

    pub fn new(a: i32, b: i32) -> Self {
        DualVertex { a, b }
    }

    #[inline]
    pub fn step(self, d: Dir) -> Self {
        let (dx, dy) = d.delta();
        DualVertex { a: self.a + dx, b: self.b + dy }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedPrimalEdge {
    pub tail: PrimalVertex,
    pub dir: Dir,
}

impl DirectedPrimalEdge {
    pub fn new(tail: PrimalVertex, dir: Dir) -> Self {
        DirectedPrimalEdge { tail, dir }
    }

    pub fn head(self) -> PrimalVertex {
        self.tail.step(self.dir)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedDualEdge {
    pub tail: DualVertex,
    pub dir: Dir,
}

impl DirectedDualEdge {
    pub fn new(tail: DualVertex, dir: Dir) -> Self {
        DirectedDualEdge { tail, dir }
    }

    #[inline]
    pub fn head(self) -> DualVertex {
        self.tail.step(self.dir)
    }

    /// The primal vertex whose out-edge this dual edge is the image of.
    #[inline]
    pub fn owner(self) -> PrimalVertex {
        dual_to_primal(self).tail
    }
}

// Offset from the primal tail z to the dual tail, indexed by primal direction.
const DUAL_TAIL_OFFSET: [(i32, i32); 4] = [(0, -1), (0, 0), (-1, 0), (-1, -1)];

/// Rotation by +π/2 about the edge midpoint. The primal direction turns ccw
/// and the dual tail is read off a four-entry table.
#[inline]
pub fn primal_to_dual(e: DirectedPrimalEdge) -> DirectedDualEdge {
    let (ox, oy) = DUAL_TAIL_OFFSET[e.dir.index()];
    DirectedDualEdge {
        tail: DualVertex::new(e.tail.x + ox, e.tail.y + oy),
        dir: e.dir.ccw(),
    }
}

#[inline]
pub fn dual_to_primal(e: DirectedDualEdge) -> DirectedPrimalEdge {
    let dir = e.dir.cw();
    let (ox, oy) = DUAL_TAIL_OFFSET[dir.index()];
    DirectedPrimalEdge {
        tail: PrimalVertex::new(e.tail.a - ox, e.tail.b - oy),
        dir,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Siblings {
    pub north: DirectedDualEdge,
    pub west: DirectedDualEdge,
    pub south: DirectedDualEdge,
}

impl Siblings {
    pub fn as_array(&self) -> [DirectedDualEdge; 3] {
        [self.north, self.west, self.south]
    }
}

/// The other three sides of the unit square around the owner of `e`, named
/// as if `e` were its east side.
pub fn square_siblings(e: DirectedDualEdge) -> Siblings {
    let p = dual_to_primal(e);
    let rot = |k: usize| {
        primal_to_dual(DirectedPrimalEdge::new(p.tail, Dir::from_index(p.dir.index() + k)))
    };
    Siblings { north: rot(1), west: rot(2), south: rot(3) }
}

impl From<PrimalVertex> for (i32, i32) {
    fn from(v: PrimalVertex) -> Self {
        (v.x, v.y)
    }
}

impl From<DualVertex> for (i32, i32) {
    fn from(v: DualVertex) -> Self {
        (v.a, v.b)
    }
}

/// Undirected nearest-neighbour edge, keyed by its lower-left endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UEdge {
    pub x: i32,
    pub y: i32,
    pub horizontal: bool,
}

impl UEdge {
    /// Panics unless `u` and `v` are lattice neighbours.
    pub fn between(u: impl Into<(i32, i32)>, v: impl Into<(i32, i32)>) -> Self {
        let (u, v) = (u.into(), v.into());
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        match (hi.0 - lo.0, hi.1 - lo.1) {
            (1, 0) => UEdge { x: lo.0, y: lo.1, horizontal: true },
            (0, 1) => UEdge { x: lo.0, y: lo.1, horizontal: false },
            _ => panic!("{u:?} and {v:?} are not neighbours"),
        }
    }

    pub fn endpoints(self) -> ((i32, i32), (i32, i32)) {
        let other = if self.horizontal { (self.x + 1, self.y) } else { (self.x, self.y + 1) };
        ((self.x, self.y), other)
    }
}

/// An L∞ box `center + [-radius, radius]^dim`. The same type serves primal
/// and dual windows; coordinates are interpreted by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub dim: usize,
    pub radius: u32,
    pub center: [i32; MAX_DIM],
}

impl Window {
    /// Planar window.
    pub fn square(cx: i32, cy: i32, radius: u32) -> Self {
        let mut center = [0; MAX_DIM];
        center[0] = cx;
        center[1] = cy;
        Window { dim: 2, radius, center }
    }

    /// Origin-centred box in dimension `dim`.
    pub fn cube(dim: usize, radius: u32) -> Result<Self, Error> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Unsupported(format!("dimension {dim} (supported: 1..={MAX_DIM})")));
        }
        Ok(Window { dim, radius, center: [0; MAX_DIM] })
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains2(&self, x: i32, y: i32) -> bool {
        let r = self.radius as i32;
        (x - self.center[0]).abs() <= r && (y - self.center[1]).abs() <= r
    }

    #[inline]
    pub fn on_boundary2(&self, x: i32, y: i32) -> bool {
        let r = self.radius as i32;
        let (dx, dy) = ((x - self.center[0]).abs(), (y - self.center[1]).abs());
        dx.max(dy) == r
    }

    /// Row-major rank (x fastest) of a planar point.
    #[inline]
    pub fn index2(&self, x: i32, y: i32) -> Option<usize> {
        if !self.contains2(x, y) {
            return None;
        }
        let r = self.radius as i32;
        let side = self.side();
        Some((y - self.center[1] + r) as usize * side + (x - self.center[0] + r) as usize)
    }

    #[inline]
    pub fn point2(&self, index: usize) -> (i32, i32) {
        let side = self.side();
        let r = self.radius as i32;
        (
            (index % side) as i32 - r + self.center[0],
            (index / side) as i32 - r + self.center[1],
        )
    }

    pub fn contains(&self, p: &[i32]) -> bool {
        p.len() == self.dim
            && p.iter()
                .zip(&self.center)
                .all(|(&c, &z)| (c - z).abs() <= self.radius as i32)
    }

    pub fn on_boundary(&self, p: &[i32]) -> bool {
        self.contains(p) && p.iter().zip(&self.center).any(|(&c, &z)| (c - z).abs() == self.radius as i32)
    }

    /// Row-major rank with the first coordinate fastest.
    pub fn index(&self, p: &[i32]) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let side = self.side();
        let r = self.radius as i32;
        let mut idx = 0usize;
        for k in (0..self.dim).rev() {
            idx = idx * side + (p[k] - self.center[k] + r) as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut index: usize) -> [i32; MAX_DIM] {
        let side = self.side();
        let r = self.radius as i32;
        let mut p = [0; MAX_DIM];
        for (k, c) in p.iter_mut().enumerate().take(self.dim) {
            *c = (index % side) as i32 - r + self.center[k];
            index /= side;
        }
        p
    }

    /// Stride of axis `k` in the row-major layout.
    pub fn stride(&self, k: usize) -> usize {
        self.side().pow(k as u32)
    }
}

/// `A` together with all its holes, stored as a dense bitmap over the
/// bounding box of `A` grown by one cell.
#[derive(Clone, Debug)]
pub struct FilledRegion {
    x0: i32,
    y0: i32,
    w: usize,
    h: usize,
    cells: Vec<bool>,
}

impl FilledRegion {
    pub fn from_points<I: IntoIterator<Item = (i32, i32)>>(points: I) -> Result<Self, Error> {
        let pts: Vec<(i32, i32)> = points.into_iter().collect();
        if pts.is_empty() {
            return Err(Error::Precondition("fill of an empty set".into()));
        }
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for &(x, y) in &pts {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        let (x0, y0) = (xmin - 1, ymin - 1);
        let w = (xmax - xmin + 3) as usize;
        let h = (ymax - ymin + 3) as usize;
        let mut member = vec![false; w * h];
        for &(x, y) in &pts {
            member[(y - y0) as usize * w + (x - x0) as usize] = true;
        }
        // Flood the complement from the margin corner; whatever it cannot
        // reach is either in A or a hole.
        let mut outside = vec![false; w * h];
        let mut queue = VecDeque::from([0usize]);
        outside[0] = true;
        while let Some(i) = queue.pop_front() {
            let (cx, cy) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !member[j] && !outside[j] {
                    outside[j] = true;
                    queue.push_back(j);
                }
            };
            if cx > 0 {
                visit(i - 1);
            }
            if cx + 1 < w {
                visit(i + 1);
            }
            if cy > 0 {
                visit(i - w);
            }
            if cy + 1 < h {
                visit(i + w);
            }
        }
        let cells = outside.into_iter().map(|o| !o).collect();
        Ok(FilledRegion { x0, y0, w, h, cells })
    }

    #[inline]
    pub fn contains(&self, x: i32, y: i32) -> bool {
        let (dx, dy) = (x - self.x0, y - self.y0);
        if dx < 0 || dy < 0 || dx as usize >= self.w || dy as usize >= self.h {
            return false;
        }
        self.cells[dy as usize * self.w + dx as usize]
    }

    pub fn points(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.cells.iter().enumerate().filter(|(_, &c)| c).map(move |(i, _)| {
            ((i % self.w) as i32 + self.x0, (i / self.w) as i32 + self.y0)
        })
    }
}

/// Complement of the unbounded component of the complement of `a`.
pub fn fill(a: &HashSet<(i32, i32)>) -> Result<HashSet<(i32, i32)>, Error> {
    Ok(FilledRegion::from_points(a.iter().copied())?.points().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winding {
    LeftWinding,
    RightWinding,
    Neither,
}

/// Two consecutive left turns go once around a single primal vertex; two
/// right turns visit three different ones.
pub fn winding_class(
    e1: DirectedDualEdge,
    e2: DirectedDualEdge,
    e3: DirectedDualEdge,
) -> Result<Winding, Error> {
    if e1.head() != e2.tail || e2.head() != e3.tail {
        return Err(Error::Precondition("winding_class needs three consecutive edges".into()));
    }
    let left = |a: Dir, b: Dir| b == a.ccw();
    let right = |a: Dir, b: Dir| b == a.cw();
    Ok(if left(e1.dir, e2.dir) && left(e2.dir, e3.dir) {
        Winding::LeftWinding
    } else if right(e1.dir, e2.dir) && right(e2.dir, e3.dir) {
        Winding::RightWinding
    } else {
        Winding::Neither
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn de(a: (i32, i32), b: (i32, i32)) -> DirectedDualEdge {
        let dir = match (b.0 - a.0, b.1 - a.1) {
            (1, 0) => Dir::E,
            (0, 1) => Dir::N,
            (-1, 0) => Dir::W,
            (0, -1) => Dir::S,
            _ => panic!("not a unit step"),
        };
        DirectedDualEdge::new(DualVertex::new(a.0, a.1), dir)
    }

    #[test]
    fn duality_table() {
        let e = primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::new(0, 1), Dir::E));
        assert_eq!(e, de((0, 0), (0, 1)));
        let e = primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::new(0, 0), Dir::E));
        assert_eq!(e, de((0, -1), (0, 0)));
        let z = PrimalVertex::new(3, -2);
        assert_eq!(primal_to_dual(DirectedPrimalEdge::new(z, Dir::N)), de((3, -2), (2, -2)));
        assert_eq!(primal_to_dual(DirectedPrimalEdge::new(z, Dir::W)), de((2, -2), (2, -3)));
        assert_eq!(primal_to_dual(DirectedPrimalEdge::new(z, Dir::S)), de((2, -3), (3, -3)));
    }

    #[test]
    fn dual_to_primal_examples() {
        assert_eq!(
            dual_to_primal(de((0, 0), (0, 1))),
            DirectedPrimalEdge::new(PrimalVertex::new(0, 1), Dir::E)
        );
        assert_eq!(
            dual_to_primal(de((5, 2), (5, 3))),
            DirectedPrimalEdge::new(PrimalVertex::new(5, 3), Dir::E)
        );
    }

    #[test]
    fn bijection_on_ten_by_ten_window() {
        let mut images = HashSet::new();
        for x in 0..10 {
            for y in 0..10 {
                for d in Dir::ALL {
                    let e = DirectedPrimalEdge::new(PrimalVertex::new(x, y), d);
                    let f = primal_to_dual(e);
                    assert_eq!(dual_to_primal(f), e);
                    assert!(images.insert(f));
                    // Each dual edge crosses its primal edge at the shared midpoint.
                    let (hx, hy) = (f.tail.a + f.head().a + 1, f.tail.b + f.head().b + 1);
                    assert_eq!((hx, hy), (e.tail.x + e.head().x, e.tail.y + e.head().y));
                }
            }
        }
        assert_eq!(images.len(), 400);
    }

    #[test]
    fn images_around_a_vertex_form_a_ccw_cycle() {
        let z = PrimalVertex::new(0, 0);
        let cyc: Vec<_> = Dir::ALL
            .iter()
            .map(|&d| primal_to_dual(DirectedPrimalEdge::new(z, d)))
            .collect();
        for i in 0..4 {
            assert_eq!(cyc[i].head(), cyc[(i + 1) % 4].tail);
            assert_eq!(cyc[(i + 1) % 4].dir, cyc[i].dir.ccw());
        }
    }

    #[test]
    fn siblings_share_owner_and_cycle() {
        let e = primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::new(0, 0), Dir::E));
        let s = square_siblings(e);
        assert_eq!(s.north, primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::ORIGIN, Dir::N)));
        assert_eq!(s.west, primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::ORIGIN, Dir::W)));
        assert_eq!(s.south, primal_to_dual(DirectedPrimalEdge::new(PrimalVertex::ORIGIN, Dir::S)));
        let quad = [e, s.north, s.west, s.south];
        for (i, &q) in quad.iter().enumerate() {
            assert_eq!(q.owner(), PrimalVertex::ORIGIN);
            let t = square_siblings(q);
            assert_eq!(t.north, quad[(i + 1) % 4]);
            assert_eq!(t.west, quad[(i + 2) % 4]);
            assert_eq!(t.south, quad[(i + 3) % 4]);
        }
    }

    #[test]
    fn fill_examples() {
        let single: HashSet<_> = [(0, 0)].into();
        assert_eq!(fill(&single).unwrap(), single);
        let ring: HashSet<_> = (0..3)
            .flat_map(|x| (0..3).map(move |y| (x, y)))
            .filter(|&p| p != (1, 1))
            .collect();
        let full: HashSet<_> = (0..3).flat_map(|x| (0..3).map(move |y| (x, y))).collect();
        assert_eq!(fill(&ring).unwrap(), full);
        let tromino: HashSet<_> = [(0, 0), (1, 0), (0, 1)].into();
        assert_eq!(fill(&tromino).unwrap(), tromino);
        assert!(fill(&HashSet::new()).is_err());
    }

    #[test]
    fn winding_examples() {
        let l = winding_class(de((0, 1), (0, 0)), de((0, 0), (1, 0)), de((1, 0), (1, 1))).unwrap();
        assert_eq!(l, Winding::LeftWinding);
        let r = winding_class(de((1, 1), (1, 0)), de((1, 0), (0, 0)), de((0, 0), (0, 1))).unwrap();
        assert_eq!(r, Winding::RightWinding);
        let n = winding_class(de((0, 0), (1, 0)), de((1, 0), (2, 0)), de((2, 0), (3, 0))).unwrap();
        assert_eq!(n, Winding::Neither);
        assert!(winding_class(de((0, 0), (1, 0)), de((5, 0), (6, 0)), de((6, 0), (7, 0))).is_err());
    }

    #[test]
    fn winding_owner_characterisation() {
        // Exhaust every consecutive triple starting at the origin.
        for d1 in Dir::ALL {
            for d2 in Dir::ALL {
                for d3 in Dir::ALL {
                    let e1 = DirectedDualEdge::new(DualVertex::ORIGIN, d1);
                    let e2 = DirectedDualEdge::new(e1.head(), d2);
                    let e3 = DirectedDualEdge::new(e2.head(), d3);
                    let owners: HashSet<_> = [e1, e2, e3].iter().map(|e| e.owner()).collect();
                    match winding_class(e1, e2, e3).unwrap() {
                        Winding::LeftWinding => assert_eq!(owners.len(), 1),
                        Winding::RightWinding => assert_eq!(owners.len(), 3),
                        Winding::Neither => {}
                    }
                }
            }
        }
    }

    #[test]
    fn window_indexing_round_trips() {
        let w = Window::square(3, -1, 2);
        assert_eq!(w.len(), 25);
        for i in 0..w.len() {
            let (x, y) = w.point2(i);
            assert_eq!(w.index2(x, y), Some(i));
            assert_eq!(w.index(&[x, y]), Some(i));
        }
        assert!(w.on_boundary2(5, 0));
        assert!(!w.on_boundary2(4, 0));
        let c = Window::cube(3, 1).unwrap();
        assert_eq!(c.len(), 27);
        for i in 0..c.len() {
            assert_eq!(c.index(&c.point(i)[..3]), Some(i));
        }
    }
}
