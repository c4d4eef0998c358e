//! Monte Carlo experiments. Every trial is a pure function of the master
//! seed and the trial index (through [`trial_seed`]), trials run in parallel
//! and results are merged in trial order, so outputs do not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constrained::{pattern_free_search, sample_bond};
use crate::explore::{dual_forward_size, escapes, explore_dual_forward, SearchScratch};
use crate::lattice::{DualVertex, Window};
use crate::models::{param, to_f64, Environment, LazyField, ModelSpec, Param};
use crate::rng::trial_seed;
use crate::Error;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    pub trials: u64,
    pub seed: u64,
}

impl Estimate {
    /// Proportion with a Wilson score interval.
    pub fn proportion(successes: u64, trials: u64, seed: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let m = successes as f64 / n;
        let z2 = Z95 * Z95;
        let centre = (m + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = Z95 / (1.0 + z2 / n) * (m * (1.0 - m) / n + z2 / (4.0 * n * n)).sqrt();
        let lo = (centre - half).clamp(0.0, m);
        let hi = (centre + half).clamp(m, 1.0);
        Estimate { mean: m, stderr: (m * (1.0 - m) / n).sqrt(), ci95: [lo, hi], trials, seed }
    }

    /// Sample mean with a normal interval.
    pub fn mean_of(xs: &[f64], seed: u64) -> Self {
        assert!(!xs.is_empty());
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let se = (var / n).sqrt();
        Estimate { mean, stderr: se, ci95: [mean - Z95 * se, mean + Z95 * se], trials: xs.len() as u64, seed }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci95[1] - self.ci95[0]) / 2.0
    }

    /// The two 95% intervals do not overlap.
    pub fn separated_from(&self, other: &Estimate) -> bool {
        self.ci95[1] < other.ci95[0] || other.ci95[1] < self.ci95[0]
    }

    pub fn successes(&self) -> u64 {
        (self.mean * self.trials as f64).round() as u64
    }
}

pub(crate) fn par_trials<T: Send>(trials: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..trials).into_par_iter().map(f).collect()
}

pub(crate) fn par_trials_init<S, T: Send>(
    trials: u64,
    init: impl Fn() -> S + Sync + Send,
    f: impl Fn(&mut S, u64) -> T + Sync + Send,
) -> Vec<T> {
    (0..trials).into_par_iter().map_init(init, f).collect()
}

fn count(hits: &[bool]) -> u64 {
    hits.iter().filter(|&&h| h).count() as u64
}

fn need_trials(trials: u64) -> Result<(), Error> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

/// Fraction of trials in which the primal forward set of the origin reaches
/// `∂Λ_n`.
pub fn survival(spec: &ModelSpec, n: u32, trials: u64, seed: u64) -> Result<Estimate, Error> {
    Ok(Estimate::proportion(count(&survival_outcomes(spec, n, trials, seed)?), trials, seed))
}

/// Per-trial escape indicators behind [`survival`].
pub fn survival_outcomes(spec: &ModelSpec, n: u32, trials: u64, seed: u64) -> Result<Vec<bool>, Error> {
    spec.validate()?;
    need_trials(trials)?;
    let window = Window::cube(spec.dim(), n)?;
    let template = LazyField::new(*spec, 0)?;
    Ok(par_trials_init(
        trials,
        || (SearchScratch::new(&window), template.clone()),
        |(scratch, env), t| {
            env.seed = trial_seed(seed, t);
            escapes(env, &window, scratch)
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub n: usize,
    pub estimate: Estimate,
}

/// Empirical `P(|For(o*)| >= n)` for `n = 1..=n_max`, from the dual forward
/// set of the dual origin.
pub fn dual_tail(spec: &ModelSpec, n_max: usize, trials: u64, seed: u64) -> Result<Vec<TailPoint>, Error> {
    spec.validate()?;
    need_trials(trials)?;
    if spec.dim() != 2 {
        return Err(Error::Unsupported("dual forward sets are planar".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let template = LazyField::new(*spec, 0)?;
    let sizes = par_trials(trials, |t| {
        let mut env = template.clone();
        env.seed = trial_seed(seed, t);
        dual_forward_size(&env, DualVertex::ORIGIN, n_max)
    });
    Ok((1..=n_max)
        .map(|n| TailPoint { n, estimate: Estimate::proportion(sizes.iter().filter(|&&s| s >= n).count() as u64, trials, seed) })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    #[serde(with = "crate::models::ratio_str")]
    pub p: Param,
    pub survival: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcResult {
    pub lo: f64,
    pub hi: f64,
    pub n: u32,
    /// Survival level that defines the finite-size threshold.
    pub criterion: f64,
    pub trials: u64,
    pub tol: f64,
    pub seed: u64,
    pub probes: Vec<Probe>,
}

impl PcResult {
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.lo <= hi && lo <= self.hi
    }
}

/// Bisection on `p` over `[0, 1]` for the point where survival to `∂Λ_n`
/// crosses 1/2. See [`estimate_pc_in`].
pub fn estimate_pc(family: &ModelSpec, n: u32, trials: u64, tol: f64, seed: u64) -> Result<PcResult, Error> {
    estimate_pc_in(family, param(0, 1), param(1, 1), n, trials, tol, seed)
}

/// Bisection on `p` within `[lo, hi]`. Every probe reuses the same master
/// seed, so probes share their randomness and survival is monotone across
/// them for families with a monotone coupling.
pub fn estimate_pc_in(
    family: &ModelSpec,
    lo: Param,
    hi: Param,
    n: u32,
    trials: u64,
    tol: f64,
    seed: u64,
) -> Result<PcResult, Error> {
    need_trials(trials)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol={tol} must be positive")));
    }
    if lo >= hi {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    let at = |p: Param| -> Result<ModelSpec, Error> {
        let s = family.with_p(p).ok_or_else(|| Error::Unsupported(format!("{family} has no p parameter")))?;
        s.validate()?;
        Ok(s)
    };
    let criterion = 0.5;
    let mut probes = vec![];
    let mut probe = |p: Param| -> Result<f64, Error> {
        let est = survival(&at(p)?, n, trials, seed)?;
        let m = est.mean;
        probes.push(Probe { p, survival: est });
        Ok(m)
    };
    let (s_lo, s_hi) = (probe(lo)?, probe(hi)?);
    if !(s_lo < criterion && s_hi >= criterion) {
        return Err(Error::NonBracketing { lo: to_f64(lo), hi: to_f64(hi), s_lo, s_hi });
    }
    let (mut a, mut b) = (lo, hi);
    while to_f64(b - a) > tol {
        let mid = (a + b) / 2;
        if probe(mid)? < criterion {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(PcResult { lo: to_f64(a), hi: to_f64(b), n, criterion, trials, tol, seed, probes })
}

fn planar(spec: &ModelSpec, l: u32) -> Result<(), Error> {
    spec.validate()?;
    if spec.dim() != 2 {
        return Err(Error::Unsupported(format!("{spec} is not planar")));
    }
    if l < 2 {
        return Err(Error::InvalidParameter(format!("L={l} must be at least 2")));
    }
    Ok(())
}

/// Open directed path from `{x = 0}` to `{x = 3L}` inside `[0,3L]×[0,L]`.
pub fn crosses<E: Environment + ?Sized>(env: &E, l: u32) -> bool {
    let (w, h) = (3 * l as i32, l as i32);
    let idx = |x: i32, y: i32| (y * (w + 1) + x) as usize;
    let mut seen = vec![false; ((w + 1) * (h + 1)) as usize];
    let mut stack: Vec<(i32, i32)> = (0..=h).map(|y| (0, y)).collect();
    for &(x, y) in &stack {
        seen[idx(x, y)] = true;
    }
    while let Some((x, y)) = stack.pop() {
        let out = env.outcome2(x, y);
        for d in crate::lattice::Dir::ALL {
            if !out.has_dir(d) {
                continue;
            }
            let (u, v) = (x + d.delta().0, y + d.delta().1);
            if !(0..=w).contains(&u) || !(0..=h).contains(&v) || seen[idx(u, v)] {
                continue;
            }
            if u == w {
                return true;
            }
            seen[idx(u, v)] = true;
            stack.push((u, v));
        }
    }
    false
}

pub fn crossing(spec: &ModelSpec, l: u32, trials: u64, seed: u64) -> Result<Estimate, Error> {
    planar(spec, l)?;
    need_trials(trials)?;
    let template = LazyField::new(*spec, 0)?;
    let hits = par_trials(trials, |t| {
        let mut env = template.clone();
        env.seed = trial_seed(seed, t);
        crosses(&env, l)
    });
    Ok(Estimate::proportion(count(&hits), trials, seed))
}

/// Radii of the annulus `B(o, 3L/2) ∖ B(o, L/2)` as `(inner, outer)`: its
/// vertices satisfy `inner < |v|∞ <= outer`.
pub fn annulus_radii(l: u32) -> (i32, i32) {
    ((l / 2) as i32, (3 * l / 2) as i32)
}

/// Winding increment of the edge `u -> v` across the ray `{y = 1/2, x > 0}`.
fn ray_weight(u: (i32, i32), v: (i32, i32)) -> i32 {
    if u.0 > 0 && u.0 == v.0 {
        match (u.1, v.1) {
            (0, 1) => return 1,
            (1, 0) => return -1,
            _ => {}
        }
    }
    0
}

/// Does the annulus contain an open directed cycle winding around `o`?
///
/// Exact: a strongly connected component contains a cycle of non-zero
/// winding iff the winding weights admit no consistent potential on it, and
/// a closed walk of non-zero winding always contains a simple cycle of
/// winding ±1.
pub fn has_annulus_cycle<E: Environment + ?Sized>(env: &E, l: u32) -> bool {
    let (inner, outer) = annulus_radii(l);
    let side = 2 * outer + 1;
    let inside = |(x, y): (i32, i32)| {
        let r = x.abs().max(y.abs());
        r > inner && r <= outer
    };
    let idx = |(x, y): (i32, i32)| ((y + outer) * side + (x + outer)) as usize;
    let at = |i: usize| ((i as i32) % side - outer, (i as i32) / side - outer);
    let total = (side * side) as usize;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); total];
    for i in 0..total {
        let v = at(i);
        if !inside(v) {
            continue;
        }
        let out = env.outcome2(v.0, v.1);
        for d in crate::lattice::Dir::ALL {
            let w = (v.0 + d.delta().0, v.1 + d.delta().1);
            if out.has_dir(d) && inside(w) {
                succ[i].push(idx(w));
            }
        }
    }
    let comp = scc(&succ, |i| inside(at(i)));
    // Potentials per component, spread over intra-component edges both ways.
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (i, s) in succ.iter().enumerate() {
        for &j in s {
            if comp[i] == comp[j] {
                pred[j].push(i);
            }
        }
    }
    let mut phi: Vec<Option<i32>> = vec![None; total];
    for root in 0..total {
        if comp[root] == usize::MAX || phi[root].is_some() {
            continue;
        }
        phi[root] = Some(0);
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            let pu = phi[u].unwrap();
            let forward = succ[u].iter().filter(|&&v| comp[v] == comp[u]).map(|&v| (v, pu + ray_weight(at(u), at(v))));
            let backward = pred[u].iter().map(|&v| (v, pu - ray_weight(at(v), at(u))));
            for (v, want) in forward.chain(backward).collect::<Vec<_>>() {
                match phi[v] {
                    None => {
                        phi[v] = Some(want);
                        stack.push(v);
                    }
                    Some(have) if have != want => return true,
                    _ => {}
                }
            }
        }
    }
    false
}

/// Strongly connected components (iterative Tarjan). Vertices failing
/// `alive` get `usize::MAX`.
fn scc(succ: &[Vec<usize>], alive: impl Fn(usize) -> bool) -> Vec<usize> {
    let n = succ.len();
    const NONE: usize = usize::MAX;
    let mut index = vec![NONE; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![NONE; n];
    let mut stack = vec![];
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if !alive(root) || index[root] != NONE {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut k)) = call.last_mut() {
            if *k < succ[v].len() {
                let w = succ[v][*k];
                *k += 1;
                if index[w] == NONE {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Cheaper sufficient event: long-way crossings of the four `3L × L`
/// rectangles making up the annulus, all in one rotational sense. Crossings
/// of adjacent rectangles meet in the shared corner square and glue into a
/// cycle around `o`.
pub fn has_glued_cycle<E: Environment + ?Sized>(env: &E, l: u32) -> bool {
    let (inner, outer) = annulus_radii(l);
    let (a, b) = (inner + 1, outer);
    // Rectangles as (xmin, xmax, ymin, ymax) and counter-clockwise travel:
    // bottom eastwards, right northwards, top westwards, left southwards.
    let rects = [(-b, b, -b, -a), (a, b, -b, b), (-b, b, a, b), (-b, -a, -b, b)];
    let ccw = [(0u8, true), (1, true), (0, false), (1, false)];
    let cross = |r: (i32, i32, i32, i32), axis: u8, increasing: bool| -> bool {
        let (x0, x1, y0, y1) = r;
        let key = |(x, y): (i32, i32)| if axis == 0 { x } else { y };
        let (from, to) = if axis == 0 { (x0, x1) } else { (y0, y1) };
        let (start, goal) = if increasing { (from, to) } else { (to, from) };
        let w = (x1 - x0 + 1) as usize;
        let idx = |(x, y): (i32, i32)| (y - y0) as usize * w + (x - x0) as usize;
        let mut seen = vec![false; w * (y1 - y0 + 1) as usize];
        let mut stack = vec![];
        for y in y0..=y1 {
            for x in x0..=x1 {
                if key((x, y)) == start {
                    seen[idx((x, y))] = true;
                    stack.push((x, y));
                }
            }
        }
        while let Some(v) = stack.pop() {
            let out = env.outcome2(v.0, v.1);
            for d in crate::lattice::Dir::ALL {
                let u = (v.0 + d.delta().0, v.1 + d.delta().1);
                if !out.has_dir(d) || u.0 < x0 || u.0 > x1 || u.1 < y0 || u.1 > y1 || seen[idx(u)] {
                    continue;
                }
                if key(u) == goal {
                    return true;
                }
                seen[idx(u)] = true;
                stack.push(u);
            }
        }
        false
    };
    let all = |sense: bool| rects.iter().zip(ccw).all(|(&r, (axis, inc))| cross(r, axis, inc == sense));
    all(true) || all(false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusEstimate {
    pub exact: Estimate,
    /// Four-rectangle gluing event, a pathwise lower bound.
    pub glued: Estimate,
}

pub fn annulus_cycle(spec: &ModelSpec, l: u32, trials: u64, seed: u64) -> Result<AnnulusEstimate, Error> {
    planar(spec, l)?;
    need_trials(trials)?;
    let template = LazyField::new(*spec, 0)?;
    let hits = par_trials(trials, |t| {
        let mut env = template.clone();
        env.seed = trial_seed(seed, t);
        (has_annulus_cycle(&env, l), has_glued_cycle(&env, l))
    });
    let exact = hits.iter().filter(|h| h.0).count() as u64;
    let glued = hits.iter().filter(|h| h.1).count() as u64;
    Ok(AnnulusEstimate { exact: Estimate::proportion(exact, trials, seed), glued: Estimate::proportion(glued, trials, seed) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub name: String,
    pub spec: ModelSpec,
    pub estimate: Estimate,
}

/// The five degree-two-on-average models at marginal 1/2.
pub fn comparison_specs() -> Vec<(&'static str, ModelSpec)> {
    let h = param(1, 2);
    vec![
        ("ns-ew", ModelSpec::NsEw { p: h }),
        ("2-neighbor", ModelSpec::TwoEps { eps: param(0, 1) }),
        ("corner", ModelSpec::Corner { p: h }),
        ("iid", ModelSpec::IidDirected { p: h }),
        ("all-or-none", ModelSpec::AllOrNone { p: h }),
    ]
}

pub fn theta_comparison(n: u32, trials: u64, seed: u64) -> Result<Vec<ModelRow>, Error> {
    comparison_specs()
        .into_iter()
        .map(|(name, spec)| Ok(ModelRow { name: name.into(), spec, estimate: survival(&spec, n, trials, seed)? }))
        .collect()
}

pub fn theta_vs_rho(rhos: &[Param], n: u32, trials: u64, seed: u64) -> Result<Vec<ModelRow>, Error> {
    rhos.iter()
        .map(|&rho| {
            let spec = ModelSpec::IsotropicDegreeTwo { rho };
            Ok(ModelRow { name: format!("rho={rho}"), spec, estimate: survival(&spec, n, trials, seed)? })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterTailPoint {
    pub n: usize,
    /// `P(|Cl_1| >= n)`, counting vertices.
    pub size: Estimate,
    /// `P(Cl_1 leaves x* + Λ_{n-1})`, i.e. some vertex at sup-distance `n`.
    pub reach: Estimate,
}

/// Tails of the first visited cluster `Cl_1` of the dual exploration from
/// the dual origin, by vertex count and by sup-distance reached.
pub fn first_cluster_tail(spec: &ModelSpec, ns: &[usize], trials: u64, seed: u64) -> Result<Vec<ClusterTailPoint>, Error> {
    planar(spec, 2)?;
    need_trials(trials)?;
    let max = ns.iter().copied().max().unwrap_or(1);
    // A run that leaves the window before its first pivotal reveal already
    // has a first cluster of more than `max` vertices reaching distance `max + 1`.
    let window = Window::square(0, 0, max as u32 + 1);
    let template = LazyField::new(*spec, 0)?;
    let got: Vec<(usize, usize)> = par_trials(trials, |t| {
        let mut env = template.clone();
        env.seed = trial_seed(seed, t);
        let rec = explore_dual_forward(&env, spec, DualVertex::ORIGIN, window).expect("origin is interior");
        let first = rec.clusters.first().map_or(&[][..], Vec::as_slice);
        let reach = first.iter().map(|v| v.a.abs().max(v.b.abs()) as usize).max().unwrap_or(0);
        (first.len(), reach)
    });
    Ok(ns
        .iter()
        .map(|&n| {
            let size = got.iter().filter(|g| g.0 >= n).count() as u64;
            let reach = got.iter().filter(|g| g.1 >= n).count() as u64;
            ClusterTailPoint { n, size: Estimate::proportion(size, trials, seed), reach: Estimate::proportion(reach, trials, seed) }
        })
        .collect())
}

/// Probability that the origin reaches `∂Λ_n` in Bernoulli(q) bond
/// percolation along a path avoiding forbidden trails.
pub fn constrained_survival(q: f64, n: u32, trials: u64, seed: u64) -> Result<Estimate, Error> {
    need_trials(trials)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("q={q} outside [0,1]")));
    }
    let window = Window::square(0, 0, n);
    let hits = par_trials(trials, |t| {
        let c = sample_bond(q, window, trial_seed(seed, t));
        pattern_free_search((0, 0), n, |e| c.is_open(e), |_, _| {}, false).is_some()
    });
    Ok(Estimate::proportion(count(&hits), trials, seed))
}
