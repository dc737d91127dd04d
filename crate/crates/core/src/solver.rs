//! Exact perfect matching, rainbow matching, counting and maximum matching.
//!
//! Every search works on a list of "live" edges (edges disjoint from what is
//! already covered) that shrinks as the recursion descends. Perfect matching
//! search branches on the uncovered vertex with the fewest live edges and
//! prunes as soon as some uncovered vertex has none.

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::transform::{build_rainbow_graph, ColoredGraph, Matching, RainbowFamily, RainbowMatching};
use crate::verify;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

/// Node budget used when neither the caller nor `RAINBOW_MATCH_BUDGET` sets one.
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

/// Environment variable overriding the default node budget.
pub const BUDGET_ENV: &str = "RAINBOW_MATCH_BUDGET";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Found,
    /// Exhaustive proof that no perfect matching exists.
    None,
    Timeout,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOutcome<W = Matching> {
    pub status: Status,
    pub matching: Option<W>,
    pub nodes_explored: u64,
    pub elapsed: Duration,
}

impl<W> SolveOutcome<W> {
    pub fn is_found(&self) -> bool {
        self.status == Status::Found
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub budget: u64,
    /// Fail-first vertex choice; off means lowest uncovered vertex.
    pub heuristic: bool,
    /// Explore top-level branches in parallel; may return another witness.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_NODE_BUDGET,
            heuristic: true,
            parallel: false,
        }
    }
}

impl SolverConfig {
    pub fn with_budget(budget: u64) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    /// Default config with the budget taken from `RAINBOW_MATCH_BUDGET` if set.
    pub fn from_env() -> Self {
        let budget = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_NODE_BUDGET);
        Self::with_budget(budget)
    }
}

pub(crate) trait VertexMask: Clone + Send + Sync {
    fn empty(n: usize) -> Self;
    fn of(vertices: &[usize], n: usize) -> Self;
    fn intersects(&self, other: &Self) -> bool;
    fn insert_all(&mut self, other: &Self);
    fn contains(&self, v: usize) -> bool;
}

impl VertexMask for u64 {
    fn empty(_: usize) -> Self {
        0
    }

    fn of(vertices: &[usize], _: usize) -> Self {
        crate::hypergraph::mask_of(vertices)
    }

    fn intersects(&self, other: &Self) -> bool {
        self & other != 0
    }

    fn insert_all(&mut self, other: &Self) {
        *self |= other;
    }

    fn contains(&self, v: usize) -> bool {
        self >> v & 1 == 1
    }
}

/// Multi-word mask for graphs with more than 64 vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct WideMask(Box<[u64]>);

impl VertexMask for WideMask {
    fn empty(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)].into_boxed_slice())
    }

    fn of(vertices: &[usize], n: usize) -> Self {
        let mut m = Self::empty(n);
        for &v in vertices {
            m.0[v / 64] |= 1 << (v % 64);
        }
        m
    }

    fn intersects(&self, other: &Self) -> bool {
        self.0.iter().zip(other.0.iter()).any(|(a, b)| a & b != 0)
    }

    fn insert_all(&mut self, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a |= b;
        }
    }

    fn contains(&self, v: usize) -> bool {
        self.0[v / 64] >> (v % 64) & 1 == 1
    }
}

fn edge_masks<M: VertexMask>(h: &Hypergraph) -> Vec<M> {
    h.edges().map(|e| M::of(e, h.n())).collect()
}

enum Step {
    Done,
    Exhausted,
    OutOfBudget,
}

struct Shared<'a> {
    nodes: &'a AtomicU64,
    stop: &'a AtomicBool,
    budget: u64,
}

impl Shared<'_> {
    /// Counts a node; `false` when the search must stop.
    fn tick(&self) -> Option<bool> {
        if self.stop.load(Ordering::Relaxed) {
            return Some(false);
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return None;
        }
        Some(true)
    }
}

struct PmSearch<'a, M> {
    h: &'a Hypergraph,
    masks: Vec<M>,
    heuristic: bool,
}

impl<'a, M: VertexMask> PmSearch<'a, M> {
    fn new(h: &'a Hypergraph, heuristic: bool) -> Self {
        Self {
            h,
            masks: edge_masks(h),
            heuristic,
        }
    }

    /// The vertex to branch on, or `None` when some uncovered vertex is dead.
    /// `Some(None)` means everything is covered.
    fn pivot(&self, live: &[usize], covered: &M) -> Option<Option<usize>> {
        let n = self.h.n();
        let mut counts = vec![0u32; n];
        for &e in live {
            for &v in self.h.edge(e) {
                counts[v] += 1;
            }
        }
        let mut best: Option<(u32, usize)> = None;
        for v in (0..n).filter(|&v| !covered.contains(v)) {
            let c = counts[v];
            if c == 0 {
                return None;
            }
            if !self.heuristic {
                return Some(Some(v));
            }
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, v));
            }
        }
        Some(best.map(|(_, v)| v))
    }

    fn branches(&self, live: &[usize], pivot: usize) -> Vec<usize> {
        live.iter()
            .copied()
            .filter(|&e| self.h.edge(e).contains(&pivot))
            .collect()
    }

    fn shrink(&self, live: &[usize], chosen: usize) -> Vec<usize> {
        let m = &self.masks[chosen];
        live.iter().copied().filter(|&f| !self.masks[f].intersects(m)).collect()
    }

    fn extend(&self, covered: &M, chosen: usize) -> M {
        let mut next = covered.clone();
        next.insert_all(&self.masks[chosen]);
        next
    }

    fn find(&self, live: &[usize], covered: &M, path: &mut Vec<usize>, shared: &Shared<'_>) -> Step {
        match shared.tick() {
            None => return Step::OutOfBudget,
            Some(false) => return Step::Exhausted,
            Some(true) => {}
        }
        let pivot = match self.pivot(live, covered) {
            None => return Step::Exhausted,
            Some(None) => return Step::Done,
            Some(Some(v)) => v,
        };
        let mut timed_out = false;
        for e in self.branches(live, pivot) {
            path.push(e);
            match self.find(&self.shrink(live, e), &self.extend(covered, e), path, shared) {
                Step::Done => return Step::Done,
                Step::OutOfBudget => timed_out = true,
                Step::Exhausted => {}
            }
            path.pop();
            if timed_out {
                return Step::OutOfBudget;
            }
        }
        Step::Exhausted
    }

    fn count(&self, live: &[usize], covered: &M, shared: &Shared<'_>) -> Option<u128> {
        shared.tick()?;
        let pivot = match self.pivot(live, covered) {
            None => return Some(0),
            Some(None) => return Some(1),
            Some(Some(v)) => v,
        };
        let mut total = 0u128;
        for e in self.branches(live, pivot) {
            total += self.count(&self.shrink(live, e), &self.extend(covered, e), shared)?;
        }
        Some(total)
    }
}

fn solve_pm<M: VertexMask>(h: &Hypergraph, config: &SolverConfig) -> (Status, Option<Matching>, u64) {
    let search = PmSearch::<M>::new(h, config.heuristic);
    let nodes = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let shared = Shared {
        nodes: &nodes,
        stop: &stop,
        budget: config.budget,
    };
    let all: Vec<usize> = (0..h.edge_count()).collect();
    let root = M::empty(h.n());
    let to_matching = |path: &[usize]| Matching::new(path.iter().map(|&e| h.edge(e).to_vec()));

    if !config.parallel {
        let mut path = Vec::new();
        let status = match search.find(&all, &root, &mut path, &shared) {
            Step::Done => Status::Found,
            Step::Exhausted => Status::None,
            Step::OutOfBudget => Status::Timeout,
        };
        let witness = (status == Status::Found).then(|| to_matching(&path));
        return (status, witness, nodes.load(Ordering::Relaxed));
    }

    // parallel: split on the root pivot, first finisher raises `stop`
    if !shared.tick().unwrap_or(false) {
        return (Status::Timeout, None, nodes.load(Ordering::Relaxed));
    }
    let pivot = match search.pivot(&all, &root) {
        None => return (Status::None, None, nodes.load(Ordering::Relaxed)),
        Some(None) => return (Status::Found, Some(Matching::default()), nodes.load(Ordering::Relaxed)),
        Some(Some(v)) => v,
    };
    let results: Vec<(Step, Vec<usize>)> = search
        .branches(&all, pivot)
        .into_par_iter()
        .map(|e| {
            let mut path = vec![e];
            let step = search.find(&search.shrink(&all, e), &search.extend(&root, e), &mut path, &shared);
            if matches!(step, Step::Done) {
                stop.store(true, Ordering::Relaxed);
            }
            (step, path)
        })
        .collect();
    let nodes = nodes.load(Ordering::Relaxed);
    if let Some((_, path)) = results.iter().find(|(s, _)| matches!(s, Step::Done)) {
        return (Status::Found, Some(to_matching(path)), nodes);
    }
    if results.iter().any(|(s, _)| matches!(s, Step::OutOfBudget)) {
        return (Status::Timeout, None, nodes);
    }
    (Status::None, None, nodes)
}

/// Decides whether `h` has a perfect matching. A `Found` witness has been
/// re-checked by the independent verifier.
pub fn find_perfect_matching(h: &Hypergraph, config: &SolverConfig) -> SolveOutcome {
    let start = Instant::now();
    if !h.n().is_multiple_of(h.k()) {
        return SolveOutcome {
            status: Status::None,
            matching: None,
            nodes_explored: 0,
            elapsed: start.elapsed(),
        };
    }
    let (status, matching, nodes) = if h.n() <= 64 {
        solve_pm::<u64>(h, config)
    } else {
        solve_pm::<WideMask>(h, config)
    };
    if let Some(m) = &matching {
        verify::perfect_matching(h, m).expect("solver returned an invalid perfect matching");
    }
    SolveOutcome {
        status,
        matching,
        nodes_explored: nodes,
        elapsed: start.elapsed(),
    }
}

/// Perfect matching of a (1,k)-graph, in embedded labels.
pub fn find_perfect_matching_colored(graph: &ColoredGraph, config: &SolverConfig) -> SolveOutcome {
    find_perfect_matching(graph.as_hypergraph(), config)
}

/// Number of perfect matchings by exhaustive enumeration.
pub fn count_perfect_matchings(h: &Hypergraph, config: &SolverConfig) -> Result<u128> {
    if !h.n().is_multiple_of(h.k()) {
        return Ok(0);
    }
    fn run<M: VertexMask>(h: &Hypergraph, config: &SolverConfig) -> Option<u128> {
        let search = PmSearch::<M>::new(h, config.heuristic);
        let nodes = AtomicU64::new(0);
        let stop = AtomicBool::new(false);
        let shared = Shared {
            nodes: &nodes,
            stop: &stop,
            budget: config.budget,
        };
        let all: Vec<usize> = (0..h.edge_count()).collect();
        search.count(&all, &M::empty(h.n()), &shared)
    }
    let counted = if h.n() <= 64 { run::<u64>(h, config) } else { run::<WideMask>(h, config) };
    counted.ok_or_else(|| Error::Resource {
        what: "perfect matching count".into(),
        partial: format!("node budget {} exhausted", config.budget),
    })
}

struct MaxSearch<'a, M> {
    h: &'a Hypergraph,
    masks: Vec<M>,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl<M: VertexMask> MaxSearch<'_, M> {
    fn run(&mut self, live: &[usize], path: &mut Vec<usize>) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if path.len() > self.best.len() {
            self.best = path.clone();
        }
        if live.is_empty() {
            return true;
        }
        let mut touched = vec![false; self.h.n()];
        for &e in live {
            for &v in self.h.edge(e) {
                touched[v] = true;
            }
        }
        let reachable = touched.iter().filter(|t| **t).count() / self.h.k();
        if path.len() + reachable.min(live.len()) <= self.best.len() {
            return true;
        }
        // live is sorted, so the first edge holds the smallest live vertex
        let pivot = self.h.edge(live[0])[0];
        let with: Vec<usize> = live.iter().copied().filter(|&e| self.h.edge(e).contains(&pivot)).collect();
        for e in with {
            let m = self.masks[e].clone();
            let next: Vec<usize> = live.iter().copied().filter(|&f| !self.masks[f].intersects(&m)).collect();
            path.push(e);
            let ok = self.run(&next, path);
            path.pop();
            if !ok {
                return false;
            }
        }
        let without: Vec<usize> = live.iter().copied().filter(|&e| !self.h.edge(e).contains(&pivot)).collect();
        self.run(&without, path)
    }
}

/// A maximum matching by branch and bound.
pub fn max_matching(h: &Hypergraph, config: &SolverConfig) -> Result<Matching> {
    fn run<M: VertexMask>(h: &Hypergraph, budget: u64) -> (bool, Vec<usize>) {
        let mut search = MaxSearch::<M> {
            h,
            masks: edge_masks(h),
            best: Vec::new(),
            nodes: 0,
            budget,
        };
        let all: Vec<usize> = (0..h.edge_count()).collect();
        let complete = search.run(&all, &mut Vec::new());
        (complete, search.best)
    }
    let (complete, best) = if h.n() <= 64 {
        run::<u64>(h, config.budget)
    } else {
        run::<WideMask>(h, config.budget)
    };
    if !complete {
        return Err(Error::Resource {
            what: "maximum matching".into(),
            partial: format!("lower bound {}", best.len()),
        });
    }
    Ok(Matching::new(best.iter().map(|&e| h.edge(e).to_vec())))
}

pub fn max_matching_size(h: &Hypergraph, config: &SolverConfig) -> Result<usize> {
    max_matching(h, config).map(|m| m.len())
}

struct RainbowSearch<'a, M> {
    family: &'a RainbowFamily,
    masks: Vec<Vec<M>>,
    heuristic: bool,
}

impl<M: VertexMask> RainbowSearch<'_, M> {
    /// `live[c]` holds the live edges of layer `c`, or is `None` once used.
    fn find(&self, live: &[Option<Vec<usize>>], covered: &M, chosen: &mut [usize], shared: &Shared<'_>) -> Step {
        match shared.tick() {
            None => return Step::OutOfBudget,
            Some(false) => return Step::Exhausted,
            Some(true) => {}
        }
        let open: Vec<usize> = (0..live.len()).filter(|&c| live[c].is_some()).collect();
        if open.is_empty() {
            return Step::Done;
        }
        // every uncovered vertex must still be reachable by some open layer
        let n = self.family.n();
        let mut reach = M::empty(n);
        for &c in &open {
            for &e in live[c].as_ref().unwrap() {
                reach.insert_all(&self.masks[c][e]);
            }
        }
        if (0..n).any(|v| !covered.contains(v) && !reach.contains(v)) {
            return Step::Exhausted;
        }
        let layer = if self.heuristic {
            *open.iter().min_by_key(|&&c| live[c].as_ref().unwrap().len()).unwrap()
        } else {
            open[0]
        };
        let candidates = live[layer].as_ref().unwrap();
        if candidates.is_empty() {
            return Step::Exhausted;
        }
        for &e in candidates {
            let m = &self.masks[layer][e];
            let next: Vec<Option<Vec<usize>>> = live
                .iter()
                .enumerate()
                .map(|(c, l)| {
                    if c == layer {
                        None
                    } else {
                        l.as_ref()
                            .map(|l| l.iter().copied().filter(|&f| !self.masks[c][f].intersects(m)).collect())
                    }
                })
                .collect();
            let mut cov = covered.clone();
            cov.insert_all(m);
            chosen[layer] = e;
            match self.find(&next, &cov, chosen, shared) {
                Step::Done => return Step::Done,
                Step::OutOfBudget => return Step::OutOfBudget,
                Step::Exhausted => {}
            }
        }
        Step::Exhausted
    }
}

/// Direct rainbow search: branches on the open layer with the fewest live
/// edges instead of going through `T(F)`.
pub fn find_rainbow_pm(family: &RainbowFamily, config: &SolverConfig) -> SolveOutcome<RainbowMatching> {
    fn run<M: VertexMask>(family: &RainbowFamily, config: &SolverConfig) -> (Status, Option<RainbowMatching>, u64) {
        let search = RainbowSearch::<M> {
            family,
            masks: family.layers().iter().map(edge_masks).collect(),
            heuristic: config.heuristic,
        };
        let nodes = AtomicU64::new(0);
        let stop = AtomicBool::new(false);
        let shared = Shared {
            nodes: &nodes,
            stop: &stop,
            budget: config.budget,
        };
        let live: Vec<Option<Vec<usize>>> = family
            .layers()
            .iter()
            .map(|l| Some((0..l.edge_count()).collect()))
            .collect();
        let mut chosen = vec![0; family.m()];
        let step = search.find(&live, &M::empty(family.n()), &mut chosen, &shared);
        let nodes = nodes.load(Ordering::Relaxed);
        match step {
            Step::Done => {
                let edges = chosen
                    .iter()
                    .zip(family.layers())
                    .map(|(&e, layer)| layer.edge(e).to_vec())
                    .collect();
                (Status::Found, Some(RainbowMatching { edges }), nodes)
            }
            Step::Exhausted => (Status::None, None, nodes),
            Step::OutOfBudget => (Status::Timeout, None, nodes),
        }
    }
    let start = Instant::now();
    let (status, matching, nodes) = if family.n() <= 64 {
        run::<u64>(family, config)
    } else {
        run::<WideMask>(family, config)
    };
    if let Some(r) = &matching {
        verify::rainbow_perfect_matching(family, r).expect("solver returned an invalid rainbow matching");
    }
    SolveOutcome {
        status,
        matching,
        nodes_explored: nodes,
        elapsed: start.elapsed(),
    }
}

/// Rainbow search through the reduction: `PM(T(F))` mapped back to layers.
pub fn find_rainbow_pm_via_reduction(family: &RainbowFamily, config: &SolverConfig) -> SolveOutcome<RainbowMatching> {
    let t = build_rainbow_graph(family);
    let outcome = find_perfect_matching_colored(&t, config);
    SolveOutcome {
        status: outcome.status,
        matching: outcome
            .matching
            .map(|m| crate::transform::rainbow_of_pm(&t, &m).expect("verified perfect matching")),
        nodes_explored: outcome.nodes_explored,
        elapsed: outcome.elapsed,
    }
}
