//! Constructive solver for families whose `(1,k)`-graph is close to
//! `T_ext`: cover the bad vertices with a parity-repairing matching, split
//! the rest into two complete-like `(k+1)`-partite pieces plus one or two
//! leftover edges, and solve the pieces exactly.

use crate::absorbing::PipelineStatus;
use crate::closeness::{check_parity, closeness_to_ext, good_vertices, ranked_witnesses, SearchMode, MAX_EXACT_N};
use crate::error::{contract, Error, Result};
use crate::extremal::VertexPartition;
use crate::hypergraph::Hypergraph;
use crate::solver::{find_perfect_matching, find_rainbow_pm, SolverConfig, Status};
use crate::transform::{build_rainbow_graph, rainbow_of_pm, ColoredGraph, Matching, RainbowFamily, RainbowMatching};
use crate::verify;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremalPhase {
    Closeness,
    BadVertices,
    Plan,
    Subproblem,
    Verify,
    Fallback,
}

impl ExtremalPhase {
    pub fn name(self) -> &'static str {
        match self {
            ExtremalPhase::Closeness => "closeness",
            ExtremalPhase::BadVertices => "bad-vertices",
            ExtremalPhase::Plan => "plan",
            ExtremalPhase::Subproblem => "subproblem",
            ExtremalPhase::Verify => "verify",
            ExtremalPhase::Fallback => "fallback",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalParams {
    /// Closeness the caller vouches for; the measured value must not exceed it.
    pub epsilon: f64,
    /// Run the exact solver when every witness fails and `n <= fallback_n`.
    pub fallback_n: usize,
    /// Largest bad set accepted; `None` means `n / (4(k+1))`.
    pub max_bad: Option<usize>,
    /// Node cap for the bad-vertex repair search.
    pub repair_cap: u64,
    /// Witness partitions tried, best first.
    pub witness_limit: usize,
    /// Leftover edge choices tried per `r`.
    pub leftover_limit: usize,
    /// Group assignments tried per leftover choice.
    pub assign_attempts: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for ExtremalParams {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            fallback_n: 0,
            max_bad: None,
            repair_cap: 100_000,
            witness_limit: 8,
            leftover_limit: 64,
            assign_attempts: 16,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

impl ExtremalParams {
    pub fn bad_cap(&self, n: usize, k: usize) -> usize {
        self.max_bad.unwrap_or(n / (4 * (k + 1)))
    }
}

/// A matching covering every vertex of `u` exactly once, with `E ∩ U = {v}`
/// for the edge `E` picked for `v`, plus at most one extra edge so that the
/// residual satisfies `i |X'| ≡ |A'| (mod 2)`. `None` when no choice of edges
/// within `node_cap` search nodes works.
pub fn remove_bad_vertices(t: &ColoredGraph, u: &[usize], witness: &VertexPartition, max_bad: usize, node_cap: u64) -> Result<Option<Matching>> {
    let mut u = u.to_vec();
    u.sort_unstable();
    u.dedup();
    if let Some(&v) = u.iter().find(|&&v| v >= t.vertex_count()) {
        return Err(Error::VertexOutOfRange {
            vertex: v,
            n: t.vertex_count(),
        });
    }
    if u.len() > max_bad {
        return Err(contract(format!("{} bad vertices exceed the cap of {max_bad}", u.len())));
    }
    let mut search = Repair {
        t,
        witness,
        in_u: {
            let mut mask = vec![false; t.vertex_count()];
            for &v in &u {
                mask[v] = true;
            }
            mask
        },
        u: &u,
        used: vec![false; t.vertex_count()],
        chosen: Vec::new(),
        nodes: 0,
        cap: node_cap,
    };
    Ok(search.run(0).then(|| Matching::new(search.chosen)))
}

struct Repair<'a> {
    t: &'a ColoredGraph,
    witness: &'a VertexPartition,
    u: &'a [usize],
    in_u: Vec<bool>,
    used: Vec<bool>,
    chosen: Vec<Vec<usize>>,
    nodes: u64,
    cap: u64,
}

impl Repair<'_> {
    fn a_count(&self, e: &[usize]) -> usize {
        e.iter().filter(|&&v| v < self.t.n() && self.witness.a.contains(v)).count()
    }

    fn residual_parity(&self) -> bool {
        let covered_a: usize = self.chosen.iter().map(|e| self.a_count(e)).sum();
        check_parity(self.witness.a.len() - covered_a, self.t.m() - self.chosen.len(), self.witness.parity)
    }

    fn take(&mut self, e: Vec<usize>) {
        for &v in &e {
            self.used[v] = true;
        }
        self.chosen.push(e);
    }

    fn drop_last(&mut self) {
        for v in self.chosen.pop().expect("non-empty") {
            self.used[v] = false;
        }
    }

    fn run(&mut self, depth: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.cap {
            return false;
        }
        let h = self.t.as_hypergraph();
        if depth == self.u.len() {
            if self.residual_parity() {
                return true;
            }
            // one edge with |E ∩ A| ≡ i + 1 flips the residual parity
            let want = (self.witness.parity as usize + 1) % 2;
            let fix = h
                .edges()
                .find(|e| e.iter().all(|&v| !self.used[v] && !self.in_u[v]) && self.a_count(e) % 2 == want);
            if let Some(e) = fix {
                self.take(e.to_vec());
                return true;
            }
            return false;
        }
        let v = self.u[depth];
        let candidates: Vec<usize> = h
            .incident(v)
            .iter()
            .copied()
            .filter(|&i| h.edge(i).iter().all(|&w| w == v || (!self.used[w] && !self.in_u[w])))
            .collect();
        for i in candidates {
            self.take(h.edge(i).to_vec());
            if self.run(depth + 1) {
                return true;
            }
            self.drop_last();
            if self.nodes > self.cap {
                return false;
            }
        }
        false
    }
}

/// Split of the residual `X' ∪ V'` into `Y_1 ∪ T_1 ∪ … ∪ T_k`,
/// `Y_2 ∪ S_1 ∪ … ∪ S_k` and the leftover edges covering `Y_3 ∪ E`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub case: u8,
    pub r: usize,
    /// Remainder in the case's size equation for `|A'|` (`|B'|` in case 4).
    pub s: i64,
    pub y1: Vec<usize>,
    pub y2: Vec<usize>,
    pub y3: Vec<usize>,
    pub t_parts: Vec<Vec<usize>>,
    pub s_parts: Vec<Vec<usize>>,
    pub leftover: Vec<Vec<usize>>,
}

impl PartitionPlan {
    /// Sizes of `Y_2` and each `S_j`.
    pub fn q(&self) -> usize {
        self.y2.len()
    }

    /// Checks that the groups partition `residual` and have the planned sizes.
    pub fn validate(&self, t: &ColoredGraph, residual: &[usize]) -> Result<()> {
        let k = t.k();
        let mut all: Vec<usize> = self
            .y1
            .iter()
            .chain(&self.y2)
            .chain(self.t_parts.iter().flatten())
            .chain(self.s_parts.iter().flatten())
            .chain(self.leftover.iter().flatten())
            .copied()
            .collect();
        all.sort_unstable();
        if all != residual {
            return Err(contract("plan groups do not partition the residual vertex set"));
        }
        let q = self.q();
        let sizes_ok = self.y1.len() == self.r
            && self.t_parts.len() == k
            && self.s_parts.len() == k
            && self.t_parts.iter().all(|p| p.len() == self.r)
            && self.s_parts.iter().all(|p| p.len() == q)
            && self.y1.iter().chain(&self.y2).all(|&v| t.is_color_vertex(v))
            && self.t_parts.iter().chain(&self.s_parts).flatten().all(|&v| !t.is_color_vertex(v));
        if !sizes_ok {
            return Err(contract(format!("plan group sizes break the case {} equations", self.case)));
        }
        let mut y3: Vec<usize> = self.leftover.iter().flatten().copied().filter(|&v| t.is_color_vertex(v)).collect();
        y3.sort_unstable();
        if y3 != self.y3 || self.leftover.iter().any(|e| !t.as_hypergraph().contains_edge(e)) {
            return Err(contract("leftover edges must be edges of T covering exactly Y_3"));
        }
        Ok(())
    }

    /// Samples edges of the two complete `(k+1)`-partite templates and counts
    /// those outside `T_ext` for `witness`.
    pub fn template_violations<R: Rng + ?Sized>(&self, witness: &VertexPartition, samples: usize, rng: &mut R) -> usize {
        let mut bad = 0;
        for (colors, parts) in [(&self.y1, &self.t_parts), (&self.y2, &self.s_parts)] {
            if colors.is_empty() {
                continue;
            }
            for _ in 0..samples {
                let base: Vec<usize> = parts.iter().map(|p| *p.choose(rng).expect("parts match Y")).collect();
                if !witness.admits(&base) {
                    bad += 1;
                }
            }
        }
        bad
    }
}

/// Which side each part draws from, in a frame where case 4 has `A'` and
/// `B'` exchanged.
struct Frame {
    case: u8,
    a_side: Vec<usize>,
    b_side: Vec<usize>,
    /// `true` when the part lies in the frame's `A` side.
    t_in_a: Vec<bool>,
    s_in_a: Vec<bool>,
    leftover_edges: usize,
}

fn frame(k: usize, parity: u8, a_res: Vec<usize>, b_res: Vec<usize>) -> Frame {
    let all = |x: bool| vec![x; k];
    let last_flipped = |x: bool| {
        let mut v = vec![x; k];
        v[k - 1] = !x;
        v
    };
    match (parity, k.is_multiple_of(2)) {
        (0, true) => Frame {
            case: 1,
            a_side: a_res,
            b_side: b_res,
            t_in_a: all(true),
            s_in_a: all(false),
            leftover_edges: 1,
        },
        (0, false) => Frame {
            case: 2,
            a_side: a_res,
            b_side: b_res,
            t_in_a: last_flipped(true),
            s_in_a: all(false),
            leftover_edges: 1,
        },
        (_, true) => Frame {
            case: 3,
            a_side: a_res,
            b_side: b_res,
            t_in_a: last_flipped(true),
            s_in_a: last_flipped(false),
            leftover_edges: 2,
        },
        (_, false) => Frame {
            case: 4,
            a_side: b_res,
            b_side: a_res,
            t_in_a: last_flipped(true),
            s_in_a: all(false),
            leftover_edges: 1,
        },
    }
}

impl Frame {
    /// `(q, |A ∩ E|, s)` for a given `r`, if the size equations allow it.
    fn sizes(&self, n1_over_k: usize, k: usize, r: usize) -> Option<(usize, usize, i64)> {
        let q = n1_over_k.checked_sub(r + self.leftover_edges)?;
        let t_a = self.t_in_a.iter().filter(|x| **x).count();
        let s_a = self.s_in_a.iter().filter(|x| **x).count();
        let in_a = self.a_side.len() as i64 - (t_a * r + s_a * q) as i64;
        if in_a < 0 || in_a > (self.leftover_edges * k) as i64 {
            return None;
        }
        let s = match self.case {
            1 => self.a_side.len() as i64 - (r * k) as i64,
            3 => self.a_side.len() as i64 - n1_over_k as i64 - (r * (k - 2)) as i64,
            _ => self.a_side.len() as i64 - (r * (k - 1)) as i64,
        };
        Some((q, in_a as usize, s))
    }

    /// The natural `r`, followed by the others by distance to it.
    fn r_order(&self, n1_over_k: usize, k: usize) -> Vec<usize> {
        let a = self.a_side.len();
        let natural = match self.case {
            1 => a / k,
            3 => a.saturating_sub(n1_over_k) / (k - 2).max(1),
            _ => a / (k - 1).max(1),
        };
        let mut rs: Vec<usize> = (0..=n1_over_k).collect();
        rs.sort_by_key(|&r| (r.abs_diff(natural), r));
        rs
    }
}

/// Leftover edge sets inside the residual meeting the frame's `A` side in
/// exactly `in_a` vertices, lexicographic, first `limit` of them.
fn leftover_choices(t: &ColoredGraph, in_residual: &[bool], in_a: &[bool], edges: usize, target: usize, limit: usize) -> Vec<Vec<Vec<usize>>> {
    let h = t.as_hypergraph();
    let inside: Vec<(&[usize], usize)> = h
        .edges()
        .filter(|e| e.iter().all(|&v| in_residual[v]))
        .map(|e| (e, e.iter().filter(|&&v| in_a[v]).count()))
        .collect();
    if edges == 1 {
        return inside
            .iter()
            .filter(|(_, c)| *c == target)
            .take(limit)
            .map(|(e, _)| vec![e.to_vec()])
            .collect();
    }
    let mut out = Vec::new();
    'outer: for (x, &(e, c)) in inside.iter().enumerate() {
        if c > target {
            continue;
        }
        for &(f, d) in &inside[x + 1..] {
            if c + d == target && crate::combinatorics::intersection_len(e, f) == 0 {
                out.push(vec![e.to_vec(), f.to_vec()]);
                if out.len() >= limit {
                    break 'outer;
                }
            }
        }
    }
    out
}

struct Residual {
    vertices: Vec<usize>,
    mask: Vec<bool>,
    colors: Vec<usize>,
    a: Vec<usize>,
    b: Vec<usize>,
}

fn residual_of(t: &ColoredGraph, covered: &Matching, witness: &VertexPartition) -> Residual {
    let mut mask = vec![true; t.vertex_count()];
    for &v in covered.edges().iter().flatten() {
        mask[v] = false;
    }
    let vertices: Vec<usize> = (0..t.vertex_count()).filter(|&v| mask[v]).collect();
    let colors = vertices.iter().copied().filter(|&v| t.is_color_vertex(v)).collect();
    let (a, b) = vertices
        .iter()
        .copied()
        .filter(|&v| !t.is_color_vertex(v))
        .partition(|&v| witness.a.contains(v));
    Residual {
        vertices,
        mask,
        colors,
        a,
        b,
    }
}

fn check_residual(t: &ColoredGraph, res: &Residual, witness: &VertexPartition) -> Result<Frame> {
    if !check_parity(res.a.len(), res.colors.len(), witness.parity) {
        return Err(contract(format!(
            "residual parity fails: |A'| = {}, |X'| = {}, i = {}",
            res.a.len(),
            res.colors.len(),
            witness.parity
        )));
    }
    if t.k() < 2 {
        return Err(Error::InvalidArity("the partition plan needs k >= 2".into()));
    }
    Ok(frame(t.k(), witness.parity, res.a.clone(), res.b.clone()))
}

fn assign(fr: &Frame, res: &Residual, leftover: &[Vec<usize>], r: usize, s: i64, attempt: usize, seed: u64) -> PartitionPlan {
    let k = fr.t_in_a.len();
    let mut taken = vec![false; res.mask.len()];
    for &v in leftover.iter().flatten() {
        taken[v] = true;
    }
    let free = |pool: &[usize]| -> Vec<usize> { pool.iter().copied().filter(|&v| !taken[v]).collect() };
    let mut colors = free(&res.colors);
    let mut a_pool = free(&fr.a_side);
    let mut b_pool = free(&fr.b_side);
    if attempt > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        colors.shuffle(&mut rng);
        a_pool.shuffle(&mut rng);
        b_pool.shuffle(&mut rng);
    }
    let q = colors.len() - r;
    let mut a_iter = a_pool.into_iter();
    let mut b_iter = b_pool.into_iter();
    let mut take_part = |in_a: bool, size: usize| -> Vec<usize> {
        let mut part: Vec<usize> = if in_a {
            a_iter.by_ref().take(size).collect()
        } else {
            b_iter.by_ref().take(size).collect()
        };
        part.sort_unstable();
        part
    };
    let t_parts: Vec<Vec<usize>> = (0..k).map(|j| take_part(fr.t_in_a[j], r)).collect();
    let s_parts: Vec<Vec<usize>> = (0..k).map(|j| take_part(fr.s_in_a[j], q)).collect();
    let mut y1 = colors[..r].to_vec();
    let mut y2 = colors[r..].to_vec();
    y1.sort_unstable();
    y2.sort_unstable();
    let y3: Vec<usize> = res.colors.iter().copied().filter(|&v| taken[v]).collect();
    PartitionPlan {
        case: fr.case,
        r,
        s,
        y1,
        y2,
        y3,
        t_parts,
        s_parts,
        leftover: leftover.to_vec(),
    }
}

/// First plan for the residual `T' = T - V(covered)`: the case follows from
/// `i` and the parity of `k`, `r` is tried from the natural value outwards
/// and the leftover edges are taken first-fit in lexicographic order.
pub fn build_partition_plan(t: &ColoredGraph, covered: &Matching, witness: &VertexPartition) -> Result<PartitionPlan> {
    let res = residual_of(t, covered, witness);
    let fr = check_residual(t, &res, witness)?;
    let k = t.k();
    let n1_over_k = res.colors.len();
    let in_a = side_mask(t, &fr.a_side);
    let mut feasible = false;
    for r in fr.r_order(n1_over_k, k) {
        let Some((_, target, s)) = fr.sizes(n1_over_k, k, r) else {
            continue;
        };
        feasible = true;
        if let Some(leftover) = leftover_choices(t, &res.mask, &in_a, fr.leftover_edges, target, 1).into_iter().next() {
            return Ok(assign(&fr, &res, &leftover, r, s, 0, 0));
        }
    }
    if !feasible {
        return Err(contract(format!(
            "case {} size equations have no solution for |A'| = {}, |B'| = {}, |X'| = {n1_over_k}",
            fr.case,
            res.a.len(),
            res.b.len()
        )));
    }
    Err(Error::Phase {
        phase: ExtremalPhase::Plan.name(),
        detail: format!("no leftover edge set fits case {} for any r", fr.case),
    })
}

fn side_mask(t: &ColoredGraph, side: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; t.vertex_count()];
    for &v in side {
        mask[v] = true;
    }
    mask
}

/// Perfect matching of the `(k+1)`-partite subgraph of `t` on `parts`.
fn solve_partite(t: &ColoredGraph, colors: &[usize], parts: &[Vec<usize>], cfg: &SolverConfig) -> (Status, Option<Matching>) {
    if colors.is_empty() {
        return (Status::Found, Some(Matching::default()));
    }
    let mut label = vec![usize::MAX; t.vertex_count()];
    let mut part_of = vec![usize::MAX; t.vertex_count()];
    let mut map = Vec::new();
    for (p, group) in std::iter::once(colors).chain(parts.iter().map(Vec::as_slice)).enumerate() {
        for &v in group {
            part_of[v] = p;
            label[v] = map.len();
            map.push(v);
        }
    }
    let h = t.as_hypergraph();
    let local: Vec<Vec<usize>> = h
        .edges()
        .filter(|e| {
            let mut seen = vec![false; parts.len() + 1];
            e.iter().all(|&v| part_of[v] != usize::MAX && !std::mem::replace(&mut seen[part_of[v]], true))
        })
        .map(|e| {
            let mut x: Vec<usize> = e.iter().map(|&v| label[v]).collect();
            x.sort_unstable();
            x
        })
        .collect();
    let local = Hypergraph::new(map.len(), h.k(), local).expect("relabelled edges are valid");
    let out = find_perfect_matching(&local, cfg);
    (out.status, out.matching.map(|m| m.relabel(&map)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalOutcome {
    pub status: PipelineStatus,
    pub failed_phase: Option<ExtremalPhase>,
    pub detail: String,
    pub rainbow: Option<RainbowMatching>,
    /// Measured closeness of `T` to `T_ext` for the best witness.
    pub closeness: f64,
    pub witness: Option<VertexPartition>,
    pub bad_vertices: usize,
    pub plan: Option<PartitionPlan>,
    /// Plans whose two subproblems were attempted.
    pub plans_tried: usize,
    pub used_fallback: bool,
}

struct Failure {
    phase: ExtremalPhase,
    detail: String,
    timed_out: bool,
}

/// Runs the extremal-case construction. A `Found` result has passed the
/// independent rainbow verifier; `None` can only come from the exact
/// fallback.
pub fn solve_extremal(family: &RainbowFamily, params: &ExtremalParams) -> Result<ExtremalOutcome> {
    let t = build_rainbow_graph(family);
    let (n, k) = (t.n(), t.k());
    if n == 0 {
        return Err(contract("the extremal solver needs n > 0"));
    }
    let witnesses: Vec<(u64, VertexPartition)> = if n <= MAX_EXACT_N {
        ranked_witnesses(&t, params.witness_limit.max(1))?
    } else {
        let report = closeness_to_ext(&t, SearchMode::sampled(params.seed))?;
        vec![(report.edits, report.witness)]
    };
    let normaliser = (t.vertex_count() as f64).powi(k as i32 + 1);
    let measured = witnesses[0].0 as f64 / normaliser;
    let mut outcome = ExtremalOutcome {
        status: PipelineStatus::Failed,
        failed_phase: None,
        detail: String::new(),
        rainbow: None,
        closeness: measured,
        witness: None,
        bad_vertices: 0,
        plan: None,
        plans_tried: 0,
        used_fallback: false,
    };
    let alpha = ((k as f64 + 1.0).powi(k as i32 + 1) * params.epsilon).sqrt();
    let mut last = Failure {
        phase: ExtremalPhase::Closeness,
        detail: format!("measured closeness {measured:.3e} exceeds ε = {}", params.epsilon),
        timed_out: false,
    };
    let mut timed_out = false;
    for (edits, witness) in &witnesses {
        if *edits as f64 / normaliser > params.epsilon {
            continue;
        }
        match attempt_witness(&t, family, witness, alpha, params, &mut outcome) {
            Ok(rainbow) => {
                outcome.status = PipelineStatus::Found;
                outcome.rainbow = Some(rainbow);
                outcome.witness = Some(witness.clone());
                return Ok(outcome);
            }
            Err(f) => {
                timed_out |= f.timed_out;
                last = f;
            }
        }
    }
    outcome.failed_phase = Some(last.phase);
    outcome.detail = last.detail;
    if timed_out {
        outcome.status = PipelineStatus::Timeout;
    }
    if n <= params.fallback_n {
        outcome.used_fallback = true;
        let exact = find_rainbow_pm(family, &params.solver);
        outcome.status = match exact.status {
            Status::Found => PipelineStatus::Found,
            Status::None => PipelineStatus::None,
            Status::Timeout => PipelineStatus::Timeout,
        };
        outcome.rainbow = exact.matching;
        outcome.failed_phase = (!exact.status.eq(&Status::Found)).then_some(ExtremalPhase::Fallback);
    }
    Ok(outcome)
}

fn attempt_witness(
    t: &ColoredGraph,
    family: &RainbowFamily,
    witness: &VertexPartition,
    alpha: f64,
    params: &ExtremalParams,
    outcome: &mut ExtremalOutcome,
) -> std::result::Result<RainbowMatching, Failure> {
    let fail = |phase: ExtremalPhase, detail: String| Failure {
        phase,
        detail,
        timed_out: false,
    };
    let (n, k) = (t.n(), t.k());
    let t_ext = build_rainbow_graph(&RainbowFamily::uniform(witness.build()).expect("witness matches (n, k)"));
    let goodness = good_vertices(t.as_hypergraph(), t_ext.as_hypergraph(), alpha).map_err(|e| fail(ExtremalPhase::BadVertices, e.to_string()))?;
    outcome.bad_vertices = goodness.bad.len();
    let covered = match remove_bad_vertices(t, &goodness.bad, witness, params.bad_cap(n, k), params.repair_cap) {
        Ok(Some(m)) => m,
        Ok(None) => return Err(fail(ExtremalPhase::BadVertices, format!("no repair matching for {} bad vertices", goodness.bad.len()))),
        Err(e) => return Err(fail(ExtremalPhase::BadVertices, e.to_string())),
    };
    let res = residual_of(t, &covered, witness);
    let finish = |parts: Vec<&Matching>| -> std::result::Result<RainbowMatching, Failure> {
        let pm = parts.into_iter().fold(covered.clone(), |acc, m| acc.union(m));
        verify::perfect_matching(t.as_hypergraph(), &pm).map_err(|e| fail(ExtremalPhase::Verify, e.to_string()))?;
        let rainbow = rainbow_of_pm(t, &pm).map_err(|e| fail(ExtremalPhase::Verify, e.to_string()))?;
        verify::rainbow_perfect_matching(family, &rainbow).map_err(|e| fail(ExtremalPhase::Verify, e.to_string()))?;
        Ok(rainbow)
    };
    if res.vertices.is_empty() {
        return finish(Vec::new());
    }
    let fr = check_residual(t, &res, witness).map_err(|e| fail(ExtremalPhase::Plan, e.to_string()))?;
    let n1_over_k = res.colors.len();
    let in_a = side_mask(t, &fr.a_side);
    let mut any_leftover = false;
    let mut timed_out = false;
    for r in fr.r_order(n1_over_k, k) {
        let Some((_, target, s)) = fr.sizes(n1_over_k, k, r) else {
            continue;
        };
        for leftover in leftover_choices(t, &res.mask, &in_a, fr.leftover_edges, target, params.leftover_limit) {
            any_leftover = true;
            for attempt in 0..params.assign_attempts.max(1) {
                let plan = assign(&fr, &res, &leftover, r, s, attempt, params.seed);
                debug_assert!(plan.validate(t, &res.vertices).is_ok());
                outcome.plans_tried += 1;
                let ((st1, m1), (st2, m2)) = rayon::join(
                    || solve_partite(t, &plan.y1, &plan.t_parts, &params.solver),
                    || solve_partite(t, &plan.y2, &plan.s_parts, &params.solver),
                );
                timed_out |= st1 == Status::Timeout || st2 == Status::Timeout;
                if let (Some(m1), Some(m2)) = (m1, m2) {
                    let left = Matching::new(plan.leftover.iter().cloned());
                    let rainbow = finish(vec![&left, &m1, &m2])?;
                    outcome.plan = Some(plan);
                    return Ok(rainbow);
                }
            }
        }
    }
    Err(Failure {
        phase: if any_leftover { ExtremalPhase::Subproblem } else { ExtremalPhase::Plan },
        detail: if any_leftover {
            format!("no group assignment gave perfect matchings in both subproblems (case {})", fr.case)
        } else {
            format!("no leftover edge set fits case {} for any r", fr.case)
        },
        timed_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::canonical_ext;

    fn perturbed(n: usize, k: usize, extra: usize, seed: u64) -> RainbowFamily {
        let ext = canonical_ext(n, k, k - 1).unwrap();
        let base = ext.build();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = vec![base.clone(); n / k];
        let outside: Vec<Vec<usize>> = base.complement().edges().map(<[usize]>::to_vec).collect();
        for _ in 0..extra {
            let layer = rng.gen_range(0..layers.len());
            let e = outside.choose(&mut rng).unwrap().clone();
            if !layers[layer].contains_edge(&e) {
                layers[layer] = layers[layer].with_edges([e]).unwrap();
            }
        }
        RainbowFamily::new(n, k, layers).unwrap()
    }

    #[test]
    fn repair_trivial_cases() {
        let w = canonical_ext(6, 3, 2).unwrap();
        let complete = build_rainbow_graph(&RainbowFamily::uniform(Hypergraph::complete(6, 3)).unwrap());
        // the parity of T_ext itself always fails, so one fix edge is needed
        let m = remove_bad_vertices(&complete, &[], &w, 0, 1000).unwrap().unwrap();
        assert_eq!(m.len(), 1);
        let e = &m.edges()[0];
        let hits = e.iter().filter(|&&v| v < 6 && w.a.contains(v)).count();
        assert_eq!(hits % 2, (w.parity as usize + 1) % 2);
        // on T_ext there is no edge of the other parity
        let t_ext = build_rainbow_graph(&RainbowFamily::uniform(w.build()).unwrap());
        assert_eq!(remove_bad_vertices(&t_ext, &[], &w, 0, 1000).unwrap(), None);
    }

    #[test]
    fn repair_covers_bad_vertices() {
        let w = canonical_ext(9, 3, 2).unwrap();
        let t = build_rainbow_graph(&RainbowFamily::uniform(Hypergraph::complete(9, 3)).unwrap());
        let m = remove_bad_vertices(&t, &[0, 9], &w, 2, 10_000).unwrap().unwrap();
        assert!(m.len() <= 3);
        let covered = m.vertices();
        assert!(covered.contains(&0) && covered.contains(&9));
        for e in m.edges() {
            assert!(e.iter().filter(|&&v| v == 0 || v == 9).count() <= 1);
        }
        assert!(remove_bad_vertices(&t, &[0, 9], &w, 1, 10_000).is_err());
    }

    #[test]
    fn case_dispatch() {
        assert_eq!(frame(4, 0, vec![], vec![]).case, 1);
        assert_eq!(frame(3, 0, vec![], vec![]).case, 2);
        assert_eq!(frame(4, 1, vec![], vec![]).case, 3);
        let f = frame(3, 1, vec![1], vec![2, 3]);
        assert_eq!((f.case, f.a_side.clone()), (4, vec![2, 3]));
    }

    #[test]
    fn plan_on_perturbed_t_ext() {
        for seed in 0..5 {
            let family = perturbed(12, 3, 5, seed);
            let t = build_rainbow_graph(&family);
            let w = canonical_ext(12, 3, 2).unwrap();
            let Some(m) = remove_bad_vertices(&t, &[], &w, 0, 1000).unwrap() else {
                continue;
            };
            let plan = build_partition_plan(&t, &m, &w).unwrap();
            let res = residual_of(&t, &m, &w);
            plan.validate(&t, &res.vertices).unwrap();
            assert!(matches!(plan.case, 2 | 4));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(plan.template_violations(&w, 1000, &mut rng), 0);
        }
    }

    #[test]
    fn plan_rejects_bad_parity() {
        let w = canonical_ext(9, 3, 2).unwrap();
        let t = build_rainbow_graph(&RainbowFamily::uniform(w.build()).unwrap());
        assert!(matches!(build_partition_plan(&t, &Matching::default(), &w), Err(Error::Contract(_))));
    }

    #[test]
    fn solves_perturbed_instances() {
        let mut found = 0;
        for seed in 0..10 {
            let family = perturbed(12, 3, 5, seed);
            let exact = find_rainbow_pm(&family, &SolverConfig::default());
            let out = solve_extremal(&family, &ExtremalParams::default()).unwrap();
            assert_ne!(out.status, PipelineStatus::None);
            if out.status == PipelineStatus::Found {
                assert!(exact.is_found());
                verify::rainbow_perfect_matching(&family, out.rainbow.as_ref().unwrap()).unwrap();
                found += 1;
            } else {
                assert!(out.failed_phase.is_some());
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn pure_extremal_family_is_never_solved() {
        let family = RainbowFamily::uniform(canonical_ext(9, 3, 2).unwrap().build()).unwrap();
        let out = solve_extremal(&family, &ExtremalParams::default()).unwrap();
        assert_eq!(out.status, PipelineStatus::Failed);
        let fallback = ExtremalParams {
            fallback_n: 9,
            ..ExtremalParams::default()
        };
        assert_eq!(solve_extremal(&family, &fallback).unwrap().status, PipelineStatus::None);
    }
}
