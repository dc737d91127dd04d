//! The absorbing method on a (1,k)-graph `T`: absorbers, the random reserve,
//! the exchange-augmented almost cover, absorption of leftovers and the
//! pipeline chaining them.
//!
//! All vertex sets here use the embedded labels of [`ColoredGraph`]: base
//! vertices `0..n`, colors `n..n+m`.

use crate::combinatorics::{binomial, colex_rank, subsets};
use crate::error::{contract, Error, Result};
use crate::hypergraph::Hypergraph;
use crate::solver::{find_perfect_matching, find_rainbow_pm, SolverConfig, Status};
use crate::transform::{build_rainbow_graph, is_balanced, rainbow_of_pm, ColoredGraph, Matching, RainbowFamily, RainbowMatching};
use crate::verify;
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Probe sets per reserve group.
pub const RESERVE_PROBES: usize = 200;
/// Cap on sampled `𝓔 ⊆ M` per exchange round.
pub const EXCHANGE_SAMPLE_CAP: usize = 10_000;
/// Backtracking node cap for absorption.
pub const ABSORB_DEPTH_CAP: usize = 1_000;

/// A matching of the edges of `t` inside `w` covering all of `w`, if any.
/// `w` must be sorted.
pub fn exact_cover_within(t: &ColoredGraph, w: &[usize]) -> Option<Matching> {
    let h = t.as_hypergraph();
    let r = h.k();
    if !w.len().is_multiple_of(r) {
        return None;
    }
    let local: Vec<Vec<usize>> = subsets(w.len(), r)
        .filter(|pos| {
            let e: Vec<usize> = pos.iter().map(|&p| w[p]).collect();
            h.contains_edge(&e)
        })
        .collect();
    let local = Hypergraph::new(w.len(), r, local).expect("positions are valid");
    let out = find_perfect_matching(&local, &SolverConfig::default());
    out.matching.map(|m| m.relabel(w))
}

fn check_balanced_set(e: &[usize], t: &ColoredGraph) -> Result<()> {
    if e.len() != t.k() + 1 || !is_balanced(e, t.n(), t.k()) {
        return Err(contract(format!("{e:?} is not a balanced (k+1)-set")));
    }
    if e.windows(2).any(|w| w[0] >= w[1]) || e.iter().any(|&v| v >= t.vertex_count()) {
        return Err(contract(format!("{e:?} is not a sorted vertex set of T")));
    }
    Ok(())
}

fn union_sorted(parts: &[&[usize]]) -> Vec<usize> {
    let mut all: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    all.sort_unstable();
    all
}

/// Whether the 1 or 2 edges in `absorber` form an absorber for `e`: some
/// matching of `t` covers exactly `V(e) ∪ V(absorber)`.
pub fn is_absorber(absorber: &[Vec<usize>], e: &[usize], t: &ColoredGraph) -> Result<bool> {
    check_balanced_set(e, t)?;
    if absorber.is_empty() || absorber.len() > 2 {
        return Err(contract(format!("an absorber has 1 or 2 edges, got {}", absorber.len())));
    }
    let h = t.as_hypergraph();
    for a in absorber {
        if !h.contains_edge(a) {
            return Err(contract(format!("{a:?} is not an edge of T")));
        }
    }
    let mut parts: Vec<&[usize]> = absorber.iter().map(Vec::as_slice).collect();
    parts.push(e);
    let w = union_sorted(&parts);
    if w.windows(2).any(|p| p[0] == p[1]) {
        return Err(contract("absorber edges must be pairwise disjoint and disjoint from E"));
    }
    Ok(exact_cover_within(t, &w).is_some())
}

/// All absorbers (as vertex sets) of a given order for `e`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorberQuery {
    pub e: Vec<usize>,
    pub order: usize,
    pub found: Vec<Vec<usize>>,
}

impl AbsorberQuery {
    pub fn count(&self) -> usize {
        self.found.len()
    }
}

/// Exact absorber count by enumerating every edge (order 1) or pair of
/// disjoint edges (order 2) avoiding `e`. Distinct vertex sets are counted
/// once. `budget` caps the number of candidates examined.
pub fn count_absorbers(e: &[usize], t: &ColoredGraph, order: usize, budget: u64) -> Result<AbsorberQuery> {
    check_balanced_set(e, t)?;
    if !(1..=2).contains(&order) {
        return Err(contract(format!("absorber order must be 1 or 2, got {order}")));
    }
    let h = t.as_hypergraph();
    let avoid: Vec<usize> = (0..h.edge_count())
        .filter(|&i| crate::combinatorics::intersection_len(h.edge(i), e) == 0)
        .collect();
    let candidates: u64 = if order == 1 {
        avoid.len() as u64
    } else {
        binomial(avoid.len(), 2)
    };
    if candidates > budget {
        return Err(Error::Resource {
            what: format!("{candidates} order-{order} absorber candidates"),
            partial: "none".into(),
        });
    }
    let found: HashSet<Vec<usize>> = if order == 1 {
        avoid
            .par_iter()
            .filter(|&&a| exact_cover_within(t, &union_sorted(&[h.edge(a), e])).is_some())
            .map(|&a| h.edge(a).to_vec())
            .collect()
    } else {
        avoid
            .par_iter()
            .enumerate()
            .flat_map_iter(|(pos, &a)| {
                avoid[pos + 1..]
                    .iter()
                    .filter(move |&&b| crate::combinatorics::intersection_len(h.edge(a), h.edge(b)) == 0)
                    .map(move |&b| union_sorted(&[h.edge(a), h.edge(b)]))
            })
            .filter(|group| exact_cover_within(t, &union_sorted(&[group, e])).is_some())
            .collect()
    };
    let mut found: Vec<Vec<usize>> = found.into_iter().collect();
    found.sort_unstable();
    Ok(AbsorberQuery {
        e: e.to_vec(),
        order,
        found,
    })
}

/// Monte Carlo estimate of the number of absorbing edges (order 1) or
/// ordered... unordered edge pairs (order 2) for `e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorberEstimate {
    pub population: u64,
    pub samples: usize,
    pub hit_fraction: f64,
    pub estimate: f64,
    pub standard_error: f64,
}

pub fn estimate_absorbers(e: &[usize], t: &ColoredGraph, order: usize, samples: usize, seed: u64) -> Result<AbsorberEstimate> {
    check_balanced_set(e, t)?;
    if !(1..=2).contains(&order) {
        return Err(contract(format!("absorber order must be 1 or 2, got {order}")));
    }
    let h = t.as_hypergraph();
    let m = h.edge_count();
    let population = if order == 1 { m as u64 } else { binomial(m, 2) };
    if m < order || samples == 0 {
        return Ok(AbsorberEstimate {
            population,
            samples,
            hit_fraction: 0.0,
            estimate: 0.0,
            standard_error: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let picks = rand::seq::index::sample(&mut rng, m, order).into_vec();
        let edges: Vec<Vec<usize>> = picks.iter().map(|&i| h.edge(i).to_vec()).collect();
        let parts: Vec<&[usize]> = edges.iter().map(Vec::as_slice).chain(std::iter::once(e)).collect();
        let w = union_sorted(&parts);
        if w.windows(2).all(|p| p[0] != p[1]) && exact_cover_within(t, &w).is_some() {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(AbsorberEstimate {
        population,
        samples,
        hit_fraction: p,
        estimate: p * population as f64,
        standard_error: (p * (1.0 - p) / samples as f64).sqrt() * population as f64,
    })
}

/// A uniformly random matching of `t` disjoint `set_size`-subsets of
/// `[0, universe)`: a uniform `t·set_size`-subset in uniform random order,
/// cut into consecutive groups.
pub fn sample_random_matching<R: Rng + ?Sized>(universe: usize, set_size: usize, t: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if t * set_size > universe {
        return Err(contract(format!("{t} disjoint {set_size}-sets do not fit in {universe} elements")));
    }
    let mut picked = rand::seq::index::sample(rng, universe, t * set_size).into_vec();
    picked.shuffle(rng);
    Ok(picked
        .chunks(set_size.max(1))
        .take(t)
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_unstable();
            c
        })
        .collect())
}

/// A family `𝓖 ⊆ ([m] choose k)` stored as a bitmap over colex ranks.
#[derive(Clone, Debug)]
pub struct SetFamily {
    pub m: usize,
    pub k: usize,
    members: Vec<bool>,
    size: usize,
}

impl SetFamily {
    pub fn full(m: usize, k: usize) -> Self {
        let total = binomial(m, k) as usize;
        Self {
            m,
            k,
            members: vec![true; total],
            size: total,
        }
    }

    pub fn empty(m: usize, k: usize) -> Self {
        Self {
            m,
            k,
            members: vec![false; binomial(m, k) as usize],
            size: 0,
        }
    }

    /// Each k-set joins independently with probability `theta`.
    pub fn random<R: Rng + ?Sized>(m: usize, k: usize, theta: f64, rng: &mut R) -> Self {
        let members: Vec<bool> = (0..binomial(m, k)).map(|_| rng.gen_bool(theta.clamp(0.0, 1.0))).collect();
        let size = members.iter().filter(|b| **b).count();
        Self { m, k, members, size }
    }

    pub fn contains(&self, set: &[usize]) -> bool {
        self.members[colex_rank(set)]
    }

    /// `θ = |𝓖| / C(m, k)`.
    pub fn density(&self) -> f64 {
        self.size as f64 / self.members.len().max(1) as f64
    }
}

/// Observed `η = |𝓖 ∩ 𝓑|` over random t-matchings `𝓑`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub t: usize,
    pub theta: f64,
    pub etas: Vec<usize>,
}

impl SampleStats {
    pub fn mean(&self) -> f64 {
        self.etas.iter().sum::<usize>() as f64 / self.etas.len().max(1) as f64
    }

    /// Empirical `Pr[|η - θt| >= 2γ√t]`.
    pub fn tail(&self, gamma: f64) -> f64 {
        let centre = self.theta * self.t as f64;
        let radius = 2.0 * gamma * (self.t as f64).sqrt();
        let hits = self.etas.iter().filter(|&&eta| (eta as f64 - centre).abs() >= radius).count();
        hits as f64 / self.etas.len().max(1) as f64
    }
}

/// `2 e^{-γ²/2}`.
pub fn fk_tail_bound(gamma: f64) -> f64 {
    2.0 * (-gamma * gamma / 2.0).exp()
}

const SAMPLE_CHUNK: usize = 256;

/// Draws `samples` random t-matchings of k-sets of `[m]` and records `η`.
/// Chunk `j` uses stream `j` of the seeded generator, so the result does
/// not depend on thread scheduling.
pub fn intersect_stats(family: &SetFamily, t: usize, samples: usize, seed: u64) -> Result<SampleStats> {
    if t * family.k > family.m {
        return Err(contract(format!("{t} disjoint {}-sets do not fit in {}", family.k, family.m)));
    }
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let etas: Vec<usize> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let count = SAMPLE_CHUNK.min(samples - j * SAMPLE_CHUNK);
            (0..count)
                .map(|_| {
                    sample_random_matching(family.m, family.k, t, &mut rng)
                        .expect("size checked")
                        .iter()
                        .filter(|s| family.contains(s))
                        .count()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(SampleStats {
        t,
        theta: family.density(),
        etas,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkTail {
    pub gamma: f64,
    pub empirical: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkReport {
    pub theta_target: f64,
    pub theta: f64,
    pub t: usize,
    pub m: usize,
    pub k: usize,
    pub samples: usize,
    pub mean: f64,
    pub expected: f64,
    /// `3 sqrt(θ(1-θ)t / samples) sqrt(t)`.
    pub mean_guard: f64,
    pub tails: Vec<FkTail>,
}

/// Concentration experiment on a random family of density about `theta`
/// inside `([t·k] choose k)`.
pub fn fk_test(theta: f64, t: usize, k: usize, samples: usize, seed: u64) -> Result<FkReport> {
    let m = t * k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = SetFamily::random(m, k, theta, &mut rng);
    let stats = intersect_stats(&family, t, samples, seed.wrapping_add(1))?;
    let th = stats.theta;
    Ok(FkReport {
        theta_target: theta,
        theta: th,
        t,
        m,
        k,
        samples,
        mean: stats.mean(),
        expected: th * t as f64,
        mean_guard: 3.0 * (th * (1.0 - th) * t as f64 / samples.max(1) as f64).sqrt() * (t as f64).sqrt(),
        tails: [1.0, 2.0, 3.0]
            .into_iter()
            .map(|gamma| FkTail {
                gamma,
                empirical: stats.tail(gamma),
                bound: fk_tail_bound(gamma),
            })
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Reserve density: `|V(𝓐)| <= γ |V(T)|`.
    pub gamma: f64,
    /// Almost-cover slack in the layer degree condition.
    pub xi: f64,
    pub seed: u64,
    /// `ℓ` for the exchange; `None` means `⌈k/2⌉`.
    pub l: Option<usize>,
    /// Run the exact solver when the pipeline fails and `n <= fallback_n`.
    pub fallback_n: usize,
    /// Node budget for the exchange search in the almost cover.
    pub cover_budget: u64,
    /// Node cap for absorption backtracking.
    pub absorb_cap: usize,
    pub solver: SolverConfig,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            gamma: 0.4,
            xi: 1.0 / 6.0,
            seed: 0,
            l: None,
            fallback_n: 0,
            cover_budget: 2_000_000,
            absorb_cap: ABSORB_DEPTH_CAP,
            solver: SolverConfig::default(),
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) || !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(contract(format!("need 0 < γ, ξ < 1, got γ = {}, ξ = {}", self.gamma, self.xi)));
        }
        Ok(())
    }

    pub fn l_for(&self, k: usize) -> usize {
        self.l.unwrap_or(k.div_ceil(2))
    }
}

/// A reserve group: two disjoint edges whose union absorbed at least one
/// probe set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReserveGroup {
    pub vertices: Vec<usize>,
    pub edges: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbingReserve {
    pub groups: Vec<ReserveGroup>,
    /// Groups sampled before filtering.
    pub sampled: usize,
}

impl AbsorbingReserve {
    pub fn matching(&self) -> Matching {
        Matching::new(self.groups.iter().flat_map(|g| g.edges.iter().cloned()))
    }

    pub fn vertices(&self) -> Vec<usize> {
        union_sorted(&self.groups.iter().map(|g| g.vertices.as_slice()).collect::<Vec<_>>())
    }
}

/// Random balanced `(k+1)`-set built from the given pools.
fn random_balanced_set<R: Rng + ?Sized>(colors: &[usize], bases: &[usize], k: usize, rng: &mut R) -> Option<Vec<usize>> {
    if colors.is_empty() || bases.len() < k {
        return None;
    }
    let mut e: Vec<usize> = bases.choose_multiple(rng, k).copied().collect();
    e.push(*colors.choose(rng)?);
    e.sort_unstable();
    Some(e)
}

/// Samples `⌊γ|V(T)| / 2(k+1)⌋` disjoint balanced `2(k+1)`-sets uniformly at
/// random and keeps those that split into two edges of `T` and 2-absorb at
/// least one of [`RESERVE_PROBES`] random balanced sets outside the sample.
pub fn build_absorbing_family(t: &ColoredGraph, params: &PipelineParams) -> Result<AbsorbingReserve> {
    params.validate()?;
    let (n, m, k) = (t.n(), t.m(), t.k());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let wanted = (params.gamma * t.vertex_count() as f64 / (2 * (k + 1)) as f64).floor() as usize;
    let count = wanted.min(m / 2).min(n / (2 * k));
    if count == 0 {
        return Ok(AbsorbingReserve::default());
    }
    let color_groups = sample_random_matching(m, 2, count, &mut rng)?;
    let base_groups = sample_random_matching(n, 2 * k, count, &mut rng)?;
    let mut used = vec![false; t.vertex_count()];
    let groups: Vec<Vec<usize>> = color_groups
        .iter()
        .zip(&base_groups)
        .map(|(c, b)| {
            let mut w: Vec<usize> = b.clone();
            w.extend(c.iter().map(|&x| t.color_vertex(x)));
            w.sort_unstable();
            for &v in &w {
                used[v] = true;
            }
            w
        })
        .collect();
    let free_colors: Vec<usize> = (n..n + m).filter(|&v| !used[v]).collect();
    let free_bases: Vec<usize> = (0..n).filter(|&v| !used[v]).collect();
    let mut kept = Vec::new();
    for w in groups {
        let Some(split) = exact_cover_within(t, &w) else {
            continue;
        };
        let absorbs = (0..RESERVE_PROBES).any(|_| {
            random_balanced_set(&free_colors, &free_bases, k, &mut rng)
                .is_some_and(|e| exact_cover_within(t, &union_sorted(&[&w, &e])).is_some())
        });
        if absorbs {
            kept.push(ReserveGroup {
                vertices: w,
                edges: split.edges().to_vec(),
            });
        }
    }
    Ok(AbsorbingReserve {
        groups: kept,
        sampled: count,
    })
}

/// `L_S(M)`: the `(k-ℓ)`-sets `T ⊆ V(M)` with `S ∪ T ∈ T` meeting every
/// edge of `M` at most once. `s` is one color plus `ℓ` base vertices.
pub fn compute_l_s(t: &ColoredGraph, matching: &Matching, s: &[usize]) -> Result<Vec<Vec<usize>>> {
    let colors = s.iter().filter(|&&v| t.is_color_vertex(v)).count();
    if colors != 1 || s.len() > t.k() {
        return Err(contract(format!("S = {s:?} must be one color and at most k-1 base vertices")));
    }
    let mut owner = vec![usize::MAX; t.vertex_count()];
    for (i, e) in matching.edges().iter().enumerate() {
        for &v in e {
            owner[v] = i;
        }
    }
    if s.iter().any(|&v| owner.get(v).copied().unwrap_or(usize::MAX) != usize::MAX) {
        return Err(contract("S overlaps V(M)"));
    }
    Ok(t
        .as_hypergraph()
        .link_graph(s)?
        .into_iter()
        .filter(|rest| {
            let hit: Vec<usize> = rest.iter().map(|&v| owner[v]).collect();
            hit.iter().all(|&o| o != usize::MAX) && hit.iter().all_unique()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostCoverReport {
    pub matching: Matching,
    /// Vertices of the considered region left uncovered.
    pub uncovered: Vec<usize>,
    /// Uncovered count right after the greedy phase.
    pub greedy_uncovered: usize,
    pub exchanges: usize,
    pub nodes: u64,
}

/// Greedy maximal matching in random edge order, then repeated exchanges:
/// drop `k-ℓ` edges `𝓔` and add `k-ℓ+1` edges `S_j ∪ T_j` with
/// `T_j ∈ L_{S_j}(𝓔)` pairwise disjoint.
pub fn almost_cover(t: &ColoredGraph, l: usize, budget: u64, seed: u64) -> Result<AlmostCoverReport> {
    almost_cover_avoiding(t, &[], l, budget, seed)
}

/// [`almost_cover`] on `T - excluded`.
pub fn almost_cover_avoiding(t: &ColoredGraph, excluded: &[usize], l: usize, budget: u64, seed: u64) -> Result<AlmostCoverReport> {
    let k = t.k();
    if l == 0 || l >= k {
        return Err(Error::InvalidArity(format!("exchange needs 1 <= ℓ <= k-1, got ℓ = {l}")));
    }
    let h = t.as_hypergraph();
    let total = t.vertex_count();
    let mut blocked = vec![false; total];
    for &v in excluded {
        blocked[v] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..h.edge_count()).collect();
    order.shuffle(&mut rng);

    let mut owner: Vec<Option<usize>> = vec![None; total];
    let mut edges: Vec<Option<Vec<usize>>> = Vec::new();
    let greedy = |owner: &mut Vec<Option<usize>>, edges: &mut Vec<Option<Vec<usize>>>| {
        for &i in &order {
            let e = h.edge(i);
            if e.iter().all(|&v| !blocked[v] && owner[v].is_none()) {
                for &v in e {
                    owner[v] = Some(edges.len());
                }
                edges.push(Some(e.to_vec()));
            }
        }
    };
    greedy(&mut owner, &mut edges);
    let free = |owner: &Vec<Option<usize>>| (0..total).filter(|&v| !blocked[v] && owner[v].is_none()).count();
    let greedy_uncovered = free(&owner);

    let mut nodes = 0u64;
    let mut exchanges = 0;
    let d = k - l;
    loop {
        let uncovered: Vec<usize> = (0..total).filter(|&v| !blocked[v] && owner[v].is_none()).collect();
        let free_colors: Vec<usize> = uncovered.iter().copied().filter(|&v| t.is_color_vertex(v)).collect();
        let free_bases: Vec<usize> = uncovered.iter().copied().filter(|&v| !t.is_color_vertex(v)).collect();
        if free_colors.len() < d + 1 || free_bases.len() < (d + 1) * l || nodes >= budget {
            break;
        }
        let live: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].is_some()).collect();
        let groups: Vec<Vec<usize>> = if binomial(live.len(), d) as usize <= EXCHANGE_SAMPLE_CAP {
            live.iter().copied().combinations(d).collect()
        } else {
            (0..EXCHANGE_SAMPLE_CAP)
                .map(|_| {
                    let mut g: Vec<usize> = live.choose_multiple(&mut rng, d).copied().collect();
                    g.sort_unstable();
                    g
                })
                .collect()
        };
        let mut improved = None;
        for group in groups {
            let removed: Vec<Vec<usize>> = group.iter().map(|&i| edges[i].clone().unwrap()).collect();
            let mut search = Exchange {
                t,
                l,
                removed: &removed,
                free_colors: &free_colors,
                free_bases: &free_bases,
                used: vec![false; total],
                picked: Vec::new(),
                nodes: &mut nodes,
                budget,
            };
            if search.run(0) {
                improved = Some((group, search.picked));
                break;
            }
            if nodes >= budget {
                break;
            }
        }
        let Some((group, added)) = improved else {
            break;
        };
        for &i in &group {
            for &v in edges[i].as_ref().unwrap() {
                owner[v] = None;
            }
            edges[i] = None;
        }
        debug_assert_eq!(added.len(), group.len() + 1);
        for e in added {
            for &v in &e {
                debug_assert!(owner[v].is_none());
                owner[v] = Some(edges.len());
            }
            edges.push(Some(e));
        }
        exchanges += 1;
        greedy(&mut owner, &mut edges);
    }
    let matching = Matching::new(edges.into_iter().flatten());
    verify::matching(h, &matching)?;
    let uncovered = (0..total).filter(|&v| !blocked[v] && owner[v].is_none()).collect();
    Ok(AlmostCoverReport {
        matching,
        uncovered,
        greedy_uncovered,
        exchanges,
        nodes,
    })
}

struct Exchange<'a> {
    t: &'a ColoredGraph,
    l: usize,
    removed: &'a [Vec<usize>],
    free_colors: &'a [usize],
    free_bases: &'a [usize],
    used: Vec<bool>,
    picked: Vec<Vec<usize>>,
    nodes: &'a mut u64,
    budget: u64,
}

impl Exchange<'_> {
    /// Picks `S_j ∪ T_j` for `j = picked.len()..=|𝓔|` with colors increasing.
    fn run(&mut self, min_color_pos: usize) -> bool {
        if self.picked.len() == self.removed.len() + 1 {
            return true;
        }
        *self.nodes += 1;
        if *self.nodes >= self.budget {
            return false;
        }
        let h = self.t.as_hypergraph();
        let slots: Vec<Vec<usize>> = self
            .removed
            .iter()
            .map(|e| e.iter().copied().filter(|&v| !self.t.is_color_vertex(v)).collect())
            .collect();
        for cpos in min_color_pos..self.free_colors.len() {
            let color = self.free_colors[cpos];
            for transversal in slots.iter().map(|s| s.iter().copied()).multi_cartesian_product() {
                if transversal.iter().any(|&v| self.used[v]) {
                    continue;
                }
                let mut anchor = transversal.clone();
                anchor.push(color);
                anchor.sort_unstable();
                let Ok(links) = h.link_graph(&anchor) else {
                    continue;
                };
                for rest in links {
                    if rest.len() != self.l
                        || rest.iter().any(|&v| self.used[v] || self.free_bases.binary_search(&v).is_err())
                    {
                        continue;
                    }
                    let edge = union_sorted(&[&anchor, &rest]);
                    for &v in &edge {
                        self.used[v] = true;
                    }
                    self.picked.push(edge);
                    if self.run(cpos + 1) {
                        return true;
                    }
                    let edge = self.picked.pop().unwrap();
                    for &v in &edge {
                        self.used[v] = false;
                    }
                    if *self.nodes >= self.budget {
                        return false;
                    }
                }
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbsorbResult {
    /// `V(Q) = V(reserve) ∪ U`.
    Absorbed(Matching),
    /// No assignment found; lists the balanced sets of the first split of
    /// `U` that could not all be placed.
    Stuck { stuck: Vec<Vec<usize>> },
}

/// Absorbs the balanced set `u` into the reserve: splits `u` into balanced
/// `(k+1)`-sets and assigns each to a distinct group that absorbs it, with
/// backtracking over both the split and the assignment.
pub fn absorb(reserve: &AbsorbingReserve, u: &[usize], t: &ColoredGraph, cap: usize) -> Result<AbsorbResult> {
    let (n, k) = (t.n(), t.k());
    let mut u = u.to_vec();
    u.sort_unstable();
    if !is_balanced(&u, n, k) {
        return Err(contract(format!("U = {u:?} is not balanced")));
    }
    let reserved = reserve.vertices();
    if crate::combinatorics::intersection_len(&u, &reserved) > 0 {
        return Err(contract("U meets V(reserve)"));
    }
    let colors: Vec<usize> = u.iter().copied().filter(|&v| v >= n).collect();
    if colors.len() > reserve.groups.len() {
        return Ok(AbsorbResult::Stuck {
            stuck: naive_split(&u, n, k),
        });
    }
    let mut state = AbsorbSearch {
        t,
        reserve,
        used_groups: vec![false; reserve.groups.len()],
        used_bases: Vec::new(),
        parts: Vec::new(),
        nodes: 0,
        cap,
    };
    let bases: Vec<usize> = u.iter().copied().filter(|&v| v < n).collect();
    if state.run(&colors, &bases) {
        let mut edges: Vec<Vec<usize>> = state.parts.into_iter().flat_map(|(_, q)| q.edges().to_vec()).collect();
        for (g, group) in reserve.groups.iter().enumerate() {
            if !state.used_groups[g] {
                edges.extend(group.edges.iter().cloned());
            }
        }
        let q = Matching::new(edges);
        verify::matching(t.as_hypergraph(), &q)?;
        Ok(AbsorbResult::Absorbed(q))
    } else {
        Ok(AbsorbResult::Stuck {
            stuck: naive_split(&u, n, k),
        })
    }
}

fn naive_split(u: &[usize], n: usize, k: usize) -> Vec<Vec<usize>> {
    let colors: Vec<usize> = u.iter().copied().filter(|&v| v >= n).collect();
    let bases: Vec<usize> = u.iter().copied().filter(|&v| v < n).collect();
    colors
        .iter()
        .zip(bases.chunks(k.max(1)))
        .map(|(&c, b)| union_sorted(&[b, &[c]]))
        .collect()
}

struct AbsorbSearch<'a> {
    t: &'a ColoredGraph,
    reserve: &'a AbsorbingReserve,
    used_groups: Vec<bool>,
    used_bases: Vec<usize>,
    parts: Vec<(usize, Matching)>,
    nodes: usize,
    cap: usize,
}

impl AbsorbSearch<'_> {
    fn run(&mut self, colors: &[usize], bases: &[usize]) -> bool {
        let Some((&color, rest_colors)) = colors.split_first() else {
            return true;
        };
        let k = self.t.k();
        let remaining: Vec<usize> = bases.iter().copied().filter(|v| !self.used_bases.contains(v)).collect();
        // the smallest remaining base vertex goes with this color
        let Some((&first, others)) = remaining.split_first() else {
            return false;
        };
        for mut chunk in others.iter().copied().combinations(k - 1) {
            chunk.push(first);
            let e = union_sorted(&[&chunk, &[color]]);
            for g in 0..self.reserve.groups.len() {
                if self.used_groups[g] {
                    continue;
                }
                self.nodes += 1;
                if self.nodes > self.cap {
                    return false;
                }
                let w = union_sorted(&[&self.reserve.groups[g].vertices, &e]);
                let Some(q) = exact_cover_within(self.t, &w) else {
                    continue;
                };
                self.used_groups[g] = true;
                self.used_bases.extend(chunk.iter().copied());
                self.parts.push((g, q));
                if self.run(rest_colors, bases) {
                    return true;
                }
                self.parts.pop();
                self.used_bases.truncate(self.used_bases.len() - k);
                self.used_groups[g] = false;
            }
        }
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Reserve,
    AlmostCover,
    Absorb,
    Verify,
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineStatus {
    Found,
    /// Only ever reported by the exact fallback.
    None,
    Timeout,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub status: PipelineStatus,
    pub failed_phase: Option<Phase>,
    pub detail: String,
    pub rainbow: Option<RainbowMatching>,
    pub reserve_groups: usize,
    pub uncovered_after_cover: usize,
    pub greedy_uncovered: usize,
    pub exchanges: usize,
    /// Every layer satisfies the almost-cover degree condition with slack ξ.
    pub cover_condition: bool,
    pub used_fallback: bool,
}

/// `δ_ℓ(H_i) >= ((k-ℓ)/k - 1/k^{k-ℓ} + ξ) C(n-ℓ, k-ℓ)` for every layer.
pub fn almost_cover_condition(family: &RainbowFamily, l: usize, xi: f64) -> bool {
    let (n, k) = (family.n(), family.k());
    if l >= k || n < k {
        return false;
    }
    let factor = (k - l) as f64 / k as f64 - 1.0 / (k as f64).powi((k - l) as i32) + xi;
    let bound = factor * binomial(n - l, k - l) as f64;
    family
        .layers()
        .iter()
        .all(|h| h.min_degree(l).is_ok_and(|d| d as f64 >= bound))
}

/// Reserve, almost cover of `T - V(reserve)`, absorption of the leftover.
/// A `Found` result has passed the independent rainbow verifier.
pub fn run_absorbing_pipeline(family: &RainbowFamily, params: &PipelineParams) -> Result<PipelineOutcome> {
    params.validate()?;
    let t = build_rainbow_graph(family);
    let l = params.l_for(family.k());
    let mut outcome = PipelineOutcome {
        status: PipelineStatus::Failed,
        failed_phase: None,
        detail: String::new(),
        rainbow: None,
        reserve_groups: 0,
        uncovered_after_cover: 0,
        greedy_uncovered: 0,
        exchanges: 0,
        cover_condition: almost_cover_condition(family, l, params.xi),
        used_fallback: false,
    };
    let attempt = pipeline_attempt(family, &t, l, params, &mut outcome)?;
    match attempt {
        Ok(rainbow) => {
            outcome.status = PipelineStatus::Found;
            outcome.rainbow = Some(rainbow);
            return Ok(outcome);
        }
        Err((phase, detail)) => {
            outcome.failed_phase = Some(phase);
            outcome.detail = detail;
        }
    }
    if family.n() <= params.fallback_n {
        outcome.used_fallback = true;
        let exact = find_rainbow_pm(family, &params.solver);
        outcome.status = match exact.status {
            Status::Found => PipelineStatus::Found,
            Status::None => PipelineStatus::None,
            Status::Timeout => PipelineStatus::Timeout,
        };
        outcome.rainbow = exact.matching;
        if outcome.status != PipelineStatus::Found {
            outcome.failed_phase = Some(Phase::Fallback);
        }
    }
    Ok(outcome)
}

type Attempt = std::result::Result<RainbowMatching, (Phase, String)>;

fn pipeline_attempt(family: &RainbowFamily, t: &ColoredGraph, l: usize, params: &PipelineParams, outcome: &mut PipelineOutcome) -> Result<Attempt> {
    if family.n() == 0 {
        return Ok(Ok(RainbowMatching { edges: Vec::new() }));
    }
    let reserve = build_absorbing_family(t, params)?;
    outcome.reserve_groups = reserve.groups.len();
    let reserved = reserve.vertices();
    let cover = almost_cover_avoiding(t, &reserved, l, params.cover_budget, params.seed ^ 0x9e37_79b9)?;
    outcome.uncovered_after_cover = cover.uncovered.len();
    outcome.greedy_uncovered = cover.greedy_uncovered;
    outcome.exchanges = cover.exchanges;
    if !is_balanced(&cover.uncovered, t.n(), t.k()) {
        return Ok(Err((Phase::AlmostCover, "uncovered set is not balanced".into())));
    }
    let q = match absorb(&reserve, &cover.uncovered, t, params.absorb_cap)? {
        AbsorbResult::Absorbed(q) => q,
        AbsorbResult::Stuck { stuck } => {
            let phase = if reserve.groups.is_empty() && !cover.uncovered.is_empty() {
                Phase::Reserve
            } else {
                Phase::Absorb
            };
            return Ok(Err((
                phase,
                format!(
                    "{} uncovered vertices, {} reserve groups, stuck sets {stuck:?}",
                    cover.uncovered.len(),
                    reserve.groups.len()
                ),
            )));
        }
    };
    let pm = cover.matching.union(&q);
    if let Err(e) = verify::perfect_matching(t.as_hypergraph(), &pm) {
        return Ok(Err((Phase::Verify, e.to_string())));
    }
    let rainbow = rainbow_of_pm(t, &pm)?;
    if let Err(e) = verify::rainbow_perfect_matching(family, &rainbow) {
        return Ok(Err((Phase::Verify, e.to_string())));
    }
    Ok(Ok(rainbow))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::build_t_ext;

    fn complete_t(n: usize, k: usize) -> ColoredGraph {
        build_rainbow_graph(&RainbowFamily::uniform(Hypergraph::complete(n, k)).unwrap())
    }

    #[test]
    fn complete_graph_absorbs_everything() {
        let t = complete_t(6, 3);
        // E = color 0 + {0, 1, 2}; A = color 1 + {3, 4, 5}
        assert!(is_absorber(&[vec![3, 4, 5, 7]], &[0, 1, 2, 6], &t).unwrap());
    }

    #[test]
    fn absorber_contracts() {
        let t = complete_t(6, 3);
        assert!(is_absorber(&[vec![2, 4, 5, 7]], &[0, 1, 2, 6], &t).is_err());
        assert!(is_absorber(&[vec![3, 4, 5, 7]], &[0, 1, 6], &t).is_err());
        assert!(is_absorber(&[vec![3, 4, 5, 6]], &[0, 1, 2, 7], &t).is_ok());
    }

    #[test]
    fn t_ext_has_non_absorbers() {
        // a balanced set of the wrong parity cannot be absorbed by one edge
        let p = crate::extremal::canonical_ext(6, 3, 2).unwrap();
        let t = build_t_ext(6, 3).unwrap();
        let h = t.as_hypergraph();
        let e = (0..h.edge_count())
            .map(|i| h.edge(i))
            .find(|e| !e.contains(&0) && !e.contains(&6))
            .unwrap()
            .to_vec();
        let bad = subsets(6, 3)
            .find(|b| b.contains(&0) && p.a.as_slice().iter().filter(|v| b.contains(v)).count() % 2 != p.parity as usize)
            .unwrap();
        let bad = union_sorted(&[&bad, &[6]]);
        if crate::combinatorics::intersection_len(&bad, &e) == 0 {
            assert!(!is_absorber(&[e], &bad, &t).unwrap());
        }
        assert_eq!(count_absorbers(&bad, &t, 1, 10_000).unwrap().count(), 0);
    }

    #[test]
    fn empty_graph_has_no_absorbers() {
        let t = build_rainbow_graph(&RainbowFamily::uniform(Hypergraph::empty(6, 3)).unwrap());
        assert_eq!(count_absorbers(&[0, 1, 2, 6], &t, 1, 1_000).unwrap().count(), 0);
        assert_eq!(count_absorbers(&[0, 1, 2, 6], &t, 2, 1_000).unwrap().count(), 0);
    }

    #[test]
    fn l_s_examples() {
        let t = complete_t(9, 3);
        assert!(compute_l_s(&t, &Matching::default(), &[0, 1, 9]).unwrap().is_empty());
        let m = Matching::new([vec![2, 3, 4, 10], vec![5, 6, 7, 11]]);
        let l_s = compute_l_s(&t, &m, &[0, 1, 9]).unwrap();
        assert_eq!(l_s, vec![vec![2], vec![3], vec![4], vec![5], vec![6], vec![7]]);
        assert!(compute_l_s(&t, &m, &[0, 2, 9]).is_err());
    }

    #[test]
    fn sampling_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = sample_random_matching(10, 3, 3, &mut rng).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.iter().flatten().all_unique());
        assert!(sample_random_matching(8, 3, 3, &mut rng).is_err());
        let full = intersect_stats(&SetFamily::full(12, 3), 4, 50, 1).unwrap();
        assert!(full.etas.iter().all(|&e| e == 4));
        let none = intersect_stats(&SetFamily::empty(12, 3), 4, 50, 1).unwrap();
        assert!(none.etas.iter().all(|&e| e == 0));
    }

    #[test]
    fn sampling_is_reproducible() {
        let family = SetFamily::random(30, 3, 0.5, &mut ChaCha8Rng::seed_from_u64(1));
        let a = intersect_stats(&family, 10, 1000, 9).unwrap();
        let b = intersect_stats(&family, 10, 1000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reserve_on_complete_graph() {
        let t = complete_t(30, 3);
        let params = PipelineParams {
            gamma: 0.2,
            seed: 5,
            ..PipelineParams::default()
        };
        let reserve = build_absorbing_family(&t, &params).unwrap();
        assert!(!reserve.groups.is_empty());
        assert!(reserve.vertices().len() as f64 <= 0.2 * t.vertex_count() as f64);
        verify::matching(t.as_hypergraph(), &reserve.matching()).unwrap();
        let tiny = PipelineParams {
            gamma: 0.01,
            ..params
        };
        assert!(build_absorbing_family(&t, &tiny).unwrap().groups.is_empty());
    }

    #[test]
    fn absorb_examples() {
        let t = complete_t(30, 3);
        let params = PipelineParams {
            gamma: 0.4,
            seed: 2,
            ..PipelineParams::default()
        };
        let reserve = build_absorbing_family(&t, &params).unwrap();
        assert_eq!(absorb(&reserve, &[], &t, 1000).unwrap(), AbsorbResult::Absorbed(reserve.matching()));
        let used = reserve.vertices();
        let color = (30..40).find(|v| !used.contains(v)).unwrap();
        let bases: Vec<usize> = (0..30).filter(|v| !used.contains(v)).take(3).collect();
        let u = union_sorted(&[&bases, &[color]]);
        match absorb(&reserve, &u, &t, 1000).unwrap() {
            AbsorbResult::Absorbed(q) => {
                let expected = union_sorted(&[&used, &u]);
                assert_eq!(q.vertices(), expected);
            }
            other => panic!("{other:?}"),
        }
        assert!(absorb(&reserve, &bases, &t, 1000).is_err());
    }

    #[test]
    fn almost_cover_on_t_ext_leaves_something() {
        let t = build_t_ext(9, 3).unwrap();
        let report = almost_cover(&t, 2, 100_000, 1).unwrap();
        assert!(!report.uncovered.is_empty());
    }

    #[test]
    fn pipeline_on_complete_layers() {
        let family = RainbowFamily::uniform(Hypergraph::complete(30, 3)).unwrap();
        let out = run_absorbing_pipeline(&family, &PipelineParams::default()).unwrap();
        assert_eq!(out.status, PipelineStatus::Found, "{out:?}");
        verify::rainbow_perfect_matching(&family, out.rainbow.as_ref().unwrap()).unwrap();
    }

    #[test]
    fn pipeline_on_extremal_layers_never_finds() {
        let ext = crate::extremal::canonical_ext(9, 3, 2).unwrap().build();
        let family = RainbowFamily::uniform(ext).unwrap();
        let out = run_absorbing_pipeline(&family, &PipelineParams::default()).unwrap();
        assert_eq!(out.status, PipelineStatus::Failed);
        let with_fallback = PipelineParams {
            fallback_n: 9,
            ..PipelineParams::default()
        };
        let out = run_absorbing_pipeline(&family, &with_fallback).unwrap();
        assert_eq!(out.status, PipelineStatus::None);
    }
}
