//! Distance to `T_ext`, α-goodness of vertices and the residual parity check.

use crate::combinatorics::{binomial, subsets};
use crate::error::{contract, Error, Result};
use crate::extremal::{admissible_by_balance, is_ext_admissible, VertexPartition};
use crate::hypergraph::{Hypergraph, VertexSubset};
use crate::scalar::Scalar;
use crate::transform::ColoredGraph;
use crate::WideRational;
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact mode refuses vertex counts above this.
pub const MAX_EXACT_N: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Every `A` of an admissible size.
    Exact,
    /// Random `A`s followed by a vertex-swap descent from the best one.
    Sampled { samples: usize, seed: u64 },
}

impl SearchMode {
    pub fn sampled(seed: u64) -> Self {
        SearchMode::Sampled { samples: 10_000, seed }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosenessReport {
    /// `|T_ext \ T| + |T \ T_ext|` for the witness.
    pub edits: u64,
    /// `|X ∪ V|^(k+1)`.
    pub normaliser: u128,
    pub witness: VertexPartition,
    pub exact: bool,
}

impl ClosenessReport {
    pub fn epsilon_exact(&self) -> WideRational {
        WideRational::new(self.edits as i128, self.normaliser.max(1) as i128)
    }

    pub fn epsilon<S: Scalar>(&self) -> S {
        S::from_count(self.edits) / Self::as_scalar::<S>(self.normaliser.max(1))
    }

    fn as_scalar<S: Scalar>(value: u128) -> S {
        // builds the value from 2^31-sized limbs so both floats and rationals work
        let limb = S::from_count(1 << 31);
        let mut acc = S::from_count(0);
        let mut digits = Vec::new();
        let mut v = value;
        while v > 0 {
            digits.push((v & ((1 << 31) - 1)) as u64);
            v >>= 31;
        }
        for d in digits.into_iter().rev() {
            acc = acc * limb.clone() + S::from_count(d);
        }
        acc
    }

    /// `ε`-closeness holds for the caller's `ε`.
    pub fn is_close<S: Scalar>(&self, epsilon: &S) -> bool {
        self.epsilon::<S>() <= *epsilon
    }
}

struct EditCounter {
    n: usize,
    k: usize,
    m: usize,
    words: usize,
    /// base-vertex bitmask of each colored edge
    bases: Vec<Vec<u64>>,
}

impl EditCounter {
    fn new(t: &ColoredGraph) -> Self {
        let words = t.n().div_ceil(64).max(1);
        let bases = t
            .edges()
            .iter()
            .map(|e| {
                let mut w = vec![0u64; words];
                for &v in &e.base {
                    w[v / 64] |= 1 << (v % 64);
                }
                w
            })
            .collect();
        Self {
            n: t.n(),
            k: t.k(),
            m: t.m(),
            words,
            bases,
        }
    }

    fn mask(&self, a: &[usize]) -> Vec<u64> {
        let mut w = vec![0u64; self.words];
        for &v in a {
            w[v / 64] |= 1 << (v % 64);
        }
        w
    }

    fn edits(&self, a_mask: &[u64], a_size: usize, parity: u8) -> u64 {
        let shared = self
            .bases
            .iter()
            .filter(|b| {
                let inside: u32 = b.iter().zip(a_mask).map(|(x, y)| (x & y).count_ones()).sum();
                inside % 2 == parity as u32
            })
            .count() as u64;
        let reference = self.m as u64 * crate::extremal::parity_edge_count(self.n, self.k, a_size, parity);
        self.bases.len() as u64 + reference - 2 * shared
    }
}

/// Minimum symmetric difference between `T` and `T(H^i(A,B), ...)` over
/// labelled candidate partitions of the most balanced admissible sizes.
pub fn closeness_to_ext(t: &ColoredGraph, mode: SearchMode) -> Result<ClosenessReport> {
    let (n, k) = (t.n(), t.k());
    if n == 0 {
        return Err(contract("closeness needs a non-empty vertex set"));
    }
    let counter = EditCounter::new(t);
    let sizes = admissible_by_balance(n, k);
    let normaliser = (t.vertex_count() as u128).pow(k as u32 + 1);
    let (edits, a, parity) = match mode {
        SearchMode::Exact => {
            if n > MAX_EXACT_N {
                return Err(Error::Resource {
                    what: format!("exact closeness over all partitions of {n} vertices"),
                    partial: "none".into(),
                });
            }
            let candidates: Vec<(Vec<usize>, u8)> = sizes
                .iter()
                .flat_map(|&(size, i)| subsets(n, size).map(move |a| (a, i)))
                .collect();
            candidates
                .par_iter()
                .map(|(a, i)| (counter.edits(&counter.mask(a), a.len(), *i), a.clone(), *i))
                .min_by(|x, y| x.0.cmp(&y.0).then_with(|| (x.2, &x.1).cmp(&(y.2, &y.1))))
                .expect("at least one admissible candidate")
        }
        SearchMode::Sampled { samples, seed } => sampled_search(&counter, &sizes, samples, seed),
    };
    Ok(ClosenessReport {
        edits,
        normaliser,
        witness: VertexPartition::new(n, k, VertexSubset::new(a), parity)?,
        exact: matches!(mode, SearchMode::Exact),
    })
}

fn sampled_search(counter: &EditCounter, sizes: &[(usize, u8)], samples: usize, seed: u64) -> (u64, Vec<usize>, u8) {
    let n = counter.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices: Vec<usize> = (0..n).collect();
    let mut best: Option<(u64, Vec<usize>, u8)> = None;
    for _ in 0..samples.max(1) {
        let (size, i) = sizes[rng.gen_range(0..sizes.len())];
        vertices.shuffle(&mut rng);
        let mut a = vertices[..size].to_vec();
        a.sort_unstable();
        let e = counter.edits(&counter.mask(&a), size, i);
        if best.as_ref().is_none_or(|b| e < b.0) {
            best = Some((e, a, i));
        }
    }
    let (mut edits, mut a, parity) = best.expect("at least one sample");
    // first-improvement swap descent keeping |A| fixed
    'descent: loop {
        let b: Vec<usize> = (0..n).filter(|v| a.binary_search(v).is_err()).collect();
        for ai in 0..a.len() {
            for &bv in &b {
                let mut next = a.clone();
                next[ai] = bv;
                next.sort_unstable();
                let e = counter.edits(&counter.mask(&next), next.len(), parity);
                if e < edits {
                    edits = e;
                    a = next;
                    continue 'descent;
                }
            }
        }
        break;
    }
    (edits, a, parity)
}

/// The `limit` partitions of the most balanced admissible sizes with the
/// fewest edits, best first. Exhaustive, so limited to [`MAX_EXACT_N`].
pub fn ranked_witnesses(t: &ColoredGraph, limit: usize) -> Result<Vec<(u64, VertexPartition)>> {
    let (n, k) = (t.n(), t.k());
    if n == 0 || n > MAX_EXACT_N {
        return Err(Error::Resource {
            what: format!("ranking all partitions of {n} vertices"),
            partial: "none".into(),
        });
    }
    let counter = EditCounter::new(t);
    let mut scored: Vec<(u64, u8, Vec<usize>)> = admissible_by_balance(n, k)
        .into_iter()
        .flat_map(|(size, i)| subsets(n, size).map(move |a| (a, i)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(a, i)| (counter.edits(&counter.mask(&a), a.len(), i), i, a))
        .collect();
    scored.sort_unstable();
    scored
        .into_iter()
        .take(limit)
        .map(|(e, i, a)| Ok((e, VertexPartition::new(n, k, VertexSubset::new(a), i)?)))
        .collect()
}

/// Closeness of `t` to `T(H^i(A,B), ...)` for one fixed partition.
pub fn edits_against(t: &ColoredGraph, partition: &VertexPartition) -> u64 {
    let counter = EditCounter::new(t);
    counter.edits(&counter.mask(partition.a.as_slice()), partition.a.len(), partition.parity)
}

/// Which vertices of `q` are not α-good with respect to `reference`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport<S> {
    pub alpha: S,
    /// Vertices with `deg_{Q' \ Q}(x) > α C(|V| - 1, r - 1)`.
    pub bad: Vec<usize>,
    /// `deg_{Q' \ Q}(x)` for every vertex.
    pub missing_degree: Vec<u64>,
    pub reference: String,
}

/// `deg_{Q' \ Q}(x)` for every `x`.
pub fn missing_degrees(q: &Hypergraph, reference: &Hypergraph) -> Result<Vec<u64>> {
    if q.n() != reference.n() || q.k() != reference.k() {
        return Err(contract(format!(
            "graphs live on ({}, {}) and ({}, {})",
            q.n(),
            q.k(),
            reference.n(),
            reference.k()
        )));
    }
    let mut deg = vec![0u64; q.n()];
    for e in reference.edges().filter(|e| !q.contains_edge(e)) {
        for &v in e {
            deg[v] += 1;
        }
    }
    Ok(deg)
}

pub fn good_vertices<S: Scalar>(q: &Hypergraph, reference: &Hypergraph, alpha: S) -> Result<GoodnessReport<S>> {
    let missing = missing_degrees(q, reference)?;
    let scale = S::from_count(binomial(q.n().saturating_sub(1), q.k() - 1));
    let limit = alpha.clone() * scale;
    let bad = missing
        .iter()
        .enumerate()
        .filter(|(_, &d)| S::from_count(d) > limit)
        .map(|(v, _)| v)
        .collect();
    Ok(GoodnessReport {
        alpha,
        bad,
        missing_degree: missing,
        reference: format!("{}-graph on {} vertices with {} edges", reference.k(), reference.n(), reference.edge_count()),
    })
}

/// `ε' = sqrt(r^r ε)`.
pub fn census_alpha<S: Float>(r: usize, epsilon: S) -> S {
    (S::from(r).unwrap().powi(r as i32) * epsilon).sqrt()
}

/// `ε = |Q Δ Q'| / |V|^r`, the smallest ε for which `q` is ε-close to `reference`.
pub fn closeness_between<S: Scalar>(q: &Hypergraph, reference: &Hypergraph) -> S {
    let edits = q.symmetric_difference_len(reference) as u64;
    let norm = (q.n() as u64).pow(q.k() as u32).max(1);
    S::from_count(edits) / S::from_count(norm)
}

/// The goodness parameter a vertex keeps after restricting `n` vertices to
/// `u` of them: `α' C(n-1, r-1) / C(u-1, r-1)`.
pub fn inherited_alpha<S: Scalar>(alpha: S, n: usize, u: usize, r: usize) -> S {
    alpha * S::from_count(binomial(n - 1, r - 1)) / S::from_count(binomial(u.saturating_sub(1), r - 1).max(1))
}

/// `i |X'| ≡ |A'| (mod 2)`.
pub fn check_parity(a_size: usize, x_size: usize, parity: u8) -> bool {
    (parity as usize * x_size) % 2 == a_size % 2
}

/// Whether a residual with these sizes could still sit inside `ext`.
pub fn residual_in_ext(n: usize, k: usize, a_size: usize, parity: u8) -> bool {
    is_ext_admissible(n, k, a_size, parity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::{build_t_ext, canonical_ext};
    use crate::transform::{build_rainbow_graph, ColoredEdge, RainbowFamily};

    #[test]
    fn t_ext_is_zero_close() {
        let t = build_t_ext(6, 3).unwrap();
        let report = closeness_to_ext(&t, SearchMode::Exact).unwrap();
        assert_eq!(report.edits, 0);
        assert_eq!(report.epsilon::<f64>(), 0.0);
        let sampled = closeness_to_ext(&t, SearchMode::sampled(1)).unwrap();
        assert_eq!(sampled.edits, 0);
    }

    #[test]
    fn one_deleted_edge_is_one_edit() {
        let t = build_t_ext(6, 3).unwrap();
        let kept: Vec<ColoredEdge> = t.edges()[1..].to_vec();
        let t = ColoredGraph::new(6, 3, kept).unwrap();
        assert_eq!(closeness_to_ext(&t, SearchMode::Exact).unwrap().edits, 1);
    }

    #[test]
    fn complete_layers_are_twenty_edits_away() {
        let t = build_rainbow_graph(&RainbowFamily::uniform(Hypergraph::complete(6, 3)).unwrap());
        let report = closeness_to_ext(&t, SearchMode::Exact).unwrap();
        assert_eq!(report.edits, 20);
        assert_eq!(report.normaliser, 8u128.pow(4));
        assert_eq!(report.epsilon_exact(), WideRational::new(20, 4096));
        assert_eq!(report.epsilon::<crate::Rational>(), crate::Rational::new(20, 4096));
        let ext = canonical_ext(6, 3, 2).unwrap();
        assert_eq!(edits_against(&t, &ext), 20);
    }

    #[test]
    fn goodness_examples() {
        let q = Hypergraph::complete(6, 3);
        assert!(good_vertices(&q, &q, 0.0).unwrap().bad.is_empty());
        let report = good_vertices(&Hypergraph::empty(6, 3), &q, 0.0).unwrap();
        assert_eq!(report.bad, (0..6).collect::<Vec<_>>());
        assert!(good_vertices(&Hypergraph::empty(5, 3), &q, 0.0).is_err());
    }

    #[test]
    fn census_alpha_value() {
        assert_eq!(census_alpha(2, 1.0 / 16.0), 0.5);
    }

    #[test]
    fn parity_examples() {
        assert!(check_parity(4, 3, 0));
        assert!(!check_parity(5, 3, 0));
        assert!(check_parity(5, 3, 1));
        assert!(!check_parity(4, 3, 1));
    }
}
