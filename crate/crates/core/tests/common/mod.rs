//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's search code.
#![allow(dead_code)]

use rainbow_core::{Hypergraph, RainbowFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn edge_list(h: &Hypergraph) -> Vec<Vec<usize>> {
    h.edges().map(<[usize]>::to_vec).collect()
}

/// All r-subsets of `0..n`, lexicographic.
pub fn all_subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            if n - v < r - cur.len() {
                break;
            }
            cur.push(v);
            go(v + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut out);
    out
}

pub fn binom(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    (0..r).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Number of edges containing `s`, by scanning.
pub fn degree(edges: &[Vec<usize>], s: &[usize]) -> u64 {
    edges.iter().filter(|e| s.iter().all(|v| e.contains(v))).count() as u64
}

pub fn min_degree(n: usize, edges: &[Vec<usize>], l: usize) -> u64 {
    all_subsets(n, l).iter().map(|s| degree(edges, s)).min().unwrap_or(0)
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|v| !b.contains(v))
}

/// Number of perfect matchings, always matching the smallest free vertex.
pub fn count_pm(n: usize, edges: &[Vec<usize>]) -> u64 {
    fn go(free: &mut Vec<bool>, edges: &[Vec<usize>]) -> u64 {
        let Some(v) = free.iter().position(|f| *f) else {
            return 1;
        };
        let mut total = 0;
        for e in edges {
            if !e.contains(&v) || !e.iter().all(|&w| free[w]) {
                continue;
            }
            for &w in e {
                free[w] = false;
            }
            total += go(free, edges);
            for &w in e {
                free[w] = true;
            }
        }
        total
    }
    go(&mut vec![true; n], edges)
}

/// Size of a largest matching by trying every edge subset order.
pub fn max_matching(edges: &[Vec<usize>]) -> usize {
    fn go(idx: usize, edges: &[Vec<usize>], used: &mut Vec<Vec<usize>>) -> usize {
        if idx == edges.len() {
            return used.len();
        }
        let mut best = go(idx + 1, edges, used);
        if used.iter().all(|u| disjoint(u, &edges[idx])) {
            used.push(edges[idx].clone());
            best = best.max(go(idx + 1, edges, used));
            used.pop();
        }
        best
    }
    go(0, edges, &mut Vec::new())
}

/// Whether some choice of one edge per layer covers `0..n`.
pub fn has_rainbow(n: usize, layers: &[Vec<Vec<usize>>]) -> bool {
    fn go(i: usize, layers: &[Vec<Vec<usize>>], covered: &mut Vec<bool>) -> bool {
        if i == layers.len() {
            return covered.iter().all(|c| *c);
        }
        for e in &layers[i] {
            if e.iter().all(|&v| !covered[v]) {
                for &v in e {
                    covered[v] = true;
                }
                let ok = go(i + 1, layers, covered);
                for &v in e {
                    covered[v] = false;
                }
                if ok {
                    return true;
                }
            }
        }
        false
    }
    go(0, layers, &mut vec![false; n])
}

pub fn layers_of(family: &RainbowFamily) -> Vec<Vec<Vec<usize>>> {
    family.layers().iter().map(edge_list).collect()
}

/// Independent check of a rainbow perfect matching.
pub fn is_rainbow_pm(family: &RainbowFamily, edges: &[Vec<usize>]) -> bool {
    if edges.len() != family.m() {
        return false;
    }
    let mut seen = vec![false; family.n()];
    for (i, e) in edges.iter().enumerate() {
        if e.len() != family.k() || !family.layers()[i].edges().any(|f| f == e.as_slice()) {
            return false;
        }
        for &v in e {
            if v >= family.n() || seen[v] {
                return false;
            }
            seen[v] = true;
        }
    }
    seen.iter().all(|s| *s)
}

/// Edges of `H^i(A, B)` by direct filtering.
pub fn parity_edges(n: usize, k: usize, a: &[usize], i: usize) -> Vec<Vec<usize>> {
    all_subsets(n, k)
        .into_iter()
        .filter(|e| e.iter().filter(|v| a.contains(v)).count() % 2 == i)
        .collect()
}

pub fn random_graph<R: Rng>(n: usize, k: usize, p: f64, rng: &mut R) -> Hypergraph {
    Hypergraph::new(n, k, all_subsets(n, k).into_iter().filter(|_| rng.gen_bool(p))).unwrap()
}

pub fn random_family<R: Rng>(n: usize, k: usize, p: f64, rng: &mut R) -> RainbowFamily {
    let layers = (0..n / k).map(|_| random_graph(n, k, p, rng)).collect();
    RainbowFamily::new(n, k, layers).unwrap()
}
