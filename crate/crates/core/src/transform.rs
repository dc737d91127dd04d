//! Rainbow families, the (1,k)-graph `T(H_1, ..., H_m)` and the
//! translation between rainbow perfect matchings and perfect matchings of `T`.
//!
//! A colored graph embeds its color vertices as `n, ..., n + m - 1` after the
//! base vertices, so the same solver serves plain and colored instances.

use crate::error::{contract, Error, Result};
use crate::hypergraph::Hypergraph;
use crate::verify;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// `m = n / k` layers on the common vertex set `[0, n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RainbowFamily {
    n: usize,
    k: usize,
    layers: Vec<Hypergraph>,
}

impl RainbowFamily {
    pub fn new(n: usize, k: usize, layers: Vec<Hypergraph>) -> Result<Self> {
        if k == 0 || !n.is_multiple_of(k) {
            return Err(Error::Divisibility(format!("n = {n} is not a multiple of k = {k}")));
        }
        if layers.len() != n / k {
            return Err(Error::Divisibility(format!(
                "expected n/k = {} layers, found {}",
                n / k,
                layers.len()
            )));
        }
        if let Some((i, layer)) = layers.iter().enumerate().find(|(_, l)| l.n() != n || l.k() != k) {
            return Err(contract(format!(
                "layer {i} lives on ({}, {}) instead of ({n}, {k})",
                layer.n(),
                layer.k()
            )));
        }
        Ok(Self { n, k, layers })
    }

    /// `m` copies of the same layer.
    pub fn uniform(layer: Hypergraph) -> Result<Self> {
        let (n, k) = (layer.n(), layer.k());
        let m = n.checked_div(k).unwrap_or(0);
        Self::new(n, k, vec![layer; m])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of layers (colors).
    pub fn m(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Hypergraph] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Hypergraph> {
        self.layers
    }
}

/// An edge of a (1,k)-graph: one color plus a k-subset of base vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColoredEdge {
    pub color: usize,
    pub base: Vec<usize>,
}

/// A (1,k)-graph on `X ∪ V` with `|X| = m`, `|V| = n = k m`.
#[derive(Clone, Debug)]
pub struct ColoredGraph {
    m: usize,
    n: usize,
    k: usize,
    edges: Vec<ColoredEdge>,
    embedded: OnceLock<Hypergraph>,
}

impl PartialEq for ColoredGraph {
    fn eq(&self, other: &Self) -> bool {
        (self.m, self.n, self.k, &self.edges) == (other.m, other.n, other.k, &other.edges)
    }
}

impl Eq for ColoredGraph {}

#[derive(Serialize, Deserialize)]
struct ColoredGraphJson {
    m: usize,
    n: usize,
    edges: Vec<(usize, Vec<usize>)>,
}

impl ColoredGraph {
    pub fn new(n: usize, k: usize, edges: impl IntoIterator<Item = ColoredEdge>) -> Result<Self> {
        if k == 0 || !n.is_multiple_of(k) {
            return Err(Error::Divisibility(format!("n = {n} is not a multiple of k = {k}")));
        }
        let m = n / k;
        let mut edges: Vec<ColoredEdge> = edges
            .into_iter()
            .map(|mut e| {
                e.base.sort_unstable();
                e
            })
            .collect();
        for e in &edges {
            if e.color >= m {
                return Err(Error::VertexOutOfRange { vertex: e.color, n: m });
            }
            if e.base.len() != k || e.base.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::MalformedEdge(e.base.clone()));
            }
            if let Some(&v) = e.base.last() {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].base.clone()));
        }
        Ok(Self {
            m,
            n,
            k,
            edges,
            embedded: OnceLock::new(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `|X ∪ V|`.
    pub fn vertex_count(&self) -> usize {
        self.n + self.m
    }

    pub fn edges(&self) -> &[ColoredEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn color_vertex(&self, color: usize) -> usize {
        self.n + color
    }

    pub fn is_color_vertex(&self, v: usize) -> bool {
        v >= self.n
    }

    /// Splits an embedded (k+1)-edge into color and base part.
    pub fn split(&self, embedded: &[usize]) -> Option<ColoredEdge> {
        let (&last, base) = embedded.split_last()?;
        if last < self.n || base.iter().any(|&v| v >= self.n) {
            return None;
        }
        Some(ColoredEdge {
            color: last - self.n,
            base: base.to_vec(),
        })
    }

    pub fn embed(&self, edge: &ColoredEdge) -> Vec<usize> {
        let mut v = edge.base.clone();
        v.push(self.color_vertex(edge.color));
        v
    }

    /// The (k+1)-uniform hypergraph on `n + m` vertices with colors last.
    pub fn as_hypergraph(&self) -> &Hypergraph {
        self.embedded.get_or_init(|| {
            let mut rows: Vec<Vec<usize>> = self.edges.iter().map(|e| self.embed(e)).collect();
            rows.sort_unstable();
            Hypergraph::from_flat(self.n + self.m, self.k + 1, rows.concat())
        })
    }

    pub fn contains(&self, edge: &ColoredEdge) -> bool {
        self.edges.binary_search(edge).is_ok()
    }

    /// `{m, n, edges: [[color, [v, ...]], ...]}`.
    pub fn to_json(&self) -> String {
        let json = ColoredGraphJson {
            m: self.m,
            n: self.n,
            edges: self.edges.iter().map(|e| (e.color, e.base.clone())).collect(),
        };
        serde_json::to_string(&json).expect("colored graph serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: ColoredGraphJson = serde_json::from_str(text)?;
        if json.m == 0 {
            return Self::new(json.n, json.n.max(1), Vec::new());
        }
        let k = json.n / json.m;
        let g = Self::new(
            json.n,
            k,
            json.edges.into_iter().map(|(color, base)| ColoredEdge { color, base }),
        )?;
        if g.m != json.m {
            return Err(contract("m does not match n / k"));
        }
        Ok(g)
    }
}

/// A set of pairwise disjoint edges, each sorted, kept in sorted order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    edges: Vec<Vec<usize>>,
}

impl Matching {
    pub fn new(edges: impl IntoIterator<Item = Vec<usize>>) -> Self {
        let mut edges: Vec<Vec<usize>> = edges
            .into_iter()
            .map(|mut e| {
                e.sort_unstable();
                e
            })
            .collect();
        edges.sort_unstable();
        Self { edges }
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// All covered vertices, sorted.
    pub fn vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.edges.iter().flatten().copied().collect();
        vs.sort_unstable();
        vs
    }

    /// `M ∪ other`; the caller guarantees disjointness.
    pub fn union(&self, other: &Matching) -> Matching {
        Matching::new(self.edges.iter().chain(other.edges.iter()).cloned())
    }

    /// Maps every vertex through `map` (e.g. back from a restriction).
    pub fn relabel(&self, map: &[usize]) -> Matching {
        Matching::new(self.edges.iter().map(|e| e.iter().map(|&v| map[v]).collect()))
    }

    /// One edge per line, vertices separated by single spaces.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let row: Vec<String> = e.iter().map(ToString::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// `E_1 ∈ H_1, ..., E_m ∈ H_m`, indexed by layer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RainbowMatching {
    pub edges: Vec<Vec<usize>>,
}

/// `T(H_1, ..., H_m) = ⋃_i { {x_i} ∪ E : E ∈ H_i }` with colors `0..m`.
pub fn build_rainbow_graph(family: &RainbowFamily) -> ColoredGraph {
    let edges = family.layers().iter().enumerate().flat_map(|(color, layer)| {
        layer.edges().map(move |e| ColoredEdge {
            color,
            base: e.to_vec(),
        })
    });
    ColoredGraph::new(family.n(), family.k(), edges).expect("a well-formed family yields a well-formed graph")
}

/// `k |U ∩ X| = |U ∩ V|` for `U` in embedded labels (colors are `>= n`).
pub fn is_balanced(u: &[usize], n: usize, k: usize) -> bool {
    let colors = u.iter().filter(|&&v| v >= n).count();
    k * colors == u.len() - colors
}

/// Translates a perfect matching of `T` into a rainbow perfect matching.
pub fn rainbow_of_pm(graph: &ColoredGraph, pm: &Matching) -> Result<RainbowMatching> {
    verify::perfect_matching(graph.as_hypergraph(), pm)?;
    let mut edges = vec![Vec::new(); graph.m()];
    for e in pm.edges() {
        let colored = graph
            .split(e)
            .ok_or_else(|| contract(format!("edge {e:?} is not a (1,k)-edge")))?;
        edges[colored.color] = colored.base;
    }
    Ok(RainbowMatching { edges })
}

/// Translates a rainbow perfect matching into a perfect matching of `T(F)`.
pub fn pm_of_rainbow(family: &RainbowFamily, rainbow: &RainbowMatching) -> Result<Matching> {
    verify::rainbow_perfect_matching(family, rainbow)?;
    let n = family.n();
    Ok(Matching::new(rainbow.edges.iter().enumerate().map(|(color, e)| {
        let mut v = e.clone();
        v.push(n + color);
        v
    })))
}
