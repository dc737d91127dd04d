//! k-uniform hypergraphs on `[0, n)`, vertex subsets, link graphs and degrees.

use crate::combinatorics::{binomial, colex_rank, is_subset, subsets};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

/// Largest degree table [`Hypergraph::degree_table`] will allocate.
const MAX_DEGREE_TABLE: u64 = 1 << 26;

/// A sorted set of distinct vertex indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexSubset(Vec<usize>);

impl VertexSubset {
    /// Sorts and deduplicates.
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Self(members)
    }

    /// `{0, 1, ..., size - 1}`.
    pub fn prefix(size: usize) -> Self {
        Self((0..size).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// `[0, n) \ self`.
    pub fn complement(&self, n: usize) -> Self {
        Self((0..n).filter(|v| !self.contains(*v)).collect())
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&v) if v >= n => Err(Error::VertexOutOfRange { vertex: v, n }),
            _ => Ok(()),
        }
    }

    /// Membership bitmap over `[0, n)`.
    pub fn indicator(&self, n: usize) -> Vec<bool> {
        let mut flags = vec![false; n];
        for &v in &self.0 {
            flags[v] = true;
        }
        flags
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for VertexSubset {
    fn from(members: Vec<usize>) -> Self {
        Self::new(members)
    }
}

impl FromIterator<usize> for VertexSubset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// A k-uniform hypergraph on `[0, n)`.
///
/// Edges are strictly increasing k-tuples kept in lexicographic order in one
/// flat buffer. The per-vertex incidence index and the `u64` edge masks
/// (only for `n <= 64`) are built on first use and shared across threads.
pub struct Hypergraph {
    n: usize,
    k: usize,
    verts: Vec<usize>,
    incidence: OnceLock<Vec<Vec<usize>>>,
    masks: OnceLock<Option<Vec<u64>>>,
}

impl Hypergraph {
    /// Builds a hypergraph, normalising each edge to increasing order.
    /// Rejects wrong arity, repeated vertices, out-of-range vertices and
    /// duplicate edges.
    pub fn new<E, I>(n: usize, k: usize, edges: I) -> Result<Self>
    where
        E: AsRef<[usize]>,
        I: IntoIterator<Item = E>,
    {
        if k < 1 {
            return Err(Error::InvalidArity(format!("uniformity must be positive, got {k}")));
        }
        let mut rows: Vec<Vec<usize>> = Vec::new();
        for edge in edges {
            let mut e = edge.as_ref().to_vec();
            if e.len() != k {
                return Err(Error::MalformedEdge(e));
            }
            e.sort_unstable();
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::MalformedEdge(e));
            }
            if let Some(&v) = e.last() {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            rows.push(e);
        }
        rows.sort_unstable();
        if let Some(w) = rows.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].clone()));
        }
        Ok(Self::from_flat(n, k, rows.concat()))
    }

    /// Trusted constructor: `verts` must already be canonical.
    pub(crate) fn from_flat(n: usize, k: usize, verts: Vec<usize>) -> Self {
        debug_assert!(k > 0 && verts.len().is_multiple_of(k));
        Self {
            n,
            k,
            verts,
            incidence: OnceLock::new(),
            masks: OnceLock::new(),
        }
    }

    /// Collects edges accepted by `keep` from all k-subsets, in lexicographic order.
    pub fn from_predicate(n: usize, k: usize, mut keep: impl FnMut(&[usize]) -> bool) -> Self {
        let mut verts = Vec::new();
        for e in subsets(n, k) {
            if keep(&e) {
                verts.extend_from_slice(&e);
            }
        }
        Self::from_flat(n, k, verts)
    }

    pub fn empty(n: usize, k: usize) -> Self {
        Self::from_flat(n, k, Vec::new())
    }

    pub fn complete(n: usize, k: usize) -> Self {
        Self::from_predicate(n, k, |_| true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.verts.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn edge(&self, index: usize) -> &[usize] {
        &self.verts[index * self.k..(index + 1) * self.k]
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.verts.chunks_exact(self.k)
    }

    /// Position of `edge` (sorted) in the canonical order.
    pub fn position(&self, edge: &[usize]) -> Option<usize> {
        if edge.len() != self.k {
            return None;
        }
        let (mut lo, mut hi) = (0, self.edge_count());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.edge(mid).cmp(edge) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Membership test; `edge` must be sorted.
    pub fn contains_edge(&self, edge: &[usize]) -> bool {
        self.position(edge).is_some()
    }

    /// Indices of the edges containing `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incidence_index()[v]
    }

    fn incidence_index(&self) -> &Vec<Vec<usize>> {
        self.incidence.get_or_init(|| {
            let mut index = vec![Vec::new(); self.n];
            for (i, e) in self.edges().enumerate() {
                for &v in e {
                    index[v].push(i);
                }
            }
            index
        })
    }

    /// One `u64` per edge with bit `v` set for each vertex; `None` when `n > 64`.
    pub fn edge_masks(&self) -> Option<&[u64]> {
        self.masks
            .get_or_init(|| {
                (self.n <= 64).then(|| self.edges().map(mask_of).collect())
            })
            .as_deref()
    }

    fn check_subset(&self, s: &[usize]) -> Result<()> {
        if s.len() >= self.k {
            return Err(Error::InvalidArity(format!(
                "|S| = {} must be below k = {}",
                s.len(),
                self.k
            )));
        }
        if s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedEdge(s.to_vec()));
        }
        match s.last() {
            Some(&v) if v >= self.n => Err(Error::VertexOutOfRange { vertex: v, n: self.n }),
            _ => Ok(()),
        }
    }

    /// `N(S) = { e \ S : S ⊆ e ∈ H }`, in the order of the parent edges.
    pub fn link_graph(&self, s: &[usize]) -> Result<Vec<Vec<usize>>> {
        self.check_subset(s)?;
        let strip = |e: &[usize]| e.iter().copied().filter(|v| s.binary_search(v).is_err()).collect();
        Ok(match s.first() {
            None => self.edges().map(|e| e.to_vec()).collect(),
            Some(&pivot) => self
                .incident(pivot)
                .iter()
                .map(|&i| self.edge(i))
                .filter(|e| is_subset(s, e))
                .map(strip)
                .collect(),
        })
    }

    /// `deg(S)` through the incidence index.
    pub fn degree(&self, s: &[usize]) -> Result<u64> {
        self.check_subset(s)?;
        Ok(match s.first() {
            None => self.edge_count() as u64,
            Some(&pivot) => self
                .incident(pivot)
                .iter()
                .filter(|&&i| is_subset(s, self.edge(i)))
                .count() as u64,
        })
    }

    /// `deg(S)` by scanning every edge.
    pub fn degree_by_scan(&self, s: &[usize]) -> u64 {
        self.edges().filter(|e| is_subset(s, e)).count() as u64
    }

    /// `deg(S)` for every ℓ-subset `S`, indexed by colex rank.
    pub fn degree_table(&self, l: usize) -> Result<Vec<u64>> {
        if l >= self.k {
            return Err(Error::InvalidArity(format!("ℓ = {l} must be below k = {}", self.k)));
        }
        let size = binomial(self.n, l);
        if size > MAX_DEGREE_TABLE {
            return Err(Error::Resource {
                what: format!("degree table C({}, {l})", self.n),
                partial: "none".into(),
            });
        }
        let mut table = vec![0u64; size as usize];
        for e in self.edges() {
            for pos in itertools::Itertools::combinations(0..self.k, l) {
                let sub: Vec<usize> = pos.iter().map(|&p| e[p]).collect();
                table[colex_rank(&sub)] += 1;
            }
        }
        Ok(table)
    }

    /// `δ_ℓ(H)`; `δ_0(H) = |H|`. Zero when there is no ℓ-subset at all.
    pub fn min_degree(&self, l: usize) -> Result<u64> {
        Ok(self.degree_table(l)?.into_iter().min().unwrap_or(0))
    }

    /// `H[A]` relabelled onto `[0, |A|)`, with the map new label → old label.
    pub fn restrict(&self, a: &VertexSubset) -> Result<(Hypergraph, Vec<usize>)> {
        a.check_within(self.n)?;
        let mut relabel = vec![usize::MAX; self.n];
        for (new, &old) in a.as_slice().iter().enumerate() {
            relabel[old] = new;
        }
        let mut verts = Vec::new();
        for e in self.edges() {
            if e.iter().all(|&v| relabel[v] != usize::MAX) {
                verts.extend(e.iter().map(|&v| relabel[v]));
            }
        }
        // order-preserving relabelling keeps the lexicographic order
        Ok((Self::from_flat(a.len(), self.k, verts), a.as_slice().to_vec()))
    }

    /// `H - A = H[V \ A]`.
    pub fn remove(&self, a: &VertexSubset) -> Result<(Hypergraph, Vec<usize>)> {
        a.check_within(self.n)?;
        self.restrict(&a.complement(self.n))
    }

    /// `(V choose k) \ H`.
    pub fn complement(&self) -> Hypergraph {
        let mut cursor = 0;
        Self::from_predicate(self.n, self.k, |e| {
            if cursor < self.edge_count() && self.edge(cursor) == e {
                cursor += 1;
                false
            } else {
                true
            }
        })
    }

    /// Same vertex set and uniformity, edges `H ∪ extra`.
    pub fn with_edges<E: AsRef<[usize]>>(&self, extra: impl IntoIterator<Item = E>) -> Result<Hypergraph> {
        let mut all: Vec<Vec<usize>> = self.edges().map(<[usize]>::to_vec).collect();
        for e in extra {
            let mut e = e.as_ref().to_vec();
            e.sort_unstable();
            if !self.contains_edge(&e) {
                all.push(e);
            }
        }
        all.sort_unstable();
        all.dedup();
        Hypergraph::new(self.n, self.k, all)
    }

    /// Symmetric difference size with another hypergraph on the same vertices.
    pub fn symmetric_difference_len(&self, other: &Hypergraph) -> usize {
        let (mut i, mut j, mut shared) = (0, 0, 0);
        while i < self.edge_count() && j < other.edge_count() {
            match self.edge(i).cmp(other.edge(j)) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        self.edge_count() + other.edge_count() - 2 * shared
    }
}

/// Bitmask of a vertex slice; every vertex must be below 64.
pub fn mask_of(vertices: &[usize]) -> u64 {
    vertices.iter().fold(0u64, |m, &v| m | (1u64 << v))
}

impl Clone for Hypergraph {
    fn clone(&self) -> Self {
        Self::from_flat(self.n, self.k, self.verts.clone())
    }
}

impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.verts == other.verts
    }
}

impl Eq for Hypergraph {}

impl fmt::Debug for Hypergraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hypergraph")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h0_4_2() -> Hypergraph {
        // H^0(A, B) for n = 4, k = 2, A = {0, 1}
        Hypergraph::new(4, 2, [[0, 1], [2, 3]]).unwrap()
    }

    #[test]
    fn construction_normalises_and_validates() {
        let h = Hypergraph::new(5, 3, [vec![4, 0, 2], vec![1, 0, 3]]).unwrap();
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![&[0, 1, 3][..], &[0, 2, 4][..]]);
        assert!(matches!(Hypergraph::new(5, 3, [[0, 0, 1]]), Err(Error::MalformedEdge(_))));
        assert!(matches!(Hypergraph::new(5, 3, [[0, 1]]), Err(Error::MalformedEdge(_))));
        assert!(matches!(
            Hypergraph::new(5, 3, [[0, 1, 5]]),
            Err(Error::VertexOutOfRange { vertex: 5, n: 5 })
        ));
        assert!(matches!(
            Hypergraph::new(5, 3, [[0, 1, 2], [2, 1, 0]]),
            Err(Error::DuplicateEdge(_))
        ));
    }

    #[test]
    fn link_graph_examples() {
        let complete = Hypergraph::complete(9, 3);
        assert_eq!(complete.link_graph(&[2, 5]).unwrap().len(), 7);
        assert!(Hypergraph::empty(9, 3).link_graph(&[1]).unwrap().is_empty());
        let h = h0_4_2();
        assert_eq!(h.link_graph(&[0]).unwrap(), vec![vec![1]]);
        assert_eq!(h.degree(&[0]).unwrap(), 1);
        assert!(matches!(h.link_graph(&[0, 1]), Err(Error::InvalidArity(_))));
        assert!(matches!(h.link_graph(&[7]), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn min_degree_examples() {
        let h = h0_4_2();
        assert_eq!(h.min_degree(0).unwrap(), 2);
        assert_eq!(h.min_degree(1).unwrap(), 1);
        // H^0(A, B), n = 6, k = 3, A = {0, 1, 2}
        let a = VertexSubset::prefix(3);
        let h = Hypergraph::from_predicate(6, 3, |e| e.iter().filter(|v| a.contains(**v)).count() % 2 == 0);
        assert_eq!(h.edge_count(), 10);
        assert_eq!(h.min_degree(2).unwrap(), 1);
        assert!(matches!(h.min_degree(3), Err(Error::InvalidArity(_))));
    }

    #[test]
    fn restrict_remove_complement() {
        let h = Hypergraph::complete(6, 3);
        let (sub, map) = h.restrict(&VertexSubset::new([1, 2, 4, 5])).unwrap();
        assert_eq!(sub.edge_count(), 4);
        assert_eq!(map, vec![1, 2, 4, 5]);
        assert_eq!(h.restrict(&VertexSubset::prefix(6)).unwrap().0, h);
        assert_eq!(h.remove(&VertexSubset::default()).unwrap().0, h);
        assert!(h.complement().is_empty());
        assert_eq!(Hypergraph::empty(6, 3).complement(), h);
        assert_eq!(h0_4_2().complement().edge_count(), 4);
    }

    #[test]
    fn masks_only_for_small_n() {
        let h = h0_4_2();
        assert_eq!(h.edge_masks().unwrap(), &[0b0011, 0b1100]);
        let big = Hypergraph::new(70, 2, [[0, 69]]).unwrap();
        assert!(big.edge_masks().is_none());
    }
}
