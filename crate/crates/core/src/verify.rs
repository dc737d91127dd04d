//! Independent matching checkers. Nothing here touches the solver.

use crate::error::{contract, Result};
use crate::hypergraph::Hypergraph;
use crate::transform::{Matching, RainbowFamily, RainbowMatching};

/// Every edge belongs to `h` and the edges are pairwise disjoint.
pub fn matching(h: &Hypergraph, m: &Matching) -> Result<()> {
    let mut seen = vec![false; h.n()];
    for e in m.edges() {
        if !h.contains_edge(e) {
            return Err(contract(format!("{e:?} is not an edge")));
        }
        for &v in e {
            if std::mem::replace(&mut seen[v], true) {
                return Err(contract(format!("vertex {v} covered twice")));
            }
        }
    }
    Ok(())
}

/// A matching covering every vertex of `h`.
pub fn perfect_matching(h: &Hypergraph, m: &Matching) -> Result<()> {
    matching(h, m)?;
    let covered: usize = m.edges().iter().map(Vec::len).sum();
    if covered != h.n() {
        return Err(contract(format!("{covered} of {} vertices covered", h.n())));
    }
    Ok(())
}

/// `E_i ∈ H_i`, pairwise disjoint, covering `[0, n)`.
pub fn rainbow_perfect_matching(family: &RainbowFamily, rainbow: &RainbowMatching) -> Result<()> {
    if rainbow.edges.len() != family.m() {
        return Err(contract(format!(
            "{} edges for {} layers",
            rainbow.edges.len(),
            family.m()
        )));
    }
    let mut seen = vec![false; family.n()];
    for (i, (e, layer)) in rainbow.edges.iter().zip(family.layers()).enumerate() {
        if !layer.contains_edge(e) {
            return Err(contract(format!("{e:?} is not an edge of layer {i}")));
        }
        for &v in e {
            if std::mem::replace(&mut seen[v], true) {
                return Err(contract(format!("vertex {v} covered twice")));
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(contract("not every vertex is covered"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlap_foreign_edges_and_gaps() {
        let h = Hypergraph::complete(6, 3);
        assert!(perfect_matching(&h, &Matching::new([vec![0, 1, 2], vec![3, 4, 5]])).is_ok());
        assert!(matching(&h, &Matching::new([vec![0, 1, 2], vec![2, 4, 5]])).is_err());
        assert!(perfect_matching(&h, &Matching::new([vec![0, 1, 2]])).is_err());
        let sparse = Hypergraph::new(6, 3, [[0, 1, 2]]).unwrap();
        assert!(matching(&sparse, &Matching::new([vec![3, 4, 5]])).is_err());
    }
}
