//! Parity constructions `H^i(A, B)`, the family `ext(n, k)` and the
//! threshold `δ(n, k, ℓ) = max_{H ∈ ext(n,k)} δ_ℓ(H)`.

use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, VertexSubset};
use crate::scalar::Scalar;
use crate::transform::{build_rainbow_graph, ColoredGraph, RainbowFamily};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default operation budget for [`delta_threshold`].
pub const DEFAULT_THRESHOLD_BUDGET: u64 = 100_000_000;

/// `(A, i)` describing `H^i(A, [0,n) \ A)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexPartition {
    pub n: usize,
    pub k: usize,
    pub a: VertexSubset,
    pub parity: u8,
}

impl VertexPartition {
    pub fn new(n: usize, k: usize, a: VertexSubset, parity: u8) -> Result<Self> {
        a.check_within(n)?;
        if parity > 1 {
            return Err(Error::Contract(format!("parity bit must be 0 or 1, got {parity}")));
        }
        Ok(Self { n, k, a, parity })
    }

    /// `A = {0, ..., size - 1}`.
    pub fn prefix(n: usize, k: usize, size: usize, parity: u8) -> Result<Self> {
        if size > n {
            return Err(Error::VertexOutOfRange { vertex: size, n });
        }
        Self::new(n, k, VertexSubset::prefix(size), parity)
    }

    pub fn b(&self) -> VertexSubset {
        self.a.complement(self.n)
    }

    /// `i·n/k` and `|A|` have different parity (and `k | n`).
    pub fn in_ext(&self) -> bool {
        is_ext_admissible(self.n, self.k, self.a.len(), self.parity)
    }

    /// Whether an edge with base part `e` lies in `H^i(A, B)`.
    pub fn admits(&self, e: &[usize]) -> bool {
        e.iter().filter(|v| self.a.contains(**v)).count() % 2 == self.parity as usize
    }

    pub fn build(&self) -> Hypergraph {
        build_parity_hypergraph(self.n, self.k, &self.a, self.parity)
    }
}

pub fn is_ext_admissible(n: usize, k: usize, a_size: usize, parity: u8) -> bool {
    k > 0 && n.is_multiple_of(k) && (parity as usize * (n / k) + a_size) % 2 == 1
}

/// Edges meeting `A` in a number of vertices congruent to `parity` mod 2.
pub fn build_parity_hypergraph(n: usize, k: usize, a: &VertexSubset, parity: u8) -> Hypergraph {
    let inside = a.indicator(n);
    Hypergraph::from_predicate(n, k, |e| e.iter().filter(|&&v| inside[v]).count() % 2 == parity as usize)
}

/// `Σ_{j ≡ i (2)} C(|A|, j) C(n - |A|, k - j)`.
pub fn parity_edge_count(n: usize, k: usize, a_size: usize, parity: u8) -> u64 {
    (0..=k)
        .filter(|j| j % 2 == parity as usize)
        .map(|j| binomial(a_size, j) * binomial(n - a_size, k - j))
        .sum()
}

/// `δ_ℓ(H^i(A, B))` by counting: an ℓ-set meeting `A` in `j` vertices has
/// `Σ_{t : j + t ≡ i} C(|A| - j, t) C(|B| - ℓ + j, k - ℓ - t)` extensions.
pub fn parity_min_degree(n: usize, k: usize, a_size: usize, parity: u8, l: usize) -> u64 {
    let b_size = n - a_size;
    (0..=l.min(a_size))
        .filter(|&j| l - j <= b_size)
        .map(|j| {
            (0..=k - l)
                .filter(|t| (j + t) % 2 == parity as usize)
                .map(|t| binomial(a_size - j, t) * binomial(b_size - (l - j), k - l - t))
                .sum::<u64>()
        })
        .min()
        .unwrap_or(0)
}

fn check_divisible(n: usize, k: usize) -> Result<()> {
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::Divisibility(format!("n = {n} is not a multiple of k = {k}")));
    }
    Ok(())
}

/// Lazily enumerates every `(A, i)` with `H^i(A, B) ∈ ext(n, k)`, in order of
/// the bitmask of `A` and then `i`.
pub fn enumerate_ext(n: usize, k: usize) -> Result<impl Iterator<Item = VertexPartition>> {
    check_divisible(n, k)?;
    if n >= 64 {
        return Err(Error::Resource {
            what: format!("enumerating 2^{n} subsets"),
            partial: "none".into(),
        });
    }
    Ok((0u64..1u64 << n).flat_map(move |bits| {
        let a = VertexSubset::new((0..n).filter(|v| bits >> v & 1 == 1));
        (0u8..2)
            .filter(move |&i| is_ext_admissible(n, k, bits.count_ones() as usize, i))
            .map(move |i| VertexPartition {
                n,
                k,
                a: a.clone(),
                parity: i,
            })
            .collect::<Vec<_>>()
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    /// Build each representative `H^i(A, B)` and scan its degree table.
    Enumeration,
    /// Closed-form degree count per `(|A|, i)`.
    Formula,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub value: u64,
    pub witness: VertexPartition,
    pub method: ThresholdMethod,
}

/// `δ(n, k, ℓ)`; only `|A|` and `i` are enumerated since `δ_ℓ(H^i(A,B))`
/// depends on nothing else. The witness is the first maximiser in
/// `(|A|, i)` order.
pub fn delta_threshold(n: usize, k: usize, l: usize, method: ThresholdMethod, budget: u64) -> Result<ThresholdReport> {
    check_divisible(n, k)?;
    if n < k {
        return Err(Error::InvalidArity(format!("n = {n} must be at least k = {k}")));
    }
    if l >= k {
        return Err(Error::InvalidArity(format!("ℓ = {l} must be below k = {k}")));
    }
    let cost = match method {
        ThresholdMethod::Enumeration => binomial(n, k).saturating_mul(binomial(k, l) + 1).saturating_add(binomial(n, l)),
        ThresholdMethod::Formula => ((l + 1) * (k - l + 1)) as u64,
    };
    let candidates: Vec<(usize, u8)> = (0..=n)
        .flat_map(|a| (0u8..2).map(move |i| (a, i)))
        .filter(|&(a, i)| is_ext_admissible(n, k, a, i))
        .collect();
    let affordable = (budget / cost.max(1)).min(candidates.len() as u64) as usize;
    let values: Vec<u64> = candidates[..affordable]
        .par_iter()
        .map(|&(a, i)| match method {
            ThresholdMethod::Formula => parity_min_degree(n, k, a, i, l),
            ThresholdMethod::Enumeration => {
                build_parity_hypergraph(n, k, &VertexSubset::prefix(a), i)
                    .min_degree(l)
                    .expect("ℓ < k checked above")
            }
        })
        .collect();
    let best = values
        .iter()
        .enumerate()
        .fold(None::<(usize, u64)>, |best, (idx, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((idx, v)),
        });
    if affordable < candidates.len() {
        return Err(Error::Resource {
            what: format!("δ({n}, {k}, {l}) after {affordable} of {} candidates", candidates.len()),
            partial: best.map_or("none".to_string(), |(_, v)| format!("max so far {v}")),
        });
    }
    let (idx, value) = best.expect("ext(n, k) is never empty");
    let (a, i) = candidates[idx];
    Ok(ThresholdReport {
        n,
        k,
        l,
        value,
        witness: VertexPartition::prefix(n, k, a, i)?,
        method,
    })
}

/// Closed-form minimum codegree threshold `δ(n, k, k-1)`:
///
/// * `n/2 - k + 2` if `k/2` is even and `n/k` is odd,
/// * `n/2 - k + 3/2` if `k` is odd and `(n-1)/2` is odd,
/// * `n/2 - k + 1/2` if `k` is odd and `(n-1)/2` is even,
/// * `n/2 - k + 1` otherwise.
///
/// For odd `k` the two middle branches need `n` odd; even `n` falls through.
pub fn delta_codegree_formula<S: Scalar>(n: usize, k: usize) -> Result<S> {
    check_divisible(n, k)?;
    if k < 3 {
        return Err(Error::InvalidArity(format!("the codegree formula needs k >= 3, got {k}")));
    }
    let twice_offset: i64 = if k.is_multiple_of(2) && (k / 2).is_multiple_of(2) && (n / k) % 2 == 1 {
        4
    } else if k % 2 == 1 && n % 2 == 1 && ((n - 1) / 2) % 2 == 1 {
        3
    } else if k % 2 == 1 && n % 2 == 1 {
        1
    } else {
        2
    };
    Ok(S::from_ratio(n as i64 - 2 * k as i64 + twice_offset, 2))
}

/// The canonical `H_ext` descriptor used for `T_ext`.
///
/// Among admissible `(|A|, i)` the most balanced sizes win (`||A| - |B|| <= 1`
/// whenever such a size is admissible), then the largest `δ_ℓ`, then the
/// smallest `i`, then the smallest `|A|`. `A` is a prefix of `[0, n)`.
pub fn canonical_ext(n: usize, k: usize, l: usize) -> Result<VertexPartition> {
    check_divisible(n, k)?;
    if l >= k {
        return Err(Error::InvalidArity(format!("ℓ = {l} must be below k = {k}")));
    }
    let (a, i) = admissible_by_balance(n, k)
        .into_iter()
        .min_by_key(|&(a, i)| {
            (
                (2 * a).abs_diff(n),
                std::cmp::Reverse(parity_min_degree(n, k, a, i, l)),
                i,
                a,
            )
        })
        .expect("ext(n, k) is never empty");
    VertexPartition::prefix(n, k, a, i)
}

/// Admissible `(|A|, i)` pairs with the smallest imbalance `||A| - |B||`.
pub fn admissible_by_balance(n: usize, k: usize) -> Vec<(usize, u8)> {
    let all: Vec<(usize, u8)> = (0..=n)
        .flat_map(|a| (0u8..2).map(move |i| (a, i)))
        .filter(|&(a, i)| is_ext_admissible(n, k, a, i))
        .collect();
    let best = all.iter().map(|&(a, _)| (2 * a).abs_diff(n)).min().unwrap_or(0);
    all.into_iter().filter(|&(a, _)| (2 * a).abs_diff(n) == best).collect()
}

/// `T_ext` for the codegree (`ℓ = k - 1`) canonical extremal graph.
pub fn build_t_ext(n: usize, k: usize) -> Result<ColoredGraph> {
    build_t_ext_for(n, k, k.saturating_sub(1))
}

/// `T_ext` with `H_ext` chosen for the given `ℓ`.
pub fn build_t_ext_for(n: usize, k: usize, l: usize) -> Result<ColoredGraph> {
    let ext = canonical_ext(n, k, l)?;
    Ok(build_rainbow_graph(&RainbowFamily::uniform(ext.build())?))
}
