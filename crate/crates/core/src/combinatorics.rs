//! Binomials, colex ranking and subset iteration.

use itertools::Itertools;

/// `C(n, r)`, zero when `r > n`. Saturates at `u64::MAX`.
pub fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for j in 0..r {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Colex rank of a strictly increasing tuple: `sum_j C(s_j, j + 1)`.
pub fn colex_rank(sorted: &[usize]) -> usize {
    sorted
        .iter()
        .enumerate()
        .map(|(j, &v)| binomial(v, j + 1) as usize)
        .sum()
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, r: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n).combinations(r)
}

/// Size of the intersection of two sorted slices.
pub fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// `a ⊆ b` for sorted slices.
pub fn is_subset(a: &[usize], b: &[usize]) -> bool {
    intersection_len(a, b) == a.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(30, 3), 4060);
    }

    #[test]
    fn colex_rank_is_a_bijection() {
        for r in 0..4 {
            let mut ranks: Vec<usize> = subsets(7, r).map(|s| colex_rank(&s)).collect();
            ranks.sort_unstable();
            let expected: Vec<usize> = (0..binomial(7, r) as usize).collect();
            assert_eq!(ranks, expected);
        }
    }

    #[test]
    fn sorted_intersections() {
        assert_eq!(intersection_len(&[0, 2, 4, 6], &[1, 2, 3, 4]), 2);
        assert!(is_subset(&[2, 4], &[0, 2, 4]));
        assert!(!is_subset(&[2, 5], &[0, 2, 4]));
    }
}
