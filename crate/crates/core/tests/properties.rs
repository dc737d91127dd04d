mod common;

use common::*;
use proptest::prelude::*;
use rainbow_core::absorbing::{almost_cover, sample_random_matching};
use rainbow_core::closeness::{closeness_to_ext, edits_against, good_vertices, missing_degrees, SearchMode};
use rainbow_core::extremal::{build_parity_hypergraph, build_t_ext, canonical_ext, delta_codegree_formula, parity_edge_count, VertexPartition};
use rainbow_core::extremal_solver::remove_bad_vertices;
use rainbow_core::io::{parse_family, parse_hypergraph, write_family, write_hypergraph};
use rainbow_core::solver::{count_perfect_matchings, find_perfect_matching, find_perfect_matching_colored, find_rainbow_pm};
use rainbow_core::transform::{build_rainbow_graph, pm_of_rainbow, rainbow_of_pm};
use rainbow_core::{ColoredGraph, Hypergraph, RainbowFamily, Rational, SolverConfig, Status, VertexSubset};

fn graph(max_n: usize) -> impl Strategy<Value = Hypergraph> {
    (2usize..=4, 0.0f64..1.0, any::<u64>()).prop_flat_map(move |(k, p, seed)| {
        (k..=max_n).prop_map(move |n| random_graph(n, k, p, &mut rng(seed)))
    })
}

fn family() -> impl Strategy<Value = RainbowFamily> {
    (prop_oneof![Just((3usize, 3usize)), Just((6, 3)), Just((6, 2)), Just((8, 4)), Just((9, 3))], 0.0f64..0.7, any::<u64>())
        .prop_map(|((n, k), p, seed)| random_family(n, k, p, &mut rng(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degrees_double_count(h in graph(8), l in 0usize..4) {
        let l = l.min(h.k() - 1);
        let total: u64 = h.degree_table(l).unwrap().iter().sum();
        prop_assert_eq!(total, h.edge_count() as u64 * binom(h.k(), l));
    }

    #[test]
    fn degree_agrees_with_scan(h in graph(8), pick in any::<u64>()) {
        let edges = edge_list(&h);
        for l in 0..h.k() {
            let sets = all_subsets(h.n(), l);
            let s = &sets[pick as usize % sets.len()];
            prop_assert_eq!(h.degree(s).unwrap(), degree(&edges, s));
            prop_assert_eq!(h.degree_by_scan(s), degree(&edges, s));
            prop_assert_eq!(h.link_graph(s).unwrap().len() as u64, degree(&edges, s));
        }
    }

    #[test]
    fn min_degree_inherits_downwards(h in graph(8)) {
        // δ_{ℓ-1} / C(n-ℓ+1, k-ℓ+1) >= δ_ℓ / C(n-ℓ, k-ℓ)
        let n = h.n() as u64;
        for l in 1..h.k() {
            let lo = h.min_degree(l - 1).unwrap() as u128 * binom(h.n() - l, h.k() - l) as u128;
            let hi = h.min_degree(l).unwrap() as u128 * binom(h.n() - l + 1, h.k() - l + 1) as u128;
            prop_assert!(lo >= hi, "n={} l={}", n, l);
        }
    }

    #[test]
    fn parity_count_matches_construction(n in 2usize..10, k in 2usize..5, a in 0usize..10, i in 0u8..2) {
        prop_assume!(k <= n && a <= n);
        let h = build_parity_hypergraph(n, k, &VertexSubset::prefix(a), i);
        prop_assert_eq!(parity_edge_count(n, k, a, i), h.edge_count() as u64);
        prop_assert!(h.edges().all(|e| e.iter().filter(|&&v| v < a).count() % 2 == i as usize));
    }

    #[test]
    fn rainbow_iff_perfect_matching_of_t(f in family()) {
        let cfg = SolverConfig::default();
        let direct = find_rainbow_pm(&f, &cfg);
        let t = build_rainbow_graph(&f);
        let pm = find_perfect_matching_colored(&t, &cfg);
        let oracle = has_rainbow(f.n(), &layers_of(&f));
        prop_assert_eq!(direct.status == Status::Found, oracle);
        prop_assert_eq!(pm.status == Status::Found, oracle);
        if let Some(m) = pm.matching {
            let r = rainbow_of_pm(&t, &m).unwrap();
            prop_assert!(is_rainbow_pm(&f, &r.edges));
            let back = pm_of_rainbow(&f, &r).unwrap();
            prop_assert_eq!(rainbow_of_pm(&t, &back).unwrap(), r);
        }
    }

    #[test]
    fn count_agrees_with_search(h in graph(9)) {
        prop_assume!(h.n() % h.k() == 0);
        let on = SolverConfig::default();
        let off = SolverConfig { heuristic: false, ..on };
        let count = count_perfect_matchings(&h, &on).unwrap();
        prop_assert_eq!(count, count_pm(h.n(), &edge_list(&h)) as u128);
        let a = find_perfect_matching(&h, &on);
        let b = find_perfect_matching(&h, &off);
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.is_found(), count > 0);
    }

    #[test]
    fn text_formats_round_trip(h in graph(9), f in family()) {
        prop_assert_eq!(parse_hypergraph(&write_hypergraph(&h)).unwrap(), h);
        prop_assert_eq!(parse_family(&write_family(&f)).unwrap(), f.clone());
        let t = build_rainbow_graph(&f);
        let back = ColoredGraph::from_json(&t.to_json()).unwrap();
        prop_assert_eq!(back.edges(), t.edges());
        prop_assert_eq!(back.as_hypergraph(), t.as_hypergraph());
    }

    #[test]
    fn exact_closeness_is_minimal(f in family()) {
        prop_assume!(f.n() <= 9 && f.k() >= 3);
        let t = build_rainbow_graph(&f);
        let report = closeness_to_ext(&t, SearchMode::Exact).unwrap();
        let sampled = closeness_to_ext(&t, SearchMode::sampled(7)).unwrap();
        prop_assert!(report.edits <= sampled.edits);
        prop_assert_eq!(edits_against(&t, &report.witness), report.edits);
        let canon = canonical_ext(f.n(), f.k(), f.k() - 1).unwrap();
        prop_assert!(report.edits <= edits_against(&t, &canon));
    }

    #[test]
    fn goodness_census(f in family(), alpha in 0.01f64..0.5) {
        // Σ_x deg_{Q'\Q}(x) = (k+1) |Q' \ Q|, so at most (k+1)|Q'\Q| / (α C(|V|-1, k)) vertices are bad
        let t = build_rainbow_graph(&f);
        let reference = build_t_ext(f.n(), f.k()).unwrap();
        let q = t.as_hypergraph();
        let r = reference.as_hypergraph();
        let missing = missing_degrees(q, r).unwrap();
        let absent = r.edges().filter(|e| !q.contains_edge(e)).count() as u64;
        prop_assert_eq!(missing.iter().sum::<u64>(), absent * (f.k() as u64 + 1));
        let report = good_vertices(q, r, alpha).unwrap();
        let scale = alpha * binom(q.n() - 1, q.k() - 1) as f64;
        prop_assert!(report.bad.len() as f64 * scale <= (absent * (f.k() as u64 + 1)) as f64 + 1e-9);
    }

    #[test]
    fn random_matchings_are_disjoint(universe in 1usize..40, size in 1usize..6, t in 0usize..8, seed in any::<u64>()) {
        prop_assume!(size * t <= universe);
        let sets = sample_random_matching(universe, size, t, &mut rng(seed)).unwrap();
        prop_assert_eq!(sets.len(), t);
        let mut seen = vec![false; universe];
        for s in &sets {
            prop_assert_eq!(s.len(), size);
            for &v in s {
                prop_assert!(v < universe && !seen[v]);
                seen[v] = true;
            }
        }
    }

    #[test]
    fn almost_cover_is_a_matching(f in family(), seed in any::<u64>()) {
        prop_assume!(f.k() >= 2);
        let t = build_rainbow_graph(&f);
        let l = f.k().div_ceil(2);
        let report = almost_cover(&t, l, 100_000, seed).unwrap();
        let mut seen = vec![false; t.vertex_count()];
        for e in report.matching.edges() {
            prop_assert!(t.as_hypergraph().contains_edge(e));
            for &v in e {
                prop_assert!(!seen[v]);
                seen[v] = true;
            }
        }
        let uncovered: Vec<usize> = (0..t.vertex_count()).filter(|&v| !seen[v]).collect();
        prop_assert_eq!(&report.uncovered, &uncovered);
        prop_assert!(report.uncovered.len() <= report.greedy_uncovered);
    }

    #[test]
    fn bad_vertex_removal_restores_parity(seed in any::<u64>(), pick in proptest::collection::vec(0usize..9, 1..3)) {
        let f = random_family(9, 3, 0.5, &mut rng(seed));
        let t = build_rainbow_graph(&f);
        let witness = VertexPartition::new(9, 3, VertexSubset::prefix(4), 0).unwrap();
        if let Some(m) = remove_bad_vertices(&t, &pick, &witness, 4, 100_000).unwrap() {
            let mut used = vec![false; t.vertex_count()];
            for e in m.edges() {
                prop_assert!(t.as_hypergraph().contains_edge(e));
                for &v in e {
                    prop_assert!(!used[v]);
                    used[v] = true;
                }
            }
            prop_assert!(pick.iter().all(|&v| used[v]));
            let a_left = (0..4).filter(|&v| !used[v]).count();
            let x_left = (9..12).filter(|&v| !used[v]).count();
            prop_assert_eq!((witness.parity as usize * x_left) % 2, a_left % 2);
        }
    }

    #[test]
    fn codegree_formula_agrees_across_scalars(m in 1usize..12, k in 3usize..7) {
        let n = m * k;
        let exact: Rational = delta_codegree_formula(n, k).unwrap();
        let wide: f64 = delta_codegree_formula(n, k).unwrap();
        let narrow: f32 = delta_codegree_formula(n, k).unwrap();
        let reference = *exact.numer() as f64 / *exact.denom() as f64;
        prop_assert!((wide - reference).abs() < 1e-9);
        prop_assert!((narrow as f64 - reference).abs() < 1e-3);
    }
}

#[test]
fn closeness_vanishes_on_extremal_graphs() {
    for (n, k) in [(6, 3), (9, 3), (8, 4)] {
        let t = build_t_ext(n, k).unwrap();
        assert_eq!(closeness_to_ext(&t, SearchMode::Exact).unwrap().edits, 0);
    }
}
