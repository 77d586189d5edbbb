use std::collections::HashSet;

use hypercount::copies::{count_copies_total, enumerate_copies};
use hypercount::pattern::{are_isomorphic, automorphism_count, remove_isolated_vertices};
use hypercount::Pattern;
use proptest::prelude::*;

const CORPUS: [&str; 7] = ["edge", "loop", "2-path", "triangle", "loop-pair", "3-edge", "diamond"];

/// Up to 4 distinct nonempty edges over up to 5 vertices.
fn arb_pattern() -> impl Strategy<Value = Pattern> {
    (1usize..=5).prop_flat_map(|v| {
        prop::collection::btree_set(1u32..(1 << v), 1..=4)
            .prop_map(move |edges| Pattern::from_masks(v, edges.into_iter().collect()).unwrap())
    })
}

fn relabel(p: &Pattern, perm: &[usize]) -> Pattern {
    let edges = p
        .edges()
        .iter()
        .map(|&e| (0..p.vertex_count()).filter(|i| e >> i & 1 == 1).fold(0u32, |m, i| m | 1 << perm[i]))
        .collect();
    Pattern::from_masks(p.vertex_count(), edges).unwrap()
}

fn arb_relabelled() -> impl Strategy<Value = (Pattern, Pattern)> {
    arb_pattern().prop_flat_map(|p| {
        let v = p.vertex_count();
        Just((0..v).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(move |perm| (p.clone(), relabel(&p, &perm)))
    })
}

proptest! {
    #[test]
    fn relabelling_preserves_type((p, q) in arb_relabelled()) {
        prop_assert!(are_isomorphic(&p, &q));
        prop_assert_eq!(automorphism_count(&p), automorphism_count(&q));
        prop_assert_eq!(p.degree_sequence(), q.degree_sequence());
    }

    #[test]
    fn isomorphism_is_an_equivalence(a in arb_pattern(), b in arb_pattern(), c in arb_pattern()) {
        prop_assert!(are_isomorphic(&a, &a));
        prop_assert_eq!(are_isomorphic(&a, &b), are_isomorphic(&b, &a));
        if are_isomorphic(&a, &b) && are_isomorphic(&b, &c) {
            prop_assert!(are_isomorphic(&a, &c));
        }
    }

    #[test]
    fn text_format_roundtrips(p in arb_pattern()) {
        prop_assert_eq!(Pattern::parse(&p.to_text()).unwrap(), p);
    }
}

#[test]
fn copy_totals_match_enumeration() {
    for name in CORPUS {
        let p = Pattern::named(name).unwrap();
        for n in p.vertex_count()..=8 {
            let copies = enumerate_copies(&p, n).unwrap();
            assert_eq!(copies.len() as u128, count_copies_total(&p, n), "{name} n={n}");
            let distinct: HashSet<Vec<u64>> = copies.iter().map(|c| c.sorted_edges()).collect();
            assert_eq!(distinct.len(), copies.len(), "{name} n={n} has duplicates");
            for c in &copies {
                let local = Pattern::from_masks(
                    c.vertices.count_ones() as usize,
                    c.edges.iter().map(|&e| compress(e, c.vertices)).collect(),
                )
                .unwrap();
                assert!(are_isomorphic(&local, &p));
            }
        }
    }
}

/// Renumbers the bits of `e` inside `support` to 0, 1, ...
fn compress(e: u64, support: u64) -> u32 {
    let mut out = 0;
    let mut k = 0;
    for i in 0..64 {
        if support >> i & 1 == 1 {
            if e >> i & 1 == 1 {
                out |= 1 << k;
            }
            k += 1;
        }
    }
    out
}

/// Distinct (vertex set, edge set) images of all injections `[v] -> [n]`.
fn brute_force_with_isolated(p: &Pattern, n: usize) -> usize {
    let v = p.vertex_count();
    let mut seen = HashSet::new();
    let mut map = vec![0usize; v];
    fn rec(p: &Pattern, n: usize, i: usize, used: u64, map: &mut Vec<usize>, seen: &mut HashSet<(u64, Vec<u64>)>) {
        if i == map.len() {
            let mut edges: Vec<u64> = p
                .edges()
                .iter()
                .map(|&e| (0..map.len()).filter(|j| e >> j & 1 == 1).fold(0u64, |m, j| m | 1 << map[j]))
                .collect();
            edges.sort_unstable();
            seen.insert((used, edges));
            return;
        }
        for x in 0..n {
            if used >> x & 1 == 0 {
                map[i] = x;
                rec(p, n, i + 1, used | 1 << x, map, seen);
            }
        }
    }
    rec(p, n, 0, 0, &mut map, &mut seen);
    seen.len()
}

#[test]
fn isolated_vertex_multiplier_matches_brute_force() {
    let with_isolated = [
        Pattern::new(3, &[[0usize, 1]]).unwrap(),
        Pattern::new(4, &[vec![0usize, 1], vec![1, 2]]).unwrap(),
        Pattern::new(5, &[vec![0usize, 1, 2], vec![0]]).unwrap(),
    ];
    for p in &with_isolated {
        let (core, k) = remove_isolated_vertices(p).unwrap();
        for n in p.vertex_count()..=7 {
            let free = n - core.vertex_count();
            let multiplier: u128 = (0..k as u128).fold(1, |a, i| a * (free as u128 - i) / (i + 1));
            assert_eq!(
                count_copies_total(&core, n) * multiplier,
                brute_force_with_isolated(p, n) as u128,
                "{} n={n}",
                p.label()
            );
        }
    }
}
