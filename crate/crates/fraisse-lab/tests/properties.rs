//! Property tests for the structural invariants: closure behavior, type
//! equality as an equivalence matching marked isomorphism, amalgam size
//! bounds, and shift composition.

use fraisse_lab::cir::CirPlugin;
use fraisse_lab::dynamics::{build_shift_system, ShiftParams};
use fraisse_lab::fraisse::{ClassId, ClassPlugin};
use fraisse_lab::structures::{
    generated_substructure, tuple_type_equal, type_key, FinStructure, PartialMap,
};
use proptest::prelude::*;

/// Random graph on `n` points with edges drawn from the bit source.
fn graph_from_bits(n: usize, bits: u64) -> FinStructure {
    let class = ClassPlugin::new(ClassId::RandomGraph);
    let mut m = FinStructure::new(class.signature().clone(), n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits >> (k % 64) & 1 == 1 {
                m.add_tuple(0, &[i, j]);
                m.add_tuple(0, &[j, i]);
            }
            k += 1;
        }
    }
    m
}

/// Random tournament on `n` points.
fn tournament_from_bits(n: usize, bits: u64) -> FinStructure {
    let class = ClassPlugin::new(ClassId::Tournament);
    let mut m = FinStructure::new(class.signature().clone(), n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits >> (k % 64) & 1 == 1 {
                m.add_tuple(0, &[i, j]);
            } else {
                m.add_tuple(0, &[j, i]);
            }
            k += 1;
        }
    }
    m
}

/// Random meet tree on `n` points from a parent vector (`parents[i] < i`),
/// with the meet table recomputed from ancestor chains.
fn tree_from_parents(parents: &[usize]) -> FinStructure {
    let n = parents.len() + 1;
    let class = ClassPlugin::new(ClassId::MeetTree);
    let mut m = FinStructure::new(class.signature().clone(), n);
    let mut ancestors: Vec<Vec<usize>> = vec![vec![0]];
    for (i, &raw) in parents.iter().enumerate() {
        let child = i + 1;
        let parent = raw % child;
        let mut chain = ancestors[parent].clone();
        chain.push(child);
        ancestors.push(chain);
    }
    for child in 1..n {
        for &anc in &ancestors[child] {
            if anc != child {
                m.add_tuple(0, &[anc, child]);
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            let common = ancestors[x]
                .iter()
                .filter(|a| ancestors[y].contains(a))
                .last()
                .copied()
                .expect("rooted trees share the root");
            m.set_meet(x, y, common);
        }
    }
    m
}

fn small_tuple(n: usize, len: usize, source: &[usize]) -> Vec<usize> {
    source.iter().take(len).map(|&x| x % n).collect()
}

proptest! {
    #[test]
    fn closure_is_idempotent_monotone_and_extensive(
        parents in proptest::collection::vec(0usize..8, 1..7),
        seed in proptest::collection::vec(0usize..8, 0..4),
    ) {
        let m = tree_from_parents(&parents);
        let n = m.size();
        let s: Vec<usize> = {
            let mut v: Vec<usize> = seed.iter().map(|&x| x % n).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let closed = generated_substructure(&m, &s);
        // extensive
        prop_assert!(s.iter().all(|p| closed.contains(p)));
        // idempotent
        prop_assert_eq!(generated_substructure(&m, &closed), closed.clone());
        // monotone
        let smaller: Vec<usize> = s.iter().copied().skip(1).collect();
        let sub = generated_substructure(&m, &smaller);
        prop_assert!(sub.iter().all(|p| closed.contains(p)));
    }

    #[test]
    fn type_equality_is_an_equivalence(
        n in 2usize..6,
        bits in any::<u64>(),
        raw in proptest::collection::vec(0usize..8, 12),
    ) {
        let m = graph_from_bits(n, bits);
        let a = small_tuple(n, 2, &raw[0..]);
        let b = small_tuple(n, 2, &raw[4..]);
        let c = small_tuple(n, 2, &raw[8..]);
        let eq = |x: &[usize], y: &[usize]| tuple_type_equal(&m, x, y).unwrap();
        prop_assert!(eq(&a, &a));
        prop_assert_eq!(eq(&a, &b), eq(&b, &a));
        if eq(&a, &b) && eq(&b, &c) {
            prop_assert!(eq(&a, &c));
        }
        // and the hashable key agrees with the relation
        prop_assert_eq!(eq(&a, &b), type_key(&m, &a) == type_key(&m, &b));
    }

    #[test]
    fn relational_type_equality_is_marked_isomorphism(
        n in 2usize..6,
        bits in any::<u64>(),
        raw in proptest::collection::vec(0usize..8, 6),
    ) {
        let m = tournament_from_bits(n, bits);
        let a = small_tuple(n, 3, &raw[0..]);
        let b = small_tuple(n, 3, &raw[3..]);
        let claimed = tuple_type_equal(&m, &a, &b).unwrap();
        // Oracle: the correspondence a_i -> b_i must be a well-defined
        // injective map preserving and reflecting every relation.
        let oracle = PartialMap::from_pairs(a.iter().copied().zip(b.iter().copied()))
            .map(|f| f.is_embedding(&m, &m) && {
                let back = PartialMap::from_pairs(b.iter().copied().zip(a.iter().copied()));
                back.map(|g| g.is_embedding(&m, &m)).unwrap_or(false)
            })
            .unwrap_or(false);
        prop_assert_eq!(claimed, oracle);
    }

    #[test]
    fn amalgam_size_is_additive_up_to_closure(
        bits_b in any::<u64>(),
        bits_c in any::<u64>(),
        nb in 1usize..5,
        nc in 1usize..5,
    ) {
        // Amalgamate two graphs over a single shared vertex.
        let class = ClassPlugin::new(ClassId::RandomGraph);
        let a = graph_from_bits(1, 0);
        let b = graph_from_bits(nb, bits_b);
        let c = graph_from_bits(nc, bits_c);
        let f = PartialMap::from_pairs([(0, 0)]).unwrap();
        let am = class.canonical_amalgam(&a, &b, &c, &f, &f).unwrap();
        prop_assert_eq!(am.structure.size(), nb + nc - 1);
        prop_assert!(class.is_member(&am.structure).unwrap());
    }

    #[test]
    fn tree_amalgam_adds_at_most_one_root(
        parents_b in proptest::collection::vec(0usize..8, 1..5),
        parents_c in proptest::collection::vec(0usize..8, 1..5),
    ) {
        let class = ClassPlugin::new(ClassId::MeetTree);
        let a = class.empty_member();
        let b = tree_from_parents(&parents_b);
        let c = tree_from_parents(&parents_c);
        let empty = PartialMap::new();
        let am = class.canonical_amalgam(&a, &b, &c, &empty, &empty).unwrap();
        prop_assert!(am.structure.size() <= b.size() + c.size() + 1);
        prop_assert!(class.is_member(&am.structure).unwrap());
    }

    #[test]
    fn shift_powers_compose(i in 0i64..4, j in -3i64..4) {
        let plugin = CirPlugin::by_name("dlo").unwrap();
        let params = ShiftParams { stages: 6, witness_budget: 2, ..ShiftParams::default() };
        let s = build_shift_system(&plugin, &params, None).unwrap();
        for p in 0..s.structure.size() {
            if let Some(q) = s.shift_point(p, i) {
                if let Some(r) = s.shift_point(q, j) {
                    prop_assert_eq!(s.shift_point(p, i + j), Some(r));
                }
            }
        }
    }
}
