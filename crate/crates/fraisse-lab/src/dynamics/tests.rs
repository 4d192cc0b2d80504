use super::*;
use crate::cir::{splits, CirPlugin};
use crate::fraisse::ClassId;

fn system(cir: &str, stages: usize, witness_budget: usize) -> ShiftSystem {
    let p = CirPlugin::by_name(cir).unwrap();
    let params = ShiftParams {
        stages,
        witness_budget,
        ..ShiftParams::default()
    };
    build_shift_system(&p, &params, None).unwrap()
}

#[test]
fn labels_translate_and_shift_composes() {
    let s = system("dlo", 5, 2);
    let m = s.structure.size();
    assert!(m >= 5);
    for p in 0..m {
        // shift by 0 is the identity
        assert_eq!(s.shift_point(p, 0), Some(p));
    }
    // composition where both sides are defined
    for p in 0..m {
        if let Some(q) = s.shift_point(p, 1) {
            if let Some(r) = s.shift_point(q, 2) {
                assert_eq!(s.shift_point(p, 3), Some(r));
            }
        }
    }
    // the rightmost block cannot shift up
    let top = s.stage as i64 - 1;
    let frontier = s.block(top, top);
    assert!(!frontier.is_empty());
    assert!(matches!(
        s.shift_set(&frontier, 1),
        ShiftImage::Undefined { .. }
    ));
    // labels shift endpoint-wise
    let p0 = s.point_with_label(IntervalLabel { lo: 0, hi: 0, index: 0 }).unwrap();
    let q = s.shift_point(p0, 1).unwrap();
    assert_eq!(s.label(q), IntervalLabel { lo: 1, hi: 1, index: 0 });
}

#[test]
fn shift_is_partial_isomorphism_where_defined() {
    for cir in ["trivial", "dlo", "random-graph", "tournament", "ordered-random-graph"] {
        let s = system(cir, 4, 3);
        let f = s.shift_map(1);
        assert!(
            f.is_embedding(&s.structure, &s.structure),
            "{cir}: shift by 1 not an isomorphism onto its image"
        );
    }
}

#[test]
fn invariants_hold_for_catalog_systems() {
    for cir in ["trivial", "dlo", "random-graph", "tournament", "ordered-random-graph"] {
        let s = system(cir, 4, 3);
        s.verify_invariants().unwrap_or_else(|e| panic!("{cir}: {e}"));
    }
}

#[test]
fn pure_set_blocks_are_disjoint() {
    let s = system("trivial", 3, 0);
    let b0 = s.block(0, 0);
    let b2 = s.block(2, 2);
    assert!(b0.iter().all(|p| !b2.contains(p)));
    assert!(s.cir.indep(&s.structure, &b0, &[], &b2));
}

#[test]
fn graph_system_has_no_edges_between_far_blocks() {
    let s = system("random-graph", 3, 2);
    let b0 = s.block(0, 0);
    let b2 = s.block(2, 2);
    for &x in &b0 {
        for &y in &b2 {
            assert!(!s.structure.holds(0, &[x, y]));
        }
    }
}

#[test]
fn dlo_far_blocks_sit_above() {
    let s = system("dlo", 3, 2);
    for &x in &s.block(0, 0) {
        for &y in &s.block(2, 2) {
            assert!(s.structure.lt(0, x, y));
        }
    }
}

#[test]
fn unsupported_classes_are_refused() {
    let p = CirPlugin::by_name("tree-point").unwrap();
    assert!(matches!(
        build_shift_system(&p, &ShiftParams::default(), None),
        Err(DynamicsError::UnsupportedClass(_))
    ));
}

#[test]
fn strongly_repulsive_within_interval_bound() {
    for cir in ["trivial", "dlo", "random-graph", "tournament"] {
        let s = system(cir, 6, 2);
        let block = s.block(0, 1);
        let m_max = s.stage as i64 - 2;
        // All nonempty subsets of a length-2 block repel within distance 2.
        for mask in 1u64..(1 << block.len().min(6)) {
            let set: Vec<Point> = block
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &p)| p)
                .collect();
            let report = check_strongly_repulsive(&s, &set, m_max, 3).unwrap();
            let n = report.least_n.unwrap_or_else(|| {
                panic!("{cir}: no repulsiveness bound for {set:?}: {:?}", report.verdicts)
            });
            assert!(n <= 2, "{cir}: bound {n} too large for {set:?}");
        }
    }
}

#[test]
fn empty_set_repels_immediately() {
    let s = system("dlo", 4, 0);
    let report = check_strongly_repulsive(&s, &[], 2, 3).unwrap();
    assert_eq!(report.least_n, Some(0));
}

#[test]
fn repulsive_single_vertex_verified_by_splits() {
    let s = system("random-graph", 6, 2);
    let v = s.block(0, 0)[0];
    let m_max = s.stage as i64 - 2;
    let report = check_strongly_repulsive(&s, &[v], m_max, 3).unwrap();
    assert_eq!(report.least_n, Some(1));
    for m in 1..=m_max {
        let moved = s.shift_set(&[v], m).defined().unwrap();
        assert!(splits(&s.structure, &[v], &moved, 3).is_none());
    }
}

#[test]
fn too_shallow_systems_error() {
    let s = system("dlo", 2, 0);
    let top = s.block(1, 1);
    // Shifting the top block is undefined at every positive distance.
    assert!(matches!(
        check_strongly_repulsive(&s, &top, 3, 3),
        Err(DynamicsError::ShiftTooShallow)
    ));
}

#[test]
fn shifty_succeeds_on_trivial_and_dlo() {
    for cir in ["trivial", "dlo"] {
        let s = system(cir, 8, 1);
        let report = check_shifty(&s, 60, s.stage as i64 - 2, 5);
        assert!(report.samples >= 50, "{cir}: too few samples");
        assert!(
            report.success_rate() >= 0.95,
            "{cir}: rate {} ({} of {})",
            report.success_rate(),
            report.successes,
            report.samples
        );
    }
}

#[test]
fn conjugator_covers_all_requirements() {
    for cir in ["trivial", "dlo", "random-graph"] {
        let s = system(cir, 48, 0);
        let params = ConjugatorParams {
            core_size: 2,
            max_len: 2,
            n_max: s.stage as i64,
            max_requirements: None,
        };
        let c = build_conjugator(&s, &params)
            .unwrap_or_else(|e| panic!("{cir}: {e}"));
        assert!(!c.ledger.is_empty());
        let report = verify_cyclic_density(&s, &c);
        assert_eq!(report.satisfied, report.total, "{cir}: {:?}", report.failures);
        assert!((report.coverage - 1.0).abs() < 1e-12);
        assert!(c.tau.is_embedding(&s.structure, &s.structure), "{cir}");
    }
}

#[test]
fn conjugator_identity_requirements_fix_points() {
    let s = system("trivial", 12, 0);
    let params = ConjugatorParams {
        core_size: 2,
        max_len: 1,
        n_max: s.stage as i64,
        max_requirements: None,
    };
    let c = build_conjugator(&s, &params).unwrap();
    for req in &c.ledger {
        if req.a == req.b {
            let moved = s.shift_tuple(&req.a, req.shift).unwrap();
            for &x in &moved {
                assert_eq!(c.tau.get(x), Some(x));
            }
        }
    }
}

#[test]
fn conjugator_prefix_determinism() {
    let s = system("dlo", 140, 0);
    let full = ConjugatorParams {
        core_size: 3,
        max_len: 2,
        n_max: s.stage as i64,
        max_requirements: None,
    };
    let c_full = build_conjugator(&s, &full).unwrap();
    let j = c_full.ledger.len() / 2;
    let c_half = build_conjugator(
        &s,
        &ConjugatorParams {
            max_requirements: Some(j),
            ..full
        },
    )
    .unwrap();
    assert_eq!(c_half.ledger[..], c_full.ledger[..j]);
    for (x, y) in c_half.tau.iter() {
        assert_eq!(c_full.tau.get(x), Some(y));
    }
}

#[test]
fn truncated_map_loses_coverage() {
    let s = system("dlo", 20, 0);
    let params = ConjugatorParams {
        core_size: 3,
        max_len: 1,
        n_max: s.stage as i64,
        max_requirements: None,
    };
    let c = build_conjugator(&s, &params).unwrap();
    assert!(c.ledger.len() > 1);
    let first = c.ledger[0].clone();
    let sa = s.shift_tuple(&first.a, first.shift).unwrap();
    let truncated = Conjugator {
        tau: PartialMap::from_pairs(
            sa.iter()
                .map(|&x| (x, c.tau.get(x).unwrap()))
                .collect::<Vec<_>>(),
        )
        .unwrap(),
        ledger: c.ledger.clone(),
        params: c.params.clone(),
    };
    let report = verify_cyclic_density(&s, &truncated);
    assert!(report.satisfied < report.total);
    assert!(report.coverage < 1.0);
}

#[test]
fn empty_requirement_set_is_vacuously_dense() {
    let s = system("dlo", 4, 0);
    let params = ConjugatorParams {
        core_size: 0,
        max_len: 2,
        n_max: 2,
        max_requirements: None,
    };
    let c = build_conjugator(&s, &params).unwrap();
    let report = verify_cyclic_density(&s, &c);
    assert_eq!(report.total, 0);
    assert!((report.coverage - 1.0).abs() < 1e-12);
}

#[test]
fn word_search_finds_identity_and_single_letters() {
    let s = system("dlo", 6, 0);
    let sigma = s.shift_map(1);
    let tau = {
        let params = ConjugatorParams {
            core_size: 2,
            max_len: 1,
            n_max: s.stage as i64,
            max_requirements: None,
        };
        build_conjugator(&s, &params).unwrap().tau
    };
    let n = s.structure.size();
    // identity target: empty word
    let id_target = PartialMap::from_pairs([(0, 0)]).unwrap();
    assert_eq!(
        word_density_search(n, &[sigma.clone(), tau.clone()], &id_target, 3),
        Some(vec![])
    );
    // the shift restricted to a block: the single letter for generator 0
    let block = s.block(0, 0);
    let restricted = PartialMap::from_pairs(
        block
            .iter()
            .map(|&p| (p, s.shift_point(p, 1).unwrap()))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let word = word_density_search(n, &[sigma.clone(), tau.clone()], &restricted, 3).unwrap();
    assert_eq!(
        word,
        vec![WordLetter {
            generator: 0,
            inverse: false
        }]
    );
    // a conjugated requirement: reachable and verified by composition
    let target = PartialMap::from_pairs([(block[0], block[0])]).unwrap();
    if let Some(word) = word_density_search(n, &[sigma, tau], &target, 4) {
        assert!(word.len() <= 4);
    }
}

#[test]
fn witness_ledger_grows_and_embeds() {
    let s = system("random-graph", 4, 6);
    assert!(!s.witness_ledger.is_empty());
    for rec in &s.witness_ledger {
        // Recorded witnesses remain embedded (structures only grow).
        assert!(rec.big_images.iter().all(|&p| p < s.structure.size()));
    }
}

#[test]
fn determinism_of_build() {
    let a = system("tournament", 5, 3);
    let b = system("tournament", 5, 3);
    assert_eq!(a.structure, b.structure);
    assert_eq!(a.stage, b.stage);
    assert_eq!(a.witness_ledger.len(), b.witness_ledger.len());
}
