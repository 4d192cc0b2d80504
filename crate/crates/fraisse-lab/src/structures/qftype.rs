//! Generated substructures and quantifier-free tuple types.
//!
//! The type of a tuple is the isomorphism type of its generated substructure
//! with the tuple marked. Closure terms (constants and meets) are enumerated
//! in a canonical order determined by the tuple alone, so two tuples can be
//! compared position by position and the comparison doubles as a hashable
//! key for bucketing tuples by type.

use super::{FinStructure, Point, StructureError};

/// Least superset of `points` closed under constants and (if present) the
/// meet operation, returned sorted.
pub fn generated_substructure(m: &FinStructure, points: &[Point]) -> Vec<Point> {
    let mut set: Vec<Point> = points.to_vec();
    set.extend_from_slice(m.constant_points());
    set.sort_unstable();
    set.dedup();
    if m.has_meet() {
        loop {
            let mut added = false;
            let snapshot = set.clone();
            for (i, &x) in snapshot.iter().enumerate() {
                for &y in &snapshot[i..] {
                    let z = m.meet(x, y);
                    if let Err(pos) = set.binary_search(&z) {
                        set.insert(pos, z);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
    }
    set
}

/// Canonical enumeration of the substructure generated by a tuple: distinct
/// tuple entries in first-occurrence order, then constants, then meets in
/// rounds (pairs scanned in enumeration order). The position of each point
/// depends only on the tuple's own pattern, never on ambient indices.
pub fn closure_enumeration(m: &FinStructure, tuple: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(tuple.len() + 2);
    let push = |out: &mut Vec<Point>, p: Point| {
        if !out.contains(&p) {
            out.push(p);
            true
        } else {
            false
        }
    };
    for &p in tuple {
        push(&mut out, p);
    }
    for &c in m.constant_points() {
        push(&mut out, c);
    }
    if m.has_meet() {
        let mut frontier = 0;
        while frontier < out.len() {
            let upto = out.len();
            let mut added_any = false;
            for i in 0..upto {
                for j in i..upto {
                    let z = m.meet(out[i], out[j]);
                    added_any |= push(&mut out, z);
                }
            }
            frontier = if added_any { upto } else { out.len() };
        }
    }
    out
}

/// Exact, hashable invariant of a tuple's quantifier-free type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeKey(Box<[u32]>);

/// Computes the type key of a tuple: the equality pattern of the tuple, the
/// relation diagram over the canonical closure enumeration, constant
/// positions, and the meet table in closure coordinates.
pub fn type_key(m: &FinStructure, tuple: &[Point]) -> TypeKey {
    let closure = closure_enumeration(m, tuple);
    let pos =
        |p: Point| -> u32 { closure.iter().position(|&q| q == p).unwrap() as u32 };
    let mut key: Vec<u32> = Vec::new();
    key.push(tuple.len() as u32);
    for &t in tuple {
        key.push(pos(t));
    }
    key.push(closure.len() as u32);
    for &c in m.constant_points() {
        key.push(pos(c));
    }
    let sig = m.signature();
    for (ri, rel) in sig.relations.iter().enumerate() {
        key.push(u32::MAX); // relation separator
        if closure.is_empty() {
            continue;
        }
        let arity = rel.arity;
        let mut idx = vec![0usize; arity];
        loop {
            let t: Vec<Point> = idx.iter().map(|&i| closure[i]).collect();
            if m.holds(ri, &t) {
                for &i in &idx {
                    key.push(i as u32);
                }
            }
            // Odometer over closure positions, lexicographic.
            let mut d = arity;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < closure.len() {
                    break;
                }
                idx[d] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    if m.has_meet() {
        key.push(u32::MAX);
        for (i, &x) in closure.iter().enumerate() {
            for &y in &closure[i..] {
                key.push(pos(m.meet(x, y)));
            }
        }
    }
    TypeKey(key.into_boxed_slice())
}

/// Whether the correspondence `a_i -> b_i`, extended over constants and
/// closure terms, is a well-defined isomorphism of generated substructures.
pub fn tuple_type_equal(
    m: &FinStructure,
    a: &[Point],
    b: &[Point],
) -> Result<bool, StructureError> {
    if a.len() != b.len() {
        return Err(StructureError::LengthMismatch);
    }
    let ca = closure_enumeration(m, a);
    let cb = closure_enumeration(m, b);
    if ca.len() != cb.len() {
        return Ok(false);
    }
    // The canonical enumerations are built by the same procedure; position i
    // corresponds to position i exactly when the equality patterns agree at
    // every step, which the checks below detect as a diagram mismatch.
    for (&x, &y) in a.iter().zip(b.iter()) {
        let px = ca.iter().position(|&q| q == x).unwrap();
        let py = cb.iter().position(|&q| q == y).unwrap();
        if px != py {
            return Ok(false);
        }
    }
    for (ci, _) in m.signature().constants.iter().enumerate() {
        let c = m.constant(ci);
        let px = ca.iter().position(|&q| q == c).unwrap();
        let py = cb.iter().position(|&q| q == c).unwrap();
        if px != py {
            return Ok(false);
        }
    }
    let sig = m.signature();
    if !ca.is_empty() {
        for (ri, rel) in sig.relations.iter().enumerate() {
            let arity = rel.arity;
            let mut idx = vec![0usize; arity];
            loop {
                let ta: Vec<Point> = idx.iter().map(|&i| ca[i]).collect();
                let tb: Vec<Point> = idx.iter().map(|&i| cb[i]).collect();
                if m.holds(ri, &ta) != m.holds(ri, &tb) {
                    return Ok(false);
                }
                let mut d = arity;
                loop {
                    if d == 0 {
                        break;
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] < ca.len() {
                        break;
                    }
                    idx[d] = 0;
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
    }
    if m.has_meet() {
        for (i, &x) in ca.iter().enumerate() {
            for (j, &y) in ca.iter().enumerate() {
                let zx = ca.iter().position(|&q| q == m.meet(x, y)).unwrap();
                let zy = cb
                    .iter()
                    .position(|&q| q == m.meet(cb[i], cb[j]))
                    .unwrap();
                if zx != zy {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Type equality of `a` and `b` over a base: compares `a ++ base` against
/// `b ++ base`.
pub fn eq_over(
    m: &FinStructure,
    a: &[Point],
    b: &[Point],
    base: &[Point],
) -> Result<bool, StructureError> {
    if a.len() != b.len() {
        return Err(StructureError::LengthMismatch);
    }
    let mut ta = a.to_vec();
    ta.extend_from_slice(base);
    let mut tb = b.to_vec();
    tb.extend_from_slice(base);
    tuple_type_equal(m, &ta, &tb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::Signature;
    use std::sync::Arc;

    fn dlo(n: usize) -> FinStructure {
        let sig = Arc::new(Signature::new(vec![("<", 2)], vec![], false).unwrap());
        let mut m = FinStructure::new(sig, n);
        for i in 0..n {
            for j in i + 1..n {
                m.add_tuple(0, &[i, j]);
            }
        }
        m
    }

    fn meet_tree_fork() -> FinStructure {
        // a < b, a < c, b and c incomparable, meets through a.
        let sig = Arc::new(Signature::new(vec![("<", 2)], vec![], true).unwrap());
        let mut m = FinStructure::new(sig, 3);
        m.add_tuple(0, &[0, 1]);
        m.add_tuple(0, &[0, 2]);
        for x in 0..3 {
            m.set_meet(x, x, x);
        }
        m.set_meet(0, 1, 0);
        m.set_meet(0, 2, 0);
        m.set_meet(1, 2, 0);
        m.validate().unwrap();
        m
    }

    #[test]
    fn pure_set_closure_is_identity() {
        let sig = Arc::new(Signature::new(vec![], vec![], false).unwrap());
        let m = FinStructure::new(sig, 6);
        assert_eq!(generated_substructure(&m, &[3, 5]), vec![3, 5]);
    }

    #[test]
    fn meet_closure_adds_fork_point() {
        let m = meet_tree_fork();
        assert_eq!(generated_substructure(&m, &[1, 2]), vec![0, 1, 2]);
    }

    #[test]
    fn closure_iterates_to_fixpoint_with_constants() {
        // Named point p incomparable to b: closure of {b} must pick up
        // p and then the meet b^p.
        let sig = Arc::new(Signature::new(vec![("<", 2)], vec!["p"], true).unwrap());
        let mut m = FinStructure::new(sig, 3);
        // 0 = root, 1 = p, 2 = b, with 0 < 1 and 0 < 2.
        m.add_tuple(0, &[0, 1]);
        m.add_tuple(0, &[0, 2]);
        for x in 0..3 {
            m.set_meet(x, x, x);
        }
        m.set_meet(0, 1, 0);
        m.set_meet(0, 2, 0);
        m.set_meet(1, 2, 0);
        m.set_constant(0, 1);
        m.validate().unwrap();
        assert_eq!(generated_substructure(&m, &[2]), vec![0, 1, 2]);

        // Brute-force oracle: iterate unions of constants and meets.
        let mut set = std::collections::BTreeSet::from([2usize]);
        set.insert(m.constant(0));
        loop {
            let before = set.len();
            let pts: Vec<_> = set.iter().copied().collect();
            for &x in &pts {
                for &y in &pts {
                    set.insert(m.meet(x, y));
                }
            }
            if set.len() == before {
                break;
            }
        }
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn dlo_pair_types() {
        let m = dlo(3);
        assert!(tuple_type_equal(&m, &[0, 1], &[1, 2]).unwrap());
        assert!(!tuple_type_equal(&m, &[0, 1], &[1, 0]).unwrap());
        assert!(matches!(
            tuple_type_equal(&m, &[0], &[0, 1]),
            Err(StructureError::LengthMismatch)
        ));
    }

    #[test]
    fn graph_adjacent_vs_nonadjacent() {
        let sig = Arc::new(Signature::new(vec![("R", 2)], vec![], false).unwrap());
        let mut m = FinStructure::new(sig, 4);
        m.add_tuple(0, &[0, 1]);
        m.add_tuple(0, &[1, 0]);
        assert!(!tuple_type_equal(&m, &[0, 1], &[2, 3]).unwrap());
        assert!(tuple_type_equal(&m, &[0, 1], &[1, 0]).unwrap());
    }

    #[test]
    fn empty_tuple_has_unique_type() {
        let m = dlo(4);
        assert!(tuple_type_equal(&m, &[], &[]).unwrap());
        assert_eq!(type_key(&m, &[]), type_key(&m, &[]));
    }

    #[test]
    fn type_key_agrees_with_direct_equality() {
        let m = meet_tree_fork();
        let tuples: Vec<Vec<usize>> = vec![
            vec![0],
            vec![1],
            vec![2],
            vec![0, 1],
            vec![1, 2],
            vec![2, 1],
            vec![1, 1],
            vec![0, 2],
        ];
        for a in &tuples {
            for b in &tuples {
                if a.len() != b.len() {
                    continue;
                }
                assert_eq!(
                    type_key(&m, a) == type_key(&m, b),
                    tuple_type_equal(&m, a, b).unwrap(),
                    "key/equality disagree on {a:?} vs {b:?}"
                );
            }
        }
    }

    #[test]
    fn repeated_entries_follow_equality_pattern() {
        let m = dlo(3);
        assert!(tuple_type_equal(&m, &[1, 1], &[2, 2]).unwrap());
        assert!(!tuple_type_equal(&m, &[1, 1], &[1, 2]).unwrap());
    }
}
