//! Partial injective maps between structures and the embedding search.

use super::{FinStructure, Point, StructureError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A finite injective map from points of a source structure to points of a
/// target structure. Whether it is an embedding is a property checked
/// against concrete structures, not part of the value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialMap {
    pairs: BTreeMap<Point, Point>,
}

impl PartialMap {
    pub fn new() -> PartialMap {
        PartialMap::default()
    }

    pub fn identity_on(points: impl IntoIterator<Item = Point>) -> PartialMap {
        let mut m = PartialMap::new();
        for p in points {
            m.insert(p, p).unwrap();
        }
        m
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (Point, Point)>,
    ) -> Result<PartialMap, StructureError> {
        let mut m = PartialMap::new();
        for (a, b) in pairs {
            m.insert(a, b)?;
        }
        Ok(m)
    }

    /// Inserts a pair, rejecting anything that breaks functionality or
    /// injectivity. Re-inserting an existing pair is a no-op.
    pub fn insert(&mut self, src: Point, dst: Point) -> Result<(), StructureError> {
        if let Some(&old) = self.pairs.get(&src) {
            if old != dst {
                return Err(StructureError::InvalidStructure(format!(
                    "map already sends {src} to {old}"
                )));
            }
            return Ok(());
        }
        if self.pairs.values().any(|&v| v == dst) {
            return Err(StructureError::InvalidStructure(format!(
                "map is not injective at image {dst}"
            )));
        }
        self.pairs.insert(src, dst);
        Ok(())
    }

    pub fn get(&self, src: Point) -> Option<Point> {
        self.pairs.get(&src).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = Point> + '_ {
        self.pairs.keys().copied()
    }

    pub fn range(&self) -> impl Iterator<Item = Point> + '_ {
        self.pairs.values().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.pairs.iter().map(|(&a, &b)| (a, b))
    }

    pub fn inverse(&self) -> PartialMap {
        PartialMap {
            pairs: self.pairs.iter().map(|(&a, &b)| (b, a)).collect(),
        }
    }

    /// `other` after `self`, defined where the chain is.
    pub fn compose(&self, other: &PartialMap) -> PartialMap {
        let mut pairs = BTreeMap::new();
        for (&a, &b) in &self.pairs {
            if let Some(c) = other.get(b) {
                // Injectivity of the inputs keeps the composite injective.
                pairs.insert(a, c);
            }
        }
        PartialMap { pairs }
    }

    /// Checks that this map is an embedding of `a` into `m` on its domain:
    /// it preserves and reflects every relation, sends constants to
    /// constants (when both are in play), and commutes with meets whose
    /// arguments and value are all in the domain.
    pub fn is_embedding(&self, a: &FinStructure, m: &FinStructure) -> bool {
        if a.signature() != m.signature() {
            return false;
        }
        for (src, dst) in self.iter() {
            if src >= a.size() || dst >= m.size() {
                return false;
            }
        }
        let dom: Vec<Point> = self.domain().collect();
        let sig = a.signature();
        for (ri, rel) in sig.relations.iter().enumerate() {
            let arity = rel.arity;
            let mut tuple = vec![0; arity];
            let mut image = vec![0; arity];
            if !check_rel_on(a, m, self, ri, &dom, &mut tuple, &mut image, 0, arity) {
                return false;
            }
        }
        for (ci, _) in sig.constants.iter().enumerate() {
            let c = a.constant(ci);
            if let Some(img) = self.get(c) {
                if img != m.constant(ci) {
                    return false;
                }
            }
        }
        if sig.has_meet {
            for &x in &dom {
                for &y in &dom {
                    let z = a.meet(x, y);
                    if let Some(zi) = self.get(z) {
                        if m.meet(self.get(x).unwrap(), self.get(y).unwrap()) != zi {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

fn check_rel_on(
    a: &FinStructure,
    m: &FinStructure,
    f: &PartialMap,
    ri: usize,
    dom: &[Point],
    tuple: &mut [Point],
    image: &mut [Point],
    depth: usize,
    arity: usize,
) -> bool {
    if depth == arity {
        return a.holds(ri, tuple) == m.holds(ri, image);
    }
    for &p in dom {
        tuple[depth] = p;
        image[depth] = f.get(p).unwrap();
        if !check_rel_on(a, m, f, ri, dom, tuple, image, depth + 1, arity) {
            return false;
        }
    }
    true
}

/// All embeddings of `a` into `m` extending `over`, ordered
/// lexicographically by image tuple `(f(0), ..., f(n-1))`.
pub fn find_embeddings(
    a: &FinStructure,
    m: &FinStructure,
    over: Option<&PartialMap>,
) -> Result<Vec<PartialMap>, StructureError> {
    if a.signature() != m.signature() {
        return Err(StructureError::SignatureMismatch);
    }
    let n = a.size();
    let mut assignment: Vec<Option<Point>> = vec![None; n];
    let mut used = vec![false; m.size()];
    if let Some(over) = over {
        for (src, dst) in over.iter() {
            if src >= n {
                return Err(StructureError::PointOutOfRange(src, n));
            }
            if dst >= m.size() {
                return Err(StructureError::PointOutOfRange(dst, m.size()));
            }
            assignment[src] = Some(dst);
            used[dst] = true;
        }
    }
    // Constants are forced.
    for ci in 0..a.signature().constants.len() {
        let src = a.constant(ci);
        let dst = m.constant(ci);
        match assignment[src] {
            Some(existing) if existing != dst => return Ok(Vec::new()),
            Some(_) => {}
            None => {
                if used[dst] {
                    return Ok(Vec::new());
                }
                assignment[src] = Some(dst);
                used[dst] = true;
            }
        }
    }
    let free: Vec<Point> = (0..n).filter(|&p| assignment[p].is_none()).collect();
    let mut out = Vec::new();
    search(a, m, &free, 0, &mut assignment, &mut used, &mut out);
    // Backtracking in ascending candidate order yields embeddings ordered by
    // the free points' images; resort by the full image tuple so pinned
    // points participate in the order too.
    out.sort_by(|f1, f2| {
        let k1: Vec<Point> = (0..n).map(|p| f1.get(p).unwrap()).collect();
        let k2: Vec<Point> = (0..n).map(|p| f2.get(p).unwrap()).collect();
        k1.cmp(&k2)
    });
    Ok(out)
}

fn search(
    a: &FinStructure,
    m: &FinStructure,
    free: &[Point],
    depth: usize,
    assignment: &mut Vec<Option<Point>>,
    used: &mut Vec<bool>,
    out: &mut Vec<PartialMap>,
) {
    if depth == free.len() {
        let f = PartialMap::from_pairs(
            assignment
                .iter()
                .enumerate()
                .map(|(src, dst)| (src, dst.unwrap())),
        )
        .expect("assignment is injective by construction");
        if f.is_embedding(a, m) {
            out.push(f);
        }
        return;
    }
    let src = free[depth];
    for dst in 0..m.size() {
        if used[dst] {
            continue;
        }
        if !consistent(a, m, assignment, src, dst) {
            continue;
        }
        assignment[src] = Some(dst);
        used[dst] = true;
        search(a, m, free, depth + 1, assignment, used, out);
        assignment[src] = None;
        used[dst] = false;
    }
}

/// Partial-assignment pruning: binary relations and meets against already
/// assigned points must match. Higher-arity relations are verified at the
/// leaves by the full embedding check.
fn consistent(
    a: &FinStructure,
    m: &FinStructure,
    assignment: &[Option<Point>],
    src: Point,
    dst: Point,
) -> bool {
    let sig = a.signature();
    for (ri, rel) in sig.relations.iter().enumerate() {
        if rel.arity != 2 {
            continue;
        }
        if a.holds(ri, &[src, src]) != m.holds(ri, &[dst, dst]) {
            return false;
        }
        for (other, od) in assignment.iter().enumerate() {
            let Some(od) = *od else { continue };
            if a.holds(ri, &[src, other]) != m.holds(ri, &[dst, od]) {
                return false;
            }
            if a.holds(ri, &[other, src]) != m.holds(ri, &[od, dst]) {
                return false;
            }
        }
    }
    if sig.has_meet {
        for (other, od) in assignment.iter().enumerate() {
            let Some(od) = *od else { continue };
            let z = a.meet(src, other);
            let zi = if z == src {
                Some(dst)
            } else {
                assignment.get(z).copied().flatten()
            };
            if let Some(zi) = zi {
                if m.meet(dst, od) != zi {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::Signature;
    use std::sync::Arc;

    fn graph(n: usize, edges: &[(usize, usize)]) -> FinStructure {
        let sig = Arc::new(Signature::new(vec![("R", 2)], vec![], false).unwrap());
        let mut m = FinStructure::new(sig, n);
        for &(x, y) in edges {
            m.add_tuple(0, &[x, y]);
            m.add_tuple(0, &[y, x]);
        }
        m
    }

    #[test]
    fn edge_into_triangle_has_six_embeddings() {
        let edge = graph(2, &[(0, 1)]);
        let triangle = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let embs = find_embeddings(&edge, &triangle, None).unwrap();
        assert_eq!(embs.len(), 6);
        // Lexicographic on image tuples.
        let images: Vec<Vec<usize>> = embs
            .iter()
            .map(|f| vec![f.get(0).unwrap(), f.get(1).unwrap()])
            .collect();
        let mut sorted = images.clone();
        sorted.sort();
        assert_eq!(images, sorted);
    }

    #[test]
    fn edge_into_edgeless_is_empty() {
        let edge = graph(2, &[(0, 1)]);
        let blank = graph(2, &[]);
        assert!(find_embeddings(&edge, &blank, None).unwrap().is_empty());
    }

    #[test]
    fn empty_structure_has_one_embedding() {
        let empty = graph(0, &[]);
        let triangle = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let embs = find_embeddings(&empty, &triangle, None).unwrap();
        assert_eq!(embs.len(), 1);
        assert!(embs[0].is_empty());
    }

    #[test]
    fn extending_a_full_map_returns_it_or_nothing() {
        let edge = graph(2, &[(0, 1)]);
        let triangle = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let full = PartialMap::from_pairs([(0, 2), (1, 0)]).unwrap();
        let embs = find_embeddings(&edge, &triangle, Some(&full)).unwrap();
        assert_eq!(embs, vec![full]);

        let bad = PartialMap::from_pairs([(0, 0), (1, 0)]);
        assert!(bad.is_err());
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let edge = graph(2, &[(0, 1)]);
        let sig = Arc::new(Signature::new(vec![("S", 2)], vec![], false).unwrap());
        let other = FinStructure::new(sig, 2);
        assert!(matches!(
            find_embeddings(&edge, &other, None),
            Err(StructureError::SignatureMismatch)
        ));
    }

    #[test]
    fn compose_and_inverse() {
        let f = PartialMap::from_pairs([(0, 5), (1, 6)]).unwrap();
        let g = PartialMap::from_pairs([(5, 9)]).unwrap();
        let fg = f.compose(&g);
        assert_eq!(fg.get(0), Some(9));
        assert_eq!(fg.get(1), None);
        assert_eq!(f.inverse().get(5), Some(0));
    }
}
