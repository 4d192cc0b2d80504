//! The shipped amalgamation classes: membership tests, deterministic
//! amalgam insertion rules, and one-point-extension enumerators.
//!
//! Amalgams follow one convention throughout: the left side is kept as-is
//! and right-side points are inserted one at a time; wherever the class
//! axioms leave the relation between a fresh right point and an existing
//! point undecided, the existing point is placed first (below, or pointing
//! at, the new one). For order-like classes this is what realizes the
//! canonical independent amalgam with the left side low.

use crate::structures::{FinStructure, Point, Signature, StructureError};
use std::sync::Arc;

use super::FraisseError;

/// Identifier of a shipped class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassId {
    PureSet,
    Dlo,
    RandomGraph,
    HensonK3,
    Tournament,
    RandomPoset,
    MeetTree,
    MeetTreeWithPoint,
    CircularOrder,
    CircularOrderWithPoint,
    OrderedRandomGraph,
}

impl ClassId {
    pub fn all() -> &'static [ClassId] {
        &[
            ClassId::PureSet,
            ClassId::Dlo,
            ClassId::RandomGraph,
            ClassId::HensonK3,
            ClassId::Tournament,
            ClassId::RandomPoset,
            ClassId::MeetTree,
            ClassId::MeetTreeWithPoint,
            ClassId::CircularOrder,
            ClassId::CircularOrderWithPoint,
            ClassId::OrderedRandomGraph,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassId::PureSet => "pure-set",
            ClassId::Dlo => "dlo",
            ClassId::RandomGraph => "random-graph",
            ClassId::HensonK3 => "henson-k3",
            ClassId::Tournament => "tournament",
            ClassId::RandomPoset => "random-poset",
            ClassId::MeetTree => "tree",
            ClassId::MeetTreeWithPoint => "tree-point",
            ClassId::CircularOrder => "circular",
            ClassId::CircularOrderWithPoint => "circular-point",
            ClassId::OrderedRandomGraph => "ordered-random-graph",
        }
    }

    pub fn by_name(name: &str) -> Option<ClassId> {
        ClassId::all().iter().copied().find(|c| c.name() == name)
    }

    pub fn signature(self) -> Signature {
        let sig = match self {
            ClassId::PureSet => Signature::new(vec![], vec![], false),
            ClassId::Dlo => Signature::new(vec![("<", 2)], vec![], false),
            ClassId::RandomGraph | ClassId::HensonK3 => {
                Signature::new(vec![("R", 2)], vec![], false)
            }
            ClassId::Tournament => Signature::new(vec![("R", 2)], vec![], false),
            ClassId::RandomPoset => Signature::new(vec![("<", 2)], vec![], false),
            ClassId::MeetTree => Signature::new(vec![("<", 2)], vec![], true),
            ClassId::MeetTreeWithPoint => Signature::new(vec![("<", 2)], vec!["p"], true),
            ClassId::CircularOrder => Signature::new(vec![("C", 3)], vec![], false),
            ClassId::CircularOrderWithPoint => Signature::new(vec![("C", 3)], vec!["p"], false),
            ClassId::OrderedRandomGraph => Signature::new(vec![("<", 2), ("R", 2)], vec![], false),
        };
        sig.expect("catalog signatures are valid")
    }

    /// Most new points a single generator can force into a substructure
    /// (one fork point for meet trees, nothing elsewhere).
    pub fn closure_bound(self) -> usize {
        match self {
            ClassId::MeetTree | ClassId::MeetTreeWithPoint => 2,
            _ => 1,
        }
    }

    pub fn has_constants(self) -> bool {
        matches!(
            self,
            ClassId::MeetTreeWithPoint | ClassId::CircularOrderWithPoint
        )
    }
}

/// Points of a linear order sorted ascending.
pub(crate) fn linear_seq(m: &FinStructure, lt: usize) -> Vec<Point> {
    let mut seq: Vec<Point> = m.points().collect();
    seq.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if m.lt(lt, a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    seq
}

/// Linearization of a circular order cutting at `anchor` (anchor first).
pub(crate) fn circular_seq(m: &FinStructure, c3: usize, anchor: Point) -> Vec<Point> {
    let mut rest: Vec<Point> = m.points().filter(|&p| p != anchor).collect();
    rest.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if m.holds(c3, &[anchor, a, b]) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let mut seq = vec![anchor];
    seq.extend(rest);
    seq
}

fn check_strict_linear(m: &FinStructure, lt: usize) -> bool {
    let seq = linear_seq(m, lt);
    for (i, &x) in seq.iter().enumerate() {
        if m.lt(lt, x, x) {
            return false;
        }
        for &y in &seq[i + 1..] {
            if !m.lt(lt, x, y) || m.lt(lt, y, x) {
                return false;
            }
        }
    }
    true
}

fn check_strict_partial(m: &FinStructure, lt: usize) -> bool {
    let n = m.size();
    for x in 0..n {
        if m.lt(lt, x, x) {
            return false;
        }
        for y in 0..n {
            if m.lt(lt, x, y) && m.lt(lt, y, x) {
                return false;
            }
            if !m.lt(lt, x, y) {
                continue;
            }
            for z in 0..n {
                if m.lt(lt, y, z) && !m.lt(lt, x, z) {
                    return false;
                }
            }
        }
    }
    true
}

fn check_graph(m: &FinStructure, r: usize) -> bool {
    let n = m.size();
    for x in 0..n {
        if m.holds(r, &[x, x]) {
            return false;
        }
        for y in 0..n {
            if m.holds(r, &[x, y]) != m.holds(r, &[y, x]) {
                return false;
            }
        }
    }
    true
}

fn has_triangle(m: &FinStructure, r: usize) -> bool {
    let n = m.size();
    for x in 0..n {
        for y in x + 1..n {
            if !m.holds(r, &[x, y]) {
                continue;
            }
            for z in y + 1..n {
                if m.holds(r, &[x, z]) && m.holds(r, &[y, z]) {
                    return true;
                }
            }
        }
    }
    false
}

fn check_tournament(m: &FinStructure, r: usize) -> bool {
    let n = m.size();
    for x in 0..n {
        if m.holds(r, &[x, x]) {
            return false;
        }
        for y in x + 1..n {
            if m.holds(r, &[x, y]) == m.holds(r, &[y, x]) {
                return false;
            }
        }
    }
    true
}

fn check_circular(m: &FinStructure, c3: usize) -> bool {
    let n = m.size();
    // No tuple with a repeated entry may hold.
    for t in m.tuples(c3) {
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return false;
        }
    }
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if x == y || y == z || x == z {
                    continue;
                }
                let c = m.holds(c3, &[x, y, z]);
                // Totality + asymmetry on distinct triples.
                if c == m.holds(c3, &[x, z, y]) {
                    return false;
                }
                // Cyclic shift invariance.
                if c != m.holds(c3, &[y, z, x]) {
                    return false;
                }
                if !c {
                    continue;
                }
                for w in 0..n {
                    if w == x || w == y || w == z {
                        continue;
                    }
                    if m.holds(c3, &[x, z, w]) && !m.holds(c3, &[x, y, w]) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Membership in the class's universal axioms. Signature mismatch is an
/// error; a well-formed structure that fails the axioms is `Ok(false)`.
pub fn is_member(id: ClassId, m: &FinStructure) -> Result<bool, StructureError> {
    if **m.signature() != id.signature() {
        return Err(StructureError::SignatureMismatch);
    }
    m.validate()?;
    let ok = match id {
        ClassId::PureSet => true,
        ClassId::Dlo => check_strict_linear(m, 0),
        ClassId::RandomGraph => check_graph(m, 0),
        ClassId::HensonK3 => check_graph(m, 0) && !has_triangle(m, 0),
        ClassId::Tournament => check_tournament(m, 0),
        ClassId::RandomPoset => check_strict_partial(m, 0),
        // validate() already enforced the tree axioms and the meet table.
        ClassId::MeetTree | ClassId::MeetTreeWithPoint => true,
        ClassId::CircularOrder | ClassId::CircularOrderWithPoint => check_circular(m, 0),
        ClassId::OrderedRandomGraph => {
            let lt = m.signature().relation("<").unwrap();
            let r = m.signature().relation("R").unwrap();
            check_strict_linear(m, lt) && check_graph(m, r)
        }
    };
    Ok(ok)
}

/// The substructure generated by nothing: empty, or the named point alone.
pub fn empty_member(id: ClassId) -> FinStructure {
    let sig = Arc::new(id.signature());
    if id.has_constants() {
        let mut m = FinStructure::new(sig, 1);
        m.set_constant(0, 0);
        if m.has_meet() {
            m.set_meet(0, 0, 0);
        }
        m
    } else {
        FinStructure::new(sig, 0)
    }
}

/// A one-point member, used as the default seed block for shift systems.
/// Only defined for constant-free classes; classes with a named point start
/// from `empty_member` instead.
pub fn singleton_member(id: ClassId) -> FinStructure {
    let sig = Arc::new(id.signature());
    let mut m = FinStructure::new(sig, 1);
    if m.has_meet() {
        m.set_meet(0, 0, 0);
    }
    m
}

// ---------------------------------------------------------------------------
// Amalgam insertion
// ---------------------------------------------------------------------------

/// Context for inserting the right side of an amalgam into a growing
/// structure. `base_d[i]` in the target corresponds to `base_right[i]` in
/// `right`; both lists are parallel and duplicate-free.
pub(crate) struct Insertion<'a> {
    pub d: &'a mut FinStructure,
    pub right: &'a FinStructure,
    pub base_d: &'a [Point],
    pub base_right: &'a [Point],
    /// right index -> index in `d` (base points prefilled).
    pub rmap: Vec<Option<Point>>,
}

impl<'a> Insertion<'a> {
    fn new(
        d: &'a mut FinStructure,
        right: &'a FinStructure,
        base_d: &'a [Point],
        base_right: &'a [Point],
    ) -> Insertion<'a> {
        let mut rmap = vec![None; right.size()];
        for (i, &br) in base_right.iter().enumerate() {
            rmap[br] = Some(base_d[i]);
        }
        Insertion {
            d,
            right,
            base_d,
            base_right,
            rmap,
        }
    }

    fn pending(&self) -> Vec<Point> {
        (0..self.right.size())
            .filter(|&r| self.rmap[r].is_none())
            .collect()
    }
}

/// Inserts every right-side point not in the base into `d` following the
/// class's canonical rules, returning the full right -> d index map.
pub fn amalgam_extend(
    id: ClassId,
    d: &mut FinStructure,
    right: &FinStructure,
    base_d: &[Point],
    base_right: &[Point],
) -> Result<Vec<Point>, FraisseError> {
    if d.signature() != right.signature() {
        return Err(FraisseError::Structure(StructureError::SignatureMismatch));
    }
    debug_assert_eq!(base_d.len(), base_right.len());
    let lt_rel = d.signature().relation("<");
    let r_rel = d.signature().relation("R");
    let mut ins = Insertion::new(d, right, base_d, base_right);
    match id {
        ClassId::PureSet => insert_pure(&mut ins),
        ClassId::Dlo => insert_linear(&mut ins, 0, None),
        ClassId::RandomGraph | ClassId::HensonK3 => insert_free(&mut ins, &[0]),
        ClassId::Tournament => insert_tournament(&mut ins, 0),
        ClassId::RandomPoset => insert_poset(&mut ins, 0),
        ClassId::MeetTree | ClassId::MeetTreeWithPoint => insert_tree(&mut ins)?,
        ClassId::CircularOrder | ClassId::CircularOrderWithPoint => {
            let anchor = if id.has_constants() {
                Some(ins.d.constant(0))
            } else {
                None
            };
            insert_circular(&mut ins, 0, anchor)
        }
        ClassId::OrderedRandomGraph => {
            insert_linear(&mut ins, lt_rel.unwrap(), r_rel)
        }
    }
    let map = ins
        .rmap
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .expect("all right points placed");
    Ok(map)
}

fn insert_pure(ins: &mut Insertion) {
    for r in ins.pending() {
        let q = ins.d.extend_points(1);
        ins.rmap[r] = Some(q);
    }
}

/// Free amalgamation over relational signatures: fresh points copy their
/// relations to already-placed right points and gain none to the rest.
fn insert_free(ins: &mut Insertion, rels: &[usize]) {
    for r in ins.pending() {
        let q = ins.d.extend_points(1);
        for &rel in rels {
            for (r2, d2) in placed(ins) {
                if ins.right.holds(rel, &[r, r2]) {
                    ins.d.add_tuple(rel, &[q, d2]);
                }
                if ins.right.holds(rel, &[r2, r]) {
                    ins.d.add_tuple(rel, &[d2, q]);
                }
            }
            if ins.right.holds(rel, &[r, r]) {
                ins.d.add_tuple(rel, &[q, q]);
            }
        }
        ins.rmap[r] = Some(q);
    }
}

fn placed(ins: &Insertion) -> Vec<(Point, Point)> {
    (0..ins.right.size())
        .filter_map(|r| ins.rmap[r].map(|d| (r, d)))
        .collect()
}

/// Number of base points strictly below `p`, computed against a base list
/// sorted ascending in the order `lt` of `m`.
fn cut_rank(m: &FinStructure, lt: usize, sorted_base: &[Point], p: Point) -> usize {
    sorted_base.partition_point(|&b| m.lt(lt, b, p))
}

/// Linear-order merge: cuts over the base are forced; inside a shared cut
/// every existing point goes below the fresh one. An optional graph
/// relation rides along freely (ordered random graph).
fn insert_linear(ins: &mut Insertion, lt: usize, graph: Option<usize>) {
    // Base sorted ascending; identical order on both sides since the base
    // embeds in each.
    let mut base_d_sorted = ins.base_d.to_vec();
    base_d_sorted.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if ins.d.lt(lt, a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let mut base_r_sorted = ins.base_right.to_vec();
    base_r_sorted.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if ins.right.lt(lt, a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });

    // Ascending right order keeps same-cut insertions consistent with the
    // right side's own order.
    let mut todo = ins.pending();
    todo.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if ins.right.lt(lt, a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });

    // Base membership and cut ranks of all existing points, computed once;
    // fresh points record their own cut as they arrive.
    let mut base_index: std::collections::BTreeMap<Point, usize> = std::collections::BTreeMap::new();
    for (i, &b) in ins.base_d.iter().enumerate() {
        base_index.insert(b, i);
    }
    let mut cut_d: Vec<usize> = (0..ins.d.size())
        .map(|e| cut_rank(ins.d, lt, &base_d_sorted, e))
        .collect();

    for r in todo {
        let r_cut = cut_rank(ins.right, lt, &base_r_sorted, r);
        let q = ins.d.extend_points(1);
        let old = q;
        for e in 0..old {
            let below = if let Some(&i) = base_index.get(&e) {
                // Base point: copy the right side's verdict.
                ins.right.lt(lt, ins.base_right[i], r)
            } else {
                // Forced through the base, or same cut: existing first.
                cut_d[e] <= r_cut
            };
            if below {
                ins.d.add_tuple(lt, &[e, q]);
            } else {
                ins.d.add_tuple(lt, &[q, e]);
            }
        }
        cut_d.push(r_cut);
        if let Some(gr) = graph {
            for (r2, d2) in placed(ins) {
                if ins.right.holds(gr, &[r, r2]) {
                    ins.d.add_tuple(gr, &[q, d2]);
                    ins.d.add_tuple(gr, &[d2, q]);
                }
            }
        }
        ins.rmap[r] = Some(q);
    }
}

/// Tournament merge: placed pairs copy the right side; undecided cross
/// pairs point from the existing side at the fresh point.
fn insert_tournament(ins: &mut Insertion, rel: usize) {
    for r in ins.pending() {
        let q = ins.d.extend_points(1);
        let old = q;
        let mut decided = vec![false; old];
        for (r2, d2) in placed(ins) {
            decided[d2] = true;
            if ins.right.holds(rel, &[r, r2]) {
                ins.d.add_tuple(rel, &[q, d2]);
            } else {
                ins.d.add_tuple(rel, &[d2, q]);
            }
        }
        for e in 0..old {
            if !decided[e] {
                ins.d.add_tuple(rel, &[e, q]);
            }
        }
        ins.rmap[r] = Some(q);
    }
}

/// Poset merge: cross comparabilities are exactly those forced through the
/// base; nothing else is added.
fn insert_poset(ins: &mut Insertion, lt: usize) {
    for r in ins.pending() {
        let q = ins.d.extend_points(1);
        let old = q;
        let mut decided = vec![false; old];
        for (r2, d2) in placed(ins) {
            decided[d2] = true;
            if ins.right.lt(lt, r, r2) {
                ins.d.add_tuple(lt, &[q, d2]);
            } else if ins.right.lt(lt, r2, r) {
                ins.d.add_tuple(lt, &[d2, q]);
            }
        }
        for e in 0..old {
            if decided[e] {
                continue;
            }
            let above = ins.base_d.iter().enumerate().any(|(i, &bd)| {
                ins.d.le(lt, e, bd) && ins.right.lt(lt, ins.base_right[i], r)
            });
            let below = ins.base_d.iter().enumerate().any(|(i, &bd)| {
                ins.d.le(lt, bd, e) && ins.right.lt(lt, r, ins.base_right[i])
            });
            if above {
                ins.d.add_tuple(lt, &[e, q]);
            } else if below {
                ins.d.add_tuple(lt, &[q, e]);
            }
        }
        ins.rmap[r] = Some(q);
    }
}

/// Circular-order merge on the linearization cut at an anchor (the named
/// point when present, the first base point otherwise): base cuts are
/// forced, same-arc fresh points land after existing ones.
fn insert_circular(ins: &mut Insertion, c3: usize, anchor: Option<Point>) {
    let todo = ins.pending();
    if todo.is_empty() {
        return;
    }
    // Current sequence of d, cut at the anchor. With an empty base the two
    // sides are simply concatenated, each cut at its own first point.
    let anchor_d = anchor.or_else(|| ins.base_d.first().copied());
    let mut seq: Vec<Point> = match anchor_d {
        Some(a) => circular_seq(ins.d, c3, a),
        None => {
            if ins.d.size() == 0 {
                Vec::new()
            } else {
                circular_seq(ins.d, c3, 0)
            }
        }
    };
    let anchor_r = if anchor.is_some() {
        Some(ins.right.constant(0))
    } else {
        ins.base_right.first().copied()
    };
    let right_seq: Vec<Point> = match anchor_r {
        Some(a) => circular_seq(ins.right, c3, a),
        None => circular_seq(ins.right, c3, todo[0]),
    };

    // Base rank of r = how many base points precede it in the right
    // sequence; r belongs at the end of the corresponding arc of `seq`.
    let mut is_base_d = vec![false; ins.d.size() + ins.pending().len()];
    for &b in ins.base_d {
        is_base_d[b] = true;
    }
    for (pos, &r) in right_seq.iter().enumerate() {
        if ins.rmap[r].is_some() {
            continue;
        }
        let r_rank = right_seq[..pos]
            .iter()
            .filter(|x| ins.base_right.contains(x))
            .count();
        let q = ins.d.extend_points(1);
        // Slot = just before the (r_rank + 1)-th base point of seq, or the
        // end when the arc is the last one.
        let mut slot = seq.len();
        let mut seen = 0usize;
        for (i, &e) in seq.iter().enumerate() {
            if is_base_d.get(e).copied().unwrap_or(false) {
                seen += 1;
                if seen == r_rank + 1 {
                    slot = i;
                    break;
                }
            }
        }
        seq.insert(slot, q);
        ins.rmap[r] = Some(q);
        set_circular_triples(ins.d, c3, &seq, q);
    }
}

/// Chain-merge for meet trees. Right points are inserted shallowest first;
/// each lands directly below the least placed point above it, or as a new
/// child of the greatest placed point below it, or (first point over an
/// empty base) on a fresh root below everything.
fn insert_tree(ins: &mut Insertion) -> Result<(), FraisseError> {
    let lt = 0;
    let mut todo = ins.pending();
    todo.sort_by_key(|&r| {
        let depth = (0..ins.right.size())
            .filter(|&z| ins.right.lt(lt, z, r))
            .count();
        (depth, r)
    });
    for r in todo {
        let placed_pairs = placed(ins);
        let mut below: Vec<Point> = Vec::new(); // images of placed points < r
        let mut above: Vec<Point> = Vec::new(); // images of placed points > r
        for &(r2, d2) in &placed_pairs {
            if ins.right.lt(lt, r2, r) {
                below.push(d2);
            } else if ins.right.lt(lt, r, r2) {
                above.push(d2);
            }
        }
        let q = if let Some(&v0) = above
            .iter()
            .min_by(|&&a, &&b| cmp_by_order(ins.d, lt, a, b))
        {
            insert_below(ins.d, lt, v0)
        } else if let Some(&u0) = below
            .iter()
            .max_by(|&&a, &&b| cmp_by_order(ins.d, lt, a, b))
        {
            insert_at_node(ins.d, lt, u0)
        } else if ins.d.size() == 0 {
            let q = ins.d.extend_points(1);
            ins.d.set_meet(q, q, q);
            q
        } else {
            // No placed relatives at all: fresh root, new point off it.
            let root = new_root(ins.d, lt);
            insert_at_node(ins.d, lt, root)
        };
        ins.rmap[r] = Some(q);
        // The placement must reproduce the right side exactly; anything else
        // is a bug in the insertion rules.
        for &(r2, d2) in &placed_pairs {
            let want_lt = ins.right.lt(lt, r2, r);
            let want_gt = ins.right.lt(lt, r, r2);
            if ins.d.lt(lt, d2, q) != want_lt || ins.d.lt(lt, q, d2) != want_gt {
                return Err(FraisseError::Amalgamation(format!(
                    "tree insertion misplaced point {r} relative to {r2}"
                )));
            }
            let want_meet = ins.right.meet(r, r2);
            if let Some(wm) = ins.rmap[want_meet] {
                if ins.d.meet(q, d2) != wm {
                    return Err(FraisseError::Amalgamation(format!(
                        "tree insertion broke meet of {r} and {r2}"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn cmp_by_order(m: &FinStructure, lt: usize, a: Point, b: Point) -> std::cmp::Ordering {
    if a == b {
        std::cmp::Ordering::Equal
    } else if m.lt(lt, a, b) {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

/// New maximal point directly above `u`: comparable exactly with the chain
/// below `u` and `u` itself.
fn insert_at_node(d: &mut FinStructure, lt: usize, u: Point) -> Point {
    let q = d.extend_points(1);
    let old = q;
    for e in 0..old {
        if d.le(lt, e, u) {
            d.add_tuple(lt, &[e, q]);
        }
    }
    d.set_meet(q, q, q);
    for e in 0..old {
        let m = if d.le(lt, e, u) { e } else { d.meet(u, e) };
        d.set_meet(q, e, m);
    }
    q
}

/// New point squeezed into the cover edge below `v`: above everything
/// strictly below `v`, below everything at or above `v`.
fn insert_below(d: &mut FinStructure, lt: usize, v: Point) -> Point {
    let q = d.extend_points(1);
    let old = q;
    for e in 0..old {
        if d.le(lt, v, e) {
            d.add_tuple(lt, &[q, e]);
        } else if d.lt(lt, e, v) {
            d.add_tuple(lt, &[e, q]);
        }
    }
    d.set_meet(q, q, q);
    for e in 0..old {
        let m = if d.le(lt, v, e) {
            q
        } else if d.lt(lt, e, v) {
            e
        } else {
            d.meet(v, e)
        };
        d.set_meet(q, e, m);
    }
    q
}

/// New minimum below every existing point.
fn new_root(d: &mut FinStructure, lt: usize) -> Point {
    let q = d.extend_points(1);
    let old = q;
    for e in 0..old {
        d.add_tuple(lt, &[q, e]);
    }
    d.set_meet(q, q, q);
    for e in 0..old {
        d.set_meet(q, e, q);
    }
    q
}

// ---------------------------------------------------------------------------
// One-point extensions
// ---------------------------------------------------------------------------

/// All one-generator extensions of a member `a`, each of size at most
/// `|a| + closure_bound`, with `a` embedded as the identity on `0..a.size()`
/// and the whole structure generated by `a` plus one new element.
/// Deterministic order; duplicates (as labeled diagrams) removed.
pub fn one_point_extensions(id: ClassId, a: &FinStructure) -> Vec<FinStructure> {
    let n = a.size();
    let mut out: Vec<FinStructure> = Vec::new();
    match id {
        ClassId::PureSet => {
            let mut b = a.clone();
            b.extend_points(1);
            out.push(b);
        }
        ClassId::Dlo => {
            let seq = linear_seq(a, 0);
            for cut in 0..=n {
                let mut b = a.clone();
                let q = b.extend_points(1);
                for (i, &e) in seq.iter().enumerate() {
                    if i < cut {
                        b.add_tuple(0, &[e, q]);
                    } else {
                        b.add_tuple(0, &[q, e]);
                    }
                }
                out.push(b);
            }
        }
        ClassId::RandomGraph | ClassId::HensonK3 => {
            for mask in 0u64..(1 << n) {
                let mut b = a.clone();
                let q = b.extend_points(1);
                for e in 0..n {
                    if mask >> e & 1 == 1 {
                        b.add_tuple(0, &[e, q]);
                        b.add_tuple(0, &[q, e]);
                    }
                }
                if id == ClassId::HensonK3 && has_triangle(&b, 0) {
                    continue;
                }
                out.push(b);
            }
        }
        ClassId::Tournament => {
            for mask in 0u64..(1 << n) {
                let mut b = a.clone();
                let q = b.extend_points(1);
                for e in 0..n {
                    if mask >> e & 1 == 1 {
                        b.add_tuple(0, &[e, q]);
                    } else {
                        b.add_tuple(0, &[q, e]);
                    }
                }
                out.push(b);
            }
        }
        ClassId::RandomPoset => {
            // Each existing point is below, above, or incomparable to the
            // new one; keep the combinations forming a partial order.
            let mut choice = vec![0u8; n];
            loop {
                let mut b = a.clone();
                let q = b.extend_points(1);
                for e in 0..n {
                    match choice[e] {
                        1 => b.add_tuple(0, &[e, q]),
                        2 => b.add_tuple(0, &[q, e]),
                        _ => {}
                    }
                }
                if check_strict_partial(&b, 0) {
                    out.push(b);
                }
                let mut d = 0;
                loop {
                    if d == n {
                        break;
                    }
                    choice[d] += 1;
                    if choice[d] < 3 {
                        break;
                    }
                    choice[d] = 0;
                    d += 1;
                }
                if d == n {
                    break;
                }
            }
        }
        ClassId::MeetTree | ClassId::MeetTreeWithPoint => {
            if n == 0 {
                let mut b = a.clone();
                let q = b.extend_points(1);
                b.set_meet(q, q, q);
                out.push(b);
            } else {
                for u in 0..n {
                    let mut b = a.clone();
                    insert_at_node(&mut b, 0, u);
                    out.push(b);
                }
                for v in 0..n {
                    let mut b = a.clone();
                    insert_below(&mut b, 0, v);
                    out.push(b);
                }
                // Fork: fresh point below v, generator hanging off it.
                for v in 0..n {
                    let mut b = a.clone();
                    let f = insert_below(&mut b, 0, v);
                    insert_at_node(&mut b, 0, f);
                    out.push(b);
                }
                let mut b = a.clone();
                new_root(&mut b, 0);
                out.push(b);
            }
        }
        ClassId::CircularOrder | ClassId::CircularOrderWithPoint => {
            let anchor = if id.has_constants() {
                Some(a.constant(0))
            } else {
                (n > 0).then_some(0)
            };
            let seq = match anchor {
                Some(anchor) => circular_seq(a, 0, anchor),
                None => Vec::new(),
            };
            let slots = if n <= 1 { 1 } else { n };
            for slot in 0..slots {
                let mut b = a.clone();
                let q = b.extend_points(1);
                let mut s = seq.clone();
                s.insert(slot + 1.min(s.len()), q);
                set_circular_triples(&mut b, 0, &s, q);
                out.push(b);
            }
        }
        ClassId::OrderedRandomGraph => {
            let lt = a.signature().relation("<").unwrap();
            let r = a.signature().relation("R").unwrap();
            let seq = linear_seq(a, lt);
            for cut in 0..=n {
                for mask in 0u64..(1 << n) {
                    let mut b = a.clone();
                    let q = b.extend_points(1);
                    for (i, &e) in seq.iter().enumerate() {
                        if i < cut {
                            b.add_tuple(lt, &[e, q]);
                        } else {
                            b.add_tuple(lt, &[q, e]);
                        }
                    }
                    for e in 0..n {
                        if mask >> e & 1 == 1 {
                            b.add_tuple(r, &[e, q]);
                            b.add_tuple(r, &[q, e]);
                        }
                    }
                    out.push(b);
                }
            }
        }
    }
    // Deduplicate literal diagrams (rules can coincide on small cores).
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|b| {
        let doc = serde_json::to_string(&crate::structures::StructureDoc::from_structure(b))
            .expect("structure serializes");
        seen.insert(doc)
    });
    debug_assert!(out
        .iter()
        .all(|b| is_member(id, b).unwrap_or(false)));
    out
}

/// Fills in all triples involving `q` for a circular order given the full
/// cut sequence, then closes under cyclic shifts.
fn set_circular_triples(b: &mut FinStructure, c3: usize, seq: &[Point], q: Point) {
    let pos = |x: Point| seq.iter().position(|&e| e == x).unwrap();
    let qp = pos(q);
    for (i, &x) in seq.iter().enumerate() {
        for (j, &y) in seq.iter().enumerate() {
            if x == q || y == q || i == j {
                continue;
            }
            let (a2, b2, c2) = (qp, i, j);
            if (a2 < b2 && b2 < c2) || (b2 < c2 && c2 < a2) || (c2 < a2 && a2 < b2) {
                b.add_tuple(c3, &[q, x, y]);
                b.add_tuple(c3, &[x, y, q]);
                b.add_tuple(c3, &[y, q, x]);
            }
        }
    }
}
