//! Candidate independence relations over the class catalog: the relation
//! formulas themselves, independent amalgams, the product combinator, the
//! executable axiom checkers, and the splitting tests behind the negative
//! results.
//!
//! Index sets passed to `indep` are sorted and duplicate-free; the helpers
//! here rely on that for binary search and two-pointer intersection.

mod axioms;
mod splitting;

pub use axioms::{check_axiom, Axiom, AxiomReport, CheckBudget, CheckStatus, Counterexample};
pub use splitting::{all_one_types_split, splits, NoCirReport, SplitWitness};

use crate::fraisse::{Amalgam, ClassId, ClassPlugin, FraisseError};
use crate::structures::{
    generated_substructure, FinStructure, PartialMap, Point, StructureError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CirError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Fraisse(#[from] FraisseError),
    #[error("unknown independence relation {0:?}")]
    UnknownCir(String),
    #[error("structure is not a member of class {0}")]
    NotAMember(&'static str),
    #[error("sub-signatures overlap on {0:?}")]
    SignatureOverlap(String),
    #[error("no catalog class carries the combined signature")]
    NoCombinedClass,
    #[error("amalgam does not satisfy the independence relation {0}")]
    NotIndependent(String),
}

/// Evaluable independence formula with relation symbols resolved to table
/// indices of the host signature.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Formula {
    /// A and B intersect inside C.
    Disjoint,
    /// Same-cut pairs over the base are ordered left below right.
    LinearCut { lt: usize },
    /// No relation tuple crosses between the two sides off the base.
    NoCross { rels: Vec<usize> },
    /// Off-base pairs all point left to right.
    Arrows { rel: usize },
    /// Cross comparabilities are exactly those passing through the base.
    ThroughBase { lt: usize },
    /// Fork points toward the named point ordered left below right;
    /// unconstrained points above it meet exactly at it.
    TreeWithPoint { lt: usize },
    /// Delete the named point and use the linear order it induces.
    CircularViaPoint { c3: usize },
    /// The transitivity-defective tree candidate, kept as a fixture.
    NaiveTreeFork { lt: usize },
    All(Vec<Formula>),
}

impl Formula {
    /// Relation names this formula reads, for overlap checks.
    fn relation_names(&self, sig: &crate::structures::Signature) -> Vec<String> {
        match self {
            Formula::Disjoint => vec![],
            Formula::LinearCut { lt } | Formula::ThroughBase { lt } => {
                vec![sig.relations[*lt].name.clone()]
            }
            Formula::NoCross { rels } => {
                rels.iter().map(|&r| sig.relations[r].name.clone()).collect()
            }
            Formula::Arrows { rel } => vec![sig.relations[*rel].name.clone()],
            Formula::TreeWithPoint { lt } | Formula::NaiveTreeFork { lt } => {
                vec![sig.relations[*lt].name.clone()]
            }
            Formula::CircularViaPoint { c3 } => vec![sig.relations[*c3].name.clone()],
            Formula::All(parts) => parts
                .iter()
                .flat_map(|p| p.relation_names(sig))
                .collect(),
        }
    }

    /// The same formula with relation indices resolved against a larger
    /// signature containing the same names.
    fn remap(
        &self,
        from: &crate::structures::Signature,
        to: &crate::structures::Signature,
    ) -> Formula {
        let conv = |idx: &usize| to.relation(&from.relations[*idx].name).unwrap();
        match self {
            Formula::Disjoint => Formula::Disjoint,
            Formula::LinearCut { lt } => Formula::LinearCut { lt: conv(lt) },
            Formula::NoCross { rels } => Formula::NoCross {
                rels: rels.iter().map(conv).collect(),
            },
            Formula::Arrows { rel } => Formula::Arrows { rel: conv(rel) },
            Formula::ThroughBase { lt } => Formula::ThroughBase { lt: conv(lt) },
            Formula::TreeWithPoint { lt } => Formula::TreeWithPoint { lt: conv(lt) },
            Formula::CircularViaPoint { c3 } => Formula::CircularViaPoint { c3: conv(c3) },
            Formula::NaiveTreeFork { lt } => Formula::NaiveTreeFork { lt: conv(lt) },
            Formula::All(parts) => Formula::All(parts.iter().map(|p| p.remap(from, to)).collect()),
        }
    }
}

/// A candidate independence relation tied to its home class.
#[derive(Clone, Debug)]
pub struct CirPlugin {
    name: String,
    class: ClassPlugin,
    formula: Formula,
    expected_failures: Vec<Axiom>,
}

pub const CIR_NAMES: &[&str] = &[
    "trivial",
    "dlo",
    "random-graph",
    "henson-k3",
    "tournament",
    "random-poset",
    "tree-point",
    "circular-point",
    "ordered-random-graph",
    "naive-tree",
];

impl CirPlugin {
    pub fn by_name(name: &str) -> Result<CirPlugin, CirError> {
        let simple = |name: &str, class: ClassId, formula: Formula| CirPlugin {
            name: name.to_string(),
            class: ClassPlugin::new(class),
            formula,
            expected_failures: Vec::new(),
        };
        let plugin = match name {
            "trivial" => simple(name, ClassId::PureSet, Formula::Disjoint),
            "dlo" => simple(name, ClassId::Dlo, Formula::LinearCut { lt: 0 }),
            "random-graph" => {
                simple(name, ClassId::RandomGraph, Formula::NoCross { rels: vec![0] })
            }
            "henson-k3" => simple(name, ClassId::HensonK3, Formula::NoCross { rels: vec![0] }),
            "tournament" => simple(name, ClassId::Tournament, Formula::Arrows { rel: 0 }),
            "random-poset" => simple(name, ClassId::RandomPoset, Formula::ThroughBase { lt: 0 }),
            "tree-point" => simple(
                name,
                ClassId::MeetTreeWithPoint,
                Formula::TreeWithPoint { lt: 0 },
            ),
            "circular-point" => simple(
                name,
                ClassId::CircularOrderWithPoint,
                Formula::CircularViaPoint { c3: 0 },
            ),
            "ordered-random-graph" => {
                let mut p = product_cir(
                    &CirPlugin::by_name("dlo")?,
                    &CirPlugin::by_name("random-graph")?,
                )?;
                p.name = name.to_string();
                p
            }
            "naive-tree" => CirPlugin {
                name: name.to_string(),
                class: ClassPlugin::new(ClassId::MeetTree),
                formula: Formula::NaiveTreeFork { lt: 0 },
                expected_failures: vec![Axiom::TransitivityLeft],
            },
            _ => return Err(CirError::UnknownCir(name.to_string())),
        };
        Ok(plugin)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> &ClassPlugin {
        &self.class
    }

    /// Axioms this plugin is shipped to violate (regression fixtures).
    pub fn expected_failures(&self) -> &[Axiom] {
        &self.expected_failures
    }

    pub fn ensure_member(&self, m: &FinStructure) -> Result<(), CirError> {
        if !self.class.is_member(m)? {
            return Err(CirError::NotAMember(self.class.name()));
        }
        Ok(())
    }

    /// Evaluates the relation on sorted index sets. Pure; no membership
    /// check (batch callers validate the structure once).
    pub fn indep(&self, m: &FinStructure, a: &[Point], c: &[Point], b: &[Point]) -> bool {
        debug_assert!(a.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(b.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(c.windows(2).all(|w| w[0] < w[1]));
        eval(&self.formula, m, a, c, b)
    }

    /// Realizes `left ⊥_base right`: the canonical amalgam with the left
    /// side kept low, rechecked against the relation itself.
    pub fn independent_amalgam(
        &self,
        base: &FinStructure,
        left: &FinStructure,
        right: &FinStructure,
        f: &PartialMap,
        g: &PartialMap,
    ) -> Result<Amalgam, CirError> {
        let am = self.class.canonical_amalgam(base, left, right, f, g)?;
        let a_img: Vec<Point> = sorted_vec(am.left.range());
        let c_img: Vec<Point> = sorted_vec((0..base.size()).map(|p| {
            am.left
                .get(f.get(p).expect("base embeds in left"))
                .expect("left embeds in amalgam")
        }));
        let b_img: Vec<Point> = sorted_vec(am.right.range());
        if !self.indep(&am.structure, &a_img, &c_img, &b_img) {
            return Err(CirError::NotIndependent(self.name.clone()));
        }
        Ok(am)
    }
}

fn sorted_vec(it: impl Iterator<Item = Point>) -> Vec<Point> {
    let mut v: Vec<Point> = it.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Conjunction of two relations living on disjoint relational
/// sub-signatures, hosted on the catalog class carrying the combined
/// signature.
pub fn product_cir(p1: &CirPlugin, p2: &CirPlugin) -> Result<CirPlugin, CirError> {
    let s1 = p1.class.signature();
    let s2 = p2.class.signature();
    if s1.has_meet || s2.has_meet || !s1.constants.is_empty() || !s2.constants.is_empty() {
        return Err(CirError::SignatureOverlap(
            "product requires relational constant-free sub-signatures".to_string(),
        ));
    }
    let used1 = p1.formula.relation_names(s1);
    let used2 = p2.formula.relation_names(s2);
    if let Some(shared) = used1.iter().find(|n| used2.contains(n)) {
        return Err(CirError::SignatureOverlap(shared.clone()));
    }
    let mut names: Vec<&str> = s1
        .relations
        .iter()
        .chain(s2.relations.iter())
        .map(|r| r.name.as_str())
        .collect();
    names.sort_unstable();
    names.dedup();
    let combined = ClassId::all()
        .iter()
        .copied()
        .find(|id| {
            let sig = id.signature();
            let mut have: Vec<&str> = sig.relations.iter().map(|r| r.name.as_str()).collect();
            have.sort_unstable();
            have == names && sig.constants.is_empty() && !sig.has_meet
        })
        .ok_or(CirError::NoCombinedClass)?;
    let class = ClassPlugin::new(combined);
    let f1 = p1.formula.remap(s1, class.signature());
    let f2 = p2.formula.remap(s2, class.signature());
    Ok(CirPlugin {
        name: format!("product({},{})", p1.name, p2.name),
        class,
        formula: Formula::All(vec![f1, f2]),
        expected_failures: Vec::new(),
    })
}

fn contains(set: &[Point], p: Point) -> bool {
    set.binary_search(&p).is_ok()
}

/// Every common element of `a` and `b` lies in `c` (all sorted). When one
/// side is much smaller, binary-search it into the other instead of
/// walking both.
fn meets_inside(a: &[Point], b: &[Point], c: &[Point]) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.len() * 16 < large.len() {
        return small
            .iter()
            .all(|&p| !contains(large, p) || contains(c, p));
    }
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if !contains(c, a[i]) {
                    return false;
                }
                i += 1;
                j += 1;
            }
        }
    }
    true
}

fn eval(formula: &Formula, m: &FinStructure, a: &[Point], c: &[Point], b: &[Point]) -> bool {
    match formula {
        Formula::Disjoint => meets_inside(a, b, c),
        Formula::LinearCut { lt } => eval_linear_cut(m, *lt, a, c, b),
        Formula::NoCross { rels } => {
            if !meets_inside(a, b, c) {
                return false;
            }
            for &x in a {
                if contains(c, x) {
                    continue;
                }
                for &y in b {
                    if contains(c, y) {
                        continue;
                    }
                    for &rel in rels {
                        if m.holds(rel, &[x, y]) || m.holds(rel, &[y, x]) {
                            return false;
                        }
                    }
                }
            }
            true
        }
        Formula::Arrows { rel } => {
            if !meets_inside(a, b, c) {
                return false;
            }
            for &x in a {
                if contains(c, x) {
                    continue;
                }
                for &y in b {
                    if contains(c, y) {
                        continue;
                    }
                    if !m.holds(*rel, &[x, y]) {
                        return false;
                    }
                }
            }
            true
        }
        Formula::ThroughBase { lt } => {
            if !meets_inside(a, b, c) {
                return false;
            }
            for &x in a {
                for &y in b {
                    let comparable = x == y || m.lt(*lt, x, y) || m.lt(*lt, y, x);
                    let through = c.iter().any(|&z| {
                        (m.le(*lt, x, z) && m.le(*lt, z, y)) || (m.le(*lt, y, z) && m.le(*lt, z, x))
                    });
                    if comparable != through {
                        return false;
                    }
                }
            }
            true
        }
        Formula::TreeWithPoint { lt } => eval_tree_with_point(m, *lt, a, c, b),
        Formula::CircularViaPoint { c3 } => {
            // Work in the linear order induced by deleting the named point:
            // x below y iff C(p, x, y).
            let p = m.constant(0);
            let c3 = *c3;
            for &x in a {
                if x != p && contains(b, x) && !contains(c, x) {
                    return false;
                }
            }
            for &x in a {
                if x == p || contains(c, x) {
                    continue;
                }
                for &y in b {
                    if y == p || contains(c, y) {
                        continue;
                    }
                    let same_cut = c.iter().all(|&z| {
                        z == p
                            || (m.holds(c3, &[p, x, z]) == m.holds(c3, &[p, y, z])
                                && m.holds(c3, &[p, z, x]) == m.holds(c3, &[p, z, y]))
                    });
                    if same_cut && !m.holds(c3, &[p, x, y]) {
                        return false;
                    }
                }
            }
            true
        }
        Formula::NaiveTreeFork { lt } => {
            if c.is_empty() {
                for &x in a {
                    for &y in b {
                        let w = m.meet(x, y);
                        if !(m.lt(*lt, w, x) && m.lt(*lt, w, y)) {
                            return false;
                        }
                    }
                }
            } else {
                for &x in a {
                    for &y in b {
                        for &z in c {
                            if !m.lt(*lt, m.meet(x, z), m.meet(z, y)) {
                                return false;
                            }
                        }
                    }
                }
            }
            true
        }
        Formula::All(parts) => parts.iter().all(|p| eval(p, m, a, c, b)),
    }
}

fn eval_linear_cut(m: &FinStructure, lt: usize, a: &[Point], c: &[Point], b: &[Point]) -> bool {
    if !meets_inside(a, b, c) {
        return false;
    }
    // High indices of the left side are where violations usually sit
    // (later points of a growing stage), so scan them first.
    for &x in a.iter().rev() {
        if contains(c, x) {
            continue;
        }
        for &y in b {
            if contains(c, y) {
                continue;
            }
            let same_cut = c
                .iter()
                .all(|&z| m.lt(lt, x, z) == m.lt(lt, y, z) && m.lt(lt, z, x) == m.lt(lt, z, y));
            if same_cut && !m.lt(lt, x, y) {
                return false;
            }
        }
    }
    true
}

fn eval_tree_with_point(m: &FinStructure, lt: usize, a: &[Point], c: &[Point], b: &[Point]) -> bool {
    let p = m.constant(0);
    let union = |s: &[Point], t: &[Point]| -> Vec<Point> {
        let mut v: Vec<Point> = s.iter().chain(t.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let ac = generated_substructure(m, &union(a, c));
    let bc = generated_substructure(m, &union(b, c));
    let cc = generated_substructure(m, c);
    if !meets_inside(&ac, &bc, &cc) {
        return false;
    }
    // Fork points live on the branch toward p, where the type over C is
    // exactly the cut against the meets of C with p: closures of a branch
    // point with C add no points, so the diagram reduces to these
    // comparisons.
    let same_branch_cut = |u: Point, v: Point| -> bool {
        cc.iter().all(|&z| {
            let w = m.meet(z, p);
            m.lt(lt, u, w) == m.lt(lt, v, w)
                && (u == w) == (v == w)
                && m.lt(lt, w, u) == m.lt(lt, w, v)
        })
    };
    // Fork points toward p in matching cuts over C go left below right.
    for &x in &ac {
        let fx = m.meet(x, p);
        if contains(&cc, fx) {
            continue;
        }
        for &y in &bc {
            let fy = m.meet(y, p);
            if contains(&cc, fy) {
                continue;
            }
            if same_branch_cut(fx, fy) && !m.lt(lt, fx, fy) {
                return false;
            }
        }
    }
    // Points above p unconstrained by C meet exactly at p across sides.
    let unconstrained = |s: &[Point], x: Point| -> bool {
        m.lt(lt, p, x) && !s.iter().any(|&z| m.lt(lt, p, m.meet(x, z)))
    };
    for &x in &ac {
        if !unconstrained(&cc, x) {
            continue;
        }
        for &y in &bc {
            if !unconstrained(&cc, y) {
                continue;
            }
            if m.meet(x, y) != p {
                return false;
            }
        }
    }
    true
}
