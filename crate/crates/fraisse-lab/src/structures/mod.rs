//! Finite labeled structures: signatures, relation tables, constants, and
//! (for tree-like languages) a total binary meet operation.
//!
//! Universes are always contiguous index ranges `0..size`; any external
//! identity lives in the modules layered on top. All values are immutable
//! once built by their producing operation, so they can be shared freely
//! across threads.

mod bitmat;
mod map;
mod qftype;

pub use map::{find_embeddings, PartialMap};
pub use qftype::{
    closure_enumeration, eq_over, generated_substructure, tuple_type_equal, type_key, TypeKey,
};

use bitmat::BitMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Index of an element of a structure's universe.
pub type Point = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("invalid signature: {0}")]
    BadSignature(String),
    #[error("signatures do not match")]
    SignatureMismatch,
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("tuple {tuple:?} has wrong arity for {relation:?} (expected {arity})")]
    BadArity {
        relation: String,
        arity: usize,
        tuple: Vec<Point>,
    },
    #[error("point {0} out of range (size {1})")]
    PointOutOfRange(Point, usize),
    #[error("tuples have different lengths")]
    LengthMismatch,
    #[error("structure invariant violated: {0}")]
    InvalidStructure(String),
}

/// A relation symbol with its arity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationDecl {
    pub name: String,
    pub arity: usize,
}

/// The language a structure is built over: relation symbols, constant
/// symbols, and optionally a binary meet operation (which requires `<`
/// to be present among the relations).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub relations: Vec<RelationDecl>,
    pub constants: Vec<String>,
    pub has_meet: bool,
}

impl Signature {
    pub fn new(
        relations: Vec<(&str, usize)>,
        constants: Vec<&str>,
        has_meet: bool,
    ) -> Result<Signature, StructureError> {
        let sig = Signature {
            relations: relations
                .into_iter()
                .map(|(name, arity)| RelationDecl {
                    name: name.to_string(),
                    arity,
                })
                .collect(),
            constants: constants.into_iter().map(|c| c.to_string()).collect(),
            has_meet,
        };
        sig.validate()?;
        Ok(sig)
    }

    pub fn validate(&self) -> Result<(), StructureError> {
        let mut seen = std::collections::BTreeSet::new();
        for rel in &self.relations {
            if rel.arity == 0 {
                return Err(StructureError::BadSignature(format!(
                    "relation {:?} has arity 0",
                    rel.name
                )));
            }
            if !seen.insert(&rel.name) {
                return Err(StructureError::BadSignature(format!(
                    "duplicate relation {:?}",
                    rel.name
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.constants {
            if !seen.insert(c) {
                return Err(StructureError::BadSignature(format!(
                    "duplicate constant {c:?}"
                )));
            }
        }
        if self.has_meet && self.relation("<").is_none() {
            return Err(StructureError::BadSignature(
                "meet requires the binary relation \"<\"".to_string(),
            ));
        }
        if self.has_meet {
            let lt = self.relation("<").unwrap();
            if self.relations[lt].arity != 2 {
                return Err(StructureError::BadSignature(
                    "\"<\" must be binary".to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Index of a relation by name.
    pub fn relation(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.relations[rel].arity
    }
}

/// Storage for one relation table. Binary relations get a bit matrix;
/// everything else a sorted tuple set.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Table {
    Pairs(BitMatrix),
    Tuples(std::collections::BTreeSet<Vec<Point>>),
}

/// A finite structure: universe `0..size`, one table per relation symbol,
/// an assignment for every constant, and a total meet table when the
/// signature has one.
#[derive(Clone, PartialEq, Eq)]
pub struct FinStructure {
    sig: Arc<Signature>,
    size: usize,
    tables: Vec<Table>,
    constants: Vec<Point>,
    /// Row-major `size * size` table; empty unless `sig.has_meet`.
    meet: Vec<Point>,
}

impl fmt::Debug for FinStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinStructure(size={}", self.size)?;
        for (i, rel) in self.sig.relations.iter().enumerate() {
            write!(f, ", {}={:?}", rel.name, self.tuples(i).collect::<Vec<_>>())?;
        }
        if self.sig.has_meet {
            write!(f, ", meet={:?}", self.meet)?;
        }
        if !self.constants.is_empty() {
            write!(f, ", constants={:?}", self.constants)?;
        }
        write!(f, ")")
    }
}

impl FinStructure {
    /// Empty-universe structure. Constants must be assigned before use
    /// whenever the signature declares any.
    pub fn new(sig: Arc<Signature>, size: usize) -> FinStructure {
        let tables = sig
            .relations
            .iter()
            .map(|r| {
                if r.arity == 2 {
                    Table::Pairs(BitMatrix::new(size))
                } else {
                    Table::Tuples(std::collections::BTreeSet::new())
                }
            })
            .collect();
        let meet = if sig.has_meet {
            vec![0; size * size]
        } else {
            Vec::new()
        };
        FinStructure {
            constants: vec![0; sig.constants.len()],
            sig,
            size,
            tables,
            meet,
        }
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn points(&self) -> impl Iterator<Item = Point> {
        0..self.size
    }

    /// Appends `k` fresh points and returns the index of the first one.
    pub fn extend_points(&mut self, k: usize) -> Point {
        let first = self.size;
        self.size += k;
        for table in &mut self.tables {
            if let Table::Pairs(m) = table {
                m.grow(self.size);
            }
        }
        if self.sig.has_meet {
            let mut meet = vec![0; self.size * self.size];
            let old = self.size - k;
            for x in 0..old {
                for y in 0..old {
                    meet[x * self.size + y] = self.meet[x * old + y];
                }
            }
            // Fresh entries default to meet(x, x) = x so partially built
            // trees stay self-consistent on the diagonal.
            for x in old..self.size {
                meet[x * self.size + x] = x;
            }
            self.meet = meet;
        }
        first
    }

    pub fn set_constant(&mut self, idx: usize, p: Point) {
        assert!(p < self.size);
        self.constants[idx] = p;
    }

    pub fn constant(&self, idx: usize) -> Point {
        self.constants[idx]
    }

    pub fn constant_points(&self) -> &[Point] {
        &self.constants
    }

    pub fn add_tuple(&mut self, rel: usize, tuple: &[Point]) {
        debug_assert_eq!(tuple.len(), self.sig.arity(rel));
        debug_assert!(tuple.iter().all(|&p| p < self.size));
        match &mut self.tables[rel] {
            Table::Pairs(m) => m.set(tuple[0], tuple[1]),
            Table::Tuples(set) => {
                set.insert(tuple.to_vec());
            }
        }
    }

    pub fn remove_tuple(&mut self, rel: usize, tuple: &[Point]) {
        match &mut self.tables[rel] {
            Table::Pairs(m) => m.clear(tuple[0], tuple[1]),
            Table::Tuples(set) => {
                set.remove(tuple);
            }
        }
    }

    pub fn holds(&self, rel: usize, tuple: &[Point]) -> bool {
        match &self.tables[rel] {
            Table::Pairs(m) => m.get(tuple[0], tuple[1]),
            Table::Tuples(set) => set.contains(tuple),
        }
    }

    /// All tuples of one relation, lexicographically.
    pub fn tuples(&self, rel: usize) -> Box<dyn Iterator<Item = Vec<Point>> + '_> {
        match &self.tables[rel] {
            Table::Pairs(m) => Box::new(m.iter().map(|(x, y)| vec![x, y])),
            Table::Tuples(set) => Box::new(set.iter().cloned()),
        }
    }

    pub fn tuple_count(&self, rel: usize) -> usize {
        match &self.tables[rel] {
            Table::Pairs(m) => m.count(),
            Table::Tuples(set) => set.len(),
        }
    }

    pub fn set_meet(&mut self, x: Point, y: Point, z: Point) {
        debug_assert!(self.sig.has_meet);
        self.meet[x * self.size + y] = z;
        self.meet[y * self.size + x] = z;
    }

    pub fn meet(&self, x: Point, y: Point) -> Point {
        debug_assert!(self.sig.has_meet);
        self.meet[x * self.size + y]
    }

    pub fn has_meet(&self) -> bool {
        self.sig.has_meet
    }

    /// Strict-order helper for signatures containing `<`.
    pub fn lt(&self, rel_lt: usize, x: Point, y: Point) -> bool {
        self.holds(rel_lt, &[x, y])
    }

    pub fn le(&self, rel_lt: usize, x: Point, y: Point) -> bool {
        x == y || self.holds(rel_lt, &[x, y])
    }

    /// Structural invariants: tuples in range, constants in range, and when
    /// a meet is present, that `<` is a strict partial order satisfying the
    /// tree axiom and that the meet table is exactly the greatest common
    /// lower bound recomputed from `<`.
    pub fn validate(&self) -> Result<(), StructureError> {
        for (ri, rel) in self.sig.relations.iter().enumerate() {
            for t in self.tuples(ri) {
                if t.len() != rel.arity {
                    return Err(StructureError::BadArity {
                        relation: rel.name.clone(),
                        arity: rel.arity,
                        tuple: t,
                    });
                }
                if let Some(&p) = t.iter().find(|&&p| p >= self.size) {
                    return Err(StructureError::PointOutOfRange(p, self.size));
                }
            }
        }
        if self.sig.constants.len() != self.constants.len() {
            return Err(StructureError::InvalidStructure(
                "constant assignment incomplete".to_string(),
            ));
        }
        if self.size > 0 {
            for &c in &self.constants {
                if c >= self.size {
                    return Err(StructureError::PointOutOfRange(c, self.size));
                }
            }
        } else if !self.constants.is_empty() {
            return Err(StructureError::InvalidStructure(
                "constants require a nonempty universe".to_string(),
            ));
        }
        if self.sig.has_meet {
            self.validate_meet_tree()?;
        }
        Ok(())
    }

    fn validate_meet_tree(&self) -> Result<(), StructureError> {
        let lt = self.sig.relation("<").unwrap();
        let n = self.size;
        for x in 0..n {
            if self.lt(lt, x, x) {
                return Err(StructureError::InvalidStructure(format!(
                    "< not irreflexive at {x}"
                )));
            }
            for y in 0..n {
                if self.lt(lt, x, y) && self.lt(lt, y, x) {
                    return Err(StructureError::InvalidStructure(format!(
                        "< not antisymmetric at ({x},{y})"
                    )));
                }
                for z in 0..n {
                    if self.lt(lt, x, y) && self.lt(lt, y, z) && !self.lt(lt, x, z) {
                        return Err(StructureError::InvalidStructure(format!(
                            "< not transitive at ({x},{y},{z})"
                        )));
                    }
                }
            }
        }
        // Tree axiom: elements below a common element are comparable.
        for z in 0..n {
            for x in 0..n {
                for y in 0..n {
                    if self.le(lt, x, z) && self.le(lt, y, z) && x != y {
                        if !self.lt(lt, x, y) && !self.lt(lt, y, x) {
                            return Err(StructureError::InvalidStructure(format!(
                                "tree axiom fails: {x},{y} below {z} but incomparable"
                            )));
                        }
                    }
                }
            }
        }
        // Meet table must be the recomputed greatest common lower bound.
        for x in 0..n {
            for y in 0..n {
                let lower: Vec<Point> = (0..n)
                    .filter(|&z| self.le(lt, z, x) && self.le(lt, z, y))
                    .collect();
                let best = lower
                    .iter()
                    .copied()
                    .find(|&z| lower.iter().all(|&w| self.le(lt, w, z)));
                match best {
                    None => {
                        return Err(StructureError::InvalidStructure(format!(
                            "{x},{y} have no common lower bound; meet cannot be total"
                        )))
                    }
                    Some(z) => {
                        if self.meet(x, y) != z {
                            return Err(StructureError::InvalidStructure(format!(
                                "meet({x},{y}) = {} but greatest common lower bound is {z}",
                                self.meet(x, y)
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Induced substructure on a point set, reindexed to `0..keep.len()`.
    /// `keep` must be sorted, deduplicated, and closed under constants and
    /// meets (callers that start from raw sets should close them first).
    pub fn restrict(&self, keep: &[Point]) -> Result<FinStructure, StructureError> {
        let mut back = BTreeMap::new();
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.size {
                return Err(StructureError::PointOutOfRange(old, self.size));
            }
            back.insert(old, new);
        }
        let mut out = FinStructure::new(self.sig.clone(), keep.len());
        for (ri, rel) in self.sig.relations.iter().enumerate() {
            if rel.arity == 2 {
                for (i, &x) in keep.iter().enumerate() {
                    for (j, &y) in keep.iter().enumerate() {
                        if self.holds(ri, &[x, y]) {
                            out.add_tuple(ri, &[i, j]);
                        }
                    }
                }
            } else {
                for t in self.tuples(ri) {
                    if let Some(mapped) = t
                        .iter()
                        .map(|p| back.get(p).copied())
                        .collect::<Option<Vec<_>>>()
                    {
                        out.add_tuple(ri, &mapped);
                    }
                }
            }
        }
        for (ci, &c) in self.constants.iter().enumerate() {
            match back.get(&c) {
                Some(&new) => out.set_constant(ci, new),
                None => {
                    return Err(StructureError::InvalidStructure(
                        "restriction drops a constant".to_string(),
                    ))
                }
            }
        }
        if self.sig.has_meet {
            for (i, &x) in keep.iter().enumerate() {
                for (j, &y) in keep.iter().enumerate() {
                    match back.get(&self.meet(x, y)) {
                        Some(&m) => out.set_meet(i, j, m),
                        None => {
                            return Err(StructureError::InvalidStructure(
                                "restriction not meet-closed".to_string(),
                            ))
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Canonical document form of a structure: relation tuples sorted
/// lexicographically, map keys sorted by name.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureDoc {
    pub signature: Signature,
    pub size: usize,
    pub relations: BTreeMap<String, Vec<Vec<Point>>>,
    pub constants: BTreeMap<String, Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meet: Option<Vec<[Point; 3]>>,
}

impl StructureDoc {
    pub fn from_structure(m: &FinStructure) -> StructureDoc {
        let sig = m.signature();
        let relations = sig
            .relations
            .iter()
            .enumerate()
            .map(|(ri, rel)| (rel.name.clone(), m.tuples(ri).collect()))
            .collect();
        let constants = sig
            .constants
            .iter()
            .enumerate()
            .map(|(ci, name)| (name.clone(), m.constant(ci)))
            .collect();
        let meet = if sig.has_meet {
            let mut entries = Vec::new();
            for x in 0..m.size() {
                for y in 0..m.size() {
                    entries.push([x, y, m.meet(x, y)]);
                }
            }
            Some(entries)
        } else {
            None
        };
        StructureDoc {
            signature: (**sig).clone(),
            size: m.size(),
            relations,
            constants,
            meet,
        }
    }

    pub fn into_structure(self) -> Result<FinStructure, StructureError> {
        self.signature.validate()?;
        let sig = Arc::new(self.signature);
        let mut m = FinStructure::new(sig.clone(), self.size);
        for (name, tuples) in &self.relations {
            let ri = sig
                .relation(name)
                .ok_or_else(|| StructureError::UnknownRelation(name.clone()))?;
            for t in tuples {
                if t.len() != sig.arity(ri) {
                    return Err(StructureError::BadArity {
                        relation: name.clone(),
                        arity: sig.arity(ri),
                        tuple: t.clone(),
                    });
                }
                if let Some(&p) = t.iter().find(|&&p| p >= self.size) {
                    return Err(StructureError::PointOutOfRange(p, self.size));
                }
                m.add_tuple(ri, t);
            }
        }
        for (name, &p) in &self.constants {
            let ci = sig
                .constants
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| StructureError::UnknownRelation(name.clone()))?;
            if p >= self.size {
                return Err(StructureError::PointOutOfRange(p, self.size));
            }
            m.set_constant(ci, p);
        }
        if let Some(entries) = &self.meet {
            for &[x, y, z] in entries {
                if x >= self.size || y >= self.size || z >= self.size {
                    return Err(StructureError::PointOutOfRange(
                        x.max(y).max(z),
                        self.size,
                    ));
                }
                m.set_meet(x, y, z);
            }
        }
        m.validate()?;
        Ok(m)
    }
}
