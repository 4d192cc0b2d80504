//! Amalgamation-class plugins and growing finite approximations of their
//! limits with the extension property.

mod approx;
mod catalog;

pub use approx::{
    build_approximation, check_extension_property, BuildParams, DemandRecord, ExtensionReport,
    LimitApprox, UnsatisfiedDemand,
};
pub use catalog::ClassId;

use crate::structures::{
    find_embeddings, FinStructure, PartialMap, Point, Signature, StructureError,
};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FraisseError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("structure is not a member of class {0}")]
    NotAMember(&'static str),
    #[error("map is not an embedding")]
    NotAnEmbedding,
    #[error("amalgamation failed: {0}")]
    Amalgamation(String),
    #[error("growth cap exceeded: structure needs more than {cap} points")]
    GrowthCap { cap: usize },
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("{0}")]
    Unsupported(String),
}

/// An amalgamation class from the shipped catalog: a membership test, a
/// canonical amalgam, and a one-point-extension enumerator, all keyed off
/// the class identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassPlugin {
    id: ClassId,
    sig: Arc<Signature>,
}

/// Result of a canonical amalgam: the amalgam itself plus the two
/// embeddings making the square commute.
#[derive(Clone, Debug)]
pub struct Amalgam {
    pub structure: FinStructure,
    pub left: PartialMap,
    pub right: PartialMap,
}

impl ClassPlugin {
    pub fn new(id: ClassId) -> ClassPlugin {
        ClassPlugin {
            id,
            sig: Arc::new(id.signature()),
        }
    }

    pub fn by_name(name: &str) -> Result<ClassPlugin, FraisseError> {
        ClassId::by_name(name)
            .map(ClassPlugin::new)
            .ok_or_else(|| FraisseError::UnknownClass(name.to_string()))
    }

    pub fn id(&self) -> ClassId {
        self.id
    }

    pub fn name(&self) -> &'static str {
        self.id.name()
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    /// Largest closure a single generator can force (`|B| <= |A| + this`).
    pub fn closure_bound(&self) -> usize {
        self.id.closure_bound()
    }

    pub fn is_member(&self, m: &FinStructure) -> Result<bool, StructureError> {
        catalog::is_member(self.id, m)
    }

    /// The substructure generated by the empty set.
    pub fn empty_member(&self) -> FinStructure {
        catalog::empty_member(self.id)
    }

    /// One-point member used as a default seed block. Classes with named
    /// constants fall back to the empty member (which already holds them).
    pub fn seed_member(&self) -> FinStructure {
        if self.id.has_constants() {
            catalog::empty_member(self.id)
        } else {
            catalog::singleton_member(self.id)
        }
    }

    /// All one-generator extensions of a member, the member embedded as the
    /// identity prefix.
    pub fn one_point_extensions(&self, a: &FinStructure) -> Vec<FinStructure> {
        catalog::one_point_extensions(self.id, a)
    }

    /// Inserts the right structure into `d` over a shared base, following
    /// the class's canonical placement rules. `base_d[i]` corresponds to
    /// `base_right[i]`. Returns the right-to-`d` index map.
    pub fn amalgam_extend(
        &self,
        d: &mut FinStructure,
        right: &FinStructure,
        base_d: &[Point],
        base_right: &[Point],
    ) -> Result<Vec<Point>, FraisseError> {
        catalog::amalgam_extend(self.id, d, right, base_d, base_right)
    }

    /// Canonical amalgam of `f: A -> B` and `g: A -> C`: keeps `B` intact
    /// and inserts `C \ g(A)` by the class rules, so fresh points from `B`
    /// come before fresh points from `C` and undecided order goes `B` first.
    pub fn canonical_amalgam(
        &self,
        a: &FinStructure,
        b: &FinStructure,
        c: &FinStructure,
        f: &PartialMap,
        g: &PartialMap,
    ) -> Result<Amalgam, FraisseError> {
        for m in [a, b, c] {
            if !self.is_member(m)? {
                return Err(FraisseError::NotAMember(self.name()));
            }
        }
        if f.len() != a.size() || g.len() != a.size() {
            return Err(FraisseError::NotAnEmbedding);
        }
        if !f.is_embedding(a, b) || !g.is_embedding(a, c) {
            return Err(FraisseError::NotAnEmbedding);
        }
        let mut d = b.clone();
        let base_d: Vec<Point> = (0..a.size()).map(|p| f.get(p).unwrap()).collect();
        let base_c: Vec<Point> = (0..a.size()).map(|p| g.get(p).unwrap()).collect();
        let rmap = self.amalgam_extend(&mut d, c, &base_d, &base_c)?;
        let left = PartialMap::identity_on(0..b.size());
        let right = PartialMap::from_pairs(rmap.iter().enumerate().map(|(ci, &di)| (ci, di)))
            .map_err(|e| FraisseError::Amalgamation(e.to_string()))?;
        // Re-verify the square: both maps embeddings, agreeing on A.
        if !left.is_embedding(b, &d) || !right.is_embedding(c, &d) {
            return Err(FraisseError::Amalgamation(
                "amalgam sides are not embeddings".to_string(),
            ));
        }
        for p in 0..a.size() {
            if left.get(f.get(p).unwrap()) != right.get(g.get(p).unwrap()) {
                return Err(FraisseError::Amalgamation(
                    "amalgam square does not commute".to_string(),
                ));
            }
        }
        if !self.is_member(&d)? {
            return Err(FraisseError::Amalgamation(format!(
                "amalgam left class {}",
                self.name()
            )));
        }
        Ok(Amalgam {
            structure: d,
            left,
            right,
        })
    }

    /// Finds an embedding of the extension `b` (core embedded as identity
    /// prefix of length `core`) into `m` extending `over`, or adjoins one
    /// via the canonical amalgam. Returns the embedding of `b` into the
    /// possibly grown `m`.
    pub fn satisfy_extension(
        &self,
        m: &mut FinStructure,
        b: &FinStructure,
        core: usize,
        over: &PartialMap,
        cap: usize,
    ) -> Result<(PartialMap, bool), FraisseError> {
        let found = find_embeddings(b, m, Some(over))?;
        if let Some(g) = found.into_iter().next() {
            return Ok((g, false));
        }
        let new_points = b.size() - core;
        if m.size() + new_points > cap {
            return Err(FraisseError::GrowthCap { cap });
        }
        let base_d: Vec<Point> = (0..core).map(|p| over.get(p).unwrap()).collect();
        let base_right: Vec<Point> = (0..core).collect();
        let rmap = self.amalgam_extend(m, b, &base_d, &base_right)?;
        let g = PartialMap::from_pairs(rmap.iter().enumerate().map(|(bi, &di)| (bi, di)))
            .map_err(|e| FraisseError::Amalgamation(e.to_string()))?;
        if !g.is_embedding(b, m) {
            return Err(FraisseError::Amalgamation(
                "extension insert did not embed".to_string(),
            ));
        }
        Ok((g, true))
    }
}
