//! The staged construction of a shift automorphism over an interval-labeled
//! approximation, with the block invariants that make the shift strongly
//! repulsive, plus the back-and-forth conjugator and the finite-scale
//! density checks layered on top.

mod conjugator;
mod repulsive;

pub use conjugator::{
    build_conjugator, core_points, verify_cyclic_density, word_density_search, Conjugator,
    ConjugatorDoc, ConjugatorParams, DensityReport, Requirement, WordLetter,
};
pub use repulsive::{check_shifty, check_strongly_repulsive, RepulsiveReport, ShiftyReport};

use crate::cir::{CirError, CirPlugin};
use crate::fraisse::FraisseError;
use crate::structures::{FinStructure, PartialMap, Point, StructureError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Fraisse(#[from] FraisseError),
    #[error(transparent)]
    Cir(#[from] CirError),
    #[error("shift systems need a constant-free relational class, not {0}")]
    UnsupportedClass(&'static str),
    #[error("growth cap exceeded: {cap}")]
    GrowthCap { cap: usize },
    #[error("block invariant violated at stage {stage}: {detail}")]
    InvariantViolated { stage: usize, detail: String },
    #[error("shift undefined before any repulsiveness bound was found; deepen the system")]
    ShiftTooShallow,
    #[error("requirement {index} has no admissible shift <= {n_max}; deepen the system")]
    RequirementStuck { index: usize, n_max: i64 },
}

/// Label of one point: the integer interval it was created under plus a
/// running index. The shift translates intervals by one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IntervalLabel {
    pub lo: i64,
    pub hi: i64,
    pub index: usize,
}

impl IntervalLabel {
    pub fn shifted(self, n: i64) -> IntervalLabel {
        IntervalLabel {
            lo: self.lo + n,
            hi: self.hi + n,
            index: self.index,
        }
    }

    pub fn width(self) -> i64 {
        self.hi - self.lo + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftParams {
    pub stages: usize,
    /// Extension-pair demands processed per stage (0 disables witnesses,
    /// which deep builds use).
    pub witness_budget: usize,
    /// Largest extension structure scheduled as a witness pair.
    pub witness_max_size: usize,
    pub size_cap: usize,
    /// Run the full invariant pass after each of this many early stages
    /// (the pass is quadratic in the number of intervals, so deep builds
    /// check early stages here and the finished system on demand).
    pub verify_stages: usize,
    pub seed: u64,
}

impl Default for ShiftParams {
    fn default() -> ShiftParams {
        ShiftParams {
            stages: 4,
            witness_budget: 4,
            witness_max_size: 3,
            size_cap: 1 << 20,
            verify_stages: 6,
            seed: 0,
        }
    }
}

/// One processed witness demand: an embedding of the small side of an
/// extension pair, answered inside the structure or by adjoining points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub stage: usize,
    pub pair: usize,
    pub small_images: Vec<Point>,
    pub big_images: Vec<Point>,
    pub grew: bool,
}

/// Interval-labeled approximation carrying the partial shift automorphism.
#[derive(Clone, Debug)]
pub struct ShiftSystem {
    pub cir: CirPlugin,
    /// Number of stages built; labels live inside `[0, stage - 1]`.
    pub stage: usize,
    pub structure: FinStructure,
    labels: Vec<IntervalLabel>,
    label_index: BTreeMap<IntervalLabel, Point>,
    pub witness_ledger: Vec<WitnessRecord>,
    pub params: ShiftParams,
    /// Witness scheduling cursor state (pair index, small-side images).
    processed_witnesses: std::collections::BTreeSet<(usize, Vec<Point>)>,
}

/// Image of a point set under an integer power of the shift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShiftImage {
    Defined(Vec<Point>),
    /// The first point whose translated label leaves the system.
    Undefined { point: Point, missing: IntervalLabel },
}

impl ShiftImage {
    pub fn defined(self) -> Option<Vec<Point>> {
        match self {
            ShiftImage::Defined(pts) => Some(pts),
            ShiftImage::Undefined { .. } => None,
        }
    }
}

impl ShiftSystem {
    pub fn label(&self, p: Point) -> IntervalLabel {
        self.labels[p]
    }

    pub fn point_with_label(&self, label: IntervalLabel) -> Option<Point> {
        self.label_index.get(&label).copied()
    }

    /// Points whose label interval is contained in `[lo, hi]`.
    pub fn block(&self, lo: i64, hi: i64) -> Vec<Point> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.lo >= lo && l.hi <= hi)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn shift_point(&self, p: Point, n: i64) -> Option<Point> {
        self.point_with_label(self.labels[p].shifted(n))
    }

    /// Translates every point's label by `n`; undefined as soon as one
    /// translated label is missing.
    pub fn shift_set(&self, points: &[Point], n: i64) -> ShiftImage {
        let mut out = Vec::with_capacity(points.len());
        for &p in points {
            match self.shift_point(p, n) {
                Some(q) => out.push(q),
                None => {
                    return ShiftImage::Undefined {
                        point: p,
                        missing: self.labels[p].shifted(n),
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        ShiftImage::Defined(out)
    }

    /// Tuple version of the shift (order preserved, no dedup).
    pub fn shift_tuple(&self, tuple: &[Point], n: i64) -> Option<Vec<Point>> {
        tuple.iter().map(|&p| self.shift_point(p, n)).collect()
    }

    /// The shift as a partial map, defined wherever labels stay inside.
    pub fn shift_map(&self, n: i64) -> PartialMap {
        let mut f = PartialMap::new();
        for p in 0..self.structure.size() {
            if let Some(q) = self.shift_point(p, n) {
                f.insert(p, q).expect("label translation is injective");
            }
        }
        f
    }

    /// Independent recheck of the two block invariants: equal-width blocks
    /// are isomorphic under label translation, and lower-anchored blocks
    /// are independent from higher ones over their shared block.
    pub fn verify_invariants(&self) -> Result<(), DynamicsError> {
        let err = |detail: String| DynamicsError::InvariantViolated {
            stage: self.stage,
            detail,
        };
        if !self.cir.class().is_member(&self.structure)? {
            return Err(err("structure left its class".to_string()));
        }
        let top = self.stage as i64 - 1;
        let mut spans: Vec<(i64, i64)> = Vec::new();
        for lo in 0..=top {
            for hi in lo..=top {
                spans.push((lo, hi));
            }
        }
        // Translation isomorphism between equal-width blocks.
        for &(lo, hi) in &spans {
            let width = hi - lo;
            for &(lo2, hi2) in &spans {
                if hi2 - lo2 != width || (lo, hi) == (lo2, hi2) {
                    continue;
                }
                let src = self.block(lo, hi);
                let mut map = PartialMap::new();
                for &p in &src {
                    let target = self.labels[p].shifted(lo2 - lo);
                    match self.point_with_label(target) {
                        Some(q) => map.insert(p, q).map_err(|e| err(e.to_string()))?,
                        None => {
                            return Err(err(format!(
                                "block [{lo},{hi}] has no translate for {:?}",
                                self.labels[p]
                            )))
                        }
                    }
                }
                if !map.is_embedding(&self.structure, &self.structure) {
                    return Err(err(format!(
                        "translation [{lo},{hi}] -> [{lo2},{hi2}] is not an isomorphism"
                    )));
                }
            }
        }
        // Independence of interval pairs over their intersection block.
        for &(lo, hi) in &spans {
            for &(lo2, hi2) in &spans {
                if lo > lo2 {
                    continue;
                }
                let a = self.block(lo, hi);
                let b = self.block(lo2, hi2);
                let base = if lo2 <= hi {
                    self.block(lo2.max(lo), hi.min(hi2))
                } else {
                    Vec::new()
                };
                if !self.cir.indep(&self.structure, &a, &base, &b) {
                    return Err(err(format!(
                        "blocks [{lo},{hi}] and [{lo2},{hi2}] not independent over their overlap"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Label row of the serialized system: point, interval, index.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabelEntry {
    pub point: Point,
    pub lo: i64,
    pub hi: i64,
    pub index: usize,
}

/// Canonical document form: the structure file plus the label table, the
/// stage count, and the witness ledger.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftSystemDoc {
    pub cir: String,
    pub class: String,
    pub stage: usize,
    pub structure: crate::structures::StructureDoc,
    pub labels: Vec<LabelEntry>,
    pub ledger: Vec<WitnessRecord>,
    pub seed: u64,
}

impl ShiftSystem {
    pub fn to_doc(&self) -> ShiftSystemDoc {
        ShiftSystemDoc {
            cir: self.cir.name().to_string(),
            class: self.cir.class().name().to_string(),
            stage: self.stage,
            structure: crate::structures::StructureDoc::from_structure(&self.structure),
            labels: self
                .labels
                .iter()
                .enumerate()
                .map(|(point, l)| LabelEntry {
                    point,
                    lo: l.lo,
                    hi: l.hi,
                    index: l.index,
                })
                .collect(),
            ledger: self.witness_ledger.clone(),
            seed: self.params.seed,
        }
    }
}

/// Runs the staged construction: a seed block, then per stage a label-
/// translated copy glued over the overlap via the independent amalgam,
/// then a budget of extension-pair witnesses placed at the full interval.
pub fn build_shift_system(
    cir: &CirPlugin,
    params: &ShiftParams,
    seed_block: Option<&FinStructure>,
) -> Result<ShiftSystem, DynamicsError> {
    let class = cir.class().clone();
    let sig = class.signature();
    if !sig.constants.is_empty() || sig.has_meet {
        return Err(DynamicsError::UnsupportedClass(class.name()));
    }
    let seed = match seed_block {
        Some(m) => {
            if !class.is_member(m)? {
                return Err(DynamicsError::Fraisse(FraisseError::NotAMember(
                    class.name(),
                )));
            }
            m.clone()
        }
        None => class.seed_member(),
    };
    let labels: Vec<IntervalLabel> = (0..seed.size())
        .map(|i| IntervalLabel {
            lo: 0,
            hi: 0,
            index: i,
        })
        .collect();
    let label_index = labels
        .iter()
        .enumerate()
        .map(|(p, &l)| (l, p))
        .collect();
    let mut system = ShiftSystem {
        cir: cir.clone(),
        stage: 1,
        structure: seed,
        labels,
        label_index,
        witness_ledger: Vec::new(),
        params: params.clone(),
        processed_witnesses: std::collections::BTreeSet::new(),
    };
    let witness_pairs = if params.witness_budget > 0 {
        enumerate_extension_pairs(&class, params.witness_max_size)
    } else {
        Vec::new()
    };
    while system.stage < params.stages {
        glue_next_stage(&mut system)?;
        if params.witness_budget > 0 {
            process_witnesses(&mut system, &witness_pairs)?;
        }
        if system.stage <= params.verify_stages {
            system.verify_invariants()?;
        }
    }
    Ok(system)
}

/// One gluing step: the structure plays both sides, the right one read
/// through the label translation.
fn glue_next_stage(system: &mut ShiftSystem) -> Result<(), DynamicsError> {
    let n = system.stage as i64;
    let right = system.structure.clone();
    // Overlap: points living strictly inside [1, n-1]; their right-side
    // partners carry the label translated down by one.
    let mut base_d = Vec::new();
    let mut base_right = Vec::new();
    for (p, label) in system.labels.iter().enumerate() {
        if label.lo >= 1 && label.hi <= n - 1 {
            let partner = system
                .point_with_label(label.shifted(-1))
                .expect("translation-closed label sets");
            base_d.push(p);
            base_right.push(partner);
        }
    }
    let frontier = right.size() - base_d.len();
    if system.structure.size() + frontier > system.params.size_cap {
        return Err(DynamicsError::GrowthCap {
            cap: system.params.size_cap,
        });
    }
    let rmap = system
        .cir
        .class()
        .amalgam_extend(&mut system.structure, &right, &base_d, &base_right)?;
    // Insertion order is class-specific; label fresh points by index.
    let mut fresh: Vec<(Point, usize)> = rmap
        .iter()
        .enumerate()
        .filter(|&(_, &q)| q >= system.labels.len())
        .map(|(r, &q)| (q, r))
        .collect();
    fresh.sort_unstable();
    for (q, r) in fresh {
        debug_assert_eq!(q, system.labels.len());
        let label = system.labels[r].shifted(1);
        system.labels.push(label);
        system.label_index.insert(label, q);
    }
    system.stage += 1;
    // The gluing must realize the low block independent from the shifted
    // block over their overlap; this is the one triple the construction
    // hinges on, so fail fast here.
    let a = system.block(0, n - 1);
    let base = system.block(1, n - 1);
    let b = system.block(1, n);
    if !system.cir.indep(&system.structure, &a, &base, &b) {
        return Err(DynamicsError::InvariantViolated {
            stage: system.stage,
            detail: "glued blocks are not independent over the overlap".to_string(),
        });
    }
    Ok(())
}

/// Extension pairs (small member, one-point extension) scheduled as
/// witnesses, ordered by size then canonical form.
fn enumerate_extension_pairs(
    class: &crate::fraisse::ClassPlugin,
    max_size: usize,
) -> Vec<(FinStructure, FinStructure)> {
    let mut members = vec![class.empty_member()];
    let mut frontier = members.clone();
    let mut seen = std::collections::BTreeSet::new();
    while let Some(m) = frontier.pop() {
        if m.size() >= max_size {
            continue;
        }
        for ext in class.one_point_extensions(&m) {
            if ext.size() > max_size {
                continue;
            }
            let key = iso_key(&ext);
            if seen.insert(key) {
                members.push(ext.clone());
                frontier.push(ext);
            }
        }
    }
    members.sort_by_key(|m| (m.size(), iso_key(m)));
    let mut pairs = Vec::new();
    for small in &members {
        for ext in class.one_point_extensions(small) {
            if ext.size() <= max_size + 1 {
                pairs.push((small.clone(), ext));
            }
        }
    }
    pairs
}

/// Canonical form under point permutations; fine for witness-sized
/// structures.
fn iso_key(m: &FinStructure) -> String {
    let n = m.size();
    let perms = permutations_of(n);
    perms
        .into_iter()
        .map(|perm| {
            let keep: Vec<Point> = perm;
            // restrict() wants a sorted closed set, so permute by hand.
            let mut desc = String::new();
            for (ri, _) in m.signature().relations.iter().enumerate() {
                let mut tuples: Vec<Vec<Point>> = m
                    .tuples(ri)
                    .map(|t| t.iter().map(|&p| keep.iter().position(|&q| q == p).unwrap()).collect())
                    .collect();
                tuples.sort();
                desc.push_str(&format!("{tuples:?};"));
            }
            desc
        })
        .min()
        .unwrap_or_default()
}

fn permutations_of(n: usize) -> Vec<Vec<Point>> {
    fn rec(n: usize, cur: &mut Vec<Point>, out: &mut Vec<Vec<Point>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for p in 0..n {
            if !cur.contains(&p) {
                cur.push(p);
                rec(n, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::new(), &mut out);
    out
}

/// Processes up to `witness_budget` fresh (pair, embedding) demands:
/// each asks that some embedding of the small side extend to its
/// one-point extension; unmet demands are answered by adjoining points
/// labeled with the full interval.
fn process_witnesses(
    system: &mut ShiftSystem,
    pairs: &[(FinStructure, FinStructure)],
) -> Result<(), DynamicsError> {
    let mut budget = system.params.witness_budget;
    let full_lo = 0;
    let full_hi = system.stage as i64 - 1;
    for (pair_idx, (small, ext)) in pairs.iter().enumerate() {
        if budget == 0 {
            break;
        }
        let embeddings =
            crate::structures::find_embeddings(small, &system.structure, None)?;
        for f in embeddings {
            if budget == 0 {
                break;
            }
            let images: Vec<Point> = (0..small.size()).map(|p| f.get(p).unwrap()).collect();
            if !system
                .processed_witnesses
                .insert((pair_idx, images.clone()))
            {
                continue;
            }
            budget -= 1;
            if system.structure.size() + (ext.size() - small.size()) > system.params.size_cap {
                return Err(DynamicsError::GrowthCap {
                    cap: system.params.size_cap,
                });
            }
            let before = system.structure.size();
            let (g, grew) = system.cir.class().satisfy_extension(
                &mut system.structure,
                ext,
                small.size(),
                &f,
                system.params.size_cap,
            )?;
            if grew {
                let next_index = self_next_index(system, full_lo, full_hi);
                for q in before..system.structure.size() {
                    let label = IntervalLabel {
                        lo: full_lo,
                        hi: full_hi,
                        index: next_index + (q - before),
                    };
                    system.labels.push(label);
                    system.label_index.insert(label, q);
                }
            }
            system.witness_ledger.push(WitnessRecord {
                stage: system.stage,
                pair: pair_idx,
                small_images: images,
                big_images: (0..ext.size()).map(|p| g.get(p).unwrap()).collect(),
                grew,
            });
        }
    }
    Ok(())
}

fn self_next_index(system: &ShiftSystem, lo: i64, hi: i64) -> usize {
    system
        .labels
        .iter()
        .filter(|l| l.lo == lo && l.hi == hi)
        .map(|l| l.index + 1)
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests;
