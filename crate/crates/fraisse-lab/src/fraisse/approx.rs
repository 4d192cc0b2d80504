//! Staged construction of finite approximations with the extension
//! property, and the independent recheck of that property.

use super::{ClassPlugin, FraisseError};
use crate::structures::{
    find_embeddings, generated_substructure, FinStructure, PartialMap, Point,
};
use serde::{Deserialize, Serialize};

/// Parameters for [`build_approximation`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildParams {
    /// Most new points an extension may add (the class closure bound
    /// already caps this from below).
    pub max_ext_size: usize,
    pub rounds: usize,
    /// Bound on the size of scheduled demand cores; `None` schedules every
    /// substructure of the previous stage.
    pub core_cap: Option<usize>,
    /// Hard limit on structure growth.
    pub size_cap: usize,
    /// Pad with fresh jointly-embedded points up to this size after the
    /// scheduled rounds (0 = off). Slow-growing classes (the pure set) need
    /// this to reach a target size.
    pub min_size: usize,
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> BuildParams {
        BuildParams {
            max_ext_size: 1,
            rounds: 3,
            core_cap: None,
            size_cap: 512,
            min_size: 0,
            seed: 0,
        }
    }
}

/// One scheduled demand and how it was met.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemandRecord {
    pub round: usize,
    pub core: Vec<Point>,
    pub ext_index: usize,
    pub ext_size: usize,
    /// Image of the extension witness in final coordinates.
    pub satisfied_by: Vec<Point>,
    /// Whether satisfying the demand grew the structure.
    pub grew: bool,
}

/// A finite stage of the limit construction. Stages only append points, so
/// earlier stages embed by the identity.
#[derive(Clone, Debug)]
pub struct LimitApprox {
    pub class: ClassPlugin,
    pub structure: FinStructure,
    /// Structure size after each round; index 0 is the seed stage.
    pub stage_sizes: Vec<usize>,
    pub ledger: Vec<DemandRecord>,
    pub params: BuildParams,
}

/// Canonical document form: the structure file plus the demand ledger and
/// build parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxDoc {
    pub class: String,
    pub structure: crate::structures::StructureDoc,
    pub stage_sizes: Vec<usize>,
    pub ledger: Vec<DemandRecord>,
    pub seed: u64,
    pub params: BuildParams,
}

impl LimitApprox {
    pub fn to_doc(&self) -> ApproxDoc {
        ApproxDoc {
            class: self.class.name().to_string(),
            structure: crate::structures::StructureDoc::from_structure(&self.structure),
            stage_sizes: self.stage_sizes.clone(),
            ledger: self.ledger.clone(),
            seed: self.params.seed,
            params: self.params.clone(),
        }
    }
}

/// Grows an approximation by `rounds` rounds of extension scheduling. In
/// round `r`, every substructure generated by at most `core_cap` points of
/// the stage-(r-1) structure gets all its one-generator extensions
/// realized, dovetailed by (round, |A|, |B|, lexicographic core).
pub fn build_approximation(
    class: &ClassPlugin,
    params: &BuildParams,
) -> Result<LimitApprox, FraisseError> {
    let mut m = class.empty_member();
    let mut stage_sizes = vec![m.size()];
    let mut ledger = Vec::new();
    for round in 1..=params.rounds {
        let window = m.size();
        if params.core_cap.is_none() && window > 16 {
            return Err(FraisseError::Unsupported(format!(
                "round {round} would schedule all subsets of {window} points; set a core cap"
            )));
        }
        let demands = enumerate_demands(class, &m, window, params.core_cap, params.max_ext_size)?;
        for (core, ext_index, ext) in demands {
            let over = PartialMap::from_pairs(core.iter().copied().enumerate())
                .expect("core points are distinct");
            let (witness, grew) =
                class.satisfy_extension(&mut m, &ext, core.len(), &over, params.size_cap)?;
            ledger.push(DemandRecord {
                round,
                core: core.clone(),
                ext_index,
                ext_size: ext.size(),
                satisfied_by: (0..ext.size()).map(|p| witness.get(p).unwrap()).collect(),
                grew,
            });
        }
        stage_sizes.push(m.size());
    }
    if params.min_size > m.size() {
        let seed_core = class.empty_member();
        let ext = class
            .one_point_extensions(&seed_core)
            .into_iter()
            .next()
            .expect("every class extends the empty member");
        let base_right: Vec<Point> = (0..seed_core.size()).collect();
        // The empty member is at most the named point, which sits at the
        // same index in every stage.
        let base_d = base_right.clone();
        while m.size() < params.min_size {
            if m.size() + (ext.size() - seed_core.size()) > params.size_cap {
                return Err(FraisseError::GrowthCap {
                    cap: params.size_cap,
                });
            }
            class.amalgam_extend(&mut m, &ext, &base_d, &base_right)?;
            ledger.push(DemandRecord {
                round: params.rounds + 1,
                core: base_d.clone(),
                ext_index: 0,
                ext_size: ext.size(),
                satisfied_by: Vec::new(),
                grew: true,
            });
        }
        stage_sizes.push(m.size());
    }
    debug_assert!(class.is_member(&m)?);
    Ok(LimitApprox {
        class: class.clone(),
        structure: m,
        stage_sizes,
        ledger,
        params: params.clone(),
    })
}

/// Demands over cores drawn from the first `window` points, ordered by
/// (|A|, |B|, lexicographic core, extension index).
#[allow(clippy::type_complexity)]
fn enumerate_demands(
    class: &ClassPlugin,
    m: &FinStructure,
    window: usize,
    core_cap: Option<usize>,
    max_ext_size: usize,
) -> Result<Vec<(Vec<Point>, usize, FinStructure)>, FraisseError> {
    let mut cores: Vec<Vec<Point>> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let max_core = core_cap.unwrap_or(window);
    let mut stack = vec![Vec::new()];
    while let Some(s) = stack.pop() {
        let closure = generated_substructure(m, &s);
        if seen.insert(closure.clone()) {
            cores.push(closure);
        }
        if s.len() < max_core {
            let lo = s.last().map_or(0, |&p| p + 1);
            for p in (lo..window).rev() {
                let mut t = s.clone();
                t.push(p);
                stack.push(t);
            }
        }
    }
    let mut demands = Vec::new();
    for core in cores {
        let a = m.restrict(&core)?;
        for (ei, ext) in class.one_point_extensions(&a).into_iter().enumerate() {
            if ext.size() - a.size() <= max_ext_size {
                demands.push((core.clone(), ei, ext));
            }
        }
    }
    demands.sort_by(|(c1, e1, b1), (c2, e2, b2)| {
        (c1.len(), b1.size(), c1, e1).cmp(&(c2.len(), b2.size(), c2, e2))
    });
    Ok(demands)
}

/// One unmet demand found by [`check_extension_property`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnsatisfiedDemand {
    pub core: Vec<Point>,
    pub ext_index: usize,
    pub ext_size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub upto_core: usize,
    pub ext_budget: usize,
    pub demands_checked: usize,
    pub satisfied: usize,
    pub unsatisfied: Vec<UnsatisfiedDemand>,
}

impl ExtensionReport {
    pub fn all_satisfied(&self) -> bool {
        self.unsatisfied.is_empty()
    }
}

/// Exhaustively rechecks the extension property over cores generated by
/// points below `upto_core` (at most `max_core` generators when given),
/// with extensions allowed `ext_budget` new points.
pub fn check_extension_property(
    l: &LimitApprox,
    upto_core: usize,
    ext_budget: usize,
    max_core: Option<usize>,
) -> Result<ExtensionReport, FraisseError> {
    let m = &l.structure;
    assert!(upto_core <= m.size(), "core window exceeds the structure");
    if max_core.is_none() && upto_core > 16 {
        return Err(FraisseError::Unsupported(format!(
            "checking all subsets of {upto_core} points is not tractable; set a core cap"
        )));
    }
    let demands = enumerate_demands(&l.class, m, upto_core, max_core, ext_budget)?;
    let mut satisfied = 0;
    let mut unsatisfied = Vec::new();
    let demands_checked = demands.len();
    for (core, ext_index, ext) in demands {
        let over = PartialMap::from_pairs(core.iter().copied().enumerate())
            .expect("core points are distinct");
        if find_embeddings(&ext, m, Some(&over))?.is_empty() {
            unsatisfied.push(UnsatisfiedDemand {
                core,
                ext_index,
                ext_size: ext.size(),
            });
        } else {
            satisfied += 1;
        }
    }
    Ok(ExtensionReport {
        upto_core,
        ext_budget,
        demands_checked,
        satisfied,
        unsatisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraisse::ClassId;

    fn build(id: ClassId, rounds: usize, core_cap: Option<usize>) -> LimitApprox {
        let class = ClassPlugin::new(id);
        let params = BuildParams {
            rounds,
            core_cap,
            ..BuildParams::default()
        };
        build_approximation(&class, &params).unwrap()
    }

    #[test]
    fn pure_set_one_round_grows() {
        let l = build(ClassId::PureSet, 1, None);
        assert!(l.structure.size() >= 1);
        assert_eq!(l.stage_sizes, vec![0, l.structure.size()]);
    }

    #[test]
    fn dlo_three_rounds_fills_all_cuts_of_stage_two() {
        let l = build(ClassId::Dlo, 3, None);
        // Every cut over stage-2 points is filled.
        let core = l.stage_sizes[2];
        let report = check_extension_property(&l, core, 1, None).unwrap();
        assert!(report.all_satisfied(), "unsatisfied: {:?}", report.unsatisfied);
        assert!(report.demands_checked > 0);
    }

    #[test]
    fn graph_three_rounds_realizes_all_patterns_over_stage_two() {
        let l = build(ClassId::RandomGraph, 3, None);
        let core = l.stage_sizes[2];
        let report = check_extension_property(&l, core, 1, None).unwrap();
        assert!(report.all_satisfied(), "unsatisfied: {:?}", report.unsatisfied);
    }

    #[test]
    fn zero_rounds_leaves_demands_unsatisfied() {
        let l = build(ClassId::RandomGraph, 0, None);
        let report = check_extension_property(&l, l.structure.size(), 1, None).unwrap();
        assert!(!report.all_satisfied());
    }

    #[test]
    fn every_stage_is_a_member_and_monotone() {
        for &id in ClassId::all() {
            let rounds = 2;
            let l = build(id, rounds, Some(2));
            assert!(l.class.is_member(&l.structure).unwrap(), "{id:?}");
            assert!(l.stage_sizes.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn determinism_across_builds() {
        let a = build(ClassId::Tournament, 3, Some(2));
        let b = build(ClassId::Tournament, 3, Some(2));
        assert_eq!(a.structure, b.structure);
        assert_eq!(a.ledger.len(), b.ledger.len());
    }

    #[test]
    fn rerunning_rounds_preserves_satisfied_demands() {
        // Structures only grow, so earlier witnesses stay valid.
        let l2 = build(ClassId::Dlo, 2, None);
        let l3 = build(ClassId::Dlo, 3, None);
        let report = check_extension_property(&l3, l2.stage_sizes[1], 1, None).unwrap();
        assert!(report.all_satisfied());
    }

    #[test]
    fn growth_cap_is_reported() {
        let class = ClassPlugin::new(ClassId::RandomGraph);
        let params = BuildParams {
            rounds: 4,
            core_cap: Some(2),
            size_cap: 24,
            ..BuildParams::default()
        };
        match build_approximation(&class, &params) {
            Err(FraisseError::GrowthCap { cap }) => assert_eq!(cap, 24),
            other => panic!("expected growth cap error, got {other:?}"),
        }
    }
}
