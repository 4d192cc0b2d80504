//! Back-and-forth construction of a conjugating map: a growing partial
//! isomorphism satisfying one density requirement per same-type tuple
//! pair, each planted at a shift distance where both sides are
//! independent of everything placed so far.

use super::{DynamicsError, ShiftSystem};
use crate::structures::{type_key, PartialMap, Point};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugatorParams {
    /// Requirements range over tuples from the first `core_size` points in
    /// label order.
    pub core_size: usize,
    pub max_len: usize,
    pub n_max: i64,
    /// Stop after this many requirements (testing hook; `None` = all).
    pub max_requirements: Option<usize>,
}

/// One satisfied density demand: the map sends the shifted left tuple to
/// the shifted right tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub a: Vec<Point>,
    pub b: Vec<Point>,
    pub shift: i64,
}

#[derive(Clone, Debug)]
pub struct Conjugator {
    pub tau: PartialMap,
    pub ledger: Vec<Requirement>,
    pub params: ConjugatorParams,
}

/// Canonical document form: the map as a sorted pair list plus the
/// requirement ledger.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjugatorDoc {
    pub pairs: Vec<[Point; 2]>,
    pub ledger: Vec<Requirement>,
    pub params: ConjugatorParams,
}

impl Conjugator {
    pub fn to_doc(&self) -> ConjugatorDoc {
        ConjugatorDoc {
            pairs: self.tau.iter().map(|(a, b)| [a, b]).collect(),
            ledger: self.ledger.clone(),
            params: self.params.clone(),
        }
    }
}

/// Points ordered by label (interval end, then start, then index): the
/// creation order of the system, stable across runs.
pub fn core_points(s: &ShiftSystem, core_size: usize) -> Vec<Point> {
    let mut pts: Vec<Point> = (0..s.structure.size()).collect();
    pts.sort_by_key(|&p| {
        let l = s.label(p);
        (l.hi, l.lo, l.index)
    });
    pts.truncate(core_size);
    pts
}

/// Enumerates the density requirements and satisfies each at the least
/// admissible shift, re-verifying the partial isomorphism after every
/// extension.
pub fn build_conjugator(
    s: &ShiftSystem,
    params: &ConjugatorParams,
) -> Result<Conjugator, DynamicsError> {
    let m = &s.structure;
    let core = core_points(s, params.core_size);
    let mut requirements: Vec<(Vec<Point>, Vec<Point>)> = Vec::new();
    for len in 1..=params.max_len {
        let tuples = all_tuples(&core, len);
        for a in &tuples {
            let ka = type_key(m, a);
            for b in &tuples {
                if ka == type_key(m, b) {
                    requirements.push((a.clone(), b.clone()));
                }
            }
        }
    }
    if let Some(limit) = params.max_requirements {
        requirements.truncate(limit);
    }

    let mut tau = PartialMap::new();
    let mut dom: Vec<Point> = Vec::new();
    let mut ran: Vec<Point> = Vec::new();
    let mut ledger = Vec::new();
    for (index, (a, b)) in requirements.into_iter().enumerate() {
        let mut planted = None;
        for n in 0..=params.n_max {
            let Some(sa) = s.shift_tuple(&a, n) else {
                continue;
            };
            let Some(sb) = s.shift_tuple(&b, n) else {
                continue;
            };
            let sa_set = sorted_set(&sa);
            let sb_set = sorted_set(&sb);
            if !s.cir.indep(m, &dom, &[], &sa_set) || !s.cir.indep(m, &ran, &[], &sb_set) {
                continue;
            }
            planted = Some((n, sa, sb));
            break;
        }
        let Some((n, sa, sb)) = planted else {
            return Err(DynamicsError::RequirementStuck {
                index,
                n_max: params.n_max,
            });
        };
        // Independence over the empty base gives disjointness from the map
        // built so far, so the insertions cannot conflict.
        let mut fresh: Vec<(Point, Point)> = Vec::new();
        for (&x, &y) in sa.iter().zip(sb.iter()) {
            if tau.get(x).is_none() {
                tau.insert(x, y).expect("independent images cannot collide");
                fresh.push((x, y));
            }
        }
        if !extension_is_isomorphism(s, &tau, &fresh) {
            return Err(DynamicsError::InvariantViolated {
                stage: s.stage,
                detail: format!("extension for requirement {index} broke the partial map"),
            });
        }
        for &(x, y) in &fresh {
            insert_sorted(&mut dom, x);
            insert_sorted(&mut ran, y);
        }
        ledger.push(Requirement { a, b, shift: n });
    }
    Ok(Conjugator {
        tau,
        ledger,
        params: params.clone(),
    })
}

/// Checks the freshly added pairs against the whole map: every relation
/// tuple touching a new domain point must be preserved and reflected.
/// Together with the same check at earlier extensions this keeps the full
/// map a partial isomorphism.
fn extension_is_isomorphism(
    s: &ShiftSystem,
    tau: &PartialMap,
    fresh: &[(Point, Point)],
) -> bool {
    let m = &s.structure;
    let pairs: Vec<(Point, Point)> = tau.iter().collect();
    if pairs.is_empty() {
        return true;
    }
    for (ri, rel) in m.signature().relations.iter().enumerate() {
        match rel.arity {
            2 => {
                for &(x, u) in fresh {
                    for &(y, v) in &pairs {
                        if m.holds(ri, &[x, y]) != m.holds(ri, &[u, v])
                            || m.holds(ri, &[y, x]) != m.holds(ri, &[v, u])
                        {
                            return false;
                        }
                    }
                }
            }
            arity => {
                // Pin one slot to a fresh pair, let the rest range over the
                // whole map. Only small systems carry non-binary relations.
                for slot in 0..arity {
                    let mut idx = vec![0usize; arity];
                    'outer: loop {
                        let t: Vec<Point> = (0..arity)
                            .map(|j| {
                                if j == slot {
                                    fresh[idx[j] % fresh.len()].0
                                } else {
                                    pairs[idx[j]].0
                                }
                            })
                            .collect();
                        let ti: Vec<Point> = (0..arity)
                            .map(|j| {
                                if j == slot {
                                    fresh[idx[j] % fresh.len()].1
                                } else {
                                    pairs[idx[j]].1
                                }
                            })
                            .collect();
                        if m.holds(ri, &t) != m.holds(ri, &ti) {
                            return false;
                        }
                        let mut d = arity;
                        loop {
                            if d == 0 {
                                break 'outer;
                            }
                            d -= 1;
                            idx[d] += 1;
                            let bound = if d == slot { fresh.len() } else { pairs.len() };
                            if idx[d] < bound {
                                break;
                            }
                            idx[d] = 0;
                        }
                    }
                }
            }
        }
    }
    true
}

fn all_tuples(points: &[Point], len: usize) -> Vec<Vec<Point>> {
    let mut out: Vec<Vec<Point>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for t in &out {
            for &p in points {
                let mut t2 = t.clone();
                t2.push(p);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

fn sorted_set(tuple: &[Point]) -> Vec<Point> {
    let mut v = tuple.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn insert_sorted(v: &mut Vec<Point>, p: Point) {
    if let Err(pos) = v.binary_search(&p) {
        v.insert(pos, p);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub total: usize,
    pub satisfied: usize,
    pub coverage: f64,
    /// Ledger indices whose recheck failed.
    pub failures: Vec<usize>,
}

/// Independent recheck of every ledger entry: conjugating the shift by the
/// built map must send each requirement's left tuple to its right tuple.
pub fn verify_cyclic_density(s: &ShiftSystem, c: &Conjugator) -> DensityReport {
    let mut satisfied = 0;
    let mut failures = Vec::new();
    for (i, req) in c.ledger.iter().enumerate() {
        let ok = (|| {
            let sa = s.shift_tuple(&req.a, req.shift)?;
            let via: Option<Vec<Point>> = sa.iter().map(|&x| c.tau.get(x)).collect();
            let back: Option<Vec<Point>> = via?
                .iter()
                .map(|&y| s.shift_point(y, -req.shift))
                .collect();
            Some(back? == req.b)
        })()
        .unwrap_or(false);
        if ok {
            satisfied += 1;
        } else {
            failures.push(i);
        }
    }
    let total = c.ledger.len();
    DensityReport {
        total,
        satisfied,
        coverage: if total == 0 {
            1.0
        } else {
            satisfied as f64 / total as f64
        },
        failures,
    }
}

/// One letter of a word over the generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordLetter {
    pub generator: usize,
    pub inverse: bool,
}

/// Breadth-first search for the shortest word (generator order, plain
/// before inverse) whose composition extends the target map. Letters
/// apply left to right.
pub fn word_density_search(
    universe: usize,
    generators: &[PartialMap],
    target: &PartialMap,
    max_word_len: usize,
) -> Option<Vec<WordLetter>> {
    let letters: Vec<(WordLetter, PartialMap)> = generators
        .iter()
        .enumerate()
        .flat_map(|(gi, g)| {
            [
                (
                    WordLetter {
                        generator: gi,
                        inverse: false,
                    },
                    g.clone(),
                ),
                (
                    WordLetter {
                        generator: gi,
                        inverse: true,
                    },
                    g.inverse(),
                ),
            ]
        })
        .collect();
    let identity = PartialMap::identity_on(0..universe);
    let covers = |f: &PartialMap| target.iter().all(|(x, y)| f.get(x) == Some(y));
    let mut frontier: Vec<(Vec<WordLetter>, PartialMap)> = vec![(Vec::new(), identity)];
    for _ in 0..=max_word_len {
        for (word, map) in &frontier {
            if covers(map) {
                return Some(word.clone());
            }
        }
        let mut next = Vec::new();
        for (word, map) in &frontier {
            if word.len() >= max_word_len {
                continue;
            }
            for (letter, lmap) in &letters {
                let mut w2 = word.clone();
                w2.push(*letter);
                next.push((w2, map.compose(lmap)));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    None
}
