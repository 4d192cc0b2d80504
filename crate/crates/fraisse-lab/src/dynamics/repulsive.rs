//! Repulsiveness and shiftiness checks over a built shift system.

use super::{DynamicsError, ShiftImage, ShiftSystem};
use crate::cir::splits;
use crate::structures::{type_key, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Outcome of one shift distance `m` in a repulsiveness scan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftVerdict {
    /// Independent and non-splitting in both directions.
    Good,
    Undefined,
    NotIndependent,
    /// The moved set splits over the original, or vice versa.
    Splits { forward: bool },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepulsiveReport {
    pub set: Vec<Point>,
    pub m_max: i64,
    /// Least `n` with every `m` in `[n, m_max]` good, when one exists.
    pub least_n: Option<i64>,
    pub verdicts: Vec<(i64, ShiftVerdict)>,
}

/// Scans shift distances `0..=m_max` for the least `n` past which the set
/// is independent from all its images and neither side's type splits over
/// the other. Undefined shifts blocking every candidate are an error
/// (the system is too shallow), not a verdict.
pub fn check_strongly_repulsive(
    s: &ShiftSystem,
    set: &[Point],
    m_max: i64,
    split_len: usize,
) -> Result<RepulsiveReport, DynamicsError> {
    let m_struct = &s.structure;
    let mut verdicts = Vec::new();
    let mut any_undefined = false;
    for m in 0..=m_max {
        let verdict = match s.shift_set(set, m) {
            ShiftImage::Undefined { .. } => {
                any_undefined = true;
                ShiftVerdict::Undefined
            }
            ShiftImage::Defined(moved) => {
                if !s.cir.indep(m_struct, set, &[], &moved) {
                    ShiftVerdict::NotIndependent
                } else if splits(m_struct, set, &moved, split_len).is_some() {
                    ShiftVerdict::Splits { forward: true }
                } else if splits(m_struct, &moved, set, split_len).is_some() {
                    ShiftVerdict::Splits { forward: false }
                } else {
                    ShiftVerdict::Good
                }
            }
        };
        verdicts.push((m, verdict));
    }
    // Least n whose whole tail is good.
    let mut least_n = None;
    for n in (0..=m_max).rev() {
        if verdicts[n as usize].1 == ShiftVerdict::Good {
            least_n = Some(n);
        } else {
            break;
        }
    }
    if least_n.is_none() && any_undefined {
        return Err(DynamicsError::ShiftTooShallow);
    }
    Ok(RepulsiveReport {
        set: set.to_vec(),
        m_max,
        least_n,
        verdicts,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftyReport {
    pub samples: u64,
    pub successes: u64,
    pub inconclusive: u64,
    /// Draws that failed the sampling precondition (same type and
    /// independence) and were not counted.
    pub skipped: u64,
    pub n_max: i64,
    pub seed: u64,
}

impl ShiftyReport {
    pub fn success_rate(&self) -> f64 {
        if self.samples == 0 {
            return 1.0;
        }
        self.successes as f64 / self.samples as f64
    }
}

/// Samples triples (A, b, b') with b' of the same type as b and
/// independent from A, then hunts for a shift power matching b' over A.
/// Failures at this depth are inconclusive, never refutations.
pub fn check_shifty(
    s: &ShiftSystem,
    samples: u64,
    n_max: i64,
    seed: u64,
) -> ShiftyReport {
    let m = &s.structure;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Draw the anchored data from low blocks so the shifts needed stay
    // defined; candidates b' come from anywhere.
    let low_hi = ((s.stage.saturating_sub(2)) / 2) as i64;
    let low = s.block(0, low_hi);
    let mut report = ShiftyReport {
        samples: 0,
        successes: 0,
        inconclusive: 0,
        skipped: 0,
        n_max,
        seed,
    };
    if low.is_empty() || m.size() == 0 {
        return report;
    }
    let max_attempts = samples * 400;
    let mut attempts = 0;
    while report.samples < samples && attempts < max_attempts {
        attempts += 1;
        let a_size = rng.gen_range(1..=2usize);
        let mut a_set: Vec<Point> = Vec::new();
        while a_set.len() < a_size.min(low.len()) {
            let p = low[rng.gen_range(0..low.len())];
            if !a_set.contains(&p) {
                a_set.push(p);
            }
        }
        a_set.sort_unstable();
        let len = rng.gen_range(1..=2usize);
        let mut b: Vec<Point> = Vec::new();
        while b.len() < len.min(low.len()) {
            let p = low[rng.gen_range(0..low.len())];
            if !b.contains(&p) {
                b.push(p);
            }
        }
        let mut b2: Vec<Point> = Vec::new();
        while b2.len() < b.len() {
            let p = rng.gen_range(0..m.size());
            if !b2.contains(&p) {
                b2.push(p);
            }
        }
        if type_key(m, &b) != type_key(m, &b2) {
            report.skipped += 1;
            continue;
        }
        let mut b2_set = b2.clone();
        b2_set.sort_unstable();
        if !s.cir.indep(m, &a_set, &[], &b2_set) {
            report.skipped += 1;
            continue;
        }
        report.samples += 1;
        let mut joint2 = a_set.clone();
        joint2.extend_from_slice(&b2);
        let target = type_key(m, &joint2);
        let mut matched = false;
        for n in 0..=n_max {
            let Some(shifted) = s.shift_tuple(&b, n) else {
                continue;
            };
            let mut joint = a_set.clone();
            joint.extend_from_slice(&shifted);
            if type_key(m, &joint) == target {
                matched = true;
                break;
            }
        }
        if matched {
            report.successes += 1;
        } else {
            report.inconclusive += 1;
        }
    }
    report
}
