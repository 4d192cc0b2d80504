//! Splitting of quantifier-free types over a base set, and the
//! every-type-splits certificate used to rule out an independence
//! relation at finite scale.

use crate::fraisse::LimitApprox;
use crate::structures::{type_key, FinStructure, Point, TypeKey};
use serde::{Deserialize, Serialize};

/// A pair of same-type tuples from the base that the tuple `a` tells
/// apart.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitWitness {
    pub first: Vec<Point>,
    pub second: Vec<Point>,
}

/// Whether the type of `a` over `base` splits over the empty set: some
/// equal-length, equal-type tuples from `base` get different types once
/// `a` is prepended. Exhaustive over duplicate-free base tuples up to
/// `max_len` entries.
pub fn splits(
    m: &FinStructure,
    a: &[Point],
    base: &[Point],
    max_len: usize,
) -> Option<SplitWitness> {
    for len in 1..=max_len.min(base.len()) {
        let tuples = distinct_tuples(base, len);
        // Group by type; only same-type pairs can witness splitting.
        let mut groups: Vec<(TypeKey, Vec<usize>)> = Vec::new();
        let keys: Vec<TypeKey> = tuples.iter().map(|t| type_key(m, t)).collect();
        for (i, key) in keys.iter().enumerate() {
            match groups.iter_mut().find(|(k, _)| k == key) {
                Some((_, members)) => members.push(i),
                None => groups.push((key.clone(), vec![i])),
            }
        }
        for (_, members) in &groups {
            let joint: Vec<TypeKey> = members
                .iter()
                .map(|&i| {
                    let mut t = a.to_vec();
                    t.extend_from_slice(&tuples[i]);
                    type_key(m, &t)
                })
                .collect();
            for (x, jx) in joint.iter().enumerate() {
                for (y, jy) in joint.iter().enumerate().skip(x + 1) {
                    if jx != jy {
                        return Some(SplitWitness {
                            first: tuples[members[x]].clone(),
                            second: tuples[members[y]].clone(),
                        });
                    }
                }
            }
        }
    }
    None
}

/// Ordered duplicate-free tuples over `base`, lexicographic.
fn distinct_tuples(base: &[Point], len: usize) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    let mut tuple = Vec::with_capacity(len);
    fn rec(base: &[Point], len: usize, tuple: &mut Vec<Point>, out: &mut Vec<Vec<Point>>) {
        if tuple.len() == len {
            out.push(tuple.clone());
            return;
        }
        for &p in base {
            if !tuple.contains(&p) {
                tuple.push(p);
                rec(base, len, tuple, out);
                tuple.pop();
            }
        }
    }
    rec(base, len, &mut tuple, &mut out);
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoCirReport {
    pub base_size: usize,
    pub max_len: usize,
    /// True when every 1-type over every base of the given size splits.
    pub all_split: bool,
    /// A point and base whose type does not split, when one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<(Point, Vec<Point>)>,
    pub configs_checked: u64,
}

/// Certificate search: does every 1-type over every `base_size`-point base
/// split over the empty set? `true` rules out stationarity-style
/// independence at this scale.
pub fn all_one_types_split(l: &LimitApprox, base_size: usize, max_len: usize) -> NoCirReport {
    let m = &l.structure;
    let n = m.size();
    assert!(n > base_size, "structure too small for the base size");
    let mut configs_checked = 0;
    let bases = sorted_subsets_exact(n, base_size);
    for base in &bases {
        for a in 0..n {
            if base.binary_search(&a).is_ok() {
                continue;
            }
            configs_checked += 1;
            if splits(m, &[a], base, max_len).is_none() {
                return NoCirReport {
                    base_size,
                    max_len,
                    all_split: false,
                    counterexample: Some((a, base.clone())),
                    configs_checked,
                };
            }
        }
    }
    NoCirReport {
        base_size,
        max_len,
        all_split: true,
        counterexample: None,
        configs_checked,
    }
}

fn sorted_subsets_exact(n: usize, size: usize) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(n: usize, size: usize, start: usize, cur: &mut Vec<Point>, out: &mut Vec<Vec<Point>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for p in start..n {
            cur.push(p);
            rec(n, size, p + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, size, 0, &mut cur, &mut out);
    out
}
