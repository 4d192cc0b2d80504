//! Executable checkers for the independence-relation axioms: exhaustive
//! below a size cutoff, seeded-random above it.

use super::{CirError, CirPlugin};
use crate::fraisse::LimitApprox;
use crate::structures::{type_key, FinStructure, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Stationarity,
    Extension,
    TransitivityLeft,
    TransitivityRight,
    Monotonicity,
    Existence,
}

impl Axiom {
    pub fn all() -> &'static [Axiom] {
        &[
            Axiom::Stationarity,
            Axiom::Extension,
            Axiom::TransitivityLeft,
            Axiom::TransitivityRight,
            Axiom::Monotonicity,
            Axiom::Existence,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Stationarity => "stationarity",
            Axiom::Extension => "extension",
            Axiom::TransitivityLeft => "transitivity-left",
            Axiom::TransitivityRight => "transitivity-right",
            Axiom::Monotonicity => "monotonicity",
            Axiom::Existence => "existence",
        }
    }

    pub fn by_name(name: &str) -> Option<Axiom> {
        Axiom::all().iter().copied().find(|a| a.name() == name)
    }
}

/// Search budgets. Exhaustive passes draw sets of size at most
/// `exhaustive_set_size` from the first `exhaustive_window` points
/// (`four_set_window` when four sets are quantified together); the random
/// phase samples `random_configs` configurations with sets up to
/// `random_set_size` from the whole structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckBudget {
    pub exhaustive_window: usize,
    pub four_set_window: usize,
    pub exhaustive_set_size: usize,
    pub random_configs: usize,
    pub random_set_size: usize,
    pub extension_probe_len: usize,
}

impl Default for CheckBudget {
    fn default() -> CheckBudget {
        CheckBudget {
            exhaustive_window: 20,
            four_set_window: 9,
            exhaustive_set_size: 2,
            random_configs: 200,
            random_set_size: 3,
            extension_probe_len: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// A violating configuration, smallest found by total point count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub a: Vec<Point>,
    pub b: Vec<Point>,
    pub c: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Point>>,
    /// Extra witness tuples (for stationarity: the two joint enumerations).
    pub witness: Vec<Vec<Point>>,
    pub note: String,
}

impl Counterexample {
    fn weight(&self) -> usize {
        self.a.len() + self.b.len() + self.c.len() + self.d.as_ref().map_or(0, |d| d.len())
    }

    fn key(&self) -> (usize, Vec<Point>, Vec<Point>, Vec<Point>, Option<Vec<Point>>) {
        (
            self.weight(),
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            self.d.clone(),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomReport {
    pub cir: String,
    pub axiom: Axiom,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub configs_checked: u64,
    pub inconclusive: u64,
    pub seed: u64,
}

struct Search<'a> {
    p: &'a CirPlugin,
    m: &'a FinStructure,
    configs_checked: u64,
    inconclusive: u64,
    best: Option<Counterexample>,
    scratch: Vec<Point>,
}

impl<'a> Search<'a> {
    fn indep(&self, a: &[Point], c: &[Point], b: &[Point]) -> bool {
        self.p.indep(self.m, a, c, b)
    }

    /// Union of two sorted sets into the scratch buffer, returning it as a
    /// borrow to keep hot loops allocation-free.
    fn union_scratch(&mut self, x: &[Point], y: &[Point]) {
        self.scratch.clear();
        self.scratch.extend_from_slice(x);
        self.scratch.extend_from_slice(y);
        self.scratch.sort_unstable();
        self.scratch.dedup();
    }

    fn violation(&mut self, cand: Counterexample) {
        match &self.best {
            Some(best) if best.key() <= cand.key() => {}
            _ => self.best = Some(cand),
        }
    }
}

/// Sorted subsets (including the empty set) of `0..window`, ordered by
/// size then lexicographically.
fn enum_sets(window: usize, max_size: usize) -> Vec<Vec<Point>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<Point>> = vec![Vec::new()];
    for _ in 0..max_size {
        let mut next = Vec::new();
        for s in &layer {
            let lo = s.last().map_or(0, |&p| p + 1);
            for p in lo..window {
                let mut t = s.clone();
                t.push(p);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn sample_set(rng: &mut ChaCha8Rng, n: usize, max_size: usize, allow_empty: bool) -> Vec<Point> {
    let lo = usize::from(!allow_empty);
    let size = rng.gen_range(lo..=max_size.min(n));
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let p = rng.gen_range(0..n);
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out.sort_unstable();
    out
}

fn union(a: &[Point], b: &[Point]) -> Vec<Point> {
    let mut v: Vec<Point> = a.iter().chain(b.iter()).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn permutations(s: &[Point]) -> Vec<Vec<Point>> {
    if s.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &p) in s.iter().enumerate() {
        let mut rest = s.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, p);
            out.push(tail);
        }
    }
    out
}

/// Runs one axiom check against an approximation of the plugin's class.
pub fn check_axiom(
    p: &CirPlugin,
    axiom: Axiom,
    l: &LimitApprox,
    budget: &CheckBudget,
    seed: u64,
) -> Result<AxiomReport, CirError> {
    if l.class.id() != p.class().id() {
        return Err(CirError::NotAMember(p.class().name()));
    }
    p.ensure_member(&l.structure)?;
    let m = &l.structure;
    let mut search = Search {
        p,
        m,
        configs_checked: 0,
        inconclusive: 0,
        best: None,
        scratch: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match axiom {
        Axiom::Stationarity => check_stationarity(&mut search, budget, &mut rng),
        Axiom::Extension => check_extension(&mut search, budget, &mut rng),
        Axiom::TransitivityLeft => check_transitivity(&mut search, budget, &mut rng, true),
        Axiom::TransitivityRight => check_transitivity(&mut search, budget, &mut rng, false),
        Axiom::Monotonicity => check_monotonicity(&mut search, budget, &mut rng),
        Axiom::Existence => check_existence(&mut search, budget, &mut rng),
    }
    let status = if search.best.is_some() {
        CheckStatus::Fail
    } else if search.inconclusive > 0 {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };
    Ok(AxiomReport {
        cir: p.name().to_string(),
        axiom,
        status,
        counterexample: search.best,
        configs_checked: search.configs_checked,
        inconclusive: search.inconclusive,
        seed,
    })
}

/// Independent pairs bucketed by coordinate types must share a joint type.
fn check_stationarity(search: &mut Search, budget: &CheckBudget, rng: &mut ChaCha8Rng) {
    use std::collections::HashMap;
    type Bucket = HashMap<
        (crate::structures::TypeKey, crate::structures::TypeKey),
        (crate::structures::TypeKey, Vec<Point>, Vec<Point>),
    >;
    let mut buckets: Bucket = HashMap::new();
    let n = search.m.size();
    let window = budget.exhaustive_window.min(n);
    let sets = enum_sets(window, budget.exhaustive_set_size);

    let mut pairs: Vec<(Vec<Point>, Vec<Point>)> = Vec::new();
    for sa in &sets {
        for sb in &sets {
            pairs.push((sa.clone(), sb.clone()));
        }
    }
    for _ in 0..budget.random_configs {
        let sa = sample_set(rng, n, budget.random_set_size, false);
        let sb = sample_set(rng, n, budget.random_set_size, false);
        pairs.push((sa, sb));
    }

    for (sa, sb) in pairs {
        if !search.indep(&sa, &[], &sb) {
            continue;
        }
        search.configs_checked += 1;
        for ea in permutations(&sa) {
            for eb in permutations(&sb) {
                let ka = type_key(search.m, &ea);
                let kb = type_key(search.m, &eb);
                let mut joint = ea.clone();
                joint.extend_from_slice(&eb);
                let kab = type_key(search.m, &joint);
                match buckets.get(&(ka.clone(), kb.clone())) {
                    None => {
                        buckets.insert((ka, kb), (kab, ea.clone(), eb.clone()));
                    }
                    Some((k0, ea0, eb0)) => {
                        if *k0 != kab {
                            let mut joint0 = ea0.clone();
                            joint0.extend_from_slice(eb0);
                            search.violation(Counterexample {
                                a: sa.clone(),
                                b: sb.clone(),
                                c: Vec::new(),
                                d: None,
                                witness: vec![joint0, joint],
                                note: "matching coordinate types, different joint types"
                                    .to_string(),
                            });
                        }
                    }
                }
            }
        }
    }
}

/// Witness hunt for the right-extension axiom. Absence of a witness in a
/// finite stage is inconclusive, never a violation.
fn check_extension(search: &mut Search, budget: &CheckBudget, rng: &mut ChaCha8Rng) {
    let n = search.m.size();
    if n == 0 {
        return;
    }
    for _ in 0..budget.random_configs {
        let sa = sample_set(rng, n, budget.random_set_size, false);
        let sc = sample_set(rng, n, budget.random_set_size, true);
        let sb = sample_set(rng, n, budget.random_set_size, false);
        if !search.indep(&sa, &sc, &sb) {
            continue;
        }
        search.configs_checked += 1;
        let d: Vec<Point> = (0..budget.extension_probe_len)
            .map(|_| rng.gen_range(0..n))
            .collect();
        let bc = union(&sb, &sc);
        let found = witness_tuples(search.m, d.len(), &bc, &d).into_iter().any(|d2| {
            let b2 = union(&sb, &d2);
            search.indep(&sa, &sc, &b2)
        });
        if !found {
            search.inconclusive += 1;
        }
    }
}

/// All tuples of the given length whose type over `base` matches `d`.
fn witness_tuples(
    m: &FinStructure,
    len: usize,
    base: &[Point],
    d: &[Point],
) -> Vec<Vec<Point>> {
    let mut target = d.to_vec();
    target.extend_from_slice(base);
    let target_key = type_key(m, &target);
    let mut out = Vec::new();
    let mut tuple = vec![0; len];
    loop {
        let mut probe = tuple.clone();
        probe.extend_from_slice(base);
        if type_key(m, &probe) == target_key {
            out.push(tuple.clone());
        }
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            tuple[i] += 1;
            if tuple[i] < m.size() {
                break;
            }
            tuple[i] = 0;
        }
        if tuple.iter().all(|&t| t == 0) {
            return out;
        }
    }
}

fn check_transitivity(
    search: &mut Search,
    budget: &CheckBudget,
    rng: &mut ChaCha8Rng,
    left: bool,
) {
    let n = search.m.size();
    // Base-free pass over the wide window: every published failure of the
    // catalog fixtures lives here. The (D, B) premise (left) or (A, D)
    // premise (right) is hoisted out of the innermost loop.
    let wide = enum_sets(budget.exhaustive_window.min(n), budget.exhaustive_set_size);
    let empty: Vec<Point> = Vec::new();
    for s1 in &wide {
        for s2 in &wide {
            // Reads D ind B on the left, A ind D on the right; with an
            // empty base the combined base is just D itself.
            if !search.indep(s1, &empty, s2) {
                continue;
            }
            for s3 in &wide {
                if left {
                    check_transitivity_config(search, s3, s2, &empty, s1, s1, left, true);
                } else {
                    check_transitivity_config(search, s1, s3, &empty, s2, s2, left, true);
                }
            }
        }
    }
    // Full four-set pass over the narrow window.
    let narrow = enum_sets(budget.four_set_window.min(n), budget.exhaustive_set_size);
    for sc in &narrow {
        if sc.is_empty() {
            continue; // covered by the wide pass
        }
        for sd in &narrow {
            let dc = union(sd, sc);
            for sb in &narrow {
                for sa in &narrow {
                    check_transitivity_config(search, sa, sb, sc, sd, &dc, left, false);
                }
            }
        }
    }
    for _ in 0..budget.random_configs {
        let sa = sample_set(rng, n, budget.random_set_size, false);
        let sb = sample_set(rng, n, budget.random_set_size, false);
        let sc = sample_set(rng, n, budget.random_set_size, true);
        let sd = sample_set(rng, n, budget.random_set_size, false);
        let dc = union(&sd, &sc);
        check_transitivity_config(search, &sa, &sb, &sc, &sd, &dc, left, false);
    }
}

#[allow(clippy::too_many_arguments)]
fn check_transitivity_config(
    search: &mut Search,
    sa: &[Point],
    sb: &[Point],
    sc: &[Point],
    sd: &[Point],
    dc: &[Point],
    left: bool,
    hoisted_premise: bool,
) {
    if left {
        // A ind B over D+C, and D ind B over C, forces A+D ind B over C.
        if !(hoisted_premise || search.indep(sd, sc, sb)) || !search.indep(sa, dc, sb) {
            return;
        }
        search.configs_checked += 1;
        search.union_scratch(sa, sd);
        let ad = std::mem::take(&mut search.scratch);
        let bad = !search.indep(&ad, sc, sb);
        if bad {
            search.violation(Counterexample {
                a: sa.to_vec(),
                b: sb.to_vec(),
                c: sc.to_vec(),
                d: Some(sd.to_vec()),
                witness: vec![ad.clone()],
                note: "left transitivity: premises hold, conclusion fails".to_string(),
            });
        }
        search.scratch = ad;
    } else {
        // A ind B over D+C, and A ind D over C, forces A ind B+D over C.
        if !(hoisted_premise || search.indep(sa, sc, sd)) || !search.indep(sa, dc, sb) {
            return;
        }
        search.configs_checked += 1;
        search.union_scratch(sb, sd);
        let bd = std::mem::take(&mut search.scratch);
        let bad = !search.indep(sa, sc, &bd);
        if bad {
            search.violation(Counterexample {
                a: sa.to_vec(),
                b: sb.to_vec(),
                c: sc.to_vec(),
                d: Some(sd.to_vec()),
                witness: vec![bd.clone()],
                note: "right transitivity: premises hold, conclusion fails".to_string(),
            });
        }
        search.scratch = bd;
    }
}

fn check_monotonicity(search: &mut Search, budget: &CheckBudget, rng: &mut ChaCha8Rng) {
    let n = search.m.size();
    let sets = enum_sets(budget.exhaustive_window.min(n), budget.exhaustive_set_size);
    for sa in &sets {
        for sc in &sets {
            for sb in &sets {
                check_monotonicity_config(search, sa, sc, sb);
            }
        }
    }
    for _ in 0..budget.random_configs {
        let sa = sample_set(rng, n, budget.random_set_size, false);
        let sc = sample_set(rng, n, budget.random_set_size, true);
        let sb = sample_set(rng, n, budget.random_set_size, false);
        check_monotonicity_config(search, &sa, &sc, &sb);
    }
}

fn check_monotonicity_config(search: &mut Search, sa: &[Point], sc: &[Point], sb: &[Point]) {
    if !search.indep(sa, sc, sb) {
        return;
    }
    search.configs_checked += 1;
    debug_assert!(sa.len() <= 16 && sb.len() <= 16);
    let mut a2 = [0; 16];
    let mut b2 = [0; 16];
    for mask_a in 0u32..(1 << sa.len()) {
        let la = fill_subset(&mut a2, sa, mask_a);
        for mask_b in 0u32..(1 << sb.len()) {
            let lb = fill_subset(&mut b2, sb, mask_b);
            if !search.indep(&a2[..la], sc, &b2[..lb]) {
                search.violation(Counterexample {
                    a: sa.to_vec(),
                    b: sb.to_vec(),
                    c: sc.to_vec(),
                    d: None,
                    witness: vec![a2[..la].to_vec(), b2[..lb].to_vec()],
                    note: "monotonicity: subset pair not independent".to_string(),
                });
            }
        }
    }
}

/// Writes the masked subset (order preserved, so still sorted) into the
/// buffer and returns its length.
fn fill_subset(buf: &mut [Point; 16], set: &[Point], mask: u32) -> usize {
    let mut len = 0;
    for (i, &p) in set.iter().enumerate() {
        if mask >> i & 1 == 1 {
            buf[len] = p;
            len += 1;
        }
    }
    len
}

fn check_existence(search: &mut Search, budget: &CheckBudget, rng: &mut ChaCha8Rng) {
    let n = search.m.size();
    let sets = enum_sets(budget.exhaustive_window.min(n), budget.exhaustive_set_size);
    let mut configs: Vec<(Vec<Point>, Vec<Point>)> = Vec::new();
    for sa in &sets {
        for sc in &sets {
            configs.push((sa.clone(), sc.clone()));
        }
    }
    for _ in 0..budget.random_configs {
        configs.push((
            sample_set(rng, n, budget.random_set_size, false),
            sample_set(rng, n, budget.random_set_size, true),
        ));
    }
    for (sa, sc) in configs {
        search.configs_checked += 1;
        if !search.indep(&sa, &sc, &sc) || !search.indep(&sc, &sc, &sa) {
            search.violation(Counterexample {
                a: sa.clone(),
                b: sc.clone(),
                c: sc.clone(),
                d: None,
                witness: Vec::new(),
                note: "existence fails".to_string(),
            });
        }
    }
}
