//! Candidate families of cutting inequalities and their lifecycle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, CutSet, CutTriple, SlackSpace};

/// How a set is halved when building the initial family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// Even positions form `J1`, odd positions `J2`; for odd sizes the last
    /// element of `J1` is shared.
    Interleave,
    /// Shuffle, then take the first and the last `⌈n/2⌉` elements.
    SeededRandom,
}

impl FromStr for SplitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interleave" => Ok(Self::Interleave),
            "random" | "seeded-random" => Ok(Self::SeededRandom),
            other => Err(Error::Config(format!("unknown split rule `{other}`"))),
        }
    }
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Interleave => "interleave",
            Self::SeededRandom => "random",
        })
    }
}

/// A ratio `num/den` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gamma {
    num: u64,
    den: u64,
}

impl Gamma {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::Config(format!("gamma must lie in (0,1), got {num}/{den}")));
        }
        Ok(Self { num, den })
    }

    /// `⌊γ · n⌋`
    pub fn floor_times(&self, n: usize) -> usize {
        (self.num as u128 * n as u128 / self.den as u128) as usize
    }
}

impl Default for Gamma {
    fn default() -> Self {
        Self { num: 1, den: 3 }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Accepts `p/q` or a terminating decimal such as `0.25`.
impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse gamma `{s}`"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return Self::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10u64.pow(frac.len() as u32);
        let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac_val)).ok_or_else(bad)?;
        let g = gcd(num.max(1), den);
        Self::new(num / g, den / g)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Recursive halving of `{1..m}` down to singletons, together with the
/// mirrored `v`-block sets. Sets are listed level by level, first occurrence
/// kept.
pub fn generate_initial_family(m: usize, rule: SplitRule, seed: u64) -> Vec<CutSet> {
    if m == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut frontier = vec![(1..=m).collect::<Vec<_>>()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for j in frontier {
            if !seen.insert(j.clone()) {
                continue;
            }
            if j.len() >= 2 {
                let (a, b) = split(&j, rule, &mut rng);
                next.push(a);
                next.push(b);
            }
            levels.push(j);
        }
        frontier = next;
    }

    let space = SlackSpace::new(m);
    let mut out: Vec<CutSet> = levels
        .iter()
        .map(|j| CutSet::new(j.iter().copied()).expect("nonempty"))
        .collect();
    let mirrors: Vec<CutSet> = out.iter().map(|s| s.mirrored(space)).collect();
    out.extend(mirrors);
    out
}

fn split(j: &[usize], rule: SplitRule, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let half = j.len().div_ceil(2);
    match rule {
        SplitRule::Interleave => {
            let first: Vec<usize> = j.iter().step_by(2).copied().collect();
            let mut second: Vec<usize> = j.iter().skip(1).step_by(2).copied().collect();
            if second.len() < half {
                second.push(*first.last().expect("nonempty"));
            }
            second.sort_unstable();
            (first, second)
        }
        SplitRule::SeededRandom => {
            let mut perm = j.to_vec();
            perm.shuffle(rng);
            let mut first = perm[..half].to_vec();
            let mut second = perm[j.len() - half..].to_vec();
            first.sort_unstable();
            second.sort_unstable();
            (first, second)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    alpha: usize,
    beta: usize,
    /// Consecutive failed probes at `β = 0`.
    stalls: usize,
}

/// Evolving family of triples, keyed and iterated by index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutFamily {
    entries: BTreeMap<CutSet, Entry>,
    gamma: Gamma,
}

/// Outcome of [`update_triple`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TripleUpdate {
    Updated(CutTriple),
    /// `α` reached `|I|`: every member is 1 on the optimal set.
    Saturated(CutTriple),
}

/// Step rule: on success `α ← α + β + 1`, `β ← min(β, |I| − α − 1)`;
/// on failure `β ← ⌊β/2⌋`.
pub fn update_triple(t: &CutTriple, validated: bool) -> TripleUpdate {
    let n = t.set.len();
    if !validated {
        return TripleUpdate::Updated(CutTriple { beta: t.beta / 2, ..t.clone() });
    }
    let alpha = (t.alpha + t.beta + 1).min(n);
    if alpha >= n {
        return TripleUpdate::Saturated(CutTriple { set: t.set.clone(), alpha: n, beta: 0 });
    }
    let beta = t.beta.min(n - alpha - 1);
    TripleUpdate::Updated(CutTriple { set: t.set.clone(), alpha, beta })
}

/// New family with `α = 0` and `β = ⌊γ|I|⌋`; repeated sets are kept once.
pub fn init_triples(sets: impl IntoIterator<Item = CutSet>, gamma: Gamma) -> CutFamily {
    let mut family = CutFamily::new(gamma);
    for set in sets {
        family.insert(set);
    }
    family
}

impl CutFamily {
    pub fn new(gamma: Gamma) -> Self {
        Self { entries: BTreeMap::new(), gamma }
    }

    pub fn gamma(&self) -> Gamma {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, set: &CutSet) -> bool {
        self.entries.contains_key(set)
    }

    pub fn get(&self, set: &CutSet) -> Option<CutTriple> {
        self.entries.get(set).map(|e| CutTriple { set: set.clone(), alpha: e.alpha, beta: e.beta })
    }

    /// Triples in ascending order of index set.
    pub fn triples(&self) -> impl Iterator<Item = CutTriple> + '_ {
        self.entries
            .iter()
            .map(|(set, e)| CutTriple { set: set.clone(), alpha: e.alpha, beta: e.beta })
    }

    /// Adds `set` with the initialization rule. Existing sets are left alone.
    pub fn insert(&mut self, set: CutSet) -> bool {
        if self.entries.contains_key(&set) {
            return false;
        }
        let beta = self.gamma.floor_times(set.len()).min(set.len() - 1);
        self.entries.insert(set, Entry { alpha: 0, beta, stalls: 0 });
        true
    }

    /// Inserts a triple as given, for callers that restore a saved family.
    pub fn insert_triple(&mut self, t: CutTriple) {
        self.entries.insert(t.set, Entry { alpha: t.alpha, beta: t.beta, stalls: 0 });
    }

    /// Applies the probe outcome of `set`. With `retire_after = Some(k)` a
    /// triple whose probe fails at `β = 0` for `k` consecutive iterations is
    /// dropped. Returns the update, or `None` if the triple was retired or is
    /// unknown.
    pub fn apply_outcome(&mut self, set: &CutSet, validated: bool, retire_after: Option<usize>) -> Option<TripleUpdate> {
        let entry = *self.entries.get(set)?;
        let triple = CutTriple { set: set.clone(), alpha: entry.alpha, beta: entry.beta };
        let stalls = if !validated && entry.beta == 0 { entry.stalls + 1 } else { 0 };
        if retire_after.is_some_and(|k| stalls >= k) {
            self.entries.remove(set);
            return None;
        }
        let update = update_triple(&triple, validated);
        let t = match &update {
            TripleUpdate::Updated(t) | TripleUpdate::Saturated(t) => t,
        };
        self.entries.insert(set.clone(), Entry { alpha: t.alpha, beta: t.beta, stalls });
        Some(update)
    }
}

#[derive(Serialize, Deserialize)]
struct TripleRepr {
    set: CutSet,
    alpha: usize,
    beta: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    stalls: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    gamma: Gamma,
    triples: Vec<TripleRepr>,
}

impl Serialize for CutFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let triples = self
            .entries
            .iter()
            .map(|(set, e)| TripleRepr { set: set.clone(), alpha: e.alpha, beta: e.beta, stalls: e.stalls })
            .collect();
        FamilyRepr { gamma: self.gamma, triples }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CutFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FamilyRepr::deserialize(d)?;
        let entries = repr
            .triples
            .into_iter()
            .map(|t| (t.set, Entry { alpha: t.alpha, beta: t.beta, stalls: t.stalls }))
            .collect();
        Ok(CutFamily { entries, gamma: repr.gamma })
    }
}

/// Draws `q` Bernoulli samples from `ū` and `q` from `v̄` (`xbar` has length
/// `2m`, `ū` first) and returns the nonempty supports, `v` supports shifted
/// to coordinates `m+1..2m`. Duplicates are removed; the caller drops sets
/// already in its family.
pub fn sample_additional_cuts<R: Rng + ?Sized>(xbar: &[f64], q: usize, rng: &mut R) -> Vec<CutSet> {
    let m = xbar.len() / 2;
    let (ubar, vbar) = xbar.split_at(m);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..q {
        for (block, offset) in [(ubar, 0), (vbar, m)] {
            let support: Vec<usize> = block
                .iter()
                .enumerate()
                .filter(|&(_, &p)| rng.random::<f64>() < p)
                .map(|(i, _)| offset + i + 1)
                .collect();
            if let Ok(set) = CutSet::new(support) {
                if seen.insert(set.clone()) {
                    out.push(set);
                }
            }
        }
    }
    out
}

/// `Ĵ = {i : x̂_i = 1}` plus `subsets` random nonempty proper subsets of it.
pub fn incumbent_cuts<R: Rng + ?Sized>(xhat: &[u8], subsets: usize, rng: &mut R) -> Result<Vec<CutSet>> {
    let space = SlackSpace::new(xhat.len() / 2);
    space.check_feasible(xhat)?;
    let support: Vec<usize> = (1..=xhat.len()).filter(|&i| xhat[i - 1] == 1).collect();
    let Ok(full) = CutSet::new(support.iter().copied()) else {
        return Ok(Vec::new());
    };
    let mut out = vec![full];
    if support.len() >= 2 {
        for _ in 0..subsets {
            let pick: Vec<usize> = support.iter().copied().filter(|_| rng.random::<bool>()).collect();
            if pick.is_empty() || pick.len() == support.len() {
                continue;
            }
            let set = CutSet::new(pick).expect("nonempty");
            if !out.contains(&set) {
                out.push(set);
            }
        }
    }
    Ok(out)
}

/// Fixes what the family forces and rewrites the family on the free
/// variables, repeating until nothing changes.
///
/// Singletons with `α ≥ 1` and saturated triples fix their members to 1.
/// Rewriting drops fixed members (those at 1 lower `α` by one); a rewritten
/// triple that becomes empty or reaches `α = β = 0` is removed, and one that
/// lands on an existing set merges into the larger `α`. Any tier that cannot
/// be met raises [`Error::Contradiction`].
pub fn fix_and_prune(family: &CutFamily, fixes: &Assignment, m: usize) -> Result<(Assignment, CutFamily)> {
    let space = SlackSpace::new(m);
    let mut fixes = fixes.clone();
    let mut current = family.clone();
    loop {
        let mut changed = false;
        for (set, e) in &current.entries {
            if e.alpha >= 1 && (set.len() == 1 || e.alpha >= set.len()) {
                if e.alpha > set.len() {
                    return Err(Error::Contradiction(format!("{set} cannot sum to {}", e.alpha)));
                }
                for &c in set.coords() {
                    changed |= fixes.fix_coord(space, c, true).map_err(|err| conflict(err, set))?;
                }
            }
        }

        let mut next = CutFamily::new(current.gamma);
        for (set, e) in &current.entries {
            let mut ones = 0;
            let mut free = Vec::with_capacity(set.len());
            for &c in set.coords() {
                match fixes.coord_value(space, c) {
                    Some(true) => ones += 1,
                    Some(false) => {}
                    None => free.push(c),
                }
            }
            if free.len() == set.len() {
                merge(&mut next, set.clone(), *e);
                continue;
            }
            changed = true;
            let alpha = e.alpha.saturating_sub(ones);
            if alpha > free.len() {
                return Err(Error::Contradiction(format!(
                    "{set} needs {} ones but only {} members remain free",
                    e.alpha,
                    free.len() + ones
                )));
            }
            let Ok(reduced) = CutSet::new(free) else { continue };
            let beta = if alpha < reduced.len() { e.beta.min(reduced.len() - alpha - 1) } else { 0 };
            if alpha == 0 && beta == 0 {
                continue;
            }
            merge(&mut next, reduced, Entry { alpha, beta, stalls: 0 });
        }
        current = next;
        if !changed {
            return Ok((fixes, current));
        }
    }
}

fn conflict(err: Error, set: &CutSet) -> Error {
    match err {
        Error::ConflictingFix { index } => {
            Error::Contradiction(format!("{set} forces u{index} against an earlier fix"))
        }
        other => other,
    }
}

fn merge(family: &mut CutFamily, set: CutSet, e: Entry) {
    match family.entries.get(&set) {
        Some(old) if old.alpha >= e.alpha => {}
        _ => {
            family.entries.insert(set, e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(c: &[usize]) -> CutSet {
        CutSet::new(c.iter().copied()).unwrap()
    }

    fn triple(c: &[usize], alpha: usize, beta: usize) -> CutTriple {
        CutTriple { set: set(c), alpha, beta }
    }

    #[test]
    fn interleave_four() {
        let got = generate_initial_family(4, SplitRule::Interleave, 0);
        let want: Vec<CutSet> = [
            &[1, 2, 3, 4][..],
            &[1, 3],
            &[2, 4],
            &[1],
            &[3],
            &[2],
            &[4],
            &[5, 6, 7, 8],
            &[5, 7],
            &[6, 8],
            &[5],
            &[7],
            &[6],
            &[8],
        ]
        .iter()
        .map(|c| set(c))
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn interleave_odd_shares_one() {
        let got: BTreeSet<CutSet> = generate_initial_family(3, SplitRule::Interleave, 0).into_iter().collect();
        for s in [&[1, 2, 3][..], &[1, 3], &[2, 3], &[1], &[2], &[3], &[4, 5, 6], &[4, 6], &[5, 6]] {
            assert!(got.contains(&set(s)), "missing {s:?}");
        }
        assert_eq!(got.len(), 12);
    }

    #[test]
    fn single_variable_family() {
        assert_eq!(generate_initial_family(1, SplitRule::SeededRandom, 9), vec![set(&[1]), set(&[2])]);
    }

    #[test]
    fn random_split_sizes() {
        let fam = generate_initial_family(7, SplitRule::SeededRandom, 3);
        assert!(fam.contains(&set(&[1, 2, 3, 4, 5, 6, 7])));
        for j in 1..=14 {
            assert!(fam.contains(&set(&[j])));
        }
        assert_eq!(fam, generate_initial_family(7, SplitRule::SeededRandom, 3));
    }

    #[test]
    fn gamma_parsing() {
        assert_eq!("1/3".parse::<Gamma>().unwrap(), Gamma::new(1, 3).unwrap());
        assert_eq!("0.25".parse::<Gamma>().unwrap(), Gamma::new(1, 4).unwrap());
        assert_eq!(".5".parse::<Gamma>().unwrap(), Gamma::new(1, 2).unwrap());
        assert!("1".parse::<Gamma>().is_err());
        assert!("0".parse::<Gamma>().is_err());
        assert!("2/3x".parse::<Gamma>().is_err());
    }

    #[test]
    fn init_rule() {
        let fam = init_triples([set(&[1, 2, 3, 4]), set(&[1]), set(&[1])], Gamma::default());
        assert_eq!(fam.len(), 2);
        assert_eq!(fam.get(&set(&[1, 2, 3, 4])).unwrap().beta, 1);
        assert_eq!(fam.get(&set(&[1])).unwrap().beta, 0);
        assert!(fam.triples().all(|t| t.alpha == 0));
    }

    #[test]
    fn update_rules() {
        assert_eq!(
            update_triple(&triple(&[1, 2, 3, 4], 0, 1), true),
            TripleUpdate::Updated(triple(&[1, 2, 3, 4], 2, 1))
        );
        assert_eq!(
            update_triple(&triple(&[1, 2, 3, 4, 5, 6, 7, 8], 0, 5), false),
            TripleUpdate::Updated(triple(&[1, 2, 3, 4, 5, 6, 7, 8], 0, 2))
        );
        assert_eq!(update_triple(&triple(&[1, 2], 1, 0), true), TripleUpdate::Saturated(triple(&[1, 2], 2, 0)));
    }

    #[test]
    fn retire_stalled() {
        let mut fam = init_triples([set(&[1])], Gamma::default());
        assert!(fam.apply_outcome(&set(&[1]), false, Some(2)).is_some());
        assert!(fam.apply_outcome(&set(&[1]), false, Some(2)).is_none());
        assert!(fam.is_empty());
    }

    #[test]
    fn sampling_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_additional_cuts(&[0.0; 6], 10, &mut rng).is_empty());
        let ones = sample_additional_cuts(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0], 10, &mut rng);
        assert_eq!(ones, vec![set(&[1, 2, 3])]);
        let half = sample_additional_cuts(&[0.5; 8], 10, &mut rng);
        assert!(half.len() <= 20);
        assert!(half.iter().all(|s| s.coords().iter().all(|&c| c <= 4) || s.coords().iter().all(|&c| c > 4)));
    }

    #[test]
    fn incumbent_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cuts = incumbent_cuts(&[1, 0, 1, 0, 1, 0], 4, &mut rng).unwrap();
        assert_eq!(cuts[0], set(&[1, 3, 5]));
        assert!(cuts.iter().skip(1).all(|s| s.len() < 3));
        assert_eq!(incumbent_cuts(&[1, 0], 0, &mut rng).unwrap(), vec![set(&[1])]);
        assert!(matches!(incumbent_cuts(&[1, 1], 0, &mut rng), Err(Error::InfeasibleIncumbent(_))));
    }

    #[test]
    fn singleton_fixes() {
        let mut fam = CutFamily::new(Gamma::default());
        fam.insert_triple(triple(&[3], 1, 0));
        let (fixes, rest) = fix_and_prune(&fam, &Assignment::new(), 4).unwrap();
        assert_eq!(fixes.get(3), Some(true));
        assert_eq!(fixes.coord_value(SlackSpace::new(4), 7), Some(false));
        assert!(rest.is_empty());
    }

    #[test]
    fn rewrite_then_drop() {
        let mut fam = CutFamily::new(Gamma::default());
        fam.insert_triple(triple(&[1, 2], 1, 0));
        let mut fixes = Assignment::new();
        fixes.fix(1, true).unwrap();
        let (_, rest) = fix_and_prune(&fam, &fixes, 2).unwrap();
        assert!(rest.is_empty());
    }

    #[test]
    fn contradiction_on_conflict() {
        let mut fam = CutFamily::new(Gamma::default());
        fam.insert_triple(triple(&[1], 1, 0));
        let mut fixes = Assignment::new();
        fixes.fix(1, false).unwrap();
        assert!(matches!(fix_and_prune(&fam, &fixes, 2), Err(Error::Contradiction(_))));
    }

    #[test]
    fn saturation_fixes_members_and_chains() {
        let mut fam = CutFamily::new(Gamma::default());
        fam.insert_triple(triple(&[1, 2], 2, 0));
        fam.insert_triple(triple(&[2, 3], 2, 0));
        let (fixes, rest) = fix_and_prune(&fam, &Assignment::new(), 3).unwrap();
        assert_eq!(fixes.iter().collect::<Vec<_>>(), vec![(1, true), (2, true), (3, true)]);
        assert!(rest.is_empty());
    }

    #[test]
    fn saturated_complement_pair_is_contradiction() {
        let mut fam = CutFamily::new(Gamma::default());
        fam.insert_triple(triple(&[1, 3], 2, 0));
        assert!(matches!(fix_and_prune(&fam, &Assignment::new(), 2), Err(Error::Contradiction(_))));
    }

    #[test]
    fn rewrite_merges_to_larger_alpha() {
        let mut fam = CutFamily::new(Gamma::default());
        fam.insert_triple(triple(&[2, 3, 4], 1, 1));
        fam.insert_triple(triple(&[1, 2, 3, 4], 3, 0));
        let mut fixes = Assignment::new();
        fixes.fix(1, true).unwrap();
        let (_, rest) = fix_and_prune(&fam, &fixes, 4).unwrap();
        assert_eq!(rest.get(&set(&[2, 3, 4])).unwrap().alpha, 2);
    }

    #[test]
    fn family_serde_round_trip() {
        let mut fam = init_triples(generate_initial_family(3, SplitRule::Interleave, 0), Gamma::default());
        fam.apply_outcome(&set(&[1, 2, 3]), true, None);
        let back: CutFamily = serde_json::from_str(&serde_json::to_string(&fam).unwrap()).unwrap();
        assert_eq!(back, fam);
    }
}
