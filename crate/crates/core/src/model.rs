//! Problem representations.
//!
//! Coordinates of the slack space are 1-based: `1..=m` are the `u` variables,
//! `m+1..=2m` their slacks `v`. The lifted matrix space uses the same numbers,
//! with index 0 reserved for the homogenizing coordinate, so the lifted
//! diagonal entry `X[i][i]` stands for `x_i`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `min u^T R u + constant` over `u ∈ {0,1}^m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuboInstance {
    m: usize,
    r: Vec<i64>,
    constant: i64,
}

impl QuboInstance {
    /// Builds an instance from a row-major `m×m` matrix.
    pub fn new(m: usize, r: Vec<i64>, constant: i64) -> Result<Self> {
        if r.len() != m * m {
            return Err(Error::ShapeMismatch { len: r.len(), expected: m * m });
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if r[i * m + j] != r[j * m + i] {
                    return Err(Error::Asymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { m, r, constant })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let m = rows.len();
        let mut r = Vec::with_capacity(m * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::ShapeMismatch { len: row.len(), expected: m });
            }
            r.extend_from_slice(row);
        }
        Self::new(m, r, 0)
    }

    pub fn zeros(m: usize) -> Self {
        Self { m, r: vec![0; m * m], constant: 0 }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn constant(&self) -> i64 {
        self.constant
    }

    /// Entry `R[i][j]`, 0-based.
    #[inline]
    pub fn r(&self, i: usize, j: usize) -> i64 {
        self.r[i * self.m + j]
    }

    pub fn matrix(&self) -> &[i64] {
        &self.r
    }

    /// Sets `R[i][j] = R[j][i] = value` (0-based).
    pub fn set(&mut self, i: usize, j: usize, value: i64) {
        self.r[i * self.m + j] = value;
        self.r[j * self.m + i] = value;
    }

    /// Objective value `u^T R u + constant` for a 0/1 vector of length `m`.
    pub fn evaluate(&self, u: &[bool]) -> i64 {
        debug_assert_eq!(u.len(), self.m);
        let mut total = self.constant;
        for i in (0..self.m).filter(|&i| u[i]) {
            for j in (0..self.m).filter(|&j| u[j]) {
                total += self.r(i, j);
            }
        }
        total
    }

    /// Same instance with the objective sign flipped, turning a maximization
    /// instance into the equivalent minimization.
    pub fn negated(&self) -> Self {
        Self {
            m: self.m,
            r: self.r.iter().map(|v| -v).collect(),
            constant: -self.constant,
        }
    }

    /// Largest absolute objective coefficient (at least 1).
    pub fn max_abs(&self) -> i64 {
        self.r
            .iter()
            .map(|v| v.abs())
            .chain(std::iter::once(self.constant.abs()))
            .max()
            .unwrap_or(0)
            .max(1)
    }
}

/// The `x = (u, v)` space with `u + v = e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlackSpace {
    pub m: usize,
}

impl SlackSpace {
    pub fn new(m: usize) -> Self {
        Self { m }
    }

    pub fn dim(&self) -> usize {
        2 * self.m
    }

    pub fn is_u(&self, coord: usize) -> bool {
        (1..=self.m).contains(&coord)
    }

    /// The coordinate paired with `coord` by `u_i + v_i = 1`.
    pub fn complement(&self, coord: usize) -> usize {
        if self.is_u(coord) {
            coord + self.m
        } else {
            coord - self.m
        }
    }

    /// The original `u` index a coordinate refers to.
    pub fn variable(&self, coord: usize) -> usize {
        if self.is_u(coord) {
            coord
        } else {
            coord - self.m
        }
    }

    /// `x = (u, e - u)` as a 0/1 vector of length `2m` (position `i-1` holds `x_i`).
    pub fn point(&self, u: &[bool]) -> Vec<u8> {
        u.iter()
            .map(|&b| b as u8)
            .chain(u.iter().map(|&b| (!b) as u8))
            .collect()
    }

    pub fn check_feasible(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InfeasibleIncumbent(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                x.len()
            )));
        }
        for i in 0..self.m {
            let (u, v) = (x[i], x[i + self.m]);
            if u > 1 || v > 1 {
                return Err(Error::InfeasibleIncumbent(format!("x{} is not binary", i + 1)));
            }
            if u + v != 1 {
                return Err(Error::InfeasibleIncumbent(format!(
                    "u{0} + v{0} = {1}",
                    i + 1,
                    u + v
                )));
            }
        }
        Ok(())
    }
}

/// A nonempty set of slack-space coordinates, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CutSet(Vec<usize>);

impl CutSet {
    pub fn new(coords: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = coords.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, coord: usize) -> bool {
        self.0.binary_search(&coord).is_ok()
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn max_coord(&self) -> usize {
        *self.0.last().expect("nonempty")
    }

    /// `∑_{i∈I} x_i` where `x[i-1]` holds `x_i`.
    pub fn count(&self, x: &[u8]) -> i64 {
        self.0.iter().map(|&i| x[i - 1] as i64).sum()
    }

    /// Same set with every coordinate replaced by its mirror in the other block.
    pub fn mirrored(&self, space: SlackSpace) -> Self {
        Self::new(self.0.iter().map(|&c| space.complement(c))).expect("nonempty")
    }
}

impl fmt::Display for CutSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `∑ x_i ≥ rhs`
    AtLeast,
    /// `∑ x_i ≤ rhs`
    AtMost,
}

/// `∑_{i∈I} x_i (≥|≤) rhs` in slack-space coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCut {
    pub set: CutSet,
    pub rhs: i64,
    pub sense: Sense,
}

impl LinearCut {
    pub fn at_least(set: CutSet, rhs: i64) -> Self {
        Self { set, rhs, sense: Sense::AtLeast }
    }

    pub fn at_most(set: CutSet, rhs: i64) -> Self {
        Self { set, rhs, sense: Sense::AtMost }
    }

    pub fn holds(&self, count: i64) -> bool {
        match self.sense {
            Sense::AtLeast => count >= self.rhs,
            Sense::AtMost => count <= self.rhs,
        }
    }

    pub fn holds_at(&self, x: &[u8]) -> bool {
        self.holds(self.set.count(x))
    }
}

/// A candidate `(I, α, β)`: `∑_{i∈I} x_i ≥ α` is proven for the optimal set,
/// and the next probe tests `∑_{i∈I} x_i ≤ α + β`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutTriple {
    pub set: CutSet,
    pub alpha: usize,
    pub beta: usize,
}

impl CutTriple {
    pub fn is_saturated(&self) -> bool {
        self.alpha >= self.set.len()
    }

    pub fn valid_cut(&self) -> LinearCut {
        LinearCut::at_least(self.set.clone(), self.alpha as i64)
    }

    pub fn probe_cut(&self) -> LinearCut {
        LinearCut::at_most(self.set.clone(), (self.alpha + self.beta) as i64)
    }
}

/// Sparse linear functional on symmetric matrices: `⟨A, X⟩ = ∑ w · X[i][j]`
/// over the stored `(i, j, w)` with `i ≤ j`. As a symmetric matrix `A` holds
/// `w` on the diagonal and `w/2` in both off-diagonal positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, i64)>,
}

impl SparseSym {
    pub fn new(mut entries: Vec<(usize, usize, i64)>) -> Self {
        for e in entries.iter_mut() {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
        }
        Self { entries }
    }

    /// `⟨A, X⟩` for a dense row-major symmetric `X` of side `dim`.
    pub fn apply(&self, x: &[f64], dim: usize) -> f64 {
        self.entries.iter().map(|&(i, j, w)| w as f64 * x[i * dim + j]).sum()
    }

    pub fn apply_int(&self, x: &[i64], dim: usize) -> i64 {
        self.entries.iter().map(|&(i, j, w)| w * x[i * dim + j]).sum()
    }

    /// Entry `A[i][j]` of the symmetric matrix this functional represents.
    pub fn symmetric_entry(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.entries
            .iter()
            .filter(|e| e.0 == a && e.1 == b)
            .map(|e| if a == b { e.2 as f64 } else { e.2 as f64 / 2.0 })
            .sum()
    }

    /// True when the symmetric matrix has integer entries.
    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|&(i, j, w)| i == j || w % 2 == 0)
    }
}

/// One equality `⟨A, X⟩ = rhs` of the lifted problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equality {
    pub lhs: SparseSym,
    pub rhs: i64,
}

/// `min ⟨Q, X⟩` over symmetric `X` of side `ℓ = 1 + 2m` subject to the
/// equalities and cone membership.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedProblem {
    pub m: usize,
    pub ell: usize,
    /// Row-major `ℓ×ℓ` symmetric integer matrix.
    pub q: Vec<i64>,
    pub equalities: Vec<Equality>,
    pub psd: bool,
    pub nonnegative: bool,
}

impl LiftedProblem {
    #[inline]
    pub fn q(&self, i: usize, j: usize) -> i64 {
        self.q[i * self.ell + j]
    }

    /// Trace of every feasible `X`: `X_00 = 1` plus
    /// `∑ X_ii = ∑ (X_0i + X_0,m+i) = m`.
    pub fn trace_bound(&self) -> f64 {
        (1 + self.m) as f64
    }
}

/// `Φ(x) = (1, x)(1, x)^T`, row-major.
pub fn lift_point(x: &[u8]) -> Vec<i64> {
    let ell = x.len() + 1;
    let mut hom = Vec::with_capacity(ell);
    hom.push(1i64);
    hom.extend(x.iter().map(|&b| b as i64));
    let mut out = vec![0i64; ell * ell];
    for i in 0..ell {
        for j in 0..ell {
            out[i * ell + j] = hom[i] * hom[j];
        }
    }
    out
}

/// `⟨A, B⟩` for two dense row-major matrices.
pub fn frobenius_int(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Homogenized matrix-space form of a QUBO in the slack space.
pub fn lift_qubo(inst: &QuboInstance) -> LiftedProblem {
    let m = inst.m();
    let ell = 1 + 2 * m;
    let mut q = vec![0i64; ell * ell];
    q[0] = inst.constant();
    for i in 0..m {
        for j in 0..m {
            q[(i + 1) * ell + (j + 1)] = inst.r(i, j);
        }
    }

    let mut equalities = Vec::with_capacity(1 + 4 * m);
    equalities.push(Equality { lhs: SparseSym::new(vec![(0, 0, 1)]), rhs: 1 });
    for j in 1..=2 * m {
        equalities.push(Equality { lhs: SparseSym::new(vec![(j, j, 1), (0, j, -1)]), rhs: 0 });
    }
    for i in 1..=m {
        equalities.push(Equality { lhs: SparseSym::new(vec![(0, i, 1), (0, m + i, 1)]), rhs: 1 });
    }
    for i in 1..=m {
        equalities.push(Equality { lhs: SparseSym::new(vec![(i, m + i, 1)]), rhs: 0 });
    }

    LiftedProblem { m, ell, q, equalities, psd: true, nonnegative: true }
}

/// A cut `⟨G, X⟩ ≤ α` or `⟨G, X⟩ ≥ α + 1` in the lifted space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixCut {
    pub g: SparseSym,
    pub alpha: i64,
    pub sense: Sense,
}

impl MatrixCut {
    /// Right-hand side of the constraint this cut imposes.
    pub fn level(&self) -> i64 {
        match self.sense {
            Sense::AtMost => self.alpha,
            Sense::AtLeast => self.alpha + 1,
        }
    }
}

/// Lifts `∑_{i∈I} x_i` onto the diagonal: `G = diag(1_I)`, so the cut reads
/// `∑ X_ii ≤ α` or `∑ X_ii ≥ α + 1`.
pub fn embed_linear_cut(set: &[usize], alpha: i64, sense: Sense) -> Result<MatrixCut> {
    let set = CutSet::new(set.iter().copied())?;
    if set.coords()[0] == 0 {
        return Err(Error::CoordinateOutOfRange { index: 0, max: usize::MAX });
    }
    let g = SparseSym::new(set.coords().iter().map(|&i| (i, i, 1)).collect());
    Ok(MatrixCut { g, alpha, sense })
}

/// Fixed values of original `u` variables (1-based index).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    fixed: BTreeMap<usize, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        self.fixed.get(&var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.fixed.iter().map(|(&k, &v)| (k, v))
    }

    /// Fixes `u_var = value`. Returns whether the fix is new.
    pub fn fix(&mut self, var: usize, value: bool) -> Result<bool> {
        match self.fixed.get(&var) {
            Some(&old) if old == value => Ok(false),
            Some(_) => Err(Error::ConflictingFix { index: var }),
            None => {
                self.fixed.insert(var, value);
                Ok(true)
            }
        }
    }

    /// Fixes slack-space coordinate `coord` to `value`, which also fixes its
    /// complement to `1 - value`.
    pub fn fix_coord(&mut self, space: SlackSpace, coord: usize, value: bool) -> Result<bool> {
        let var = space.variable(coord);
        let u_value = if space.is_u(coord) { value } else { !value };
        self.fix(var, u_value)
    }

    /// Value implied for slack coordinate `coord`, if its variable is fixed.
    pub fn coord_value(&self, space: SlackSpace, coord: usize) -> Option<bool> {
        self.get(space.variable(coord))
            .map(|u| if space.is_u(coord) { u } else { !u })
    }

    /// Unfixed `u` indices of an `m`-variable instance, ascending.
    pub fn free_vars(&self, m: usize) -> Vec<usize> {
        (1..=m).filter(|v| !self.fixed.contains_key(v)).collect()
    }
}

/// Substitutes the fixed values and returns the QUBO over the free variables
/// (in ascending original order). Fixing `u_j = 1` folds `2 R_ij` into the
/// diagonal of every free `i` and adds the fixed-block terms to the constant;
/// fixing `u_j = 0` deletes row and column `j`.
pub fn reduce_problem(inst: &QuboInstance, fixes: &Assignment) -> QuboInstance {
    let m = inst.m();
    let free: Vec<usize> = fixes.free_vars(m).into_iter().map(|v| v - 1).collect();
    let ones: Vec<usize> = fixes.iter().filter(|&(v, b)| b && v <= m).map(|(v, _)| v - 1).collect();

    let mut constant = inst.constant();
    for &j in &ones {
        for &k in &ones {
            constant += inst.r(j, k);
        }
    }

    let d = free.len();
    let mut r = vec![0i64; d * d];
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            r[a * d + b] = inst.r(i, j);
        }
        let fold: i64 = ones.iter().map(|&j| 2 * inst.r(i, j)).sum();
        r[a * d + a] += fold;
    }
    QuboInstance { m: d, r, constant }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var() -> QuboInstance {
        QuboInstance::from_rows(&[vec![1, -3], vec![-3, 1]]).unwrap()
    }

    #[test]
    fn rejects_asymmetric() {
        let err = QuboInstance::new(2, vec![1, 2, 3, 4], 0).unwrap_err();
        assert_eq!(err, Error::Asymmetric { row: 0, col: 1 });
    }

    #[test]
    fn lift_single_variable() {
        let inst = QuboInstance::from_rows(&[vec![5]]).unwrap();
        let lp = lift_qubo(&inst);
        assert_eq!(lp.ell, 3);
        let mut expected = vec![0; 9];
        expected[4] = 5;
        assert_eq!(lp.q, expected);

        let eqs: Vec<(Vec<(usize, usize, i64)>, i64)> =
            lp.equalities.iter().map(|e| (e.lhs.entries.clone(), e.rhs)).collect();
        assert_eq!(
            eqs,
            vec![
                (vec![(0, 0, 1)], 1),
                (vec![(1, 1, 1), (0, 1, -1)], 0),
                (vec![(2, 2, 1), (0, 2, -1)], 0),
                (vec![(0, 1, 1), (0, 2, 1)], 1),
                (vec![(1, 2, 1)], 0),
            ]
        );

        let x = SlackSpace::new(1).point(&[true]);
        assert_eq!(frobenius_int(&lp.q, &lift_point(&x)), 5);
    }

    #[test]
    fn equality_count() {
        assert_eq!(lift_qubo(&QuboInstance::zeros(2)).equalities.len(), 9);
        assert_eq!(lift_qubo(&QuboInstance::zeros(7)).equalities.len(), 1 + 4 * 7);
    }

    #[test]
    fn lifted_point_satisfies_equalities() {
        let space = SlackSpace::new(3);
        let lp = lift_qubo(&QuboInstance::zeros(3));
        let x = space.point(&[true, false, true]);
        let phi = lift_point(&x);
        for eq in &lp.equalities {
            assert_eq!(eq.lhs.apply_int(&phi, lp.ell), eq.rhs);
        }
    }

    #[test]
    fn embed_cut_diagonal() {
        let cut = embed_linear_cut(&[1, 3], 1, Sense::AtLeast).unwrap();
        assert_eq!(cut.g.entries, vec![(1, 1, 1), (3, 3, 1)]);
        assert_eq!(cut.level(), 2);
        assert!(cut.g.is_integral());
        assert_eq!(cut.g.symmetric_entry(1, 1), 1.0);
        assert_eq!(cut.g.symmetric_entry(2, 2), 0.0);
        let x = [1u8, 0, 1, 0, 1, 0];
        assert_eq!(cut.g.apply_int(&lift_point(&x), 7), 2);
    }

    #[test]
    fn embed_rejects_empty() {
        assert_eq!(embed_linear_cut(&[], 0, Sense::AtMost), Err(Error::EmptyIndexSet));
    }

    #[test]
    fn reduce_fix_to_zero_deletes() {
        let inst = two_var();
        let mut fixes = Assignment::new();
        fixes.fix(2, false).unwrap();
        let red = reduce_problem(&inst, &fixes);
        assert_eq!(red.matrix(), &[1]);
        assert_eq!(red.constant(), 0);
    }

    #[test]
    fn reduce_fix_to_one_folds() {
        let inst = two_var();
        let mut fixes = Assignment::new();
        fixes.fix(2, true).unwrap();
        let red = reduce_problem(&inst, &fixes);
        assert_eq!(red.matrix(), &[-5]);
        assert_eq!(red.constant(), 1);
        let best = [false, true].iter().map(|&u| red.evaluate(&[u])).min().unwrap();
        assert_eq!(best, -4);
    }

    #[test]
    fn reduce_without_fixes_is_identity() {
        let inst = two_var();
        assert_eq!(reduce_problem(&inst, &Assignment::new()), inst);
    }

    #[test]
    fn assignment_conflicts() {
        let space = SlackSpace::new(3);
        let mut a = Assignment::new();
        assert!(a.fix_coord(space, 5, true).unwrap());
        assert_eq!(a.get(2), Some(false));
        assert_eq!(a.coord_value(space, 2), Some(false));
        assert_eq!(a.coord_value(space, 5), Some(true));
        assert!(!a.fix(2, false).unwrap());
        assert_eq!(a.fix(2, true), Err(Error::ConflictingFix { index: 2 }));
    }

    #[test]
    fn slack_feasibility() {
        let space = SlackSpace::new(2);
        assert!(space.check_feasible(&[1, 0, 0, 1]).is_ok());
        assert!(space.check_feasible(&[1, 0, 1, 1]).is_err());
        assert!(space.check_feasible(&[1, 1, 0, 0]).is_ok());
        assert!(space.check_feasible(&[2, 0, 0, 1]).is_err());
    }
}
