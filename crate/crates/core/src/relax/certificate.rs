//! Rigorous lower bounds from arbitrary dual candidates.
//!
//! For multipliers `y` (free on equalities, `≥ 0` on `≥` cuts, `≤ 0` on `≤`
//! cuts) and an optional elementwise nonnegative `Z`, every feasible `X`
//! satisfies
//!
//! ```text
//! ⟨Q, X⟩ ≥ bᵀy + ⟨Q − Σ y_r A_r − Z, X⟩ ≥ bᵀy + τ · min(0, λ_min(Q − Σ y_r A_r − Z))
//! ```
//!
//! because `X ⪰ 0`, `X ≥ 0` and `tr X = τ = 1 + m` on the feasible set. The
//! eigenvalue is shifted down by a slack that covers floating-point error in
//! the eigensolver and in forming the slack matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Equality, LinearCut, Sense};

use super::psd::{min_eigenvalue, EPS_EIG};
use super::RelaxationQuery;

/// Multipliers for one query: `y` lists equalities first (in lifted order),
/// then cuts (in query order).
#[derive(Debug, Clone, PartialEq)]
pub struct DualCandidate {
    pub y: Vec<f64>,
    pub z: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowSign {
    Free,
    NonNegative,
    NonPositive,
}

/// A constraint row `∑ w · X[i][j] (=|≥|≤) rhs` with `i ≤ j`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Row {
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: f64,
    pub sign: RowSign,
}

impl Row {
    pub fn from_equality(eq: &Equality) -> Self {
        Self {
            entries: eq.lhs.entries.iter().map(|&(i, j, w)| (i, j, w as f64)).collect(),
            rhs: eq.rhs as f64,
            sign: RowSign::Free,
        }
    }

    pub fn from_cut(cut: &LinearCut) -> Self {
        Self {
            entries: cut.set.coords().iter().map(|&i| (i, i, 1.0)).collect(),
            rhs: cut.rhs as f64,
            sign: sign_of(cut.sense),
        }
    }

    /// Frobenius norm of the symmetric matrix of this row.
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, w)| if i == j { w * w } else { w * w / 2.0 })
            .sum::<f64>()
            .sqrt()
    }

    /// `out += scale · A_r` on the symmetric matrix.
    pub fn add_scaled(&self, out: &mut DMatrix<f64>, scale: f64) {
        for &(i, j, w) in &self.entries {
            if i == j {
                out[(i, i)] += scale * w;
            } else {
                let half = 0.5 * scale * w;
                out[(i, j)] += half;
                out[(j, i)] += half;
            }
        }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, w)| w * x[(i, j)]).sum()
    }
}

pub(crate) fn sign_of(sense: Sense) -> RowSign {
    match sense {
        Sense::AtLeast => RowSign::NonNegative,
        Sense::AtMost => RowSign::NonPositive,
    }
}

/// The bound for `(y, z)` against objective `q` and `rows`.
pub(crate) fn certify(q: &DMatrix<f64>, rows: &[Row], y: &[f64], z: Option<&DMatrix<f64>>, tau: f64) -> Result<f64> {
    if y.len() != rows.len() {
        return Err(Error::DualLength { got: y.len(), expected: rows.len() });
    }
    for (index, (row, &value)) in rows.iter().zip(y).enumerate() {
        let bad = match row.sign {
            RowSign::Free => !value.is_finite(),
            RowSign::NonNegative => !value.is_finite() || value < 0.0,
            RowSign::NonPositive => !value.is_finite() || value > 0.0,
        };
        if bad {
            return Err(Error::SignViolation { index, value });
        }
    }
    if let Some(z) = z {
        if let Some((k, &value)) = z.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::SignViolation { index: rows.len() + k, value });
        }
    }

    let mut slack = q.clone();
    let mut magnitude = q.norm();
    let mut dual_objective = 0.0;
    let mut objective_magnitude = 0.0;
    for (row, &value) in rows.iter().zip(y) {
        if value != 0.0 {
            row.add_scaled(&mut slack, -value);
            magnitude += value.abs() * row.norm();
            dual_objective += value * row.rhs;
            objective_magnitude += (value * row.rhs).abs();
        }
    }
    if let Some(z) = z {
        slack -= z;
        magnitude += z.norm();
    }

    let dim = slack.nrows() as f64;
    let eig_slack = EPS_EIG + 64.0 * dim * f64::EPSILON * magnitude;
    let lambda = min_eigenvalue(&slack)?;
    let sum_slack = 4.0 * (rows.len() as f64 + 1.0) * f64::EPSILON * objective_magnitude;
    Ok(dual_objective - sum_slack + tau * (lambda - eig_slack).min(0.0))
}

/// `bᵀy + τ · min(0, λ_min(Q − Σ y_r A_r − Z) − ε)` for the query's
/// equalities and cuts. Valid for every sign-correct candidate.
pub fn safe_lower_bound(dual: &DualCandidate, query: &RelaxationQuery<'_>, tau: f64) -> Result<f64> {
    let lifted = query.lifted;
    let ell = lifted.ell;
    let q = DMatrix::from_fn(ell, ell, |i, j| lifted.q(i, j) as f64);
    let rows: Vec<Row> = lifted
        .equalities
        .iter()
        .map(Row::from_equality)
        .chain(query.cuts.iter().map(Row::from_cut))
        .collect();
    certify(&q, &rows, &dual.y, dual.z.as_ref(), tau)
}
