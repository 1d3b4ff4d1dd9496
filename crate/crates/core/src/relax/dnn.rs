//! First-order solver for the doubly nonnegative relaxation.
//!
//! The dual `max bᵀy  s.t.  A*(y) + S + Z = C, S ⪰ 0, Z ≥ 0` is solved by an
//! alternating direction augmented Lagrangian scheme: a linear solve for `y`,
//! a clamp for `Z`, an eigenvalue projection for `S`, and a multiplier update
//! that keeps the primal iterate `X = Π_psd(·)/μ` positive semidefinite. Cut
//! rows carry slacks so that every constraint is an equality; their sign
//! conditions show up as one more nonnegative block.
//!
//! Whatever the iterate quality, the returned bound comes from
//! [`certify`](super::certificate::certify) and is valid.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::model::{lift_qubo, CutSet, LiftedProblem, QuboInstance, Sense};

use super::certificate::{certify, sign_of, Row, RowSign};
use super::psd::split_psd;
use super::{Budget, Diagnostics, RelaxationQuery, RelaxationResult, RowSpec, Status};

#[derive(Debug, Clone, PartialEq)]
pub struct DnnConfig {
    pub master: Budget,
    pub probe: Budget,
    /// Sweeps between certificate evaluations.
    pub check_every: usize,
    pub initial_mu: f64,
}

impl Default for DnnConfig {
    fn default() -> Self {
        Self {
            master: Budget::default(),
            probe: Budget::default(),
            check_every: 100,
            initial_mu: 1.0,
        }
    }
}

/// Iterate saved after a solve, used to start related solves.
#[derive(Debug, Clone)]
pub struct WarmStart {
    x: DMatrix<f64>,
    s: DMatrix<f64>,
    z: DMatrix<f64>,
    y: DVector<f64>,
    slack: Vec<f64>,
    t: Vec<f64>,
    mu: f64,
    specs: Vec<RowSpec>,
}

impl WarmStart {
    pub fn primal(&self) -> &DMatrix<f64> {
        &self.x
    }
}

/// Factorized constraint system for a fixed lifted problem and list of cut
/// sets. Solves differ only in the per-set direction and right-hand side.
pub struct DnnSession {
    config: DnnConfig,
    ell: usize,
    tau: f64,
    q: DMatrix<f64>,
    c: DMatrix<f64>,
    c_norm: f64,
    scale: f64,
    rows: Vec<Row>,
    n_eq: usize,
    m: usize,
    chol: Cholesky<f64, Dyn>,
}

impl DnnSession {
    pub fn new(inst: &QuboInstance, sets: &[CutSet], config: DnnConfig) -> Result<Self> {
        Self::from_lifted(&lift_qubo(inst), sets, config)
    }

    pub fn from_lifted(lifted: &LiftedProblem, sets: &[CutSet], config: DnnConfig) -> Result<Self> {
        let ell = lifted.ell;
        let max_coord = ell - 1;
        let mut rows: Vec<Row> = lifted.equalities.iter().map(Row::from_equality).collect();
        let n_eq = rows.len();
        for set in sets {
            if set.coords()[0] == 0 || set.max_coord() > max_coord {
                let bad = if set.coords()[0] == 0 { 0 } else { set.max_coord() };
                return Err(Error::CoordinateOutOfRange { index: bad, max: max_coord });
            }
            rows.push(Row {
                entries: set.coords().iter().map(|&i| (i, i, 1.0)).collect(),
                rhs: 0.0,
                sign: RowSign::NonNegative,
            });
        }

        let q = DMatrix::from_fn(ell, ell, |i, j| lifted.q(i, j) as f64);
        let scale = q.amax().max(1.0);
        let c = &q / scale;
        let c_norm = c.norm();

        let gram = gram_matrix(&rows, n_eq);
        let chol = Cholesky::new(gram).ok_or_else(|| Error::Config("constraint system is singular".into()))?;

        Ok(Self {
            config,
            ell,
            tau: lifted.trace_bound(),
            q,
            c,
            c_norm,
            scale,
            rows,
            n_eq,
            m: lifted.m,
            chol,
        })
    }

    pub fn config(&self) -> &DnnConfig {
        &self.config
    }

    fn rows_for(&self, specs: &[RowSpec]) -> Vec<Row> {
        let mut rows = self.rows.clone();
        for (row, spec) in rows[self.n_eq..].iter_mut().zip(specs) {
            row.rhs = spec.rhs as f64;
            row.sign = sign_of(spec.sense);
        }
        rows
    }

    /// Certified bound for the rows in `specs` (one per prepared set).
    pub fn solve(
        &self,
        specs: &[RowSpec],
        warm: Option<&WarmStart>,
        budget: Budget,
    ) -> Result<(RelaxationResult, WarmStart)> {
        assert_eq!(specs.len(), self.rows.len() - self.n_eq, "one spec per prepared set");
        let rows = self.rows_for(specs);
        let n = rows.len();
        let ell = self.ell;
        let b: Vec<f64> = rows.iter().map(|r| r.rhs).collect();
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        // Slack coefficient: A(X) - s = b for `≥`, A(X) + s = b for `≤`.
        let bsign: Vec<f64> = specs
            .iter()
            .map(|s| match s.sense {
                Sense::AtLeast => -1.0,
                Sense::AtMost => 1.0,
            })
            .collect();

        let mut state = match warm {
            Some(w) => self.adapt_warm(w, specs, &rows, &bsign),
            None => WarmStart {
                x: DMatrix::zeros(ell, ell),
                s: DMatrix::zeros(ell, ell),
                z: DMatrix::zeros(ell, ell),
                y: DVector::zeros(n),
                slack: vec![0.0; specs.len()],
                t: vec![0.0; specs.len()],
                mu: self.config.initial_mu,
                specs: specs.to_vec(),
            },
        };

        let mut best = f64::NEG_INFINITY;
        let mut diag = Diagnostics::default();
        let mut converged = false;
        let check_every = self.config.check_every.max(1);

        for sweep in 1..=budget.max_sweeps.max(1) {
            let WarmStart { x, s, z, y, slack, t, mu, .. } = &mut state;
            let mu_now = *mu;

            // y-step: (AA* + BBᵀ) y = μ(b - A(X) - Bs) - A(S + Z - C) - Bt
            let szc = &*s + &*z - &self.c;
            let mut rhs = DVector::zeros(n);
            for (r, row) in rows.iter().enumerate() {
                let mut v = mu_now * (b[r] - row.apply(x)) - row.apply(&szc);
                if r >= self.n_eq {
                    let k = r - self.n_eq;
                    v -= bsign[k] * (mu_now * slack[k] + t[k]);
                }
                rhs[r] = v;
            }
            self.chol.solve_mut(&mut rhs);
            *y = rhs;

            let mut aty = DMatrix::zeros(ell, ell);
            for (row, &v) in rows.iter().zip(y.iter()) {
                row.add_scaled(&mut aty, v);
            }

            // Z-step, then S-step on what is left.
            let base = &self.c - &aty - &*x * mu_now;
            *z = (&base - &*s).map(|v| v.max(0.0));
            let w = &base - &*z;
            let (pos, neg) = split_psd(&w)?;
            *s = pos;
            *x = neg / mu_now;

            for k in 0..slack.len() {
                let wk = -bsign[k] * y[self.n_eq + k] - mu_now * slack[k];
                t[k] = wk.max(0.0);
                slack[k] = (-wk).max(0.0) / mu_now;
            }

            let mut primal_sq = 0.0;
            for (r, row) in rows.iter().enumerate() {
                let mut v = row.apply(x) - b[r];
                if r >= self.n_eq {
                    v += bsign[r - self.n_eq] * slack[r - self.n_eq];
                }
                primal_sq += v * v;
            }
            let primal = primal_sq.sqrt() / (1.0 + b_norm);
            let mut dual_sq = (&aty + &*s + &*z - &self.c).norm_squared();
            for k in 0..slack.len() {
                let v = bsign[k] * y[self.n_eq + k] + t[k];
                dual_sq += v * v;
            }
            let dual = dual_sq.sqrt() / (1.0 + self.c_norm);
            diag = Diagnostics { iterations: sweep, primal_residual: primal, dual_residual: dual };

            converged = primal <= budget.tol && dual <= budget.tol;
            let last = converged || sweep == budget.max_sweeps.max(1);
            if sweep % check_every == 0 || last {
                best = best.max(self.certificate(&rows, y, z)?);
            }
            if last {
                break;
            }

            if sweep % 10 == 0 {
                if primal > 5.0 * dual {
                    *mu = (mu_now * 1.5).min(1e4);
                } else if dual > 5.0 * primal {
                    *mu = (mu_now / 1.5).max(1e-4);
                }
            }
        }

        state.specs = specs.to_vec();
        let result = RelaxationResult {
            lower_bound: best,
            xbar: Some(extract_xbar(&state.x, self.m)),
            status: if converged { Status::CertifiedBound } else { Status::BudgetExhausted },
            diagnostics: diag,
        };
        Ok((result, state))
    }

    fn adapt_warm(&self, warm: &WarmStart, specs: &[RowSpec], rows: &[Row], bsign: &[f64]) -> WarmStart {
        let mut state = warm.clone();
        if state.y.len() != rows.len() {
            state.y = DVector::zeros(rows.len());
            state.slack = vec![0.0; specs.len()];
            state.t = vec![0.0; specs.len()];
            state.specs = specs.to_vec();
        }
        for (k, spec) in specs.iter().enumerate() {
            let prev = state.specs.get(k).copied();
            if prev == Some(*spec) {
                continue;
            }
            let r = self.n_eq + k;
            if prev.map(|p| p.sense) != Some(spec.sense) {
                state.y[r] = 0.0;
                state.t[k] = 0.0;
            }
            state.slack[k] = (bsign[k] * (rows[r].rhs - rows[r].apply(&state.x))).max(0.0);
        }
        state
    }

    /// Certified bound from the scaled iterate. Signs are clamped and the
    /// multipliers shifted along the identity (which equals
    /// `E00 + Σ L_j + Σ R_i` with right-hand side `τ`) so that the slack
    /// matrix has smallest eigenvalue near zero.
    fn certificate(&self, rows: &[Row], y: &DVector<f64>, z: &DMatrix<f64>) -> Result<f64> {
        let mut yy: Vec<f64> = y
            .iter()
            .zip(rows)
            .map(|(&v, row)| {
                let v = v * self.scale;
                match row.sign {
                    RowSign::Free => v,
                    RowSign::NonNegative => v.max(0.0),
                    RowSign::NonPositive => v.min(0.0),
                }
            })
            .collect();
        let zz = z.map(|v| (v * self.scale).max(0.0));

        let mut slack = self.q.clone();
        for (row, &v) in rows.iter().zip(&yy) {
            row.add_scaled(&mut slack, -v);
        }
        slack -= &zz;
        let lambda = super::psd::min_eigenvalue(&slack)?;
        if lambda.is_finite() {
            for r in identity_rows(self.m) {
                yy[r] += lambda;
            }
        }
        certify(&self.q, rows, &yy, Some(&zz), self.tau)
    }
}

/// Indices of `E00`, every `L_j` and every `R_i` in the lifted equality list.
fn identity_rows(m: usize) -> impl Iterator<Item = usize> {
    0..=3 * m
}

/// `AA* + BBᵀ` where `B` puts a unit slack on every cut row.
fn gram_matrix(rows: &[Row], n_eq: usize) -> DMatrix<f64> {
    let n = rows.len();
    let mut by_entry: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (r, row) in rows.iter().enumerate() {
        for &(i, j, w) in &row.entries {
            by_entry.entry((i, j)).or_default().push((r, w));
        }
    }
    let mut gram = DMatrix::zeros(n, n);
    for ((i, j), list) in &by_entry {
        let factor = if i == j { 1.0 } else { 0.5 };
        for &(r, wr) in list {
            for &(s, ws) in list {
                gram[(r, s)] += factor * wr * ws;
            }
        }
    }
    for r in n_eq..n {
        gram[(r, r)] += 1.0;
    }
    gram
}

/// `x̄_i = clamp(X_ii, 0, 1)` for `i = 1..2m`.
pub fn extract_xbar(x: &DMatrix<f64>, m: usize) -> Vec<f64> {
    (1..=2 * m).map(|i| x[(i, i)].clamp(0.0, 1.0)).collect()
}

/// Certified bound for a single query.
pub fn solve_dnn(query: &RelaxationQuery<'_>, config: &DnnConfig) -> Result<RelaxationResult> {
    let sets: Vec<CutSet> = query.cuts.iter().map(|c| c.set.clone()).collect();
    let specs: Vec<RowSpec> = query.cuts.iter().map(|c| RowSpec { rhs: c.rhs, sense: c.sense }).collect();
    let session = DnnSession::from_lifted(query.lifted, &sets, config.clone())?;
    Ok(session.solve(&specs, None, query.budget)?.0)
}
