//! Exact minimum of the binary subproblem by Gray-code enumeration.

use crate::error::{Error, Result};
use crate::model::{CutSet, LinearCut, QuboInstance, Sense, SlackSpace};

use super::{Diagnostics, RelaxationResult, RowSpec, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactConfig {
    /// Largest variable count that will be enumerated.
    pub limit: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { limit: 24 }
    }
}

/// Bit masks of a cut set over the `u` and `v` blocks.
#[derive(Debug, Clone, Copy)]
struct Masks {
    u: u64,
    v: u64,
}

#[derive(Debug, Clone)]
pub struct ExactSession {
    inst: QuboInstance,
    masks: Vec<Masks>,
}

impl ExactSession {
    pub fn new(inst: &QuboInstance, sets: &[CutSet], config: &ExactConfig) -> Result<Self> {
        let m = inst.m();
        if m > config.limit || m > 63 {
            return Err(Error::EnumerationLimitExceeded { vars: m, limit: config.limit.min(63) });
        }
        let space = SlackSpace::new(m);
        let masks = sets
            .iter()
            .map(|set| {
                let mut masks = Masks { u: 0, v: 0 };
                for &c in set.coords() {
                    if c == 0 || c > space.dim() {
                        return Err(Error::CoordinateOutOfRange { index: c, max: space.dim() });
                    }
                    let bit = 1u64 << (space.variable(c) - 1);
                    if space.is_u(c) {
                        masks.u |= bit;
                    } else {
                        masks.v |= bit;
                    }
                }
                Ok(masks)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { inst: inst.clone(), masks })
    }

    /// Minimum over binary `u` whose slack point satisfies every row.
    pub fn solve(&self, rows: &[RowSpec]) -> RelaxationResult {
        assert_eq!(rows.len(), self.masks.len());
        let inst = &self.inst;
        let m = inst.m();
        let full = if m == 0 { 0 } else { u64::MAX >> (64 - m) };

        let feasible = |u: u64| {
            self.masks.iter().zip(rows).all(|(mk, row)| {
                let count = (u & mk.u).count_ones() as i64 + (!u & full & mk.v).count_ones() as i64;
                match row.sense {
                    Sense::AtLeast => count >= row.rhs,
                    Sense::AtMost => count <= row.rhs,
                }
            })
        };

        // h[p] = sum_{j != p} R_pj u_j, maintained across Gray-code flips.
        let mut h = vec![0i64; m];
        let mut u = 0u64;
        let mut value = inst.constant();
        let mut best: Option<(i64, u64)> = None;
        let total = 1u64 << m;
        for step in 0..total {
            if step > 0 {
                let p = step.trailing_zeros() as usize;
                let delta = inst.r(p, p) + 2 * h[p];
                let on = u & (1 << p) == 0;
                if on {
                    value += delta;
                } else {
                    value -= delta;
                }
                u ^= 1 << p;
                for (j, hj) in h.iter_mut().enumerate() {
                    if j != p {
                        if on {
                            *hj += inst.r(j, p);
                        } else {
                            *hj -= inst.r(j, p);
                        }
                    }
                }
            }
            if best.is_some_and(|(b, _)| value >= b) {
                continue;
            }
            if feasible(u) {
                best = Some((value, u));
            }
        }

        match best {
            None => RelaxationResult::infeasible(),
            Some((value, u)) => {
                let bits: Vec<bool> = (0..m).map(|p| u >> p & 1 == 1).collect();
                let x = SlackSpace::new(m).point(&bits);
                RelaxationResult {
                    lower_bound: value as f64,
                    xbar: Some(x.into_iter().map(f64::from).collect()),
                    status: Status::CertifiedBound,
                    diagnostics: Diagnostics { iterations: total as usize, ..Default::default() },
                }
            }
        }
    }
}

/// Exact minimum of `u^T R u + constant` over slack points satisfying `cuts`.
pub fn solve_exact(inst: &QuboInstance, cuts: &[LinearCut], config: &ExactConfig) -> Result<RelaxationResult> {
    let sets: Vec<CutSet> = cuts.iter().map(|c| c.set.clone()).collect();
    let rows: Vec<RowSpec> = cuts.iter().map(|c| RowSpec { rhs: c.rhs, sense: c.sense }).collect();
    Ok(ExactSession::new(inst, &sets, config)?.solve(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var() -> QuboInstance {
        QuboInstance::from_rows(&[vec![1, -3], vec![-3, 1]]).unwrap()
    }

    fn set(c: &[usize]) -> CutSet {
        CutSet::new(c.iter().copied()).unwrap()
    }

    #[test]
    fn unconstrained_minimum() {
        let res = solve_exact(&two_var(), &[], &ExactConfig::default()).unwrap();
        assert_eq!(res.lower_bound, -4.0);
        assert_eq!(res.xbar.unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn probe_on_u_block() {
        let cut = LinearCut::at_most(set(&[1, 2]), 1);
        let res = solve_exact(&two_var(), &[cut], &ExactConfig::default()).unwrap();
        assert_eq!(res.lower_bound, 0.0);
    }

    #[test]
    fn empty_region_is_infeasible() {
        let cut = LinearCut::at_most(set(&[1]), -1);
        let res = solve_exact(&two_var(), &[cut], &ExactConfig::default()).unwrap();
        assert_eq!(res.status, Status::Infeasible);
        assert_eq!(res.lower_bound, f64::INFINITY);
    }

    #[test]
    fn v_block_cut() {
        // x_3 = v_1 >= 1 forces u_1 = 0; best is then u_2 in {0,1} -> 0.
        let cut = LinearCut::at_least(set(&[3]), 1);
        let res = solve_exact(&two_var(), &[cut], &ExactConfig::default()).unwrap();
        assert_eq!(res.lower_bound, 0.0);
    }

    #[test]
    fn limit_enforced() {
        let inst = QuboInstance::zeros(5);
        let err = solve_exact(&inst, &[], &ExactConfig { limit: 4 }).unwrap_err();
        assert_eq!(err, Error::EnumerationLimitExceeded { vars: 5, limit: 4 });
    }

    #[test]
    fn zero_variables() {
        let inst = QuboInstance::new(0, vec![], 7).unwrap();
        let res = solve_exact(&inst, &[], &ExactConfig::default()).unwrap();
        assert_eq!(res.lower_bound, 7.0);
    }

    #[test]
    fn rejects_out_of_range_coordinate() {
        let cut = LinearCut::at_least(set(&[5]), 1);
        assert!(matches!(
            solve_exact(&two_var(), &[cut], &ExactConfig::default()),
            Err(Error::CoordinateOutOfRange { index: 5, .. })
        ));
    }
}
