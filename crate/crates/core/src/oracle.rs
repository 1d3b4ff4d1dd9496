//! Brute-force ground truth for small instances.

use crate::error::{Error, Result};
use crate::model::QuboInstance;

pub const ORACLE_LIMIT: usize = 24;

/// Minimum of `uᵀRu + constant` and every minimizer, by direct evaluation of
/// all `2^m` points.
pub fn brute_force_optimum(inst: &QuboInstance) -> Result<(i64, Vec<Vec<bool>>)> {
    let m = inst.m();
    if m > ORACLE_LIMIT {
        return Err(Error::EnumerationLimitExceeded { vars: m, limit: ORACLE_LIMIT });
    }
    let mut best = i64::MAX;
    let mut set = Vec::new();
    let mut u = vec![false; m];
    for mask in 0u64..1 << m {
        for (i, b) in u.iter_mut().enumerate() {
            *b = mask >> i & 1 == 1;
        }
        let value = inst.evaluate(&u);
        if value < best {
            best = value;
            set.clear();
        }
        if value == best {
            set.push(u.clone());
        }
    }
    Ok((best, set))
}

/// The optimum value only.
pub fn brute_force_value(inst: &QuboInstance) -> Result<i64> {
    brute_force_optimum(inst).map(|(z, _)| z)
}
