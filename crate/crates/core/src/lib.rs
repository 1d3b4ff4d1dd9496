//! Successive cutting inequalities for QUBOs.
//!
//! Starting from a family of candidate sets, each iteration solves a master
//! relaxation, then tries to certify `∑_{i∈I} x_i ≥ α + β + 1` for every
//! candidate by showing that the opposite side cannot hold a point of value
//! `≤ η`. Accepted cuts tighten the next master problem; cuts that reach full
//! strength fix variables and shrink the instance.
//!
//! ```
//! use scit_core::{engine, model::QuboInstance, report::RunStatus};
//!
//! let inst = QuboInstance::from_rows(&[vec![1, -3], vec![-3, 1]]).unwrap();
//! let report = engine::run(&inst, &engine::EngineConfig::new(-4)).unwrap();
//! assert_eq!(report.status, RunStatus::Closed);
//! ```

pub mod biqmac;
pub mod cuts;
pub mod engine;
pub mod error;
pub mod model;
pub mod oracle;
pub mod relax;
pub mod report;

pub use error::{Error, Result};
