//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export takes the instance as BiqMac text and answers with JSON. The
//! `*_json` functions hold the logic and run natively in tests.

use scit_core::cuts::{generate_initial_family, SplitRule};
use scit_core::engine::{run, EngineConfig};
use scit_core::model::{lift_qubo, QuboInstance};
use scit_core::oracle::{brute_force_value, ORACLE_LIMIT};
use scit_core::relax::{solve_dnn, solve_exact, Backend, Budget, DnnConfig, ExactConfig, RelaxationQuery};
use scit_core::report::to_json;
use scit_core::biqmac;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest instance the page accepts; the dnn backend is slow beyond this.
pub const MAX_M: usize = 40;

fn parse(text: &str) -> Result<QuboInstance, String> {
    let inst = biqmac::parse(text).map_err(|e| e.to_string())?;
    if inst.m() > MAX_M {
        return Err(format!("instance has {} variables, the demo allows {MAX_M}", inst.m()));
    }
    Ok(inst)
}

fn backend(name: &str, sweeps: usize) -> Result<Backend, String> {
    match name {
        "exact" => Ok(Backend::Exact(ExactConfig::default())),
        "dnn" => {
            let budget = Budget { max_sweeps: sweeps.max(1), ..Budget::default() };
            Ok(Backend::Dnn(DnnConfig { master: budget, probe: budget, ..DnnConfig::default() }))
        }
        other => Err(format!("unknown backend `{other}`")),
    }
}

/// Runs the cutting loop and returns the report. A missing `eta` is replaced
/// by the enumerated optimum.
pub fn run_json(
    text: &str,
    eta: Option<i64>,
    backend_name: &str,
    max_iter: usize,
    seed: u64,
    sweeps: usize,
) -> Result<String, String> {
    let inst = parse(text)?;
    let eta = match eta {
        Some(eta) => eta,
        None if inst.m() <= ORACLE_LIMIT => brute_force_value(&inst).map_err(|e| e.to_string())?,
        None => return Err(format!("eta is required above {ORACLE_LIMIT} variables")),
    };
    let mut config = EngineConfig::new(eta);
    config.max_iterations = max_iter;
    config.seed = seed;
    config.backend = backend(backend_name, sweeps)?;
    let mut report = run(&inst, &config).map_err(|e| e.to_string())?;
    report.instance = "browser".into();
    Ok(to_json(&report))
}

#[derive(Serialize)]
struct FamilyListing {
    m: usize,
    sets: Vec<Vec<usize>>,
}

/// Lists the starting cut sets for `m` variables.
pub fn family_json(m: usize, split: &str, seed: u64) -> Result<String, String> {
    if m > 4096 {
        return Err("m is limited to 4096".into());
    }
    let rule: SplitRule = split.parse().map_err(|e: scit_core::Error| e.to_string())?;
    let sets = generate_initial_family(m, rule, seed).into_iter().map(|s| s.coords().to_vec()).collect();
    serde_json::to_string(&FamilyListing { m, sets }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BoundComparison {
    m: usize,
    oracle: Option<i64>,
    exact: Option<f64>,
    dnn: f64,
    dnn_sweeps: usize,
    primal_residual: f64,
    dual_residual: f64,
}

/// Root bounds of both backends next to the enumerated optimum.
pub fn compare_json(text: &str, sweeps: usize) -> Result<String, String> {
    let inst = parse(text)?;
    let small = inst.m() <= ORACLE_LIMIT;
    let oracle = if small { Some(brute_force_value(&inst).map_err(|e| e.to_string())?) } else { None };
    let exact = if small {
        Some(solve_exact(&inst, &[], &ExactConfig::default()).map_err(|e| e.to_string())?.lower_bound)
    } else {
        None
    };
    let lifted = lift_qubo(&inst);
    let budget = Budget { max_sweeps: sweeps.max(1), ..Budget::default() };
    let mut query = RelaxationQuery::new(&lifted, Vec::new());
    query.budget = budget;
    let dnn = solve_dnn(&query, &DnnConfig::default()).map_err(|e| e.to_string())?;
    let out = BoundComparison {
        m: inst.m(),
        oracle,
        exact,
        dnn: dnn.lower_bound,
        dnn_sweeps: dnn.diagnostics.iterations,
        primal_residual: dnn.diagnostics.primal_residual,
        dual_residual: dnn.diagnostics.dual_residual,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

fn integral(eta: Option<f64>) -> Result<Option<i64>, JsError> {
    match eta {
        Some(v) if v.fract() != 0.0 || !v.is_finite() => Err(JsError::new("eta must be an integer")),
        Some(v) => Ok(Some(v as i64)),
        None => Ok(None),
    }
}

#[wasm_bindgen]
pub fn run_scit(
    text: &str,
    eta: Option<f64>,
    backend: &str,
    max_iter: usize,
    seed: u32,
    sweeps: usize,
) -> Result<String, JsError> {
    js(run_json(text, integral(eta)?, backend, max_iter, seed as u64, sweeps))
}

#[wasm_bindgen]
pub fn initial_family(m: usize, split: &str, seed: u32) -> Result<String, JsError> {
    js(family_json(m, split, seed as u64))
}

#[wasm_bindgen]
pub fn compare_bounds(text: &str, sweeps: usize) -> Result<String, JsError> {
    js(compare_json(text, sweeps))
}
