//! The main loop: master relaxation, parallel probe validation, family
//! update, fixing and reduction.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cuts::{
    fix_and_prune, generate_initial_family, incumbent_cuts, init_triples, sample_additional_cuts, CutFamily,
    Gamma, SplitRule,
};
use crate::error::{Error, Result};
use crate::model::{reduce_problem, Assignment, CutSet, CutTriple, QuboInstance, Sense, SlackSpace};
use crate::relax::{validate_matrix_cut, Backend, ExactConfig, RelaxationResult, RowSpec, Session};
use crate::report::{Report, RunStatus};

/// Bounds within this distance below an integer are rounded up to it.
pub const CEIL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Upper bound on the optimum, typically the value of a known point.
    pub eta: i64,
    pub max_iterations: usize,
    pub gamma: Gamma,
    /// Bernoulli samples per block drawn from each master solution.
    pub q: usize,
    pub split: SplitRule,
    pub seed: u64,
    pub workers: usize,
    pub backend: Backend,
    /// Known feasible point `x̂ = (u, v)` whose support enters the family.
    pub incumbent: Option<Vec<u8>>,
    pub incumbent_subsets: usize,
    pub retire_stalled_after: Option<usize>,
    pub record_timings: bool,
}

impl EngineConfig {
    pub fn new(eta: i64) -> Self {
        Self {
            eta,
            max_iterations: 10,
            gamma: Gamma::default(),
            q: 10,
            split: SplitRule::SeededRandom,
            seed: 0,
            workers: 1,
            backend: Backend::Exact(ExactConfig::default()),
            incumbent: None,
            incumbent_subsets: 0,
            retire_stalled_after: None,
            record_timings: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Free variables at the start of the iteration.
    pub d_k: usize,
    /// Running maximum of the rounded-up master bounds.
    pub zeta_hat_k: i64,
    /// Raw certified bound of this iteration's master problem.
    pub master_bound: Option<f64>,
    pub cuts_validated: usize,
    pub vars_fixed_total: usize,
    pub family_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

/// Everything carried from one iteration to the next. Cut sets are stored in
/// the coordinates of the original instance.
#[derive(Debug, Clone)]
pub struct State {
    pub k: usize,
    pub original: QuboInstance,
    pub reduced: QuboInstance,
    pub fixes: Assignment,
    pub family: CutFamily,
    pub zeta_hat: Option<i64>,
    pub records: Vec<IterationRecord>,
}

impl State {
    pub fn new(inst: &QuboInstance, config: &EngineConfig) -> Result<Self> {
        let m = inst.m();
        let mut family = init_triples(generate_initial_family(m, config.split, config.seed), config.gamma);
        if let Some(xhat) = &config.incumbent {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(u64::MAX);
            if xhat.len() != 2 * m {
                return Err(Error::InfeasibleIncumbent(format!("expected {} coordinates, got {}", 2 * m, xhat.len())));
            }
            for set in incumbent_cuts(xhat, config.incumbent_subsets, &mut rng)? {
                family.insert(set);
            }
        }
        Ok(Self {
            k: 0,
            original: inst.clone(),
            reduced: inst.clone(),
            fixes: Assignment::new(),
            family,
            zeta_hat: None,
            records: Vec::new(),
        })
    }

    pub fn free_vars(&self) -> Vec<usize> {
        self.fixes.free_vars(self.original.m())
    }

    /// The relaxation queries of the next iteration.
    pub fn snapshot(&self) -> Snapshot {
        let map = CoordMap::new(self.original.m(), self.free_vars());
        let triples: Vec<CutTriple> = self.family.triples().collect();
        Snapshot {
            instance: self.reduced.clone(),
            sets: triples.iter().map(|t| map.to_reduced(&t.set)).collect(),
            master_rows: triples.iter().map(|t| RowSpec { rhs: t.alpha as i64, sense: Sense::AtLeast }).collect(),
            triples,
        }
    }
}

/// Queries of one iteration over the reduced instance. `sets[i]` is
/// `triples[i].set` in reduced coordinates.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub instance: QuboInstance,
    pub triples: Vec<CutTriple>,
    pub sets: Vec<CutSet>,
    /// `∑_{i∈I} x_i ≥ α` for every triple.
    pub master_rows: Vec<RowSpec>,
}

impl Snapshot {
    /// Master rows with triple `idx` flipped to `≤ α + β`.
    pub fn probe_rows(&self, idx: usize) -> Vec<RowSpec> {
        let mut rows = self.master_rows.clone();
        let t = &self.triples[idx];
        rows[idx] = RowSpec { rhs: (t.alpha + t.beta) as i64, sense: Sense::AtMost };
        rows
    }
}

/// True iff the `≤` side of the probe holds no point of value `≤ η`.
pub fn validate_cut(bound_a: f64, eta: i64) -> bool {
    validate_matrix_cut(bound_a, eta)
}

/// `⌈b − CEIL_TOL⌉` as an integer; `None` for `+∞`.
pub fn sharpen(bound: f64) -> Option<i64> {
    if bound == f64::INFINITY {
        None
    } else if bound == f64::NEG_INFINITY || bound.is_nan() {
        Some(i64::MIN)
    } else {
        Some((bound - CEIL_TOL).ceil() as i64)
    }
}

/// Maps original slack coordinates to positions in the reduced instance.
struct CoordMap {
    m: usize,
    /// `pos[v]` is the reduced index (0-based) of original variable `v`.
    pos: Vec<Option<usize>>,
    free: Vec<usize>,
}

impl CoordMap {
    fn new(m: usize, free: Vec<usize>) -> Self {
        let mut pos = vec![None; m + 1];
        for (p, &v) in free.iter().enumerate() {
            pos[v] = Some(p);
        }
        Self { m, pos, free }
    }

    fn to_reduced(&self, set: &CutSet) -> CutSet {
        let space = SlackSpace::new(self.m);
        let d = self.free.len();
        CutSet::new(set.coords().iter().map(|&c| {
            let p = self.pos[space.variable(c)].expect("family only holds free coordinates");
            if space.is_u(c) {
                p + 1
            } else {
                d + p + 1
            }
        }))
        .expect("nonempty")
    }

    /// Original coordinate of reduced coordinate `c`.
    fn to_original(&self, c: usize) -> usize {
        let d = self.free.len();
        if c <= d {
            self.free[c - 1]
        } else {
            self.m + self.free[c - d - 1]
        }
    }
}

/// Outcome of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    Closed,
}

/// Runs probes on the configured worker pool.
pub struct Workers {
    #[cfg(feature = "parallel")]
    pool: rayon::ThreadPool,
}

impl Workers {
    pub fn new(count: usize) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(count.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            Ok(Self { pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = count;
            Ok(Self {})
        }
    }

    /// `f(0..n)` collected in index order.
    fn map<T: Send>(&self, n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.pool.install(|| (0..n).into_par_iter().map(f).collect())
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n).map(f).collect()
        }
    }
}

/// One pass of master solve, probes and family update. Returns
/// [`Step::Closed`] once the rounded bound reaches `η`.
pub fn scit_iteration(state: &mut State, config: &EngineConfig, workers: &Workers) -> Result<Step> {
    let start = config.record_timings.then(Instant::now);
    let m = state.original.m();
    let snap = state.snapshot();
    let map = CoordMap::new(m, state.free_vars());
    let d_k = snap.instance.m();
    let triples = &snap.triples;
    let session: Session = config.backend.prepare(&snap.instance, &snap.sets)?;
    let master_rows = &snap.master_rows;
    let (master, warm): (RelaxationResult, _) = session.solve_master(master_rows)?;

    let Some(sharp) = sharpen(master.lower_bound) else {
        return Err(Error::Contradiction(format!(
            "master problem at k={} is infeasible, so no point attains eta={}",
            state.k, config.eta
        )));
    };
    let zeta_hat = state.zeta_hat.map_or(sharp, |z| z.max(sharp));
    if zeta_hat > config.eta {
        return Err(Error::Contradiction(format!(
            "certified bound {zeta_hat} exceeds eta={} at k={}",
            config.eta, state.k
        )));
    }
    state.zeta_hat = Some(zeta_hat);

    let probes = workers.map(triples.len(), |idx| session.solve_probe(&snap.probe_rows(idx), warm.as_ref()))?;

    let mut cuts_validated = 0;
    for (t, probe) in triples.iter().zip(&probes) {
        let ok = validate_cut(probe.lower_bound, config.eta);
        cuts_validated += ok as usize;
        state.family.apply_outcome(&t.set, ok, config.retire_stalled_after);
    }

    let (fixes, family) = fix_and_prune(&state.family, &state.fixes, m)?;
    state.fixes = fixes;
    state.family = family;
    state.reduced = reduce_problem(&state.original, &state.fixes);

    let space = SlackSpace::new(m);
    let keep_free = |c: &usize| state.fixes.coord_value(space, *c).is_none();
    let mut new_sets = Vec::new();
    if let Some(xbar) = &master.xbar {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(state.k as u64 + 1);
        for set in sample_additional_cuts(xbar, config.q, &mut rng) {
            let coords: Vec<usize> = set.coords().iter().map(|&c| map.to_original(c)).filter(keep_free).collect();
            new_sets.extend(CutSet::new(coords).ok());
        }
    }
    if let Some(xhat) = &config.incumbent {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
        rng.set_stream(state.k as u64 + 1);
        for set in incumbent_cuts(xhat, config.incumbent_subsets, &mut rng)? {
            let coords: Vec<usize> = set.coords().iter().copied().filter(keep_free).collect();
            new_sets.extend(CutSet::new(coords).ok());
        }
    }
    for set in new_sets {
        state.family.insert(set);
    }

    state.records.push(IterationRecord {
        k: state.k,
        d_k,
        zeta_hat_k: zeta_hat,
        master_bound: master.lower_bound.is_finite().then_some(master.lower_bound),
        cuts_validated,
        vars_fixed_total: state.fixes.len(),
        family_size: state.family.len(),
        wall_time: start.map(|s| s.elapsed().as_secs_f64()),
    });
    state.k += 1;
    Ok(if zeta_hat >= config.eta { Step::Closed } else { Step::Continue })
}

/// Iterates until the bound closes on `η` or the iteration cap is hit.
/// A contradiction stops the run and is reported in the status.
pub fn run(inst: &QuboInstance, config: &EngineConfig) -> Result<Report> {
    config.validate()?;
    let workers = Workers::new(config.workers)?;
    let mut state = State::new(inst, config)?;
    let mut status = RunStatus::NotClosed;
    let mut message = None;
    while state.k < config.max_iterations {
        match scit_iteration(&mut state, config, &workers) {
            Ok(Step::Closed) => {
                status = RunStatus::Closed;
                break;
            }
            Ok(Step::Continue) => {}
            Err(Error::Contradiction(msg)) => {
                status = RunStatus::Contradiction;
                message = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Report {
        instance: String::new(),
        m: inst.m(),
        eta: config.eta,
        backend: config.backend.name().to_string(),
        seed: config.seed,
        max_iterations: config.max_iterations,
        status,
        message,
        records: state.records,
        final_fixes: state.fixes,
        final_family: state.family,
        final_instance: state.reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var() -> QuboInstance {
        QuboInstance::from_rows(&[vec![1, -3], vec![-3, 1]]).unwrap()
    }

    fn exact_config(eta: i64) -> EngineConfig {
        EngineConfig { split: SplitRule::Interleave, ..EngineConfig::new(eta) }
    }

    #[test]
    fn validation_examples() {
        assert!(validate_cut(-7969.4, -7970));
        assert!(!validate_cut(-7970.0, -7970));
        assert!(validate_cut(f64::INFINITY, -7970));
    }

    #[test]
    fn sharpening() {
        assert_eq!(sharpen(-3.0000000001), Some(-3));
        assert_eq!(sharpen(-3.2), Some(-3));
        assert_eq!(sharpen(-3.00001), Some(-3));
        assert_eq!(sharpen(-3.0001), Some(-3));
        assert_eq!(sharpen(-3.9), Some(-3));
        assert_eq!(sharpen(4.0), Some(4));
        assert_eq!(sharpen(f64::INFINITY), None);
    }

    #[test]
    fn single_singleton_probe_fixes() {
        let config = EngineConfig { q: 0, ..exact_config(-4) };
        let mut state = State::new(&two_var(), &config).unwrap();
        state.family = CutFamily::new(Gamma::default());
        state.family.insert(CutSet::new([1]).unwrap());
        let workers = Workers::new(1).unwrap();
        scit_iteration(&mut state, &config, &workers).unwrap();
        assert_eq!(state.fixes.get(1), Some(true));
        assert_eq!(state.reduced, QuboInstance::new(1, vec![-5], 1).unwrap());
        assert_eq!(state.free_vars().len(), 1);
    }

    #[test]
    fn empty_family_changes_only_history() {
        let config = EngineConfig { q: 0, ..exact_config(-3) };
        let mut state = State::new(&two_var(), &config).unwrap();
        state.family = CutFamily::new(Gamma::default());
        let before = (state.reduced.clone(), state.fixes.clone());
        let workers = Workers::new(1).unwrap();
        assert_eq!(scit_iteration(&mut state, &config, &workers).unwrap(), Step::Continue);
        assert_eq!((state.reduced.clone(), state.fixes.clone()), before);
        assert!(state.family.is_empty());
        assert_eq!(state.k, 1);
        assert_eq!(state.records.len(), 1);
        assert_eq!(state.zeta_hat, Some(-4));
    }

    #[test]
    fn eta_below_optimum_is_contradiction() {
        let report = run(&two_var(), &exact_config(-5)).unwrap();
        assert_eq!(report.status, RunStatus::Contradiction);
        assert!(report.message.is_some());
    }

    #[test]
    fn failed_probe_halves_beta() {
        // Zero objective: every point is optimal, so no ≤ probe can exceed η.
        let inst = QuboInstance::zeros(2);
        let config = EngineConfig { q: 0, ..exact_config(0) };
        let mut state = State::new(&inst, &config).unwrap();
        state.family = CutFamily::new(Gamma::default());
        state.family.insert_triple(CutTriple { set: CutSet::new([1, 2]).unwrap(), alpha: 0, beta: 1 });
        scit_iteration(&mut state, &config, &Workers::new(1).unwrap()).unwrap();
        let t = state.family.get(&CutSet::new([1, 2]).unwrap()).unwrap();
        assert_eq!((t.alpha, t.beta), (0, 0));
    }

    #[test]
    fn one_variable_closes_immediately() {
        let inst = QuboInstance::from_rows(&[vec![-3]]).unwrap();
        let report = run(&inst, &exact_config(-3)).unwrap();
        assert_eq!(report.status, RunStatus::Closed);
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].zeta_hat_k, -3);
        assert_eq!(report.records[0].d_k, 1);
        assert_eq!(report.final_fixes.get(1), Some(true));
        assert_eq!(report.final_instance.m(), 0);
    }

    #[test]
    fn iteration_cap() {
        let inst = QuboInstance::from_rows(&[vec![1, -3, 2], vec![-3, 1, -4], vec![2, -4, 0]]).unwrap();
        let config = EngineConfig { max_iterations: 1, ..exact_config(100) };
        let report = run(&inst, &config).unwrap();
        assert_eq!(report.status, RunStatus::NotClosed);
        assert_eq!(report.records.len(), 1);
    }

    #[test]
    fn rejects_zero_iterations() {
        let config = EngineConfig { max_iterations: 0, ..exact_config(0) };
        assert!(matches!(run(&two_var(), &config), Err(Error::Config(_))));
    }
}
