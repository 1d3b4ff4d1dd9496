//! Prints the doubly nonnegative bound of a random instance next to its
//! exact optimum (when small enough) and the solver's residuals.
//!
//! `cargo run --release -p scit-core --example dnn_bound -- 12 2000 7`

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scit_core::model::QuboInstance;
use scit_core::relax::{solve_exact, Budget, DnnConfig, DnnSession, ExactConfig};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let m = *args.first().unwrap_or(&12) as usize;
    let sweeps = *args.get(1).unwrap_or(&2000) as usize;
    let seed = *args.get(2).unwrap_or(&1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = QuboInstance::zeros(m);
    for i in 0..m {
        for j in i..m {
            if i == j || rng.random_bool(0.5) {
                inst.set(i, j, rng.random_range(-10..=10));
            }
        }
    }

    let budget = Budget { max_sweeps: sweeps, tol: 1e-7 };
    let config = DnnConfig { master: budget, ..DnnConfig::default() };
    let session = DnnSession::new(&inst, &[], config).expect("session");
    let start = Instant::now();
    let (res, _) = session.solve(&[], None, budget).expect("solve");
    println!(
        "m={m} bound={:.4} sweeps={} primal={:.2e} dual={:.2e} status={:?} time={:.2}s",
        res.lower_bound,
        res.diagnostics.iterations,
        res.diagnostics.primal_residual,
        res.diagnostics.dual_residual,
        res.status,
        start.elapsed().as_secs_f64()
    );
    if m <= 20 {
        let exact = solve_exact(&inst, &[], &ExactConfig::default()).expect("exact");
        println!("exact={}", exact.lower_bound);
    }
}
