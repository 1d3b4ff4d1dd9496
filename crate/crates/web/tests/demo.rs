use scit_core::report::from_json;
use scit_core::report::RunStatus;
use scit_web::{compare_json, family_json, run_json, MAX_M};
use serde_json::Value;

// Maximization form of R = [[1, -3], [-3, 1]] with a third idle variable;
// the minimum is -4.
const SMALL: &str = "3 4\n1 1 -1\n1 2 3\n2 2 -1\n3 3 -2\n";

#[test]
fn run_closes_at_optimum() {
    let report = from_json(&run_json(SMALL, None, "exact", 5, 0, 200).unwrap()).unwrap();
    assert_eq!(report.status, RunStatus::Closed);
    assert_eq!(report.eta, -4);
    assert_eq!(report.instance, "browser");
}

#[test]
fn run_with_dnn_is_sound() {
    let report = from_json(&run_json(SMALL, Some(-4), "dnn", 3, 1, 300).unwrap()).unwrap();
    assert_ne!(report.status, RunStatus::Contradiction);
    assert!(report.records.iter().all(|r| r.zeta_hat_k <= -4));
}

#[test]
fn run_rejects_bad_input() {
    assert!(run_json("2 1\n1 3 1\n", Some(0), "exact", 1, 0, 10).is_err());
    assert!(run_json(SMALL, Some(0), "simplex", 1, 0, 10).is_err());
    let big = format!("{} 0\n", MAX_M + 1);
    assert!(run_json(&big, Some(0), "exact", 1, 0, 10).unwrap_err().contains("allows"));
}

#[test]
fn family_listing_for_four() {
    let v: Value = serde_json::from_str(&family_json(4, "interleave", 0).unwrap()).unwrap();
    assert_eq!(v["m"], 4);
    let sets: Vec<Vec<usize>> = serde_json::from_value(v["sets"].clone()).unwrap();
    assert_eq!(sets.len(), 14);
    assert_eq!(sets[0], vec![1, 2, 3, 4]);
    assert!(sets.contains(&vec![5, 6, 7, 8]));
    assert!(family_json(4, "bogus", 0).is_err());
}

#[test]
fn family_is_seed_stable() {
    assert_eq!(family_json(9, "random", 3).unwrap(), family_json(9, "random", 3).unwrap());
}

#[test]
fn comparison_orders_bounds() {
    let v: Value = serde_json::from_str(&compare_json(SMALL, 500).unwrap()).unwrap();
    assert_eq!(v["oracle"], -4);
    let exact = v["exact"].as_f64().unwrap();
    let dnn = v["dnn"].as_f64().unwrap();
    assert_eq!(exact, -4.0);
    assert!(dnn <= exact + 1e-9, "dnn {dnn} above exact {exact}");
}
