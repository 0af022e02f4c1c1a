//! Fixtures shared by the solver benchmarks.

use std::collections::BTreeMap;

use aderdg_core::problems::{get_problem, ProblemSpec};
use aderdg_core::TimeMesh;

/// A built-in problem with default parameters.
pub fn problem(name: &str) -> ProblemSpec<f64> {
    get_problem(name, &BTreeMap::new()).expect("built-in problem")
}

/// Flame problem at `delta` on a graded mesh whose fine part straddles the front.
pub fn flame_front(delta: f64, fine: usize) -> (ProblemSpec<f64>, TimeMesh<f64>) {
    let mut params = BTreeMap::new();
    params.insert("delta".to_string(), delta);
    let spec = get_problem("flame", &params).expect("flame problem");
    let (a, b, end) = (0.8 / delta, 1.2 / delta, 2.0 / delta);
    let mesh = TimeMesh::graded(&[(10, 0.0, a), (fine, a, b), (10, b, end)]).expect("graded mesh");
    (spec, mesh)
}
