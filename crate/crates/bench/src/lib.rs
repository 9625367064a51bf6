//! Fixtures shared by the benchmarks.

use valagg_core::{make_counterexample, CostAggregate, CounterexampleSpec, ParameterPoint};

/// Aggregate of `n` counterexample costs frozen along the contracting
/// sequence `x_k = k^{-1/2}`.
pub fn counterexample_aggregate(theta: f64, n: usize) -> CostAggregate {
    let inst = make_counterexample(&CounterexampleSpec::new(theta));
    CostAggregate::from_costs((1..=n).map(|k| {
        inst.freeze_cost(&ParameterPoint::scalar((k as f64).powf(-0.5)))
            .expect("scalar anchor")
    }))
    .expect("counterexample costs are strongly convex")
}

/// Scalar iterate sequence `k^{-1/2}`.
pub fn decaying_iterates(n: usize) -> Vec<ParameterPoint> {
    (1..=n)
        .map(|k| ParameterPoint::scalar((k as f64).powf(-0.5)))
        .collect()
}
