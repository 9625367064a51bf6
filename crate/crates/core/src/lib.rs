//! Value aggregation as follow-the-leader over frozen per-round costs, with
//! machinery to check last-iterate convergence bounds along executed runs.
//!
//! A problem is a two-argument objective `F(y, x)`: `y` fixes the state
//! distribution and `x` is the policy being scored. Each round freezes
//! `f_n = F(x_n, ·)` and plays `x_{n+1} = argmin f_{1:n}`. Whether the
//! iterates converge is governed by `θ = β/α`, where `α` is the strong
//! convexity of `F` in `x` and `β` the Lipschitz modulus of `∇₂F` in `y`.
//!
//! ```
//! use valagg_core::{make_counterexample, run_deterministic, CounterexampleSpec, LoopConfig};
//!
//! let inst = make_counterexample(&CounterexampleSpec::new(10.0));
//! let trace = run_deterministic(&inst, &LoopConfig::deterministic(4, 1.0)).unwrap();
//! let xs: Vec<f64> = trace.iterates.iter().map(|p| p.coords()[0]).collect();
//! assert_eq!(xs, [1.0, 10.0, 55.0, 220.0]);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod diagnostics;
pub mod error;
pub mod ftl;
pub mod instances;
pub mod problem;
pub mod trace_io;
pub mod verify;

pub use aggregation::{
    apply_transformer, run_deterministic, run_loop, run_stochastic, select_best, CostTransformer,
    LoopConfig, Regularizer, RunTrace, SamplingSchedule, TransformSummary, Variant,
};
pub use diagnostics::{
    check_bounds, compute_s, compute_s_windowed, fit_rate, BoundCheckRecord, BoundId, RateFit,
};
pub use error::{Error, Result};
pub use ftl::{ftl_step, regret, CostAggregate, SolveMethod, SolveReport, SolverOptions};
pub use instances::{
    make_affine_quadratic, make_counterexample, make_linear_imitation, sample_cost, with_noise,
    AffineQuadraticSpec, CounterexampleSpec, LinearImitationSpec, NoiseKind, NoiseModel,
};
pub use problem::{
    measure_constants, Domain, NormKind, Objective, ParameterPoint, PerRoundCost, ProblemInstance,
    StructuralConstants,
};
