//! The aggregation loop: freeze the cost at the current iterate, play the
//! leader of all frozen costs, record. Deterministic and sampled variants,
//! plus the two cost transformers (mixing and weighted regularization).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::s_series;
use crate::error::{Error, Result};
use crate::ftl::{self, CostAggregate, SolverOptions};
use crate::instances::{sample_cost, NoiseModel};
use crate::problem::{
    norm, DeclaredConstants, Domain, Objective, ParameterPoint, ProblemInstance, Quadratic,
    StructuralConstants,
};

pub const DEFAULT_ABORT_MAGNITUDE: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Deterministic,
    Stochastic,
}

/// Round `n` draws `ceil(m0 · n^r)` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    pub m0: usize,
    pub r: f64,
    pub noise_seed: u64,
}

impl SamplingSchedule {
    pub fn new(m0: usize, r: f64, noise_seed: u64) -> Result<Self> {
        if m0 == 0 {
            return Err(Error::InvalidParameter {
                name: "m0",
                reason: "must be at least 1".into(),
            });
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: format!("must be nonnegative, got {r}"),
            });
        }
        Ok(Self { m0, r, noise_seed })
    }

    pub fn count(&self, n: usize) -> usize {
        let exact = self.m0 as f64 * (n as f64).powf(self.r);
        // Guard against `ceil` of values like 6.000000000000001.
        let rounded = exact.round();
        let c = if (exact - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            rounded
        } else {
            exact.ceil()
        };
        (c as usize).max(1)
    }

    /// Independent seed for round `n`.
    pub fn round_seed(&self, n: usize) -> u64 {
        splitmix64(self.noise_seed ^ splitmix64(n as u64))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    /// `R(x) = (modulus/2)‖x − center‖²`, nonnegative.
    Quadratic { center: Vec<f64>, modulus: f64 },
    /// `R(x) = F(x★, x)`, no sign guarantee.
    ExpertCost,
}

impl Regularizer {
    pub fn is_nonnegative(&self) -> bool {
        matches!(self, Regularizer::Quadratic { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostTransformer {
    Mixing {
        q: f64,
    },
    WeightedRegularization {
        lambda: f64,
        regularizer: Regularizer,
    },
}

impl CostTransformer {
    pub fn kind(&self) -> &'static str {
        match self {
            CostTransformer::Mixing { .. } => "mixing",
            CostTransformer::WeightedRegularization { .. } => "weighted_regularization",
        }
    }
}

/// Transformer parameters carried into a trace for the corollary checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub kind: String,
    pub q: f64,
    pub horizon: usize,
    pub lambda: f64,
    pub r_nonneg: bool,
    /// Bound `M` on `|F|` over the reference box, when the instance has one.
    pub value_bound: Option<f64>,
}

impl TransformSummary {
    fn identity(instance: &ProblemInstance) -> Self {
        Self {
            kind: "none".into(),
            q: 0.0,
            horizon: instance.objective().horizon(),
            lambda: 0.0,
            r_nonneg: true,
            value_bound: instance.objective().value_bound(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopConfig {
    pub iterations: usize,
    pub x1: ParameterPoint,
    pub variant: Variant,
    pub sampling: Option<SamplingSchedule>,
    pub transformer: Option<CostTransformer>,
    pub tol_inner: f64,
    pub abort_magnitude: f64,
    /// Decision set for the leader; unconstrained when `None`.
    pub domain: Option<Domain>,
}

impl LoopConfig {
    pub fn deterministic(iterations: usize, x1: impl Into<ParameterPoint>) -> Self {
        Self {
            iterations,
            x1: x1.into(),
            variant: Variant::Deterministic,
            sampling: None,
            transformer: None,
            tol_inner: ftl::DEFAULT_TOL_INNER,
            abort_magnitude: DEFAULT_ABORT_MAGNITUDE,
            domain: None,
        }
    }

    pub fn stochastic(
        iterations: usize,
        x1: impl Into<ParameterPoint>,
        sampling: SamplingSchedule,
    ) -> Self {
        Self {
            variant: Variant::Stochastic,
            sampling: Some(sampling),
            ..Self::deterministic(iterations, x1)
        }
    }

    pub fn with_transformer(mut self, transformer: CostTransformer) -> Self {
        self.transformer = Some(transformer);
        self
    }

    fn validate(&self, dimension: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "iterations",
                reason: "must be at least 1".into(),
            });
        }
        if self.x1.dimension() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: self.x1.dimension(),
            });
        }
        if !(self.tol_inner > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol_inner",
                reason: "must be positive".into(),
            });
        }
        if !(self.abort_magnitude > 0.0) {
            return Err(Error::InvalidParameter {
                name: "abort_magnitude",
                reason: "must be positive".into(),
            });
        }
        if self.variant == Variant::Stochastic && self.sampling.is_none() {
            return Err(Error::InvalidParameter {
                name: "sampling",
                reason: "stochastic runs need a sampling schedule".into(),
            });
        }
        if let Some(d) = &self.domain {
            if d.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: d.dimension(),
                });
            }
            d.check(&self.x1)?;
        }
        Ok(())
    }
}

/// Everything recorded along one run.
///
/// Per-iterate vectors have one entry per played iterate `x_1..x_n`.
/// `step_norms[k]` and `leader_values[k]` belong to the update that produced
/// `x_{k+2}`, so they are one shorter when the final update was not completed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub label: String,
    pub variant: Variant,
    pub iterates: Vec<ParameterPoint>,
    /// `x_{N+1}`, the leader after the last recorded round.
    pub next_iterate: Option<ParameterPoint>,
    /// `f_n(x_n)`, or `g_n(x_n)` for sampled runs.
    pub per_round_values: Vec<f64>,
    /// `F(x_n, x_n)` of the problem actually run (after transformation).
    pub objective_values: Vec<f64>,
    /// `F(x_n, x_n)` of the untransformed problem.
    pub self_values: Vec<f64>,
    /// `‖∇f_n(x_n)‖`.
    pub gradient_norms: Vec<f64>,
    /// `f_{1:n}(x_{n+1})`.
    pub leader_values: Vec<f64>,
    pub step_norms: Vec<f64>,
    /// `S_n` for `n = 2..`.
    pub s_values: Vec<f64>,
    pub sample_counts: Vec<usize>,
    /// One-based index of the best iterate by `self_values`.
    pub best_round: usize,
    pub aborted: Option<String>,
    pub effective_constants: StructuralConstants,
    pub base_constants: StructuralConstants,
    pub transform: TransformSummary,
    pub unconstrained: bool,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn final_self_value(&self) -> f64 {
        *self.self_values.last().expect("traces are never empty")
    }

    /// `x_1..x_N` followed by `x_{N+1}` when available.
    pub fn iterates_with_next(&self) -> Vec<ParameterPoint> {
        let mut all = self.iterates.clone();
        all.extend(self.next_iterate.clone());
        all
    }
}

/// `x_{n+1} = argmin f_{1:n}` with `f_n = F(x_n, ·)`.
pub fn run_deterministic(instance: &ProblemInstance, config: &LoopConfig) -> Result<RunTrace> {
    if config.variant != Variant::Deterministic {
        return Err(Error::InvalidParameter {
            name: "variant",
            reason: "run_deterministic needs the deterministic variant".into(),
        });
    }
    run(instance, config)
}

/// `x_{n+1} = argmin g_{1:n}` with `g_n` the average of `m_n` sampled costs.
pub fn run_stochastic(instance: &ProblemInstance, config: &LoopConfig) -> Result<RunTrace> {
    if config.variant != Variant::Stochastic {
        return Err(Error::InvalidParameter {
            name: "variant",
            reason: "run_stochastic needs the stochastic variant".into(),
        });
    }
    if instance.objective().noise().is_none() {
        return Err(Error::MissingCapability("sampler"));
    }
    run(instance, config)
}

/// Dispatch on `config.variant`.
pub fn run_loop(instance: &ProblemInstance, config: &LoopConfig) -> Result<RunTrace> {
    match config.variant {
        Variant::Deterministic => run_deterministic(instance, config),
        Variant::Stochastic => run_stochastic(instance, config),
    }
}

fn run(base: &ProblemInstance, config: &LoopConfig) -> Result<RunTrace> {
    config.validate(base.dimension())?;
    let base_constants = base.constants()?;
    let (instance, transform) = match &config.transformer {
        Some(t) => {
            let inst = apply_transformer(base, t)?;
            let summary = summarize(base, t);
            (inst, summary)
        }
        None => (base.clone(), TransformSummary::identity(base)),
    };
    let effective_constants = instance.constants()?;
    let domain = config
        .domain
        .clone()
        .unwrap_or_else(|| Domain::unbounded(base.dimension()));
    let options = SolverOptions {
        tol_inner: config.tol_inner,
        ..SolverOptions::default()
    };

    let n_max = config.iterations;
    let mut trace = RunTrace {
        label: instance.label(),
        variant: config.variant,
        iterates: Vec::with_capacity(n_max),
        next_iterate: None,
        per_round_values: Vec::with_capacity(n_max),
        objective_values: Vec::with_capacity(n_max),
        self_values: Vec::with_capacity(n_max),
        gradient_norms: Vec::with_capacity(n_max),
        leader_values: Vec::with_capacity(n_max),
        step_norms: Vec::with_capacity(n_max),
        s_values: Vec::new(),
        sample_counts: Vec::with_capacity(n_max),
        best_round: 1,
        aborted: None,
        effective_constants,
        base_constants,
        transform,
        unconstrained: domain.is_unconstrained(),
    };

    let mut aggregate = CostAggregate::new();
    let mut x = config.x1.clone();
    for n in 1..=n_max {
        let cost = match (config.variant, &config.sampling) {
            (Variant::Stochastic, Some(s)) => {
                sample_cost(&instance, &x, s.count(n), s.round_seed(n))?
            }
            _ => instance.freeze_cost(&x)?,
        };
        trace.per_round_values.push(cost.value(x.coords()));
        trace.gradient_norms.push(norm(&cost.gradient(x.coords())));
        trace.sample_counts.push(cost.sample_count());
        trace.objective_values.push(instance.self_value(&x)?);
        trace.self_values.push(base.self_value(&x)?);
        trace.iterates.push(x.clone());
        aggregate.push(cost)?;

        let report = match ftl::ftl_step_with(&aggregate, &domain, &x, &options) {
            Ok(r) => r,
            Err(Error::NonFiniteCost) | Err(Error::NonFinite { .. }) => {
                trace.aborted = Some(format!("non-finite leader after round {n}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let next = report.minimizer;
        if next.max_abs() > config.abort_magnitude {
            trace.aborted = Some(format!(
                "|x_{}| = {:e} exceeds abort magnitude {:e}",
                n + 1,
                next.max_abs(),
                config.abort_magnitude
            ));
            break;
        }
        trace.step_norms.push(next.distance(&x));
        trace.leader_values.push(report.value);
        x = next;
    }
    if trace.aborted.is_none() {
        trace.next_iterate = Some(x);
    }
    trace.s_values = s_series(&trace.iterates);
    trace.best_round = argmin_first(&trace.self_values);
    Ok(trace)
}

fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best + 1
}

/// `π̂_N`: one-based index of the smallest `F(x_n, x_n)` (earliest on ties).
pub fn select_best(trace: &RunTrace) -> Option<(usize, f64)> {
    if trace.self_values.is_empty() {
        return None;
    }
    let i = argmin_first(&trace.self_values);
    Some((i, trace.self_values[i - 1]))
}

fn summarize(base: &ProblemInstance, t: &CostTransformer) -> TransformSummary {
    let mut s = TransformSummary::identity(base);
    s.kind = t.kind().into();
    match t {
        CostTransformer::Mixing { q } => s.q = *q,
        CostTransformer::WeightedRegularization {
            lambda,
            regularizer,
        } => {
            s.lambda = *lambda;
            s.r_nonneg = regularizer.is_nonnegative();
        }
    }
    s
}

/// Replace `F` by its mixed or regularized counterpart with updated
/// declared constants.
pub fn apply_transformer(
    instance: &ProblemInstance,
    transformer: &CostTransformer,
) -> Result<ProblemInstance> {
    match transformer {
        CostTransformer::Mixing { q } => {
            if !(0.0..=1.0).contains(q) {
                return Err(Error::InvalidParameter {
                    name: "q",
                    reason: format!("must lie in [0, 1], got {q}"),
                });
            }
            instance
                .objective()
                .mixed(*q)
                .map(ProblemInstance::from_arc)
                .ok_or(Error::MissingCapability("mixing"))
        }
        CostTransformer::WeightedRegularization {
            lambda,
            regularizer,
        } => WeightedObjective::build(instance, *lambda, regularizer.clone())
            .map(ProblemInstance::new),
    }
}

/// `F̃(y, x) = F(y, x) + λ R(x)`.
#[derive(Debug, Clone)]
struct WeightedObjective {
    base: Arc<dyn Objective>,
    lambda: f64,
    regularizer: Regularizer,
    expert: Option<Vec<f64>>,
    reg_alpha: f64,
    reg_g2: f64,
    reg_smoothness: f64,
    reg_bound: Option<f64>,
    eps_tilde: f64,
}

impl WeightedObjective {
    fn build(instance: &ProblemInstance, lambda: f64, regularizer: Regularizer) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be nonnegative, got {lambda}"),
            });
        }
        let base = Arc::clone(instance.objective());
        let reference = base.reference_box();
        let base_constants = instance.constants()?;
        let (expert, reg_alpha, reg_g2, reg_smoothness, reg_bound) = match &regularizer {
            Regularizer::Quadratic { center, modulus } => {
                if center.len() != base.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: base.dimension(),
                        actual: center.len(),
                    });
                }
                if !(*modulus > 0.0 && modulus.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "modulus",
                        reason: "regularizer must be strongly convex".into(),
                    });
                }
                let reach = reference.max_norm() + norm(center);
                (
                    None,
                    *modulus,
                    modulus * reach,
                    *modulus,
                    Some(0.5 * modulus * reach * reach),
                )
            }
            Regularizer::ExpertCost => {
                let e = base.expert().ok_or(Error::MissingCapability("expert"))?;
                let smooth = base.smoothness(&e);
                (
                    Some(e),
                    base_constants.alpha,
                    base_constants.g2,
                    smooth,
                    base.value_bound(),
                )
            }
        };
        let mut w = Self {
            base,
            lambda,
            regularizer,
            expert,
            reg_alpha,
            reg_g2,
            reg_smoothness,
            reg_bound,
            eps_tilde: 0.0,
        };
        w.eps_tilde = w.local_error()?;
        Ok(w)
    }

    /// `max_y min_x F̃(y, x)` over the reference-box corners, which is exact
    /// when `min_x F̃(y, x)` is convex in `y`; seeded interior samples are
    /// added in high dimension where corners are not enumerated.
    fn local_error(&self) -> Result<f64> {
        let reference = self.base.reference_box().clone();
        let probes: Vec<Vec<f64>> = match reference.corners() {
            Some(c) => c,
            None => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
                (0..256).map(|_| reference.sample(&mut rng)).collect()
            }
        };
        let inst = ProblemInstance::new(self.clone());
        let unbounded = Domain::unbounded(reference.dimension());
        let mut worst = f64::NEG_INFINITY;
        for y in probes {
            let y = ParameterPoint::new(y)?;
            let agg = CostAggregate::from_costs([inst.freeze_cost(&y)?])?;
            let report = ftl::ftl_step(&agg, &unbounded, &y, ftl::DEFAULT_TOL_INNER)?;
            worst = worst.max(report.value);
        }
        Ok(worst)
    }

    fn reg_value(&self, x: &[f64]) -> f64 {
        match (&self.regularizer, &self.expert) {
            (Regularizer::Quadratic { center, modulus }, _) => {
                let d: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                0.5 * modulus * d
            }
            (Regularizer::ExpertCost, Some(e)) => self.base.value(e, x),
            (Regularizer::ExpertCost, None) => unreachable!("expert checked at construction"),
        }
    }

    fn reg_gradient(&self, x: &[f64]) -> Vec<f64> {
        match (&self.regularizer, &self.expert) {
            (Regularizer::Quadratic { center, modulus }, _) => x
                .iter()
                .zip(center)
                .map(|(a, c)| modulus * (a - c))
                .collect(),
            (Regularizer::ExpertCost, Some(e)) => self.base.grad2(e, x),
            (Regularizer::ExpertCost, None) => unreachable!("expert checked at construction"),
        }
    }

    fn reg_quadratic(&self) -> Option<Quadratic> {
        match (&self.regularizer, &self.expert) {
            (Regularizer::Quadratic { center, modulus }, _) => {
                Some(Quadratic::isotropic(*modulus, center, 0.0))
            }
            (Regularizer::ExpertCost, Some(e)) => self.base.quadratic_in_x(e),
            (Regularizer::ExpertCost, None) => None,
        }
    }
}

impl Objective for WeightedObjective {
    fn label(&self) -> String {
        let r = match self.regularizer {
            Regularizer::Quadratic { .. } => "quadratic",
            Regularizer::ExpertCost => "expert_cost",
        };
        format!("{} + {}*R[{}]", self.base.label(), self.lambda, r)
    }

    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    fn value(&self, y: &[f64], x: &[f64]) -> f64 {
        self.base.value(y, x) + self.lambda * self.reg_value(x)
    }

    fn grad2(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        let mut g = self.base.grad2(y, x);
        for (gi, ri) in g.iter_mut().zip(self.reg_gradient(x)) {
            *gi += self.lambda * ri;
        }
        g
    }

    fn quadratic_in_x(&self, y: &[f64]) -> Option<Quadratic> {
        let mut q = self.base.quadratic_in_x(y)?;
        q.add_assign(&self.reg_quadratic()?.scaled(self.lambda));
        Some(q)
    }

    fn smoothness(&self, y: &[f64]) -> f64 {
        self.base.smoothness(y) + self.lambda * self.reg_smoothness
    }

    fn declared(&self) -> DeclaredConstants {
        let d = self.base.declared();
        DeclaredConstants {
            alpha: d.alpha + self.lambda * self.reg_alpha,
            beta: d.beta,
            g2: d.g2.map(|g| g + self.lambda * self.reg_g2),
            eps_tilde: Some(self.eps_tilde),
        }
    }

    fn reference_box(&self) -> &Domain {
        self.base.reference_box()
    }

    fn expert(&self) -> Option<Vec<f64>> {
        self.base.expert()
    }

    fn horizon(&self) -> usize {
        self.base.horizon()
    }

    fn noise(&self) -> Option<&NoiseModel> {
        self.base.noise()
    }

    fn value_bound(&self) -> Option<f64> {
        Some(self.base.value_bound()? + self.lambda * self.reg_bound?)
    }

    fn performance(&self, x: &[f64]) -> Option<f64> {
        self.base.performance(x)
    }
}
