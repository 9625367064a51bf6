//! Follow-the-leader: `x_{n+1} = argmin_{x ∈ X} f_{1:n}(x)`.
//!
//! Aggregates of quadratics are minimized in closed form from the running
//! sum of their canonical forms. Anything else (or a box that cuts off the
//! unconstrained minimizer) goes through fixed-step projected gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{distance, norm, Domain, ParameterPoint, PerRoundCost, Quadratic};

pub const DEFAULT_TOL_INNER: f64 = 1e-10;
pub const DEFAULT_MAX_INNER: usize = 200_000;

/// The running sum `f_{1:n}`.
#[derive(Debug, Clone, Default)]
pub struct CostAggregate {
    costs: Vec<PerRoundCost>,
    total_strong_convexity: f64,
    total_smoothness: f64,
    // Present while every member is quadratic.
    quadratic: Option<Quadratic>,
}

impl CostAggregate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_costs(costs: impl IntoIterator<Item = PerRoundCost>) -> Result<Self> {
        let mut agg = Self::new();
        for c in costs {
            agg.push(c)?;
        }
        Ok(agg)
    }

    pub fn push(&mut self, cost: PerRoundCost) -> Result<()> {
        let alpha = cost.strong_convexity();
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "strong_convexity",
                reason: format!("aggregate members must be strongly convex, got {alpha}"),
            });
        }
        if let Some(first) = self.costs.first() {
            if first.dimension() != cost.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: first.dimension(),
                    actual: cost.dimension(),
                });
            }
        }
        let q = cost.quadratic();
        self.quadratic = match (self.costs.is_empty(), self.quadratic.take(), q) {
            (true, _, Some(q)) => Some(q),
            (false, Some(mut acc), Some(q)) => {
                acc.add_assign(&q);
                Some(acc)
            }
            _ => None,
        };
        self.total_strong_convexity += alpha;
        self.total_smoothness += cost.smoothness();
        self.costs.push(cost);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn costs(&self) -> &[PerRoundCost] {
        &self.costs
    }

    pub fn total_strong_convexity(&self) -> f64 {
        self.total_strong_convexity
    }

    pub fn total_smoothness(&self) -> f64 {
        self.total_smoothness
    }

    pub fn quadratic(&self) -> Option<&Quadratic> {
        self.quadratic.as_ref()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.costs.iter().map(|c| c.value(x)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for c in &self.costs {
            for (gi, ci) in g.iter_mut().zip(c.gradient(x)) {
                *gi += ci;
            }
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedFormQuadratic,
    ProjectedGradient,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub minimizer: ParameterPoint,
    pub value: f64,
    pub inner_iterations: usize,
    /// Gradient norm (closed form) or projected-gradient residual.
    pub gradient_norm: f64,
    pub method: SolveMethod,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol_inner: f64,
    pub max_iterations: usize,
    /// Skip the closed form even when it is available.
    pub force_iterative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_inner: DEFAULT_TOL_INNER,
            max_iterations: DEFAULT_MAX_INNER,
            force_iterative: false,
        }
    }
}

/// One follow-the-leader update over `domain`.
pub fn ftl_step(
    aggregate: &CostAggregate,
    domain: &Domain,
    warm_start: &ParameterPoint,
    tol_inner: f64,
) -> Result<SolveReport> {
    ftl_step_with(
        aggregate,
        domain,
        warm_start,
        &SolverOptions {
            tol_inner,
            ..SolverOptions::default()
        },
    )
}

pub fn ftl_step_with(
    aggregate: &CostAggregate,
    domain: &Domain,
    warm_start: &ParameterPoint,
    options: &SolverOptions,
) -> Result<SolveReport> {
    if aggregate.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    if warm_start.dimension() != domain.dimension() {
        return Err(Error::DimensionMismatch {
            expected: domain.dimension(),
            actual: warm_start.dimension(),
        });
    }
    if !(options.tol_inner > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol_inner",
            reason: "must be positive".into(),
        });
    }

    if !options.force_iterative {
        if let Some(q) = aggregate.quadratic() {
            if !q.value(warm_start.coords()).is_finite() {
                return Err(Error::NonFiniteCost);
            }
            if let Some(m) = q.minimizer() {
                if domain.contains(&m) && m.iter().all(|v| v.is_finite()) {
                    let gradient_norm = norm(&q.gradient(&m));
                    return Ok(SolveReport {
                        value: q.value(&m),
                        minimizer: ParameterPoint::new(m)?,
                        inner_iterations: 0,
                        gradient_norm,
                        method: SolveMethod::ClosedFormQuadratic,
                    });
                }
            }
        }
    }

    projected_gradient(aggregate, domain, warm_start, options)
}

fn projected_gradient(
    aggregate: &CostAggregate,
    domain: &Domain,
    warm_start: &ParameterPoint,
    options: &SolverOptions,
) -> Result<SolveReport> {
    let lipschitz = aggregate.total_smoothness();
    let mut x = domain.project(warm_start.coords());
    if !aggregate.value(&x).is_finite() {
        return Err(Error::NonFiniteCost);
    }
    let mut residual = f64::INFINITY;
    for iteration in 0..=options.max_iterations {
        let g = aggregate.gradient(&x);
        let stepped: Vec<f64> = x
            .iter()
            .zip(&g)
            .map(|(xi, gi)| xi - gi / lipschitz)
            .collect();
        let next = domain.project(&stepped);
        let moved = distance(&x, &next);
        residual = lipschitz * moved;
        // Stagnation: the step no longer changes x at working precision.
        let stalled = moved <= 4.0 * f64::EPSILON * norm(&x).max(f64::MIN_POSITIVE);
        if residual <= options.tol_inner || stalled {
            return Ok(SolveReport {
                value: aggregate.value(&x),
                minimizer: ParameterPoint::new(x)?,
                inner_iterations: iteration,
                gradient_norm: residual,
                method: SolveMethod::ProjectedGradient,
            });
        }
        x = next;
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        residual,
    })
}

/// Average regret `(1/N) [Σ f_n(x_n) − min_x f_{1:N}(x)]`.
pub fn regret(costs: &[PerRoundCost], iterates: &[ParameterPoint], domain: &Domain) -> Result<f64> {
    if costs.len() != iterates.len() {
        return Err(Error::LengthMismatch {
            left: costs.len(),
            right: iterates.len(),
        });
    }
    if costs.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let played: f64 = costs
        .iter()
        .zip(iterates)
        .map(|(c, x)| c.value(x.coords()))
        .sum();
    let aggregate = CostAggregate::from_costs(costs.iter().cloned())?;
    let warm = ParameterPoint::new(domain.project(iterates[iterates.len() - 1].coords()))?;
    let best = ftl_step(&aggregate, domain, &warm, DEFAULT_TOL_INNER)?;
    Ok((played - best.value) / costs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_counterexample, CounterexampleSpec};

    fn counterexample_costs(theta: f64, anchors: &[f64]) -> CostAggregate {
        let inst = make_counterexample(&CounterexampleSpec::new(theta));
        CostAggregate::from_costs(
            anchors
                .iter()
                .map(|a| inst.freeze_cost(&ParameterPoint::scalar(*a)).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn minimizer_is_scaled_mean_of_anchors() {
        let anchors = [1.0, -2.0, 0.5, 3.0];
        let theta = 0.7;
        let agg = counterexample_costs(theta, &anchors);
        let r = ftl_step(
            &agg,
            &Domain::unbounded(1),
            &ParameterPoint::scalar(0.0),
            1e-10,
        )
        .unwrap();
        let expected = theta * anchors.iter().sum::<f64>() / anchors.len() as f64;
        assert!((r.minimizer.coords()[0] - expected).abs() < 1e-14);
        assert_eq!(r.method, SolveMethod::ClosedFormQuadratic);
        assert_eq!(agg.total_strong_convexity(), 8.0);
    }

    #[test]
    fn single_quadratic_has_zero_value_at_minimizer() {
        // (x - c)^2 is the counterexample cost with theta = 1 anchored at c.
        let agg = counterexample_costs(1.0, &[2.5]);
        let r = ftl_step(
            &agg,
            &Domain::unbounded(1),
            &ParameterPoint::scalar(-4.0),
            1e-10,
        )
        .unwrap();
        assert_eq!(r.minimizer.coords()[0], 2.5);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn divergent_prefix_matches_reported_iterates() {
        let mut agg = counterexample_costs(10.0, &[1.0]);
        let dom = Domain::unbounded(1);
        let r = ftl_step(&agg, &dom, &ParameterPoint::scalar(1.0), 1e-10).unwrap();
        assert_eq!(r.minimizer.coords()[0], 10.0);
        let inst = make_counterexample(&CounterexampleSpec::new(10.0));
        agg.push(inst.freeze_cost(&r.minimizer).unwrap()).unwrap();
        let r = ftl_step(&agg, &dom, &r.minimizer, 1e-10).unwrap();
        assert_eq!(r.minimizer.coords()[0], 55.0);
    }

    #[test]
    fn empty_aggregate_is_an_error() {
        let agg = CostAggregate::new();
        assert!(matches!(
            ftl_step(
                &agg,
                &Domain::unbounded(1),
                &ParameterPoint::scalar(0.0),
                1e-10
            ),
            Err(Error::EmptyAggregate)
        ));
    }

    #[test]
    fn box_cut_falls_back_to_projected_gradient() {
        let agg = counterexample_costs(2.0, &[3.0]);
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let r = ftl_step(&agg, &dom, &ParameterPoint::scalar(0.0), 1e-10).unwrap();
        assert_eq!(r.method, SolveMethod::ProjectedGradient);
        assert!((r.minimizer.coords()[0] - 1.0).abs() < 1e-12);
        assert!(r.gradient_norm <= 1e-10);
    }

    #[test]
    fn regret_single_round() {
        let inst = make_counterexample(&CounterexampleSpec::new(1.0));
        let c = 1.5;
        let cost = inst.freeze_cost(&ParameterPoint::scalar(c)).unwrap();
        let x1 = ParameterPoint::scalar(-0.25);
        let r = regret(&[cost], &[x1], &Domain::unbounded(1)).unwrap();
        assert!((r - (-0.25f64 - c).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn regret_zero_when_already_optimal() {
        let inst = make_counterexample(&CounterexampleSpec::new(1.0));
        let cost = inst.freeze_cost(&ParameterPoint::scalar(0.75)).unwrap();
        let costs = vec![cost; 5];
        let iterates = vec![ParameterPoint::scalar(0.75); 5];
        assert_eq!(
            regret(&costs, &iterates, &Domain::unbounded(1)).unwrap(),
            0.0
        );
        assert!(regret(&costs[..2], &iterates, &Domain::unbounded(1)).is_err());
    }
}
