//! Per-run summary records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use valagg_core::diagnostics::default_window;
use valagg_core::{check_bounds, fit_rate, select_best, BoundId, RunTrace, StructuralConstants};

/// Excess `F − ε̃` at or below which a run counts as converged regardless of slope.
pub const CONVERGED_EXCESS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub applicable: bool,
    pub passed: bool,
    /// Smallest `rhs − lhs`; `None` when nothing was evaluated.
    pub worst_margin: Option<f64>,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Finite-valued view of [`StructuralConstants`]; non-finite entries become `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSummary {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub g2: Option<f64>,
    pub eps_tilde: Option<f64>,
    pub theta: Option<f64>,
}

impl From<&StructuralConstants> for ConstantsSummary {
    fn from(c: &StructuralConstants) -> Self {
        Self {
            alpha: finite(c.alpha),
            beta: finite(c.beta),
            g2: finite(c.g2),
            eps_tilde: finite(c.eps_tilde),
            theta: finite(c.theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub config: BTreeMap<String, String>,
    pub label: String,
    pub iterations_completed: usize,
    pub final_self_value: Option<f64>,
    pub final_objective_value: Option<f64>,
    pub best_round: Option<usize>,
    pub best_value: Option<f64>,
    pub fitted_exponent: Option<f64>,
    pub theoretical_exponent: Option<f64>,
    pub r_squared: Option<f64>,
    pub fit_window: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub effective_constants: ConstantsSummary,
    pub base_constants: ConstantsSummary,
    pub bounds: BTreeMap<String, BoundSummary>,
    pub convergent: bool,
    pub aborted: Option<String>,
    pub wall_time_ms: u64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Bounds reported for a trace: the always-relevant set plus those tied to
/// the transformer or to the divergent regime.
pub fn reported_bounds(trace: &RunTrace) -> Vec<BoundId> {
    let mut ids = vec![
        BoundId::Thm1,
        BoundId::Thm2,
        BoundId::Lemma3,
        BoundId::Prop2,
        BoundId::StepPerturbation,
        BoundId::MeanPolicy,
        BoundId::Corollary1,
    ];
    match trace.transform.kind.as_str() {
        "mixing" => ids.push(BoundId::Corollary2),
        "weighted_regularization" => ids.push(BoundId::Corollary3),
        _ => {}
    }
    // The lower bound is a property of the untransformed divergent family.
    if trace.effective_constants.theta > 1.0 && trace.transform.kind == "none" {
        ids.push(BoundId::Thm3Lower);
    }
    ids
}

fn summarize_bounds(trace: &RunTrace) -> BTreeMap<String, BoundSummary> {
    let mut out = BTreeMap::new();
    for id in reported_bounds(trace) {
        let summary = match check_bounds(trace, &trace.effective_constants, &[id]) {
            Ok(mut recs) => {
                let r = recs.remove(0);
                BoundSummary {
                    applicable: r.applicable,
                    passed: r.passed,
                    worst_margin: r.min_margin().and_then(finite),
                    points: r.indices.len(),
                    note: r.note,
                }
            }
            Err(e) => BoundSummary {
                applicable: false,
                passed: true,
                worst_margin: None,
                points: 0,
                note: Some(e.to_string()),
            },
        };
        out.insert(id.tag().to_string(), summary);
    }
    out
}

pub fn summarize(
    trace: &RunTrace,
    config: BTreeMap<String, String>,
    wall_time_ms: u64,
) -> SummaryRecord {
    let n = trace.len();
    let eps = trace.base_constants.eps_tilde;
    let (fit, fit_error) = if n >= 2 {
        match fit_rate(trace, eps, default_window(n)) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (
            None,
            Some("a rate fit needs at least two iterations".into()),
        )
    };
    let best = select_best(trace);
    let final_self = trace.self_values.last().copied();
    let converged_value = final_self.is_some_and(|v| v - eps <= CONVERGED_EXCESS);
    let negative_slope = fit.as_ref().is_some_and(|f| f.fitted_exponent < 0.0);
    SummaryRecord {
        config,
        label: trace.label.clone(),
        iterations_completed: n,
        final_self_value: final_self.and_then(finite),
        final_objective_value: trace.objective_values.last().copied().and_then(finite),
        best_round: best.map(|(r, _)| r),
        best_value: best.and_then(|(_, v)| finite(v)),
        fitted_exponent: fit.as_ref().and_then(|f| finite(f.fitted_exponent)),
        theoretical_exponent: finite(2.0 * (trace.effective_constants.theta - 1.0)),
        r_squared: fit.as_ref().and_then(|f| finite(f.r_squared)),
        fit_window: fit.as_ref().map(|f| f.fit_window),
        fit_error,
        effective_constants: (&trace.effective_constants).into(),
        base_constants: (&trace.base_constants).into(),
        bounds: summarize_bounds(trace),
        convergent: trace.aborted.is_none() && (negative_slope || converged_value),
        aborted: trace.aborted.clone(),
        wall_time_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use valagg_core::{make_counterexample, run_deterministic, CounterexampleSpec, LoopConfig};

    #[test]
    fn round_trips_through_json() {
        let inst = make_counterexample(&CounterexampleSpec::new(0.5));
        let trace = run_deterministic(&inst, &LoopConfig::deterministic(200, 1.0)).unwrap();
        let rec = summarize(&trace, BTreeMap::new(), 3);
        let text = serde_json::to_string(&rec).unwrap();
        let back: SummaryRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(rec, back);
        assert!(rec.convergent);
        assert!(rec.bounds.values().all(|b| b.passed));
        assert!(!rec.bounds.contains_key("thm3_lower"));
    }

    #[test]
    fn divergent_run_reports_lower_bound() {
        let inst = make_counterexample(&CounterexampleSpec::new(1.5));
        let trace = run_deterministic(&inst, &LoopConfig::deterministic(200, 1.0)).unwrap();
        let rec = summarize(&trace, BTreeMap::new(), 0);
        assert!(!rec.convergent);
        assert!(rec.bounds["thm3_lower"].applicable);
        assert!(!rec.bounds["thm2"].applicable);
    }
}
