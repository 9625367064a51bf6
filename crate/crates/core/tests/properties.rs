//! Property tests over random instances, probes and seeds.

use proptest::prelude::*;
use valagg_core::diagnostics::{s_series, s_series_scalar};
use valagg_core::ftl::ftl_step_with;
use valagg_core::problem::{finite_difference_gradient, relative_error};
use valagg_core::{
    make_affine_quadratic, make_counterexample, make_linear_imitation, run_deterministic,
    run_stochastic, with_noise, AffineQuadraticSpec, CostAggregate, CounterexampleSpec, Domain,
    LinearImitationSpec, LoopConfig, NoiseModel, ParameterPoint, ProblemInstance, SamplingSchedule,
    SolverOptions,
};

fn counterexample_strategy() -> impl Strategy<Value = ProblemInstance> {
    (0.0f64..12.0).prop_map(|t| make_counterexample(&CounterexampleSpec::new(t)))
}

fn affine_strategy() -> impl Strategy<Value = ProblemInstance> {
    (
        prop::collection::vec(-1.0f64..1.0, 9),
        prop::collection::vec(-0.5f64..0.5, 3),
        0.2f64..5.0,
        0.0f64..1.0,
    )
        .prop_map(|(m, b, alpha, c)| {
            let rows = m.chunks(3).map(|r| r.to_vec()).collect();
            let mut spec = AffineQuadraticSpec::new(rows, b, alpha);
            spec.offset = c;
            make_affine_quadratic(&spec).unwrap()
        })
}

fn imitation_strategy() -> impl Strategy<Value = ProblemInstance> {
    (
        -0.9f64..0.9,
        -0.6f64..0.6,
        -0.9f64..0.9,
        0.1f64..3.0,
        1usize..6,
    )
        .prop_map(|(a, a_b, k_star, s0, t)| {
            make_linear_imitation(&LinearImitationSpec {
                a,
                a_b,
                k_star,
                sigma0_sq: s0,
                horizon: t,
                gain_lo: -1.0,
                gain_hi: 1.0,
            })
            .unwrap()
        })
}

fn any_instance() -> impl Strategy<Value = ProblemInstance> {
    prop_oneof![
        counterexample_strategy(),
        affine_strategy(),
        imitation_strategy()
    ]
}

/// A point of the reference box from unit-interval coordinates.
fn in_box(inst: &ProblemInstance, u: &[f64]) -> Vec<f64> {
    let b = inst.reference_box();
    (0..inst.dimension())
        .map(|i| b.lower()[i] + u[i % u.len()] * (b.upper()[i] - b.lower()[i]))
        .collect()
}

fn unit3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gradient_matches_finite_differences(inst in any_instance(), uy in unit3(), ux in unit3()) {
        let (y, x) = (in_box(&inst, &uy), in_box(&inst, &ux));
        let obj = inst.objective();
        let fd = finite_difference_gradient(|z| obj.value(&y, z), &x);
        prop_assert!(relative_error(&obj.grad2(&y, &x), &fd) <= 1e-6);
    }

    #[test]
    fn strongly_convex_in_second_argument(
        inst in any_instance(), uy in unit3(), u1 in unit3(), u2 in unit3()
    ) {
        let (y, x1, x2) = (in_box(&inst, &uy), in_box(&inst, &u1), in_box(&inst, &u2));
        let obj = inst.objective();
        let alpha = inst.constants().unwrap().alpha;
        let g = obj.grad2(&y, &x1);
        let lin: f64 = g.iter().zip(x2.iter().zip(&x1)).map(|(g, (b, a))| g * (b - a)).sum();
        let d2: f64 = x2.iter().zip(&x1).map(|(b, a)| (b - a).powi(2)).sum();
        let lower = obj.value(&y, &x1) + lin + 0.5 * alpha * d2;
        prop_assert!(obj.value(&y, &x2) >= lower - 1e-9 * lower.abs().max(1.0));
    }

    #[test]
    fn first_argument_smoothness(
        inst in any_instance(), u1 in unit3(), u2 in unit3(), ux in unit3()
    ) {
        let (y1, y2, x) = (in_box(&inst, &u1), in_box(&inst, &u2), in_box(&inst, &ux));
        let obj = inst.objective();
        let beta = inst.constants().unwrap().beta;
        let gd: f64 = obj.grad2(&y1, &x).iter().zip(obj.grad2(&y2, &x))
            .map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let yd: f64 = y1.iter().zip(&y2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(gd <= beta * yd + 1e-9);
    }

    #[test]
    fn local_error_bounds_every_frozen_minimum(inst in any_instance(), uy in unit3()) {
        let y = ParameterPoint::new(in_box(&inst, &uy)).unwrap();
        let eps = inst.constants().unwrap().eps_tilde;
        let agg = CostAggregate::from_costs([inst.freeze_cost(&y).unwrap()]).unwrap();
        let report = ftl_step_with(&agg, &Domain::unbounded(inst.dimension()), &y,
            &SolverOptions::default()).unwrap();
        prop_assert!(report.value <= eps + 1e-8);
    }

    #[test]
    fn gradient_bound_holds_on_reference_box(inst in any_instance(), uy in unit3(), ux in unit3()) {
        let (y, x) = (in_box(&inst, &uy), in_box(&inst, &ux));
        let g: f64 = inst.objective().grad2(&y, &x).iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(g <= inst.constants().unwrap().g2 * (1.0 + 1e-12));
    }

    #[test]
    fn closed_form_and_iterative_leaders_agree(
        inst in any_instance(),
        anchors in prop::collection::vec(unit3(), 1..12),
    ) {
        let costs: Vec<_> = anchors.iter()
            .map(|u| inst.freeze_cost(&ParameterPoint::new(in_box(&inst, u)).unwrap()).unwrap())
            .collect();
        let agg = CostAggregate::from_costs(costs).unwrap();
        let domain = Domain::unbounded(inst.dimension());
        let warm = ParameterPoint::new(vec![0.0; inst.dimension()]).unwrap();
        let closed = ftl_step_with(&agg, &domain, &warm, &SolverOptions::default()).unwrap();
        let iterative = ftl_step_with(&agg, &domain, &warm, &SolverOptions {
            force_iterative: true, tol_inner: 1e-12, ..SolverOptions::default()
        }).unwrap();
        prop_assert!(closed.minimizer.distance(&iterative.minimizer) <= 1e-8);
        // The leader is optimal against arbitrary competitors.
        for u in &anchors {
            let z = in_box(&inst, u);
            prop_assert!(closed.value <= agg.value(&z) + 1e-9 * agg.value(&z).abs().max(1.0));
        }
    }

    #[test]
    fn aggregate_is_the_sum_of_members(
        inst in any_instance(),
        anchors in prop::collection::vec(unit3(), 1..8),
        ux in unit3(),
    ) {
        let costs: Vec<_> = anchors.iter()
            .map(|u| inst.freeze_cost(&ParameterPoint::new(in_box(&inst, u)).unwrap()).unwrap())
            .collect();
        let agg = CostAggregate::from_costs(costs.clone()).unwrap();
        let x = in_box(&inst, &ux);
        let direct: f64 = costs.iter().map(|c| c.value(&x)).sum();
        prop_assert!((agg.value(&x) - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        let q = agg.quadratic().unwrap();
        prop_assert!((q.value(&x) - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        let alpha: f64 = costs.iter().map(|c| c.strong_convexity()).sum();
        prop_assert_eq!(agg.total_strong_convexity(), alpha);
    }

    #[test]
    fn counterexample_follows_product_recursion(theta in 0.0f64..3.0, x1 in -2.0f64..2.0) {
        let inst = make_counterexample(&CounterexampleSpec::new(theta));
        let t = run_deterministic(&inst, &LoopConfig::deterministic(60, x1)).unwrap();
        let mut x = x1;
        for (n, p) in t.iterates.iter().enumerate() {
            let got = p.coords()[0];
            prop_assert!((got - x).abs() <= 1e-10 * x.abs().max(1e-300));
            x *= 1.0 - (1.0 - theta) / (n + 1) as f64;
        }
    }

    #[test]
    fn scalar_and_direct_statistics_agree(values in prop::collection::vec(-5.0f64..5.0, 2..80)) {
        let points: Vec<_> = values.iter().map(|&v| ParameterPoint::scalar(v)).collect();
        for (a, b) in s_series(&points).iter().zip(s_series_scalar(&values)) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seeded_runs_are_bit_identical(seed in any::<u64>(), m0 in 1usize..20, r in 0.0f64..1.5) {
        let inst = with_noise(
            &make_counterexample(&CounterexampleSpec::new(0.7)),
            NoiseModel::scaled_bernoulli(0.5).unwrap(),
        );
        let cfg = LoopConfig::stochastic(40, 0.5, SamplingSchedule::new(m0, r, seed).unwrap());
        let a = run_stochastic(&inst, &cfg).unwrap();
        let b = run_stochastic(&inst, &cfg).unwrap();
        let bits = |t: &valagg_core::RunTrace| -> Vec<u64> {
            t.iterates.iter().flat_map(|p| p.coords().iter().map(|v| v.to_bits()))
                .chain(t.per_round_values.iter().map(|v| v.to_bits()))
                .collect()
        };
        prop_assert_eq!(bits(&a), bits(&b));
        prop_assert_eq!(a.sample_counts, b.sample_counts);
    }
}
