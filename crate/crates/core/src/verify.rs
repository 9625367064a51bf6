//! The acceptance suite: ten criteria, each a list of named pass/fail checks.

use std::fmt;

use crate::aggregation::{
    run_deterministic, run_stochastic, CostTransformer, LoopConfig, Regularizer, RunTrace,
    SamplingSchedule,
};
use crate::diagnostics::{check_bounds, fit_rate, BoundCheckRecord, BoundId};
use crate::error::Result;
use crate::ftl::{ftl_step_with, CostAggregate, SolverOptions};
use crate::instances::{
    make_affine_quadratic, make_counterexample, make_linear_imitation, operator_norm, with_noise,
    AffineQuadraticSpec, CounterexampleSpec, LinearImitationSpec, NoiseModel,
};
use crate::problem::{
    finite_difference_gradient, measure_constants, relative_error, Domain, ParameterPoint,
    ProblemInstance, StructuralConstants,
};
use crate::trace_io::write_trace_csv;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "  {s} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    pub checks: Vec<CheckLine>,
}

impl CriterionReport {
    fn new(id: u32) -> Self {
        Self {
            id,
            title: CRITERIA[id as usize - 1].title,
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn record(&mut self, run: &str, rec: &BoundCheckRecord) {
        let detail = match (rec.applicable, rec.worst()) {
            (false, _) => format!("not applicable: {}", rec.note.clone().unwrap_or_default()),
            (true, Some((n, m))) => {
                format!("{} points, worst margin {m:e} at n={n}", rec.indices.len())
            }
            (true, None) => "no points".into(),
        };
        let passed = rec.applicable && rec.passed && !rec.indices.is_empty();
        self.check(format!("{run}/{}", rec.bound_id), passed, detail);
    }

    fn error(&mut self, name: impl Into<String>, err: crate::Error) {
        self.check(name, false, format!("error: {err}"));
    }

    pub fn summary_line(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        format!(
            "[{}] criterion {:>2}: {} ({} checks, {} failed)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.checks.len(),
            failed
        )
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary_line())?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Multiplies `θ` in the constants handed to bound checks. Anything but
    /// 1.0 corrupts the suite on purpose.
    pub theta_scale: f64,
    /// Criterion numbers or bound tags to run; empty runs everything.
    pub only: Vec<String>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            theta_scale: 1.0,
            only: Vec::new(),
        }
    }
}

struct CriterionInfo {
    title: &'static str,
    tags: &'static [&'static str],
    run: fn(&SuiteOptions) -> CriterionReport,
}

const CRITERIA: [CriterionInfo; 10] = [
    CriterionInfo {
        title: "divergent iterates 1, 10, 55, 220",
        tags: &["iterates"],
        run: criterion_1,
    },
    CriterionInfo {
        title: "convergence exponent 2(theta-1)",
        tags: &["rate", "thm2", "thm3"],
        run: criterion_2,
    },
    CriterionInfo {
        title: "divergence for theta > 1, neutrality at theta = 1",
        tags: &["rate", "thm3", "thm3_lower"],
        run: criterion_3,
    },
    CriterionInfo {
        title: "per-iterate inequalities",
        tags: &["lemma3", "prop2", "thm1", "step_perturbation"],
        run: criterion_4,
    },
    CriterionInfo {
        title: "terminal last-iterate bound",
        tags: &["thm2"],
        run: criterion_5,
    },
    CriterionInfo {
        title: "weighted regularization",
        tags: &["corollary3", "weighted"],
        run: criterion_6,
    },
    CriterionInfo {
        title: "mixing contraction",
        tags: &["corollary2", "mixing"],
        run: criterion_7,
    },
    CriterionInfo {
        title: "sampled costs",
        tags: &["stochastic", "thm4"],
        run: criterion_8,
    },
    CriterionInfo {
        title: "numerical hygiene",
        tags: &["hygiene"],
        run: criterion_9,
    },
    CriterionInfo {
        title: "mean-policy bound",
        tags: &["mean_policy"],
        run: criterion_10,
    },
];

pub const CRITERION_COUNT: u32 = CRITERIA.len() as u32;

pub fn criterion_tags(id: u32) -> &'static [&'static str] {
    CRITERIA[id as usize - 1].tags
}

fn selected(id: u32, only: &[String]) -> bool {
    only.is_empty()
        || only.iter().any(|o| {
            let o = o.trim();
            o == id.to_string() || criterion_tags(id).contains(&o)
        })
}

/// Run one criterion regardless of the `only` filter.
pub fn run_criterion(id: u32, options: &SuiteOptions) -> CriterionReport {
    assert!(
        (1..=CRITERION_COUNT).contains(&id),
        "criterion {id} does not exist"
    );
    (CRITERIA[id as usize - 1].run)(options)
}

/// Run every criterion selected by `options.only`.
pub fn run_suite(options: &SuiteOptions) -> Vec<CriterionReport> {
    (1..=CRITERION_COUNT)
        .filter(|id| selected(*id, &options.only))
        .map(|id| run_criterion(id, options))
        .collect()
}

/// `x_{n+1} = (1 − (1 − θ)/n) x_n`.
pub fn counterexample_recursion(theta: f64, x1: f64, n: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(n);
    let mut x = x1;
    for k in 1..=n {
        xs.push(x);
        x *= 1.0 - (1.0 - theta) / k as f64;
    }
    xs
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn scalars(trace: &RunTrace) -> Vec<f64> {
    trace.iterates.iter().map(|p| p.coords()[0]).collect()
}

fn counterexample(theta: f64) -> ProblemInstance {
    make_counterexample(&CounterexampleSpec::new(theta))
}

fn criterion_1(_: &SuiteOptions) -> CriterionReport {
    let mut r = CriterionReport::new(1);
    match run_deterministic(&counterexample(10.0), &LoopConfig::deterministic(4, 1.0)) {
        Ok(t) => {
            let xs = scalars(&t);
            for (k, expected) in [1.0, 10.0, 55.0, 220.0].iter().enumerate() {
                let e = rel_err(xs[k], *expected);
                r.check(
                    format!("x_{}", k + 1),
                    e <= 1e-12,
                    format!("{} vs {expected}, rel err {e:e}", xs[k]),
                );
            }
            let best = t.best_round;
            r.check("best_round", best == 1, format!("selected round {best}"));
        }
        Err(e) => r.error("run", e),
    }
    r
}

#[allow(clippy::too_many_arguments)]
fn rate_check(
    r: &mut CriterionReport,
    name: &str,
    trace: &RunTrace,
    eps: f64,
    window: (usize, usize),
    target: f64,
    tol: f64,
    min_r2: Option<f64>,
) {
    match fit_rate(trace, eps, window) {
        Ok(fit) => {
            let mut ok = (fit.fitted_exponent - target).abs() <= tol;
            let mut detail = format!(
                "slope {:.5} vs {target:.5} (tol {tol}), r^2 {:.6}",
                fit.fitted_exponent, fit.r_squared
            );
            if let Some(m) = min_r2 {
                ok &= fit.r_squared >= m;
                detail.push_str(&format!(" (min {m})"));
            }
            r.check(name, ok, detail);
        }
        Err(e) => r.error(name, e),
    }
}

fn criterion_2(_: &SuiteOptions) -> CriterionReport {
    let mut r = CriterionReport::new(2);
    for theta in [0.3, 0.6, 0.9] {
        let name = format!("theta={theta}");
        match run_deterministic(
            &counterexample(theta),
            &LoopConfig::deterministic(10_000, 1.0),
        ) {
            Ok(t) => rate_check(
                &mut r,
                &name,
                &t,
                0.0,
                (100, 10_000),
                2.0 * (theta - 1.0),
                0.05,
                Some(0.999),
            ),
            Err(e) => r.error(name, e),
        }
    }
    r
}

fn criterion_3(_: &SuiteOptions) -> CriterionReport {
    let mut r = CriterionReport::new(3);
    let n = 10_000;
    match run_deterministic(&counterexample(1.5), &LoopConfig::deterministic(n, 1.0)) {
        Ok(t) => {
            let first_bad = (10..t.len()).find(|&k| !(t.self_values[k] > t.self_values[k - 1]));
            r.check(
                "theta=1.5 strictly increasing from n=10",
                first_bad.is_none() && t.len() == n,
                match first_bad {
                    None => format!("{} iterates, F_N = {:e}", t.len(), t.final_self_value()),
                    Some(k) => format!("not increasing at n={}", k + 1),
                },
            );
            rate_check(
                &mut r,
                "theta=1.5 exponent",
                &t,
                0.0,
                (100, n),
                1.0,
                0.05,
                None,
            );
        }
        Err(e) => r.error("theta=1.5", e),
    }
    match run_deterministic(&counterexample(1.0), &LoopConfig::deterministic(1_000, 1.0)) {
        Ok(t) => {
            let drift = scalars(&t)
                .iter()
                .map(|x| (x - 1.0).abs())
                .fold(0.0, f64::max);
            r.check(
                "theta=1 constant",
                drift <= 1e-12,
                format!("max |x_n - x_1| = {drift:e}"),
            );
        }
        Err(e) => r.error("theta=1", e),
    }
    r
}

/// The runs shared by the per-iterate, terminal and mean-policy criteria.
pub fn inequality_runs() -> Result<Vec<(String, ProblemInstance, RunTrace)>> {
    let mut runs = Vec::new();
    let n = 500;
    for theta in [0.3, 0.5, 0.9] {
        let inst = counterexample(theta);
        let t = run_deterministic(&inst, &LoopConfig::deterministic(n, 1.0))?;
        runs.push((format!("counterexample(theta={theta})"), inst, t));
    }
    for target in [0.5, 0.9] {
        let inst = make_affine_quadratic(&affine_spec(target))?;
        let x1 = ParameterPoint::new(vec![1.0, -0.5, 0.25])?;
        let t = run_deterministic(&inst, &LoopConfig::deterministic(n, x1))?;
        runs.push((format!("affine(d=3,|M|={target})"), inst, t));
    }
    for (label, spec) in imitation_settings() {
        let inst = make_linear_imitation(&spec)?;
        let t = run_deterministic(&inst, &LoopConfig::deterministic(n, 0.9))?;
        runs.push((format!("imitation({label})"), inst, t));
    }
    Ok(runs)
}

/// A fixed non-symmetric 3×3 matrix rescaled to operator norm `target`.
pub fn affine_spec(target: f64) -> AffineQuadraticSpec {
    let raw = [[0.6, -0.3, 0.2], [0.1, 0.5, -0.4], [-0.2, 0.3, 0.7]];
    let m = nalgebra::DMatrix::from_fn(3, 3, |i, j| raw[i][j]);
    let scale = target / operator_norm(&m);
    let rows = raw
        .iter()
        .map(|row| row.iter().map(|v| v * scale).collect())
        .collect();
    AffineQuadraticSpec::new(rows, vec![0.1, -0.2, 0.05], 1.5)
}

/// Two imitation settings with `θ < 1`.
pub fn imitation_settings() -> [(&'static str, LinearImitationSpec); 2] {
    [
        (
            "A",
            LinearImitationSpec {
                a: 0.5,
                a_b: 0.2,
                k_star: -0.5,
                sigma0_sq: 1.0,
                horizon: 3,
                gain_lo: -1.0,
                gain_hi: 1.0,
            },
        ),
        (
            "B",
            LinearImitationSpec {
                a: 0.3,
                a_b: 0.3,
                k_star: 0.2,
                sigma0_sq: 0.5,
                horizon: 4,
                gain_lo: -1.0,
                gain_hi: 1.0,
            },
        ),
    ]
}

fn checked_constants(
    inst: &ProblemInstance,
    options: &SuiteOptions,
) -> Result<StructuralConstants> {
    Ok(inst.constants()?.with_theta_scaled(options.theta_scale))
}

fn bound_criterion(id: u32, options: &SuiteOptions, bounds: &[BoundId]) -> CriterionReport {
    let mut r = CriterionReport::new(id);
    let runs = match inequality_runs() {
        Ok(runs) => runs,
        Err(e) => {
            r.error("setup", e);
            return r;
        }
    };
    for (label, inst, trace) in &runs {
        let result = checked_constants(inst, options).and_then(|c| {
            if id != 4 && !(c.theta < 1.0) {
                return Ok(None);
            }
            check_bounds(trace, &c, bounds).map(Some)
        });
        match result {
            Ok(Some(recs)) => recs.iter().for_each(|rec| r.record(label, rec)),
            Ok(None) => {}
            Err(e) => r.error(label.clone(), e),
        }
    }
    r
}

fn criterion_4(options: &SuiteOptions) -> CriterionReport {
    let mut r = bound_criterion(
        4,
        options,
        &[
            BoundId::Lemma3,
            BoundId::Prop2,
            BoundId::Thm1,
            BoundId::StepPerturbation,
        ],
    );
    for (label, spec) in imitation_settings() {
        if let Ok(inst) = make_linear_imitation(&spec) {
            if let Ok(c) = inst.constants() {
                r.check(
                    format!("imitation({label})/theta"),
                    c.theta < 1.0,
                    format!("declared theta {:.6}", c.theta),
                );
            }
        }
    }
    r
}

fn criterion_5(options: &SuiteOptions) -> CriterionReport {
    bound_criterion(5, options, &[BoundId::Thm2])
}

fn criterion_10(options: &SuiteOptions) -> CriterionReport {
    bound_criterion(10, options, &[BoundId::MeanPolicy])
}

fn weighted(lambda: f64, regularizer: Regularizer) -> CostTransformer {
    CostTransformer::WeightedRegularization {
        lambda,
        regularizer,
    }
}

fn criterion_6(options: &SuiteOptions) -> CriterionReport {
    let mut r = CriterionReport::new(6);
    let base = counterexample(1.5);
    let n = 10_000;
    match run_deterministic(&base, &LoopConfig::deterministic(n, 1.0)) {
        Ok(t) => {
            let grows = t.final_self_value() > 100.0 * t.self_values[0];
            r.check(
                "unregularized diverges",
                grows,
                format!(
                    "F(x_1) = {:e}, F(x_N) = {:e}",
                    t.self_values[0],
                    t.final_self_value()
                ),
            );
        }
        Err(e) => r.error("unregularized", e),
    }
    let variants = [
        (
            "R=x^2",
            weighted(
                2.0,
                Regularizer::Quadratic {
                    center: vec![0.0],
                    modulus: 2.0,
                },
            ),
        ),
        ("R=F(expert,.)", weighted(2.0, Regularizer::ExpertCost)),
    ];
    for (label, transformer) in variants {
        let cfg = LoopConfig::deterministic(n, 1.0).with_transformer(transformer);
        match run_deterministic(&base, &cfg) {
            Ok(t) => {
                let c = t.effective_constants.with_theta_scaled(options.theta_scale);
                r.check(
                    format!("{label}/theta"),
                    c.theta < 1.0 && (t.effective_constants.theta - 0.5).abs() < 1e-12,
                    format!("regularized theta {:.6}", t.effective_constants.theta),
                );
                rate_check(
                    &mut r,
                    &format!("{label}/exponent"),
                    &t,
                    0.0,
                    (100, n),
                    -1.0,
                    0.1,
                    None,
                );
                match check_bounds(&t, &c, &[BoundId::Corollary3]) {
                    Ok(recs) => r.record(label, &recs[0]),
                    Err(e) => r.error(label, e),
                }
            }
            Err(e) => r.error(label, e),
        }
    }
    r
}

fn criterion_7(options: &SuiteOptions) -> CriterionReport {
    let mut r = CriterionReport::new(7);
    let spec = LinearImitationSpec {
        a: 0.6,
        a_b: 0.4,
        k_star: -0.5,
        sigma0_sq: 1.0,
        horizon: 4,
        gain_lo: -1.0,
        gain_hi: 1.0,
    };
    match make_linear_imitation(&spec).and_then(|i| Ok((i.constants()?, i))) {
        Ok((base_c, inst)) => {
            for q in [0.2, 0.5, 0.9] {
                let name = format!("imitation q={q}");
                let measured =
                    crate::aggregation::apply_transformer(&inst, &CostTransformer::Mixing { q })
                        .and_then(|m| measure_constants(&m, m.reference_box(), 2000, 7));
                match measured {
                    Ok(m) => {
                        let cap = (1.0 - q.powi(spec.horizon as i32)) * base_c.beta;
                        r.check(
                            name,
                            m.beta <= cap * 1.03,
                            format!("measured beta {:.6} vs (1-q^T) beta = {cap:.6}", m.beta),
                        );
                    }
                    Err(e) => r.error(name, e),
                }
            }
        }
        Err(e) => r.error("imitation", e),
    }

    let base = counterexample(1.5);
    let q = 0.7;
    let n = 2_000;
    let cfg = LoopConfig::deterministic(n, 1.0).with_transformer(CostTransformer::Mixing { q });
    match run_deterministic(&base, &cfg) {
        Ok(t) => {
            let theta_hat = t.effective_constants.theta;
            r.check(
                "counterexample theta=1.5 q=0.7 contraction",
                theta_hat < 1.0 && t.base_constants.theta > 1.0,
                format!("theta {} -> {theta_hat:.6}", t.base_constants.theta),
            );
            let target = 2.0 * (theta_hat - 1.0);
            match crate::diagnostics::fit_rate_values(&t.self_values, 0.0, (n / 100, n), target) {
                Ok(fit) => r.check(
                    "mixed run converges",
                    fit.fitted_exponent < 0.0 && (fit.fitted_exponent - target).abs() <= 0.05,
                    format!("slope {:.5} vs {target:.5}", fit.fitted_exponent),
                ),
                Err(e) => r.error("mixed run converges", e),
            }
            let c = t.effective_constants.with_theta_scaled(options.theta_scale);
            match check_bounds(&t, &c, &[BoundId::Corollary2, BoundId::Lemma3]) {
                Ok(recs) => recs.iter().for_each(|rec| r.record("mixed", rec)),
                Err(e) => r.error("mixed", e),
            }
        }
        Err(e) => r.error("mixed run", e),
    }
    r
}

/// Median final `F(x_N, x_N)` over `seeds` sampled runs from `x_1 = 0`.
pub fn stochastic_median(m0: usize, rate: f64, n: usize, seeds: u64) -> Result<f64> {
    let inst = with_noise(&counterexample(0.5), NoiseModel::uniform(1.0)?);
    let mut finals = Vec::with_capacity(seeds as usize);
    for seed in 0..seeds {
        let schedule = SamplingSchedule::new(m0, rate, seed)?;
        let t = run_stochastic(&inst, &LoopConfig::stochastic(n, 0.0, schedule))?;
        finals.push(t.final_self_value());
    }
    finals.sort_by(f64::total_cmp);
    let mid = finals.len() / 2;
    Ok(if finals.len() % 2 == 0 {
        0.5 * (finals[mid - 1] + finals[mid])
    } else {
        finals[mid]
    })
}

fn criterion_8(_: &SuiteOptions) -> CriterionReport {
    let mut r = CriterionReport::new(8);
    let n = 500;
    let medians = (|| -> Result<(f64, f64, f64)> {
        Ok((
            stochastic_median(25, 0.0, n, 20)?,
            stochastic_median(400, 0.0, n, 20)?,
            stochastic_median(25, 1.0, n, 20)?,
        ))
    })();
    match medians {
        Ok((m25, m400, m25r1)) => {
            r.check(
                "m0=400 vs m0=25",
                m400 <= 0.25 * m25,
                format!("medians {m400:e} vs {m25:e} (ratio {:.4})", m400 / m25),
            );
            r.check(
                "r=1 vs r=0",
                m25r1 <= 0.5 * m25,
                format!("medians {m25r1:e} vs {m25:e} (ratio {:.4})", m25r1 / m25),
            );
        }
        Err(e) => r.error("runs", e),
    }
    r
}

fn hygiene_instances() -> Result<Vec<(String, ProblemInstance)>> {
    let mut v = vec![
        ("counterexample(0.5)".to_string(), counterexample(0.5)),
        ("counterexample(10)".to_string(), counterexample(10.0)),
        (
            "affine(0.9)".to_string(),
            make_affine_quadratic(&affine_spec(0.9))?,
        ),
    ];
    for (label, spec) in imitation_settings() {
        v.push((format!("imitation({label})"), make_linear_imitation(&spec)?));
    }
    let base = counterexample(1.5);
    v.push((
        "weighted(1.5, R=x^2)".into(),
        crate::aggregation::apply_transformer(
            &base,
            &weighted(
                2.0,
                Regularizer::Quadratic {
                    center: vec![0.0],
                    modulus: 2.0,
                },
            ),
        )?,
    ));
    v.push((
        "mixed(1.5, q=0.7)".into(),
        crate::aggregation::apply_transformer(&base, &CostTransformer::Mixing { q: 0.7 })?,
    ));
    Ok(v)
}

fn gradient_check(inst: &ProblemInstance, probes: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let obj = inst.objective();
    let reference = inst.reference_box();
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let y = reference.sample(&mut rng);
        let x = reference.sample(&mut rng);
        let fd = finite_difference_gradient(|z| obj.value(&y, z), &x);
        worst = worst.max(relative_error(&obj.grad2(&y, &x), &fd));
    }
    worst
}

fn solver_agreement(inst: &ProblemInstance, x1: ParameterPoint, n: usize) -> Result<f64> {
    let trace = run_deterministic(inst, &LoopConfig::deterministic(n, x1))?;
    let domain = Domain::unbounded(inst.dimension());
    let mut agg = CostAggregate::new();
    let mut worst = 0.0f64;
    for x in &trace.iterates {
        agg.push(inst.freeze_cost(x)?)?;
        let closed = ftl_step_with(&agg, &domain, x, &SolverOptions::default())?;
        let iterative = ftl_step_with(
            &agg,
            &domain,
            x,
            &SolverOptions {
                force_iterative: true,
                ..SolverOptions::default()
            },
        )?;
        worst = worst.max(closed.minimizer.distance(&iterative.minimizer));
    }
    Ok(worst)
}

fn rerun_bytes() -> Result<(Vec<u8>, Vec<u8>)> {
    let inst = with_noise(&counterexample(0.5), NoiseModel::uniform(1.0)?);
    let cfg = LoopConfig::stochastic(200, 1.0, SamplingSchedule::new(5, 0.5, 42)?);
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_trace_csv(&run_stochastic(&inst, &cfg)?, &mut a).expect("in-memory write");
    write_trace_csv(&run_stochastic(&inst, &cfg)?, &mut b).expect("in-memory write");
    Ok((a, b))
}

fn criterion_9(_: &SuiteOptions) -> CriterionReport {
    let mut r = CriterionReport::new(9);
    match hygiene_instances() {
        Ok(list) => {
            for (label, inst) in &list {
                let worst = gradient_check(inst, 100, 11);
                r.check(
                    format!("{label}/gradient"),
                    worst <= 1e-6,
                    format!("max rel err {worst:e} over 100 probes"),
                );
            }
        }
        Err(e) => r.error("instances", e),
    }
    let solver_cases: Vec<(&str, Result<(ProblemInstance, ParameterPoint)>)> = vec![
        (
            "counterexample(0.5)",
            Ok((counterexample(0.5), ParameterPoint::scalar(1.0))),
        ),
        (
            "affine(0.9)",
            make_affine_quadratic(&affine_spec(0.9))
                .and_then(|i| Ok((i, ParameterPoint::new(vec![1.0, -0.5, 0.25])?))),
        ),
        (
            "imitation(A)",
            make_linear_imitation(&imitation_settings()[0].1)
                .map(|i| (i, ParameterPoint::scalar(0.9))),
        ),
    ];
    for (label, case) in solver_cases {
        match case.and_then(|(inst, x1)| solver_agreement(&inst, x1, 50)) {
            Ok(w) => r.check(
                format!("{label}/closed_vs_iterative"),
                w <= 1e-8,
                format!("max distance {w:e}"),
            ),
            Err(e) => r.error(label, e),
        }
    }
    match rerun_bytes() {
        Ok((a, b)) => r.check(
            "seeded rerun",
            a == b && !a.is_empty(),
            format!("{} bytes, identical: {}", a.len(), a == b),
        ),
        Err(e) => r.error("seeded rerun", e),
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recursion_oracle_matches_known_values() {
        assert_eq!(
            counterexample_recursion(10.0, 1.0, 4),
            vec![1.0, 10.0, 55.0, 220.0]
        );
        assert_eq!(counterexample_recursion(0.5, 1.0, 3), vec![1.0, 0.5, 0.375]);
    }

    #[test]
    fn filter_by_tag_and_number() {
        let only = vec!["thm2".to_string()];
        let ids: Vec<u32> = (1..=CRITERION_COUNT)
            .filter(|i| selected(*i, &only))
            .collect();
        assert!(ids.contains(&5));
        assert!(!ids.contains(&4));
        assert!(selected(9, &["9".into()]));
        assert!(!selected(8, &["9".into()]));
    }

    #[test]
    fn first_criterion_passes() {
        assert!(run_criterion(1, &SuiteOptions::default()).passed());
    }
}
