//! Concrete objectives: the two-stage counterexample, an affine-quadratic
//! family, a linear-dynamics imitation problem and a bounded-noise wrapper
//! that turns any of them into a sampled problem.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    norm, DeclaredConstants, Domain, Objective, ParameterPoint, PerRoundCost, ProblemInstance,
    Quadratic,
};

// ---------------------------------------------------------------------------
// Two-stage counterexample
// ---------------------------------------------------------------------------

/// `s₂ = θ a₁`, `c₂ = (s₂ − a₂)²`, open-loop policy `a₁ = a₂ = x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub theta: f64,
    /// Reference box `[-half_width, half_width]` used for `G₂`.
    pub half_width: f64,
}

impl CounterexampleSpec {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            half_width: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
struct Counterexample {
    theta: f64,
    reference: Domain,
}

impl Counterexample {
    fn bound(&self) -> f64 {
        self.reference.max_norm()
    }
}

impl Objective for Counterexample {
    fn label(&self) -> String {
        format!("counterexample(theta={})", self.theta)
    }

    fn dimension(&self) -> usize {
        1
    }

    fn value(&self, y: &[f64], x: &[f64]) -> f64 {
        let r = x[0] - self.theta * y[0];
        r * r
    }

    fn grad2(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        vec![2.0 * (x[0] - self.theta * y[0])]
    }

    fn quadratic_in_x(&self, y: &[f64]) -> Option<Quadratic> {
        Some(Quadratic::isotropic(2.0, &[self.theta * y[0]], 0.0))
    }

    fn smoothness(&self, _y: &[f64]) -> f64 {
        2.0
    }

    fn declared(&self) -> DeclaredConstants {
        DeclaredConstants {
            alpha: 2.0,
            beta: Some(2.0 * self.theta),
            g2: Some(2.0 * self.bound() * (1.0 + self.theta)),
            eps_tilde: Some(0.0),
        }
    }

    fn reference_box(&self) -> &Domain {
        &self.reference
    }

    fn expert(&self) -> Option<Vec<f64>> {
        Some(vec![0.0])
    }

    fn horizon(&self) -> usize {
        2
    }

    fn mixed(&self, q: f64) -> Option<Arc<dyn Objective>> {
        Some(Arc::new(ContractedObjective::new(
            Arc::new(self.clone()),
            q,
        )?))
    }

    fn value_bound(&self) -> Option<f64> {
        let m = self.bound() * (1.0 + self.theta);
        Some(m * m)
    }

    fn performance(&self, x: &[f64]) -> Option<f64> {
        Some((self.theta - 1.0).powi(2) * x[0] * x[0])
    }
}

pub fn make_counterexample(spec: &CounterexampleSpec) -> ProblemInstance {
    assert!(spec.theta >= 0.0, "theta must be nonnegative");
    assert!(spec.half_width > 0.0, "half_width must be positive");
    ProblemInstance::new(Counterexample {
        theta: spec.theta,
        reference: Domain::interval(-spec.half_width, spec.half_width).expect("valid interval"),
    })
}

/// Fallible variant of [`make_counterexample`].
pub fn try_make_counterexample(spec: &CounterexampleSpec) -> Result<ProblemInstance> {
    if !(spec.theta >= 0.0 && spec.theta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "theta",
            reason: format!("must be nonnegative, got {}", spec.theta),
        });
    }
    if !(spec.half_width > 0.0 && spec.half_width.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "half_width",
            reason: "must be positive".into(),
        });
    }
    Ok(make_counterexample(spec))
}

// ---------------------------------------------------------------------------
// Affine-quadratic family
// ---------------------------------------------------------------------------

/// `F(y, x) = (α/2) ‖x − M y − b‖² + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineQuadraticSpec {
    /// Row-major `d × d` matrix.
    pub m: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub alpha: f64,
    pub offset: f64,
    /// Time steps used when interpreting a mixing rate.
    pub horizon: usize,
    pub half_width: f64,
}

impl AffineQuadraticSpec {
    pub fn new(m: Vec<Vec<f64>>, b: Vec<f64>, alpha: f64) -> Self {
        Self {
            m,
            b,
            alpha,
            offset: 0.0,
            horizon: 1,
            half_width: 2.0,
        }
    }

    /// `M = scale · I` in dimension `d`, `b = 0`.
    pub fn scaled_identity(d: usize, scale: f64, alpha: f64) -> Self {
        let m = (0..d)
            .map(|i| (0..d).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect();
        Self::new(m, vec![0.0; d], alpha)
    }
}

#[derive(Debug, Clone)]
struct AffineQuadratic {
    m: DMatrix<f64>,
    b: DVector<f64>,
    alpha: f64,
    offset: f64,
    horizon: usize,
    op_norm: f64,
    reference: Domain,
}

impl AffineQuadratic {
    fn target(&self, y: &[f64]) -> DVector<f64> {
        &self.m * DVector::from_column_slice(y) + &self.b
    }

    fn gradient_bound(&self) -> f64 {
        let r = self.reference.max_norm();
        self.alpha * (r + self.op_norm * r + self.b.norm())
    }
}

impl Objective for AffineQuadratic {
    fn label(&self) -> String {
        format!(
            "affine_quadratic(d={}, |M|={:.6}, alpha={})",
            self.b.len(),
            self.op_norm,
            self.alpha
        )
    }

    fn dimension(&self) -> usize {
        self.b.len()
    }

    fn value(&self, y: &[f64], x: &[f64]) -> f64 {
        let r = DVector::from_column_slice(x) - self.target(y);
        0.5 * self.alpha * r.norm_squared() + self.offset
    }

    fn grad2(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        let r = DVector::from_column_slice(x) - self.target(y);
        (r * self.alpha).as_slice().to_vec()
    }

    fn quadratic_in_x(&self, y: &[f64]) -> Option<Quadratic> {
        Some(Quadratic::isotropic(
            self.alpha,
            self.target(y).as_slice(),
            self.offset,
        ))
    }

    fn smoothness(&self, _y: &[f64]) -> f64 {
        self.alpha
    }

    fn declared(&self) -> DeclaredConstants {
        DeclaredConstants {
            alpha: self.alpha,
            beta: Some(self.alpha * self.op_norm),
            g2: Some(self.gradient_bound()),
            eps_tilde: Some(self.offset),
        }
    }

    fn reference_box(&self) -> &Domain {
        &self.reference
    }

    fn expert(&self) -> Option<Vec<f64>> {
        let d = self.b.len();
        let lhs = DMatrix::identity(d, d) - &self.m;
        lhs.lu().solve(&self.b).map(|v| v.as_slice().to_vec())
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn mixed(&self, q: f64) -> Option<Arc<dyn Objective>> {
        Some(Arc::new(ContractedObjective::new(
            Arc::new(self.clone()),
            q,
        )?))
    }

    fn value_bound(&self) -> Option<f64> {
        let g = self.gradient_bound() / self.alpha;
        Some(0.5 * self.alpha * g * g + self.offset)
    }
}

pub fn make_affine_quadratic(spec: &AffineQuadraticSpec) -> Result<ProblemInstance> {
    let d = spec.m.len();
    if d == 0 || spec.m.iter().any(|row| row.len() != d) {
        return Err(Error::InvalidParameter {
            name: "M",
            reason: "matrix must be square and non-empty".into(),
        });
    }
    if spec.b.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: spec.b.len(),
        });
    }
    if !(spec.alpha > 0.0 && spec.alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive, got {}", spec.alpha),
        });
    }
    if !(spec.offset >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "offset",
            reason: "must be nonnegative".into(),
        });
    }
    if spec.horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least 1".into(),
        });
    }
    let flat: Vec<f64> = spec.m.iter().flatten().copied().collect();
    if flat.iter().chain(&spec.b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "M",
            reason: "entries must be finite".into(),
        });
    }
    let m = DMatrix::from_row_slice(d, d, &flat);
    let op_norm = operator_norm(&m);
    Ok(ProblemInstance::new(AffineQuadratic {
        m,
        b: DVector::from_column_slice(&spec.b),
        alpha: spec.alpha,
        offset: spec.offset,
        horizon: spec.horizon,
        op_norm,
        reference: Domain::cube(d, -spec.half_width, spec.half_width)?,
    }))
}

/// Largest singular value by power iteration on `MᵀM`, best of 10 seeded
/// restarts, stopped at relative eigen-residual 1e-12.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let d = gram.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best = 0.0f64;
    for _ in 0..10 {
        let mut v = DVector::from_fn(d, |_, _| rng.random::<f64>() - 0.5);
        let n = v.norm();
        if n == 0.0 {
            continue;
        }
        v /= n;
        let mut lambda = 0.0;
        for _ in 0..100_000 {
            let w = &gram * &v;
            lambda = v.dot(&w);
            let residual = (&w - &v * lambda).norm();
            let wn = w.norm();
            if wn == 0.0 {
                lambda = 0.0;
                break;
            }
            v = w / wn;
            if residual <= 1e-12 * lambda.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        best = best.max(lambda.max(0.0).sqrt());
    }
    best
}

// ---------------------------------------------------------------------------
// Linear-dynamics imitation problem
// ---------------------------------------------------------------------------

/// Scalar system `s_{t+1} = a s_t + a_b u_t` under linear policies `u = x s`,
/// imitating an expert gain `k_star` with squared action loss. The state
/// second moment is propagated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearImitationSpec {
    pub a: f64,
    pub a_b: f64,
    pub k_star: f64,
    pub sigma0_sq: f64,
    pub horizon: usize,
    pub gain_lo: f64,
    pub gain_hi: f64,
}

#[derive(Debug, Clone)]
struct LinearImitation {
    spec: LinearImitationSpec,
    mixing: f64,
    base_beta: f64,
    reference: Domain,
}

impl LinearImitation {
    fn closed_loop(&self, gain: f64) -> f64 {
        let g = self.spec.a + self.spec.a_b * gain;
        g * g
    }

    fn growth(&self, y: f64) -> f64 {
        let q = self.mixing;
        q * self.closed_loop(self.spec.k_star) + (1.0 - q) * self.closed_loop(y)
    }

    /// Second moments `m_0 .. m_{T-1}` under the (possibly mixed) policy `y`.
    pub(crate) fn moments(&self, y: f64) -> Vec<f64> {
        let rho = self.growth(y);
        let mut m = Vec::with_capacity(self.spec.horizon);
        let mut current = self.spec.sigma0_sq;
        for _ in 0..self.spec.horizon {
            m.push(current);
            current *= rho;
        }
        m
    }

    fn weight(&self, y: f64) -> f64 {
        self.moments(y).iter().sum()
    }

    fn max_gain_offset(&self) -> f64 {
        (self.spec.gain_lo - self.spec.k_star)
            .abs()
            .max((self.spec.gain_hi - self.spec.k_star).abs())
    }

    fn max_closed_loop_root(&self) -> f64 {
        let s = &self.spec;
        (s.a + s.a_b * s.gain_lo)
            .abs()
            .max((s.a + s.a_b * s.gain_hi).abs())
    }

    fn max_weight(&self) -> f64 {
        let u2 = self.max_closed_loop_root().powi(2);
        (0..self.spec.horizon)
            .map(|t| self.spec.sigma0_sq * u2.powi(t as i32))
            .sum()
    }

    /// `2 · max|x − k*| · sup_y |∂_y Σ m_t(y)|` for the unmixed problem.
    /// `|∂_y Σ m_t|` grows with `|a + a_b y|`, so the supremum sits at a box end.
    fn analytic_beta(&self) -> f64 {
        let s = &self.spec;
        let u = self.max_closed_loop_root();
        let deriv: f64 = (1..s.horizon)
            .map(|t| t as f64 * u.powi(2 * t as i32 - 1))
            .sum::<f64>()
            * 2.0
            * s.a_b.abs()
            * s.sigma0_sq;
        2.0 * self.max_gain_offset() * deriv
    }
}

impl Objective for LinearImitation {
    fn label(&self) -> String {
        let s = &self.spec;
        let mut l = format!(
            "linear_imitation(a={}, a_b={}, k*={}, T={})",
            s.a, s.a_b, s.k_star, s.horizon
        );
        if self.mixing > 0.0 {
            l.push_str(&format!(" mixed(q={})", self.mixing));
        }
        l
    }

    fn dimension(&self) -> usize {
        1
    }

    fn value(&self, y: &[f64], x: &[f64]) -> f64 {
        let e = x[0] - self.spec.k_star;
        self.weight(y[0]) * e * e
    }

    fn grad2(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        vec![2.0 * self.weight(y[0]) * (x[0] - self.spec.k_star)]
    }

    fn quadratic_in_x(&self, y: &[f64]) -> Option<Quadratic> {
        Some(Quadratic::isotropic(
            2.0 * self.weight(y[0]),
            &[self.spec.k_star],
            0.0,
        ))
    }

    fn smoothness(&self, y: &[f64]) -> f64 {
        2.0 * self.weight(y[0])
    }

    fn declared(&self) -> DeclaredConstants {
        let q_t = self.mixing.powi(self.spec.horizon as i32);
        DeclaredConstants {
            alpha: 2.0 * self.spec.sigma0_sq,
            beta: Some((1.0 - q_t) * self.base_beta),
            g2: Some(2.0 * self.max_weight() * self.max_gain_offset()),
            eps_tilde: Some(0.0),
        }
    }

    fn reference_box(&self) -> &Domain {
        &self.reference
    }

    fn expert(&self) -> Option<Vec<f64>> {
        Some(vec![self.spec.k_star])
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn mixed(&self, q: f64) -> Option<Arc<dyn Objective>> {
        if self.mixing != 0.0 || !(0.0..=1.0).contains(&q) {
            return None;
        }
        Some(Arc::new(Self {
            mixing: q,
            ..self.clone()
        }))
    }

    fn value_bound(&self) -> Option<f64> {
        let e = self.max_gain_offset();
        Some(self.max_weight() * e * e)
    }
}

pub fn make_linear_imitation(spec: &LinearImitationSpec) -> Result<ProblemInstance> {
    if !(spec.sigma0_sq > 0.0 && spec.sigma0_sq.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma0_sq",
            reason: "must be positive".into(),
        });
    }
    if spec.horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least 1".into(),
        });
    }
    if [spec.a, spec.a_b, spec.k_star]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err(Error::InvalidParameter {
            name: "dynamics",
            reason: "a, a_b and k_star must be finite".into(),
        });
    }
    let reference = Domain::interval(spec.gain_lo, spec.gain_hi)?;
    if !reference.is_bounded() {
        return Err(Error::UnboundedDomain("the imitation gain box"));
    }
    if !reference.contains(&[spec.k_star]) {
        return Err(Error::InvalidDomain(format!(
            "expert gain {} outside gain box [{}, {}]",
            spec.k_star, spec.gain_lo, spec.gain_hi
        )));
    }
    let mut inst = LinearImitation {
        spec: spec.clone(),
        mixing: 0.0,
        base_beta: 0.0,
        reference,
    };
    inst.base_beta = inst.analytic_beta();
    Ok(ProblemInstance::new(inst))
}

// ---------------------------------------------------------------------------
// Mixing by first-argument contraction (synthetic families)
// ---------------------------------------------------------------------------

/// `F̂(y, x) = F((1 − κ) y + κ y★, x)` with `κ = q^T`, which scales the
/// first-argument Lipschitz modulus by exactly `1 − q^T`.
#[derive(Debug, Clone)]
pub struct ContractedObjective {
    base: Arc<dyn Objective>,
    q: f64,
    kappa: f64,
    expert: Vec<f64>,
}

impl ContractedObjective {
    pub fn new(base: Arc<dyn Objective>, q: f64) -> Option<Self> {
        if !(0.0..=1.0).contains(&q) {
            return None;
        }
        let expert = base.expert()?;
        let kappa = q.powi(base.horizon() as i32);
        Some(Self {
            base,
            q,
            kappa,
            expert,
        })
    }

    fn shifted(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.expert)
            .map(|(yi, ei)| (1.0 - self.kappa) * yi + self.kappa * ei)
            .collect()
    }
}

impl Objective for ContractedObjective {
    fn label(&self) -> String {
        format!("{} mixed(q={})", self.base.label(), self.q)
    }

    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    fn value(&self, y: &[f64], x: &[f64]) -> f64 {
        self.base.value(&self.shifted(y), x)
    }

    fn grad2(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        self.base.grad2(&self.shifted(y), x)
    }

    fn quadratic_in_x(&self, y: &[f64]) -> Option<Quadratic> {
        self.base.quadratic_in_x(&self.shifted(y))
    }

    fn smoothness(&self, y: &[f64]) -> f64 {
        self.base.smoothness(&self.shifted(y))
    }

    fn declared(&self) -> DeclaredConstants {
        let d = self.base.declared();
        DeclaredConstants {
            beta: d.beta.map(|b| (1.0 - self.kappa) * b),
            ..d
        }
    }

    fn reference_box(&self) -> &Domain {
        self.base.reference_box()
    }

    fn expert(&self) -> Option<Vec<f64>> {
        Some(self.expert.clone())
    }

    fn horizon(&self) -> usize {
        self.base.horizon()
    }

    fn noise(&self) -> Option<&NoiseModel> {
        self.base.noise()
    }

    fn value_bound(&self) -> Option<f64> {
        self.base.value_bound()
    }

    fn performance(&self, x: &[f64]) -> Option<f64> {
        self.base.performance(x)
    }
}

// ---------------------------------------------------------------------------
// Bounded sampling noise
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Each coordinate uniform on `[-σ, σ]`.
    Uniform,
    /// Each coordinate `±σ` with probability one half.
    ScaledBernoulli,
    /// Unbounded; excluded from bound-checked runs.
    Gaussian,
}

/// Sampled cost `f(x; ω) = F(y, x) − α⟨ω, x⟩ + (α/2)‖ω‖²`.
///
/// The expectation over `ω` is `F(y, x)` plus a constant in `x`, and the
/// gradient perturbation `−αω` is bounded almost surely for the bounded kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn uniform(sigma: f64) -> Result<Self> {
        Self::bounded(NoiseKind::Uniform, sigma)
    }

    pub fn scaled_bernoulli(sigma: f64) -> Result<Self> {
        Self::bounded(NoiseKind::ScaledBernoulli, sigma)
    }

    /// Gaussian noise voids the almost-sure gradient bound.
    pub fn gaussian_unchecked(sigma: f64) -> Result<Self> {
        Self::validate(sigma)?;
        Ok(Self {
            kind: NoiseKind::Gaussian,
            sigma,
        })
    }

    fn bounded(kind: NoiseKind, sigma: f64) -> Result<Self> {
        Self::validate(sigma)?;
        Ok(Self { kind, sigma })
    }

    fn validate(sigma: f64) -> Result<()> {
        if sigma >= 0.0 && sigma.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be nonnegative, got {sigma}"),
            })
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.kind != NoiseKind::Gaussian
    }

    /// Almost-sure bound on `‖∇f(x; ω) − ∇₂F(y, x)‖`.
    pub fn gradient_noise_bound(&self, alpha: f64, dimension: usize) -> Option<f64> {
        self.is_bounded()
            .then(|| alpha * self.sigma * (dimension as f64).sqrt())
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self.kind {
            NoiseKind::Uniform => out
                .iter_mut()
                .for_each(|w| *w = self.sigma * (2.0 * rng.random::<f64>() - 1.0)),
            NoiseKind::ScaledBernoulli => out.iter_mut().for_each(|w| {
                *w = if rng.random_bool(0.5) {
                    self.sigma
                } else {
                    -self.sigma
                }
            }),
            NoiseKind::Gaussian => {
                let normal =
                    Normal::new(0.0, self.sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
                out.iter_mut().for_each(|w| *w = normal.sample(rng));
            }
        }
    }
}

#[derive(Debug, Clone)]
struct NoisyObjective {
    base: Arc<dyn Objective>,
    noise: NoiseModel,
}

impl Objective for NoisyObjective {
    fn label(&self) -> String {
        format!(
            "{} + {:?}(sigma={})",
            self.base.label(),
            self.noise.kind,
            self.noise.sigma
        )
    }

    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    fn value(&self, y: &[f64], x: &[f64]) -> f64 {
        self.base.value(y, x)
    }

    fn grad2(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        self.base.grad2(y, x)
    }

    fn quadratic_in_x(&self, y: &[f64]) -> Option<Quadratic> {
        self.base.quadratic_in_x(y)
    }

    fn smoothness(&self, y: &[f64]) -> f64 {
        self.base.smoothness(y)
    }

    fn declared(&self) -> DeclaredConstants {
        self.base.declared()
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

    fn mixed(&self, q: f64) -> Option<Arc<dyn Objective>> {
        let base = self.base.mixed(q)?;
        Some(Arc::new(NoisyObjective {
            base,
            noise: self.noise,
        }))
    }

    fn noise(&self) -> Option<&NoiseModel> {
        Some(&self.noise)
    }

    fn value_bound(&self) -> Option<f64> {
        self.base.value_bound()
    }

    fn performance(&self, x: &[f64]) -> Option<f64> {
        self.base.performance(x)
    }
}

/// Attach a sampler to an instance.
pub fn with_noise(instance: &ProblemInstance, noise: NoiseModel) -> ProblemInstance {
    ProblemInstance::new(NoisyObjective {
        base: Arc::clone(instance.objective()),
        noise,
    })
}

/// Average of `count` i.i.d. sampled costs anchored at `anchor`.
pub fn sample_cost(
    instance: &ProblemInstance,
    anchor: &ParameterPoint,
    count: usize,
    seed: u64,
) -> Result<PerRoundCost> {
    let noise = *instance
        .objective()
        .noise()
        .ok_or(Error::MissingCapability("sampler"))?;
    if count == 0 {
        return Err(Error::InvalidParameter {
            name: "count",
            reason: "must be at least 1".into(),
        });
    }
    let d = instance.dimension();
    if anchor.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: anchor.dimension(),
        });
    }
    let alpha = instance.objective().declared().alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = vec![0.0; d];
    let mut mean = vec![0.0; d];
    let mut mean_sq = 0.0;
    for _ in 0..count {
        noise.draw(&mut rng, &mut omega);
        mean.iter_mut().zip(&omega).for_each(|(m, w)| *m += w);
        mean_sq += norm(&omega).powi(2);
    }
    let inv = 1.0 / count as f64;
    let shift: Vec<f64> = mean.iter().map(|m| -alpha * m * inv).collect();
    let offset = 0.5 * alpha * mean_sq * inv;
    Ok(PerRoundCost::sampled(
        Arc::clone(instance.objective()),
        anchor.clone(),
        shift,
        offset,
        count,
    ))
}
