//! Decision set, the two-argument objective `F(y, x)` and frozen per-round costs.
//!
//! The first argument `y` fixes the state distribution (the policy that
//! generated the data), the second argument `x` is the policy being scored.
//! Freezing `y` at the current iterate gives the per-round cost that the
//! follow-the-leader core aggregates.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ftl::{self, CostAggregate};
use crate::instances::NoiseModel;

/// A point of the decision set: the policy parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint(Vec<f64>);

impl ParameterPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter {
                name: "coords",
                reason: "dimension must be at least 1".into(),
            });
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(coords))
    }

    /// One-dimensional point. Panics on a non-finite value.
    pub fn scalar(value: f64) -> Self {
        Self::new(vec![value]).expect("finite scalar")
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn distance(&self, other: &ParameterPoint) -> f64 {
        distance(&self.0, &other.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<f64> for ParameterPoint {
    fn from(value: f64) -> Self {
        Self::scalar(value)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// The norm on the decision set. Only Euclidean (self-dual) is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    Euclidean,
}

/// Box-shaped convex decision set. Bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    norm_kind: NormKind,
}

impl Domain {
    pub fn unbounded(dimension: usize) -> Self {
        assert!(dimension >= 1, "dimension must be positive");
        Self {
            lower: vec![f64::NEG_INFINITY; dimension],
            upper: vec![f64::INFINITY; dimension],
            norm_kind: NormKind::Euclidean,
        }
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::InvalidDomain(format!(
                    "bounds at coordinate {i} must satisfy lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            lower,
            upper,
            norm_kind: NormKind::Euclidean,
        })
    }

    /// The cube `[lo, hi]^dimension`.
    pub fn cube(dimension: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dimension], vec![hi; dimension])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::cube(1, lo, hi)
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn is_unconstrained(&self) -> bool {
        self.lower.iter().all(|v| *v == f64::NEG_INFINITY)
            && self.upper.iter().all(|v| *v == f64::INFINITY)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn check(&self, point: &ParameterPoint) -> Result<()> {
        let x = point.coords();
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: x.len(),
            });
        }
        for (index, (&value, (&lower, &upper))) in
            x.iter().zip(self.lower.iter().zip(&self.upper)).enumerate()
        {
            if value < lower || value > upper {
                return Err(Error::OutsideDomain {
                    index,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the box.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }

    /// Largest Euclidean norm attained on the box (infinite when unbounded).
    pub fn max_norm(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                let m = lo.abs().max(hi.abs());
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn diameter(&self) -> f64 {
        distance(&self.lower, &self.upper)
    }

    /// Vertices of a bounded box, `None` above 12 dimensions.
    pub fn corners(&self) -> Option<Vec<Vec<f64>>> {
        let d = self.dimension();
        if !self.is_bounded() || d > 12 {
            return None;
        }
        Some(
            (0..1usize << d)
                .map(|mask| {
                    (0..d)
                        .map(|i| {
                            if mask & (1 << i) == 0 {
                                self.lower[i]
                            } else {
                                self.upper[i]
                            }
                        })
                        .collect()
                })
                .collect(),
        )
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
            .collect()
    }
}

/// Constants governing the analysis of a problem.
///
/// `theta = beta / alpha` is the stability constant: below one the iterates
/// converge, above one they can diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub alpha: f64,
    pub beta: f64,
    pub g2: f64,
    pub eps_tilde: f64,
    pub theta: f64,
}

impl StructuralConstants {
    pub fn new(alpha: f64, beta: f64, g2: f64, eps_tilde: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be positive and finite, got {alpha}"),
            });
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must be nonnegative and finite, got {beta}"),
            });
        }
        if !(g2 > 0.0 && g2.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "g2",
                reason: format!("must be positive and finite, got {g2}"),
            });
        }
        if !eps_tilde.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eps_tilde",
                reason: "must be finite".into(),
            });
        }
        Ok(Self {
            alpha,
            beta,
            g2,
            eps_tilde,
            theta: beta / alpha,
        })
    }

    /// Same constants with `beta` (and hence `theta`) scaled by `factor`.
    pub fn with_theta_scaled(&self, factor: f64) -> Self {
        let beta = self.beta * factor;
        Self {
            beta,
            theta: beta / self.alpha,
            ..*self
        }
    }
}

/// Constants an objective states in closed form. Missing entries are
/// estimated by [`measure_constants`] on the reference box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeclaredConstants {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub g2: Option<f64>,
    pub eps_tilde: Option<f64>,
}

/// `f(x) = ½ xᵀ P x + qᵀ x + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl Quadratic {
    pub fn zero(dimension: usize) -> Self {
        Self {
            hessian: DMatrix::zeros(dimension, dimension),
            linear: DVector::zeros(dimension),
            constant: 0.0,
        }
    }

    /// `(weight / 2) ‖x − center‖² + offset`.
    pub fn isotropic(weight: f64, center: &[f64], offset: f64) -> Self {
        let d = center.len();
        let c = DVector::from_column_slice(center);
        Self {
            hessian: DMatrix::identity(d, d) * weight,
            linear: -(&c * weight),
            constant: 0.5 * weight * c.norm_squared() + offset,
        }
    }

    pub fn dimension(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        0.5 * v.dot(&(&self.hessian * &v)) + self.linear.dot(&v) + self.constant
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        (&self.hessian * v + &self.linear).as_slice().to_vec()
    }

    pub fn add_assign(&mut self, other: &Quadratic) {
        self.hessian += &other.hessian;
        self.linear += &other.linear;
        self.constant += other.constant;
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            hessian: &self.hessian * factor,
            linear: &self.linear * factor,
            constant: self.constant * factor,
        }
    }

    /// Unconstrained minimizer, `None` if the Hessian is not positive definite.
    pub fn minimizer(&self) -> Option<Vec<f64>> {
        let h = &self.hessian;
        let diagonal = (0..h.nrows()).all(|i| (0..h.ncols()).all(|j| i == j || h[(i, j)] == 0.0));
        if diagonal {
            // One division per coordinate keeps integer-valued recursions exact.
            return (0..h.nrows())
                .map(|i| (h[(i, i)] > 0.0).then(|| -self.linear[i] / h[(i, i)]))
                .collect();
        }
        let chol = self.hessian.clone().cholesky()?;
        Some(chol.solve(&(-&self.linear)).as_slice().to_vec())
    }
}

/// The two-argument objective `F(y, x)`.
///
/// Implementations must be strongly convex in `x` with modulus
/// `declared().alpha` and have an analytic gradient in `x`.
pub trait Objective: Send + Sync + fmt::Debug {
    fn label(&self) -> String;

    fn dimension(&self) -> usize;

    fn value(&self, y: &[f64], x: &[f64]) -> f64;

    /// Gradient in the second argument.
    fn grad2(&self, y: &[f64], x: &[f64]) -> Vec<f64>;

    /// `F(y, ·)` in canonical quadratic form, when it is one.
    fn quadratic_in_x(&self, _y: &[f64]) -> Option<Quadratic> {
        None
    }

    /// Upper bound on the curvature of `F(y, ·)`.
    fn smoothness(&self, y: &[f64]) -> f64;

    fn declared(&self) -> DeclaredConstants;

    /// Bounded box on which `G₂` (and the bound checks) are evaluated.
    fn reference_box(&self) -> &Domain;

    /// Parameter of the expert policy, when the instance has one.
    fn expert(&self) -> Option<Vec<f64>> {
        None
    }

    /// Number of time steps behind one evaluation of `F`.
    fn horizon(&self) -> usize {
        1
    }

    /// The problem seen under a fixed expert-mixing rate `q`.
    fn mixed(&self, _q: f64) -> Option<Arc<dyn Objective>> {
        None
    }

    fn noise(&self) -> Option<&NoiseModel> {
        None
    }

    /// Supremum of `F` over the reference box.
    fn value_bound(&self) -> Option<f64> {
        None
    }

    /// Task-level performance `J(x)`, when the instance defines one.
    fn performance(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// Shared handle to an objective.
#[derive(Debug, Clone)]
pub struct ProblemInstance(Arc<dyn Objective>);

impl ProblemInstance {
    pub fn new<O: Objective + 'static>(objective: O) -> Self {
        Self(Arc::new(objective))
    }

    pub fn from_arc(objective: Arc<dyn Objective>) -> Self {
        Self(objective)
    }

    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.0
    }

    pub fn label(&self) -> String {
        self.0.label()
    }

    pub fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn check_dim(&self, p: &ParameterPoint) -> Result<()> {
        if p.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: p.dimension(),
            });
        }
        Ok(())
    }

    pub fn evaluate_f(&self, y: &ParameterPoint, x: &ParameterPoint) -> Result<f64> {
        self.check_dim(y)?;
        self.check_dim(x)?;
        Ok(self.0.value(y.coords(), x.coords()))
    }

    pub fn grad2_f(&self, y: &ParameterPoint, x: &ParameterPoint) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        self.check_dim(x)?;
        Ok(self.0.grad2(y.coords(), x.coords()))
    }

    /// `F(x, x)`.
    pub fn self_value(&self, x: &ParameterPoint) -> Result<f64> {
        self.evaluate_f(x, x)
    }

    pub fn freeze_cost(&self, anchor: &ParameterPoint) -> Result<PerRoundCost> {
        self.check_dim(anchor)?;
        Ok(PerRoundCost {
            anchor: anchor.clone(),
            objective: Arc::clone(&self.0),
            linear_shift: None,
            offset: 0.0,
            sample_count: 0,
        })
    }

    pub fn reference_box(&self) -> &Domain {
        self.0.reference_box()
    }

    /// Constants used by every bound check: declared values, with any gap
    /// filled by measurement on the reference box.
    pub fn constants(&self) -> Result<StructuralConstants> {
        let d = self.0.declared();
        match (d.beta, d.g2, d.eps_tilde) {
            (Some(beta), Some(g2), Some(eps)) => StructuralConstants::new(d.alpha, beta, g2, eps),
            (beta, g2, eps) => {
                let measured = measure_constants(self, self.reference_box(), 400, 0)?;
                StructuralConstants::new(
                    d.alpha,
                    beta.unwrap_or(measured.beta),
                    g2.unwrap_or(measured.g2),
                    eps.unwrap_or(measured.eps_tilde),
                )
            }
        }
    }
}

/// The frozen cost `f(x) = F(anchor, x)`, optionally shifted by a linear
/// term coming from finite-sample noise.
#[derive(Debug, Clone)]
pub struct PerRoundCost {
    anchor: ParameterPoint,
    objective: Arc<dyn Objective>,
    linear_shift: Option<Vec<f64>>,
    offset: f64,
    sample_count: usize,
}

impl PerRoundCost {
    /// Finite-sample surrogate `F(anchor, x) + ⟨shift, x⟩ + offset`.
    pub(crate) fn sampled(
        objective: Arc<dyn Objective>,
        anchor: ParameterPoint,
        shift: Vec<f64>,
        offset: f64,
        sample_count: usize,
    ) -> Self {
        Self {
            anchor,
            objective,
            linear_shift: Some(shift),
            offset,
            sample_count,
        }
    }

    pub fn anchor(&self) -> &ParameterPoint {
        &self.anchor
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn dimension(&self) -> usize {
        self.anchor.dimension()
    }

    pub fn strong_convexity(&self) -> f64 {
        self.objective.declared().alpha
    }

    pub fn smoothness(&self) -> f64 {
        self.objective.smoothness(self.anchor.coords())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let base = self.objective.value(self.anchor.coords(), x);
        match &self.linear_shift {
            Some(s) => base + dot(s, x) + self.offset,
            None => base,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.objective.grad2(self.anchor.coords(), x);
        if let Some(s) = &self.linear_shift {
            g.iter_mut().zip(s).for_each(|(gi, si)| *gi += si);
        }
        g
    }

    pub fn quadratic(&self) -> Option<Quadratic> {
        let mut q = self.objective.quadratic_in_x(self.anchor.coords())?;
        if let Some(s) = &self.linear_shift {
            q.linear += DVector::from_column_slice(s);
            q.constant += self.offset;
        }
        Some(q)
    }
}

/// Central finite-difference gradient with step `1e-5·max(1, ‖x‖)`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-5 * norm(x).max(1.0);
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error `‖a − b‖ / max(1, ‖b‖)` used by the gradient checks.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    distance(a, b) / norm(b).max(1.0)
}

/// Empirical estimate of the structural constants over a bounded box.
///
/// `beta` is the largest observed `‖∇₂F(y,z) − ∇₂F(y′,z)‖ / ‖y − y′‖`, `g2`
/// the largest `‖∇₂F(y,x)‖` (box corners included in low dimension), `alpha`
/// the smallest curvature along random segments and `eps_tilde` the largest
/// `min_x F(y, x)` over sampled `y`. Sampled suprema underestimate.
pub fn measure_constants(
    instance: &ProblemInstance,
    domain: &Domain,
    probes: usize,
    seed: u64,
) -> Result<StructuralConstants> {
    if !domain.is_bounded() {
        return Err(Error::UnboundedDomain("constant measurement"));
    }
    if domain.dimension() != instance.dimension() {
        return Err(Error::DimensionMismatch {
            expected: instance.dimension(),
            actual: domain.dimension(),
        });
    }
    if probes < 2 {
        return Err(Error::InvalidParameter {
            name: "probes",
            reason: "need at least 2".into(),
        });
    }
    let obj = instance.objective();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corners = domain.corners().filter(|c| c.len() <= 64);
    let pick = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        match &corners {
            Some(c) if rng.random_bool(0.25) => c[rng.random_range(0..c.len())].clone(),
            _ => domain.sample(rng),
        }
    };
    let diam = domain.diameter();

    let mut beta = 0.0f64;
    for _ in 0..probes {
        let z = pick(&mut rng);
        let y = pick(&mut rng);
        let y2 = if rng.random_bool(0.5) {
            domain.sample(&mut rng)
        } else {
            let step = 1e-3 * diam * (0.5 + 0.5 * rng.random::<f64>());
            let dir: Vec<f64> = (0..y.len()).map(|_| rng.random::<f64>() - 0.5).collect();
            let n = norm(&dir).max(f64::MIN_POSITIVE);
            let moved: Vec<f64> = y.iter().zip(&dir).map(|(a, b)| a + step * b / n).collect();
            domain.project(&moved)
        };
        let dy = distance(&y, &y2);
        if dy > 0.0 {
            let g1 = obj.grad2(&y, &z);
            let g2 = obj.grad2(&y2, &z);
            beta = beta.max(distance(&g1, &g2) / dy);
        }
    }

    let mut g2 = 0.0f64;
    for _ in 0..probes {
        let y = pick(&mut rng);
        let x = pick(&mut rng);
        g2 = g2.max(norm(&obj.grad2(&y, &x)));
    }
    if let Some(c) = &corners {
        if c.len() <= 16 {
            for y in c {
                for x in c {
                    g2 = g2.max(norm(&obj.grad2(y, x)));
                }
            }
        }
    }

    let mut alpha = f64::INFINITY;
    for _ in 0..probes {
        let y = domain.sample(&mut rng);
        let x1 = domain.sample(&mut rng);
        let x2 = domain.sample(&mut rng);
        let dx = distance(&x1, &x2);
        if dx > 0.0 {
            let ga = obj.grad2(&y, &x1);
            let gb = obj.grad2(&y, &x2);
            let diff: Vec<f64> = ga.iter().zip(&gb).map(|(a, b)| a - b).collect();
            let step: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a - b).collect();
            alpha = alpha.min(dot(&diff, &step) / (dx * dx));
        }
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidDomain("degenerate probe box".into()));
    }

    let unbounded = Domain::unbounded(domain.dimension());
    let mut eps_tilde = f64::NEG_INFINITY;
    for _ in 0..probes.min(50) {
        let y = ParameterPoint::new(pick(&mut rng))?;
        let mut agg = CostAggregate::new();
        agg.push(instance.freeze_cost(&y)?)?;
        let report = ftl::ftl_step(&agg, &unbounded, &y, ftl::DEFAULT_TOL_INNER)?;
        eps_tilde = eps_tilde.max(report.value);
    }

    StructuralConstants::new(alpha, beta, g2.max(f64::MIN_POSITIVE), eps_tilde)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_point_rejects_non_finite() {
        assert!(matches!(
            ParameterPoint::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(ParameterPoint::new(vec![]).is_err());
    }

    #[test]
    fn domain_validation_and_projection() {
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::interval(2.0, 1.0).is_err());
        let d = Domain::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(d.project(&[3.0, -0.5]), vec![1.0, -0.5]);
        assert!(d.contains(&[1.0, -1.0]));
        assert!(d
            .check(&ParameterPoint::new(vec![1.5, 0.0]).unwrap())
            .is_err());
        assert_eq!(d.corners().unwrap().len(), 4);
        assert!(Domain::unbounded(2).is_unconstrained());
        assert!(Domain::unbounded(2).corners().is_none());
    }

    #[test]
    fn theta_is_ratio() {
        let c = StructuralConstants::new(2.0, 3.0, 1.0, 0.0).unwrap();
        assert_eq!(c.theta, 1.5);
        assert!(StructuralConstants::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(StructuralConstants::new(1.0, -1.0, 1.0, 0.0).is_err());
        assert_eq!(c.with_theta_scaled(0.5).theta, 0.75);
    }

    #[test]
    fn isotropic_quadratic_minimizer() {
        let q = Quadratic::isotropic(2.0, &[1.0, -3.0], 0.5);
        let m = q.minimizer().unwrap();
        assert!((m[0] - 1.0).abs() < 1e-14 && (m[1] + 3.0).abs() < 1e-14);
        assert!((q.value(&m) - 0.5).abs() < 1e-14);
        assert!(Quadratic::zero(2).minimizer().is_none());
    }

    #[test]
    fn measure_rejects_unbounded_box() {
        let inst =
            crate::instances::make_counterexample(&crate::instances::CounterexampleSpec::new(0.5));
        assert!(matches!(
            measure_constants(&inst, &Domain::unbounded(1), 10, 0),
            Err(Error::UnboundedDomain(_))
        ));
    }
}
