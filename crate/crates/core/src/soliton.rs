//! Rigid gradient Schouten solitons `R^{n-k} x N^k` with an Einstein space
//! form fiber and quadratic potential on the Euclidean factor.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::curvature::max_abs;
use crate::geometry::diff::{central_diff, step_for};
use crate::geometry::sampling::product_points;
use crate::geometry::{
    curvature_numeric, CurvatureSample, FdConfig, MetricField, ProductChart, ScalarField, SpaceForm,
    SpaceFormChart,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberKind {
    Trivial,
    Sphere,
    Hyperbolic,
}

impl FiberKind {
    /// Fiber compatible with `k` and the sign of `lambda`.
    pub fn for_parameters(k: usize, lambda: f64) -> Self {
        if k == 0 {
            FiberKind::Trivial
        } else if lambda > 0.0 {
            FiberKind::Sphere
        } else {
            FiberKind::Hyperbolic
        }
    }
}

/// Dimension data `(n, k, lambda)` and fiber model of a rigid soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonSpec {
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub fiber: FiberKind,
}

impl SolitonSpec {
    pub fn new(n: usize, k: usize, lambda: f64, fiber: FiberKind) -> Result<Self> {
        let spec = SolitonSpec { n, k, lambda, fiber };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with the fiber chosen from `k` and the sign of `lambda`.
    pub fn canonical(n: usize, k: usize, lambda: f64) -> Result<Self> {
        Self::new(n, k, lambda, FiberKind::for_parameters(k, lambda))
    }

    pub fn validate(&self) -> Result<()> {
        let SolitonSpec { n, k, lambda, fiber } = *self;
        if n < 3 {
            return Err(Error::InvalidSpec(format!("n = {n}: dimension must be at least 3")));
        }
        if k > n {
            return Err(Error::InvalidSpec(format!("k = {k} exceeds n = {n}")));
        }
        if !lambda.is_finite() || lambda == 0.0 {
            return Err(Error::InvalidSpec(format!("lambda = {lambda}: must be finite and nonzero")));
        }
        if 2 * (n - 1) <= k {
            return Err(Error::InvalidSpec(format!("2(n-1) - k = {} must be positive", 2 * (n - 1) as i64 - k as i64)));
        }
        if k == 1 {
            return Err(Error::UnsupportedFiber(
                "k = 1 excluded: a one-dimensional fiber is flat, so R_N = 0 cannot equal 2(n-1)k lambda/(2(n-1)-k) != 0"
                    .into(),
            ));
        }
        match (fiber, k == 0) {
            (FiberKind::Trivial, true) => {}
            (FiberKind::Trivial, false) => {
                return Err(Error::InvalidSpec(format!("trivial fiber requires k = 0, got k = {k}")))
            }
            (_, true) => return Err(Error::InvalidSpec("k = 0 requires the trivial fiber".into())),
            (FiberKind::Sphere, false) if lambda < 0.0 => {
                return Err(Error::InvalidSpec("sphere fiber requires lambda > 0".into()))
            }
            (FiberKind::Hyperbolic, false) if lambda > 0.0 => {
                return Err(Error::InvalidSpec("hyperbolic fiber requires lambda < 0".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn nonconstant_potential(&self) -> bool {
        self.k < self.n
    }
}

/// Scalar curvature of the fiber and, when curved, its radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberCurvature {
    pub scalar: f64,
    pub radius: Option<f64>,
}

/// `R_N = 2(n-1) k lambda / (2(n-1) - k)` and the space form radius with
/// `k(k-1)/a^2 = |R_N|`.
pub fn fiber_scalar_curvature(n: usize, k: usize, lambda: f64) -> Result<FiberCurvature> {
    let denom = 2.0 * (n as f64 - 1.0) - k as f64;
    if denom == 0.0 {
        return Err(Error::InvalidSpec(format!("2(n-1) = k = {k}: fiber curvature undefined")));
    }
    if k == 1 && lambda != 0.0 {
        return Err(Error::UnsupportedFiber("k = 1 with nonzero lambda has no Einstein fiber".into()));
    }
    let scalar = 2.0 * (n as f64 - 1.0) * k as f64 * lambda / denom;
    let radius = if k >= 2 && scalar != 0.0 {
        Some((k as f64 * (k as f64 - 1.0) / scalar.abs()).sqrt())
    } else {
        None
    };
    Ok(FiberCurvature { scalar, radius })
}

/// `f(x, p) = coeff * |x|^2` on the first `flat_dim` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPotential {
    pub flat_dim: usize,
    pub coeff: f64,
}

impl ScalarField for QuadraticPotential {
    fn value(&self, x: &[f64]) -> f64 {
        self.coeff * x[..self.flat_dim].iter().map(|v| v * v).sum::<f64>()
    }

    fn partials(&self, x: &[f64], _h: f64) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| if i < self.flat_dim { 2.0 * self.coeff * x[i] } else { 0.0 })
    }

    fn second_partials(&self, x: &[f64], _h: f64) -> DMatrix<f64> {
        let n = x.len();
        DMatrix::from_fn(n, n, |i, j| if i == j && i < self.flat_dim { 2.0 * self.coeff } else { 0.0 })
    }
}

/// A rigid soliton realized in a product chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldModel {
    pub spec: SolitonSpec,
    pub flat_dim: usize,
    pub fiber_radius: Option<f64>,
    pub chart: ProductChart,
    pub potential: QuadraticPotential,
    pub f0: f64,
    pub scalar_r: f64,
    pub b_slope: f64,
}

pub fn build_soliton(spec: SolitonSpec) -> Result<ManifoldModel> {
    spec.validate()?;
    let SolitonSpec { n, k, lambda, .. } = spec;
    let fc = fiber_scalar_curvature(n, k, lambda)?;
    let form = match (spec.fiber, fc.radius) {
        (FiberKind::Trivial, _) => SpaceForm::Flat,
        (FiberKind::Sphere, Some(radius)) => SpaceForm::Sphere { radius },
        (FiberKind::Hyperbolic, Some(radius)) => SpaceForm::Hyperbolic { radius },
        (_, None) => return Err(Error::UnsupportedFiber(format!("no curved fiber for k = {k}"))),
    };
    let m = n - k;
    let nm1 = n as f64 - 1.0;
    let lambda_tilde = fc.scalar / (2.0 * nm1) + lambda;
    Ok(ManifoldModel {
        spec,
        flat_dim: m,
        fiber_radius: fc.radius,
        chart: ProductChart::new(m, SpaceFormChart::new(form, k)),
        potential: QuadraticPotential { flat_dim: m, coeff: 0.5 * lambda_tilde },
        f0: 0.0,
        scalar_r: fc.scalar,
        b_slope: fc.scalar / nm1 + 2.0 * lambda,
    })
}

impl ManifoldModel {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }

    /// `R / (2(n-1)) + lambda`, the Ricci soliton constant of the model.
    pub fn lambda_tilde(&self) -> f64 {
        self.scalar_r / (2.0 * (self.n() as f64 - 1.0)) + self.lambda()
    }

    /// `4(n-1) lambda / (2(n-1) - k)`; agrees with `b_slope`.
    pub fn b_slope_closed_form(&self) -> f64 {
        let nm1 = self.n() as f64 - 1.0;
        4.0 * nm1 * self.lambda() / (2.0 * nm1 - self.k() as f64)
    }

    pub fn fiber_form(&self) -> SpaceForm {
        self.chart.fiber.form
    }

    pub fn nonconstant_potential(&self) -> bool {
        self.spec.nonconstant_potential()
    }

    pub(crate) fn require_nonconstant(&self, what: &'static str) -> Result<()> {
        if self.nonconstant_potential() {
            Ok(())
        } else {
            Err(Error::ConstantPotential(what))
        }
    }

    /// Origin of the Euclidean factor times the fiber chart center.
    pub fn base_point(&self) -> Vec<f64> {
        vec![0.0; self.n()]
    }

    pub fn f(&self, p: &[f64]) -> f64 {
        self.potential.value(p)
    }

    /// `|grad f|^2` from the closed-form gradient (the flat block of `g` is the identity).
    pub fn gradnorm_sq(&self, p: &[f64]) -> f64 {
        let c = self.potential.coeff;
        4.0 * c * c * p[..self.flat_dim].iter().map(|v| v * v).sum::<f64>()
    }

    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        self.chart.distance(p, q)
    }

    /// Chart radius used for sampling fiber coordinates, well inside the chart.
    pub fn fiber_sampling_radius(&self) -> f64 {
        match self.fiber_form() {
            SpaceForm::Flat => 0.0,
            SpaceForm::Sphere { radius } => 2.0 * radius,
            SpaceForm::Hyperbolic { radius } => 0.75 * radius,
        }
    }

    /// Deterministic sample points: flat coordinates in a ball of radius
    /// `flat_radius`, fiber coordinates in the sampling ball of the chart.
    pub fn sample_points(&self, count: usize, flat_radius: f64, seed: u64) -> Vec<Vec<f64>> {
        product_points(self.flat_dim, flat_radius, self.k(), self.fiber_sampling_radius(), count, seed)
    }

    pub fn curvature(&self, p: &[f64], fd: FdConfig) -> Result<CurvatureSample> {
        curvature_numeric(&self.chart, &self.potential, p, fd)
    }
}

/// `||Ric + Hess f - (rho R + lambda) g||_inf` for an already computed sample.
pub fn equation_residual(sample: &CurvatureSample, rho: f64, lambda: f64) -> f64 {
    let rhs = &sample.metric * (rho * sample.scalar + lambda);
    max_abs(&(&sample.ricci + &sample.hess_f - rhs))
}

/// Residual of the Schouten soliton equation at `p`.
pub fn soliton_residual(model: &ManifoldModel, p: &[f64], fd: FdConfig) -> Result<f64> {
    let rho = 1.0 / (2.0 * (model.n() as f64 - 1.0));
    Ok(equation_residual(&model.curvature(p, fd)?, rho, model.lambda()))
}

/// Residual of `Ric + Hess f = (rho R + lambda) g` at `p` for arbitrary `rho`.
pub fn rho_einstein_residual(model: &ManifoldModel, p: &[f64], rho: f64, fd: FdConfig) -> Result<f64> {
    Ok(equation_residual(&model.curvature(p, fd)?, rho, model.lambda()))
}

/// Worst Schouten residual and worst Ricci/Hessian asymmetry over `points`.
pub fn max_soliton_residual(model: &ManifoldModel, points: &[Vec<f64>], fd: FdConfig) -> Result<(f64, f64)> {
    let rho = 1.0 / (2.0 * (model.n() as f64 - 1.0));
    let per_point: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| {
            let s = model.curvature(p, fd)?;
            Ok((equation_residual(&s, rho, model.lambda()), s.ricci_asymmetry().max(s.hessian_asymmetry())))
        })
        .collect::<Result<_>>()?;
    Ok(per_point.iter().fold((0.0f64, 0.0f64), |(a, b), (r, s)| (a.max(*r), b.max(*s))))
}

/// Both sides of the pointwise soliton identities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointIdentities {
    pub laplacian_f: f64,
    /// `n lambda - (n-2) R / (2(n-1))`
    pub trace_rhs: f64,
    /// `max_a |Ric(grad f, e_a)|` over a `g`-orthonormal frame.
    pub ricci_gradient: f64,
    /// `<grad f, grad R> + (R/(n-1) + 2 lambda) R`
    pub scalar_lhs: f64,
    /// `2 |Ric|^2`
    pub scalar_rhs: f64,
    /// `R + |grad f|^2 - 2 lambda_tilde f`
    pub hamilton: f64,
}

impl PointIdentities {
    pub fn trace_residual(&self) -> f64 {
        (self.laplacian_f - self.trace_rhs).abs()
    }

    pub fn scalar_residual(&self) -> f64 {
        (self.scalar_lhs - self.scalar_rhs).abs()
    }
}

pub fn pointwise_identities(model: &ManifoldModel, p: &[f64], fd: FdConfig) -> Result<PointIdentities> {
    let n = model.n();
    let nm1 = n as f64 - 1.0;
    let lambda = model.lambda();
    let s = model.curvature(p, fd)?;

    // outer derivative of R uses a wider step than the inner stencils
    let outer: Vec<f64> = p.iter().map(|&x| 10.0 * step_for(fd.step, x)).collect();
    let reach = outer.iter().cloned().fold(0.0, f64::max) + fd.margin(p);
    if !model.chart.contains(p, reach) {
        return Err(Error::ChartBounds { point: p.to_vec(), margin: reach });
    }
    let mut d_scalar = DVector::zeros(n);
    for j in 0..n {
        let d = central_diff(
            |t| {
                let mut y = p.to_vec();
                y[j] += t;
                vec![model.curvature(&y, fd).map(|c| c.scalar).unwrap_or(f64::NAN)]
            },
            outer[j],
            true,
        );
        d_scalar[j] = d[0];
    }
    if d_scalar.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateMetric { point: p.to_vec() });
    }

    let laplacian_f = s.trace(&s.hess_f);
    let trace_rhs = n as f64 * lambda - (n as f64 - 2.0) / (2.0 * nm1) * s.scalar;

    let ric_grad = &s.ricci * &s.grad_f;
    let chol = s.metric.clone().cholesky().ok_or_else(|| Error::DegenerateMetric { point: p.to_vec() })?;
    let frame_components = chol
        .l()
        .solve_lower_triangular(&ric_grad)
        .ok_or_else(|| Error::DegenerateMetric { point: p.to_vec() })?;
    let ricci_gradient = frame_components.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let scalar_lhs = s.grad_f.dot(&d_scalar) + (s.scalar / nm1 + 2.0 * lambda) * s.scalar;
    let scalar_rhs = 2.0 * s.ricci_norm_sq;
    let lambda_tilde = s.scalar / (2.0 * nm1) + lambda;
    let hamilton = s.scalar + s.grad_f_norm_sq - 2.0 * lambda_tilde * model.f(p);

    Ok(PointIdentities { laplacian_f, trace_rhs, ricci_gradient, scalar_lhs, scalar_rhs, hamilton })
}

/// Worst residual of each identity over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IdentityResiduals {
    pub trace: f64,
    pub ricci_gradient: f64,
    pub scalar_identity: f64,
    /// `max - min` of the Hamilton quantity over the samples.
    pub hamilton_spread: f64,
}

impl IdentityResiduals {
    pub fn worst(&self) -> f64 {
        self.trace.max(self.ricci_gradient).max(self.scalar_identity).max(self.hamilton_spread)
    }
}

pub fn structural_identity_residuals(
    model: &ManifoldModel,
    points: &[Vec<f64>],
    fd: FdConfig,
) -> Result<IdentityResiduals> {
    let per_point: Vec<PointIdentities> =
        points.par_iter().map(|p| pointwise_identities(model, p, fd)).collect::<Result<_>>()?;
    let mut out = IdentityResiduals::default();
    let (mut hmin, mut hmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for id in &per_point {
        out.trace = out.trace.max(id.trace_residual());
        out.ricci_gradient = out.ricci_gradient.max(id.ricci_gradient);
        out.scalar_identity = out.scalar_identity.max(id.scalar_residual());
        hmin = hmin.min(id.hamilton);
        hmax = hmax.max(id.hamilton);
    }
    if !per_point.is_empty() {
        out.hamilton_spread = hmax - hmin;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_curvature_values() {
        let fc = fiber_scalar_curvature(4, 2, 0.5).unwrap();
        assert!((fc.scalar - 1.5).abs() < 1e-15);
        assert!((fc.radius.unwrap().powi(2) - 4.0 / 3.0).abs() < 1e-14);
        let fc = fiber_scalar_curvature(3, 2, 1.0).unwrap();
        assert_eq!(fc.scalar, 4.0);
        assert!((fc.radius.unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let fc = fiber_scalar_curvature(5, 0, -2.0).unwrap();
        assert_eq!(fc.scalar, 0.0);
        assert_eq!(fc.radius, None);
        assert!(matches!(fiber_scalar_curvature(4, 1, 1.0), Err(Error::UnsupportedFiber(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(SolitonSpec::canonical(4, 2, 0.5).is_ok());
        assert!(matches!(SolitonSpec::canonical(4, 1, 1.0), Err(Error::UnsupportedFiber(_))));
        assert!(SolitonSpec::canonical(2, 0, 1.0).is_err());
        assert!(SolitonSpec::canonical(4, 5, 1.0).is_err());
        assert!(SolitonSpec::canonical(4, 2, 0.0).is_err());
        assert!(SolitonSpec::new(4, 2, 0.5, FiberKind::Hyperbolic).is_err());
        assert!(SolitonSpec::new(4, 2, -0.5, FiberKind::Sphere).is_err());
        assert!(SolitonSpec::new(4, 0, 0.5, FiberKind::Sphere).is_err());
        assert!(SolitonSpec::new(4, 2, 0.5, FiberKind::Trivial).is_err());
        let einstein = SolitonSpec::canonical(4, 4, 1.0).unwrap();
        assert!(!einstein.nonconstant_potential());
        assert!(SolitonSpec::canonical(4, 3, 1.0).unwrap().nonconstant_potential());
    }

    #[test]
    fn built_models() {
        let m = build_soliton(SolitonSpec::canonical(4, 2, 0.5).unwrap()).unwrap();
        assert!((m.potential.coeff - 0.375).abs() < 1e-15);
        assert!((m.scalar_r - 1.5).abs() < 1e-15);
        assert!((m.b_slope - 1.5).abs() < 1e-15);

        let m = build_soliton(SolitonSpec::canonical(3, 0, 1.0).unwrap()).unwrap();
        assert_eq!(m.potential.coeff, 0.5);
        assert_eq!(m.scalar_r, 0.0);
        assert_eq!(m.b_slope, 2.0);

        let m = build_soliton(SolitonSpec::canonical(4, 2, -0.5).unwrap()).unwrap();
        assert!((m.potential.coeff + 0.375).abs() < 1e-15);
        assert!((m.b_slope + 1.5).abs() < 1e-15);
        assert_eq!(m.f(&m.base_point()), 0.0);
        assert!(m.f(&[0.5, 0.0, 0.1, 0.1]) < 0.0);
    }

    #[test]
    fn flat_model_residuals_vanish() {
        let m = build_soliton(SolitonSpec::canonical(3, 0, 1.0).unwrap()).unwrap();
        let p = [0.4, -1.1, 2.0];
        assert!(soliton_residual(&m, &p, FdConfig::default()).unwrap() < 1e-10);
        let id = pointwise_identities(&m, &p, FdConfig::default()).unwrap();
        assert!(id.trace_residual() < 1e-10);
        assert!(id.ricci_gradient < 1e-10);
        assert!(id.scalar_residual() < 1e-10);
    }

    #[test]
    fn hand_values_on_4_2_half() {
        let m = build_soliton(SolitonSpec::canonical(4, 2, 0.5).unwrap()).unwrap();
        let p = [0.7, -0.3, 0.4, 0.2];
        let id = pointwise_identities(&m, &p, FdConfig::default()).unwrap();
        assert!((id.laplacian_f - 1.5).abs() < 1e-6, "{}", id.laplacian_f);
        assert!((id.trace_rhs - 1.5).abs() < 1e-6);
        assert!((id.scalar_lhs - 2.25).abs() < 1e-6, "{}", id.scalar_lhs);
        assert!((id.scalar_rhs - 2.25).abs() < 1e-6, "{}", id.scalar_rhs);
        assert!(soliton_residual(&m, &p, FdConfig::default()).unwrap() < 1e-6);
        assert!(rho_einstein_residual(&m, &p, 0.0, FdConfig::default()).unwrap() >= 0.2);
    }
}
