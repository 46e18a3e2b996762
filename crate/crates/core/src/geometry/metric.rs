//! Chart metrics: space forms in conformally flat charts and their Riemannian
//! products with a Euclidean factor.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A Riemannian metric written in a single chart.
///
/// `components(x)` must be symmetric positive definite wherever `contains`
/// accepts `x`, and must be a pure function of `x`.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;

    fn components(&self, x: &[f64]) -> DMatrix<f64>;

    /// Whether the closed ball of radius `margin` around `x` lies in the chart.
    fn contains(&self, x: &[f64], margin: f64) -> bool;
}

/// Complete simply connected space forms of constant curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceForm {
    Flat,
    Sphere { radius: f64 },
    Hyperbolic { radius: f64 },
}

impl SpaceForm {
    /// Sectional curvature: 0, 1/a^2 or -1/a^2.
    pub fn sectional_curvature(&self) -> f64 {
        match *self {
            SpaceForm::Flat => 0.0,
            SpaceForm::Sphere { radius } => 1.0 / (radius * radius),
            SpaceForm::Hyperbolic { radius } => -1.0 / (radius * radius),
        }
    }

    /// Radius of the coordinate ball on which the chart is used.
    ///
    /// Sphere: stereographic projection from the north pole, restricted to
    /// `|u| < 3a`. Hyperbolic: Poincare ball of radius `a`, restricted to
    /// `|u| < 0.9a`.
    pub fn chart_radius(&self) -> f64 {
        match *self {
            SpaceForm::Flat => f64::INFINITY,
            SpaceForm::Sphere { radius } => 3.0 * radius,
            SpaceForm::Hyperbolic { radius } => 0.9 * radius,
        }
    }

    /// Conformal factor `e^{2 phi}` with `g = e^{2 phi} delta` in the chart.
    pub fn conformal_factor(&self, u: &[f64]) -> f64 {
        let r2 = norm_sq(u);
        match *self {
            SpaceForm::Flat => 1.0,
            SpaceForm::Sphere { radius } => {
                let a2 = radius * radius;
                4.0 * a2 * a2 / ((a2 + r2) * (a2 + r2))
            }
            SpaceForm::Hyperbolic { radius } => {
                let a2 = radius * radius;
                4.0 * a2 * a2 / ((a2 - r2) * (a2 - r2))
            }
        }
    }

    /// Gradient of `phi = ln(e^{2 phi}) / 2` in chart coordinates.
    pub fn log_factor_gradient(&self, u: &[f64]) -> Vec<f64> {
        let r2 = norm_sq(u);
        match *self {
            SpaceForm::Flat => vec![0.0; u.len()],
            SpaceForm::Sphere { radius } => {
                let d = radius * radius + r2;
                u.iter().map(|ui| -2.0 * ui / d).collect()
            }
            SpaceForm::Hyperbolic { radius } => {
                let d = radius * radius - r2;
                u.iter().map(|ui| 2.0 * ui / d).collect()
            }
        }
    }

    /// Geodesic distance between two chart points.
    pub fn distance(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            SpaceForm::Flat => dist(u, v),
            SpaceForm::Sphere { radius } => {
                let p = stereographic_lift(u, radius);
                let q = stereographic_lift(v, radius);
                let diff: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let sum: f64 = p.iter().zip(&q).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
                2.0 * radius * diff.atan2(sum)
            }
            SpaceForm::Hyperbolic { radius } => {
                let a2 = radius * radius;
                let num = 2.0 * a2 * dist_sq(u, v);
                let den = (a2 - norm_sq(u)) * (a2 - norm_sq(v));
                radius * (1.0 + num / den).acosh()
            }
        }
    }

    /// Chart radius `|u|` of the point at geodesic distance `rho` from `u = 0`.
    pub fn chart_radius_of_distance(&self, rho: f64) -> f64 {
        match *self {
            SpaceForm::Flat => rho,
            SpaceForm::Sphere { radius } => radius * (rho / (2.0 * radius)).tan(),
            SpaceForm::Hyperbolic { radius } => radius * (rho / (2.0 * radius)).tanh(),
        }
    }

    /// Diameter of the space form (infinite unless spherical).
    pub fn diameter(&self) -> f64 {
        match *self {
            SpaceForm::Sphere { radius } => PI * radius,
            _ => f64::INFINITY,
        }
    }

    /// Total volume of the `dim`-dimensional space form.
    pub fn total_volume(&self, dim: usize) -> f64 {
        match *self {
            _ if dim == 0 => 1.0,
            SpaceForm::Sphere { radius } => unit_sphere_area(dim) * radius.powi(dim as i32),
            _ => f64::INFINITY,
        }
    }
}

/// Area of the unit sphere `S^d` in `R^{d+1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 1.0) * unit_sphere_area(d - 2),
    }
}

/// Volume of the unit ball in `R^m`.
pub fn unit_ball_volume(m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        unit_sphere_area(m - 1) / m as f64
    }
}

fn stereographic_lift(u: &[f64], a: f64) -> Vec<f64> {
    let r2 = norm_sq(u);
    let d = a * a + r2;
    let mut p: Vec<f64> = u.iter().map(|ui| 2.0 * a * a * ui / d).collect();
    p.push(a * (r2 - a * a) / d);
    p
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    dist_sq(x, y).sqrt()
}

/// A space form of dimension `dim` in its standard chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceFormChart {
    pub form: SpaceForm,
    pub dim: usize,
}

impl SpaceFormChart {
    pub fn new(form: SpaceForm, dim: usize) -> Self {
        SpaceFormChart { form, dim }
    }
}

impl MetricField for SpaceFormChart {
    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * self.form.conformal_factor(x)
    }

    fn contains(&self, x: &[f64], margin: f64) -> bool {
        norm_sq(x).sqrt() + margin < self.form.chart_radius()
    }
}

/// Riemannian product `R^m x N^k`: Cartesian coordinates on the first `m`
/// slots followed by the fiber chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductChart {
    pub flat_dim: usize,
    pub fiber: SpaceFormChart,
}

impl ProductChart {
    pub fn new(flat_dim: usize, fiber: SpaceFormChart) -> Self {
        ProductChart { flat_dim, fiber }
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.flat_dim)
    }

    /// Product distance `sqrt(d_flat^2 + d_fiber^2)`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let (xf, xn) = self.split(x);
        let (yf, yn) = self.split(y);
        let dn = if self.fiber.dim == 0 { 0.0 } else { self.fiber.form.distance(xn, yn) };
        (dist_sq(xf, yf) + dn * dn).sqrt()
    }
}

impl MetricField for ProductChart {
    fn dim(&self) -> usize {
        self.flat_dim + self.fiber.dim
    }

    fn components(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::identity(n, n);
        if self.fiber.dim > 0 {
            let c = self.fiber.form.conformal_factor(&x[self.flat_dim..]);
            for i in self.flat_dim..n {
                g[(i, i)] = c;
            }
        }
        g
    }

    fn contains(&self, x: &[f64], margin: f64) -> bool {
        x.iter().all(|v| v.is_finite())
            && (self.fiber.dim == 0 || self.fiber.contains(&x[self.flat_dim..], margin))
    }
}

/// Metric given by a closure on a coordinate ball; used for synthetic charts.
pub struct FnMetric<F> {
    dim: usize,
    chart_radius: f64,
    f: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&[f64]) -> DMatrix<f64> + Sync,
{
    pub fn new(dim: usize, chart_radius: f64, f: F) -> Self {
        FnMetric { dim, chart_radius, f }
    }
}

impl<F> MetricField for FnMetric<F>
where
    F: Fn(&[f64]) -> DMatrix<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self, x: &[f64]) -> DMatrix<f64> {
        (self.f)(x)
    }

    fn contains(&self, x: &[f64], margin: f64) -> bool {
        norm_sq(x).sqrt() + margin < self.chart_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(unit_sphere_area(2), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 2.0 * PI * PI, epsilon = 1e-13);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), PI, epsilon = 1e-14);
        assert_eq!(unit_ball_volume(1), 2.0);
    }

    #[test]
    fn sphere_distance_from_south_pole() {
        let s = SpaceForm::Sphere { radius: 2.0 };
        for rho in [0.1, 1.0, 3.0, 6.0] {
            let r = s.chart_radius_of_distance(rho);
            assert_relative_eq!(s.distance(&[0.0, 0.0], &[r, 0.0]), rho, epsilon = 1e-12);
        }
    }

    #[test]
    fn hyperbolic_distance_from_origin() {
        let h = SpaceForm::Hyperbolic { radius: 1.5 };
        for rho in [0.1, 1.0, 2.5] {
            let r = h.chart_radius_of_distance(rho);
            assert_relative_eq!(h.distance(&[0.0, r], &[0.0, 0.0]), rho, epsilon = 1e-10);
        }
    }

    #[test]
    fn product_chart_layout() {
        let p = ProductChart::new(2, SpaceFormChart::new(SpaceForm::Sphere { radius: 1.0 }, 2));
        let g = p.components(&[5.0, -1.0, 0.0, 0.0]);
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(2, 2)], 4.0);
        assert!(p.contains(&[100.0, 0.0, 2.9, 0.0], 0.0));
        assert!(!p.contains(&[0.0, 0.0, 2.9, 0.0], 0.2));
    }
}
