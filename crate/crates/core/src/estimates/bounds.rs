use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::FdConfig;
use crate::soliton::ManifoldModel;

/// Slack for the scalar-curvature sandwich, which uses numerical `R`.
pub const CURVATURE_BOUND_TOL: f64 = 1e-6;
/// Relative slack for the gradient sandwich and the Lipschitz bound.
pub const GRADIENT_BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub samples: usize,
    /// Smallest `lambda R` (must be `>= 0`).
    pub lambda_r_min: f64,
    /// Largest `lambda R - 2(n-1) lambda^2` (must be `<= 0`).
    pub lambda_r_excess: f64,
    /// Smallest `(|grad f|^2 - 2 lambda (f - f0)) / |grad f|^2`.
    pub lower_gradient_margin: f64,
    /// Smallest `(4 lambda (f - f0) - |grad f|^2) / |grad f|^2`.
    pub upper_gradient_margin: f64,
    /// Mean of `|grad f|^2 / (f - f0)` over samples with `f != f0`.
    pub ratio: f64,
    /// Largest deviation of a single ratio from the mean.
    pub ratio_spread: f64,
    /// Largest `|grad sqrt|f - f0|| / sqrt|lambda|` (at most one).
    pub lipschitz_ratio: f64,
    pub holds: bool,
}

struct PointBounds {
    lambda_r: f64,
    lower: f64,
    upper: f64,
    ratio: Option<f64>,
    lipschitz: Option<f64>,
}

/// Checks `0 <= lambda R <= 2(n-1) lambda^2`,
/// `2 lambda (f - f0) <= |grad f|^2 <= 4 lambda (f - f0)` and
/// `|grad sqrt|f - f0|| <= sqrt|lambda|` at every point, with `R` computed
/// numerically and `f`, `grad f` in closed form.
pub fn pointwise_bounds_check(model: &ManifoldModel, points: &[Vec<f64>], fd: FdConfig) -> Result<BoundsReport> {
    model.require_nonconstant("the pointwise bounds")?;
    let lambda = model.lambda();
    let per_point = points
        .par_iter()
        .map(|p| -> Result<PointBounds> {
            let r = model.curvature(p, fd)?.scalar;
            let df = model.f(p) - model.f0;
            let b = model.gradnorm_sq(p);
            let (lower, upper) = if b > 0.0 {
                ((b - 2.0 * lambda * df) / b, (4.0 * lambda * df - b) / b)
            } else {
                (0.0, 0.0)
            };
            let nonzero = df != 0.0;
            Ok(PointBounds {
                lambda_r: lambda * r,
                lower,
                upper,
                ratio: nonzero.then(|| b / df),
                lipschitz: nonzero.then(|| b.sqrt() / (2.0 * df.abs().sqrt()) / lambda.abs().sqrt()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cap = 2.0 * (model.n() as f64 - 1.0) * lambda * lambda;
    let fold = |init: f64, pick: &dyn Fn(&PointBounds) -> f64, take_min: bool| {
        per_point
            .iter()
            .map(pick)
            .fold(init, |a, v| if take_min { a.min(v) } else { a.max(v) })
    };
    let lambda_r_min = fold(f64::INFINITY, &|q| q.lambda_r, true);
    let lambda_r_excess = fold(f64::NEG_INFINITY, &|q| q.lambda_r - cap, false);
    let lower_gradient_margin = fold(f64::INFINITY, &|q| q.lower, true);
    let upper_gradient_margin = fold(f64::INFINITY, &|q| q.upper, true);
    let ratios: Vec<f64> = per_point.iter().filter_map(|q| q.ratio).collect();
    let ratio = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let ratio_spread = ratios.iter().fold(0.0f64, |a, v| a.max((v - ratio).abs()));
    let lipschitz_ratio = per_point.iter().filter_map(|q| q.lipschitz).fold(0.0f64, f64::max);

    let scale = cap.max(1.0);
    let holds = lambda_r_min >= -CURVATURE_BOUND_TOL * scale
        && lambda_r_excess <= CURVATURE_BOUND_TOL * scale
        && lower_gradient_margin >= -GRADIENT_BOUND_TOL
        && upper_gradient_margin >= -GRADIENT_BOUND_TOL
        && lipschitz_ratio <= 1.0 + GRADIENT_BOUND_TOL;
    Ok(BoundsReport {
        samples: points.len(),
        lambda_r_min,
        lambda_r_excess,
        lower_gradient_margin,
        upper_gradient_margin,
        ratio,
        ratio_spread,
        lipschitz_ratio,
        holds,
    })
}
