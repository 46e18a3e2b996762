use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::Verdict;
use crate::soliton::ManifoldModel;

/// Slack on the coefficient sandwich `[lambda/4, lambda]`.
pub const COEFFICIENT_TOL: f64 = 0.01;

/// Smallest radius used in the fit.
pub const MIN_FIT_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialGrowthReport {
    /// Leading coefficient `a` of the fit `f - f0 = a d^2 + b d + c`.
    pub coefficient: f64,
    pub lower: f64,
    pub upper: f64,
    /// Largest absolute fit residual.
    pub fit_residual: f64,
    pub samples: usize,
    pub verdict: Verdict,
}

/// Radii `4, 5, ..., 40`.
pub fn default_fit_radii() -> Vec<f64> {
    (4..=40).map(f64::from).collect()
}

/// Fits `f - f0` against `d(p, q)^2` along flat-factor rays from the base
/// point and checks the leading coefficient lies in `[lambda/4, lambda]`.
/// Not applicable for `lambda < 0`.
pub fn potential_growth_fit(model: &ManifoldModel, radii: &[f64]) -> Result<PotentialGrowthReport> {
    model.require_nonconstant("the potential growth fit")?;
    let lambda = model.lambda();
    if lambda < 0.0 {
        return Ok(PotentialGrowthReport {
            coefficient: f64::NAN,
            lower: f64::NAN,
            upper: f64::NAN,
            fit_residual: f64::NAN,
            samples: 0,
            verdict: Verdict::NotApplicable,
        });
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= MIN_FIT_RADIUS)) {
        return Err(Error::InvalidArgument(format!("fit radii must be at least {MIN_FIT_RADIUS}, got {r}")));
    }
    if radii.len() < 3 {
        return Err(Error::InsufficientNodes { needed: 3, got: radii.len() });
    }
    let q = model.base_point();
    let m = model.flat_dim;
    // coordinate rays in both directions plus the main diagonal
    let mut dirs: Vec<Vec<f64>> = (0..2 * m)
        .map(|i| {
            let mut v = vec![0.0; m];
            v[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
            v
        })
        .collect();
    if m > 1 {
        dirs.push(vec![1.0 / (m as f64).sqrt(); m]);
    }
    let mut rows = Vec::new();
    for dir in &dirs {
        for &r in radii {
            let mut p = q.clone();
            for (i, c) in dir.iter().enumerate() {
                p[i] = r * c;
            }
            rows.push((model.distance(&p, &q), model.f(&p) - model.f0));
        }
    }
    let design = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i].0.powi(2 - j as i32));
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
    let fit_residual = (design * &coef - rhs).amax();
    let a = coef[0];
    let (lower, upper) = (lambda / 4.0, lambda);
    let ok = a >= lower - COEFFICIENT_TOL && a <= upper + COEFFICIENT_TOL;
    Ok(PotentialGrowthReport {
        coefficient: a,
        lower,
        upper,
        fit_residual,
        samples: rows.len(),
        verdict: if ok { Verdict::Holds } else { Verdict::Violated },
    })
}
