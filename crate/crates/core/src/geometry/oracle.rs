//! Closed-form curvature of space forms in their standard charts.

use nalgebra::{DMatrix, DVector};

use super::curvature::{curvature_numeric, max_abs, Christoffel, CurvatureSample, FdConfig};
use super::field::ZeroField;
use super::metric::{MetricField, SpaceForm, SpaceFormChart};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct OracleSample {
    pub sample: CurvatureSample,
    /// Set for a curved form of dimension one, whose curvature is reported as 0.
    pub one_dimensional: bool,
}

/// Exact curvature of `form` in dimension `k` at chart point `p`.
///
/// `Ric = (k - 1) K g` and `R = k (k - 1) K` with `K` the sectional
/// curvature; the potential is taken to be zero.
pub fn curvature_oracle(form: SpaceForm, k: usize, p: &[f64]) -> OracleSample {
    assert_eq!(p.len(), k, "chart point dimension");
    let g = DMatrix::identity(k, k) * form.conformal_factor(p);
    let ginv = DMatrix::identity(k, k) / form.conformal_factor(p);
    let dphi = form.log_factor_gradient(p);
    // conformally flat: G^m_ij = delta_im d_j phi + delta_jm d_i phi - delta_ij d_m phi
    let mut gamma = Christoffel::zeros(k);
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                let mut v = 0.0;
                if i == m {
                    v += dphi[j];
                }
                if j == m {
                    v += dphi[i];
                }
                if i == j {
                    v -= dphi[m];
                }
                gamma.set(m, i, j, v);
            }
        }
    }
    let curved = !matches!(form, SpaceForm::Flat);
    let one_dimensional = curved && k == 1;
    let kk = if k >= 2 { form.sectional_curvature() } else { 0.0 };
    let ricci = &g * ((k as f64 - 1.0) * kk);
    let scalar = k as f64 * (k as f64 - 1.0) * kk;
    let ricci_norm_sq = k as f64 * ((k as f64 - 1.0) * kk).powi(2);
    OracleSample {
        sample: CurvatureSample {
            point: p.to_vec(),
            metric: g,
            metric_inv: ginv,
            christoffel: gamma,
            ricci,
            scalar,
            hess_f: DMatrix::zeros(k, k),
            df: DVector::zeros(k),
            grad_f: DVector::zeros(k),
            grad_f_norm_sq: 0.0,
            ricci_norm_sq,
        },
        one_dimensional,
    }
}

/// Largest disagreement between numeric and closed-form scalar curvature and
/// Ricci entries over `points`, relative to `max(1, |exact|)`.
pub fn oracle_agreement(chart: &SpaceFormChart, points: &[Vec<f64>], fd: FdConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in points {
        let numeric = curvature_numeric(chart, &ZeroField, p, fd)?;
        let exact = curvature_oracle(chart.form, chart.dim(), p).sample;
        let scalar_err = (numeric.scalar - exact.scalar).abs() / exact.scalar.abs().max(1.0);
        let ricci_err = max_abs(&(&numeric.ricci - &exact.ricci)) / max_abs(&exact.ricci).max(1.0);
        worst = worst.max(scalar_err).max(ricci_err);
    }
    Ok(worst)
}
