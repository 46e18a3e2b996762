//! Coordinate tensor calculus by finite differences.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::diff::{central_diff, step_for};
use super::field::{FnField, ScalarField};
use super::metric::MetricField;
use crate::error::{Error, Result};

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    /// Base step; the step along coordinate `i` is `step * max(1, |x_i|)`.
    pub step: f64,
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step: 1e-3, richardson: true }
    }
}

impl FdConfig {
    pub fn with_step(step: f64) -> Self {
        FdConfig { step, ..Default::default() }
    }

    /// Largest coordinate offset touched when differentiating Christoffel
    /// symbols at `p` (two nested difference stencils).
    pub fn margin(&self, p: &[f64]) -> f64 {
        2.0 * p.iter().map(|&x| step_for(self.step, x)).fold(0.0, f64::max)
    }
}

/// Christoffel symbols of the second kind, `get(k, i, j)` = Gamma^k_{ij}.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.dim + i) * self.dim + j
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[self.idx(k, i, j)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let idx = self.idx(k, i, j);
        self.data[idx] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest `|Gamma^k_ij - Gamma^k_ji|`.
    pub fn lower_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..i {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }

    /// `Gamma^k(v, w) = Gamma^k_ij v^i w^j`.
    pub fn contract(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += self.get(k, i, j) * v[i] * w[j];
                    }
                }
                s
            })
            .collect()
    }
}

/// Curvature and potential data at one chart point.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    pub christoffel: Christoffel,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub hess_f: DMatrix<f64>,
    /// Coordinate partials `df_i`.
    pub df: DVector<f64>,
    /// Contravariant gradient `g^{ij} df_j`.
    pub grad_f: DVector<f64>,
    pub grad_f_norm_sq: f64,
    pub ricci_norm_sq: f64,
}

impl CurvatureSample {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// `g^{ij} T_ij`.
    pub fn trace(&self, t: &DMatrix<f64>) -> f64 {
        self.metric_inv.component_mul(t).sum()
    }

    /// `g^{ia} g^{jb} T_ij T_ab`.
    pub fn norm_sq(&self, t: &DMatrix<f64>) -> f64 {
        let m = &self.metric_inv * t;
        (&m * &m).trace()
    }

    pub fn ricci_asymmetry(&self) -> f64 {
        max_abs(&(&self.ricci - self.ricci.transpose()))
    }

    pub fn hessian_asymmetry(&self) -> f64 {
        max_abs(&(&self.hess_f - self.hess_f.transpose()))
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn invert_metric(g: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::DegenerateMetric { point: x.to_vec() })
}

fn shifted(x: &[f64], axis: usize, t: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += t;
    y
}

/// Christoffel symbols at `x` from central differences of the metric.
pub fn christoffel_at<M: MetricField + ?Sized>(
    metric: &M,
    x: &[f64],
    fd: FdConfig,
) -> Result<Christoffel> {
    let n = metric.dim();
    let g = metric.components(x);
    let ginv = invert_metric(&g, x)?;
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|l| {
            let h = step_for(fd.step, x[l]);
            let flat = central_diff(
                |t| metric.components(&shifted(x, l, t)).as_slice().to_vec(),
                h,
                fd.richardson,
            );
            DMatrix::from_vec(n, n, flat)
        })
        .collect();
    // first-kind symbols [ij, l] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    let mut gamma = Christoffel::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let first: Vec<f64> = (0..n)
                .map(|l| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                .collect();
            for k in 0..n {
                let v: f64 = (0..n).map(|l| ginv[(k, l)] * first[l]).sum();
                gamma.set(k, i, j, v);
            }
        }
    }
    Ok(gamma)
}

/// Numerical Christoffel symbols, Ricci tensor, scalar curvature and the
/// covariant Hessian and gradient of `f` at `p`.
pub fn curvature_numeric<M, F>(metric: &M, f: &F, p: &[f64], fd: FdConfig) -> Result<CurvatureSample>
where
    M: MetricField + ?Sized,
    F: ScalarField + ?Sized,
{
    let n = metric.dim();
    if p.len() != n {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, metric dimension is {n}",
            p.len()
        )));
    }
    if !(fd.step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {}", fd.step)));
    }
    let margin = fd.margin(p);
    if !metric.contains(p, margin) {
        return Err(Error::ChartBounds { point: p.to_vec(), margin });
    }
    let g = metric.components(p);
    let ginv = invert_metric(&g, p)?;
    let gamma = christoffel_at(metric, p, fd)?;

    // dgamma[l] = d_l Gamma
    let mut dgamma = Vec::with_capacity(n);
    for l in 0..n {
        let h = step_for(fd.step, p[l]);
        let d = central_diff(
            |t| match christoffel_at(metric, &shifted(p, l, t), fd) {
                Ok(c) => c.data,
                Err(_) => vec![f64::NAN; n * n * n],
            },
            h,
            fd.richardson,
        );
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateMetric { point: p.to_vec() });
        }
        dgamma.push(Christoffel { dim: n, data: d });
    }

    // G^k_ik = d_i log sqrt(det g), so the second term is a Hessian
    let log_vol = FnField(|x: &[f64]| 0.5 * metric.components(x).determinant().abs().ln());
    let dd_log_vol = log_vol.second_partials(p, fd.step);

    // R_ij = d_k G^k_ij - d_i d_j log sqrt(det g) + G^k_kl G^l_ij - G^k_jl G^l_ik
    let mut ricci = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut r = -dd_log_vol[(i, j)];
            for k in 0..n {
                r += dgamma[k].get(k, i, j);
                for l in 0..n {
                    r += gamma.get(k, k, l) * gamma.get(l, i, j) - gamma.get(k, j, l) * gamma.get(l, i, k);
                }
            }
            ricci[(i, j)] = r;
        }
    }

    let df = f.partials(p, fd.step);
    let ddf = f.second_partials(p, fd.step);
    let mut hess = ddf;
    for i in 0..n {
        for j in 0..n {
            let c: f64 = (0..n).map(|k| gamma.get(k, i, j) * df[k]).sum();
            hess[(i, j)] -= c;
        }
    }
    let grad = &ginv * &df;
    let grad_f_norm_sq = df.dot(&grad).max(0.0);

    let mut sample = CurvatureSample {
        point: p.to_vec(),
        metric: g,
        metric_inv: ginv,
        christoffel: gamma,
        ricci,
        scalar: 0.0,
        hess_f: hess,
        df,
        grad_f: grad,
        grad_f_norm_sq,
        ricci_norm_sq: 0.0,
    };
    sample.scalar = sample.trace(&sample.ricci);
    sample.ricci_norm_sq = sample.norm_sq(&sample.ricci).max(0.0);
    Ok(sample)
}
