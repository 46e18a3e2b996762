use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{MetricField, ScalarField};
use crate::soliton::ManifoldModel;

/// `|grad f|^2` at or below which a point counts as critical.
pub const EPS_CRIT: f64 = 1e-8;

/// Step used for finite-difference gradients of fields without closed forms.
const GRAD_STEP: f64 = 1e-5;
/// Local error accepted per substep, relative to `1 + |x|`.
const SUBSTEP_TOL: f64 = 1e-12;
/// Smallest substep before the integration is declared stuck at a critical point.
const MIN_SUBSTEP: f64 = 1e-13;

/// How one end of the integration interval was reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "s", rename_all = "snake_case")]
pub enum Endpoint {
    /// The requested range end was reached; the curve may continue beyond it.
    RangeEnd(f64),
    /// Integration stopped at a near-critical point at this `s`.
    Critical(f64),
}

impl Endpoint {
    pub fn s(&self) -> f64 {
        match *self {
            Endpoint::RangeEnd(s) | Endpoint::Critical(s) => s,
        }
    }

    pub fn is_critical(&self) -> bool {
        matches!(self, Endpoint::Critical(_))
    }
}

/// A sampled integral curve of `grad f / |grad f|^2` with `alpha(0) = p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowPath {
    pub grid: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub f_values: Vec<f64>,
    pub gradnorm_sq: Vec<f64>,
    pub omega1: Endpoint,
    pub omega2: Endpoint,
}

impl FlowPath {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn step(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        (self.grid[self.len() - 1] - self.grid[0]) / (self.len() - 1) as f64
    }
}

/// A flow line of the potential of a rigid model.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowCurve {
    pub model: ManifoldModel,
    pub path: FlowPath,
}

impl std::ops::Deref for FlowCurve {
    type Target = FlowPath;

    fn deref(&self) -> &FlowPath {
        &self.path
    }
}

enum Eval {
    Velocity(Vec<f64>),
    Critical,
    OutOfChart,
}

/// Velocity `grad f / |grad f|^2` and `|grad f|^2` at `x`.
pub(crate) fn flow_velocity<M, F>(metric: &M, f: &F, x: &[f64]) -> Result<(Vec<f64>, f64)>
where
    M: MetricField + ?Sized,
    F: ScalarField + ?Sized,
{
    let df = f.partials(x, GRAD_STEP);
    let chol = metric
        .components(x)
        .cholesky()
        .ok_or_else(|| Error::DegenerateMetric { point: x.to_vec() })?;
    let grad: DVector<f64> = chol.solve(&df);
    let norm_sq = df.dot(&grad);
    Ok(((grad / norm_sq).as_slice().to_vec(), norm_sq))
}

fn eval<M, F>(metric: &M, f: &F, x: &[f64]) -> Result<Eval>
where
    M: MetricField + ?Sized,
    F: ScalarField + ?Sized,
{
    if !metric.contains(x, 0.0) {
        return Ok(Eval::OutOfChart);
    }
    let (v, nsq) = flow_velocity(metric, f, x)?;
    if !(nsq > EPS_CRIT) {
        return Ok(Eval::Critical);
    }
    Ok(Eval::Velocity(v))
}

enum Stage {
    Done(Vec<f64>),
    Critical,
    OutOfChart(Vec<f64>),
}

fn axpy(x: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(xi, vi)| xi + a * vi).collect()
}

fn rk4<M, F>(metric: &M, f: &F, x: &[f64], h: f64) -> Result<Stage>
where
    M: MetricField + ?Sized,
    F: ScalarField + ?Sized,
{
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(4);
    for (stage, c) in [0.0, 0.5, 0.5, 1.0].into_iter().enumerate() {
        let y = if stage == 0 { x.to_vec() } else { axpy(x, c * h, &ks[stage - 1]) };
        match eval(metric, f, &y)? {
            Eval::Velocity(v) => ks.push(v),
            Eval::Critical => return Ok(Stage::Critical),
            Eval::OutOfChart => return Ok(Stage::OutOfChart(y)),
        }
    }
    let out = (0..x.len())
        .map(|i| x[i] + h / 6.0 * (ks[0][i] + 2.0 * ks[1][i] + 2.0 * ks[2][i] + ks[3][i]))
        .collect();
    Ok(Stage::Done(out))
}

enum Advance {
    Reached(Vec<f64>),
    Halted(f64),
}

/// Advances from `(s, x)` by the signed step `h`, subdividing with step
/// doubling where a single RK4 step is not accurate enough.
fn advance<M, F>(metric: &M, f: &F, s: f64, x: &[f64], h: f64) -> Result<Advance>
where
    M: MetricField + ?Sized,
    F: ScalarField + ?Sized,
{
    let dir = h.signum();
    let total = h.abs();
    let mut done = 0.0;
    let mut sub = total;
    let mut x = x.to_vec();
    while total - done > 1e-12 * total {
        sub = sub.min(total - done);
        let here = s + dir * done;
        let full = rk4(metric, f, &x, dir * sub)?;
        let half = match rk4(metric, f, &x, dir * sub / 2.0)? {
            Stage::Done(mid) => rk4(metric, f, &mid, dir * sub / 2.0)?,
            other => other,
        };
        let accepted = match (full, half) {
            (Stage::Done(a), Stage::Done(b)) => {
                let err = a.iter().zip(&b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
                let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (err <= SUBSTEP_TOL * scale).then_some(b)
            }
            (_, Stage::OutOfChart(p)) | (Stage::OutOfChart(p), _) if sub <= MIN_SUBSTEP => {
                return Err(Error::ChartExit { s: here, point: p });
            }
            _ => None,
        };
        match accepted {
            Some(next) => {
                if !metric.contains(&next, 0.0) {
                    return Err(Error::ChartExit { s: here + dir * sub, point: next });
                }
                x = next;
                done += sub;
                if let Eval::Critical = eval(metric, f, &x)? {
                    return Ok(Advance::Halted(s + dir * done));
                }
                sub *= 2.0;
            }
            None if sub <= MIN_SUBSTEP => return Ok(Advance::Halted(here)),
            None => sub /= 2.0,
        }
    }
    Ok(Advance::Reached(x))
}

/// Integrates the flow line of `grad f / |grad f|^2` through `p` (at
/// `s = 0`) over `s_range`, storing points on the uniform grid `i * step`.
///
/// Integration stops early at points where `|grad f|^2 <= EPS_CRIT`.
pub fn integrate_gradient_flow<M, F>(metric: &M, f: &F, p: &[f64], s_range: (f64, f64), step: f64) -> Result<FlowPath>
where
    M: MetricField + ?Sized,
    F: ScalarField + ?Sized,
{
    let (lo, hi) = s_range;
    if p.len() != metric.dim() {
        return Err(Error::InvalidArgument(format!(
            "start point has {} coordinates, metric dimension is {}",
            p.len(),
            metric.dim()
        )));
    }
    if !(step > 0.0) || !(lo <= 0.0 && 0.0 <= hi) {
        return Err(Error::InvalidArgument(format!("need step > 0 and lo <= 0 <= hi, got step {step}, [{lo}, {hi}]")));
    }
    if !metric.contains(p, 0.0) {
        return Err(Error::ChartBounds { point: p.to_vec(), margin: 0.0 });
    }
    let (_, nsq) = flow_velocity(metric, f, p)?;
    if !(nsq > EPS_CRIT) {
        return Err(Error::CriticalStart { gradnorm_sq: nsq });
    }

    let march = |dir: f64, count: usize| -> Result<(Vec<Vec<f64>>, Option<f64>)> {
        let mut out = Vec::with_capacity(count);
        let mut x = p.to_vec();
        for i in 0..count {
            let s = dir * i as f64 * step;
            match advance(metric, f, s, &x, dir * step)? {
                Advance::Reached(next) => {
                    out.push(next.clone());
                    x = next;
                }
                Advance::Halted(at) => return Ok((out, Some(at))),
            }
        }
        Ok((out, None))
    };
    let n_fwd = (hi / step + 1e-9).floor() as usize;
    let n_back = (-lo / step + 1e-9).floor() as usize;
    let (fwd, halt_fwd) = march(1.0, n_fwd)?;
    let (back, halt_back) = march(-1.0, n_back)?;

    let first = -(back.len() as f64) * step;
    let points: Vec<Vec<f64>> = back.into_iter().rev().chain(std::iter::once(p.to_vec())).chain(fwd).collect();
    let grid: Vec<f64> = (0..points.len()).map(|i| first + i as f64 * step).collect();
    let f_values = points.iter().map(|x| f.value(x)).collect();
    let gradnorm_sq = points
        .iter()
        .map(|x| flow_velocity(metric, f, x).map(|(_, nsq)| nsq))
        .collect::<Result<Vec<_>>>()?;
    let omega1 = halt_back.map_or(Endpoint::RangeEnd(grid[0]), Endpoint::Critical);
    let omega2 = halt_fwd.map_or(Endpoint::RangeEnd(grid[grid.len() - 1]), Endpoint::Critical);
    Ok(FlowPath { grid, points, f_values, gradnorm_sq, omega1, omega2 })
}

/// Flow line of the potential of `model` through `p`.
pub fn integrate_flow(model: &ManifoldModel, p: &[f64], s_range: (f64, f64), step: f64) -> Result<FlowCurve> {
    model.require_nonconstant("flow integration")?;
    let path = integrate_gradient_flow(&model.chart, &model.potential, p, s_range, step)?;
    Ok(FlowCurve { model: model.clone(), path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FnField, FnMetric};
    use crate::soliton::{build_soliton, SolitonSpec};
    use nalgebra::DMatrix;

    fn model(n: usize, k: usize, lambda: f64) -> ManifoldModel {
        build_soliton(SolitonSpec::canonical(n, k, lambda).unwrap()).unwrap()
    }

    #[test]
    fn radial_flow_in_flat_space() {
        let m = model(3, 0, 1.0);
        let curve = integrate_flow(&m, &[1.0, 0.0, 0.0], (0.0, 10.0), 1e-3).unwrap();
        for (s, x) in curve.grid.iter().zip(&curve.points) {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - (1.0 + 2.0 * s).sqrt()).abs() < 1e-6);
        }
        assert_eq!(curve.omega2, Endpoint::RangeEnd(10.0));
    }

    #[test]
    fn backward_flow_halts_at_the_minimum() {
        let m = model(4, 2, 0.5);
        let p = vec![1.0, 0.0, 0.3, -0.2];
        let curve = integrate_flow(&m, &p, (-5.0, 0.0), 1e-3).unwrap();
        let Endpoint::Critical(w1) = curve.omega1 else { panic!("{:?}", curve.omega1) };
        assert!((w1 + m.f(&p)).abs() < 1e-7, "{w1} vs {}", -m.f(&p));
        assert!(curve.gradnorm_sq.iter().all(|&b| b > EPS_CRIT));
        let last = &curve.points[0];
        // the last stored node lies within one step of the halt, where b <= 1.5 step
        assert!(last[0].abs() < 0.06 && (last[2] - 0.3).abs() < 1e-14, "{last:?}");
    }

    #[test]
    fn critical_start_is_rejected() {
        let m = model(4, 2, 0.5);
        assert!(matches!(
            integrate_flow(&m, &[0.0, 0.0, 0.1, 0.1], (0.0, 1.0), 1e-3),
            Err(Error::CriticalStart { .. })
        ));
    }

    #[test]
    fn synthetic_chart_exit() {
        let metric = FnMetric::new(2, 1.0, |_x: &[f64]| DMatrix::identity(2, 2));
        let f = FnField(|x: &[f64]| x[0]);
        let err = integrate_gradient_flow(&metric, &f, &[0.0, 0.0], (0.0, 2.0), 1e-2).unwrap_err();
        let Error::ChartExit { s, .. } = err else { panic!("{err:?}") };
        assert!((s - 1.0).abs() < 0.02, "{s}");
    }
}
