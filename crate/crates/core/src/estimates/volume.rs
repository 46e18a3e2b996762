use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, unit_sphere_area, SpaceForm};
use crate::quadrature::integrate;
use crate::soliton::ManifoldModel;

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-8;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
/// Tolerance of the flux identity, relative to `max(1, |rhs|)`.
pub const FLUX_TOL: f64 = 1e-10;

const MC_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeKind {
    GeodesicBall,
    SublevelD,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub volume: f64,
    /// Standard error of a Monte Carlo estimate.
    pub std_error: Option<f64>,
}

/// Least-squares line through `(ln r, ln V)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub exponent: f64,
    pub intercept: f64,
    pub max_log_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeProfile {
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub method: VolumeMethod,
    pub kind: VolumeKind,
    /// Fit over the top decade of radii (absent when the profile spans less).
    pub fit: Option<LogLogFit>,
}

impl VolumeProfile {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn strictly_increasing(&self) -> bool {
        self.volumes.windows(2).all(|w| w[1] > w[0])
    }

    fn assemble(radii: Vec<f64>, estimates: Vec<VolumeEstimate>, method: VolumeMethod, kind: VolumeKind) -> Self {
        let volumes: Vec<f64> = estimates.iter().map(|e| e.volume).collect();
        let std_errors = (method == VolumeMethod::MonteCarlo)
            .then(|| estimates.iter().map(|e| e.std_error.unwrap_or(0.0)).collect());
        let fit = top_decade_fit(&radii, &volumes);
        VolumeProfile { radii, volumes, std_errors, method, kind, fit }
    }
}

/// Volume of the geodesic ball of radius `rho` in the `k`-dimensional space
/// form, capped at the total volume past the diameter of a sphere.
pub fn fiber_ball_volume(form: SpaceForm, k: usize, rho: f64, rel_tol: f64) -> f64 {
    if k == 0 || rho <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let (sn, rho): (Box<dyn Fn(f64) -> f64>, f64) = match form {
        SpaceForm::Flat => return unit_ball_volume(k) * rho.powi(k as i32),
        SpaceForm::Sphere { radius: a } => (Box::new(move |t: f64| a * (t / a).sin()), rho.min(PI * a)),
        SpaceForm::Hyperbolic { radius: a } => (Box::new(move |t: f64| a * (t / a).sinh()), rho),
    };
    unit_sphere_area(k - 1) * integrate(|t| sn(t).powi(k as i32 - 1), 0.0, rho, &[], rel_tol)
}

fn flat_dim_checked(model: &ManifoldModel) -> Result<usize> {
    model.require_nonconstant("ball volumes")?;
    Ok(model.flat_dim)
}

/// `vol B_r(q)` at the base point by the product formula
/// `sigma_{m-1} int_0^r t^{m-1} V_N(sqrt(r^2 - t^2)) dt`.
pub fn ball_volume_quadrature(model: &ManifoldModel, r: f64, rel_tol: f64) -> Result<f64> {
    let m = flat_dim_checked(model)?;
    check_radius(r)?;
    let (form, k) = (model.fiber_form(), model.k());
    let inner_tol = 0.1 * rel_tol;
    let fiber = |t: f64| fiber_ball_volume(form, k, (r * r - t * t).max(0.0).sqrt(), inner_tol);
    let breaks: Vec<f64> = match form {
        SpaceForm::Sphere { radius } if r > PI * radius => vec![(r * r - (PI * radius).powi(2)).sqrt()],
        _ => vec![],
    };
    let radial = integrate(|t| t.powi(m as i32 - 1) * fiber(t), 0.0, r, &breaks, rel_tol);
    Ok(unit_sphere_area(m - 1) * radial)
}

/// Monte Carlo estimate of `vol B_r(q)`: the flat factor is sampled in the
/// cube `[-r, r]^m`, a spherical fiber uniformly on the embedded sphere, a
/// hyperbolic fiber uniformly in the coordinate ball containing the fiber
/// ball and weighted by the volume density.
pub fn ball_volume_monte_carlo(model: &ManifoldModel, r: f64, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    let m = flat_dim_checked(model)?;
    check_radius(r)?;
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 Monte Carlo samples, got {samples}")));
    }
    let (form, k) = (model.fiber_form(), model.k());
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            let mut z = vec![0.0; k + 1];
            for _ in 0..count {
                let flat_sq: f64 = (0..m).map(|_| (r * (2.0 * rng.random::<f64>() - 1.0)).powi(2)).sum();
                let v = if flat_sq >= r * r {
                    0.0
                } else {
                    let (fiber_sq, weight) = sample_fiber(form, k, r, &mut rng, &mut z);
                    if flat_sq + fiber_sq < r * r {
                        weight
                    } else {
                        0.0
                    }
                };
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, s| (a.0 + s.0, a.1 + s.1));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    let cube = (2.0 * r).powi(m as i32);
    Ok(VolumeEstimate { volume: cube * mean, std_error: Some(cube * (var / nf).sqrt()) })
}

/// Squared fiber distance from the base point and the fiber weight of one
/// sample.
fn sample_fiber(form: SpaceForm, k: usize, r: f64, rng: &mut ChaCha8Rng, z: &mut [f64]) -> (f64, f64) {
    if k == 0 {
        return (0.0, 1.0);
    }
    match form {
        SpaceForm::Flat => {
            let d: f64 = (0..k).map(|_| (r * (2.0 * rng.random::<f64>() - 1.0)).powi(2)).sum();
            (d, (2.0 * r).powi(k as i32))
        }
        SpaceForm::Sphere { radius: a } => {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let tangential = z[..k].iter().map(|v| v * v).sum::<f64>().sqrt();
            let d = a * tangential.atan2(z[k]);
            (d * d, form.total_volume(k))
        }
        SpaceForm::Hyperbolic { radius: a } => {
            let c = form.chart_radius_of_distance(r);
            for zi in z[..k].iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let norm = z[..k].iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = c * rng.random::<f64>().powf(1.0 / k as f64) / norm;
            let u: Vec<f64> = z[..k].iter().map(|v| v * scale).collect();
            let u_sq: f64 = u.iter().map(|v| v * v).sum();
            let density = (2.0 * a * a / (a * a - u_sq)).powi(k as i32);
            let d = form.distance(&u, &vec![0.0; k]);
            (d * d, unit_ball_volume(k) * c.powi(k as i32) * density)
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("radius must be positive and finite, got {r}")))
    }
}

/// Per-radius Monte Carlo seed derived from the master seed.
pub fn radius_seed(master: u64, r: f64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ r.to_bits());
    rng.random()
}

pub fn ball_volume(model: &ManifoldModel, r: f64, method: VolumeMethod, numerics: VolumeNumerics) -> Result<VolumeEstimate> {
    match method {
        VolumeMethod::Quadrature => Ok(VolumeEstimate {
            volume: ball_volume_quadrature(model, r, numerics.quadrature_tol)?,
            std_error: None,
        }),
        VolumeMethod::MonteCarlo => {
            ball_volume_monte_carlo(model, r, numerics.mc_samples, radius_seed(numerics.seed, r))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeNumerics {
    pub quadrature_tol: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for VolumeNumerics {
    fn default() -> Self {
        VolumeNumerics { quadrature_tol: DEFAULT_QUADRATURE_TOL, mc_samples: DEFAULT_MC_SAMPLES, seed: 0 }
    }
}

/// `count` log-spaced radii from `r_max / 100` to `r_max = 50 (diam N + 1)`
/// (an infinite fiber diameter counts as zero).
pub fn default_profile_radii(model: &ManifoldModel, count: usize) -> Vec<f64> {
    let diam = model.fiber_form().diameter();
    let diam = if diam.is_finite() { diam } else { 0.0 };
    let r_max = 50.0 * (diam + 1.0);
    log_spaced(r_max / 100.0, r_max, count)
}

pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![hi],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    hi
                } else {
                    lo * (hi / lo).powf(i as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}

pub fn geodesic_ball_profile(
    model: &ManifoldModel,
    radii: &[f64],
    method: VolumeMethod,
    numerics: VolumeNumerics,
) -> Result<VolumeProfile> {
    check_increasing(radii)?;
    let estimates = radii
        .par_iter()
        .map(|&r| ball_volume(model, r, method, numerics))
        .collect::<Result<Vec<_>>>()?;
    Ok(VolumeProfile::assemble(radii.to_vec(), estimates, method, VolumeKind::GeodesicBall))
}

pub fn sublevel_profile(model: &ManifoldModel, radii: &[f64]) -> Result<VolumeProfile> {
    check_increasing(radii)?;
    let estimates = radii
        .iter()
        .map(|&r| Ok(VolumeEstimate { volume: sublevel_volume_and_flux(model, r)?.volume, std_error: None }))
        .collect::<Result<Vec<_>>>()?;
    Ok(VolumeProfile::assemble(radii.to_vec(), estimates, VolumeMethod::Quadrature, VolumeKind::SublevelD))
}

fn check_increasing(radii: &[f64]) -> Result<()> {
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument(format!("radii must be positive and finite, got {r}")));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Log-log least squares over radii in `[r_max / 10, r_max]`.
pub fn top_decade_fit(radii: &[f64], volumes: &[f64]) -> Option<LogLogFit> {
    let r_max = *radii.last()?;
    if radii[0] > r_max / 10.0 * (1.0 + 1e-12) {
        return None;
    }
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(volumes)
        .filter(|(r, v)| **r >= r_max / 10.0 * (1.0 - 1e-12) && **v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    loglog_fit(&pts)
}

pub fn loglog_fit(pts: &[(f64, f64)]) -> Option<LogLogFit> {
    if pts.len() < 2 {
        return None;
    }
    let design = DMatrix::from_fn(pts.len(), 2, |i, j| if j == 0 { pts[i].0 } else { 1.0 });
    let rhs = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let coef = design.clone().svd(true, true).solve(&rhs, 1e-14).ok()?;
    let max_log_residual = (design * &coef - rhs).amax();
    Some(LogLogFit { exponent: coef[0], intercept: coef[1], max_log_residual, points: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SublevelFlux {
    pub r: f64,
    /// `vol D(r)` with `D(r) = {2 sqrt(f - f0) < r}`.
    pub volume: f64,
    /// `|grad f|` times the area of the boundary of `D(r)`.
    pub flux: f64,
    /// `(n lambda - (n-2) R / (2(n-1))) V(r)`.
    pub rhs: f64,
    pub residual: f64,
    /// `|residual| / max(1, |rhs|)`.
    pub relative_residual: f64,
}

/// Closed-form volume and boundary flux of the sublevel set `D(r)` on a
/// rigid shrinking model, with the residual of the divergence identity.
pub fn sublevel_volume_and_flux(model: &ManifoldModel, r: f64) -> Result<SublevelFlux> {
    model.require_nonconstant("sublevel volumes")?;
    let lambda = model.lambda();
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!("sublevel volumes need lambda > 0, got {lambda}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be nonnegative and finite, got {r}")));
    }
    let (m, n, k) = (model.flat_dim, model.n() as f64, model.k());
    let vol_n = model.fiber_form().total_volume(k);
    let flat_radius = r / model.b_slope.sqrt();
    let volume = vol_n * unit_ball_volume(m) * flat_radius.powi(m as i32);
    let mut boundary = model.base_point();
    boundary[0] = flat_radius;
    let area = unit_sphere_area(m - 1) * flat_radius.powi(m as i32 - 1) * vol_n;
    let flux = model.gradnorm_sq(&boundary).sqrt() * area;
    let rhs = (n * lambda - (n - 2.0) * model.scalar_r / (2.0 * (n - 1.0))) * volume;
    let residual = flux - rhs;
    Ok(SublevelFlux { r, volume, flux, rhs, residual, relative_residual: residual.abs() / rhs.abs().max(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::{build_soliton, SolitonSpec};

    fn model(n: usize, k: usize, lambda: f64) -> ManifoldModel {
        build_soliton(SolitonSpec::canonical(n, k, lambda).unwrap()).unwrap()
    }

    #[test]
    fn fiber_balls_match_closed_forms() {
        let s = SpaceForm::Sphere { radius: 2.0 };
        let v = fiber_ball_volume(s, 2, 1.5, 1e-10);
        assert!((v - 2.0 * PI * 4.0 * (1.0 - (0.75f64).cos())).abs() < 1e-9);
        assert!((fiber_ball_volume(s, 2, 100.0, 1e-10) - 16.0 * PI).abs() < 1e-9);
        let h = SpaceForm::Hyperbolic { radius: 1.0 };
        let v = fiber_ball_volume(h, 3, 2.0, 1e-10);
        let exact = PI * ((4.0f64).sinh() - 4.0);
        assert!((v - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn euclidean_ball() {
        let m = model(3, 0, 1.0);
        for r in [0.5, 2.0, 7.0] {
            let v = ball_volume_quadrature(&m, r, 1e-10).unwrap();
            let exact = 4.0 / 3.0 * PI * r.powi(3);
            assert!((v - exact).abs() < 1e-9 * exact);
        }
    }

    #[test]
    fn saturated_fiber_grows_linearly() {
        let m = model(3, 2, 1.0);
        let r = 200.0;
        let v = ball_volume_quadrature(&m, r, 1e-10).unwrap();
        assert!((v / r - 4.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        for (m, r) in [(model(4, 2, 0.5), 5.0), (model(4, 2, -0.5), 1.5), (model(3, 0, 1.0), 2.0)] {
            let q = ball_volume_quadrature(&m, r, 1e-10).unwrap();
            let mc = ball_volume_monte_carlo(&m, r, 200_000, 11).unwrap();
            let se = mc.std_error.unwrap();
            assert!((mc.volume - q).abs() < 3.0 * se, "{q} vs {mc:?}");
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let m = model(4, 2, 0.5);
        let a = ball_volume_monte_carlo(&m, 3.0, 100_000, 5).unwrap();
        let b = ball_volume_monte_carlo(&m, 3.0, 100_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sublevel_hand_values() {
        let s = sublevel_volume_and_flux(&model(3, 2, 1.0), 3.0).unwrap();
        assert!((s.volume - 6.0 * PI).abs() < 1e-12);
        assert!((s.flux - 12.0 * PI).abs() < 1e-12 && (s.rhs - 12.0 * PI).abs() < 1e-12);
        let s = sublevel_volume_and_flux(&model(3, 0, 1.0), 2.0).unwrap();
        let exact = 4.0 / 3.0 * PI * (2.0 / 2f64.sqrt()).powi(3);
        assert!((s.volume - exact).abs() < 1e-12 && (s.rhs - 3.0 * exact).abs() < 1e-12);
        assert!(s.relative_residual < FLUX_TOL);
        let s = sublevel_volume_and_flux(&model(4, 2, 0.5), 0.0).unwrap();
        assert_eq!((s.volume, s.flux), (0.0, 0.0));
    }

    #[test]
    fn radii_and_fit() {
        let r = log_spaced(1.0, 100.0, 21);
        assert_eq!((r[0], r[20]), (1.0, 100.0));
        let v: Vec<f64> = r.iter().map(|x| 3.0 * x * x).collect();
        let fit = top_decade_fit(&r, &v).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12 && fit.points == 11);
        assert!(top_decade_fit(&r[15..], &v[15..]).is_none());
    }
}
