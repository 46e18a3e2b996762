use rayon::prelude::*;
use serde::Serialize;

use super::integrate::{flow_velocity, FlowCurve};
use crate::error::{Error, Result};
use crate::geometry::diff::central_diff;
use crate::geometry::{christoffel_at, FdConfig, MetricField};
use crate::ode::{first_derivative, BFunction};

/// Tolerance on `f(alpha(s2)) - f(alpha(s1)) - (s2 - s1)`.
pub const AFFINE_TOL: f64 = 1e-7;
/// Relative slack allowed when the arclength must dominate the distance.
pub const DISTANCE_TOL: f64 = 1e-6;
pub const GEODESIC_TOL: f64 = 1e-4;
pub const UNIT_SPEED_TOL: f64 = 1e-6;

/// Nodes used for the pairwise distance comparison.
const DISTANCE_NODES: usize = 150;
/// Near a critical end, nodes where `|grad f|^2` changes by more than this
/// fraction per step are left out of the arclength-based checks.
const RESOLVED_CHANGE: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineDistanceReport {
    /// Largest `|f(alpha(s2)) - f(alpha(s1)) - (s2 - s1)|` over all grid pairs.
    pub affine_worst: f64,
    pub affine_pairs: usize,
    /// Largest `(d - L) / max(1, L)` with `L` the arclength between the pair.
    pub distance_excess: f64,
    /// Largest `|L - d|`; zero for minimizing curves.
    pub distance_gap: f64,
    pub distance_pairs: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicReport {
    /// Largest `|gamma'' + Gamma(gamma', gamma')|_g` at interior nodes.
    pub residual_worst: f64,
    /// Largest `| |gamma'|_g - 1 |`.
    pub speed_worst: f64,
    pub checked: usize,
    pub holds: bool,
}

/// Node range whose `|grad f|^2` is resolved by the grid, dropping the
/// tail that runs into a critical end.
fn resolved_range(curve: &FlowCurve) -> std::ops::Range<usize> {
    let b = &curve.gradnorm_sq;
    let n = b.len();
    let rough = |i: usize, j: usize| (b[i] - b[j]).abs() > RESOLVED_CHANGE * b[i];
    let mut lo = 0;
    if curve.omega1.is_critical() {
        while lo + 1 < n && rough(lo, lo + 1) {
            lo += 1;
        }
    }
    let mut hi = n;
    if curve.omega2.is_critical() {
        while hi > lo + 1 && rough(hi - 1, hi - 2) {
            hi -= 1;
        }
    }
    lo..hi
}

/// Fourth-order first derivative of grid data, one-sided near the ends.
fn derivative4(v: &[f64], i: usize, h: f64) -> f64 {
    let n = v.len();
    if n < 5 {
        return first_derivative(v, i, h);
    }
    let d = if i >= 2 && i + 2 < n {
        -v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]
    } else if i == 0 {
        -25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]
    } else if i == 1 {
        -3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]
    } else if i == n - 2 {
        3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]
    } else {
        25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]
    };
    d / (12.0 * h)
}

/// Cumulative `t(s) = int ds / |grad f|` over `range` by the trapezoid rule
/// with the first Euler-Maclaurin end correction.
fn arclength(curve: &FlowCurve, range: std::ops::Range<usize>) -> Vec<f64> {
    let h = curve.step();
    let g: Vec<f64> = curve.gradnorm_sq[range].iter().map(|b| 1.0 / b.sqrt()).collect();
    let dg: Vec<f64> = (0..g.len()).map(|i| derivative4(&g, i, h)).collect();
    let mut t = vec![0.0; g.len()];
    // compensated summation: interpolation in t amplifies errors by 1/h^2
    let (mut trap, mut carry) = (0.0f64, 0.0f64);
    for i in 1..g.len() {
        let term = 0.5 * h * (g[i - 1] + g[i]);
        let next = trap + term;
        carry += if trap.abs() >= term.abs() { (trap - next) + term } else { (term - next) + trap };
        trap = next;
        t[i] = (trap + carry) - h * h / 12.0 * (dg[i] - dg[0]);
    }
    t
}

pub fn affine_and_distance_check(curve: &FlowCurve) -> AffineDistanceReport {
    let n = curve.len();
    // pairwise residuals are differences of e_i = f_i - f_0 - (s_i - s_0)
    let e: Vec<f64> = (0..n)
        .map(|i| curve.f_values[i] - curve.f_values[0] - (curve.grid[i] - curve.grid[0]))
        .collect();
    let emax = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let emin = e.iter().copied().fold(f64::INFINITY, f64::min);
    let affine_worst = if n > 0 { emax - emin } else { 0.0 };

    let range = resolved_range(curve);
    let offset = range.start;
    let m = range.len();
    let t = if m >= 5 { arclength(curve, range) } else { Vec::new() };
    let picks: Vec<usize> = if t.is_empty() {
        Vec::new()
    } else {
        let count = DISTANCE_NODES.min(m);
        let mut v: Vec<usize> = (0..count).map(|j| j * (m - 1) / (count - 1).max(1)).collect();
        v.dedup();
        v
    };
    let (mut excess, mut gap, mut pairs) = (f64::NEG_INFINITY, 0.0f64, 0usize);
    for (a, &i) in picks.iter().enumerate() {
        for &j in &picks[a..] {
            let d = curve.model.distance(&curve.points[offset + i], &curve.points[offset + j]);
            let l = t[j] - t[i];
            excess = excess.max((d - l) / l.max(1.0));
            gap = gap.max((l - d).abs());
            pairs += 1;
        }
    }
    if pairs == 0 {
        excess = 0.0;
    }
    AffineDistanceReport {
        affine_worst,
        affine_pairs: n * n.saturating_sub(1) / 2,
        distance_excess: excess,
        distance_gap: gap,
        distance_pairs: pairs,
        holds: affine_worst < AFFINE_TOL && excess <= DISTANCE_TOL,
    }
}

/// Value, first and second derivative at the two ends of an interval.
type Knot = (f64, f64, f64);

/// Quintic Hermite interpolant on `[x0, x1]` and its first two derivatives at `x`.
fn hermite5(x0: f64, x1: f64, k0: Knot, k1: Knot, x: f64) -> Knot {
    let h = x1 - x0;
    let u = (x - x0) / h;
    let (u2, u3, u4, u5) = (u * u, u.powi(3), u.powi(4), u.powi(5));
    // basis functions for y0, h y0', h^2 y0'', y1, h y1', h^2 y1''
    let val = [
        1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5,
        u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5,
        0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5),
        10.0 * u3 - 15.0 * u4 + 6.0 * u5,
        -4.0 * u3 + 7.0 * u4 - 3.0 * u5,
        0.5 * (u3 - 2.0 * u4 + u5),
    ];
    let d1 = [
        -30.0 * u2 + 60.0 * u3 - 30.0 * u4,
        1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4,
        0.5 * (2.0 * u - 9.0 * u2 + 12.0 * u3 - 5.0 * u4),
        30.0 * u2 - 60.0 * u3 + 30.0 * u4,
        -12.0 * u2 + 28.0 * u3 - 15.0 * u4,
        0.5 * (3.0 * u2 - 8.0 * u3 + 5.0 * u4),
    ];
    let d2 = [
        -60.0 * u + 180.0 * u2 - 120.0 * u3,
        -36.0 * u + 96.0 * u2 - 60.0 * u3,
        0.5 * (2.0 - 18.0 * u + 36.0 * u2 - 20.0 * u3),
        60.0 * u - 180.0 * u2 + 120.0 * u3,
        -24.0 * u + 84.0 * u2 - 60.0 * u3,
        0.5 * (6.0 * u - 24.0 * u2 + 20.0 * u3),
    ];
    let w = [k0.0, h * k0.1, h * h * k0.2, k1.0, h * k1.1, h * h * k1.2];
    let dot = |b: &[f64; 6]| b.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
    (dot(&val), dot(&d1) / h, dot(&d2) / (h * h))
}

/// Reparametrizes the curve by arclength `t(s) = int ds / |grad f|`,
/// resamples it on a uniform `t` grid and checks the geodesic equation and
/// unit speed there.
///
/// The resampling is a quintic Hermite interpolant, first for `s(t)`
/// (`s' = |grad f|`, `s'' = b'/2`), then for `alpha(s)` (`alpha'` the flow
/// velocity, `alpha''` its derivative along itself); `gamma'` and `gamma''`
/// are the derivatives of the composed interpolant.
pub fn arclength_geodesic_check(curve: &FlowCurve) -> Result<GeodesicReport> {
    let range = resolved_range(curve);
    let m = range.len();
    if m < 5 {
        return Err(Error::InsufficientNodes { needed: 5, got: m });
    }
    let metric = &curve.model.chart;
    let pot = &curve.model.potential;
    let t = arclength(curve, range.clone());
    let s = &curve.grid[range.clone()];
    let pts = &curve.points[range.clone()];
    let bs = &curve.gradnorm_sq[range];
    let s_knots: Vec<Knot> =
        (0..m).map(|i| (s[i], bs[i].sqrt(), 0.5 * derivative4(bs, i, curve.step()))).collect();
    let vel = pts
        .iter()
        .map(|x| flow_velocity(metric, pot, x).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;
    let acc: Vec<Vec<f64>> = pts
        .par_iter()
        .zip(&vel)
        .map(|(x, v)| {
            let along = |h: f64| -> Vec<f64> {
                let y: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + h * vi).collect();
                flow_velocity(metric, pot, &y).map(|(w, _)| w).unwrap_or_else(|_| vec![f64::NAN; y.len()])
            };
            let h = 1e-3 * (1.0 + x.iter().fold(0.0f64, |m, c| m.max(c.abs())));
            central_diff(along, h, true)
        })
        .collect();

    let dim = metric.dim();
    let dt = (t[m - 1] - t[0]) / (m - 1) as f64;
    // interval of the t grid containing each resampled node
    let mut cells = Vec::with_capacity(m);
    let mut i = 0;
    for j in 0..m {
        let tau = t[0] + j as f64 * dt;
        while i + 2 < m && t[i + 1] < tau {
            i += 1;
        }
        cells.push((i, tau));
    }

    let fd = FdConfig::default();
    let results: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(i, tau)| -> Result<(f64, f64)> {
            let (sj, ds, d2s) = hermite5(t[i], t[i + 1], s_knots[i], s_knots[i + 1], tau);
            let mut x = vec![0.0; dim];
            let mut v = vec![0.0; dim];
            let mut a = vec![0.0; dim];
            for c in 0..dim {
                let k0 = (pts[i][c], vel[i][c], acc[i][c]);
                let k1 = (pts[i + 1][c], vel[i + 1][c], acc[i + 1][c]);
                let (p, dp, d2p) = hermite5(s[i], s[i + 1], k0, k1, sj);
                x[c] = p;
                v[c] = dp * ds;
                a[c] = d2p * ds * ds + dp * d2s;
            }
            let gam = christoffel_at(metric, &x, fd)?;
            let quadratic = gam.contract(&v, &v);
            let res: Vec<f64> = (0..dim).map(|c| a[c] + quadratic[c]).collect();
            let g = metric.components(&x);
            let norm_sq = |u: &[f64]| -> f64 {
                (0..dim).map(|p| (0..dim).map(|q| g[(p, q)] * u[p] * u[q]).sum::<f64>()).sum::<f64>()
            };
            Ok((norm_sq(&res).max(0.0).sqrt(), (norm_sq(&v).sqrt() - 1.0).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let residual_worst = results.iter().fold(0.0f64, |m, r| m.max(r.0));
    let speed_worst = results.iter().fold(0.0f64, |m, r| m.max(r.1));
    Ok(GeodesicReport {
        residual_worst,
        speed_worst,
        checked: results.len(),
        holds: residual_worst < GEODESIC_TOL && speed_worst < UNIT_SPEED_TOL,
    })
}

/// `b(s) = |grad f(alpha(s))|^2` on the curve grid.
pub fn extract_b(curve: &FlowCurve) -> Result<BFunction> {
    BFunction::sampled(&curve.grid, curve.gradnorm_sq.clone(), curve.model.lambda())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::integrate_flow;
    use crate::soliton::{build_soliton, SolitonSpec};

    fn curve(n: usize, k: usize, lambda: f64, p: &[f64], range: (f64, f64)) -> FlowCurve {
        let m = build_soliton(SolitonSpec::canonical(n, k, lambda).unwrap()).unwrap();
        integrate_flow(&m, p, range, 1e-3).unwrap()
    }

    #[test]
    fn radial_curve_is_minimizing() {
        let c = curve(3, 0, 1.0, &[1.0, 0.0, 0.0], (0.0, 10.0));
        let rep = affine_and_distance_check(&c);
        assert!(rep.holds, "{rep:?}");
        assert!(rep.distance_gap < 1e-6, "{rep:?}");
        assert!(rep.affine_worst < 1e-8);
        let geo = arclength_geodesic_check(&c).unwrap();
        assert!(geo.holds && geo.residual_worst < 1e-6, "{geo:?}");
    }

    #[test]
    fn product_curve_checks() {
        let c = curve(4, 2, 0.5, &[0.6, 0.8, 0.4, -0.3], (-3.0, 5.0));
        let rep = affine_and_distance_check(&c);
        assert!(rep.holds && rep.affine_worst < 1e-8, "{rep:?}");
        assert!(rep.affine_pairs >= 10_000);
        let geo = arclength_geodesic_check(&c).unwrap();
        assert!(geo.holds, "{geo:?}");
        let b = extract_b(&c).unwrap();
        for i in b.interior_nodes() {
            assert!((b.node_jet(i).db - 1.5).abs() < 1e-6);
        }
    }

    #[test]
    fn extracted_slopes_at_the_window_ends() {
        let c = curve(3, 2, 1.0, &[1.0, 0.2, 0.1], (0.0, 5.0));
        let b = extract_b(&c).unwrap();
        for i in b.interior_nodes() {
            assert!((b.node_jet(i).db - 4.0).abs() < 1e-6);
        }
        let c = curve(3, 0, 1.0, &[1.0, 0.0, 0.0], (0.0, 5.0));
        let b = extract_b(&c).unwrap();
        let b0 = b.node_jet(0).b;
        for i in 0..b.node_count() {
            assert!((b.node_jet(i).b - b0 - 2.0 * b.node(i)).abs() < 1e-7);
        }
    }
}
