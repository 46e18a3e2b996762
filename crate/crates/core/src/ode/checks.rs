//! Pointwise and grid-wide checks of the inequality
//! `b b'' - (b')^2 + 6 lambda b' - 8 lambda^2 >= 0` and its consequences.

use serde::Serialize;

use super::bfunction::{BFunction, BKind, Jet};
use crate::error::{Error, Result};

/// Slack below zero tolerated by inequality verdicts.
pub const INEQUALITY_TOL: f64 = 1e-7;

/// Below this `|b (b' - 2 lambda)|` the quantity sigma is not evaluated.
pub const SIGMA_DENOM_MIN: f64 = 1e-12;

/// Mask width around zeros of `b' - 2 lambda` and `b' (b' - 4 lambda)`.
pub const SIGMA_MASK: f64 = 1e-8;

pub fn residual_of_jet(j: Jet, lambda: f64) -> f64 {
    j.b * j.d2b - j.db * j.db + 6.0 * lambda * j.db - 8.0 * lambda * lambda
}

/// `b b'' - (b' - 2 lambda)(b' - 4 lambda)`; algebraically equal to
/// [`residual_of_jet`].
pub fn factored_residual_of_jet(j: Jet, lambda: f64) -> f64 {
    j.b * j.d2b - (j.db - 2.0 * lambda) * (j.db - 4.0 * lambda)
}

/// `b b'' - (b')^2 + 6 lambda b' - 8 lambda^2` at `s`.
pub fn main_inequality_residual(b: &BFunction, s: f64) -> Result<f64> {
    Ok(residual_of_jet(b.jet(s)?, b.lambda()))
}

pub fn main_inequality_residual_factored(b: &BFunction, s: f64) -> Result<f64> {
    Ok(factored_residual_of_jet(b.jet(s)?, b.lambda()))
}

/// Size of the terms entering the residual, floored at one. Large `b` makes
/// the raw residual a difference of huge numbers; verdicts on sampled data
/// compare `residual / residual_scale` against the tolerance.
pub fn residual_scale(j: Jet, lambda: f64) -> f64 {
    let terms = (j.b * j.d2b).abs() + j.db * j.db + 6.0 * (lambda * j.db).abs() + 8.0 * lambda * lambda;
    terms.max(1.0)
}

/// Smallest scaled residual over the interior nodes, with its node.
pub fn min_scaled_inequality_residual(b: &BFunction) -> Option<(f64, f64)> {
    b.interior_nodes()
        .map(|i| {
            let j = b.node_jet(i);
            (b.node(i), residual_of_jet(j, b.lambda()) / residual_scale(j, b.lambda()))
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
}

/// Smallest residual over the interior nodes of a sampled `b`, with its node.
pub fn min_inequality_residual(b: &BFunction) -> Option<(f64, f64)> {
    b.interior_nodes()
        .map(|i| (b.node(i), residual_of_jet(b.node_jet(i), b.lambda())))
        .min_by(|x, y| x.1.total_cmp(&y.1))
}

/// The linear solution `b(s) = 4(n-1) lambda s / (2(n-1) - k)` carried by
/// the rigid model with parameters `(n, k, lambda)`.
pub fn linear_solution(n: usize, k: usize, lambda: f64) -> Result<BFunction> {
    if n < 3 || k > n {
        return Err(Error::InvalidSpec(format!("(n, k) = ({n}, {k}) out of range")));
    }
    if !lambda.is_finite() || lambda == 0.0 {
        return Err(Error::InvalidSpec(format!("lambda = {lambda}: must be finite and nonzero")));
    }
    let denom = 2.0 * (n as f64 - 1.0) - k as f64;
    if denom == 0.0 {
        return Err(Error::InvalidSpec(format!("2(n-1) = k = {k}")));
    }
    let slope = 4.0 * (n as f64 - 1.0) * lambda / denom;
    let domain = if lambda > 0.0 { (0.0, f64::INFINITY) } else { (f64::NEG_INFINITY, 0.0) };
    Ok(BFunction::linear(slope, 0.0, lambda, domain))
}

/// `sigma = (b' - 4 lambda)^2 / (b (b' - 2 lambda))`.
pub fn sigma_of_jet(j: Jet, lambda: f64, s: f64) -> Result<f64> {
    let denom = j.b * (j.db - 2.0 * lambda);
    if denom.abs() < SIGMA_DENOM_MIN {
        return Err(Error::DegenerateDenominator { s, value: denom.abs() });
    }
    Ok((j.db - 4.0 * lambda).powi(2) / denom)
}

pub fn sigma(b: &BFunction, s: f64) -> Result<f64> {
    sigma_of_jet(b.jet(s)?, b.lambda(), s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSeries {
    pub grid: Vec<f64>,
    /// `NaN` where masked.
    pub sigma: Vec<f64>,
    pub valid: Vec<bool>,
}

fn sigma_masked(j: Jet, lambda: f64) -> bool {
    (j.db - 2.0 * lambda).abs() < SIGMA_MASK || (j.b * (j.db - 2.0 * lambda)).abs() < SIGMA_DENOM_MIN
}

/// Sigma at the given points (grid nodes for sampled `b`).
pub fn sigma_series(b: &BFunction, grid: &[f64]) -> Result<SigmaSeries> {
    let mut out = SigmaSeries { grid: grid.to_vec(), sigma: Vec::new(), valid: Vec::new() };
    for &s in grid {
        let j = b.jet(s)?;
        if sigma_masked(j, b.lambda()) {
            out.sigma.push(f64::NAN);
            out.valid.push(false);
        } else {
            out.sigma.push(sigma_of_jet(j, b.lambda(), s)?);
            out.valid.push(true);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub holds: bool,
    pub checked: usize,
    pub masked: usize,
    /// Smallest `sigma' * sign(b' (b' - 4 lambda))` seen.
    pub worst: f64,
}

/// Checks that `sigma' / (b' (b' - 4 lambda)) >= 0` on `[lo, hi]`.
///
/// Sampled `b` is checked at interior nodes whose five-point sigma stencil is
/// unmasked; linear `b` on 1001 uniform points with the closed-form derivative.
pub fn check_sigma_monotone(b: &BFunction, interval: (f64, f64)) -> Result<MonotoneReport> {
    let lambda = b.lambda();
    let (lo, hi) = interval;
    let mut rep = MonotoneReport { holds: true, checked: 0, masked: 0, worst: f64::INFINITY };
    match *b.kind() {
        BKind::AnalyticLinear { slope, intercept } => {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument("linear b needs a finite interval".into()));
            }
            let gate = slope * (slope - 4.0 * lambda);
            for i in 0..=1000 {
                let s = lo + (hi - lo) * i as f64 / 1000.0;
                let j = b.jet(s)?;
                if sigma_masked(j, lambda) || gate.abs() < SIGMA_MASK {
                    rep.masked += 1;
                    continue;
                }
                let bs = slope * s + intercept;
                let dsigma = -slope * (slope - 4.0 * lambda).powi(2) / (bs * bs * (slope - 2.0 * lambda));
                let v = dsigma * gate.signum();
                rep.checked += 1;
                rep.worst = rep.worst.min(v);
            }
        }
        BKind::Sampled(_) => {
            let h = b.step().unwrap();
            let n = b.node_count();
            let jets: Vec<Jet> = (0..n).map(|i| b.node_jet(i)).collect();
            let sig: Vec<Option<f64>> = jets
                .iter()
                .enumerate()
                .map(|(i, &j)| {
                    if sigma_masked(j, lambda) || !(j.b > 0.0) {
                        None
                    } else {
                        sigma_of_jet(j, lambda, b.node(i)).ok()
                    }
                })
                .collect();
            for i in 4..n.saturating_sub(4) {
                let s = b.node(i);
                if s < lo - 1e-12 || s > hi + 1e-12 {
                    continue;
                }
                let gate = jets[i].db * (jets[i].db - 4.0 * lambda);
                let window: Option<Vec<f64>> = (i - 2..=i + 2).map(|m| sig[m]).collect();
                let Some(w) = window.filter(|_| gate.abs() >= SIGMA_MASK) else {
                    rep.masked += 1;
                    continue;
                };
                let dsigma = (-w[4] + 8.0 * w[3] - 8.0 * w[1] + w[0]) / (12.0 * h);
                rep.checked += 1;
                rep.worst = rep.worst.min(dsigma * gate.signum());
            }
        }
    }
    rep.holds = rep.worst >= -INEQUALITY_TOL;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensusReport {
    pub critical_points: usize,
    /// Every sign change of `b'` is from negative to positive with `b'' > 0`.
    pub minima_ok: bool,
    /// Once `b'` leaves `[min(2l,4l), max(2l,4l)]` it keeps moving away.
    pub monotone_escape: bool,
    pub holds: bool,
}

/// Counts critical points of `b` and checks the monotone-escape property of `b'`.
pub fn critical_point_census(b: &BFunction) -> CensusReport {
    let lambda = b.lambda();
    let upper = (2.0 * lambda).max(4.0 * lambda);
    let lower = (2.0 * lambda).min(4.0 * lambda);
    let BKind::Sampled(_) = b.kind() else {
        let BKind::AnalyticLinear { slope, .. } = *b.kind() else { unreachable!() };
        let crit = usize::from(slope == 0.0);
        return CensusReport { critical_points: crit, minima_ok: crit == 0, monotone_escape: true, holds: crit == 0 };
    };
    let n = b.node_count();
    let jets: Vec<Jet> = (0..n).map(|i| b.node_jet(i)).collect();

    let mut critical = 0;
    let mut minima_ok = true;
    let mut prev_sign = 0.0f64;
    for (i, j) in jets.iter().enumerate() {
        let sgn = if j.db > 0.0 {
            1.0
        } else if j.db < 0.0 {
            -1.0
        } else {
            0.0
        };
        if sgn != 0.0 {
            if prev_sign != 0.0 && sgn != prev_sign {
                critical += 1;
                let at = if jets[i - 1].db.abs() < j.db.abs() { i - 1 } else { i };
                minima_ok &= prev_sign < 0.0 && jets[at].d2b > 0.0;
            }
            prev_sign = sgn;
        }
    }

    let mut escape = true;
    let mut suffix_min = f64::INFINITY;
    for j in jets.iter().rev() {
        if j.db > upper && j.db > suffix_min + INEQUALITY_TOL {
            escape = false;
        }
        suffix_min = suffix_min.min(j.db);
    }
    let mut prefix_max = f64::NEG_INFINITY;
    for j in &jets {
        if j.db < lower && j.db < prefix_max - INEQUALITY_TOL {
            escape = false;
        }
        prefix_max = prefix_max.max(j.db);
    }
    CensusReport {
        critical_points: critical,
        minima_ok,
        monotone_escape: escape,
        holds: critical <= 1 && minima_ok && escape,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowReport {
    /// Largest `(b' - 2 lambda)(b' - 4 lambda)` over the grid.
    pub max_product: f64,
    pub product_ok: bool,
    /// Smallest slack of the increment sandwich over all node pairs.
    pub sandwich_worst: f64,
    pub sandwich_ok: bool,
    pub holds: bool,
}

/// Checks `(b' - 2 lambda)(b' - 4 lambda) <= 0` at every node and
/// `2 lambda (s2 - s1) <= b(s2) - b(s1) <= 4 lambda (s2 - s1)` (bounds
/// swapped for negative lambda) for every node pair `s1 <= s2`.
pub fn slope_window_check(b: &BFunction) -> WindowReport {
    let lambda = b.lambda();
    let lower = (2.0 * lambda).min(4.0 * lambda);
    let upper = (2.0 * lambda).max(4.0 * lambda);
    let product = |db: f64| (db - 2.0 * lambda) * (db - 4.0 * lambda);
    let (max_product, sandwich_worst) = match *b.kind() {
        BKind::AnalyticLinear { slope, .. } => (product(slope), (slope - lower).min(upper - slope)),
        BKind::Sampled(_) => {
            let n = b.node_count();
            let values = b.values().unwrap();
            let max_product =
                (0..n).map(|i| product(b.node_jet(i).db)).fold(f64::NEG_INFINITY, f64::max);
            // all pairs at once: g_lo = b - lower s must be nondecreasing and
            // g_hi = b - upper s nonincreasing, so compare against running extrema
            let mut worst = f64::INFINITY;
            let (mut max_lo, mut min_hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for (i, &v) in values.iter().enumerate() {
                let s = b.node(i);
                let g_lo = v - lower * s;
                let g_hi = v - upper * s;
                if i > 0 {
                    worst = worst.min(g_lo - max_lo).min(min_hi - g_hi);
                }
                max_lo = max_lo.max(g_lo);
                min_hi = min_hi.min(g_hi);
            }
            (max_product, worst)
        }
    };
    let product_ok = max_product <= INEQUALITY_TOL;
    let sandwich_ok = sandwich_worst >= -INEQUALITY_TOL;
    WindowReport { max_product, product_ok, sandwich_worst, sandwich_ok, holds: product_ok && sandwich_ok }
}
