//! Fixed-step RK4 solutions of the extremal equation
//! `b b'' = (b' - 2 lambda)(b' - 4 lambda)`.

use super::bfunction::BFunction;
use crate::error::{Error, Result};

/// Integration stops once `b` falls to this level.
pub const POSITIVITY_FLOOR: f64 = 1e-9;

const BLOWUP: f64 = 1e15;

/// Steps discarded in front of a collapse: within this many steps of the
/// singularity the derivative stencils no longer resolve `b''`.
pub const COLLAPSE_TRIM: usize = 100;

#[derive(Debug, Clone)]
pub struct EqualitySolution {
    pub b: BFunction,
    /// Finite left end of the maximal interval when integration halted there.
    pub omega1: Option<f64>,
    /// Finite right end of the maximal interval when integration halted there.
    pub omega2: Option<f64>,
}

fn rhs(lambda: f64, b: f64, v: f64) -> (f64, f64) {
    (v, (v - 2.0 * lambda) * (v - 4.0 * lambda) / b)
}

/// One RK4 step of signed size `h`; `None` on positivity loss or blow-up.
fn rk4_step(lambda: f64, b: f64, v: f64, h: f64) -> Option<(f64, f64)> {
    let ok = |b: f64, v: f64| b > POSITIVITY_FLOOR && b.abs() < BLOWUP && v.abs() < BLOWUP && v.is_finite();
    let (k1b, k1v) = rhs(lambda, b, v);
    let (b2, v2) = (b + 0.5 * h * k1b, v + 0.5 * h * k1v);
    if !ok(b2, v2) {
        return None;
    }
    let (k2b, k2v) = rhs(lambda, b2, v2);
    let (b3, v3) = (b + 0.5 * h * k2b, v + 0.5 * h * k2v);
    if !ok(b3, v3) {
        return None;
    }
    let (k3b, k3v) = rhs(lambda, b3, v3);
    let (b4, v4) = (b + h * k3b, v + h * k3v);
    if !ok(b4, v4) {
        return None;
    }
    let (k4b, k4v) = rhs(lambda, b4, v4);
    let nb = b + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    let nv = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    // a step that moves b by a quarter of itself, or b' by half its size, no
    // longer resolves the solution (b is collapsing towards zero)
    if !ok(nb, nv) || (nb - b).abs() > 0.25 * b || (nv - v).abs() > 0.5 * (1.0 + v.abs()) {
        return None;
    }
    Some((nb, nv))
}

/// Integrates from `(s0, b0, db0)` in both directions across `interval`
/// with fixed step `step`, stopping early where `b` loses positivity or
/// blows up. On such a stop the last [`COLLAPSE_TRIM`] steps are dropped from
/// the returned grid and the stop location is recorded as `omega1`/`omega2`.
pub fn integrate_equality_ode(
    lambda: f64,
    initial: (f64, f64, f64),
    interval: (f64, f64),
    step: f64,
) -> Result<EqualitySolution> {
    let (s0, b0, db0) = initial;
    let (lo, hi) = interval;
    if !(b0 > 0.0) {
        return Err(Error::NonPositive { s: s0, value: b0 });
    }
    if !(step > 0.0) || !(lo <= s0 && s0 <= hi) {
        return Err(Error::InvalidArgument(format!(
            "need step > 0 and lo <= s0 <= hi, got step {step}, [{lo}, {hi}], s0 {s0}"
        )));
    }
    // states after each accepted step, and the step count at a stop
    let march = |dir: f64, count: usize| -> (Vec<(f64, f64)>, Option<usize>) {
        let mut out = Vec::with_capacity(count);
        let (mut b, mut v) = (b0, db0);
        for _ in 0..count {
            match rk4_step(lambda, b, v, dir * step) {
                Some((nb, nv)) => {
                    b = nb;
                    v = nv;
                    out.push((b, v));
                }
                None => {
                    let taken = out.len();
                    out.truncate(taken.saturating_sub(COLLAPSE_TRIM));
                    return (out, Some(taken));
                }
            }
        }
        (out, None)
    };
    let n_fwd = ((hi - s0) / step + 1e-9).floor() as usize;
    let n_back = ((s0 - lo) / step + 1e-9).floor() as usize;
    let (fwd, halted_fwd) = march(1.0, n_fwd);
    let (back, halted_back) = march(-1.0, n_back);

    let first = s0 - back.len() as f64 * step;
    let states: Vec<(f64, f64)> = back.iter().rev().copied().chain(std::iter::once((b0, db0))).chain(fwd.iter().copied()).collect();
    let grid: Vec<f64> = (0..states.len()).map(|i| first + i as f64 * step).collect();
    let omega1 = halted_back.map(|taken| s0 - (taken + 1) as f64 * step);
    let omega2 = halted_fwd.map(|taken| s0 + (taken + 1) as f64 * step);
    let (values, slopes): (Vec<f64>, Vec<f64>) = states.into_iter().unzip();
    let b = BFunction::sampled_with_slopes(&grid, values, Some(slopes), lambda)?;
    Ok(EqualitySolution { b, omega1, omega2 })
}
