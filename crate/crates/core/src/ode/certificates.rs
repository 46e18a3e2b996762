//! Lower-bound certificates for solutions of the inequality started at a
//! point `s~`: a uniform floor in one direction, a floor in the other when
//! sigma has the right sign, and exponential growth when `b'` sits outside
//! the slope window.

use serde::Serialize;

use super::bfunction::{BFunction, BKind};
use super::checks::sigma_of_jet;
use crate::error::Result;

/// Relative slack used when comparing `b` against a claimed bound.
pub const CERTIFICATE_TOL: f64 = 1e-7;

/// Points used to check an analytic `b`.
const ANALYTIC_POINTS: usize = 1001;
/// Length of the checked range for analytic `b` on unbounded domains.
const ANALYTIC_SPAN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    /// The certified constant (absent when not applicable).
    pub constant: Option<f64>,
    /// Range of `s` over which the bound is claimed and was checked.
    pub range: (f64, f64),
    pub checked: usize,
    /// Smallest `(b - bound) / max(1, bound)` over the checked points.
    pub worst_margin: f64,
    pub verdict: Verdict,
}

impl BoundCheck {
    fn not_applicable() -> Self {
        BoundCheck {
            constant: None,
            range: (f64::NAN, f64::NAN),
            checked: 0,
            worst_margin: f64::NAN,
            verdict: Verdict::NotApplicable,
        }
    }
}

/// `b(s) >= k_sq * exp(rate * s)` on `check.range`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub kappa: f64,
    pub k_sq: f64,
    pub rate: f64,
    pub check: BoundCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificates {
    pub s_tilde: f64,
    pub lambda: f64,
    pub sigma: Option<f64>,
    /// `min{b, b exp(b' / (6 lambda))}`, ahead of `s~` (behind for lambda < 0).
    pub c: BoundCheck,
    /// `min{b, -8 lambda / sigma}` on the opposite side, when
    /// `lambda (b' - 2 lambda) < 0`.
    pub c1: BoundCheck,
    /// `min{c, c1}` over the whole domain.
    pub c0: BoundCheck,
    pub growth: Option<GrowthCertificate>,
}

impl BoundCertificates {
    pub fn violations(&self) -> usize {
        let growth = self.growth.as_ref().map(|g| g.check.verdict);
        [Some(self.c.verdict), Some(self.c1.verdict), Some(self.c0.verdict), growth]
            .iter()
            .filter(|v| **v == Some(Verdict::Violated))
            .count()
    }

    pub fn all_hold(&self) -> bool {
        self.violations() == 0
    }

    fn reflected(mut self) -> Self {
        let flip = |c: &mut BoundCheck| c.range = (-c.range.1, -c.range.0);
        self.s_tilde = -self.s_tilde;
        self.lambda = -self.lambda;
        flip(&mut self.c);
        flip(&mut self.c1);
        flip(&mut self.c0);
        if let Some(g) = self.growth.as_mut() {
            g.rate = -g.rate;
            flip(&mut g.check);
        }
        self
    }
}

/// Computes the certificate constants at `s_tilde` and checks every claimed
/// bound on the grid of `b` (a uniform sample for analytic `b`).
/// For `lambda < 0` the computation runs on the reflection `b(-z)`.
pub fn bound_certificates(b: &BFunction, s_tilde: f64) -> Result<BoundCertificates> {
    if b.lambda() < 0.0 {
        return Ok(certify_positive(&b.reflect(), -s_tilde)?.reflected());
    }
    certify_positive(b, s_tilde)
}

fn certify_positive(b: &BFunction, st: f64) -> Result<BoundCertificates> {
    let lambda = b.lambda();
    let j = b.jet(st)?;
    let (lo, hi) = b.domain();
    let ahead = (st, hi);
    let behind = (lo, st);
    let whole = (lo, hi);

    let c_val = j.b.min(j.b * (j.db / (6.0 * lambda)).exp());
    let c = check_bound(b, ahead, Some(c_val), |_| c_val);

    let sigma = sigma_of_jet(j, lambda, st).ok();
    let (c1, c0) = match sigma {
        Some(sg) if lambda * (j.db - 2.0 * lambda) < 0.0 => {
            let c1_val = j.b.min(-8.0 * lambda / sg);
            let c0_val = c_val.min(c1_val);
            (
                check_bound(b, behind, Some(c1_val), |_| c1_val),
                check_bound(b, whole, Some(c0_val), |_| c0_val),
            )
        }
        _ => (BoundCheck::not_applicable(), BoundCheck::not_applicable()),
    };

    let window = (j.db - 2.0 * lambda) * (j.db - 4.0 * lambda) > 0.0 && (j.db - 2.0 * lambda) * j.db > 0.0;
    let growth = match sigma {
        Some(sg) if window && j.db > 4.0 * lambda => {
            let kappa = sg / 4.0;
            let k_sq = j.b * (-2.0 * kappa * st).exp();
            let rate = 2.0 * kappa;
            let check = check_bound(b, ahead, Some(k_sq), |s| k_sq * (rate * s).exp());
            Some(GrowthCertificate { kappa, k_sq, rate, check })
        }
        Some(sg) if window && j.db < 0.0 => {
            let st_sigma = -sg;
            let kappa = st_sigma / 2.0;
            let k_sq = (j.b - 8.0 * lambda / st_sigma) * (st_sigma * st).exp();
            let rate = -2.0 * kappa;
            let check = check_bound(b, behind, Some(k_sq), |s| k_sq * (rate * s).exp());
            Some(GrowthCertificate { kappa, k_sq, rate, check })
        }
        _ => None,
    };

    Ok(BoundCertificates { s_tilde: st, lambda, sigma, c, c1, c0, growth })
}

fn check_bound(b: &BFunction, range: (f64, f64), constant: Option<f64>, bound: impl Fn(f64) -> f64) -> BoundCheck {
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut visit = |s: f64, value: f64| {
        let lb = bound(s);
        worst = worst.min((value - lb) / lb.abs().max(1.0));
        checked += 1;
    };
    let realized = match b.kind() {
        BKind::AnalyticLinear { slope, intercept } => {
            let lo = if range.0.is_finite() { range.0 } else { range.1 - ANALYTIC_SPAN };
            let hi = if range.1.is_finite() { range.1 } else { range.0 + ANALYTIC_SPAN };
            for i in 0..ANALYTIC_POINTS {
                let s = lo + (hi - lo) * i as f64 / (ANALYTIC_POINTS - 1) as f64;
                visit(s, slope * s + intercept);
            }
            (lo, hi)
        }
        BKind::Sampled(_) => {
            let values = b.values().unwrap_or_default();
            let tol = 1e-9 * b.step().unwrap_or(1.0);
            let mut span = (f64::INFINITY, f64::NEG_INFINITY);
            for (i, &v) in values.iter().enumerate() {
                let s = b.node(i);
                if s >= range.0 - tol && s <= range.1 + tol {
                    visit(s, v);
                    span = (span.0.min(s), span.1.max(s));
                }
            }
            span
        }
    };
    let verdict = if worst >= -CERTIFICATE_TOL { Verdict::Holds } else { Verdict::Violated };
    BoundCheck { constant, range: realized, checked, worst_margin: worst, verdict }
}
