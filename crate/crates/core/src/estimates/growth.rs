use serde::Serialize;

use super::volume::{VolumeKind, VolumeProfile};
use crate::error::{Error, Result};
use crate::ode::Verdict;
use crate::soliton::ManifoldModel;

/// Slack on the envelope `e_lower <= fitted <= e_upper`.
pub const ENVELOPE_TOL: f64 = 1e-6;
/// Allowed distance of the fitted exponent from `n - k`.
pub const EXPONENT_TOL: f64 = 0.05;
/// Relative slack of the two-sided pair bound on closed-form volumes.
pub const PAIR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthExponents {
    pub e_lower: f64,
    pub e_upper: f64,
}

/// `e_lower = n/2 - (n-2) theta / (4(n-1) lambda)`,
/// `e_upper = n - (n-2) delta / (2(n-1) lambda)` with `theta >= delta` the
/// supremum and infimum of the scalar curvature.
pub fn growth_exponents(n: usize, lambda: f64, theta: f64, delta: f64) -> Result<GrowthExponents> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("growth exponents need lambda > 0, got {lambda}")));
    }
    if theta < delta {
        return Err(Error::InvalidArgument(format!("need theta >= delta, got {theta} < {delta}")));
    }
    let n = n as f64;
    Ok(GrowthExponents {
        e_lower: n / 2.0 - (n - 2.0) * theta / (4.0 * (n - 1.0) * lambda),
        e_upper: n - (n - 2.0) * delta / (2.0 * (n - 1.0) * lambda),
    })
}

/// Exponents with `theta = delta = R`, constant on rigid models.
pub fn model_exponents(model: &ManifoldModel) -> Result<GrowthExponents> {
    growth_exponents(model.n(), model.lambda(), model.scalar_r, model.scalar_r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub fitted: f64,
    pub e_lower: f64,
    pub e_upper: f64,
    /// `n - k`, the exact growth order of the rigid model.
    pub expected: f64,
    pub max_log_residual: f64,
    /// `min V(r) / r` over radii `r >= 1`.
    pub linear_constant: f64,
    pub strictly_increasing: bool,
    pub verdict: Verdict,
}

impl GrowthReport {
    fn not_applicable() -> Self {
        GrowthReport {
            fitted: f64::NAN,
            e_lower: f64::NAN,
            e_upper: f64::NAN,
            expected: f64::NAN,
            max_log_residual: f64::NAN,
            linear_constant: f64::NAN,
            strictly_increasing: false,
            verdict: Verdict::NotApplicable,
        }
    }
}

pub fn growth_exponent_analysis(profile: &VolumeProfile, model: &ManifoldModel) -> Result<GrowthReport> {
    if model.lambda() <= 0.0 {
        return Ok(GrowthReport::not_applicable());
    }
    growth_exponent_analysis_with(profile, model, model_exponents(model)?)
}

/// Same as [`growth_exponent_analysis`] with caller-supplied envelope
/// exponents.
pub fn growth_exponent_analysis_with(
    profile: &VolumeProfile,
    model: &ManifoldModel,
    exponents: GrowthExponents,
) -> Result<GrowthReport> {
    model.require_nonconstant("volume growth")?;
    if model.lambda() <= 0.0 {
        return Ok(GrowthReport::not_applicable());
    }
    let span = match (profile.radii.first(), profile.radii.last()) {
        (Some(lo), Some(hi)) => hi / lo,
        _ => 0.0,
    };
    let fit = match profile.fit {
        Some(fit) if span >= 10.0 * (1.0 - 1e-12) => fit,
        _ => return Err(Error::InsufficientSpan { span }),
    };
    let expected = model.flat_dim as f64;
    let linear_constant = profile
        .radii
        .iter()
        .zip(&profile.volumes)
        .filter(|(r, _)| **r >= 1.0)
        .map(|(r, v)| v / r)
        .fold(f64::INFINITY, f64::min);
    let strictly_increasing = profile.strictly_increasing();
    let fitted = fit.exponent;
    let ok = fitted >= exponents.e_lower - ENVELOPE_TOL
        && fitted <= exponents.e_upper + ENVELOPE_TOL
        && (fitted - expected).abs() <= EXPONENT_TOL
        && fitted >= 1.0 - ENVELOPE_TOL
        && linear_constant > 0.0
        && strictly_increasing;
    Ok(GrowthReport {
        fitted,
        e_lower: exponents.e_lower,
        e_upper: exponents.e_upper,
        expected,
        max_log_residual: fit.max_log_residual,
        linear_constant,
        strictly_increasing,
        verdict: if ok { Verdict::Holds } else { Verdict::Violated },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairBoundReport {
    pub pairs: usize,
    /// Smallest `(V(r) - lower) / lower` over pairs `r1 < r`.
    pub lower_margin: f64,
    /// Smallest `(upper - V(r)) / upper`.
    pub upper_margin: f64,
    pub holds: bool,
}

/// For every pair `r1 < r` of the profile:
/// `V(r1) (r/r1)^e_lower <= V(r) <= V(r1) (r/r1)^e_upper`.
pub fn pair_bound_check(profile: &VolumeProfile, exponents: GrowthExponents) -> Result<PairBoundReport> {
    if profile.kind != VolumeKind::SublevelD {
        return Err(Error::InvalidArgument("the pair bound is checked on sublevel profiles".into()));
    }
    let (r, v) = (&profile.radii, &profile.volumes);
    let mut report = PairBoundReport { pairs: 0, lower_margin: f64::INFINITY, upper_margin: f64::INFINITY, holds: true };
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            let ratio = r[j] / r[i];
            let lower = v[i] * ratio.powf(exponents.e_lower);
            let upper = v[i] * ratio.powf(exponents.e_upper);
            report.lower_margin = report.lower_margin.min((v[j] - lower) / lower);
            report.upper_margin = report.upper_margin.min((upper - v[j]) / upper);
            report.pairs += 1;
        }
    }
    report.holds = report.lower_margin >= -PAIR_TOL && report.upper_margin >= -PAIR_TOL;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::volume::{default_profile_radii, sublevel_profile};
    use crate::soliton::{build_soliton, SolitonSpec};

    fn model(n: usize, k: usize, lambda: f64) -> ManifoldModel {
        build_soliton(SolitonSpec::canonical(n, k, lambda).unwrap()).unwrap()
    }

    #[test]
    fn hand_exponents() {
        for (n, k, lambda, lo, hi) in [(3, 2, 1.0, 1.0, 2.0), (3, 0, 1.0, 1.5, 3.0), (4, 2, 0.5, 1.5, 3.0)] {
            let e = model_exponents(&model(n, k, lambda)).unwrap();
            assert!((e.e_lower - lo).abs() < 1e-12 && (e.e_upper - hi).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn sublevel_growth_is_exact() {
        let m = model(3, 2, 1.0);
        let p = sublevel_profile(&m, &default_profile_radii(&m, 31)).unwrap();
        let g = growth_exponent_analysis(&p, &m).unwrap();
        assert_eq!(g.verdict, Verdict::Holds, "{g:?}");
        assert!((g.fitted - 1.0).abs() < 1e-10);
        let pairs = pair_bound_check(&p, model_exponents(&m).unwrap()).unwrap();
        assert!(pairs.holds && pairs.pairs == 31 * 30 / 2, "{pairs:?}");
    }

    #[test]
    fn short_profiles_and_expanding_models() {
        let m = model(3, 0, 1.0);
        let p = sublevel_profile(&m, &[1.0, 2.0, 4.0]).unwrap();
        assert!(matches!(growth_exponent_analysis(&p, &m), Err(Error::InsufficientSpan { .. })));
        let e = model(4, 2, -0.5);
        assert_eq!(growth_exponent_analysis(&p, &e).unwrap().verdict, Verdict::NotApplicable);
    }

    #[test]
    fn supplied_curvature_bounds() {
        assert!(growth_exponents(4, 1.0, 1.0, 2.0).is_err());
        let e = growth_exponents(4, 1.0, 3.0, 0.0).unwrap();
        assert!((e.e_lower - 1.5).abs() < 1e-12 && e.e_upper == 4.0);
    }
}
