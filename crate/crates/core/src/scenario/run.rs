use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, Suite};
use super::report::{CheckRecord, Environment, ReportDocument};
use super::series::Series;
use crate::error::Result;
use crate::estimates::{
    ball_volume_monte_carlo, ball_volume_quadrature, default_fit_radii, default_profile_radii, geodesic_ball_profile,
    growth_exponent_analysis, model_exponents, pair_bound_check, pointwise_bounds_check, potential_growth_fit,
    radius_seed, sublevel_profile, sublevel_volume_and_flux, VolumeMethod, VolumeNumerics, COEFFICIENT_TOL,
    CURVATURE_BOUND_TOL, EXPONENT_TOL, FLUX_TOL, PAIR_TOL,
};
use crate::flow::{
    affine_and_distance_check, arclength_geodesic_check, extract_b, integrate_flow, FlowCurve, AFFINE_TOL,
    GEODESIC_TOL,
};
use crate::geometry::sampling::ball_points;
use crate::geometry::{oracle_agreement, FdConfig};
use crate::ode::{
    bound_certificates, check_sigma_monotone, critical_point_census, integrate_equality_ode, linear_solution,
    min_inequality_residual, min_scaled_inequality_residual, residual_of_jet, slope_window_check, BFunction,
    INEQUALITY_TOL,
};
use crate::soliton::{build_soliton, max_soliton_residual, structural_identity_residuals, ManifoldModel};

/// Pointwise soliton and identity residuals.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Numeric against closed-form fiber curvature.
pub const ORACLE_TOL: f64 = 1e-4;
/// Symmetry of the numeric Ricci and Hessian tensors.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Extracted `b'` against the closed-form slope.
pub const SLOPE_TOL: f64 = 1e-6;
/// Spread and accuracy of the ratio `|grad f|^2 / (f - f0)`.
pub const RATIO_TOL: f64 = 1e-9;
/// Monte Carlo against quadrature, in standard errors.
pub const MC_SIGMAS: f64 = 3.0;

/// Flat radius of the pointwise sample sets.
const SAMPLE_FLAT_RADIUS: f64 = 3.0;
/// Length of the flow segment in `s`.
const FLOW_SPAN: f64 = 2.0;
const MC_RADII: [f64; 2] = [2.0, 5.0];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall time per check (makes reports run-dependent).
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub report: ReportDocument,
    /// Named plot series, e.g. `b_curve`, `volume_profile`.
    pub series: Vec<(&'static str, Series)>,
}

pub fn run_scenario(path: &Path, options: RunOptions) -> Result<ScenarioOutput> {
    run_config(&ScenarioConfig::load(path)?, options)
}

/// Runs the configured suites in dependency order. Failed checks become
/// records; only an invalid model is an error.
pub fn run_config(config: &ScenarioConfig, options: RunOptions) -> Result<ScenarioOutput> {
    let model = build_soliton(config.spec)?;
    let mut ctx = Context::new(config, model);
    let mut records = Vec::new();
    for &suite in &config.checks {
        let start = Instant::now();
        let mut batch = ctx.run_suite(suite);
        if options.timings {
            let per = start.elapsed().as_secs_f64() / batch.len().max(1) as f64;
            batch.iter_mut().for_each(|r| r.wall_time_s = Some(per));
        }
        records.extend(batch);
    }
    let environment = Environment {
        version: env!("CARGO_PKG_VERSION"),
        seed: config.numerics.master_seed,
        spec: config.spec,
        numerics: config.numerics,
    };
    Ok(ScenarioOutput { report: ReportDocument::new(environment, records), series: ctx.series })
}

struct Context<'a> {
    config: &'a ScenarioConfig,
    model: ManifoldModel,
    fd: FdConfig,
    points: Option<Vec<Vec<f64>>>,
    flow: Option<std::result::Result<(FlowCurve, BFunction), String>>,
    series: Vec<(&'static str, Series)>,
}

const SOLITON: &str = "Ric + Hess f = (R/(2(n-1)) + lambda) g";
const FIBER: &str = "Ric_N = (R_N / k) g_N";
const TRACE: &str = "Delta f = n lambda - ((n-2)/(2(n-1))) R";
const RIC_GRAD: &str = "Ric(grad f, X) = 0";
const SCALAR: &str = "<grad f, grad R> + (R/(n-1) + 2 lambda) R = 2 |Ric|^2";
const HAMILTON: &str = "R + |grad f|^2 - 2 lambda~ f = const, lambda~ = R/(2(n-1)) + lambda";
const AFFINE: &str = "f(alpha(s2)) - f(alpha(s1)) = s2 - s1, d(alpha(s1), alpha(s2)) <= length";
const GEODESIC: &str = "gamma(t) = alpha(s(t)), dt = ds / |grad f|, is a unit-speed geodesic";
const SLOPE: &str = "b' = 4(n-1) lambda / (2(n-1) - k)";
const INEQUALITY: &str = "b b'' - (b')^2 + 6 lambda b' - 8 lambda^2 >= 0";
const LINEAR: &str = "b = b_slope s + b0 gives -(b' - 2 lambda)(b' - 4 lambda) >= 0";
const WINDOW: &str = "(b' - 2 lambda)(b' - 4 lambda) <= 0";
const SIGMA: &str = "sigma = (b' - 4 lambda)^2 / (b (b' - 2 lambda)), sigma' b' (b' - 4 lambda) >= 0";
const CENSUS: &str = "b has at most one critical point, a minimum";
const CERTS: &str = "b >= min{b, b e^(b'/(6 lambda))}, b >= min{b, -8 lambda / sigma}, b >= K^2 e^(2 kappa s)";
const BOUNDS: &str = "0 <= lambda R <= 2(n-1) lambda^2, 2 lambda (f - f0) <= |grad f|^2 <= 4 lambda (f - f0)";
const POTENTIAL: &str = "(lambda/4)(d - A1)^2 + f0 <= f <= lambda (d + A2)^2 + f0";
const BALL_GROWTH: &str =
    "C1 r^(n/2 - (n-2) theta / (4(n-1) lambda)) <= vol B_r(q) <= C2 r^(n - (n-2) delta / (2(n-1) lambda))";
const PAIRS: &str = "V(r1) (r/r1)^e_lower <= V(r) <= V(r1) (r/r1)^e_upper, r > r1";
const FLUX: &str = "int_{dD(r)} |grad (f - f0)| = n lambda V(r) - ((n-2)/(2(n-1))) int_{D(r)} R";
const MONTE_CARLO: &str = "vol B_r(q) = sigma_{m-1} int_0^r t^(m-1) V_N(sqrt(r^2 - t^2)) dt";

fn guard(record: CheckRecord, body: impl FnOnce(CheckRecord) -> Result<CheckRecord>) -> CheckRecord {
    let fallback = record.clone();
    body(record).unwrap_or_else(|e| fallback.failed(e))
}

impl<'a> Context<'a> {
    fn new(config: &'a ScenarioConfig, model: ManifoldModel) -> Self {
        let fd = FdConfig::with_step(config.numerics.fd_step);
        Context { config, model, fd, points: None, flow: None, series: Vec::new() }
    }

    fn seed(&self) -> u64 {
        self.config.numerics.master_seed
    }

    fn points(&mut self) -> Vec<Vec<f64>> {
        let (n, seed) = (self.config.numerics.samples, self.seed());
        self.points.get_or_insert_with(|| self.model.sample_points(n, SAMPLE_FLAT_RADIUS, seed)).clone()
    }

    fn run_suite(&mut self, suite: Suite) -> Vec<CheckRecord> {
        match suite {
            Suite::Residuals => self.residuals(),
            Suite::Identities => self.identities(),
            Suite::Flow => self.flow_suite(),
            Suite::Ode => self.ode_suite(),
            Suite::Bounds => vec![self.bounds()],
            Suite::Growth => self.growth(),
            Suite::Volume => self.volume(),
        }
    }

    fn residuals(&mut self) -> Vec<CheckRecord> {
        let pts = self.points();
        let soliton = guard(CheckRecord::new("residuals.soliton", SOLITON), |r| {
            let (worst, asym) = max_soliton_residual(&self.model, &pts, self.fd)?;
            Ok(r.verdict(worst < RESIDUAL_TOL && asym < SYMMETRY_TOL, worst, RESIDUAL_TOL)
                .metric("symmetry_defect", asym)
                .metric("samples", pts.len()))
        });
        let fiber = CheckRecord::new("residuals.fiber_oracle", FIBER);
        let k = self.model.k();
        let fiber = if k == 0 {
            fiber.not_applicable("trivial fiber")
        } else {
            guard(fiber, |r| {
                let fpts = ball_points(k, self.model.fiber_sampling_radius(), self.config.numerics.samples, self.seed());
                let worst = oracle_agreement(&self.model.chart.fiber, &fpts, self.fd)?;
                Ok(r.verdict(worst < ORACLE_TOL, worst, ORACLE_TOL).metric("samples", fpts.len()))
            })
        };
        vec![soliton, fiber]
    }

    fn identities(&mut self) -> Vec<CheckRecord> {
        let pts = self.points();
        let ids = [
            ("identities.trace", TRACE),
            ("identities.ricci_gradient", RIC_GRAD),
            ("identities.scalar", SCALAR),
            ("identities.hamilton", HAMILTON),
        ];
        match structural_identity_residuals(&self.model, &pts, self.fd) {
            Ok(res) => {
                let values = [res.trace, res.ricci_gradient, res.scalar_identity, res.hamilton_spread];
                ids.iter()
                    .zip(values)
                    .map(|((id, anchor), v)| {
                        CheckRecord::new(id, anchor).verdict(v < RESIDUAL_TOL, v, RESIDUAL_TOL).metric("samples", pts.len())
                    })
                    .collect()
            }
            Err(e) => ids.iter().map(|(id, anchor)| CheckRecord::new(id, anchor).failed(&e)).collect(),
        }
    }

    /// Flow from a point with `|grad f|^2 = 1` and generic fiber coordinates,
    /// forward for shrinking models and backward for expanding ones.
    fn flow(&mut self) -> std::result::Result<(FlowCurve, BFunction), String> {
        if self.flow.is_none() {
            let computed = (|| {
                let model = &self.model;
                let mut p = model.base_point();
                p[0] = 1.0 / (2.0 * model.potential.coeff.abs());
                let k = model.k();
                for u in p[model.flat_dim..].iter_mut() {
                    *u = 0.25 * model.fiber_sampling_radius() / (k as f64).sqrt();
                }
                let range = if model.lambda() > 0.0 { (0.0, FLOW_SPAN) } else { (-FLOW_SPAN, 0.0) };
                let curve = integrate_flow(model, &p, range, self.config.numerics.ode_step)?;
                let b = extract_b(&curve)?;
                Ok((curve, b))
            })()
            .map_err(|e: crate::Error| e.to_string());
            if let Ok((_, b)) = &computed {
                self.series.push(("b_curve", Series::from_curve(b)));
            }
            self.flow = Some(computed);
        }
        self.flow.clone().unwrap()
    }

    fn flow_suite(&mut self) -> Vec<CheckRecord> {
        let ids = [("flow.affine_distance", AFFINE), ("flow.geodesic", GEODESIC), ("flow.b_slope", SLOPE)];
        if !self.model.nonconstant_potential() {
            return ids.iter().map(|(id, a)| CheckRecord::new(id, a).not_applicable("constant potential")).collect();
        }
        let (curve, b) = match self.flow() {
            Ok(v) => v,
            Err(e) => return ids.iter().map(|(id, a)| CheckRecord::new(id, a).failed(&e)).collect(),
        };
        let affine = affine_and_distance_check(&curve);
        let affine = CheckRecord::new(ids[0].0, ids[0].1)
            .verdict(affine.holds, affine.affine_worst, AFFINE_TOL)
            .metrics_from(&affine);
        let geodesic = guard(CheckRecord::new(ids[1].0, ids[1].1), |r| {
            let g = arclength_geodesic_check(&curve)?;
            Ok(r.verdict(g.holds, g.residual_worst, GEODESIC_TOL).metrics_from(&g))
        });
        let target = self.model.b_slope_closed_form();
        let worst = b.interior_nodes().map(|i| (b.node_jet(i).db - target).abs()).fold(0.0, f64::max);
        let slope = CheckRecord::new(ids[2].0, ids[2].1)
            .verdict(worst < SLOPE_TOL, worst, SLOPE_TOL)
            .metric("b_slope", target)
            .metric("nodes", b.node_count())
            .metric("omega1", curve.omega1)
            .metric("omega2", curve.omega2);
        vec![affine, geodesic, slope]
    }

    fn ode_suite(&mut self) -> Vec<CheckRecord> {
        let (n, k, lambda) = (self.model.n(), self.model.k(), self.model.lambda());
        let mut out = vec![guard(CheckRecord::new("ode.linear_solution", LINEAR), |r| {
            let b = linear_solution(n, k, lambda)?;
            let (lo, hi) = b.domain();
            let s = if lo.is_finite() { lo + 1.0 } else { hi - 1.0 };
            let res = residual_of_jet(b.jet(s)?, lambda);
            let scale = 8.0 * lambda * lambda;
            let equality = res.abs() <= 1e-12 * scale;
            let expect_equality = k == 0 || k + 1 == n;
            let ok = res >= -1e-12 * scale && equality == expect_equality;
            Ok(r.verdict(ok, (-res).max(0.0), 1e-12 * scale).metric("residual", res).metric("equality", equality))
        })];
        out.push(self.trajectory_certificates());

        let ids = [
            ("ode.main_inequality", INEQUALITY),
            ("ode.slope_window", WINDOW),
            ("ode.sigma_monotone", SIGMA),
            ("ode.critical_points", CENSUS),
            ("ode.flow_certificates", CERTS),
        ];
        if !self.model.nonconstant_potential() {
            out.extend(ids.iter().map(|(id, a)| CheckRecord::new(id, a).not_applicable("constant potential")));
            return out;
        }
        let b = match self.flow() {
            Ok((_, b)) => b,
            Err(e) => {
                out.extend(ids.iter().map(|(id, a)| CheckRecord::new(id, a).failed(&e)));
                return out;
            }
        };
        let tol = 1e-6;
        let (at, worst) = min_inequality_residual(&b).unwrap_or((f64::NAN, f64::NAN));
        out.push(
            CheckRecord::new(ids[0].0, ids[0].1)
                .verdict(worst >= -tol, (-worst).max(0.0), tol)
                .metric("min_residual", worst)
                .metric("at", at),
        );
        let w = slope_window_check(&b);
        out.push(CheckRecord::new(ids[1].0, ids[1].1).verdict(w.holds, w.max_product.max(0.0), INEQUALITY_TOL).metrics_from(&w));
        out.push(guard(CheckRecord::new(ids[2].0, ids[2].1), |r| {
            let m = check_sigma_monotone(&b, b.domain())?;
            Ok(if m.checked == 0 {
                r.not_applicable("b' (b' - 4 lambda) vanishes on the whole curve").metrics_from(&m)
            } else {
                r.verdict(m.holds, (-m.worst).max(0.0), INEQUALITY_TOL).metrics_from(&m)
            })
        }));
        let c = critical_point_census(&b);
        out.push(CheckRecord::new(ids[3].0, ids[3].1).verdict(c.holds, c.critical_points as f64, 1.0).metrics_from(&c));
        out.push(guard(CheckRecord::new(ids[4].0, ids[4].1), |r| {
            let mid = b.node(b.node_count() / 2);
            let cert = bound_certificates(&b, mid)?;
            Ok(r.verdict(cert.all_hold(), cert.violations() as f64, 0.0).metrics_from(&cert))
        }));
        out
    }

    /// Certificates on seeded solutions of the equality ODE started at `s = 0`.
    fn trajectory_certificates(&self) -> CheckRecord {
        guard(CheckRecord::new("ode.trajectory_certificates", CERTS), |r| {
            let lambda = self.model.lambda();
            let step = self.config.numerics.ode_step;
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed());
            rng.set_stream(1);
            let (mut used, mut rejected, mut violations, mut applicable) = (0, 0, 0, 0);
            let mut worst_residual = f64::INFINITY;
            for _ in 0..self.config.numerics.trajectories {
                let b0 = rng.random_range(0.2..5.0);
                let db0 = lambda.abs() * rng.random_range(-8.0..10.0) * lambda.signum();
                let cert = integrate_equality_ode(lambda, (0.0, b0, db0), (-2.0, 2.0), step)
                    .and_then(|sol| Ok((bound_certificates(&sol.b, 0.0)?, sol)));
                let Ok((cert, sol)) = cert else {
                    rejected += 1;
                    continue;
                };
                used += 1;
                violations += cert.violations();
                applicable += [cert.c1.constant.is_some(), cert.growth.is_some()].iter().filter(|v| **v).count();
                if let Some((_, v)) = min_scaled_inequality_residual(&sol.b) {
                    worst_residual = worst_residual.min(v);
                }
            }
            let ok = violations == 0 && worst_residual >= -INEQUALITY_TOL && used > 0;
            Ok(r.verdict(ok, violations as f64, 0.0)
                .metric("trajectories", used)
                .metric("rejected_starts", rejected)
                .metric("optional_certificates", applicable)
                .metric("min_scaled_residual", worst_residual))
        })
    }

    fn bounds(&mut self) -> CheckRecord {
        let record = CheckRecord::new("bounds.pointwise", BOUNDS);
        if !self.model.nonconstant_potential() {
            return record.not_applicable("constant potential");
        }
        let pts = self.points();
        guard(record, |r| {
            let rep = pointwise_bounds_check(&self.model, &pts, self.fd)?;
            let slope = self.model.b_slope_closed_form();
            let scale = slope.abs().max(1.0);
            let worst = (rep.ratio - slope).abs().max(rep.ratio_spread);
            let ok = rep.holds && worst < RATIO_TOL * scale;
            Ok(r.verdict(ok, worst, RATIO_TOL * scale)
                .metrics_from(&rep)
                .metric("b_slope", slope)
                .metric("curvature_tolerance", CURVATURE_BOUND_TOL))
        })
    }

    fn shrinking_guard(&self, id: &str, anchor: &'static str) -> Option<CheckRecord> {
        let r = CheckRecord::new(id, anchor);
        if !self.model.nonconstant_potential() {
            Some(r.not_applicable("constant potential"))
        } else if self.model.lambda() < 0.0 {
            Some(r.not_applicable("proved for shrinking models only"))
        } else {
            None
        }
    }

    fn growth(&mut self) -> Vec<CheckRecord> {
        let mut out = Vec::new();
        let lambda = self.model.lambda();
        out.push(self.shrinking_guard("growth.potential", POTENTIAL).unwrap_or_else(|| {
            guard(CheckRecord::new("growth.potential", POTENTIAL), |r| {
                let fit = potential_growth_fit(&self.model, &default_fit_radii())?;
                let outside = (fit.lower - fit.coefficient).max(fit.coefficient - fit.upper).max(0.0);
                let ok = fit.verdict == crate::ode::Verdict::Holds;
                Ok(r.verdict(ok, outside, COEFFICIENT_TOL).metrics_from(&fit).metric("lambda", lambda))
            })
        }));
        out.push(self.shrinking_guard("growth.ball_exponent", BALL_GROWTH).unwrap_or_else(|| {
            guard(CheckRecord::new("growth.ball_exponent", BALL_GROWTH), |r| {
                let radii = default_profile_radii(&self.model, self.config.numerics.profile_radii);
                let numerics = VolumeNumerics {
                    quadrature_tol: self.config.numerics.quadrature_tol,
                    mc_samples: self.config.numerics.mc_samples,
                    seed: self.seed(),
                };
                let profile = geodesic_ball_profile(&self.model, &radii, VolumeMethod::Quadrature, numerics)?;
                let g = growth_exponent_analysis(&profile, &self.model)?;
                self.series.push(("volume_profile", Series::from_profile(&profile, model_exponents(&self.model).ok())));
                let ok = g.verdict == crate::ode::Verdict::Holds;
                Ok(r.verdict(ok, (g.fitted - g.expected).abs(), EXPONENT_TOL).metrics_from(&g))
            })
        }));
        out.push(self.shrinking_guard("growth.sublevel_pairs", PAIRS).unwrap_or_else(|| {
            guard(CheckRecord::new("growth.sublevel_pairs", PAIRS), |r| {
                let radii = default_profile_radii(&self.model, self.config.numerics.profile_radii);
                let profile = sublevel_profile(&self.model, &radii)?;
                let exps = model_exponents(&self.model)?;
                let pairs = pair_bound_check(&profile, exps)?;
                let g = growth_exponent_analysis(&profile, &self.model)?;
                self.series.push(("sublevel_profile", Series::from_profile(&profile, Some(exps))));
                let worst = (-pairs.lower_margin).max(-pairs.upper_margin).max(0.0);
                Ok(r.verdict(pairs.holds, worst, PAIR_TOL)
                    .metrics_from(&pairs)
                    .metric("fitted", g.fitted)
                    .metric("e_lower", exps.e_lower)
                    .metric("e_upper", exps.e_upper))
            })
        }));
        out
    }

    fn volume(&mut self) -> Vec<CheckRecord> {
        let flux = self.shrinking_guard("volume.flux", FLUX).unwrap_or_else(|| {
            guard(CheckRecord::new("volume.flux", FLUX), |r| {
                let radii = default_profile_radii(&self.model, self.config.numerics.profile_radii);
                let mut worst = 0.0f64;
                for &rad in &radii {
                    worst = worst.max(sublevel_volume_and_flux(&self.model, rad)?.relative_residual);
                }
                let unit = sublevel_volume_and_flux(&self.model, 1.0)?;
                Ok(r.verdict(worst < FLUX_TOL, worst, FLUX_TOL)
                    .metric("radii", radii.len())
                    .metric("flux_at_unit_radius", unit.flux)
                    .metric("rhs_at_unit_radius", unit.rhs))
            })
        });
        let mc = CheckRecord::new("volume.monte_carlo", MONTE_CARLO);
        let mc = if !self.model.nonconstant_potential() {
            mc.not_applicable("constant potential")
        } else {
            guard(mc, |mut r| {
                let mut worst = 0.0f64;
                for rad in MC_RADII {
                    let q = ball_volume_quadrature(&self.model, rad, self.config.numerics.quadrature_tol)?;
                    let seed = radius_seed(self.seed(), rad);
                    let est = ball_volume_monte_carlo(&self.model, rad, self.config.numerics.mc_samples, seed)?;
                    let se = est.std_error.unwrap_or(0.0);
                    let z = (est.volume - q).abs() / se;
                    worst = worst.max(z);
                    r = r.metric(&format!("r{rad}"), [q, est.volume, se]);
                }
                Ok(r.verdict(worst <= MC_SIGMAS, worst, MC_SIGMAS).metric("samples", self.config.numerics.mc_samples))
            })
        };
        vec![flux, mc]
    }
}
