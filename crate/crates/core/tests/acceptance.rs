//! Acceptance criteria over the rigid model matrix. Prints one line per
//! criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use schouten_core::estimates::{
    ball_volume_monte_carlo, ball_volume_quadrature, default_fit_radii, default_profile_radii, geodesic_ball_profile,
    growth_exponent_analysis, pointwise_bounds_check, potential_growth_fit, radius_seed, sublevel_volume_and_flux,
    VolumeMethod, VolumeNumerics,
};
use schouten_core::flow::{extract_b, integrate_flow};
use schouten_core::geometry::FdConfig;
use schouten_core::ode::{
    bound_certificates, integrate_equality_ode, min_scaled_inequality_residual, residual_of_jet, BFunction, Jet,
};
use schouten_core::scenario::{run_config, RunOptions, ScenarioConfig};
use schouten_core::soliton::{
    build_soliton, max_soliton_residual, pointwise_identities, structural_identity_residuals, ManifoldModel,
    SolitonSpec,
};

type Outcome = Result<String, String>;

/// `{3 <= n <= 6} x {k = 0, 2, ..., n-1} x {lambda = +-0.5, +-1}`.
fn matrix() -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for n in 3..=6 {
        for k in std::iter::once(0).chain(2..n) {
            for lambda in [0.5, 1.0, -0.5, -1.0] {
                out.push((n, k, lambda));
            }
        }
    }
    out
}

fn model(n: usize, k: usize, lambda: f64) -> ManifoldModel {
    build_soliton(SolitonSpec::canonical(n, k, lambda).unwrap()).unwrap()
}

/// Slope of `b`, derived independently: `f = c |x|^2` with
/// `c = (R_N / (2(n-1)) + lambda) / 2` and `R_N = 2(n-1) k lambda / (2(n-1) - k)`.
fn expected_slope(n: usize, k: usize, lambda: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    let r = 2.0 * (n - 1.0) * k * lambda / (2.0 * (n - 1.0) - k);
    let c = (r / (2.0 * (n - 1.0)) + lambda) / 2.0;
    4.0 * c
}

fn expected_exponents(n: usize, k: usize, lambda: f64) -> (f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    let r = 2.0 * (nf - 1.0) * kf * lambda / (2.0 * (nf - 1.0) - kf);
    (nf / 2.0 - (nf - 2.0) * r / (4.0 * (nf - 1.0) * lambda), nf - (nf - 2.0) * r / (2.0 * (nf - 1.0) * lambda))
}

fn check(cond: bool, what: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what)
    }
}

fn soliton_residual() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (n, k, lambda) in matrix() {
        let m = model(n, k, lambda);
        let pts = m.sample_points(200, 3.0, 1);
        let (res, asym) = max_soliton_residual(&m, &pts, FdConfig::default()).map_err(|e| e.to_string())?;
        check(res < 1e-6 && asym < 1e-9, format!("({n},{k},{lambda}): residual {res:e}, asymmetry {asym:e}"))?;
        worst = worst.max(res);
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("worst residual {worst:.2e} over {} models in {secs:.1} s", matrix().len()))
}

fn identities() -> Outcome {
    let mut worst = 0.0f64;
    for (n, k, lambda) in matrix() {
        let m = model(n, k, lambda);
        let pts = m.sample_points(200, 3.0, 2);
        let res = structural_identity_residuals(&m, &pts, FdConfig::default()).map_err(|e| e.to_string())?;
        check(res.worst() < 1e-6, format!("({n},{k},{lambda}): {res:?}"))?;
        worst = worst.max(res.worst());
    }
    let m = model(4, 2, 0.5);
    let id = pointwise_identities(&m, &[0.7, -0.4, 0.3, 0.2], FdConfig::default()).map_err(|e| e.to_string())?;
    check((id.laplacian_f - 1.5).abs() < 1e-6, format!("Delta f = {}", id.laplacian_f))?;
    check((id.scalar_rhs - 2.25).abs() < 1e-6, format!("2|Ric|^2 = {}", id.scalar_rhs))?;
    Ok(format!("worst residual {worst:.2e}; Delta f = {:.9}, 2|Ric|^2 = {:.9}", id.laplacian_f, id.scalar_rhs))
}

fn flow_slopes() -> Outcome {
    let mut worst = 0.0f64;
    for (n, k, lambda) in matrix() {
        let m = model(n, k, lambda);
        let slope = expected_slope(n, k, lambda);
        let mut p = vec![0.0; n];
        p[0] = 2.0 / slope.abs().sqrt();
        for u in p[n - k..].iter_mut() {
            *u = 0.1;
        }
        let range = if lambda > 0.0 { (0.0, 2.0) } else { (-2.0, 0.0) };
        let b = integrate_flow(&m, &p, range, 1e-3).and_then(|c| extract_b(&c)).map_err(|e| e.to_string())?;
        let equality_case = k == 0 || k == n - 1;
        for i in b.interior_nodes() {
            let db = b.node_jet(i).db;
            let product = (db - 2.0 * lambda) * (db - 4.0 * lambda);
            worst = worst.max((db - slope).abs());
            check((db - slope).abs() < 1e-6, format!("({n},{k},{lambda}): b' = {db} vs {slope}"))?;
            check(product <= 1e-7, format!("({n},{k},{lambda}): window product {product:e}"))?;
            check(
                (product.abs() <= 1e-7) == equality_case,
                format!("({n},{k},{lambda}): product {product:e}, equality case {equality_case}"),
            )?;
        }
    }
    Ok(format!("worst |b' - b_slope| {worst:.2e}; window equality exactly at k = 0 and k = n-1"))
}

fn sandwiches() -> Outcome {
    for (n, k, lambda) in matrix() {
        let m = model(n, k, lambda);
        let pts = m.sample_points(10_000, 3.0, 3);
        check(pts.len() == 10_000, "sample count".into())?;
        let rep = pointwise_bounds_check(&m, &pts, FdConfig::default()).map_err(|e| e.to_string())?;
        let slope = expected_slope(n, k, lambda);
        check(rep.holds, format!("({n},{k},{lambda}): {rep:?}"))?;
        check(rep.ratio_spread < 1e-9, format!("({n},{k},{lambda}): spread {:e}", rep.ratio_spread))?;
        check((rep.ratio - slope).abs() < 1e-9, format!("({n},{k},{lambda}): ratio {} vs {slope}", rep.ratio))?;
    }
    Ok(format!("{} models x 10^4 samples", matrix().len()))
}

fn jet(b: f64, db: f64) -> Jet {
    Jet { b, db, d2b: 0.0 }
}

fn ode_certificates() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut used, mut rejected, mut checked) = (0, 0, 0usize);
    while used < 200 {
        let lambda = [0.5, 1.0, -0.5, -1.0][rng.random_range(0..4)];
        let b0: f64 = rng.random_range(0.2..5.0);
        let db0 = lambda * rng.random_range(-8.0..10.0);
        let Ok(sol) = integrate_equality_ode(lambda, (0.0, b0, db0), (-3.0, 3.0), 1e-3) else {
            rejected += 1;
            check(rejected < 50, "too many rejected starts".into())?;
            continue;
        };
        let Ok(cert) = bound_certificates(&sol.b, 0.0) else {
            rejected += 1;
            continue;
        };
        used += 1;
        let (_, res) = min_scaled_inequality_residual(&sol.b).unwrap_or((0.0, 0.0));
        check(res >= -1e-6, format!("equality residual {res:e} at start ({b0}, {db0}), lambda {lambda}"))?;
        check(cert.all_hold(), format!("certificate violated: {cert:?}"))?;
        checked += [Some(&cert.c), Some(&cert.c1), Some(&cert.c0), cert.growth.as_ref().map(|g| &g.check)]
            .iter()
            .flatten()
            .map(|c| c.checked)
            .sum::<usize>();
    }
    for lambda in [0.5, 1.0, -0.5, -1.0] {
        for slope in [2.0 * lambda, 4.0 * lambda] {
            let r = residual_of_jet(jet(3.0, slope), lambda);
            check(r == 0.0, format!("slope {slope}: residual {r}"))?;
        }
    }
    let r = residual_of_jet(jet(3.0, 3.0), 1.0);
    check(r == 1.0, format!("slope 3: residual {r}"))?;
    let lin = BFunction::linear(3.0, 1.0, 1.0, (0.0, f64::INFINITY));
    let r = residual_of_jet(lin.jet(2.0).map_err(|e| e.to_string())?, 1.0);
    check(r == 1.0, format!("linear slope 3: residual {r}"))?;
    Ok(format!("{used} trajectories ({rejected} starts rejected), {checked} bound evaluations; substitutions exact"))
}

fn potential_growth() -> Outcome {
    let mut summary = Vec::new();
    for (n, k, lambda) in matrix().into_iter().filter(|m| m.2 > 0.0) {
        let fit = potential_growth_fit(&model(n, k, lambda), &default_fit_radii()).map_err(|e| e.to_string())?;
        let a = fit.coefficient;
        check(a >= lambda / 4.0 - 0.01 && a <= lambda + 0.01, format!("({n},{k},{lambda}): {a}"))?;
        if k == n - 1 {
            check((a - lambda).abs() < 0.01, format!("({n},{k},{lambda}): {a} should be lambda"))?;
        }
        if k == 0 {
            check((a - lambda / 2.0).abs() < 0.01, format!("({n},{k},{lambda}): {a} should be lambda/2"))?;
        }
        if (n, k, lambda) == (4, 2, 0.5) {
            summary.push(format!("(4,2,0.5) -> {a:.6}"));
        }
    }
    Ok(format!("all shrinking models inside [lambda/4, lambda]; {}", summary.join(", ")))
}

fn volume_growth() -> Outcome {
    let numerics = VolumeNumerics::default();
    let mut triples = Vec::new();
    for (n, k, lambda) in matrix().into_iter().filter(|m| m.2 > 0.0) {
        let m = model(n, k, lambda);
        let profile = geodesic_ball_profile(&m, &default_profile_radii(&m, 41), VolumeMethod::Quadrature, numerics)
            .map_err(|e| e.to_string())?;
        let g = growth_exponent_analysis(&profile, &m).map_err(|e| e.to_string())?;
        let (lo, hi) = expected_exponents(n, k, lambda);
        let target = (n - k) as f64;
        check((g.e_lower - lo).abs() < 1e-12 && (g.e_upper - hi).abs() < 1e-12, format!("({n},{k},{lambda}) exponents"))?;
        check(lo <= target + 1e-12 && target <= hi + 1e-12, format!("({n},{k},{lambda}): n-k outside envelope"))?;
        check(((lo - target).abs() < 1e-12) == (k == n - 1), format!("({n},{k},{lambda}): lower optimality"))?;
        check(((hi - target).abs() < 1e-12) == (k == 0), format!("({n},{k},{lambda}): upper optimality"))?;
        check((g.fitted - target).abs() < 0.05, format!("({n},{k},{lambda}): fitted {}", g.fitted))?;
        check(g.fitted >= lo - 1e-6 && g.fitted <= hi + 1e-6, format!("({n},{k},{lambda}): fitted {} outside", g.fitted))?;
        check(g.linear_constant > 0.0 && g.strictly_increasing, format!("({n},{k},{lambda}): {g:?}"))?;
        if matches!((n, k), (3, 2) | (3, 0)) && lambda == 1.0 {
            triples.push(format!("({n},{k},1): ({:.3}, {:.3}, {:.3})", g.e_lower, g.fitted, g.e_upper));
        }
    }
    let mut worst_z = 0.0f64;
    for (n, k, lambda, r) in [(4, 2, 0.5, 5.0), (3, 2, 1.0, 3.0), (3, 0, 1.0, 2.0), (5, 3, 1.0, 2.5), (4, 2, -0.5, 2.0)] {
        let m = model(n, k, lambda);
        let q = ball_volume_quadrature(&m, r, 1e-8).map_err(|e| e.to_string())?;
        let mc = ball_volume_monte_carlo(&m, r, 1_000_000, radius_seed(0, r)).map_err(|e| e.to_string())?;
        let z = (mc.volume - q).abs() / mc.std_error.unwrap();
        check(z <= 3.0, format!("({n},{k},{lambda}) r = {r}: {q} vs {mc:?}"))?;
        worst_z = worst_z.max(z);
    }
    let euclid = ball_volume_quadrature(&model(3, 0, 1.0), 4.0, 1e-8).map_err(|e| e.to_string())?;
    check((euclid - 4.0 / 3.0 * PI * 64.0).abs() < 1e-8 * euclid, format!("Euclidean ball {euclid}"))?;
    Ok(format!("{}; Monte Carlo within {worst_z:.2} standard errors", triples.join(", ")))
}

fn flux() -> Outcome {
    let mut worst = 0.0f64;
    for (n, k, lambda) in matrix().into_iter().filter(|m| m.2 > 0.0) {
        let m = model(n, k, lambda);
        for r in [0.1, 1.0, 7.5, 40.0, 300.0] {
            let s = sublevel_volume_and_flux(&m, r).map_err(|e| e.to_string())?;
            check(s.relative_residual < 1e-10, format!("({n},{k},{lambda}) r = {r}: {s:?}"))?;
            worst = worst.max(s.relative_residual);
        }
    }
    let m = model(3, 2, 1.0);
    for r in [0.5, 2.0, 10.0] {
        let s = sublevel_volume_and_flux(&m, r).map_err(|e| e.to_string())?;
        let hand = 4.0 * PI * r;
        check((s.flux - hand).abs() < 1e-10 * hand && (s.rhs - hand).abs() < 1e-10 * hand, format!("{s:?}"))?;
    }
    Ok(format!("worst relative residual {worst:.2e}; (3,2,1) both sides 4 pi r"))
}

fn determinism() -> Outcome {
    let cases = [
        "[soliton]\nn = 3\nk = 2\nlambda = 1.0\n[numerics]\nmaster_seed = 11\n",
        "[soliton]\nn = 4\nk = 2\nlambda = -0.5\n[numerics]\nmaster_seed = 12\nmc_samples = 200000\n",
    ];
    for text in cases {
        let cfg = ScenarioConfig::from_toml(text).map_err(|e| e.to_string())?;
        let a = run_config(&cfg, RunOptions::default()).map_err(|e| e.to_string())?;
        let b = run_config(&cfg, RunOptions::default()).map_err(|e| e.to_string())?;
        check(a.report.to_json() == b.report.to_json(), "report differs between runs".into())?;
        let csv = |o: &schouten_core::scenario::ScenarioOutput| o.series.iter().map(|s| s.1.to_csv()).collect::<Vec<_>>();
        check(csv(&a) == csv(&b), "series differ between runs".into())?;
    }
    Ok(format!("{} scenarios rerun byte-identically", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("soliton residual", soliton_residual),
        ("structural identities", identities),
        ("flow slope and window", flow_slopes),
        ("pointwise sandwiches", sandwiches),
        ("ODE certificates", ode_certificates),
        ("quadratic potential growth", potential_growth),
        ("volume growth exponents", volume_growth),
        ("flux identity", flux),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
