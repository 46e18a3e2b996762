//! One-dimensional integration to a relative tolerance.

use quadrature::double_exponential;

/// `int_a^b f` to relative accuracy `rel_tol`, splitting at the interior
/// `breaks` (kinks of the integrand).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], rel_tol: f64) -> f64 {
    let mut knots = vec![a];
    knots.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            // a coarse pass fixes the scale of the absolute target
            let rough = double_exponential::integrate(&f, w[0], w[1], 1e-3 * (w[1] - w[0]));
            let target = (rel_tol * rough.integral.abs()).max(f64::MIN_POSITIVE);
            double_exponential::integrate(&f, w[0], w[1], target).integral
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_kinked_integrands() {
        let v = integrate(|x| x * x, 0.0, 3.0, &[], 1e-10);
        assert!((v - 9.0).abs() < 1e-9);
        let v = integrate(|x: f64| (x - 1.0).abs(), 0.0, 3.0, &[1.0], 1e-10);
        assert!((v - 2.5).abs() < 1e-9);
        let v = integrate(|x: f64| (1.0 - x * x).max(0.0).sqrt(), -1.0, 1.0, &[], 1e-10);
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }
}
