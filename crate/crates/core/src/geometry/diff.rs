/// Step used along a coordinate whose current value is `coord`.
pub fn step_for(h: f64, coord: f64) -> f64 {
    h * coord.abs().max(1.0)
}

/// Central difference of a vector-valued function of one variable at 0.
///
/// With `richardson`, combines the `h` and `h/2` estimates to cancel the
/// leading `O(h^2)` error term.
pub fn central_diff<F>(f: F, h: f64, richardson: bool) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let d = |s: f64| -> Vec<f64> {
        let plus = f(s);
        let minus = f(-s);
        plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * s)).collect()
    };
    let coarse = d(h);
    if !richardson {
        return coarse;
    }
    let fine = d(0.5 * h);
    fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_is_fourth_order() {
        let f = |t: f64| vec![(1.0 + t).exp()];
        let exact = 1f64.exp();
        let e1 = (central_diff(f, 0.1, true)[0] - exact).abs();
        let e2 = (central_diff(f, 0.05, true)[0] - exact).abs();
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
        let p1 = (central_diff(f, 0.1, false)[0] - exact).abs();
        let p2 = (central_diff(f, 0.05, false)[0] - exact).abs();
        assert!((p1 / p2 - 4.0).abs() < 0.1);
    }
}
