//! Scalar functions `b(s)` with derivative access, either an exact linear
//! function or values on a uniform grid.

use serde::Serialize;

use crate::error::{Error, Result};

/// Values (and optionally first derivatives) on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledB {
    start: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BKind {
    AnalyticLinear { slope: f64, intercept: f64 },
    Sampled(SampledB),
}

/// A positive function `b` on `(lo, hi)` together with the soliton constant
/// of the inequality it is tested against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BFunction {
    kind: BKind,
    lambda: f64,
    domain: (f64, f64),
}

/// Value and first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub b: f64,
    pub db: f64,
    pub d2b: f64,
}

const MIN_NODES: usize = 5;

impl BFunction {
    pub fn linear(slope: f64, intercept: f64, lambda: f64, domain: (f64, f64)) -> Self {
        BFunction { kind: BKind::AnalyticLinear { slope, intercept }, lambda, domain }
    }

    /// Sampled function on the strictly increasing, uniformly spaced `grid`.
    pub fn sampled(grid: &[f64], values: Vec<f64>, lambda: f64) -> Result<Self> {
        Self::sampled_with_slopes(grid, values, None, lambda)
    }

    /// Sampled function whose first derivative is also known at the nodes
    /// (as produced by an ODE integrator); second derivatives are then taken
    /// from the slope column.
    pub fn sampled_with_slopes(
        grid: &[f64],
        values: Vec<f64>,
        slopes: Option<Vec<f64>>,
        lambda: f64,
    ) -> Result<Self> {
        let n = grid.len();
        if n < MIN_NODES {
            return Err(Error::InsufficientNodes { needed: MIN_NODES, got: n });
        }
        if values.len() != n || slopes.as_ref().is_some_and(|s| s.len() != n) {
            return Err(Error::InvalidGrid("grid and value columns differ in length".into()));
        }
        let step = (grid[n - 1] - grid[0]) / (n - 1) as f64;
        if !(step > 0.0) {
            return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
        }
        for (i, s) in grid.iter().enumerate() {
            let expected = grid[0] + i as f64 * step;
            if (s - expected).abs() > 1e-6 * step {
                return Err(Error::InvalidGrid(format!("grid is not uniform at node {i}")));
            }
        }
        Ok(BFunction {
            kind: BKind::Sampled(SampledB { start: grid[0], step, values, slopes }),
            lambda,
            domain: (grid[0], grid[n - 1]),
        })
    }

    pub fn kind(&self) -> &BKind {
        &self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.kind, BKind::Sampled(_))
    }

    /// Number of grid nodes (zero for analytic functions).
    pub fn node_count(&self) -> usize {
        match &self.kind {
            BKind::Sampled(sb) => sb.values.len(),
            BKind::AnalyticLinear { .. } => 0,
        }
    }

    pub fn step(&self) -> Option<f64> {
        match &self.kind {
            BKind::Sampled(sb) => Some(sb.step),
            BKind::AnalyticLinear { .. } => None,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        match &self.kind {
            BKind::Sampled(sb) => sb.start + i as f64 * sb.step,
            BKind::AnalyticLinear { .. } => panic!("analytic b has no grid"),
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.node(i)).collect()
    }

    pub fn values(&self) -> Option<&[f64]> {
        match &self.kind {
            BKind::Sampled(sb) => Some(&sb.values),
            BKind::AnalyticLinear { .. } => None,
        }
    }

    /// Index of the grid node at `s`.
    pub fn node_index(&self, s: f64) -> Result<usize> {
        let BKind::Sampled(sb) = &self.kind else {
            return Err(Error::InvalidArgument("analytic b has no grid".into()));
        };
        let n = sb.values.len();
        let lo = sb.start;
        let hi = self.node(n - 1);
        let pos = (s - sb.start) / sb.step;
        if !(pos > -1e-6 && pos < (n - 1) as f64 + 1e-6) {
            return Err(Error::StencilOutOfRange { s, lo, hi });
        }
        let i = pos.round();
        if (pos - i).abs() > 1e-6 {
            return Err(Error::NotOnGrid { s });
        }
        Ok(i as usize)
    }

    /// Value and derivatives at node `i`: five-point central stencils in the
    /// interior, three-point central next to the ends, one-sided second
    /// order at the ends.
    pub fn node_jet(&self, i: usize) -> Jet {
        let BKind::Sampled(sb) = &self.kind else {
            panic!("analytic b has no grid");
        };
        let v = &sb.values;
        match &sb.slopes {
            Some(d) => Jet { b: v[i], db: d[i], d2b: first_derivative(d, i, sb.step) },
            None => Jet {
                b: v[i],
                db: first_derivative(v, i, sb.step),
                d2b: second_derivative(v, i, sb.step),
            },
        }
    }

    /// Value and derivatives at `s` (a grid node for sampled functions).
    pub fn jet(&self, s: f64) -> Result<Jet> {
        let jet = match self.kind {
            BKind::AnalyticLinear { slope, intercept } => Jet { b: slope * s + intercept, db: slope, d2b: 0.0 },
            BKind::Sampled(_) => self.node_jet(self.node_index(s)?),
        };
        if !(jet.b > 0.0) {
            return Err(Error::NonPositive { s, value: jet.b });
        }
        Ok(jet)
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        self.jet(s).map(|j| j.b)
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        self.jet(s).map(|j| j.db)
    }

    /// `phi(z) = b(-z)` on the reflected domain, tested against `-lambda`.
    pub fn reflect(&self) -> BFunction {
        let (lo, hi) = self.domain;
        let kind = match &self.kind {
            BKind::AnalyticLinear { slope, intercept } => {
                BKind::AnalyticLinear { slope: -slope, intercept: *intercept }
            }
            BKind::Sampled(sb) => {
                let n = sb.values.len();
                BKind::Sampled(SampledB {
                    start: -(sb.start + (n - 1) as f64 * sb.step),
                    step: sb.step,
                    values: sb.values.iter().rev().copied().collect(),
                    slopes: sb.slopes.as_ref().map(|d| d.iter().rev().map(|x| -x).collect()),
                })
            }
        };
        BFunction { kind, lambda: -self.lambda, domain: (-hi, -lo) }
    }

    /// Interior nodes where the five-point stencils apply.
    pub fn interior_nodes(&self) -> std::ops::Range<usize> {
        let n = self.node_count();
        if n < MIN_NODES {
            0..0
        } else {
            2..n - 2
        }
    }
}

pub(crate) fn first_derivative(v: &[f64], i: usize, h: f64) -> f64 {
    let n = v.len();
    if i >= 2 && i + 2 < n {
        (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h)
    } else if i >= 1 && i + 1 < n {
        (v[i + 1] - v[i - 1]) / (2.0 * h)
    } else if i == 0 {
        (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    } else {
        (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
    }
}

pub(crate) fn second_derivative(v: &[f64], i: usize, h: f64) -> f64 {
    let n = v.len();
    let h2 = h * h;
    if i >= 2 && i + 2 < n {
        (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2]) / (12.0 * h2)
    } else if i >= 1 && i + 1 < n {
        (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2
    } else if i == 0 {
        (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
    } else {
        (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic_b() -> BFunction {
        let grid: Vec<f64> = (0..101).map(|i| 1.0 + i as f64 * 0.01).collect();
        let values = grid.iter().map(|s| s * s * s + 1.0).collect();
        BFunction::sampled(&grid, values, 1.0).unwrap()
    }

    #[test]
    fn stencils_on_cubic() {
        let b = cubic_b();
        for i in [0, 1, 50, 99, 100] {
            let s = b.node(i);
            let j = b.node_jet(i);
            assert!((j.db - 3.0 * s * s).abs() < 1e-3, "i={i} db={}", j.db);
            assert!((j.d2b - 6.0 * s).abs() < 1e-2, "i={i} d2b={}", j.d2b);
        }
        let j = b.node_jet(50);
        assert!((j.db - 3.0 * 1.5f64.powi(2)).abs() < 1e-10);
        assert!((j.d2b - 9.0).abs() < 1e-8);
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(
            BFunction::sampled(&[0.0, 1.0, 2.0, 3.0], vec![1.0; 4], 1.0),
            Err(Error::InsufficientNodes { .. })
        ));
        assert!(BFunction::sampled(&[0.0, 1.0, 2.0, 3.5, 4.0], vec![1.0; 5], 1.0).is_err());
        assert!(BFunction::sampled(&[4.0, 3.0, 2.0, 1.0, 0.0], vec![1.0; 5], 1.0).is_err());
    }

    #[test]
    fn node_lookup() {
        let b = cubic_b();
        assert_eq!(b.node_index(1.5).unwrap(), 50);
        assert!(matches!(b.node_index(1.505), Err(Error::NotOnGrid { .. })));
        assert!(matches!(b.node_index(2.5), Err(Error::StencilOutOfRange { .. })));
    }

    #[test]
    fn reflection() {
        let b = BFunction::linear(-1.5, 0.0, -0.5, (f64::NEG_INFINITY, 0.0));
        let r = b.reflect();
        assert_eq!(r.kind, BKind::AnalyticLinear { slope: 1.5, intercept: 0.0 });
        assert_eq!(r.lambda(), 0.5);
        assert_eq!(r.domain(), (0.0, f64::INFINITY));
        assert_eq!(r.reflect(), b);

        let grid: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|s| s * s).collect();
        let b = BFunction::sampled(&grid, vals.clone(), 1.0).unwrap();
        let r = b.reflect();
        assert!((r.node(0) + 2.0).abs() < 1e-12);
        assert!((r.node(10) + 1.0).abs() < 1e-12);
        let rv: Vec<f64> = vals.iter().rev().copied().collect();
        assert_eq!(r.values().unwrap(), rv.as_slice());
    }
}
