use nalgebra::{DMatrix, DVector};

use super::diff::{central_diff, step_for};

/// A smooth scalar function on chart coordinates.
///
/// The default derivative methods use Richardson-extrapolated central
/// differences with base step `h`; fields with closed-form derivatives
/// override them.
pub trait ScalarField: Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn partials(&self, x: &[f64], h: f64) -> DVector<f64> {
        let n = x.len();
        DVector::from_fn(n, |i, _| {
            let hi = step_for(h, x[i]);
            central_diff(
                |t| {
                    let mut y = x.to_vec();
                    y[i] += t;
                    vec![self.value(&y)]
                },
                hi,
                true,
            )[0]
        })
    }

    fn second_partials(&self, x: &[f64], h: f64) -> DMatrix<f64> {
        let n = x.len();
        let mut hess = DMatrix::zeros(n, n);
        for j in 0..n {
            let hj = step_for(h, x[j]);
            let col = central_diff(
                |t| {
                    let mut y = x.to_vec();
                    y[j] += t;
                    self.partials(&y, h).as_slice().to_vec()
                },
                hj,
                true,
            );
            for i in 0..n {
                hess[(i, j)] = col[i];
            }
        }
        (&hess + hess.transpose()) * 0.5
    }
}

/// The zero function.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl ScalarField for ZeroField {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn partials(&self, x: &[f64], _h: f64) -> DVector<f64> {
        DVector::zeros(x.len())
    }

    fn second_partials(&self, x: &[f64], _h: f64) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }
}

/// Scalar field given by a closure, differentiated numerically.
pub struct FnField<F>(pub F);

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}
