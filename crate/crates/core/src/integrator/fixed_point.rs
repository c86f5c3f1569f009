use super::StepControls;
use crate::error::{Error, Result};

/// Accepted fixed point of a Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint<const N: usize> {
    pub x: [f64; N],
    pub iterations: usize,
    pub residual: f64,
}

/// Picard iteration `x ← F(x)` until `‖F(x) − x‖_∞ ≤ tol`.
pub fn fixed_point<const N: usize, F>(map: F, x0: [f64; N], controls: &StepControls) -> Result<FixedPoint<N>>
where
    F: FnMut(&[f64; N]) -> [f64; N],
{
    fixed_point_with(map, max_abs_diff, x0, controls)
}

/// Picard iteration with a caller-supplied residual `r(x, F(x))`.
///
/// On acceptance the returned point is the last image `F(x_n)`.
pub fn fixed_point_with<const N: usize, F, R>(
    mut map: F,
    mut residual: R,
    x0: [f64; N],
    controls: &StepControls,
) -> Result<FixedPoint<N>>
where
    F: FnMut(&[f64; N]) -> [f64; N],
    R: FnMut(&[f64; N], &[f64; N]) -> f64,
{
    controls.validate()?;
    let mut x = x0;
    let mut last = f64::INFINITY;
    for iteration in 1..=controls.max_iter {
        let next = map(&x);
        last = residual(&x, &next);
        if !last.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual: last,
            });
        }
        x = next;
        if last <= controls.tol {
            return Ok(FixedPoint {
                x,
                iterations: iteration,
                residual: last,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: controls.max_iter,
        residual: last,
    })
}

pub(crate) fn max_abs_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_contracts_to_zero() {
        let controls = StepControls::default();
        let fp = fixed_point(|x: &[f64; 1]| [x[0] / 2.0], [1.0], &controls).unwrap();
        assert!(fp.x[0].abs() <= 2e-12);
        assert!((38..=42).contains(&fp.iterations), "{}", fp.iterations);
    }

    #[test]
    fn doubling_does_not_converge() {
        let controls = StepControls::default();
        let err = fixed_point(|x: &[f64; 1]| [2.0 * x[0]], [1.0], &controls).unwrap_err();
        match err {
            Error::NonConvergence { iterations, residual } => {
                assert_eq!(iterations, controls.max_iter);
                assert!(residual > 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blow_up_is_reported_early() {
        let controls = StepControls {
            max_iter: 10_000,
            ..StepControls::default()
        };
        let err = fixed_point(|x: &[f64; 1]| [x[0] * x[0] + 10.0], [1.0], &controls).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations, .. } if iterations < 100));
    }

    #[test]
    fn rejects_invalid_controls() {
        let controls = StepControls {
            tol: 0.0,
            ..StepControls::default()
        };
        assert!(fixed_point(|x: &[f64; 1]| *x, [0.0], &controls).is_err());
        let controls = StepControls {
            max_iter: 0,
            ..StepControls::default()
        };
        assert!(fixed_point(|x: &[f64; 1]| *x, [0.0], &controls).is_err());
    }
}
