use nalgebra::{DMatrix, DVector};

use super::StepControls;
use crate::error::{Error, Result};

/// Hamiltonian on `T*ℝⁿ`.
pub trait CanonicalHamiltonian: Sync {
    /// `(∂H/∂q, ∂H/∂p)` at `(q, p)`.
    fn grad(&self, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>);
}

impl<F> CanonicalHamiltonian for F
where
    F: Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>) + Sync,
{
    fn grad(&self, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self(q, p)
    }
}

/// Canonical coordinates `(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl CanonicalState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<CanonicalState> {
        if q.len() != p.len() || q.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "q and p must have the same positive length, got {} and {}",
                q.len(),
                p.len()
            )));
        }
        Ok(CanonicalState { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

fn defect(
    h: &dyn CanonicalHamiltonian,
    noise: &[&dyn CanonicalHamiltonian],
    start: &CanonicalState,
    z: &[f64],
    dt: f64,
    dw: &[f64],
) -> Result<Vec<f64>> {
    let n = start.dim();
    let mq: Vec<f64> = (0..n).map(|j| 0.5 * (start.q[j] + z[j])).collect();
    let mp: Vec<f64> = (0..n).map(|j| 0.5 * (start.p[j] + z[n + j])).collect();
    let (hq, hp) = h.grad(&mq, &mp);
    if hq.len() != n || hp.len() != n {
        return Err(Error::InvalidArgument("Hamiltonian gradient has the wrong dimension".into()));
    }
    let mut out = vec![0.0; 2 * n];
    for j in 0..n {
        out[j] = z[j] - start.q[j] - dt * hp[j];
        out[n + j] = z[n + j] - start.p[j] + dt * hq[j];
    }
    for (hi, w) in noise.iter().zip(dw) {
        let (gq, gp) = hi.grad(&mq, &mp);
        if gq.len() != n || gp.len() != n {
            return Err(Error::InvalidArgument("noise gradient has the wrong dimension".into()));
        }
        for j in 0..n {
            out[j] -= gp[j] * w;
            out[n + j] += gq[j] * w;
        }
    }
    Ok(out)
}

/// One step of the stochastic midpoint scheme on `T*ℝⁿ`,
///
/// `q' − q = Δt ∂H/∂p(m) + Σ ∂Hᵢ/∂p(m) ΔWᵢ`,
/// `p' − p = −Δt ∂H/∂q(m) − Σ ∂Hᵢ/∂q(m) ΔWᵢ`, with `m` the midpoint.
///
/// The implicit system is solved by Newton's method with a central
/// finite-difference Jacobian.
pub fn midpoint_step_vs(
    h: &dyn CanonicalHamiltonian,
    noise: &[&dyn CanonicalHamiltonian],
    state: &CanonicalState,
    dt: f64,
    dw: &[f64],
    controls: &StepControls,
) -> Result<CanonicalState> {
    controls.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if dw.len() != noise.len() {
        return Err(Error::InvalidArgument(format!(
            "{} noise Hamiltonians but {} increments",
            noise.len(),
            dw.len()
        )));
    }
    let n = state.dim();
    let m = 2 * n;
    let mut z: Vec<f64> = state.q.iter().chain(&state.p).copied().collect();
    let scale = z.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let mut residual = f64::INFINITY;
    let mut last_lu = None;
    for iteration in 1..=controls.max_iter {
        let f = defect(h, noise, state, &z, dt, dw)?;
        residual = f.iter().fold(0.0_f64, |a, v| a.max(v.abs())) / scale;
        if !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual,
            });
        }
        if residual <= controls.tol {
            // One more chord step with the last factorization removes the
            // finite-difference error left in the accepted iterate.
            if let Some(lu) = &last_lu {
                if let Some(delta) = nalgebra::LU::solve(lu, &DVector::from_vec(f)) {
                    for (zi, d) in z.iter_mut().zip(delta.iter()) {
                        *zi -= d;
                    }
                }
            }
            let p = z.split_off(n);
            return Ok(CanonicalState { q: z, p });
        }
        let mut jac = DMatrix::<f64>::zeros(m, m);
        for col in 0..m {
            let step = 1e-6 * z[col].abs().max(1.0);
            let mut zp = z.clone();
            zp[col] += step;
            let mut zm = z.clone();
            zm[col] -= step;
            let fp = defect(h, noise, state, &zp, dt, dw)?;
            let fm = defect(h, noise, state, &zm, dt, dw)?;
            for row in 0..m {
                jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * step);
            }
        }
        let lu = jac.lu();
        let delta = lu.solve(&DVector::from_vec(f)).ok_or(Error::NonConvergence {
            iterations: iteration,
            residual,
        })?;
        for (zi, d) in z.iter_mut().zip(delta.iter()) {
            *zi -= d;
        }
        last_lu = Some(lu);
    }
    Err(Error::NonConvergence {
        iterations: controls.max_iter,
        residual,
    })
}
