//! Stochastic midpoint variational integrators.
//!
//! The Lie–Poisson steppers solve the two-stage implicit system for the
//! stage momenta `(μ̃¹, μ̃²)` and the velocity `ξ` by Picard iteration, then
//! push the result forward with the Cayley retraction.

mod fixed_point;
mod stages;
mod vector_space;

pub use fixed_point::{fixed_point, fixed_point_with, FixedPoint};
pub use stages::{
    reconstruct, solve_stages_advected, solve_stages_reduced, step_advected, step_general,
    step_advected_state, step_reduced, AdvectedSolution, AdvectedState, GeneralStep, PhaseState, StageSolution, StageStats,
};
pub use vector_space::{midpoint_step_vs, CanonicalHamiltonian, CanonicalState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{AlgebraVector, Momentum, Rotation, Vec3};

/// How a violated contraction bound is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardMode {
    /// Skip the check.
    Off,
    /// Record the violation in the step statistics and keep going.
    #[default]
    Warn,
    /// Refuse the step with [`Error::StepSize`].
    Strict,
}

/// Solver settings shared by every stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControls {
    pub tol: f64,
    pub max_iter: usize,
    pub guard: GuardMode,
    /// Bound on `|ΔW_i|` used by the guard. When unset the largest
    /// increment of the current step is used.
    pub increment_bound: Option<f64>,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            tol: 1e-12,
            max_iter: 100,
            guard: GuardMode::Warn,
            increment_bound: None,
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if let Some(d) = self.increment_bound {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidArgument(format!("increment bound must be non-negative, got {d}")));
            }
        }
        Ok(())
    }
}

/// Left-trivialized Hamiltonian `h(μ)` on `so(3)*`.
pub trait ReducedHamiltonian: Sync {
    /// `∂h/∂μ`, an element of the algebra.
    fn grad(&self, mu: Momentum) -> AlgebraVector;

    /// Upper bound on `‖∂h/∂μ‖` over the ball `‖μ‖ ≤ radius`, if known.
    fn grad_bound(&self, _radius: f64) -> Option<f64> {
        None
    }
}

/// Hamiltonian `h(μ, α)` with an advected parameter, as for the heavy top.
pub trait AdvectedHamiltonian: Sync {
    /// `(∂h/∂μ, ∂h/∂α)`.
    fn grads(&self, mu: Momentum, alpha: Vec3) -> (AlgebraVector, Vec3);

    /// Upper bound on `‖∂h/∂μ‖` over `‖μ‖ ≤ radius`, uniformly in `α`.
    fn momentum_grad_bound(&self, _radius: f64) -> Option<f64> {
        None
    }
}

/// Hamiltonian `h(g, μ)` on the full phase space `SO(3) × so(3)*`.
pub trait GroupHamiltonian: Sync {
    fn grad_mu(&self, g: &Rotation, mu: Momentum) -> AlgebraVector;

    /// Left-trivialized configuration derivative `g⁻¹ ∂h/∂g`.
    fn trivialized_grad_g(&self, g: &Rotation, mu: Momentum) -> Momentum;

    fn momentum_grad_bound(&self, _radius: f64) -> Option<f64> {
        None
    }
}

impl<F> ReducedHamiltonian for F
where
    F: Fn(Momentum) -> AlgebraVector + Sync,
{
    fn grad(&self, mu: Momentum) -> AlgebraVector {
        self(mu)
    }
}

impl<F> AdvectedHamiltonian for F
where
    F: Fn(Momentum, Vec3) -> (AlgebraVector, Vec3) + Sync,
{
    fn grads(&self, mu: Momentum, alpha: Vec3) -> (AlgebraVector, Vec3) {
        self(mu, alpha)
    }
}

/// Closed form of the contraction guard,
/// `‖𝕀⁻¹‖ R dt + Σ ‖χ_i‖ D`, for the free rigid body with linear noise.
pub fn contraction_guard(inverse_inertia_norm: f64, radius: f64, dt: f64, chi_norms: &[f64], level: f64) -> f64 {
    inverse_inertia_norm * radius * dt + chi_norms.iter().sum::<f64>() * level
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_controls() {
        let c = StepControls::default();
        assert_eq!(c.tol, 1e-12);
        assert_eq!(c.max_iter, 100);
        assert_eq!(c.guard, GuardMode::Warn);
        c.validate().unwrap();
    }

    #[test]
    fn guard_formula() {
        let q = contraction_guard(10.0, 1.0, 0.01, &[0.02], default_d(0.01));
        assert!((q - (0.1 + 0.02 * default_d(0.01))).abs() < 1e-15);
    }

    fn default_d(dt: f64) -> f64 {
        (4.0 * dt.ln().abs() * dt).sqrt()
    }
}
