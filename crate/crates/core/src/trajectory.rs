//! Trajectory driver: advances a rigid body or heavy top over a Wiener grid.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{
    reconstruct, solve_stages_advected, solve_stages_reduced, step_advected, step_reduced, AdvectedHamiltonian,
    ReducedHamiltonian, StageStats, StepControls,
};
use crate::lie::{Momentum, Rotation, Vec3};
use crate::models::{BoundNoise, HeavyTop, NoiseContext, NoiseHamiltonianSpec, RigidBody};
use crate::noise::{default_level, WienerGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    RigidBody(RigidBody),
    HeavyTop(HeavyTop),
}

impl Model {
    pub fn noise_context(&self) -> NoiseContext {
        match self {
            Model::RigidBody(_) => NoiseContext::RigidBody,
            Model::HeavyTop(top) => NoiseContext::heavy_top(top),
        }
    }

    pub fn body(&self) -> &RigidBody {
        match self {
            Model::RigidBody(b) => b,
            Model::HeavyTop(t) => t.body(),
        }
    }
}

/// Whether increments are clipped to `±D_Δt` before use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementMode {
    #[default]
    Truncated,
    Raw,
}

/// Configuration at one sampled time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub step: usize,
    pub t: f64,
    pub mu: Momentum,
    pub g: Rotation,
    /// Body-frame advected direction `Γ = gᵀα₀` (heavy top only).
    pub alpha: Option<Vec3>,
}

/// Solver statistics accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub max_residual: f64,
    pub max_stage_norm: f64,
    pub max_guard: Option<f64>,
    pub guard_violations: usize,
}

impl RunStats {
    fn add(&mut self, s: &StageStats) {
        let n = self.steps as f64;
        self.mean_iterations = (self.mean_iterations * n + s.iterations as f64) / (n + 1.0);
        self.steps += 1;
        self.max_iterations = self.max_iterations.max(s.iterations);
        self.max_residual = self.max_residual.max(s.residual);
        self.max_stage_norm = self.max_stage_norm.max(s.max_stage_norm);
        if let Some(q) = s.guard {
            self.max_guard = Some(self.max_guard.map_or(q, |m| m.max(q)));
        }
        if !s.guard_ok {
            self.guard_violations += 1;
        }
    }
}

/// Step at which a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFailure {
    pub step: usize,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// States at steps `0..=n`, where `n` is the last completed step.
    pub records: Vec<Record>,
    pub stats: RunStats,
    pub failure: Option<StepFailure>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectories hold the initial state")
    }

    pub fn into_result(self) -> Result<Trajectory> {
        match self.failure {
            Some(f) => Err(f.error),
            None => Ok(self),
        }
    }
}

/// A fully specified run apart from its increments.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub model: Model,
    pub noise: Vec<NoiseHamiltonianSpec>,
    pub mu0: Momentum,
    pub g0: Rotation,
    pub dt: f64,
    pub steps: usize,
    pub controls: StepControls,
}

impl Simulation {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Configuration(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.mu0.is_finite() {
            return Err(Error::Configuration("initial momentum is not finite".into()));
        }
        self.controls.validate()?;
        self.bound_noise().map(|_| ())
    }

    pub fn channels(&self) -> usize {
        self.noise.len()
    }

    pub fn bound_noise(&self) -> Result<Vec<BoundNoise>> {
        let ctx = self.model.noise_context();
        self.noise.iter().map(|s| s.bind(ctx)).collect()
    }

    /// Same run at another step size, with the step count rescaled.
    pub fn with_dt(&self, dt: f64, steps: usize) -> Simulation {
        Simulation {
            dt,
            steps,
            ..self.clone()
        }
    }

    /// Initial body-frame direction `Γ₀ = g₀ᵀα₀` for the heavy top.
    pub fn alpha0(&self) -> Option<Vec3> {
        match &self.model {
            Model::HeavyTop(top) => Some(self.g0.apply_inverse(top.alpha0())),
            Model::RigidBody(_) => None,
        }
    }

    /// Contraction guard at step `dt` with the default truncation level.
    pub fn guard_quantity(&self, dt: f64) -> Result<f64> {
        let radius = 2.0 * self.mu0.norm();
        let d = if self.noise.is_empty() {
            0.0
        } else {
            default_level(dt)?.value()
        };
        let drift = self.model.body().inverse_norm() * radius;
        let noise: f64 = self.noise.iter().map(|s| s.momentum_grad_bound(radius)).sum();
        Ok(0.5 * dt * drift + d * noise)
    }

    /// Advance over `grid`. Setup problems are returned as errors; a step
    /// that fails mid-run ends the trajectory and is reported in
    /// [`Trajectory::failure`] alongside the completed prefix.
    pub fn run(&self, grid: &WienerGrid, mode: IncrementMode) -> Result<Trajectory> {
        self.validate()?;
        if grid.channels() != self.channels() {
            return Err(Error::Configuration(format!(
                "{} noise Hamiltonians but the increment grid has {} channels",
                self.channels(),
                grid.channels()
            )));
        }
        if grid.steps() < self.steps {
            return Err(Error::Configuration(format!(
                "run needs {} steps but the increment grid has {}",
                self.steps,
                grid.steps()
            )));
        }
        if (grid.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Configuration(format!(
                "increment grid is at dt = {} but the run uses dt = {}",
                grid.dt(),
                self.dt
            )));
        }
        let level = match (mode, self.channels()) {
            (IncrementMode::Truncated, n) if n > 0 => Some(default_level(self.dt)?),
            _ => None,
        };
        let mut controls = self.controls;
        if mode == IncrementMode::Truncated {
            controls.increment_bound = Some(level.map_or(0.0, |l| l.value()));
        }
        let noise = self.bound_noise()?;

        let mut records = Vec::with_capacity(self.steps + 1);
        let mut state = Record {
            step: 0,
            t: 0.0,
            mu: self.mu0,
            g: self.g0,
            alpha: self.alpha0(),
        };
        records.push(state);
        let mut stats = RunStats::default();
        let mut failure = None;
        let mut dw = vec![0.0; self.channels()];
        for k in 0..self.steps {
            for (c, w) in dw.iter_mut().enumerate() {
                let raw = grid.get(k, c);
                *w = level.map_or(raw, |l| l.truncate(raw));
            }
            match self.advance(&state, &noise, &dw, &controls) {
                Ok((next, s)) => {
                    stats.add(&s);
                    state = next;
                    records.push(state);
                }
                Err(error) => {
                    failure = Some(StepFailure { step: k + 1, error });
                    break;
                }
            }
        }
        if stats.guard_violations > 0 {
            warn!(
                "contraction guard exceeded on {} of {} steps (max {:?})",
                stats.guard_violations, stats.steps, stats.max_guard
            );
        }
        Ok(Trajectory {
            records,
            stats,
            failure,
        })
    }

    fn advance(
        &self,
        state: &Record,
        noise: &[BoundNoise],
        dw: &[f64],
        controls: &StepControls,
    ) -> Result<(Record, StageStats)> {
        let dt = self.dt;
        let step = state.step + 1;
        let t = step as f64 * dt;
        match &self.model {
            Model::RigidBody(body) => {
                let refs: Vec<&dyn ReducedHamiltonian> = noise.iter().map(|n| n as _).collect();
                let (stages, stats) = solve_stages_reduced(body, &refs, state.mu, dt, dw, controls)?;
                let (_, g) = reconstruct(&state.g, &stages, dt);
                let mu = step_reduced(&stages, dt);
                Ok((
                    Record {
                        step,
                        t,
                        mu,
                        g,
                        alpha: None,
                    },
                    stats,
                ))
            }
            Model::HeavyTop(top) => {
                let refs: Vec<&dyn AdvectedHamiltonian> = noise.iter().map(|n| n as _).collect();
                let alpha = state.alpha.expect("heavy-top records carry Γ");
                let (sol, stats) = solve_stages_advected(top, &refs, state.mu, alpha, dt, dw, controls)?;
                let (_, g) = reconstruct(&state.g, &sol.stages, dt);
                let (mu, alpha) = step_advected(&sol, dt);
                Ok((
                    Record {
                        step,
                        t,
                        mu,
                        g,
                        alpha: Some(alpha),
                    },
                    stats,
                ))
            }
        }
    }
}
