use log::debug;
use serde::{Deserialize, Serialize};

use super::fixed_point::fixed_point_with;
use super::{AdvectedHamiltonian, GroupHamiltonian, GuardMode, ReducedHamiltonian, StepControls};
use crate::error::{Error, Result};
use crate::lie::{cayley, dcayinv_dual, diamond, AlgebraVector, Momentum, Rotation, Vec3};

/// Accepted stage values of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSolution {
    pub mu1: Momentum,
    pub mu2: Momentum,
    pub xi_tilde: AlgebraVector,
    pub xi: AlgebraVector,
}

/// Solver diagnostics for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub iterations: usize,
    pub residual: f64,
    /// Largest stage-momentum norm seen across all sweeps.
    pub max_stage_norm: f64,
    /// Contraction guard quantity, when the guard was evaluated.
    pub guard: Option<f64>,
    pub guard_ok: bool,
}

/// Stage solution of the advected scheme together with `α̃ = τ(Δt ξ̃)⁻¹ α_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectedSolution {
    pub stages: StageSolution,
    pub alpha_tilde: Vec3,
}

/// Point of the trivialized phase space `SO(3) × so(3)*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub g: Rotation,
    pub mu: Momentum,
}

/// Heavy-top style state: configuration, body momentum and the advected
/// parameter `α = gᵀα₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvectedState {
    pub g: Rotation,
    pub mu: Momentum,
    pub alpha: Vec3,
}

impl AdvectedState {
    /// State with `α` taken from the spatial parameter `α₀`.
    pub fn new(g: Rotation, mu: Momentum, alpha0: Vec3) -> AdvectedState {
        AdvectedState {
            g,
            mu,
            alpha: g.apply_inverse(alpha0),
        }
    }

    /// `‖α − gᵀα₀‖∞`, which the advected stepper keeps near round-off.
    pub fn alpha_defect(&self, alpha0: Vec3) -> f64 {
        (self.alpha - self.g.apply_inverse(alpha0)).max_abs()
    }
}

/// Result of one step of the general Lie-group scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralStep {
    pub state: PhaseState,
    pub g_tilde: Rotation,
    pub stages: StageSolution,
    pub stats: StageStats,
}

/// Per-model evaluation of the velocity and the configuration force at the
/// stage midpoint. `xi_prev` is the previous velocity iterate, used by models
/// whose force depends on the intermediate configuration.
trait StageModel {
    fn evaluate(&self, mid: Momentum, xi_prev: AlgebraVector) -> (AlgebraVector, Momentum);
}

fn velocity(drift: AlgebraVector, noise: impl Iterator<Item = AlgebraVector>, ratios: &[f64]) -> AlgebraVector {
    let mut xi = drift * 0.5;
    for (g, r) in noise.zip(ratios) {
        xi += g * (0.5 * r);
    }
    xi
}

struct Reduced<'a> {
    drift: &'a dyn ReducedHamiltonian,
    noise: &'a [&'a dyn ReducedHamiltonian],
    ratios: Vec<f64>,
}

impl StageModel for Reduced<'_> {
    fn evaluate(&self, mid: Momentum, _xi_prev: AlgebraVector) -> (AlgebraVector, Momentum) {
        let xi = velocity(self.drift.grad(mid), self.noise.iter().map(|h| h.grad(mid)), &self.ratios);
        (xi, Vec3::ZERO)
    }
}

struct Advected<'a> {
    drift: &'a dyn AdvectedHamiltonian,
    noise: &'a [&'a dyn AdvectedHamiltonian],
    ratios: Vec<f64>,
    alpha: Vec3,
    dt: f64,
}

impl Advected<'_> {
    fn alpha_tilde(&self, xi_tilde: AlgebraVector) -> Vec3 {
        cayley(xi_tilde * self.dt).apply_inverse(self.alpha)
    }
}

impl StageModel for Advected<'_> {
    fn evaluate(&self, mid: Momentum, xi_prev: AlgebraVector) -> (AlgebraVector, Momentum) {
        let alpha_tilde = self.alpha_tilde(xi_prev);
        let (g_mu, g_alpha) = self.drift.grads(mid, alpha_tilde);
        let mut noise_mu = Vec::with_capacity(self.noise.len());
        let mut force_dual = g_alpha;
        for (h, r) in self.noise.iter().zip(&self.ratios) {
            let (m, a) = h.grads(mid, alpha_tilde);
            noise_mu.push(m);
            force_dual += a * *r;
        }
        let xi = velocity(g_mu, noise_mu.into_iter(), &self.ratios);
        (xi, diamond(force_dual, alpha_tilde))
    }
}

struct General<'a> {
    drift: &'a dyn GroupHamiltonian,
    noise: &'a [&'a dyn GroupHamiltonian],
    ratios: Vec<f64>,
    g: Rotation,
    dt: f64,
}

impl General<'_> {
    fn g_tilde(&self, xi_tilde: AlgebraVector) -> Rotation {
        self.g.compose(&cayley(xi_tilde * self.dt))
    }
}

impl StageModel for General<'_> {
    fn evaluate(&self, mid: Momentum, xi_prev: AlgebraVector) -> (AlgebraVector, Momentum) {
        let g_tilde = self.g_tilde(xi_prev);
        let xi = velocity(
            self.drift.grad_mu(&g_tilde, mid),
            self.noise.iter().map(|h| h.grad_mu(&g_tilde, mid)),
            &self.ratios,
        );
        let mut force = self.drift.trivialized_grad_g(&g_tilde, mid);
        for (h, r) in self.noise.iter().zip(&self.ratios) {
            force += h.trivialized_grad_g(&g_tilde, mid) * *r;
        }
        (xi, force)
    }
}

fn check_inputs(mu: Momentum, dt: f64, dw: &[f64], channels: usize, controls: &StepControls) -> Result<Vec<f64>> {
    controls.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if !mu.is_finite() {
        return Err(Error::InvalidArgument("momentum is not finite".into()));
    }
    if dw.len() != channels {
        return Err(Error::InvalidArgument(format!(
            "{} noise Hamiltonians but {} increments",
            channels,
            dw.len()
        )));
    }
    if dw.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument("increments are not finite".into()));
    }
    Ok(dw.iter().map(|w| w / dt).collect())
}

/// Guard quantity `dt·sup‖∂h/∂μ‖/2 + D·Σ sup‖∂hᵢ/∂μ‖`, suprema over the
/// ball of radius `2‖μ_k‖`. For the free rigid body with linear noise this
/// equals `‖𝕀⁻¹‖‖μ_k‖dt + D Σ‖χᵢ‖`.
fn guard_quantity(
    mu: Momentum,
    dt: f64,
    dw: &[f64],
    controls: &StepControls,
    drift_bound: impl Fn(f64) -> Option<f64>,
    noise_bounds: impl Iterator<Item = Option<f64>>,
) -> Option<f64> {
    if controls.guard == GuardMode::Off {
        return None;
    }
    let radius = 2.0 * mu.norm();
    let d = controls
        .increment_bound
        .unwrap_or_else(|| dw.iter().fold(0.0_f64, |m, w| m.max(w.abs())));
    let mut q = 0.5 * dt * drift_bound(radius)?;
    for b in noise_bounds {
        q += d * b?;
    }
    Some(q)
}

fn solve(
    model: &impl StageModel,
    mu_k: Momentum,
    dt: f64,
    controls: &StepControls,
    guard: Option<f64>,
) -> Result<(StageSolution, StageStats)> {
    let guard_ok = guard.is_none_or(|q| q <= 0.5);
    if !guard_ok {
        let q = guard.unwrap_or_default();
        if controls.guard == GuardMode::Strict {
            return Err(Error::StepSize { quantity: q });
        }
        debug!("contraction guard exceeded: {q}");
    }

    let pack = |a: Vec3, b: Vec3, xi: Vec3| -> [f64; 9] { [a.x, a.y, a.z, b.x, b.y, b.z, xi.x, xi.y, xi.z] };
    let unpack = |x: &[f64; 9]| -> (Vec3, Vec3, Vec3) {
        (
            Vec3::new(x[0], x[1], x[2]),
            Vec3::new(x[3], x[4], x[5]),
            Vec3::new(x[6], x[7], x[8]),
        )
    };

    let mut max_norm = mu_k.norm();
    let map = |x: &[f64; 9]| {
        let (a, b, xi_prev) = unpack(x);
        let mid = (a + b) * 0.5;
        let (xi, force) = model.evaluate(mid, xi_prev);
        let h = 0.5 * dt;
        let q = 0.25 * dt * dt;
        let a_next = mu_k - xi.cross(a) * h + xi * (q * xi.dot(a));
        let b_next = mu_k - xi.cross(a) * dt - xi.cross(b) * h + xi * (q * xi.dot(b)) - force * dt;
        max_norm = max_norm.max(a_next.norm()).max(b_next.norm());
        pack(a_next, b_next, xi)
    };
    // The Picard increments are exactly the defects of the two transport
    // equations, and dt·Δξ is the velocity defect on the retraction argument.
    let residual = |x: &[f64; 9], next: &[f64; 9]| {
        let (a, b, xi) = unpack(x);
        let (an, bn, xin) = unpack(next);
        let da = an - a;
        let db = (bn - b) - da;
        let scale = mu_k.max_abs().max(an.max_abs()).max(bn.max_abs()).max(f64::MIN_POSITIVE);
        (da.max_abs().max(db.max_abs()) / scale).max(dt * (xin - xi).max_abs())
    };
    let fp = fixed_point_with(map, residual, pack(mu_k, mu_k, Vec3::ZERO), controls)?;
    let (mu1, mu2, xi) = unpack(&fp.x);
    let stats = StageStats {
        iterations: fp.iterations,
        residual: fp.residual,
        max_stage_norm: max_norm,
        guard,
        guard_ok,
    };
    Ok((
        StageSolution {
            mu1,
            mu2,
            xi_tilde: xi,
            xi,
        },
        stats,
    ))
}

/// Solve the stage system of the reduced Lie–Poisson midpoint scheme.
pub fn solve_stages_reduced(
    drift: &dyn ReducedHamiltonian,
    noise: &[&dyn ReducedHamiltonian],
    mu_k: Momentum,
    dt: f64,
    dw: &[f64],
    controls: &StepControls,
) -> Result<(StageSolution, StageStats)> {
    let ratios = check_inputs(mu_k, dt, dw, noise.len(), controls)?;
    let guard = guard_quantity(
        mu_k,
        dt,
        dw,
        controls,
        |r| drift.grad_bound(r),
        noise.iter().map(|h| h.grad_bound(2.0 * mu_k.norm())),
    );
    solve(&Reduced { drift, noise, ratios }, mu_k, dt, controls, guard)
}

/// `μ_{k+1} = [d_{-Δt ξ} τ⁻¹]* μ̃²`.
pub fn step_reduced(stages: &StageSolution, dt: f64) -> Momentum {
    dcayinv_dual(-stages.xi, dt, stages.mu2)
}

/// Solve the stage system of the advected-parameter scheme.
pub fn solve_stages_advected(
    drift: &dyn AdvectedHamiltonian,
    noise: &[&dyn AdvectedHamiltonian],
    mu_k: Momentum,
    alpha_k: Vec3,
    dt: f64,
    dw: &[f64],
    controls: &StepControls,
) -> Result<(AdvectedSolution, StageStats)> {
    let ratios = check_inputs(mu_k, dt, dw, noise.len(), controls)?;
    if !alpha_k.is_finite() {
        return Err(Error::InvalidArgument("advected parameter is not finite".into()));
    }
    let guard = guard_quantity(
        mu_k,
        dt,
        dw,
        controls,
        |r| drift.momentum_grad_bound(r),
        noise.iter().map(|h| h.momentum_grad_bound(2.0 * mu_k.norm())),
    );
    let model = Advected {
        drift,
        noise,
        ratios,
        alpha: alpha_k,
        dt,
    };
    let (stages, stats) = solve(&model, mu_k, dt, controls, guard)?;
    let alpha_tilde = model.alpha_tilde(stages.xi_tilde);
    Ok((AdvectedSolution { stages, alpha_tilde }, stats))
}

/// `(μ_{k+1}, α_{k+1})` with `α_{k+1} = τ(Δt ξ)⁻¹ α̃`.
pub fn step_advected(solution: &AdvectedSolution, dt: f64) -> (Momentum, Vec3) {
    let s = &solution.stages;
    (
        dcayinv_dual(-s.xi, dt, s.mu2),
        cayley(s.xi * dt).apply_inverse(solution.alpha_tilde),
    )
}

/// One advected step that also carries the configuration along.
pub fn step_advected_state(
    drift: &dyn AdvectedHamiltonian,
    noise: &[&dyn AdvectedHamiltonian],
    state: &AdvectedState,
    dt: f64,
    dw: &[f64],
    controls: &StepControls,
) -> Result<(AdvectedState, StageStats)> {
    let (sol, stats) = solve_stages_advected(drift, noise, state.mu, state.alpha, dt, dw, controls)?;
    let (_, g) = reconstruct(&state.g, &sol.stages, dt);
    let (mu, alpha) = step_advected(&sol, dt);
    Ok((AdvectedState { g, mu, alpha }, stats))
}

/// One step of the general left-trivialized Lie-group scheme. The
/// intermediate configuration `g̃ = g_k τ(Δt ξ̃)` is refreshed on every sweep.
pub fn step_general(
    drift: &dyn GroupHamiltonian,
    noise: &[&dyn GroupHamiltonian],
    state: &PhaseState,
    dt: f64,
    dw: &[f64],
    controls: &StepControls,
) -> Result<GeneralStep> {
    let mu_k = state.mu;
    let ratios = check_inputs(mu_k, dt, dw, noise.len(), controls)?;
    let guard = guard_quantity(
        mu_k,
        dt,
        dw,
        controls,
        |r| drift.momentum_grad_bound(r),
        noise.iter().map(|h| h.momentum_grad_bound(2.0 * mu_k.norm())),
    );
    let model = General {
        drift,
        noise,
        ratios,
        g: state.g,
        dt,
    };
    let (stages, stats) = solve(&model, mu_k, dt, controls, guard)?;
    let (g_tilde, g) = reconstruct(&state.g, &stages, dt);
    Ok(GeneralStep {
        state: PhaseState {
            g,
            mu: step_reduced(&stages, dt),
        },
        g_tilde,
        stages,
        stats,
    })
}

/// `g̃ = g_k τ(Δt ξ̃)` and `g_{k+1} = g̃ τ(Δt ξ)`.
pub fn reconstruct(g_k: &Rotation, stages: &StageSolution, dt: f64) -> (Rotation, Rotation) {
    let g_tilde = g_k.compose(&cayley(stages.xi_tilde * dt));
    let g_next = g_tilde.compose(&cayley(stages.xi * dt));
    (g_tilde, g_next)
}
