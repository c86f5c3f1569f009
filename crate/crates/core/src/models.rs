//! Free rigid body, heavy top and the catalog of stochastic Hamiltonians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{AdvectedHamiltonian, GroupHamiltonian, ReducedHamiltonian};
use crate::lie::{AlgebraVector, Mat3, Momentum, Rotation, Vec3};

const SYMMETRY_TOL: f64 = 1e-12;

fn spd_inverse(inertia: &Mat3) -> Result<Mat3> {
    if !inertia.is_finite() {
        return Err(Error::Configuration("inertia has non-finite entries".into()));
    }
    let asym = inertia.sub(&inertia.transpose()).max_abs();
    if asym > SYMMETRY_TOL * inertia.max_abs().max(1.0) {
        return Err(Error::Configuration(format!("inertia is not symmetric (defect {asym:e})")));
    }
    // Sylvester's criterion on the leading principal minors.
    let m = &inertia.0;
    let d1 = m[0][0];
    let d2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let d3 = inertia.det();
    if !(d1 > 0.0 && d2 > 0.0 && d3 > 0.0) {
        return Err(Error::Configuration("inertia is not positive definite".into()));
    }
    inertia
        .inverse(0.0)
        .ok_or_else(|| Error::Configuration("inertia is singular".into()))
}

/// Free rigid body with body-frame inertia tensor `𝕀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat3", into = "Mat3")]
pub struct RigidBody {
    inertia: Mat3,
    inverse: Mat3,
    inverse_norm: f64,
}

impl RigidBody {
    pub fn new(inertia: Mat3) -> Result<RigidBody> {
        let inverse = spd_inverse(&inertia)?;
        Ok(RigidBody {
            inertia,
            inverse,
            inverse_norm: inverse.symmetric_spectral_norm(),
        })
    }

    pub fn diagonal(i1: f64, i2: f64, i3: f64) -> Result<RigidBody> {
        RigidBody::new(Mat3::diag(Vec3::new(i1, i2, i3)))
    }

    pub fn inertia(&self) -> &Mat3 {
        &self.inertia
    }

    pub fn inverse_inertia(&self) -> &Mat3 {
        &self.inverse
    }

    /// Spectral norm `‖𝕀⁻¹‖`.
    pub fn inverse_norm(&self) -> f64 {
        self.inverse_norm
    }
}

impl TryFrom<Mat3> for RigidBody {
    type Error = Error;

    fn try_from(m: Mat3) -> Result<RigidBody> {
        RigidBody::new(m)
    }
}

impl From<RigidBody> for Mat3 {
    fn from(b: RigidBody) -> Mat3 {
        b.inertia
    }
}

/// Kinetic energy `½ Π·𝕀⁻¹Π`.
pub fn rb_energy(body: &RigidBody, pi: Momentum) -> f64 {
    0.5 * pi.dot(body.inverse.mul_vec(pi))
}

/// Body angular velocity `𝕀⁻¹Π`.
pub fn rb_grad(body: &RigidBody, pi: Momentum) -> AlgebraVector {
    body.inverse.mul_vec(pi)
}

impl ReducedHamiltonian for RigidBody {
    fn grad(&self, mu: Momentum) -> AlgebraVector {
        rb_grad(self, mu)
    }

    fn grad_bound(&self, radius: f64) -> Option<f64> {
        Some(self.inverse_norm * radius)
    }
}

fn default_alpha0() -> Vec3 {
    Vec3::Z
}

#[derive(Serialize, Deserialize)]
struct HeavyTopParams {
    inertia: Mat3,
    mass: f64,
    gravity: f64,
    lever_arm: Vec3,
    #[serde(default = "default_alpha0")]
    alpha0: Vec3,
}

/// Heavy top with a fixed point, `h(Π, Γ) = ½ Π·𝕀⁻¹Π + m g a·Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HeavyTopParams", into = "HeavyTopParams")]
pub struct HeavyTop {
    body: RigidBody,
    mass: f64,
    gravity: f64,
    lever_arm: Vec3,
    alpha0: Vec3,
    weight: Vec3,
}

impl From<HeavyTop> for HeavyTopParams {
    fn from(t: HeavyTop) -> HeavyTopParams {
        HeavyTopParams {
            inertia: t.body.inertia,
            mass: t.mass,
            gravity: t.gravity,
            lever_arm: t.lever_arm,
            alpha0: t.alpha0,
        }
    }
}

impl TryFrom<HeavyTopParams> for HeavyTop {
    type Error = Error;

    fn try_from(p: HeavyTopParams) -> Result<HeavyTop> {
        HeavyTop::new(p.inertia, p.mass, p.gravity, p.lever_arm, p.alpha0)
    }
}

impl HeavyTop {
    pub fn new(inertia: Mat3, mass: f64, gravity: f64, lever_arm: Vec3, alpha0: Vec3) -> Result<HeavyTop> {
        let body = RigidBody::new(inertia)?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Configuration(format!("mass must be positive, got {mass}")));
        }
        if !(gravity > 0.0 && gravity.is_finite()) {
            return Err(Error::Configuration(format!("gravity must be positive, got {gravity}")));
        }
        if !lever_arm.is_finite() {
            return Err(Error::Configuration("lever arm is not finite".into()));
        }
        if !(alpha0.is_finite() && alpha0.norm() > 0.0) {
            return Err(Error::Configuration("reference direction must be non-zero".into()));
        }
        Ok(HeavyTop {
            body,
            mass,
            gravity,
            lever_arm,
            alpha0,
            weight: lever_arm * (mass * gravity),
        })
    }

    /// The top of the gyroscopic precession experiments:
    /// `𝕀 = diag(0.1, 0.1, 1)`, `m = 0.1`, `g = 9.8`, `a = (0, 0, 1)`.
    pub fn symmetric_example() -> HeavyTop {
        HeavyTop::new(Mat3::diag(Vec3::new(0.1, 0.1, 1.0)), 0.1, 9.8, Vec3::Z, Vec3::Z).expect("valid parameters")
    }

    pub fn body(&self) -> &RigidBody {
        &self.body
    }

    pub fn inertia(&self) -> &Mat3 {
        self.body().inertia()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn lever_arm(&self) -> Vec3 {
        self.lever_arm
    }

    pub fn alpha0(&self) -> Vec3 {
        self.alpha0
    }

    /// `m g ‖a‖`.
    pub fn mgh(&self) -> f64 {
        self.weight.norm()
    }

    /// `m g`, the scale of the gravity-type noise Hamiltonians.
    pub fn mg(&self) -> f64 {
        self.mass * self.gravity
    }

    pub fn energy(&self, pi: Momentum, gamma: Vec3) -> f64 {
        rb_energy(self.body(), pi) + self.weight.dot(gamma)
    }
}

/// `(∂h/∂Π, ∂h/∂Γ) = (𝕀⁻¹Π, m g a)`.
pub fn ht_grads(top: &HeavyTop, pi: Momentum, _gamma: Vec3) -> (AlgebraVector, Vec3) {
    (rb_grad(top.body(), pi), top.weight)
}

impl AdvectedHamiltonian for HeavyTop {
    fn grads(&self, mu: Momentum, alpha: Vec3) -> (AlgebraVector, Vec3) {
        ht_grads(self, mu, alpha)
    }

    fn momentum_grad_bound(&self, radius: f64) -> Option<f64> {
        Some(self.body().inverse_norm() * radius)
    }
}

/// The heavy top on the unreduced phase space, with `Γ = gᵀα₀`.
impl GroupHamiltonian for HeavyTop {
    fn grad_mu(&self, _g: &Rotation, mu: Momentum) -> AlgebraVector {
        rb_grad(self.body(), mu)
    }

    fn trivialized_grad_g(&self, g: &Rotation, _mu: Momentum) -> Momentum {
        self.weight.cross(g.apply_inverse(self.alpha0))
    }

    fn momentum_grad_bound(&self, radius: f64) -> Option<f64> {
        Some(self.body().inverse_norm() * radius)
    }
}

fn default_momentum_k() -> f64 {
    0.1
}

fn default_gamma_k() -> f64 {
    1.0
}

fn default_norm_k() -> f64 {
    0.01
}

/// Stochastic Hamiltonian `hᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseHamiltonianSpec {
    /// `χ·Π`
    LinearMomentum { chi: Vec3 },
    /// `k Π_x`
    MomentumX {
        #[serde(default = "default_momentum_k")]
        k: f64,
    },
    /// `k Π_y`
    MomentumY {
        #[serde(default = "default_momentum_k")]
        k: f64,
    },
    /// `k Π_z`
    MomentumZ {
        #[serde(default = "default_momentum_k")]
        k: f64,
    },
    /// `m g k Γ_x`
    GammaX {
        #[serde(default = "default_gamma_k")]
        k: f64,
    },
    /// `m g k Γ_y`
    GammaY {
        #[serde(default = "default_gamma_k")]
        k: f64,
    },
    /// `m g k Γ_z`
    GammaZ {
        #[serde(default = "default_gamma_k")]
        k: f64,
    },
    /// `k ‖Π‖²`
    MomentumNormSq {
        #[serde(default = "default_norm_k")]
        k: f64,
    },
}

/// Model parameters the noise Hamiltonians may depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseContext {
    RigidBody,
    /// Carries `m g` and the spatial reference direction `α₀`.
    HeavyTop { mg: f64, alpha0: Vec3 },
}

impl NoiseContext {
    pub fn heavy_top(top: &HeavyTop) -> NoiseContext {
        NoiseContext::HeavyTop {
            mg: top.mg(),
            alpha0: top.alpha0(),
        }
    }
}

impl NoiseHamiltonianSpec {
    pub fn needs_gamma(&self) -> bool {
        matches!(
            self,
            NoiseHamiltonianSpec::GammaX { .. } | NoiseHamiltonianSpec::GammaY { .. } | NoiseHamiltonianSpec::GammaZ { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            NoiseHamiltonianSpec::LinearMomentum { chi } => chi.is_finite(),
            NoiseHamiltonianSpec::MomentumX { k }
            | NoiseHamiltonianSpec::MomentumY { k }
            | NoiseHamiltonianSpec::MomentumZ { k }
            | NoiseHamiltonianSpec::GammaX { k }
            | NoiseHamiltonianSpec::GammaY { k }
            | NoiseHamiltonianSpec::GammaZ { k }
            | NoiseHamiltonianSpec::MomentumNormSq { k } => k.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Configuration(format!("noise coefficients must be finite: {self:?}")))
        }
    }

    /// Value `hᵢ(Π, Γ)`.
    pub fn value(&self, context: NoiseContext, pi: Momentum, gamma: Vec3) -> Result<f64> {
        let (gm, ga) = noise_grads(self, context, pi, gamma)?;
        Ok(match *self {
            NoiseHamiltonianSpec::MomentumNormSq { k } => k * pi.norm_sq(),
            _ => gm.dot(pi) + ga.dot(gamma),
        })
    }

    /// Upper bound on `‖∂hᵢ/∂Π‖` over `‖Π‖ ≤ radius`.
    pub fn momentum_grad_bound(&self, radius: f64) -> f64 {
        match *self {
            NoiseHamiltonianSpec::LinearMomentum { chi } => chi.norm(),
            NoiseHamiltonianSpec::MomentumX { k }
            | NoiseHamiltonianSpec::MomentumY { k }
            | NoiseHamiltonianSpec::MomentumZ { k } => k.abs(),
            NoiseHamiltonianSpec::GammaX { .. } | NoiseHamiltonianSpec::GammaY { .. } | NoiseHamiltonianSpec::GammaZ { .. } => 0.0,
            NoiseHamiltonianSpec::MomentumNormSq { k } => 2.0 * k.abs() * radius,
        }
    }

    /// Bind to a model so the result can be handed to a stepper.
    pub fn bind(self, context: NoiseContext) -> Result<BoundNoise> {
        self.validate()?;
        if self.needs_gamma() && context == NoiseContext::RigidBody {
            return Err(Error::Configuration(format!(
                "{self:?} depends on the advected direction and cannot drive a free rigid body"
            )));
        }
        Ok(BoundNoise { spec: self, context })
    }
}

/// `(∂hᵢ/∂Π, ∂hᵢ/∂Γ)` for one catalog entry.
pub fn noise_grads(
    spec: &NoiseHamiltonianSpec,
    context: NoiseContext,
    pi: Momentum,
    _gamma: Vec3,
) -> Result<(AlgebraVector, Vec3)> {
    let mg = match context {
        NoiseContext::HeavyTop { mg, .. } => Some(mg),
        NoiseContext::RigidBody => None,
    };
    let gamma_grad = |axis: Vec3, k: f64| -> Result<(AlgebraVector, Vec3)> {
        let mg = mg.ok_or_else(|| {
            Error::Configuration(format!("{spec:?} depends on the advected direction and cannot drive a free rigid body"))
        })?;
        Ok((Vec3::ZERO, axis * (mg * k)))
    };
    match *spec {
        NoiseHamiltonianSpec::LinearMomentum { chi } => Ok((chi, Vec3::ZERO)),
        NoiseHamiltonianSpec::MomentumX { k } => Ok((Vec3::X * k, Vec3::ZERO)),
        NoiseHamiltonianSpec::MomentumY { k } => Ok((Vec3::Y * k, Vec3::ZERO)),
        NoiseHamiltonianSpec::MomentumZ { k } => Ok((Vec3::Z * k, Vec3::ZERO)),
        NoiseHamiltonianSpec::GammaX { k } => gamma_grad(Vec3::X, k),
        NoiseHamiltonianSpec::GammaY { k } => gamma_grad(Vec3::Y, k),
        NoiseHamiltonianSpec::GammaZ { k } => gamma_grad(Vec3::Z, k),
        NoiseHamiltonianSpec::MomentumNormSq { k } => Ok((pi * (2.0 * k), Vec3::ZERO)),
    }
}

/// A noise Hamiltonian validated against its model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundNoise {
    spec: NoiseHamiltonianSpec,
    context: NoiseContext,
}

impl BoundNoise {
    pub fn spec(&self) -> &NoiseHamiltonianSpec {
        &self.spec
    }

    fn grads(&self, mu: Momentum, alpha: Vec3) -> (AlgebraVector, Vec3) {
        noise_grads(&self.spec, self.context, mu, alpha).expect("checked when bound")
    }
}

impl ReducedHamiltonian for BoundNoise {
    fn grad(&self, mu: Momentum) -> AlgebraVector {
        self.grads(mu, Vec3::ZERO).0
    }

    fn grad_bound(&self, radius: f64) -> Option<f64> {
        Some(self.spec.momentum_grad_bound(radius))
    }
}

impl AdvectedHamiltonian for BoundNoise {
    fn grads(&self, mu: Momentum, alpha: Vec3) -> (AlgebraVector, Vec3) {
        BoundNoise::grads(self, mu, alpha)
    }

    fn momentum_grad_bound(&self, radius: f64) -> Option<f64> {
        Some(self.spec.momentum_grad_bound(radius))
    }
}

impl GroupHamiltonian for BoundNoise {
    fn grad_mu(&self, _g: &Rotation, mu: Momentum) -> AlgebraVector {
        BoundNoise::grads(self, mu, Vec3::ZERO).0
    }

    fn trivialized_grad_g(&self, g: &Rotation, mu: Momentum) -> Momentum {
        match self.context {
            NoiseContext::HeavyTop { alpha0, .. } => {
                let gamma = g.apply_inverse(alpha0);
                BoundNoise::grads(self, mu, gamma).1.cross(gamma)
            }
            NoiseContext::RigidBody => Vec3::ZERO,
        }
    }

    fn momentum_grad_bound(&self, radius: f64) -> Option<f64> {
        Some(self.spec.momentum_grad_bound(radius))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    fn fd_grad(f: impl Fn(Vec3) -> f64, x: Vec3) -> Vec3 {
        let h = 1e-5;
        let d = |e: Vec3| (f(x + e * h) - f(x - e * h)) / (2.0 * h);
        Vec3::new(d(Vec3::X), d(Vec3::Y), d(Vec3::Z))
    }

    #[test]
    fn rigid_body_energy() {
        let body = RigidBody::diagonal(1.0, 2.0, 3.0).unwrap();
        assert!((rb_energy(&body, Vec3::Z) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(rb_energy(&body, Vec3::ZERO), 0.0);
        let iso = RigidBody::diagonal(1.0, 1.0, 1.0).unwrap();
        let pi = Vec3::new(0.3, -1.2, 2.0);
        assert!((rb_energy(&iso, pi) - 0.5 * pi.norm_sq()).abs() < 1e-15);
    }

    #[test]
    fn rigid_body_gradient() {
        let body = RigidBody::diagonal(1.0, 2.0, 3.0).unwrap();
        assert!(close(rb_grad(&body, Vec3::new(1.0, 1.0, 1.0)), Vec3::new(1.0, 0.5, 1.0 / 3.0), 1e-15));
        assert_eq!(rb_grad(&body, Vec3::ZERO), Vec3::ZERO);
        assert!((body.inverse_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inertia_validation() {
        assert!(RigidBody::diagonal(1.0, -2.0, 3.0).is_err());
        assert!(RigidBody::diagonal(1.0, 0.0, 3.0).is_err());
        let skew = Mat3([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(RigidBody::new(skew).is_err());
        let full = Mat3([[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.0]]);
        let body = RigidBody::new(full).unwrap();
        let prod = full.mul_mat(body.inverse_inertia());
        assert!(prod.sub(&Mat3::IDENTITY).max_abs() < 1e-14);
    }

    #[test]
    fn heavy_top_gradients() {
        let top = HeavyTop::symmetric_example();
        let (gp, gg) = ht_grads(&top, Vec3::ZERO, Vec3::Z);
        assert_eq!(gp, Vec3::ZERO);
        assert!(close(gg, Vec3::new(0.0, 0.0, 0.98), 1e-15));
        assert!((top.mgh() - 0.98).abs() < 1e-15);
    }

    #[test]
    fn heavy_top_validation() {
        let i = Mat3::diag(Vec3::new(0.1, 0.1, 1.0));
        assert!(HeavyTop::new(i, 0.0, 9.8, Vec3::Z, Vec3::Z).is_err());
        assert!(HeavyTop::new(i, 0.1, -9.8, Vec3::Z, Vec3::Z).is_err());
        assert!(HeavyTop::new(i, 0.1, 9.8, Vec3::Z, Vec3::ZERO).is_err());
    }

    #[test]
    fn noise_catalog() {
        let ht = NoiseContext::heavy_top(&HeavyTop::symmetric_example());
        let chi = Vec3::new(0.02, 0.0, 0.0);
        let pi = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(
            noise_grads(&NoiseHamiltonianSpec::LinearMomentum { chi }, NoiseContext::RigidBody, pi, Vec3::ZERO).unwrap(),
            (chi, Vec3::ZERO)
        );
        let k = 0.25;
        let (g, _) = noise_grads(&NoiseHamiltonianSpec::MomentumNormSq { k }, NoiseContext::RigidBody, pi, Vec3::ZERO).unwrap();
        assert!(close(g, Vec3::new(2.0 * k, 4.0 * k, 6.0 * k), 1e-15));
        let (g, a) = noise_grads(&NoiseHamiltonianSpec::GammaZ { k: 1.0 }, ht, pi, Vec3::Z).unwrap();
        assert_eq!(g, Vec3::ZERO);
        assert!(close(a, Vec3::new(0.0, 0.0, 0.98), 1e-15));
        let (g, _) = noise_grads(&NoiseHamiltonianSpec::MomentumZ { k: 0.1 }, ht, pi, Vec3::Z).unwrap();
        assert_eq!(g, Vec3::new(0.0, 0.0, 0.1));
    }

    #[test]
    fn gamma_noise_needs_a_top() {
        let spec = NoiseHamiltonianSpec::GammaZ { k: 1.0 };
        assert!(matches!(
            noise_grads(&spec, NoiseContext::RigidBody, Vec3::Z, Vec3::Z),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(spec.bind(NoiseContext::RigidBody), Err(Error::Configuration(_))));
        assert!(NoiseHamiltonianSpec::GammaZ { k: f64::NAN }
            .bind(NoiseContext::heavy_top(&HeavyTop::symmetric_example()))
            .is_err());
    }

    #[test]
    fn noise_spec_serde() {
        let spec: NoiseHamiltonianSpec = serde_json::from_str(r#"{"kind":"gamma_z"}"#).unwrap();
        assert_eq!(spec, NoiseHamiltonianSpec::GammaZ { k: 1.0 });
        let spec: NoiseHamiltonianSpec = serde_json::from_str(r#"{"kind":"linear_momentum","chi":[0.02,0,0]}"#).unwrap();
        assert_eq!(spec, NoiseHamiltonianSpec::LinearMomentum { chi: Vec3::new(0.02, 0.0, 0.0) });
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<NoiseHamiltonianSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn heavy_top_serde() {
        let top: HeavyTop = serde_json::from_str(
            r#"{"inertia":[[0.1,0,0],[0,0.1,0],[0,0,1]],"mass":0.1,"gravity":9.8,"lever_arm":[0,0,1]}"#,
        )
        .unwrap();
        assert_eq!(top, HeavyTop::symmetric_example());
    }

    #[test]
    fn group_force_matches_advected_force() {
        let top = HeavyTop::symmetric_example();
        let g = crate::lie::cayley(Vec3::new(0.3, -0.4, 0.2));
        let gamma = g.apply_inverse(Vec3::Z);
        let (_, ga) = ht_grads(&top, Vec3::ZERO, gamma);
        assert!(close(top.trivialized_grad_g(&g, Vec3::ZERO), crate::lie::diamond(ga, gamma), 1e-15));
    }

    fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn gradients_match_finite_differences(pi in vec3(3.0), gamma in vec3(1.5)) {
            let body = RigidBody::new(Mat3([[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.0]])).unwrap();
            prop_assert!(close(rb_grad(&body, pi), fd_grad(|p| rb_energy(&body, p), pi), 1e-7));

            let top = HeavyTop::new(Mat3::diag(Vec3::new(0.1, 0.2, 1.0)), 0.1, 9.8, Vec3::new(0.1, 0.0, 1.0), Vec3::Z).unwrap();
            let (gp, gg) = ht_grads(&top, pi, gamma);
            prop_assert!(close(gp, fd_grad(|p| top.energy(p, gamma), pi), 1e-7));
            prop_assert!(close(gg, fd_grad(|g| top.energy(pi, g), gamma), 1e-7));

            let ctx = NoiseContext::heavy_top(&top);
            let catalog = [
                NoiseHamiltonianSpec::LinearMomentum { chi: Vec3::new(0.1, -0.2, 0.3) },
                NoiseHamiltonianSpec::MomentumX { k: 0.3 },
                NoiseHamiltonianSpec::MomentumY { k: -0.2 },
                NoiseHamiltonianSpec::MomentumZ { k: 0.1 },
                NoiseHamiltonianSpec::GammaX { k: 0.5 },
                NoiseHamiltonianSpec::GammaY { k: 2.0 },
                NoiseHamiltonianSpec::GammaZ { k: 1.0 },
                NoiseHamiltonianSpec::MomentumNormSq { k: 0.01 },
            ];
            for spec in catalog {
                let (gp, gg) = noise_grads(&spec, ctx, pi, gamma).unwrap();
                prop_assert!(close(gp, fd_grad(|p| spec.value(ctx, p, gamma).unwrap(), pi), 1e-7));
                prop_assert!(close(gg, fd_grad(|g| spec.value(ctx, pi, g).unwrap(), gamma), 1e-7));
            }
        }
    }
}
