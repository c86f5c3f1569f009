//! Conservation monitors and the gyroscopic-precession toolkit.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::lie::{Mat3, Momentum, Rotation, Vec3};
use crate::models::RigidBody;

/// `|R₃₃|` at or above this value is treated as gimbal lock.
pub const GIMBAL_TOL: f64 = 1e-9;

/// Smallest `sin θ` accepted by the rate and momentum conversions.
pub const MIN_SIN_THETA: f64 = 1e-6;

const ROOT_TOL: f64 = 1e-10;
const ENDPOINT_EPS: f64 = 1e-8;

/// Radius of the coadjoint orbit through `Π`.
pub fn orbit_radius(pi: Momentum) -> f64 {
    pi.norm()
}

/// Spatial angular momentum `π = RΠ`.
pub fn spatial_momentum(r: &Rotation, pi: Momentum) -> Vec3 {
    r.apply(pi)
}

/// `(RΠ)_z`, the momentum map of rotations about the vertical.
pub fn heavytop_momentum_map(r: &Rotation, pi: Momentum) -> f64 {
    r.matrix().row(2).dot(pi)
}

/// Heavy-top Casimirs `(|Γ|², Π·Γ)`.
pub fn casimirs_ht(pi: Momentum, gamma: Vec3) -> (f64, f64) {
    (gamma.norm_sq(), pi.dot(gamma))
}

/// z-x-z Euler angles with `θ ∈ (0, π)` and `φ, ψ ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

/// `R(φ, θ, ψ) = R_z(φ) R_x(θ) R_z(ψ)`.
pub fn rotation_from_euler(angles: EulerAngles) -> Rotation {
    let (sf, cf) = angles.phi.sin_cos();
    let (st, ct) = angles.theta.sin_cos();
    let (sp, cp) = angles.psi.sin_cos();
    let m = Mat3([
        [cf * cp - ct * sf * sp, -cf * sp - ct * sf * cp, st * sf],
        [sf * cp + ct * cf * sp, -sf * sp + ct * cf * cp, -st * cf],
        [st * sp, st * cp, ct],
    ]);
    Rotation::new(m).expect("product of elementary rotations")
}

fn wrap(angle: f64) -> f64 {
    if angle < 0.0 {
        angle + TAU
    } else {
        angle
    }
}

pub fn euler_from_rotation(r: &Rotation) -> Result<EulerAngles> {
    let m = &r.matrix().0;
    let r33 = m[2][2];
    if r33.abs() >= 1.0 - GIMBAL_TOL {
        return Err(Error::Degenerate(format!("R33 = {r33} leaves the z-axis fixed")));
    }
    Ok(EulerAngles {
        phi: wrap(m[0][2].atan2(-m[1][2])),
        theta: r33.acos(),
        psi: wrap(m[2][0].atan2(m[2][1])),
    })
}

/// Rates `(ω_φ, ω_θ, ω_ψ)` of the Euler angles for body velocity `ω`.
pub fn euler_rates_from_velocity(omega: Vec3, angles: EulerAngles) -> Result<(f64, f64, f64)> {
    let (st, ct) = angles.theta.sin_cos();
    if st.abs() < MIN_SIN_THETA {
        return Err(Error::Degenerate(format!("sin θ = {st:e} is too small")));
    }
    let (sp, cp) = angles.psi.sin_cos();
    let omega_theta = omega.x * cp - omega.y * sp;
    let omega_phi = (omega.x * sp + omega.y * cp) / st;
    let omega_psi = omega.z - omega_phi * ct;
    Ok((omega_phi, omega_theta, omega_psi))
}

/// Body velocity `ω` from the Euler-angle rates.
pub fn velocity_from_euler_rates(rates: (f64, f64, f64), angles: EulerAngles) -> Vec3 {
    let (omega_phi, omega_theta, omega_psi) = rates;
    let (st, ct) = angles.theta.sin_cos();
    let (sp, cp) = angles.psi.sin_cos();
    Vec3::new(
        omega_phi * st * sp + omega_theta * cp,
        omega_phi * st * cp - omega_theta * sp,
        omega_phi * ct + omega_psi,
    )
}

/// `(ω_φ, ω_θ, ω_ψ)` for momentum `Π`, with `ω = 𝕀⁻¹Π`.
pub fn euler_rates(pi: Momentum, body: &RigidBody, angles: EulerAngles) -> Result<(f64, f64, f64)> {
    euler_rates_from_velocity(body.inverse_inertia().mul_vec(pi), angles)
}

/// `(I₁, I₃)` of a symmetric top `diag(I₁, I₁, I₃)`.
pub fn symmetric_moments(body: &RigidBody) -> Result<(f64, f64)> {
    let m = &body.inertia().0;
    let scale = body.inertia().max_abs();
    let off = [m[0][1], m[0][2], m[1][2]].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if off > 1e-12 * scale || (m[0][0] - m[1][1]).abs() > 1e-12 * scale {
        return Err(Error::Configuration("conjugate momenta need a symmetric top diag(I1, I1, I3)".into()));
    }
    Ok((m[0][0], m[2][2]))
}

/// Momenta `(p_φ, p_ψ)` conjugate to precession and spin.
pub fn conjugate_momenta(pi: Momentum, body: &RigidBody, angles: EulerAngles) -> Result<(f64, f64)> {
    let (i1, i3) = symmetric_moments(body)?;
    let (omega_phi, _, omega_psi) = euler_rates(pi, body, angles)?;
    let (st, ct) = angles.theta.sin_cos();
    let p_phi = (i1 * st * st + i3 * ct * ct) * omega_phi + i3 * omega_psi * ct;
    let p_psi = i3 * (omega_psi + omega_phi * ct);
    Ok((p_phi, p_psi))
}

/// Precession and spin rates `(ω_φ, ω_ψ)` recovered from `(p_φ, p_ψ, θ)`.
pub fn precession_and_spin(p_phi: f64, p_psi: f64, theta: f64, i1: f64, i3: f64) -> Result<(f64, f64)> {
    let (st, ct) = theta.sin_cos();
    if st.abs() < MIN_SIN_THETA {
        return Err(Error::Degenerate(format!("sin θ = {st:e} is too small")));
    }
    let omega_phi = (p_phi - p_psi * ct) / (i1 * st * st);
    Ok((omega_phi, p_psi / i3 - omega_phi * ct))
}

/// `V(θ) = (p_φ − p_ψ cos θ)² / (2 I₁ sin²θ) + Mgh cos θ`.
pub fn effective_potential(theta: f64, p_phi: f64, p_psi: f64, i1: f64, mgh: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let d = p_phi - p_psi * ct;
    d * d / (2.0 * i1 * st * st) + mgh * ct
}

/// Minimizer of `V` on `(0, π)` by golden-section search.
pub fn potential_minimum(p_phi: f64, p_psi: f64, i1: f64, mgh: f64) -> (f64, f64) {
    let v = |t: f64| effective_potential(t, p_phi, p_psi, i1, mgh);
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (ENDPOINT_EPS, PI - ENDPOINT_EPS);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (v(c), v(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = v(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = v(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, v(t))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Turning points `θ₁ ≤ θ₂` of the nutation, the roots of `V(θ) = E′` on
/// either side of the minimizer.
pub fn nutation_bounds(e_prime: f64, p_phi: f64, p_psi: f64, i1: f64, mgh: f64) -> Result<(f64, f64)> {
    let (theta_star, v_min) = potential_minimum(p_phi, p_psi, i1, mgh);
    let excess = |t: f64| effective_potential(t, p_phi, p_psi, i1, mgh) - e_prime;
    let slack = 1e-12 * v_min.abs().max(1.0);
    if e_prime < v_min - slack {
        return Err(Error::NoSolution(format!("E' = {e_prime} is below min V = {v_min}")));
    }
    if e_prime <= v_min + slack {
        return Ok((theta_star, theta_star));
    }
    let (lo, hi) = (ENDPOINT_EPS, PI - ENDPOINT_EPS);
    if excess(lo) < 0.0 || excess(hi) < 0.0 {
        return Err(Error::NoSolution(format!("V(θ) = {e_prime} has no root bracketed in (0, π)")));
    }
    Ok((bisect(excess, lo, theta_star), bisect(excess, theta_star, hi)))
}

/// Deviation of one monitored quantity from its initial value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDrift {
    pub name: String,
    pub initial: f64,
    pub max_deviation: f64,
    pub step_of_max: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriftReport {
    pub invariants: Vec<InvariantDrift>,
}

impl DriftReport {
    pub fn get(&self, name: &str) -> Option<&InvariantDrift> {
        self.invariants.iter().find(|d| d.name == name)
    }
}

/// Per-series maximum deviation from the first sample.
pub fn drift_report(series: &[(&str, &[f64])]) -> Result<DriftReport> {
    let mut invariants = Vec::with_capacity(series.len());
    for (name, values) in series {
        let initial = *values
            .first()
            .ok_or_else(|| Error::InvalidArgument(format!("series {name} is empty")))?;
        let (step_of_max, max_deviation) = values
            .iter()
            .map(|v| (v - initial).abs())
            .enumerate()
            .fold((0, 0.0_f64), |best, (k, d)| if d > best.1 { (k, d) } else { best });
        invariants.push(InvariantDrift {
            name: name.to_string(),
            initial,
            max_deviation,
            step_of_max,
        });
    }
    Ok(DriftReport { invariants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symmetric_top() -> RigidBody {
        RigidBody::diagonal(0.1, 0.1, 1.0).unwrap()
    }

    #[test]
    fn monitors() {
        assert_eq!(orbit_radius(Vec3::Z), 1.0);
        assert_eq!(orbit_radius(Vec3::new(3.0, 4.0, 0.0)), 5.0);
        assert!((orbit_radius(Vec3::new(-0.5878, 0.0, 0.8090)) - 1.0).abs() < 1e-4);
        let quarter = Rotation::about_z(PI / 2.0);
        assert!((spatial_momentum(&quarter, Vec3::X) - Vec3::Y).max_abs() < 1e-15);
        assert_eq!(spatial_momentum(&Rotation::IDENTITY, Vec3::new(1.0, 2.0, 3.0)), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(heavytop_momentum_map(&Rotation::IDENTITY, Vec3::Z), 1.0);
        assert_eq!(casimirs_ht(Vec3::Z, Vec3::Z), (1.0, 1.0));
        assert_eq!(casimirs_ht(Vec3::X, Vec3::Z), (1.0, 0.0));
    }

    #[test]
    fn euler_round_trip_example() {
        let a = EulerAngles {
            phi: 0.3,
            theta: 0.5,
            psi: 1.0,
        };
        let b = euler_from_rotation(&rotation_from_euler(a)).unwrap();
        assert!((a.phi - b.phi).abs() < 1e-12);
        assert!((a.theta - b.theta).abs() < 1e-12);
        assert!((a.psi - b.psi).abs() < 1e-12);
    }

    #[test]
    fn initial_tilt_angles() {
        let theta0 = 0.15 * PI;
        let (s, c) = theta0.sin_cos();
        let r0 = Rotation::new(Mat3([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])).unwrap();
        let e = euler_from_rotation(&r0).unwrap();
        assert!((e.theta - theta0).abs() < 1e-12);
        assert!((e.phi - PI).abs() < 1e-12);
        assert!((e.psi - PI).abs() < 1e-12);
    }

    #[test]
    fn gimbal_lock_is_rejected() {
        assert!(matches!(euler_from_rotation(&Rotation::IDENTITY), Err(Error::Degenerate(_))));
        assert!(euler_from_rotation(&Rotation::about_x(1e-6)).is_err());
        assert!(euler_from_rotation(&Rotation::about_x(PI)).is_err());
    }

    #[test]
    fn rate_examples() {
        let body = symmetric_top();
        let angles = EulerAngles {
            phi: 0.2,
            theta: PI / 2.0,
            psi: 0.7,
        };
        let c = 1.3;
        let (wf, wt, wp) = euler_rates_from_velocity(Vec3::new(0.0, 0.0, c), angles).unwrap();
        assert!(wf.abs() < 1e-15 && wt.abs() < 1e-15 && (wp - c).abs() < 1e-15);
        assert_eq!(euler_rates(Vec3::ZERO, &body, angles).unwrap(), (0.0, 0.0, 0.0));
        let flat = EulerAngles { theta: 1e-8, ..angles };
        assert!(matches!(euler_rates(Vec3::X, &body, flat), Err(Error::Degenerate(_))));
    }

    #[test]
    fn conjugate_momentum_example() {
        let body = symmetric_top();
        let angles = EulerAngles {
            phi: 0.0,
            theta: PI / 2.0,
            psi: 0.4,
        };
        let omega = velocity_from_euler_rates((1.0, 0.0, 0.0), angles);
        let pi = body.inertia().mul_vec(omega);
        let (p_phi, p_psi) = conjugate_momenta(pi, &body, angles).unwrap();
        assert!((p_phi - 0.1).abs() < 1e-15);
        assert!(p_psi.abs() < 1e-15);
        assert!(conjugate_momenta(pi, &RigidBody::diagonal(1.0, 2.0, 3.0).unwrap(), angles).is_err());
    }

    #[test]
    fn potential_examples() {
        assert!((effective_potential(PI / 2.0, 1.0, 1.0, 0.1, 0.98) - 5.0).abs() < 1e-12);
        let expected = 0.25 / (2.0 * 0.1 * 0.75) + 0.49;
        assert!((effective_potential(PI / 3.0, 1.0, 1.0, 0.1, 0.98) - expected).abs() < 1e-12);
        assert!((expected - 2.156_666_666_666_666_6).abs() < 1e-12);
    }

    #[test]
    fn nutation_bound_cases() {
        let (p_phi, p_psi, i1, mgh) = ((0.15 * PI).cos(), 1.0, 0.1, 0.98);
        let (t_star, v_min) = potential_minimum(p_phi, p_psi, i1, mgh);
        let (a, b) = nutation_bounds(v_min, p_phi, p_psi, i1, mgh).unwrap();
        assert_eq!((a, b), (t_star, t_star));
        let e = v_min + 0.05;
        let (a, b) = nutation_bounds(e, p_phi, p_psi, i1, mgh).unwrap();
        assert!(a < t_star && t_star < b);
        for t in [a, b] {
            assert!((effective_potential(t, p_phi, p_psi, i1, mgh) - e).abs() < 1e-9);
        }
        assert!(matches!(
            nutation_bounds(v_min - 0.1, p_phi, p_psi, i1, mgh),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn drift_report_cases() {
        let flat = [2.0; 5];
        let spike = [1.0, 1.0, 1.5, 1.0];
        let r = drift_report(&[("flat", &flat), ("spike", &spike)]).unwrap();
        assert_eq!(r.get("flat").unwrap().max_deviation, 0.0);
        let s = r.get("spike").unwrap();
        assert_eq!((s.max_deviation, s.step_of_max), (0.5, 2));
        assert!(drift_report(&[("empty", &[])]).is_err());
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<DriftReport>(&json).unwrap(), r);
    }

    fn angles() -> impl Strategy<Value = EulerAngles> {
        (0.0..TAU, 0.05..(PI - 0.05), 0.0..TAU).prop_map(|(phi, theta, psi)| EulerAngles { phi, theta, psi })
    }

    proptest! {
        #[test]
        fn euler_round_trip(a in angles()) {
            let b = euler_from_rotation(&rotation_from_euler(a)).unwrap();
            let d = |x: f64, y: f64| { let e = (x - y).rem_euclid(TAU); e.min(TAU - e) };
            prop_assert!(d(a.phi, b.phi) <= 1e-10);
            prop_assert!((a.theta - b.theta).abs() <= 1e-10);
            prop_assert!(d(a.psi, b.psi) <= 1e-10);
            prop_assert!((0.0..TAU).contains(&b.phi) && (0.0..TAU).contains(&b.psi));
        }

        #[test]
        fn rates_round_trip(a in angles(), wf in -3.0..3.0f64, wt in -3.0..3.0f64, wp in -3.0..3.0f64) {
            let omega = velocity_from_euler_rates((wf, wt, wp), a);
            let (f, t, p) = euler_rates_from_velocity(omega, a).unwrap();
            prop_assert!((f - wf).abs() <= 1e-10 && (t - wt).abs() <= 1e-10 && (p - wp).abs() <= 1e-10);
        }

        #[test]
        fn conjugate_momenta_agree(a in angles(), pi in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)) {
            let body = symmetric_top();
            let pi = Vec3::new(pi.0, pi.1, pi.2);
            let r = rotation_from_euler(a);
            let (p_phi, p_psi) = conjugate_momenta(pi, &body, a).unwrap();
            prop_assert!((p_phi - heavytop_momentum_map(&r, pi)).abs() <= 1e-10);
            prop_assert!((p_psi - pi.z).abs() <= 1e-12);
            let (wf, _, wp) = euler_rates(pi, &body, a).unwrap();
            let (rf, rp) = precession_and_spin(p_phi, p_psi, a.theta, 0.1, 1.0).unwrap();
            prop_assert!((rf - wf).abs() <= 1e-10 * (1.0 + wf.abs()));
            prop_assert!((rp - wp).abs() <= 1e-10 * (1.0 + wp.abs()));
        }

        #[test]
        fn momentum_map_is_casimir_pairing(a in angles(), pi in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)) {
            let pi = Vec3::new(pi.0, pi.1, pi.2);
            let r = rotation_from_euler(a);
            let gamma = r.apply_inverse(Vec3::Z);
            prop_assert!((heavytop_momentum_map(&r, pi) - pi.dot(gamma)).abs() <= 1e-15 * (1.0 + pi.norm()) * 4.0);
        }
    }
}
