//! SO(3) arithmetic used by the midpoint schemes.
//!
//! The Lie algebra so(3) and its dual are identified with R³ through the hat
//! map, and every pairing is the Euclidean dot product. The retraction is the
//! Cayley transform
//!
//! ```text
//! cay(v) = (I - v̂/2)⁻¹ (I + v̂/2)
//! ```
//!
//! whose dual right-trivialized inverse derivative has the closed form
//! `[d_{Δt ξ} cay⁻¹]* μ = μ + Δt/2 ξ×μ - Δt²/4 (ξ·μ) ξ`.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for accepting a matrix as a rotation.
pub const ROTATION_TOL: f64 = 1e-9;

/// Tolerance for accepting a matrix as skew-symmetric in [`vee`].
pub const SKEW_TOL: f64 = 1e-9;

/// Largest `det(R + I)` at which [`cayley_inv`] refuses to invert.
pub const HALF_TURN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn diag(d: Vec3) -> Mat3 {
        Mat3([[d.x, 0.0, 0.0], [0.0, d.y, 0.0], [0.0, 0.0, d.z]])
    }

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Mat3 {
        Mat3([r0.to_array(), r1.to_array(), r2.to_array()])
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    /// `selfᵀ v` without forming the transpose.
    pub fn tr_mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.col(0).dot(v), self.col(1).dot(v), self.col(2).dot(v))
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = self.row(i).dot(other.col(j));
            }
        }
        Mat3(out)
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        self.zip(&Mat3::ZERO, |a, _| a * s)
    }

    fn zip(&self, other: &Mat3, f: impl Fn(f64, f64) -> f64) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = f(self.0[i][j], other.0[i][j]);
            }
        }
        Mat3(out)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        self.row(0).dot(self.row(1).cross(self.row(2)))
    }

    /// Inverse by the adjugate; `None` when `|det|` underflows `tiny`.
    pub fn inverse(&self, tiny: f64) -> Option<Mat3> {
        let det = self.det();
        if !(det.abs() > tiny) {
            return None;
        }
        // Columns of the inverse are the cross products of the rows.
        let (r0, r1, r2) = (self.row(0), self.row(1), self.row(2));
        let cofactors = Mat3::from_rows(r1.cross(r2), r2.cross(r0), r0.cross(r1));
        Some(cofactors.transpose().scale(1.0 / det))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// Row-major entries.
    pub fn entries(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    /// Largest eigenvalue modulus of a symmetric matrix (its spectral norm).
    pub fn symmetric_spectral_norm(&self) -> f64 {
        symmetric_eigenvalues(self)
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Eigenvalues of a symmetric 3×3 matrix, ascending (trigonometric method).
pub fn symmetric_eigenvalues(a: &Mat3) -> [f64; 3] {
    let m = &a.0;
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = a.trace() / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = a.sub(&Mat3::IDENTITY.scale(q)).scale(1.0 / p);
    let r = (b.det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let largest = q + 2.0 * p * phi.cos();
    let smallest = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let middle = 3.0 * q - largest - smallest;
    [smallest, middle, largest]
}

/// Body angular velocity (an element of so(3) ≅ R³).
pub type AlgebraVector = Vec3;

/// Body angular momentum (an element of so(3)* ≅ R³).
pub type Momentum = Vec3;

/// A validated element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat3", into = "Mat3")]
pub struct Rotation(Mat3);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation(Mat3::IDENTITY);

    /// Accepts `m` when `‖mᵀm − I‖_max ≤ 1e-9` and `|det m − 1| ≤ 1e-9`.
    pub fn new(m: Mat3) -> Result<Rotation> {
        let orthogonality = orthogonality_defect(&m);
        let det = m.det();
        if !m.is_finite() || orthogonality > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NotRotation { orthogonality, det });
        }
        Ok(Rotation(m))
    }

    /// Rotation by `angle` about the x axis.
    pub fn about_x(angle: f64) -> Rotation {
        let (s, c) = angle.sin_cos();
        Rotation(Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]))
    }

    /// Rotation by `angle` about the z axis.
    pub fn about_z(angle: f64) -> Rotation {
        let (s, c) = angle.sin_cos();
        Rotation(Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Rotation {
        self.transpose()
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0.mul_mat(&other.0))
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0.mul_vec(v)
    }

    pub fn apply_inverse(&self, v: Vec3) -> Vec3 {
        self.0.tr_mul_vec(v)
    }

    /// `‖RᵀR − I‖_max`, tracked along trajectories instead of re-orthogonalizing.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.0)
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

impl TryFrom<Mat3> for Rotation {
    type Error = Error;
    fn try_from(m: Mat3) -> Result<Rotation> {
        Rotation::new(m)
    }
}

impl From<Rotation> for Mat3 {
    fn from(r: Rotation) -> Mat3 {
        r.0
    }
}

fn orthogonality_defect(m: &Mat3) -> f64 {
    m.transpose().mul_mat(m).sub(&Mat3::IDENTITY).max_abs()
}

/// Skew matrix with `hat(v) w = v × w`.
pub fn hat(v: Vec3) -> Mat3 {
    Mat3([[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
}

/// Inverse of [`hat`]; rejects matrices that are not skew within [`SKEW_TOL`].
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let defect = m.add(&m.transpose()).max_abs();
    if !(defect <= SKEW_TOL) {
        return Err(Error::NotSkew { defect });
    }
    Ok(skew_part(m))
}

/// vee of the antisymmetric part of `m`.
fn skew_part(m: &Mat3) -> Vec3 {
    let a = &m.0;
    Vec3::new(
        0.5 * (a[2][1] - a[1][2]),
        0.5 * (a[0][2] - a[2][0]),
        0.5 * (a[1][0] - a[0][1]),
    )
}

/// The Cayley retraction `(I − v̂/2)⁻¹ (I + v̂/2)`.
///
/// Evaluated through the equivalent closed form
/// `I + 4/(4 + ‖v‖²) (v̂ + v̂²/2)`, which needs no linear solve.
pub fn cayley(v: Vec3) -> Rotation {
    let h = hat(v);
    let h2 = h.mul_mat(&h);
    let c = 4.0 / (4.0 + v.norm_sq());
    Rotation(Mat3::IDENTITY.add(&h.add(&h2.scale(0.5)).scale(c)))
}

/// Inverse Cayley map, `vee(2 (R − I)(R + I)⁻¹)`.
///
/// Rotations whose angle is at or numerically near π have a singular
/// `R + I` and are rejected.
pub fn cayley_inv(r: &Rotation) -> Result<Vec3> {
    let m = r.matrix();
    let plus = m.add(&Mat3::IDENTITY);
    let det = plus.det();
    if !(det > HALF_TURN_TOL) {
        return Err(Error::SingularRetraction { det });
    }
    let inv = plus.inverse(0.0).ok_or(Error::SingularRetraction { det })?;
    let skew = m.sub(&Mat3::IDENTITY).mul_mat(&inv).scale(2.0);
    Ok(skew_part(&skew))
}

/// `[d_{dt ξ} cay⁻¹]* μ = μ + dt/2 ξ×μ − dt²/4 (ξ·μ) ξ`.
pub fn dcayinv_dual(xi: AlgebraVector, dt: f64, mu: Momentum) -> Momentum {
    mu + xi.cross(mu) * (0.5 * dt) - xi * (0.25 * dt * dt * xi.dot(mu))
}

/// Infinitesimal coadjoint action, `ad*_ξ μ = μ × ξ`.
pub fn ad_star(xi: AlgebraVector, mu: Momentum) -> Momentum {
    mu.cross(xi)
}

/// Coadjoint action of the group, `Ad*_R μ = Rᵀ μ`.
pub fn coadjoint(r: &Rotation, mu: Momentum) -> Momentum {
    r.apply_inverse(mu)
}

/// Diamond operator for SO(3) acting on R³: `v ⋄ α = v × α`.
pub fn diamond(v: Vec3, alpha: Vec3) -> Momentum {
    v.cross(alpha)
}
