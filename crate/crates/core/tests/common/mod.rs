//! Brute-force ODE references shared by the integration tests.
#![allow(dead_code)]

/// Classical RK4 on `R^n` with `n` fixed substeps.
pub fn rk4<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], mut y: [f64; N], t: f64, substeps: usize) -> [f64; N] {
    let h = t / substeps as f64;
    let axpy = |y: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + s * k[i]) };
    for _ in 0..substeps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, h / 2.0));
        let k3 = f(&axpy(&y, &k2, h / 2.0));
        let k4 = f(&axpy(&y, &k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Euler equations `Π̇ = Π × 𝕀⁻¹Π` for a diagonal inertia.
pub fn euler_rhs(inertia: [f64; 3]) -> impl Fn(&[f64; 3]) -> [f64; 3] {
    move |p| cross(*p, std::array::from_fn(|i| p[i] / inertia[i]))
}

/// Heavy top `Π̇ = Π × Ω + m g Γ × a`, `Γ̇ = Γ × Ω` on `(Π, Γ)`.
pub fn heavy_top_rhs(inertia: [f64; 3], mg: f64, a: [f64; 3]) -> impl Fn(&[f64; 6]) -> [f64; 6] {
    move |y| {
        let p = [y[0], y[1], y[2]];
        let g = [y[3], y[4], y[5]];
        let w: [f64; 3] = std::array::from_fn(|i| p[i] / inertia[i]);
        let dp = cross(p, w);
        let ga = cross(g, a);
        let dg = cross(g, w);
        [dp[0] + mg * ga[0], dp[1] + mg * ga[1], dp[2] + mg * ga[2], dg[0], dg[1], dg[2]]
    }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
