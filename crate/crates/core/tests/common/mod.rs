//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls the solver or the analytic gradients under test.

#![allow(dead_code)]

use fpf_formation::fpf::FpfParams;
use fpf_formation::Vec2;
use rand::Rng;

/// Five-point central difference of `u` at `q`, step `h`.
pub fn fd_gradient(u: impl Fn(Vec2) -> f64, q: Vec2, h: f64) -> Vec2 {
    let d = |e: Vec2| (8.0 * (u(q + e * h) - u(q - e * h)) - (u(q + e * (2.0 * h)) - u(q - e * (2.0 * h)))) / (12.0 * h);
    Vec2::new(d(Vec2::new(1.0, 0.0)), d(Vec2::new(0.0, 1.0)))
}

/// `|a − b| / max(|b|, floor)`.
pub fn rel_err(a: Vec2, b: Vec2, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

/// Scaled FPF `1 + tanh²(x) − K·tanh²(ς·x)`, written out independently.
pub fn scaled_potential(k_v: f64, varsigma: f64, x: f64) -> f64 {
    let a = x.tanh();
    let b = (varsigma * x).tanh();
    1.0 + a * a - k_v * b * b
}

/// Global argmin of the scaled FPF on a uniform grid over `[0, horizon]`.
/// `None` when the minimum sits at `x = 0` (no interior minimum).
pub fn dense_argmin(k_v: f64, varsigma: f64, step: f64, horizon: f64) -> Option<f64> {
    let n = (horizon / step).round() as usize;
    let mut best = (0usize, scaled_potential(k_v, varsigma, 0.0));
    for i in 1..=n {
        let u = scaled_potential(k_v, varsigma, i as f64 * step);
        if u < best.1 {
            best = (i, u);
        }
    }
    (best.0 > 0).then_some(best.0 as f64 * step)
}

/// Valid parameters with `K ∈ (1, k_max]`, `ς ∈ (1, vs_max]`, `σ1 ∈ [s_lo, s_hi]`.
pub fn random_params(rng: &mut impl Rng, k_max: f64, vs_max: f64, s_lo: f64, s_hi: f64) -> FpfParams {
    let k_v = 1.0 + (k_max - 1.0) * (1.0 - rng.gen::<f64>());
    let varsigma = 1.0 + (vs_max - 1.0) * (1.0 - rng.gen::<f64>());
    let sigma1 = rng.gen_range(s_lo..=s_hi);
    FpfParams::new(k_v, sigma1, sigma1 * varsigma)
}

pub fn random_point(rng: &mut impl Rng, half_width: f64) -> Vec2 {
    Vec2::new(rng.gen_range(-half_width..half_width), rng.gen_range(-half_width..half_width))
}

/// A point at distance in `[d_lo, d_hi]` from `center`, uniform in angle.
pub fn random_around(rng: &mut impl Rng, center: Vec2, d_lo: f64, d_hi: f64) -> Vec2 {
    center + Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU)) * rng.gen_range(d_lo..=d_hi)
}
