//! Expected values of the empirical update directions under Gaussian inputs.

use crate::activation::ActivationMoments;
use crate::linalg::dot;

/// ‖v‖² w − (v*ᵀv) w*
pub fn population_grad_w(w: &[f64], v: &[f64], w_star: &[f64], v_star: &[f64]) -> Vec<f64> {
    let vv = dot(v, v);
    let vsv = dot(v_star, v);
    w.iter()
        .zip(w_star)
        .map(|(a, b)| vv * a - vsv * b)
        .collect()
}

/// (ΔI + κ²11ᵀ)v − [ψ(wᵀw*)I + κ²11ᵀ]v*
///
/// `w == w_star` evaluates ψ at exactly 1 so that the truth is an exact zero.
pub fn population_grad_v(
    moments: &ActivationMoments,
    psi: impl Fn(f64) -> f64,
    w: &[f64],
    v: &[f64],
    w_star: &[f64],
    v_star: &[f64],
) -> Vec<f64> {
    let tau = if w == w_star {
        1.0
    } else {
        dot(w, w_star).clamp(-1.0, 1.0)
    };
    let phi = psi(tau);
    let k2 = moments.kappa * moments.kappa;
    let sum_v: f64 = v.iter().sum();
    let sum_vs: f64 = v_star.iter().sum();
    v.iter()
        .zip(v_star)
        .map(|(vj, vsj)| (moments.delta * vj + k2 * sum_v) - (phi * vsj + k2 * sum_vs))
        .collect()
}
