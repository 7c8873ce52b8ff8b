//! Constants of the linear-convergence guarantee, with unknown absolute
//! constants set to 1. These are reported, never fed back into the optimizer.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationMoments;
use crate::linalg::{dist, dot, norm};
use crate::teacher::TeacherSpec;

pub const DEFAULT_DELTA_PROB: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremDiagnostics {
    pub m: f64,
    /// +∞ when 4αΔ ≥ 1 (the bound is undefined there).
    pub d: f64,
    pub d0: f64,
    pub rho: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub eta_w_scale: f64,
    pub eta_v_scale: f64,
    pub alpha_max: f64,
    pub alpha: f64,
    /// ρ > 0: the initialization lies in the basin the guarantee covers.
    pub rho_positive: bool,
}

impl TheoremDiagnostics {
    pub fn step_size_admissible(&self) -> bool {
        self.alpha <= self.alpha_max
    }

    /// γ₁ᵗ‖w⁰ − w*‖ + 8ρ⁻¹γ₁⁻²η_w
    pub fn w_error_bound(&self, t: usize, initial_w_err: f64) -> f64 {
        self.gamma1.powi(t as i32) * initial_w_err
            + 8.0 / self.rho / (self.gamma1 * self.gamma1) * self.eta_w_scale
    }
}

/// Evaluates M, D, D₀, ρ, the three contraction factors, the statistical
/// error scales and the largest admissible step size.
///
/// `truth.noise_std` stands in for the sub-Gaussian norm ν.
pub fn theorem_constants(
    truth: &TeacherSpec,
    moments: &ActivationMoments,
    init: (&[f64], &[f64]),
    alpha: f64,
    n: usize,
    delta_prob: f64,
    psi: impl Fn(f64) -> f64,
) -> TheoremDiagnostics {
    let (w0, v0) = init;
    let ActivationMoments {
        kappa,
        delta,
        xi,
        lip_l,
        gamma_cap,
        ..
    } = *moments;
    let k = truth.layout.k() as f64;
    let r = truth.layout.r() as f64;
    let v_star = &truth.v_star;
    let one_vs: f64 = v_star.iter().sum();
    let one_diff: f64 = v0.iter().zip(v_star).map(|(a, b)| a - b).sum();
    let vs_norm = norm(v_star);
    let v_dist = dist(v0, v_star);
    let k2 = kappa * kappa;
    let nu = truth.noise_std;

    let m = (kappa.abs() * (2.0 * lip_l * one_vs.abs() + k.sqrt()) / (delta + k2 * k))
        .max((kappa * one_diff).abs());

    let ad = alpha * delta;
    let d_bound = if 4.0 * ad < 1.0 {
        ((4.0 * (1.0 + 4.0 * ad) * lip_l * lip_l * vs_norm * vs_norm
            + 4.0 * ad * (k2 * m * m * k + 1.0)
            + 2.0)
            / (delta * delta * (1.0 - 4.0 * ad)))
            .sqrt()
    } else {
        f64::INFINITY
    };
    let d = v_dist.max(d_bound);
    let d0 = d + vs_norm;

    let tau = dot(&truth.w_star, w0).clamp(-1.0, 1.0);
    let rho = (psi(0.5 * tau) * vs_norm * vs_norm / (2.0 + delta)).min(dot(v_star, v0));

    let gamma1 = (1.0 + alpha * rho).powf(-0.5);
    let gamma2 = (1.0 - ad + 4.0 * ad * ad).sqrt();
    let gamma3 = 1.0 - alpha * (delta + k2 * k);

    let nf = n as f64;
    let stat = ((r + k) * (120.0 * nf * k / delta_prob).ln() / nf).sqrt();
    let shared = d0 * gamma_cap + m + nu;
    let eta_w_scale = d0 * shared * stat / xi;
    let eta_v_scale = (gamma_cap + kappa * k.sqrt()) * shared * stat;

    let alpha_max = (1.0 / (2.0 * (delta + k2 * k)))
        .min(1.0 / (8.0 * delta))
        .min(
            delta * delta
                / ((24.0 * lip_l * lip_l + 2.0 * delta * delta) * vs_norm * vs_norm
                    + 2.0 * m * m * k
                    + 10.0),
        )
        .min(1.0 / (2.0 * (v_dist * v_dist + vs_norm * vs_norm)));

    TheoremDiagnostics {
        m,
        d,
        d0,
        rho,
        gamma1,
        gamma2,
        gamma3,
        eta_w_scale,
        eta_v_scale,
        alpha_max,
        alpha,
        rho_positive: rho > 0.0,
    }
}
