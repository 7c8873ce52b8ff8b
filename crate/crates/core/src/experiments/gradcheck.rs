//! Empirical versus population gradients, measured in Monte Carlo standard errors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::activation::Integrator;
use crate::error::{Error, Result};
use crate::learner::{gradient_stats, population_grad_v, population_grad_w};
use crate::linalg::norm;
use crate::teacher::{
    generate_dataset, seeded_rng, standard_normal_vec, stream, unit_sphere, InputDist, TeacherSpec,
};

/// Radius of the ball around v* the random second layers are drawn from.
pub const GRADCHECK_V_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDeviation {
    /// max over coordinates of |empirical − population| / standard error
    pub max_w_se: f64,
    pub max_v_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub activation: String,
    pub n: usize,
    pub pairs: Vec<PairDeviation>,
    pub max_deviation_se: f64,
    /// Both population gradients are exactly zero at (w*, v*).
    pub zero_at_truth: bool,
}

/// Draws a teacher and one dataset from `seed`, then compares the empirical
/// update directions with their population values at `pairs` random (w, v)
/// with ‖v − v*‖ ≤ 2. Requires Gaussian inputs.
pub fn gradcheck(config: &ExperimentConfig, seed: u64, pairs: usize) -> Result<GradCheckReport> {
    config.validate()?;
    if config.input_dist() != InputDist::Gaussian {
        return Err(Error::Config(
            "gradcheck compares against Gaussian-input expectations; use input_dist = \"gaussian\""
                .into(),
        ));
    }
    let act = config.activation()?;
    let layout = config.layout()?;
    let q = Integrator::new(act, config.quad_order)?;
    let m = q.moments()?;
    let psi = |t: f64| q.psi(t.clamp(-1.0, 1.0)).expect("clamped");
    let truth =
        TeacherSpec::random_seeded(layout, act, InputDist::Gaussian, config.noise_std, seed)?;
    let data = generate_dataset(&truth, config.n, seed)?;
    let (ws, vs) = (&truth.w_star, &truth.v_star);

    let zero_at_truth = population_grad_w(ws, vs, ws, vs).iter().all(|g| *g == 0.0)
        && population_grad_v(&m, psi, ws, vs, ws, vs)
            .iter()
            .all(|g| *g == 0.0);

    let mut rng = seeded_rng(seed, stream::INIT);
    let mut out = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let w = unit_sphere(layout.r(), &mut rng);
        let dir = standard_normal_vec(layout.k(), &mut rng);
        let radius = GRADCHECK_V_RADIUS * rng.random::<f64>().powf(1.0 / layout.k() as f64);
        let s = radius / norm(&dir);
        let v: Vec<f64> = vs.iter().zip(&dir).map(|(a, d)| a + s * d).collect();

        let stats = gradient_stats(&data, &layout, act, m.xi, &w, &v)?;
        let pw = population_grad_w(&w, &v, ws, vs);
        let pv = population_grad_v(&m, psi, &w, &v, ws, vs);
        let dev = |emp: &[f64], se: &[f64], pop: &[f64]| {
            emp.iter()
                .zip(se)
                .zip(pop)
                .map(|((e, s), p)| (e - p).abs() / s)
                .fold(0.0, f64::max)
        };
        out.push(PairDeviation {
            max_w_se: dev(&stats.g_w, &stats.se_w, &pw),
            max_v_se: dev(&stats.g_v, &stats.se_v, &pv),
        });
    }
    let max_deviation_se = out
        .iter()
        .map(|p| p.max_w_se.max(p.max_v_se))
        .fold(0.0, f64::max);
    Ok(GradCheckReport {
        activation: act.to_string(),
        n: config.n,
        pairs: out,
        max_deviation_se,
        zero_at_truth,
    })
}
