//! Batch Convotron and batch Double Convotron for comparison runs.
//!
//! Neither normalizes the filter. Convotron updates only the filter with the
//! second layer held fixed; Double Convotron pairs the same filter update with
//! the exact empirical gradient step on the second layer, both evaluated at
//! the current iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{approx_gradients, LearnerState, Record, Trajectory};
use crate::linalg::all_finite;
use crate::teacher::{Dataset, FilterLayout, TeacherSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// First layer only; the second layer stays at its initial value.
    Convotron,
    DoubleConvotron,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub kind: BaselineKind,
    pub alpha: f64,
    pub iterations: usize,
}

/// w ← w + (α/n) Σᵢ residualᵢ Σⱼ vⱼ Pⱼ xᵢ
pub fn convotron_step(
    data: &Dataset,
    layout: &FilterLayout,
    act: crate::activation::Activation,
    w: &[f64],
    v_fixed: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    // With ξ = 1 the approximate first-layer gradient is exactly −(1/n)Σ residual·Σ vⱼPⱼx.
    let (gw, _) = approx_gradients(data, layout, act, 1.0, w, v_fixed)?;
    Ok(w.iter().zip(&gw).map(|(w, g)| w - alpha * g).collect())
}

/// Runs a baseline from `init`, recording the same metrics as the learner.
///
/// A non-finite iterate stops the run and sets `diverged`.
pub fn double_convotron_run(
    data: &Dataset,
    truth: &TeacherSpec,
    init: (&[f64], &[f64]),
    params: BaselineParams,
) -> Result<Trajectory> {
    if !(params.alpha > 0.0) {
        return Err(Error::Config(format!(
            "step size {} must be > 0",
            params.alpha
        )));
    }
    let layout = truth.layout;
    let act = truth.activation;
    let mut state = LearnerState::new(init.0.to_vec(), init.1.to_vec());
    let measure = |s: &LearnerState| Record::measure(s.t, &s.w, &s.v, &truth.w_star, &truth.v_star);
    let mut records = vec![measure(&state)];
    let mut diverged = false;
    for _ in 0..params.iterations {
        let (gw, gv) = approx_gradients(data, &layout, act, 1.0, &state.w, &state.v)?;
        let w: Vec<f64> = state
            .w
            .iter()
            .zip(&gw)
            .map(|(w, g)| w - params.alpha * g)
            .collect();
        let v: Vec<f64> = match params.kind {
            BaselineKind::Convotron => state.v.clone(),
            BaselineKind::DoubleConvotron => state
                .v
                .iter()
                .zip(&gv)
                .map(|(v, g)| v - params.alpha * g)
                .collect(),
        };
        if !all_finite(&w) || !all_finite(&v) {
            diverged = true;
            break;
        }
        let next = LearnerState {
            w,
            v,
            t: state.t + 1,
        };
        let rec = measure(&next);
        if !rec.is_finite() {
            diverged = true;
            break;
        }
        state = next;
        records.push(rec);
    }
    Ok(Trajectory {
        records,
        final_state: state,
        diverged,
    })
}
