//! Method-of-moments direction and sign estimates.
//!
//! For each patch, ûⱼ = (1/n) Σᵢ yᵢ Pⱼxᵢ. Under Gaussian inputs with a unit
//! filter, E ûⱼ = v*ⱼ γ(1) w*, so the moment vectors reveal the filter
//! direction and, through their mutual signs, the sign pattern of the second
//! layer relative to the largest one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::teacher::{Dataset, FilterLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub u_hats: Vec<Vec<f64>>,
    pub w_tilde: Vec<f64>,
    pub v_tilde: Vec<f64>,
    /// argmaxⱼ ‖ûⱼ‖₂ (zero-based)
    pub pivot_l: usize,
}

impl MomentEstimate {
    /// aⱼ = sign(û_lᵀûⱼ), with +1 when the inner product vanishes.
    pub fn signs(&self) -> Vec<f64> {
        self.v_tilde
            .iter()
            .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
            .collect()
    }
}

/// ûⱼ = (1/n) Σᵢ yᵢ Pⱼxᵢ for every patch.
pub fn moment_vectors(data: &Dataset, layout: &FilterLayout) -> Result<Vec<Vec<f64>>> {
    data.check_layout(layout)?;
    let n = data.n() as f64;
    let mut sums = vec![0.0; layout.d()];
    for (x, y) in data.rows() {
        sums.iter_mut().zip(x).for_each(|(s, xi)| *s += y * xi);
    }
    Ok(sums
        .chunks(layout.r())
        .map(|c| c.iter().map(|s| s / n).collect())
        .collect())
}

/// ŵ = (1/k) Σⱼ ûⱼ. Only consistent for the filter direction when all
/// second-layer weights share a sign.
pub fn moment_direction(data: &Dataset, layout: &FilterLayout) -> Result<Vec<f64>> {
    let u = moment_vectors(data, layout)?;
    let k = layout.k() as f64;
    let mut w = vec![0.0; layout.r()];
    for uj in &u {
        w.iter_mut().zip(uj).for_each(|(a, b)| *a += b / k);
    }
    Ok(w)
}

/// Pivot on the largest moment vector and read the second-layer signs off
/// its inner products with the others.
pub fn moment_direction_two_layer(data: &Dataset, layout: &FilterLayout) -> Result<MomentEstimate> {
    let u_hats = moment_vectors(data, layout)?;
    let norms: Vec<f64> = u_hats.iter().map(|u| norm(u)).collect();
    let pivot_l = norms
        .iter()
        .enumerate()
        .fold(0, |best, (j, n)| if *n > norms[best] { j } else { best });
    if !(norms[pivot_l] > 0.0) {
        return Err(Error::DegenerateEstimate);
    }
    let pivot = &u_hats[pivot_l];
    let v_tilde = u_hats
        .iter()
        .zip(&norms)
        .map(|(u, n)| if dot(pivot, u) < 0.0 { -n } else { *n })
        .collect();
    Ok(MomentEstimate {
        w_tilde: pivot.clone(),
        v_tilde,
        pivot_l,
        u_hats,
    })
}
