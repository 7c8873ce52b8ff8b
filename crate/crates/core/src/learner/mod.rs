//! Approximate gradient descent for the non-overlapping CNN.
//!
//! The first-layer direction replaces every σ′ factor of the square-loss
//! gradient by the constant ξ⁻¹ and renormalizes `w` after each step. The
//! second layer takes the exact empirical gradient.

mod diagnostics;
mod population;

pub use diagnostics::{theorem_constants, TheoremDiagnostics, DEFAULT_DELTA_PROB};
pub use population::{population_grad_v, population_grad_w};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::{Activation, ActivationMoments};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, dist, dot, negated, norm, sub};
use crate::teacher::{standard_normal_vec, unit_sphere, Dataset, FilterLayout, TeacherSpec};

/// Samples per partial sum. Fixed so that parallel reductions are reproducible.
const CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub t: usize,
}

impl LearnerState {
    pub fn new(w: Vec<f64>, v: Vec<f64>) -> Self {
        LearnerState { w, v, t: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha: f64,
    pub iterations: usize,
}

impl HyperParams {
    pub fn new(alpha: f64, iterations: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("step size {alpha} must be > 0")));
        }
        Ok(HyperParams { alpha, iterations })
    }
}

/// Errors of one iterate against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: usize,
    pub w_err: f64,
    pub v_err: f64,
    pub cos_w: f64,
    pub one_v: f64,
}

impl Record {
    pub fn measure(t: usize, w: &[f64], v: &[f64], w_star: &[f64], v_star: &[f64]) -> Self {
        Record {
            t,
            w_err: dist(w, w_star),
            v_err: dist(v, v_star),
            cos_w: dot(w_star, w),
            one_v: v.iter().zip(v_star).map(|(a, b)| a - b).sum(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w_err.is_finite()
            && self.v_err.is_finite()
            && self.cos_w.is_finite()
            && self.one_v.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub final_state: LearnerState,
    /// Set when an iterate left the finite range; `records` stop there.
    pub diverged: bool,
}

impl Trajectory {
    pub fn initial(&self) -> &Record {
        &self.records[0]
    }

    pub fn last(&self) -> &Record {
        self.records
            .last()
            .expect("trajectory has the t = 0 record")
    }

    /// Final first-layer error, +∞ for diverged runs.
    pub fn final_w_err(&self) -> f64 {
        if self.diverged {
            f64::INFINITY
        } else {
            self.last().w_err
        }
    }

    pub fn final_v_err(&self) -> f64 {
        if self.diverged {
            f64::INFINITY
        } else {
            self.last().v_err
        }
    }

    pub fn w_errs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.w_err).collect()
    }
}

/// Per-sample residual and model features at (w, v).
#[inline]
fn residual_and_features(
    layout: &FilterLayout,
    act: Activation,
    w: &[f64],
    v: &[f64],
    x: &[f64],
    y: f64,
    feats: &mut [f64],
) -> f64 {
    let mut pred = 0.0;
    for (j, p) in layout.patches(x).enumerate() {
        let s = act.eval(dot(w, p));
        feats[j] = s;
        pred += v[j] * s;
    }
    y - pred
}

#[derive(Clone)]
struct Partial {
    gw: Vec<f64>,
    gv: Vec<f64>,
}

/// Σᵢ residualᵢ Σⱼ vⱼPⱼxᵢ and Σᵢ residualᵢ Σ(w)ᵢ, accumulated in fixed-size chunks.
fn residual_sums(
    data: &Dataset,
    layout: &FilterLayout,
    act: Activation,
    w: &[f64],
    v: &[f64],
) -> Partial {
    let (k, r) = (layout.k(), layout.r());
    let rows: Vec<(&[f64], f64)> = data.rows().collect();
    let partials: Vec<Partial> = rows
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Partial {
                gw: vec![0.0; r],
                gv: vec![0.0; k],
            };
            let mut feats = vec![0.0; k];
            for &(x, y) in chunk {
                let res = residual_and_features(layout, act, w, v, x, y, &mut feats);
                for (j, p) in layout.patches(x).enumerate() {
                    let c = res * v[j];
                    for (g, xp) in acc.gw.iter_mut().zip(p) {
                        *g += c * xp;
                    }
                    acc.gv[j] += res * feats[j];
                }
            }
            acc
        })
        .collect();
    let mut total = Partial {
        gw: vec![0.0; r],
        gv: vec![0.0; k],
    };
    for p in partials {
        total.gw.iter_mut().zip(&p.gw).for_each(|(a, b)| *a += b);
        total.gv.iter_mut().zip(&p.gv).for_each(|(a, b)| *a += b);
    }
    total
}

fn check_shapes(data: &Dataset, layout: &FilterLayout, w: &[f64], v: &[f64]) -> Result<()> {
    data.check_layout(layout)?;
    if w.len() != layout.r() {
        return Err(Error::Dimension {
            expected: layout.r(),
            got: w.len(),
        });
    }
    if v.len() != layout.k() {
        return Err(Error::Dimension {
            expected: layout.k(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Both update directions of one iteration from a single pass over the data.
pub fn approx_gradients(
    data: &Dataset,
    layout: &FilterLayout,
    act: Activation,
    xi: f64,
    w: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_shapes(data, layout, w, v)?;
    if !(xi > 0.0) {
        return Err(Error::NonPositiveXi(xi));
    }
    let n = data.n() as f64;
    let sums = residual_sums(data, layout, act, w, v);
    let gw = sums.gw.iter().map(|g| -g / (n * xi)).collect();
    let gv = sums.gv.iter().map(|g| -g / n).collect();
    Ok((gw, gv))
}

/// −(1/n) Σᵢ residualᵢ · ξ⁻¹ Σⱼ vⱼ Pⱼ xᵢ
pub fn approx_grad_w(
    data: &Dataset,
    layout: &FilterLayout,
    moments: &ActivationMoments,
    act: Activation,
    w: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    approx_gradients(data, layout, act, moments.xi, w, v).map(|(gw, _)| gw)
}

/// −(1/n) Σ(w)ᵀ (y − Σ(w) v), the exact empirical gradient in v.
pub fn grad_v(
    data: &Dataset,
    layout: &FilterLayout,
    act: Activation,
    w: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    check_shapes(data, layout, w, v)?;
    let n = data.n() as f64;
    let sums = residual_sums(data, layout, act, w, v);
    Ok(sums.gv.iter().map(|g| -g / n).collect())
}

/// Empirical gradients together with their Monte Carlo standard errors
/// (sample standard deviation of the per-sample terms over √n).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStats {
    pub g_w: Vec<f64>,
    pub se_w: Vec<f64>,
    pub g_v: Vec<f64>,
    pub se_v: Vec<f64>,
}

pub fn gradient_stats(
    data: &Dataset,
    layout: &FilterLayout,
    act: Activation,
    xi: f64,
    w: &[f64],
    v: &[f64],
) -> Result<GradientStats> {
    check_shapes(data, layout, w, v)?;
    if !(xi > 0.0) {
        return Err(Error::NonPositiveXi(xi));
    }
    let (k, r) = (layout.k(), layout.r());
    let mut sum = vec![0.0; r + k];
    let mut sum_sq = vec![0.0; r + k];
    let mut feats = vec![0.0; k];
    let mut term = vec![0.0; r + k];
    for (x, y) in data.rows() {
        let res = residual_and_features(layout, act, w, v, x, y, &mut feats);
        term.iter_mut().for_each(|t| *t = 0.0);
        for (j, p) in layout.patches(x).enumerate() {
            for (c, xp) in p.iter().enumerate() {
                term[c] -= res * v[j] * xp / xi;
            }
            term[r + j] = -res * feats[j];
        }
        for c in 0..r + k {
            sum[c] += term[c];
            sum_sq[c] += term[c] * term[c];
        }
    }
    let n = data.n() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| {
            let var = (sq / n - m * m).max(0.0) * n / (n - 1.0).max(1.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(GradientStats {
        g_w: mean[..r].to_vec(),
        se_w: se[..r].to_vec(),
        g_v: mean[r..].to_vec(),
        se_v: se[r..].to_vec(),
    })
}

/// uᵗ⁺¹ = wᵗ − α g_w, wᵗ⁺¹ = u/‖u‖, vᵗ⁺¹ = vᵗ − α g_v.
pub fn gd_step(state: &LearnerState, g_w: &[f64], g_v: &[f64], alpha: f64) -> Result<LearnerState> {
    if g_w.len() != state.w.len() {
        return Err(Error::Dimension {
            expected: state.w.len(),
            got: g_w.len(),
        });
    }
    if g_v.len() != state.v.len() {
        return Err(Error::Dimension {
            expected: state.v.len(),
            got: g_v.len(),
        });
    }
    let u: Vec<f64> = state
        .w
        .iter()
        .zip(g_w)
        .map(|(w, g)| w - alpha * g)
        .collect();
    let nrm = norm(&u);
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(Error::DegenerateNormalization(nrm));
    }
    // A zero direction leaves the (already unit) iterate untouched rather
    // than re-rounding it through the normalization.
    let w = if g_w.iter().all(|g| *g == 0.0) {
        u
    } else {
        u.into_iter().map(|x| x / nrm).collect()
    };
    let v = state
        .v
        .iter()
        .zip(g_v)
        .map(|(v, g)| v - alpha * g)
        .collect();
    Ok(LearnerState {
        w,
        v,
        t: state.t + 1,
    })
}

fn check_unit(w: &[f64]) -> Result<()> {
    if (norm(w) - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "initial w must be a unit vector (norm {})",
            norm(w)
        )));
    }
    Ok(())
}

/// Runs T iterations of approximate gradient descent, recording errors
/// against `truth` at every iterate including t = 0.
///
/// An iterate that leaves the finite range ends the run with `diverged` set.
/// A zero-norm first-layer update is an error.
pub fn run(
    data: &Dataset,
    truth: &TeacherSpec,
    moments: &ActivationMoments,
    init: (&[f64], &[f64]),
    hyper: HyperParams,
) -> Result<Trajectory> {
    let layout = truth.layout;
    check_shapes(data, &layout, init.0, init.1)?;
    check_unit(init.0)?;
    let mut state = LearnerState::new(init.0.to_vec(), init.1.to_vec());
    let measure = |s: &LearnerState| Record::measure(s.t, &s.w, &s.v, &truth.w_star, &truth.v_star);
    let mut records = Vec::with_capacity(hyper.iterations + 1);
    records.push(measure(&state));
    let mut diverged = false;
    for _ in 0..hyper.iterations {
        let (gw, gv) = approx_gradients(
            data,
            &layout,
            truth.activation,
            moments.xi,
            &state.w,
            &state.v,
        )?;
        if !all_finite(&gw) || !all_finite(&gv) {
            diverged = true;
            break;
        }
        let next = match gd_step(&state, &gw, &gv, hyper.alpha) {
            Ok(s) => s,
            Err(Error::DegenerateNormalization(n)) if !n.is_finite() => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let rec = measure(&next);
        if !all_finite(&next.v) || !rec.is_finite() {
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

/// Radius k^{-1/2}|1ᵀv*|/2 of the ball the random second layer is projected onto.
pub fn init_ball_radius(v_star: &[f64]) -> f64 {
    let k = v_star.len() as f64;
    v_star.iter().sum::<f64>().abs() / (2.0 * k.sqrt())
}

/// w uniform on S^{r-1}; v standard Gaussian, shrunk onto the ball of radius
/// `v_ball_radius` when it falls outside.
pub fn random_init<R: Rng + ?Sized>(
    rng: &mut R,
    layout: &FilterLayout,
    v_ball_radius: f64,
) -> (Vec<f64>, Vec<f64>) {
    let w = unit_sphere(layout.r(), rng);
    let mut v = standard_normal_vec(layout.k(), rng);
    let nrm = norm(&v);
    if nrm > v_ball_radius {
        let s = if nrm > 0.0 { v_ball_radius / nrm } else { 0.0 };
        v.iter_mut().for_each(|x| *x *= s);
    }
    (w, v)
}

/// Sign pattern of an initialization candidate, in the documented tie-break
/// order (+,+) < (−,+) < (+,−) < (−,−).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignPattern {
    PlusPlus,
    MinusPlus,
    PlusMinus,
    MinusMinus,
}

impl SignPattern {
    pub const ALL: [SignPattern; 4] = [
        SignPattern::PlusPlus,
        SignPattern::MinusPlus,
        SignPattern::PlusMinus,
        SignPattern::MinusMinus,
    ];

    pub fn signs(self) -> (f64, f64) {
        match self {
            SignPattern::PlusPlus => (1.0, 1.0),
            SignPattern::MinusPlus => (-1.0, 1.0),
            SignPattern::PlusMinus => (1.0, -1.0),
            SignPattern::MinusMinus => (-1.0, -1.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SignPattern::PlusPlus => "+w,+v",
            SignPattern::MinusPlus => "-w,+v",
            SignPattern::PlusMinus => "+w,-v",
            SignPattern::MinusMinus => "-w,-v",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub pattern: SignPattern,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

/// (w, v), (−w, v), (w, −v), (−w, −v).
pub fn sign_candidates(w: &[f64], v: &[f64]) -> [Candidate; 4] {
    SignPattern::ALL.map(|pattern| {
        let (sw, sv) = pattern.signs();
        Candidate {
            pattern,
            w: if sw > 0.0 { w.to_vec() } else { negated(w) },
            v: if sv > 0.0 { v.to_vec() } else { negated(v) },
        }
    })
}

/// The three initialization conditions of the convergence theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitCheck {
    pub w_aligned: bool,
    pub v_aligned: bool,
    pub mean_condition: bool,
    pub rho: f64,
}

impl InitCheck {
    pub fn all(&self) -> bool {
        self.w_aligned && self.v_aligned && self.mean_condition
    }
}

/// ρ = min{ψ(w*ᵀw⁰/2)‖v*‖²/(2+Δ), v*ᵀv⁰}.
pub fn rho(
    moments: &ActivationMoments,
    w_star: &[f64],
    v_star: &[f64],
    w0: &[f64],
    v0: &[f64],
    psi: impl Fn(f64) -> f64,
) -> f64 {
    let tau = dot(w_star, w0).clamp(-1.0, 1.0);
    let a = psi(0.5 * tau) * dot(v_star, v_star) / (2.0 + moments.delta);
    a.min(dot(v_star, v0))
}

pub fn check_init_condition(
    truth: &TeacherSpec,
    moments: &ActivationMoments,
    cand: (&[f64], &[f64]),
    psi: impl Fn(f64) -> f64,
) -> InitCheck {
    let (w0, v0) = cand;
    let rho = rho(moments, &truth.w_star, &truth.v_star, w0, v0, psi);
    let one_vs: f64 = truth.v_star.iter().sum();
    let one_diff: f64 = sub(v0, &truth.v_star).iter().sum();
    InitCheck {
        w_aligned: dot(&truth.w_star, w0) > 0.0,
        v_aligned: dot(&truth.v_star, v0) > 0.0,
        mean_condition: moments.kappa * moments.kappa * one_vs * one_diff <= rho,
        rho,
    }
}

#[cfg(test)]
mod tests;
