//! Gaussian expectation rules.
//!
//! `GaussHermite` integrates E f(Z), Z ~ N(0,1), for smooth integrands. For
//! piecewise-smooth integrands `expect_piecewise` splits the real line at the
//! kinks and applies Gauss-Legendre on each piece of a truncated range, which
//! keeps spectral accuracy that a single Hermite rule loses at a kink.

use std::f64::consts::PI;

/// Integration range used by the piecewise rule. The Gaussian density at 12
/// is about 5e-32, far below double precision relative to O(1) integrals.
pub const TAIL_CUTOFF: f64 = 12.0;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_EPS: f64 = 1e-15;

/// Symmetric Gauss-Hermite rule rescaled for the standard normal weight.
///
/// Only the non-negative half of the nodes is stored; the rule is applied in
/// mirrored pairs so that odd integrands integrate to exactly zero.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    order: usize,
    /// (node, weight) with node > 0, weight for E f(Z) (sums to 1 with the centre).
    pairs: Vec<(f64, f64)>,
    /// Weight of the node at zero when the order is odd.
    centre: Option<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Hermite order must be positive");
        let (nodes, weights) = hermite_physicists(order);
        let scale = 1.0 / PI.sqrt();
        let mut pairs = Vec::with_capacity(order / 2);
        let mut centre = None;
        for (x, w) in nodes.into_iter().zip(weights) {
            if x > 0.0 {
                pairs.push((x * std::f64::consts::SQRT_2, w * scale));
            } else if x == 0.0 {
                centre = Some(w * scale);
            }
        }
        // Pair in ascending weight so small tail contributions accumulate first.
        pairs.reverse();
        GaussHermite {
            order,
            pairs,
            centre,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// E f(Z) for Z ~ N(0, 1).
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = self.centre.map_or(0.0, |w| w * f(0.0));
        for &(x, w) in &self.pairs {
            acc += w * (f(x) + f(-x));
        }
        acc
    }

    /// All (node, weight) pairs of the full rule, for tensor products.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.order);
        for &(x, w) in &self.pairs {
            out.push((x, w));
            out.push((-x, w));
        }
        if let Some(w) = self.centre {
            out.push((0.0, w));
        }
        out
    }
}

/// Nodes and weights for ∫ e^{-x²} f(x) dx, computed by Newton iteration on
/// the orthonormal Hermite recurrence. Returned in descending node order.
fn hermite_physicists(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<(f64, f64)>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = Vec::with_capacity(n);
        let nf = n as f64;
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 1.0;
            for _ in 0..NEWTON_MAX_ITER {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= NEWTON_EPS {
                    break;
                }
            }
            nodes.push((z, 2.0 / ((1.0 - z * z) * pp * pp)));
        }
        GaussLegendre { nodes }
    }

    /// ∫_a^b f(x) dx.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .map(|&(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// E f(Z) for Z ~ N(0,1) and f smooth between the given breakpoints.
///
/// Breakpoints outside `[-TAIL_CUTOFF, TAIL_CUTOFF]` are ignored.
/// E f(Z) folded about zero: `∫₀^∞ (f(z) + f(-z)) φ(z) dz`, with panels
/// broken at `|b|` for each breakpoint. Odd integrands give exactly 0.
pub fn expect_symmetric<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    breakpoints: &[f64],
    mut f: F,
) -> f64 {
    let mut cuts = vec![0.0];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .map(|b| b.abs())
        .filter(|b| *b > 0.0 && *b < TAIL_CUTOFF)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(TAIL_CUTOFF);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| rule.integrate(w[0], w[1], |z| (f(z) + f(-z)) * std_normal_pdf(z)))
        .sum()
}

pub fn expect_piecewise<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    breakpoints: &[f64],
    mut f: F,
) -> f64 {
    let mut cuts = Vec::with_capacity(breakpoints.len() + 2);
    cuts.push(-TAIL_CUTOFF);
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.abs() < TAIL_CUTOFF)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(TAIL_CUTOFF);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| rule.integrate(w[0], w[1], |z| f(z) * std_normal_pdf(z)))
        .sum()
}
