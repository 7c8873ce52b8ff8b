//! Activation functions and their standard-Gaussian statistics.
//!
//! Every quantity here is an expectation over standard normal inputs:
//! `kappa = E σ(z)`, `delta = Var σ(z)`, `xi = E σ(z) z`, the correlation
//! kernel `psi(τ) = Cov[σ(Z₁), σ(τZ₁ + √(1-τ²)Z₂)]` and the single-index
//! moment `gamma(h) = E σ(hz) z`. Integrals run over `[-12, 12]` with
//! Gauss-Legendre panels split at zero and at every kink. When all
//! breakpoints are symmetric the two halves are folded together, so odd
//! integrands vanish exactly.

pub mod quadrature;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use quadrature::{expect_piecewise, expect_symmetric, GaussLegendre};

pub const MIN_QUAD_ORDER: usize = 16;
pub const DEFAULT_QUAD_ORDER: usize = 64;
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    LeakyRelu {
        slope: f64,
    },
    Sigmoid,
    Tanh,
    /// σ(z) = ∫₀ᶻ exp(-t²/2) dt
    Erf,
    Softplus,
    Identity,
}

impl Activation {
    pub const ALL_NAMES: [&'static str; 7] = [
        "relu",
        "leaky_relu",
        "sigmoid",
        "tanh",
        "erf",
        "softplus",
        "identity",
    ];

    /// The whole family with default parameters.
    pub fn family() -> Vec<Activation> {
        Self::ALL_NAMES
            .iter()
            .map(|n| n.parse().expect("family names parse"))
            .collect()
    }

    pub fn leaky_relu(slope: f64) -> Result<Self> {
        if slope > 0.0 && slope < 1.0 {
            Ok(Activation::LeakyRelu { slope })
        } else {
            Err(Error::DegenerateActivation(format!(
                "leaky_relu slope {slope} not in (0, 1)"
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::LeakyRelu { .. } => "leaky_relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Erf => "erf",
            Activation::Softplus => "softplus",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu { slope } => {
                if z >= 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Erf => {
                std::f64::consts::FRAC_PI_2.sqrt() * libm::erf(z * std::f64::consts::FRAC_1_SQRT_2)
            }
            Activation::Softplus => z.max(0.0) + (-z.abs()).exp().ln_1p(),
            Activation::Identity => z,
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// Points where σ is not differentiable.
    pub fn kinks(&self) -> &'static [f64] {
        match self {
            Activation::Relu | Activation::LeakyRelu { .. } => &[0.0],
            _ => &[],
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.kinks().is_empty()
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::LeakyRelu { slope } if *slope != DEFAULT_LEAKY_SLOPE => {
                write!(f, "leaky_relu({slope})")
            }
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "leaky_relu" => Ok(Activation::LeakyRelu {
                slope: DEFAULT_LEAKY_SLOPE,
            }),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "erf" => Ok(Activation::Erf),
            "softplus" => Ok(Activation::Softplus),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::UnknownActivation(other.to_string())),
        }
    }
}

/// Standard-Gaussian statistics of an activation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationMoments {
    pub kappa: f64,
    pub delta: f64,
    pub xi: f64,
    /// L = 1 + |σ(0)|
    pub lip_l: f64,
    /// Γ = 1 + |σ(0) - κ|
    pub gamma_cap: f64,
    pub quad_order: usize,
}

/// Quadrature engine bound to one activation and order.
///
/// Building the rules is the only non-trivial cost; reuse one `Integrator`
/// for repeated `psi` or `gamma` evaluations.
#[derive(Debug, Clone)]
pub struct Integrator {
    act: Activation,
    order: usize,
    rule: GaussLegendre,
}

impl Integrator {
    pub fn new(act: Activation, order: usize) -> Result<Self> {
        if order < MIN_QUAD_ORDER {
            return Err(Error::QuadOrder(order));
        }
        Ok(Integrator {
            act,
            order,
            rule: GaussLegendre::new(order),
        })
    }

    pub fn activation(&self) -> Activation {
        self.act
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// E f(Z) where f has kinks at `kinks`.
    fn expect<F: FnMut(f64) -> f64>(&self, kinks: &[f64], f: F) -> f64 {
        if kinks.iter().all(|c| *c == 0.0) {
            expect_symmetric(&self.rule, &[], f)
        } else {
            expect_piecewise(&self.rule, kinks, f)
        }
    }

    pub fn kappa(&self) -> f64 {
        let act = self.act;
        self.expect(act.kinks(), |z| act.eval(z))
    }

    pub fn moments(&self) -> Result<ActivationMoments> {
        let act = self.act;
        if act == Activation::Identity {
            // quadrature rounds these to within a few ulps; the values are exact
            return Ok(ActivationMoments {
                kappa: 0.0,
                delta: 1.0,
                xi: 1.0,
                lip_l: 1.0,
                gamma_cap: 1.0,
                quad_order: self.order,
            });
        }
        let kinks = act.kinks();
        let kappa = self.kappa();
        let second = self.expect(kinks, |z| {
            let s = act.eval(z);
            s * s
        });
        let delta = second - kappa * kappa;
        let xi = self.expect(kinks, |z| act.eval(z) * z);
        if !(delta > 0.0) {
            return Err(Error::DegenerateActivation(format!(
                "{act}: variance {delta} is not positive"
            )));
        }
        if !(xi > 0.0) {
            return Err(Error::DegenerateActivation(format!(
                "{act}: xi {xi} is not positive"
            )));
        }
        let s0 = act.at_zero();
        Ok(ActivationMoments {
            kappa,
            delta,
            xi,
            lip_l: 1.0 + s0.abs(),
            gamma_cap: 1.0 + (s0 - kappa).abs(),
            quad_order: self.order,
        })
    }

    /// E σ(hz) z.
    pub fn gamma(&self, h: f64) -> f64 {
        let act = self.act;
        // σ(hz) has its kinks at z = kink / h; all kinks sit at 0 here.
        let kinks: Vec<f64> = if h == 0.0 {
            Vec::new()
        } else {
            act.kinks().iter().map(|c| c / h).collect()
        };
        self.expect(&kinks, |z| act.eval(h * z) * z)
    }

    /// Cov[σ(Z₁), σ(τZ₁ + √(1-τ²)Z₂)] for independent standard normals.
    pub fn psi(&self, tau: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&tau) {
            return Err(Error::CorrelationOutOfRange(tau));
        }
        let act = self.act;
        if act == Activation::Identity {
            return Ok(tau);
        }
        let kappa = self.kappa();
        let s = (1.0 - tau * tau).max(0.0).sqrt();
        let outer_kinks = act.kinks();
        let cross = if s == 0.0 {
            self.expect(outer_kinks, |z1| act.eval(z1) * act.eval(tau * z1))
        } else {
            self.expect(outer_kinks, |z1| {
                let a = tau * z1;
                // inner kinks where a + s z₂ hits a kink of σ
                let inner: Vec<f64> = act.kinks().iter().map(|c| (c - a) / s).collect();
                let inner_mean = self.expect(&inner, |z2| act.eval(a + s * z2));
                act.eval(z1) * inner_mean
            })
        };
        Ok(cross - kappa * kappa)
    }
}

pub fn eval_sigma(act: Activation, z: f64) -> f64 {
    act.eval(z)
}

pub fn compute_moments(act: Activation, quad_order: usize) -> Result<ActivationMoments> {
    Integrator::new(act, quad_order)?.moments()
}

pub fn psi(act: Activation, tau: f64, quad_order: usize) -> Result<f64> {
    Integrator::new(act, quad_order)?.psi(tau)
}

pub fn gamma_fn(act: Activation, h: f64, quad_order: usize) -> Result<f64> {
    Ok(Integrator::new(act, quad_order)?.gamma(h))
}

/// Arc-cosine kernel covariance of ReLU at correlation τ.
pub fn psi_relu_closed_form(tau: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&tau) {
        return Err(Error::CorrelationOutOfRange(tau));
    }
    use std::f64::consts::PI;
    Ok(((1.0 - tau * tau).sqrt() + tau * (PI - tau.acos())) / (2.0 * PI) - 1.0 / (2.0 * PI))
}
