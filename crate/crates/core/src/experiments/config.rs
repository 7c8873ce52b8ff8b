//! Experiment configuration, read from TOML (or JSON with a `.json` extension).
//!
//! Keys are the snake_case field names below; see `configs/` at the
//! repository root for complete examples.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activation::{Activation, DEFAULT_QUAD_ORDER};
use crate::error::{Error, Result};
use crate::learner::DEFAULT_DELTA_PROB;
use crate::teacher::{FilterLayout, InputDist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(alias = "approx-gd")]
    ApproxGd,
    Convotron,
    #[serde(alias = "double-convotron")]
    DoubleConvotron,
    #[serde(alias = "moment-init-then-gd")]
    MomentInitThenGd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ApproxGd => "approx_gd",
            Algorithm::Convotron => "convotron",
            Algorithm::DoubleConvotron => "double_convotron",
            Algorithm::MomentInitThenGd => "moment_init_then_gd",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Algorithm::Convotron | Algorithm::DoubleConvotron)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    #[serde(
        rename = "random_4_candidates",
        alias = "random-4-candidates",
        alias = "random"
    )]
    Random4Candidates,
    Moment,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputDistName {
    Gaussian,
    #[serde(alias = "uniform-sphere")]
    UniformSphere,
    #[serde(alias = "transelliptical-cube")]
    Transelliptical,
}

fn default_activation() -> String {
    "relu".into()
}
fn default_n() -> usize {
    1000
}
fn default_iterations() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.04
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}
fn default_algorithm() -> Algorithm {
    Algorithm::ApproxGd
}
fn default_init() -> InitStrategy {
    InitStrategy::Random4Candidates
}
fn default_input_dist() -> InputDistName {
    InputDistName::Gaussian
}
fn default_quad_order() -> usize {
    DEFAULT_QUAD_ORDER
}
fn default_fit_window() -> [usize; 2] {
    [5, 50]
}
fn default_delta_prob() -> f64 {
    DEFAULT_DELTA_PROB
}
fn default_gradcheck_pairs() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(default)]
    pub leaky_slope: Option<f64>,
    pub k: usize,
    pub r: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_iterations", alias = "t")]
    pub iterations: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default = "default_input_dist")]
    pub input_dist: InputDistName,
    /// Radius for `uniform_sphere`; √d when absent.
    #[serde(default)]
    pub sphere_radius: Option<f64>,
    /// Rescale cubed entries to unit variance for `transelliptical`.
    #[serde(default)]
    pub standardize: bool,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_init")]
    pub init: InitStrategy,
    #[serde(default)]
    pub init_w: Option<Vec<f64>>,
    #[serde(default)]
    pub init_v: Option<Vec<f64>>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    /// Sample sizes for `sweep`.
    #[serde(default)]
    pub n_values: Vec<usize>,
    /// Inclusive iteration window for the semi-log slope fit.
    #[serde(default = "default_fit_window")]
    pub fit_window: [usize; 2],
    #[serde(default = "default_delta_prob")]
    pub delta_prob: f64,
    /// Number of random (w, v) pairs for `gradcheck`.
    #[serde(default = "default_gradcheck_pairs")]
    pub gradcheck_pairs: usize,
}

impl ExperimentConfig {
    /// Setting with every optional key at its default.
    pub fn new(activation: &str, k: usize, r: usize) -> Self {
        ExperimentConfig {
            activation: activation.into(),
            leaky_slope: None,
            k,
            r,
            n: default_n(),
            iterations: default_iterations(),
            alpha: default_alpha(),
            noise_std: 0.0,
            input_dist: default_input_dist(),
            sphere_radius: None,
            standardize: false,
            seeds: default_seeds(),
            algorithm: default_algorithm(),
            init: default_init(),
            init_w: None,
            init_v: None,
            out_dir: None,
            quad_order: default_quad_order(),
            n_values: Vec::new(),
            fit_window: default_fit_window(),
            delta_prob: default_delta_prob(),
            gradcheck_pairs: default_gradcheck_pairs(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn activation(&self) -> Result<Activation> {
        let act: Activation = self.activation.parse()?;
        match (act, self.leaky_slope) {
            (Activation::LeakyRelu { .. }, Some(slope)) => Activation::leaky_relu(slope),
            (_, Some(_)) => Err(Error::Config(
                "leaky_slope is only valid with activation = \"leaky_relu\"".into(),
            )),
            (act, None) => Ok(act),
        }
    }

    pub fn layout(&self) -> Result<FilterLayout> {
        FilterLayout::new(self.k, self.r)
    }

    pub fn input_dist(&self) -> InputDist {
        match self.input_dist {
            InputDistName::Gaussian => InputDist::Gaussian,
            InputDistName::UniformSphere => InputDist::UniformSphere {
                radius: self.sphere_radius,
            },
            InputDistName::Transelliptical => InputDist::Transelliptical {
                standardize: self.standardize,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.activation()?;
        self.layout()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be > 0", self.alpha));
        }
        if !(self.noise_std >= 0.0) {
            return bad(format!("noise_std {} must be >= 0", self.noise_std));
        }
        if self.seeds.is_empty() {
            return bad("seeds must be non-empty".into());
        }
        if let Some(radius) = self.sphere_radius {
            if !(radius > 0.0) {
                return bad(format!("sphere_radius {radius} must be > 0"));
            }
        }
        if self.fit_window[0] > self.fit_window[1] {
            return bad("fit_window must be [start, end] with start <= end".into());
        }
        if !(self.delta_prob > 0.0 && self.delta_prob < 1.0) {
            return bad(format!("delta_prob {} must lie in (0, 1)", self.delta_prob));
        }
        if self.init == InitStrategy::Explicit {
            match (&self.init_w, &self.init_v) {
                (Some(w), Some(v)) if w.len() == self.r && v.len() == self.k => {}
                _ => {
                    return bad(format!(
                        "init = \"explicit\" needs init_w (length {}) and init_v (length {})",
                        self.r, self.k
                    ))
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str("k = 15\nr = 5\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::new("relu", 15, 5));
        assert_eq!(cfg.seeds.len(), 10);
    }

    #[test]
    fn full_toml() {
        let text = r#"
activation = "tanh"
k = 15
r = 5
n = 1000
t = 100
alpha = 0.1
noise_std = 0.08
input_dist = "uniform_sphere"
sphere_radius = 1.0
seeds = [1, 2, 3]
algorithm = "double-convotron"
init = "random_4_candidates"
out_dir = "out/tanh"
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.iterations, 100);
        assert_eq!(cfg.algorithm, Algorithm::DoubleConvotron);
        assert_eq!(
            cfg.input_dist(),
            InputDist::UniformSphere { radius: Some(1.0) }
        );
        assert_eq!(cfg.activation().unwrap(), Activation::Tanh);
    }

    #[test]
    fn json_is_equivalent() {
        let cfg = ExperimentConfig::from_json_str(r#"{"k": 3, "r": 2, "activation": "sigmoid"}"#)
            .unwrap();
        assert_eq!(cfg, ExperimentConfig::new("sigmoid", 3, 2));
    }

    #[test]
    fn malformed_configs() {
        for text in [
            "r = 5\n",
            "k = 0\nr = 5\n",
            "k = 2\nr = 2\nactivation = \"swish\"\n",
            "k = 2\nr = 2\nalpha = -1.0\n",
            "k = 2\nr = 2\nseeds = []\n",
            "k = 2\nr = 2\nbogus = 1\n",
            "k = 2\nr = 2\ninit = \"explicit\"\n",
            "k = 2\nr = 2\nleaky_slope = 0.1\n",
            "k = 2\nr = 2\nfit_window = [9, 3]\n",
        ] {
            assert!(ExperimentConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn leaky_slope() {
        let cfg = ExperimentConfig::from_toml_str(
            "k = 2\nr = 2\nactivation = \"leaky_relu\"\nleaky_slope = 0.2\n",
        )
        .unwrap();
        assert_eq!(
            cfg.activation().unwrap(),
            Activation::LeakyRelu { slope: 0.2 }
        );
    }
}
