//! Seeded experiment orchestration.
//!
//! Each seed gets its own teacher, dataset and initialization, all derived
//! from independent RNG streams of that seed. Seeds and initialization
//! candidates run on the rayon pool; results are collected in seed order so
//! the output is a pure function of the configuration.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig, InitStrategy};
use super::fit::{loglog_slope, semilog_slope};
use super::io::{summary_csv, write_file, write_trajectory_csv};
use super::plot::{emit_plot, Series};
use crate::activation::{ActivationMoments, Integrator};
use crate::baselines::{double_convotron_run, BaselineKind, BaselineParams};
use crate::error::{Error, Result};
use crate::learner::{
    init_ball_radius, random_init, run, sign_candidates, theorem_constants, Candidate, HyperParams,
    SignPattern, TheoremDiagnostics, Trajectory,
};
use crate::linalg::{median, norm, scaled};
use crate::moment_estimator::moment_direction_two_layer;
use crate::teacher::{generate_dataset, seeded_rng, stream, Dataset, TeacherSpec};

/// Outcome of one seed: the selected candidate and its trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub n: usize,
    pub pattern: SignPattern,
    pub trajectory: Trajectory,
    /// Final first-layer error of every candidate that was run.
    pub candidate_errors: Vec<(SignPattern, f64)>,
    pub diagnostics: TheoremDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub n: usize,
    pub seed: u64,
    pub pattern: SignPattern,
    pub initial_w_err: f64,
    pub final_w_err: f64,
    pub final_v_err: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub n: usize,
    pub median_w_err: f64,
    pub median_v_err: f64,
    pub median_initial_w_err: f64,
    /// Pointwise median over seeds of ‖wᵗ − w*‖; diverged seeds count as +∞.
    pub median_trajectory: Vec<f64>,
    /// Slope of log(median_trajectory) over `fit_window`.
    pub semilog_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub runs: Vec<SeedResult>,
    pub configs: Vec<ConfigSummary>,
    /// Slope of log(median final w error) against log(n), for sweeps.
    pub loglog_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub moments: ActivationMoments,
    pub seeds: Vec<SeedRun>,
    pub summary: ConfigSummary,
}

impl Experiment {
    pub fn result(&self) -> SweepResult {
        SweepResult {
            runs: self.seeds.iter().map(seed_result).collect(),
            configs: vec![self.summary.clone()],
            loglog_slope: None,
        }
    }
}

fn seed_result(s: &SeedRun) -> SeedResult {
    SeedResult {
        n: s.n,
        seed: s.seed,
        pattern: s.pattern,
        initial_w_err: s.trajectory.initial().w_err,
        final_w_err: s.trajectory.final_w_err(),
        final_v_err: s.trajectory.final_v_err(),
        diverged: s.trajectory.diverged,
    }
}

/// Lowest final first-layer error wins; ties go to the earlier sign pattern.
/// Diverged runs rank as +∞.
pub fn select_best(runs: Vec<(SignPattern, Trajectory)>) -> Option<(SignPattern, Trajectory)> {
    runs.into_iter().min_by(|a, b| {
        a.1.final_w_err()
            .total_cmp(&b.1.final_w_err())
            .then(a.0.cmp(&b.0))
    })
}

struct Context {
    config: ExperimentConfig,
    integrator: Integrator,
    moments: ActivationMoments,
}

impl Context {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let integrator = Integrator::new(config.activation()?, config.quad_order)?;
        let moments = integrator.moments()?;
        Ok(Context {
            config: config.clone(),
            integrator,
            moments,
        })
    }

    fn psi(&self, tau: f64) -> f64 {
        self.integrator
            .psi(tau.clamp(-1.0, 1.0))
            .expect("clamped correlation is in range")
    }

    fn teacher(&self, seed: u64) -> Result<TeacherSpec> {
        let cfg = &self.config;
        TeacherSpec::random_seeded(
            cfg.layout()?,
            cfg.activation()?,
            cfg.input_dist(),
            cfg.noise_std,
            seed,
        )
    }

    fn candidates(&self, truth: &TeacherSpec, data: &Dataset, seed: u64) -> Result<Vec<Candidate>> {
        let cfg = &self.config;
        let strategy = if cfg.algorithm == Algorithm::MomentInitThenGd {
            InitStrategy::Moment
        } else {
            cfg.init
        };
        let mut cands: Vec<Candidate> = match strategy {
            InitStrategy::Random4Candidates => {
                let mut rng = seeded_rng(seed, stream::INIT);
                let (w, v) = random_init(&mut rng, &truth.layout, init_ball_radius(&truth.v_star));
                sign_candidates(&w, &v).into()
            }
            InitStrategy::Moment => {
                let est = moment_direction_two_layer(data, &truth.layout)?;
                let w = scaled(&est.w_tilde, 1.0 / norm(&est.w_tilde));
                // ṽ estimates γ(1)·v* = ξ·v* up to a global sign
                let v = scaled(&est.v_tilde, 1.0 / self.moments.xi);
                sign_candidates(&w, &v).into()
            }
            InitStrategy::Explicit => {
                let w = cfg.init_w.clone().expect("validated");
                let nrm = norm(&w);
                if !(nrm > 0.0) {
                    return Err(Error::Config("init_w must be non-zero".into()));
                }
                vec![Candidate {
                    pattern: SignPattern::PlusPlus,
                    w: scaled(&w, 1.0 / nrm),
                    v: cfg.init_v.clone().expect("validated"),
                }]
            }
        };
        if cfg.algorithm == Algorithm::Convotron {
            // the second layer is known to Convotron; only the filter sign matters
            cands.retain(|c| matches!(c.pattern, SignPattern::PlusPlus | SignPattern::MinusPlus));
            for c in &mut cands {
                c.v = truth.v_star.clone();
            }
        }
        Ok(cands)
    }

    fn run_candidate(
        &self,
        data: &Dataset,
        truth: &TeacherSpec,
        cand: &Candidate,
    ) -> Result<Trajectory> {
        let cfg = &self.config;
        let init = (cand.w.as_slice(), cand.v.as_slice());
        let baseline = |kind| {
            double_convotron_run(
                data,
                truth,
                init,
                BaselineParams {
                    kind,
                    alpha: cfg.alpha,
                    iterations: cfg.iterations,
                },
            )
        };
        match cfg.algorithm {
            Algorithm::ApproxGd | Algorithm::MomentInitThenGd => {
                let hyper = HyperParams::new(cfg.alpha, cfg.iterations)?;
                match run(data, truth, &self.moments, init, hyper) {
                    Err(Error::DegenerateNormalization(_)) => Ok(Trajectory {
                        records: vec![crate::learner::Record::measure(
                            0,
                            &cand.w,
                            &cand.v,
                            &truth.w_star,
                            &truth.v_star,
                        )],
                        final_state: crate::learner::LearnerState::new(
                            cand.w.clone(),
                            cand.v.clone(),
                        ),
                        diverged: true,
                    }),
                    other => other,
                }
            }
            Algorithm::Convotron => baseline(BaselineKind::Convotron),
            Algorithm::DoubleConvotron => baseline(BaselineKind::DoubleConvotron),
        }
    }

    fn run_seed(&self, seed: u64) -> Result<SeedRun> {
        let cfg = &self.config;
        let truth = self.teacher(seed)?;
        let data = generate_dataset(&truth, cfg.n, seed)?;
        let cands = self.candidates(&truth, &data, seed)?;
        let runs: Vec<(SignPattern, Trajectory)> = cands
            .par_iter()
            .map(|c| self.run_candidate(&data, &truth, c).map(|t| (c.pattern, t)))
            .collect::<Result<_>>()?;
        let candidate_errors = runs.iter().map(|(p, t)| (*p, t.final_w_err())).collect();
        let (pattern, trajectory) = select_best(runs).expect("at least one candidate");
        let chosen = cands
            .iter()
            .find(|c| c.pattern == pattern)
            .expect("selected candidate exists");
        let diagnostics = theorem_constants(
            &truth,
            &self.moments,
            (&chosen.w, &chosen.v),
            cfg.alpha,
            cfg.n,
            cfg.delta_prob,
            |t| self.psi(t),
        );
        Ok(SeedRun {
            seed,
            n: cfg.n,
            pattern,
            trajectory,
            candidate_errors,
            diagnostics,
        })
    }
}

fn summarize(config: &ExperimentConfig, seeds: &[SeedRun]) -> ConfigSummary {
    let finals: Vec<f64> = seeds.iter().map(|s| s.trajectory.final_w_err()).collect();
    let finals_v: Vec<f64> = seeds.iter().map(|s| s.trajectory.final_v_err()).collect();
    let initial: Vec<f64> = seeds.iter().map(|s| s.trajectory.initial().w_err).collect();
    let len = config.iterations + 1;
    let median_trajectory: Vec<f64> = (0..len)
        .map(|t| {
            let at_t: Vec<f64> = seeds
                .iter()
                .map(|s| {
                    s.trajectory
                        .records
                        .get(t)
                        .map_or(f64::INFINITY, |r| r.w_err)
                })
                .collect();
            median(&at_t).unwrap_or(f64::NAN)
        })
        .collect();
    ConfigSummary {
        n: config.n,
        median_w_err: median(&finals).unwrap_or(f64::NAN),
        median_v_err: median(&finals_v).unwrap_or(f64::NAN),
        median_initial_w_err: median(&initial).unwrap_or(f64::NAN),
        semilog_slope: semilog_slope(&median_trajectory, config.fit_window).ok(),
        median_trajectory,
    }
}

/// Runs every seed of `config` and aggregates medians. Computation only; see
/// [`write_experiment`] for the files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    let ctx = Context::new(config)?;
    let seeds: Vec<SeedRun> = config
        .seeds
        .par_iter()
        .map(|&s| ctx.run_seed(s))
        .collect::<Result<_>>()?;
    let summary = summarize(config, &seeds);
    Ok(Experiment {
        config: config.clone(),
        moments: ctx.moments,
        seeds,
        summary,
    })
}

pub fn trajectory_file_name(algorithm: Algorithm, seed: u64) -> String {
    format!("{}_seed{seed}.csv", algorithm.name())
}

/// Per-seed trajectory CSVs, `result.json` and `trajectories.svg` under `dir`.
pub fn write_experiment(exp: &Experiment, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let algo = exp.config.algorithm;
    for s in &exp.seeds {
        let path = dir.join(trajectory_file_name(algo, s.seed));
        write_trajectory_csv(&s.trajectory, algo.is_baseline(), &path)?;
    }
    let json = serde_json::to_string_pretty(&exp.result()).expect("result serializes");
    write_file(&dir.join("result.json"), json.as_bytes())?;
    let series: Vec<Series> = exp
        .seeds
        .iter()
        .map(|s| {
            Series::new(
                format!("{} seed {}", algo.name(), s.seed),
                &s.trajectory.w_errs(),
            )
        })
        .collect();
    emit_plot(&series, "||w - w*||", &dir.join("trajectories.svg"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub experiments: Vec<Experiment>,
    pub result: SweepResult,
}

/// Runs `base` at each sample size and fits the log-log slope of the median
/// final first-layer error against n.
pub fn rate_sweep(base: &ExperimentConfig, n_values: &[usize]) -> Result<Sweep> {
    if n_values.len() < 4 {
        return Err(Error::Config(format!(
            "a rate sweep needs at least 4 sample sizes, got {}",
            n_values.len()
        )));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) || n_values[0] == 0 {
        return Err(Error::Config(
            "n_values must be positive and strictly increasing".into(),
        ));
    }
    let experiments: Vec<Experiment> = n_values
        .iter()
        .map(|&n| {
            let mut cfg = base.clone();
            cfg.n = n;
            run_experiment(&cfg)
        })
        .collect::<Result<_>>()?;
    let ns: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    let medians: Vec<f64> = experiments.iter().map(|e| e.summary.median_w_err).collect();
    let slope = loglog_slope(&ns, &medians)?;
    let result = SweepResult {
        runs: experiments
            .iter()
            .flat_map(|e| e.seeds.iter().map(seed_result))
            .collect(),
        configs: experiments.iter().map(|e| e.summary.clone()).collect(),
        loglog_slope: Some(slope),
    };
    Ok(Sweep {
        experiments,
        result,
    })
}

/// `summary.csv`, `sweep.json`, and one experiment directory `n<N>/` per size.
pub fn write_sweep(sweep: &Sweep, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for e in &sweep.experiments {
        write_experiment(e, &dir.join(format!("n{}", e.config.n)))?;
    }
    let rows: Vec<(usize, f64, f64)> = sweep
        .result
        .configs
        .iter()
        .map(|c| (c.n, c.median_w_err, c.median_v_err))
        .collect();
    write_file(&dir.join("summary.csv"), summary_csv(&rows).as_bytes())?;
    let json = serde_json::to_string_pretty(&sweep.result).expect("sweep serializes");
    write_file(&dir.join("sweep.json"), json.as_bytes())
}
