use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use convrecover::activation::{Integrator, DEFAULT_QUAD_ORDER};
use convrecover::experiments::io::read_trajectory_csv;
use convrecover::experiments::{
    emit_plot, gradcheck, rate_sweep, run_experiment, write_experiment, write_sweep,
    ExperimentConfig, Series,
};
use convrecover::{Activation, Error};

#[derive(Parser)]
#[command(
    name = "convrecover",
    version,
    about = "Teacher-student recovery of non-overlapping convolutional networks"
)]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "CONVRECOVER_THREADS")]
    threads: Option<usize>,

    /// Quadrature nodes per panel for Gaussian expectations
    #[arg(long, global = true)]
    quad_order: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print κ, Δ, ξ and the Lipschitz constants of an activation as JSON
    Moments {
        activation: String,
        #[arg(long)]
        leaky_slope: Option<f64>,
    },
    /// Print the correlation kernel ψ(τ)
    Psi {
        activation: String,
        #[arg(allow_hyphen_values = true)]
        tau: f64,
        #[arg(long)]
        leaky_slope: Option<f64>,
    },
    /// Run every seed of a config and write trajectories
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: RunArgs,
    },
    /// Repeat a config over its n_values and fit the error rate
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: RunArgs,
    },
    /// Compare empirical and population gradients
    Gradcheck {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render trajectory CSVs to a semi-log SVG; the last path is the output
    Plot {
        #[arg(num_args = 2.., required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Use seeds 0..N instead of the config's list
    #[arg(long)]
    seed_count: Option<u64>,
    /// Output directory (overrides `out_dir` in the config)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Failure split into usage problems (exit 2) and runtime ones (exit 1).
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::UnknownActivation(_) | Error::QuadOrder(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("convrecover: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("convrecover: {msg}");
            eprintln!("run `convrecover --help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("convrecover: {msg}");
            ExitCode::from(1)
        }
    }
}

fn activation(name: &str, slope: Option<f64>) -> Result<Activation, Error> {
    let act: Activation = name.parse()?;
    match (act, slope) {
        (Activation::LeakyRelu { .. }, Some(s)) => Activation::leaky_relu(s),
        (_, Some(_)) => Err(Error::Config(
            "--leaky-slope needs activation leaky_relu".into(),
        )),
        (act, None) => Ok(act),
    }
}

/// Any failure to read or validate the config is a usage error.
fn load(cli: &Cli, path: &Path, common: Option<&RunArgs>) -> Result<ExperimentConfig, Failure> {
    let usage = |e: Error| Failure::Usage(e.to_string());
    let mut cfg = ExperimentConfig::load(path).map_err(usage)?;
    if let Some(q) = cli.quad_order {
        cfg.quad_order = q;
    }
    if let Some(args) = common {
        if let Some(n) = args.seed_count {
            cfg.seeds = (0..n).collect();
        }
        if let Some(dir) = &args.out_dir {
            cfg.out_dir = Some(dir.clone());
        }
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn print_json(value: serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("serializable output")
    );
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let order = cli.quad_order.unwrap_or(DEFAULT_QUAD_ORDER);
    match &cli.command {
        Command::Moments {
            activation: name,
            leaky_slope,
        } => {
            let m = Integrator::new(activation(name, *leaky_slope)?, order)?.moments()?;
            print_json(serde_json::to_value(m).expect("moments serialize"));
        }
        Command::Psi {
            activation: name,
            tau,
            leaky_slope,
        } => {
            let p = Integrator::new(activation(name, *leaky_slope)?, order)?
                .psi(*tau)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            println!("{p:?}");
        }
        Command::Run { config, common } => {
            let cfg = load(cli, config, Some(common))?;
            let exp = run_experiment(&cfg)?;
            if let Some(dir) = &cfg.out_dir {
                write_experiment(&exp, dir)?;
            }
            let s = &exp.summary;
            print_json(serde_json::json!({
                "algorithm": cfg.algorithm.name(),
                "n": s.n,
                "median_initial_w_err": s.median_initial_w_err,
                "median_w_err": s.median_w_err,
                "median_v_err": s.median_v_err,
                "semilog_slope": s.semilog_slope,
                "runs": exp.result().runs,
            }));
        }
        Command::Sweep { config, common } => {
            let cfg = load(cli, config, Some(common))?;
            if cfg.n_values.is_empty() {
                return Err(Failure::Usage(format!(
                    "{}: n_values is empty",
                    config.display()
                )));
            }
            let sweep = rate_sweep(&cfg, &cfg.n_values)?;
            if let Some(dir) = &cfg.out_dir {
                write_sweep(&sweep, dir)?;
            }
            for c in &sweep.result.configs {
                println!(
                    "n={} median_w_err={:.6e} median_v_err={:.6e}",
                    c.n, c.median_w_err, c.median_v_err
                );
            }
            match sweep.result.loglog_slope {
                Some(s) => println!("loglog_slope={s:.4}"),
                None => println!("loglog_slope=nan"),
            }
        }
        Command::Gradcheck { config, seed } => {
            let cfg = load(cli, config, None)?;
            let rep = gradcheck(&cfg, *seed, cfg.gradcheck_pairs)?;
            println!(
                "{} n={} pairs={} max_deviation_se={:.4} zero_at_truth={}",
                rep.activation,
                rep.n,
                rep.pairs.len(),
                rep.max_deviation_se,
                rep.zero_at_truth
            );
        }
        Command::Plot { paths } => {
            let (out, inputs) = paths.split_last().expect("clap enforces two paths");
            let mut series = Vec::with_capacity(inputs.len());
            for p in inputs {
                let file = read_trajectory_csv(p)?;
                let errs: Vec<f64> = file.records.iter().map(|r| r.w_err).collect();
                let label = p.file_stem().map_or_else(
                    || p.display().to_string(),
                    |s| s.to_string_lossy().into_owned(),
                );
                series.push(Series::new(label, &errs));
            }
            emit_plot(&series, "||w - w*||", out)?;
        }
    }
    Ok(())
}
