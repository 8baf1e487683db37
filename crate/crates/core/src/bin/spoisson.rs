use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stochastic_poisson::diagnostics::poisson_map_residual;
use stochastic_poisson::harness::{self, ExperimentConfig, Figure, HarnessError};
use stochastic_poisson::integrators::{Method, SolverConfig};
use stochastic_poisson::modified::{flow_coefficients, method_coefficients, modified_coefficients_matching, DEFAULT_MAX_WEIGHT};
use stochastic_poisson::stochastics::SeedSpec;
use stochastic_poisson::systems::{Builtin, PoissonSystem};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "spoisson", version, about = "Stochastic Poisson integrators and their diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a config and write states (and drift series when tracked).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write drift series and plots of the tracked functionals.
    Drift {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fit the step-size exponent of the cumulative random-Hamiltonian drift instead.
        #[arg(long)]
        scaling: bool,
    },
    /// Monte Carlo strong-order estimate over the config's step sizes.
    Order {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expansion coefficients of a stepper, the exact flow or the modified field.
    ModifiedCoeffs {
        #[arg(long)]
        system: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sigma: Option<Vec<f64>>,
        #[arg(long, default_value = "midpoint")]
        stepper: String,
        #[arg(long, default_value_t = DEFAULT_MAX_WEIGHT)]
        weight: u32,
        /// Base point, comma separated; repeatable.
        #[arg(long, required = true, value_delimiter = ',', num_args = 1, allow_hyphen_values = true, action = clap::ArgAction::Append)]
        point: Vec<String>,
        #[arg(long, value_enum, default_value_t = Kind::Modified)]
        kind: Kind,
        /// Directory for the CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Jet-exact residual of the Poisson-map condition at random points.
    PoissonCheck {
        #[arg(long)]
        system: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sigma: Option<Vec<f64>>,
        #[arg(long)]
        stepper: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the canned experiment behind a figure.
    Reproduce {
        #[arg(value_parser = ["fig1", "fig2", "fig3"])]
        figure: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config, echoing it without running anything.
    ValidateConfig { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Method,
    Flow,
    Modified,
}

fn default_sigma(system: &str) -> Vec<f64> {
    match system {
        "double-well" | "maxwell-bloch" => vec![1.0, 1.0],
        _ => vec![1.0],
    }
}

fn build(system: &str, sigma: Option<Vec<f64>>, stepper: &str) -> Result<(Builtin, Method), HarnessError> {
    let sigma = sigma.unwrap_or_else(|| default_sigma(system));
    let sys = Builtin::from_label(system, &sigma)?;
    let method = Method::from_label(stepper, SolverConfig::default())?;
    Ok((sys, method))
}

/// Groups the flattened `--point` values into points of the system's dimension.
fn points(values: &[String], dim: usize) -> Result<Vec<Vec<f64>>, HarnessError> {
    let flat: Vec<f64> = values
        .iter()
        .map(|v| v.trim().parse::<f64>().map_err(|e| HarnessError::Usage(format!("--point `{v}`: {e}"))))
        .collect::<Result<_, _>>()?;
    if flat.is_empty() || flat.len() % dim != 0 {
        return Err(HarnessError::Usage(format!("--point needs {dim} coordinates per point, got {}", flat.len())));
    }
    Ok(flat.chunks(dim).map(<[f64]>::to_vec).collect())
}

fn output_dir(cli: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    harness::resolve_output_dir(cli, config.output_dir.as_deref())
}

fn report(bundle: &harness::OutputBundle) {
    say!("wrote {} files to {}", bundle.csv.len() + bundle.svg.len() + 1, bundle.dir.display());
    say!("content_hash {}", bundle.content_hash);
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            report(&harness::run(&cfg, &output_dir(out.as_deref(), &cfg))?);
        }
        Command::Drift { config, out, scaling } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let dir = output_dir(out.as_deref(), &cfg);
            if scaling {
                let (res, bundle) = harness::run_scaling(&cfg, &dir)?;
                report(&bundle);
                say!("slope {:.6}", res.slope);
            } else {
                report(&harness::run_drift(&cfg, &dir)?);
            }
        }
        Command::Order { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let (res, bundle) = harness::run_order(&cfg, &output_dir(out.as_deref(), &cfg))?;
            report(&bundle);
            say!("slope {:.6}", res.slope);
        }
        Command::ModifiedCoeffs { system, sigma, stepper, weight, point, kind, out } => {
            let (sys, method) = build(&system, sigma, &stepper)?;
            let tables = points(&point, sys.dim())?
                .iter()
                .map(|y| {
                    Ok(match kind {
                        Kind::Method => method_coefficients(&method, &sys, y, weight)?,
                        Kind::Flow => flow_coefficients(&sys, y, weight)?,
                        Kind::Modified => {
                            let t = method_coefficients(&method, &sys, y, weight)?;
                            modified_coefficients_matching(&t, &sys)?.table().clone()
                        }
                    })
                })
                .collect::<Result<Vec<_>, HarnessError>>()?;
            let bytes = harness::coefficient_csv(&tables)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Io { path: dir.display().to_string(), message: e.to_string() })?;
                    let path = dir.join(format!("{}_coefficients.csv", tables[0].kind));
                    std::fs::write(&path, bytes).map_err(|e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() })?;
                    say!("wrote {}", path.display());
                }
                None => {
                    let _ = std::io::stdout().write_all(&bytes);
                }
            }
        }
        Command::PoissonCheck { system, sigma, stepper, samples, h, seed } => {
            let (sys, method) = build(&system, sigma, &stepper)?;
            if !(h > 0.0) {
                return Err(HarnessError::Usage(format!("--h must be positive, got {h}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = SeedSpec::new(seed, 0);
            let m = sys.noise_count();
            let mut worst: f64 = 0.0;
            for i in 0..samples {
                let y = sys.sample_point(&mut rng);
                let dw: Vec<f64> = (0..m).map(|r| h.sqrt() * noise.standard_normal(m, i, r)).collect();
                worst = worst.max(poisson_map_residual(&method, &sys, &y, h, &dw)?);
            }
            say!("max_residual {worst:.6e} samples {samples} system {system} stepper {stepper} h {h}");
        }
        Command::Reproduce { figure, out } => {
            let figure = Figure::from_label(&figure).expect("checked by the parser");
            let dir = out.unwrap_or_else(|| harness::resolve_output_dir(None, None).join(figure.label()));
            report(&harness::reproduce(figure, &dir)?);
        }
        Command::ValidateConfig { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            say!("{}", cfg.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": "usage", "message": e.to_string().trim_end() }));
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
