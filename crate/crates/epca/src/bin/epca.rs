//! Command-line surface: corrupt datasets, fit PCA/EPCA/RPCA models, and
//! run the grid / fixed-noise experiment suites.
//!
//! Exit codes: 0 success, 2 validation error, 3 I/O error, 4 timeout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use epca::dataio::{self, CsvOptions};
use epca::eval::{self, Dataset, EpcaParams, Method};
use epca::kmeans::KmeansParams;
use epca::noise::{NoiseKind, NoiseSpec};
use epca::rpca::{rpca_components, rpca_ialm, RpcaConfig};
use epca::seed;
use epca::{fit_epca, fit_pca, EpcaConfig, Error};

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

#[derive(Parser)]
#[command(name = "epca", version, about = "Ensemble PCA toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply a noise model to a dataset and save the corrupted copy.
    Corrupt(CommonArgs),
    /// Fit a PCA, EPCA or RPCA model and save it.
    Fit(CommonArgs),
    /// Run an experiment suite (grid or fixed) over methods and noise.
    Experiment(CommonArgs),
}

/// One flag set shared by all subcommands; the optional JSON config file
/// mirrors these flags one-to-one and flags override the file.
#[derive(Args, Serialize, Deserialize, Default, Clone)]
struct CommonArgs {
    /// Input CSV dataset (mutually exclusive with --synth)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    /// Synthetic dataset, e.g. "wave:n=6000,m=200,sigma_a=3,sigma_b=1.5,floor=0.05"
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth: Option<String>,
    /// CSV has a header row to skip
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    header: Option<bool>,
    /// Method(s): pca, epca, rpca; comma-separated list for experiments
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<String>,
    /// Number of bootstrap bags (EPCA)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bags: Option<usize>,
    /// Bag size n (EPCA); defaults to N
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bag_size: Option<usize>,
    /// Number of components d
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    /// RPCA sparse weight alpha
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// RPCA wall-clock budget in seconds
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    timeout: Option<f64>,
    /// Master seed
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Worker threads for trial-level parallelism
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    jobs: Option<usize>,
    /// Noise kind: sparse, gaussian, uniform, outliers
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<String>,
    /// Noise parameters, e.g. "p=0.01,c=2"; '|' separates grid levels
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_params: Option<String>,
    /// Trials for the fixed suite / corruption repetitions for the grid
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    /// EPCA runs per corruption in the grid suite
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epca_runs: Option<usize>,
    /// Experiment suite: grid or fixed
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    suite: Option<String>,
    /// Output directory
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    /// JSON config file mirroring these flags; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    /// Fill unset fields from the config file, if one was given.
    fn resolve(mut self) -> Result<Self, Error> {
        let Some(path) = self.config.take() else {
            return Ok(self);
        };
        let file: CommonArgs = dataio::load_json(&path)?;
        macro_rules! merge {
            ($($field:ident),*) => {
                $(if self.$field.is_none() { self.$field = file.$field; })*
            };
        }
        merge!(
            input, synth, header, method, bags, bag_size, rank, alpha, timeout, seed, jobs,
            noise, noise_params, trials, epca_runs, suite, output
        );
        Ok(self)
    }

    fn output_dir(&self) -> Result<&Path, Error> {
        self.output
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("--output is required".into()))
    }

    fn seed_value(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn parse_kv(params: &str) -> Result<Vec<(String, f64)>, Error> {
    params
        .split([',', ';'])
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got {pair:?}")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad numeric value in {pair:?}")))?;
            Ok((k.trim().to_string(), value))
        })
        .collect()
}

fn lookup(kv: &[(String, f64)], key: &str, default: f64) -> f64 {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .unwrap_or(default)
}

/// Parse one noise level; defaults are the fixed-suite settings.
fn parse_noise(kind: &str, params: &str) -> Result<NoiseKind, Error> {
    let kv = parse_kv(params)?;
    match kind {
        "sparse" => Ok(NoiseKind::Sparse {
            p: lookup(&kv, "p", 0.01),
            c: lookup(&kv, "c", 2.0),
        }),
        "gaussian" => Ok(NoiseKind::Gaussian {
            f: lookup(&kv, "f", 1000.0),
        }),
        "uniform" => Ok(NoiseKind::Uniform {
            f: lookup(&kv, "f", 1000.0),
        }),
        "outliers" => Ok(NoiseKind::Outliers {
            s: lookup(&kv, "s", 5.0),
            scale: lookup(&kv, "S", 5.0),
        }),
        other => Err(Error::InvalidInput(format!(
            "unknown noise kind {other:?}; expected sparse|gaussian|uniform|outliers"
        ))),
    }
}

fn parse_noise_levels(args: &CommonArgs) -> Result<Vec<NoiseKind>, Error> {
    let kind = args
        .noise
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("--noise is required".into()))?;
    let params = args.noise_params.as_deref().unwrap_or("");
    params
        .split('|')
        .map(|level| parse_noise(kind, level))
        .collect()
}

fn load_dataset(args: &CommonArgs) -> Result<Dataset, Error> {
    match (&args.input, &args.synth) {
        (Some(path), None) => {
            let options = CsvOptions {
                has_header: args.header.unwrap_or(false),
                ..CsvOptions::default()
            };
            let matrix = dataio::load_csv(path, &options)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into());
            Ok(Dataset { name, matrix })
        }
        (None, Some(spec)) => synth_dataset(spec, args.seed_value()),
        (None, None) => Err(Error::InvalidInput(
            "one of --input or --synth is required".into(),
        )),
        (Some(_), Some(_)) => Err(Error::InvalidInput(
            "--input and --synth are mutually exclusive".into(),
        )),
    }
}

fn synth_dataset(spec: &str, master_seed: u64) -> Result<Dataset, Error> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let kv = parse_kv(params)?;
    let synth_seed = seed::derive(master_seed, &[seed::tag::SYNTH]);
    let matrix = match name {
        "wave" => {
            let (x, _, _) = dataio::synth_wave(
                lookup(&kv, "n", 6000.0) as usize,
                lookup(&kv, "m", 200.0) as usize,
                lookup(&kv, "sigma_a", 3.0),
                lookup(&kv, "sigma_b", 1.5),
                lookup(&kv, "floor", 0.05),
                synth_seed,
            )?;
            x
        }
        "lowrank" => {
            let (x, _, _) = dataio::synth_low_rank_sparse(
                lookup(&kv, "n", 500.0) as usize,
                lookup(&kv, "m", 100.0) as usize,
                lookup(&kv, "rank", 2.0) as usize,
                lookup(&kv, "fraction", 0.0),
                lookup(&kv, "magnitude", 0.0),
                synth_seed,
            )?;
            x
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown synthetic dataset {other:?}; expected wave|lowrank"
            )))
        }
    };
    Ok(Dataset {
        name: name.to_string(),
        matrix,
    })
}

fn parse_methods(args: &CommonArgs) -> Result<Vec<Method>, Error> {
    let spec = args.method.as_deref().unwrap_or("pca,epca,rpca");
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|name| match name.trim() {
            "pca" => Ok(Method::Pca),
            "epca" => Ok(Method::Epca(EpcaParams {
                bags: args.bags.unwrap_or(100),
                bag_size: args.bag_size,
                kmeans: KmeansParams::default(),
                confidence: 0.95,
            })),
            "rpca" => Ok(Method::Rpca(RpcaConfig {
                alpha: args.alpha.unwrap_or(0.20),
                timeout: Some(args.timeout.unwrap_or(120.0)),
                ..RpcaConfig::default()
            })),
            other => Err(Error::InvalidInput(format!(
                "unknown method {other:?}; expected pca|epca|rpca"
            ))),
        })
        .collect()
}

fn echo_config(args: &CommonArgs, dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    dataio::save_json(args, &dir.join("config.json"))
}

fn cmd_corrupt(args: &CommonArgs) -> Result<u8, Error> {
    let dir = args.output_dir()?.to_path_buf();
    echo_config(args, &dir)?;
    let dataset = load_dataset(args)?;
    let levels = parse_noise_levels(args)?;
    if levels.len() != 1 {
        return Err(Error::InvalidInput(
            "corrupt takes exactly one noise level".into(),
        ));
    }
    let spec = NoiseSpec {
        kind: levels[0],
        seed: seed::derive(args.seed_value(), &[seed::tag::NOISE]),
    };
    let (corrupted, mask) = epca::noise::apply(&dataset.matrix, &spec)?;
    dataio::save_matrix_csv(&corrupted, &dir.join("corrupted.csv"))?;
    dataio::save_json(&mask, &dir.join("mask.json"))?;
    eprintln!(
        "corrupted {}x{} dataset `{}` with {} ({})",
        corrupted.nrows(),
        corrupted.ncols(),
        dataset.name,
        spec.kind.label(),
        spec.kind.params_label()
    );
    Ok(0)
}

fn cmd_fit(args: &CommonArgs) -> Result<u8, Error> {
    let dir = args.output_dir()?.to_path_buf();
    echo_config(args, &dir)?;
    let dataset = load_dataset(args)?;
    let d = args
        .rank
        .ok_or_else(|| Error::InvalidInput("--rank is required for fit".into()))?;
    let method = args.method.as_deref().unwrap_or("pca");
    match method {
        "pca" => {
            let model = fit_pca(&dataset.matrix, d)?;
            dataio::save_json(&model, &dir.join("model.json"))?;
            println!("method=pca dataset={} d={}", dataset.name, d);
            for (k, l) in model.eigenvalues.iter().enumerate() {
                println!("component {k}: eigenvalue {l:.6}");
            }
        }
        "epca" => {
            let config = EpcaConfig {
                bags: args.bags.unwrap_or(100),
                bag_size: args.bag_size,
                d,
                seed: args.seed_value(),
                kmeans: KmeansParams::default(),
                confidence: 0.95,
            };
            let model = fit_epca(&dataset.matrix, &config)?;
            dataio::save_json(&model, &dir.join("model.json"))?;
            println!(
                "method=epca dataset={} d={} bags={}",
                dataset.name, d, config.bags
            );
            for k in 0..d {
                let (lo, hi) = &model.component_ci[k];
                let width = (hi - lo).amax();
                println!(
                    "component {k}: eigenvalue {:.6} (var {:.6}), max CI width {:.6}",
                    model.eigenvalue_mean[k], model.eigenvalue_variance[k], width
                );
            }
            for w in &model.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
        }
        "rpca" => {
            let config = RpcaConfig {
                alpha: args.alpha.unwrap_or(0.20),
                timeout: Some(args.timeout.unwrap_or(120.0)),
                ..RpcaConfig::default()
            };
            let result = rpca_ialm(&dataset.matrix, &config)?;
            dataio::save_json(&result, &dir.join("rpca_result.json"))?;
            println!(
                "method=rpca dataset={} alpha={} iterations={} converged={} residual={:.3e} elapsed={:.3}s",
                dataset.name, config.alpha, result.iterations, result.converged,
                result.residual, result.elapsed
            );
            if result.timed_out {
                eprintln!("rpca timed out; partial iterates saved to rpca_result.json");
                return Ok(EXIT_TIMEOUT);
            }
            let model = rpca_components(&result, d)?;
            dataio::save_json(&model, &dir.join("model.json"))?;
            for (k, l) in model.eigenvalues.iter().enumerate() {
                println!("component {k}: eigenvalue {l:.6}");
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "fit expects a single method, got {other:?}"
            )))
        }
    }
    Ok(0)
}

fn cmd_experiment(args: &CommonArgs) -> Result<u8, Error> {
    let dir = args.output_dir()?.to_path_buf();
    echo_config(args, &dir)?;
    let dataset = load_dataset(args)?;
    let d = args
        .rank
        .ok_or_else(|| Error::InvalidInput("--rank is required for experiments".into()))?;
    let methods = parse_methods(args)?;
    let levels = parse_noise_levels(args)?;
    let datasets = vec![dataset];
    let master = args.seed_value();
    let suite = args.suite.as_deref().unwrap_or("fixed");
    let timed_out_runs;
    match suite {
        "grid" => {
            let repetitions = args.trials.unwrap_or(5);
            let epca_runs = args.epca_runs.unwrap_or(5);
            eprintln!(
                "grid suite: {} levels x {} repetitions, {} methods",
                levels.len(),
                repetitions,
                methods.len()
            );
            let report =
                eval::run_grid(&datasets, d, &methods, &levels, repetitions, epca_runs, master)?;
            let rows = dataio::report_rows(&report.trials);
            dataio::save_report(&rows, &dir.join("report.csv"), false)?;
            dataio::save_report(&rows, &dir.join("timing.csv"), true)?;
            dataio::save_json(&report.means, &dir.join("means.json"))?;
            timed_out_runs = report.trials.iter().filter(|r| r.timed_out).count();
        }
        "fixed" => {
            let trials = args.trials.unwrap_or(100);
            eprintln!(
                "fixed suite: {} trials, {} methods, {} noise settings",
                trials,
                methods.len(),
                levels.len()
            );
            let report = eval::run_fixed(&datasets, d, &methods, &levels, trials, master)?;
            let rows = dataio::report_rows(&report.trials);
            dataio::save_report(&rows, &dir.join("report.csv"), false)?;
            dataio::save_report(&rows, &dir.join("timing.csv"), true)?;
            dataio::save_json(&report.error_stats, &dir.join("error_stats.json"))?;
            dataio::save_json(&report.runtime_stats, &dir.join("runtime_stats.json"))?;
            dataio::save_json(&report.excluded, &dir.join("excluded.json"))?;
            for flag in &report.excluded {
                eprintln!(
                    "excluded {} on {} ({}): {} run(s) timed out",
                    flag.method, flag.dataset, flag.noise_kind, flag.timed_out_runs
                );
            }
            timed_out_runs = report.trials.iter().filter(|r| r.timed_out).count();
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown suite {other:?}; expected grid|fixed"
            )))
        }
    }
    eprintln!("wrote report tables to {}", dir.display());
    if timed_out_runs > 0 {
        eprintln!("{timed_out_runs} run(s) timed out");
        return Ok(EXIT_TIMEOUT);
    }
    Ok(0)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    let args = match &cli.cmd {
        Cmd::Corrupt(a) | Cmd::Fit(a) | Cmd::Experiment(a) => a.clone().resolve()?,
    };
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    match &cli.cmd {
        Cmd::Corrupt(_) => cmd_corrupt(&args),
        Cmd::Fit(_) => cmd_fit(&args),
        Cmd::Experiment(_) => cmd_experiment(&args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
