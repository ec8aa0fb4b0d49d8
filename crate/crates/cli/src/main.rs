//! `bibeta` command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage, I/O and parse problems, 2 when a
//! numerical routine reports a domain error (a JSON object `{kind, message}`
//! is printed on standard output in that case).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bibeta::bayes::{be1, be2, hmc_fit, sbc, HmcConfig, PriorSpec, SamplerDiagnostics, SbcConfig};
use bibeta::bivariate::sample::format_g17;
use bibeta::bivariate::{density_or_undefined, is_density_defined, sample, AlphaParams, MomentSummary, PairedSample};
use bibeta::diagnostics::{gn_test, m_test, GnReport, MReport, MTestOptions, DEFAULT_M_THRESHOLD};
use bibeta::elicitation::{elicit, Preference};
use bibeta::estimators::{bootstrap_ci, estimate_sample, BootstrapOptions, EstimateReport, Method};
use bibeta::experiments::{run_experiment, sampling_distribution, ExperimentSpec, Statistic};
use bibeta::rng::DEFAULT_SEED;

#[derive(Parser)]
#[command(name = "bibeta", version, about = "Bivariate beta distribution: sampling, estimation and diagnostics")]
struct Cli {
    /// Worker threads for parallel sections (default: logical cores).
    #[arg(long, global = true, env = "BIBETA_THREADS")]
    threads: Option<usize>,

    /// Print progress notes on standard error.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a paired sample and write it as CSV.
    Sample {
        #[arg(long, value_parser = parse_alpha)]
        alpha: AlphaParams,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate the density at the cell centres of a k×k grid.
    Density {
        #[arg(long, value_parser = parse_alpha)]
        alpha: AlphaParams,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(2..))]
        grid: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Estimate α from a paired sample.
    Fit {
        /// CSV file with header `x,y`.
        input: PathBuf,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        /// Bootstrap resamples for a percentile interval (moment methods).
        #[arg(long)]
        bootstrap: Option<usize>,
        /// Interval level for the bootstrap or credible interval.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Prior for be1/be2, e.g. `gamma:1,1`, `uniform-exp:20,0.9`, `gamma@0.5`.
        #[arg(long, default_value = "gamma")]
        prior: PriorSpec,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        /// Write posterior draws (be1/be2) or bootstrap resamples as CSV.
        #[arg(long)]
        draws_out: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Turn moment judgements into a parameter.
    Elicit {
        #[arg(long)]
        m1: f64,
        #[arg(long)]
        m2: f64,
        #[arg(long)]
        v1: f64,
        #[arg(long)]
        v2: f64,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value = "means-first", value_parser = parse_preference)]
        preference: Preference,
    },
    /// Goodness-of-fit tests on a paired sample.
    Diagnose {
        input: PathBuf,
        /// Rejection threshold of the M test.
        #[arg(long, default_value_t = DEFAULT_M_THRESHOLD, allow_hyphen_values = true)]
        threshold: f64,
        /// Bootstrap resamples for the quantiles of M.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Run a Monte Carlo study described by a JSON config.
    Experiment {
        config: PathBuf,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Metrics CSV destination (standard output when absent).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Sampling distribution of a statistic under the generator of a JSON config.
    Distribution {
        config: PathBuf,
        #[arg(long, value_parser = parse_statistic)]
        statistic: Statistic,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Histogram CSV destination (standard output when absent).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Simulation-based calibration described by a JSON config.
    Sbc {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Ranks CSV destination (standard output when absent).
        #[arg(long)]
        ranks: Option<PathBuf>,
        #[arg(long)]
        histogram: Option<PathBuf>,
        /// Summary JSON with p-values and failure counts.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct OutArg {
    /// Destination file (standard output when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_alpha(s: &str) -> Result<AlphaParams, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let a: [f64; 4] = parts.try_into().map_err(|_| "expected four comma-separated values".to_string())?;
    AlphaParams::from_array(a).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: bibeta::Error| e.to_string())
}

fn parse_preference(s: &str) -> Result<Preference, String> {
    s.parse().map_err(|e: bibeta::Error| e.to_string())
}

fn parse_statistic(s: &str) -> Result<Statistic, String> {
    s.parse().map_err(|e: bibeta::Error| e.to_string())
}

/// Failure split by exit code.
enum Failure {
    Input(anyhow::Error),
    Numeric(bibeta::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<bibeta::Error> for Failure {
    fn from(e: bibeta::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.into())
        } else {
            Failure::Numeric(e)
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.into())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(anyhow::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn read_sample(path: &Path) -> CliResult<PairedSample> {
    PairedSample::read_csv_path(path).map_err(|e| Failure::Input(anyhow::anyhow!("{}: {e}", path.display())))
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn announce_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

#[derive(Serialize)]
struct Interval {
    level: f64,
    lower: [f64; 4],
    upper: [f64; 4],
    resamples: usize,
    failed: usize,
}

#[derive(Serialize)]
struct FitOutput {
    estimate: EstimateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<SamplerDiagnostics>,
}

#[derive(Serialize)]
struct DiagnoseOutput {
    gn: GnReport,
    m: MReport,
}

#[derive(Serialize)]
struct SbcSummary {
    experiments: usize,
    failed: usize,
    bins: usize,
    p_values: [f64; 4],
    divergent_transitions: usize,
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Sample { alpha, n, seed, out } => {
            announce_seed(seed.seed);
            let s = sample(&alpha, n, seed.seed);
            let mut w = output(out.output.as_deref())?;
            s.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Density { alpha, grid, out } => {
            let k = grid as usize;
            let mut w = output(out.output.as_deref())?;
            writeln!(w, "x,y,density")?;
            for i in 0..k {
                let x = (i as f64 + 0.5) / k as f64;
                for j in 0..k {
                    let y = (j as f64 + 0.5) / k as f64;
                    let cell = if is_density_defined(&alpha, x, y) {
                        match density_or_undefined(&alpha, x, y)? {
                            Some(f) => format_g17(f),
                            None => "undefined".to_string(),
                        }
                    } else {
                        "undefined".to_string()
                    };
                    writeln!(w, "{},{},{cell}", format_g17(x), format_g17(y))?;
                }
            }
            w.flush()?;
        }
        Command::Fit { input, method, bootstrap, level, prior, chains, warmup, iters, draws_out, seed } => {
            let data = read_sample(&input)?;
            if !(level > 0.0 && level < 1.0) {
                return Err(Failure::Input(anyhow::anyhow!("--level must lie in (0, 1)")));
            }
            let result = if method.is_bayes() {
                announce_seed(seed.seed);
                let defaults = HmcConfig::default();
                let config = HmcConfig {
                    chains: chains.unwrap_or(defaults.chains),
                    warmup: warmup.unwrap_or(defaults.warmup),
                    iters: iters.unwrap_or(defaults.iters),
                    seed: seed.seed,
                    ..defaults
                };
                let draws = hmc_fit(&data, prior, &config)?;
                let mut estimate = if method == Method::BE1 { be1(&draws) } else { be2(&draws) };
                estimate.credible_interval = Some(draws.credible_interval(level));
                if let Some(p) = &draws_out {
                    draws.write_csv(output(Some(p))?)?;
                }
                FitOutput { estimate, bootstrap: None, diagnostics: Some(draws.diagnostics()) }
            } else {
                let estimate = estimate_sample(method, &data)?;
                let interval = match bootstrap {
                    Some(resamples) => {
                        announce_seed(seed.seed);
                        let opts = BootstrapOptions { resamples, level, seed: seed.seed, ..Default::default() };
                        let ci = bootstrap_ci(&data, method, &opts)?;
                        if let Some(p) = &draws_out {
                            ci.write_resamples_csv(output(Some(p))?)?;
                        }
                        Some(Interval { level, lower: ci.lower, upper: ci.upper, resamples: ci.resamples, failed: ci.failed })
                    }
                    None => None,
                };
                FitOutput { estimate, bootstrap: interval, diagnostics: None }
            };
            write_json(None, &result)?;
        }
        Command::Elicit { m1, m2, v1, v2, rho, preference } => {
            let r = elicit(&MomentSummary { m1, m2, v1, v2, rho }, preference)?;
            write_json(None, &r)?;
        }
        Command::Diagnose { input, threshold, bootstrap, seed } => {
            let data = read_sample(&input)?;
            if bootstrap.is_some() {
                announce_seed(seed.seed);
            }
            let gn = gn_test(&data)?;
            let m = m_test(&data, &MTestOptions { threshold, bootstrap, seed: seed.seed, ..Default::default() })?;
            write_json(None, &DiagnoseOutput { gn, m })?;
        }
        Command::Experiment { config, reps, bootstrap, seed, csv, json } => {
            let mut spec: ExperimentSpec = read_config(&config)?;
            if let Some(r) = reps {
                spec.reps = r;
            }
            if bootstrap.is_some() {
                spec.bootstrap = bootstrap;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            announce_seed(spec.seed);
            if cli.verbose {
                eprintln!("running {} replications at n = {}", spec.reps, spec.n);
            }
            let table = run_experiment(&spec)?;
            let mut w = output(csv.as_deref())?;
            table.write_csv(&mut w)?;
            w.flush()?;
            if let Some(p) = json {
                write_json(Some(&p), &table)?;
            }
        }
        Command::Distribution { config, statistic, reps, seed, csv, json } => {
            let spec: ExperimentSpec = read_config(&config)?;
            let reps = reps.unwrap_or(spec.reps);
            let seed = seed.unwrap_or(spec.seed);
            announce_seed(seed);
            let d = sampling_distribution(statistic, &spec.generator, spec.n, reps, seed, spec.exec)?;
            let mut w = output(csv.as_deref())?;
            d.write_histogram_csv(&mut w)?;
            w.flush()?;
            if let Some(p) = json {
                write_json(Some(&p), &d)?;
            }
        }
        Command::Sbc { config, seed, ranks, histogram, summary } => {
            let mut cfg: SbcConfig = read_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            announce_seed(cfg.seed);
            if cli.verbose {
                eprintln!("running {} calibration experiments", cfg.experiments);
            }
            let report = sbc(&cfg)?;
            let mut w = output(ranks.as_deref())?;
            report.write_ranks_csv(&mut w)?;
            w.flush()?;
            if let Some(p) = histogram {
                report.write_histogram_csv(output(Some(&p))?)?;
            }
            if let Some(p) = summary {
                let s = SbcSummary {
                    experiments: report.experiments,
                    failed: report.failed,
                    bins: report.bins,
                    p_values: report.p_values,
                    divergent_transitions: report.divergences.iter().sum(),
                };
                write_json(Some(&p), &s)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            let body = serde_json::json!({ "kind": e.kind(), "message": e.to_string() });
            println!("{body}");
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
