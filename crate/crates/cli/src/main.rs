//! `sourcetrace` — cascade source localization from the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use sourcetrace_cli::formats::{
    parse_cascade_file, parse_network_file, write_cascade_file, write_network_file,
    CascadeRecord, FormatError, NodeDict,
};
use sourcetrace::evaluate::{run_experiment, Regime, TrialConfig};
use sourcetrace::localize::rank_sources;
use sourcetrace::netrate::{infer_network, SolverConfig};
use sourcetrace::simulate::{observe_final, observe_random, simulate_cascade};
use sourcetrace::{derive_seed, NodeId, PartialObservation};

const SIM_STREAM: u64 = 0x73_69_6d; // "sim"
const OBS_STREAM: u64 = 0x6f_62_73; // "obs"
const RANK_STREAM: u64 = 0x72_6e_6b; // "rnk"

const EXIT_CODE_HELP: &str = "Exit codes:
  0  success
  2  usage error: conflicting flags or invalid values
  3  file error: missing, unreadable, malformed, or unwritable files
  4  runtime error: the computation failed on otherwise well-formed inputs";

#[derive(Parser)]
#[command(
    name = "sourcetrace",
    version,
    about = "Locate the hidden source of information cascades on a diffusion network",
    after_help = EXIT_CODE_HELP
)]
struct Cli {
    /// Suppress stdout summaries.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate cascades on a known network and write a cascade file.
    Simulate {
        /// Network file to propagate over.
        #[arg(long)]
        network: PathBuf,
        /// Source node id.
        #[arg(long)]
        source: u32,
        /// Start time of every simulated cascade.
        #[arg(long, default_value_t = 0.0)]
        t_start: f64,
        /// Observation window length, measured from the start time.
        #[arg(long)]
        window: f64,
        /// Number of cascades to simulate.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output cascade file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Infer per-edge transmission rates from fully observed cascades.
    Infer {
        /// Training cascade file.
        #[arg(long)]
        cascades: PathBuf,
        /// Observation window end on the training cascades' clock.
        #[arg(long)]
        window: f64,
        /// Iteration cap per destination-node subproblem.
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        /// Relative log-likelihood change treated as converged.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Rates at or below this threshold are dropped.
        #[arg(long, default_value_t = 1e-4)]
        prune: f64,
        /// Output network file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank hidden candidate sources for a set of cascades sharing one source.
    Locate {
        /// Network file (typically produced by `infer`).
        #[arg(long)]
        network: PathBuf,
        /// Cascade file; full cascades unless --pre-observed is given.
        #[arg(long)]
        cascades: PathBuf,
        /// Fraction of each cascade's infected nodes to observe [default: 0.1].
        #[arg(long, conflicts_with = "pre_observed")]
        observed_fraction: Option<f64>,
        /// Observation regime: "random" or "final" [default: random].
        #[arg(long, value_parser = parse_regime, conflicts_with = "pre_observed")]
        regime: Option<Regime>,
        /// Monte-Carlo samples per cascade.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of ranked candidates to report.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Output ranking file.
        #[arg(long)]
        out: PathBuf,
        /// Treat each cascade record as an already-observed node set.
        #[arg(long)]
        pre_observed: bool,
    },
    /// Run a seeded synthetic experiment and write a report.
    Evaluate {
        /// TOML experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Report output path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    Regime::from_str(s).map_err(|e| e.to_string())
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Format(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<sourcetrace::Error> for CliError {
    fn from(e: sourcetrace::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { network, source, t_start, window, count, seed, out } => {
            cmd_simulate(&network, source, t_start, window, count, seed, &out, cli.quiet)
        }
        Command::Infer { cascades, window, max_iters, tol, prune, out } => {
            cmd_infer(&cascades, window, max_iters, tol, prune, &out, cli.quiet)
        }
        Command::Locate {
            network,
            cascades,
            observed_fraction,
            regime,
            samples,
            seed,
            top,
            out,
            pre_observed,
        } => cmd_locate(
            &network,
            &cascades,
            observed_fraction,
            regime,
            samples,
            seed,
            top,
            &out,
            pre_observed,
            cli.quiet,
        ),
        Command::Evaluate { config, out } => cmd_evaluate(&config, &out, cli.quiet),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    network_path: &Path,
    source: u32,
    t_start: f64,
    window: f64,
    count: usize,
    seed: u64,
    out: &Path,
    quiet: bool,
) -> Result<(), CliError> {
    if count == 0 {
        return Err(CliError::Usage("--count must be >= 1".into()));
    }
    if !window.is_finite() || window <= 0.0 {
        return Err(CliError::Usage(format!("--window must be > 0, got {window}")));
    }
    if !t_start.is_finite() || t_start < 0.0 {
        return Err(CliError::Usage(format!("--t-start must be >= 0, got {t_start}")));
    }
    let network = parse_network_file(&network_path.display().to_string(), &read_file(network_path)?)?;
    if source as usize >= network.n_nodes() {
        return Err(CliError::Usage(format!(
            "--source {source} is outside [0, {})",
            network.n_nodes()
        )));
    }

    let dict = NodeDict::synthetic(network.n_nodes());
    let mut records = Vec::with_capacity(count);
    let mut total_infected = 0usize;
    for i in 0..count {
        let cascade = simulate_cascade(
            &network,
            NodeId(source),
            t_start,
            window,
            derive_seed(seed, SIM_STREAM, i as u64),
        )?;
        total_infected += cascade.n_infected();
        records.push(CascadeRecord {
            id: format!("c{i}"),
            times: cascade.infected().map(|(v, t)| (v.0, t)).collect(),
        });
    }
    write_file(out, &write_cascade_file(&dict, &records))?;
    if !quiet {
        println!(
            "wrote {count} cascades ({:.1} infected nodes on average) to {}",
            total_infected as f64 / count as f64,
            out.display()
        );
    }
    Ok(())
}

fn cmd_infer(
    cascades_path: &Path,
    window: f64,
    max_iters: usize,
    tol: f64,
    prune: f64,
    out: &Path,
    quiet: bool,
) -> Result<(), CliError> {
    let (dict, records) =
        parse_cascade_file(&cascades_path.display().to_string(), &read_file(cascades_path)?)?;
    if records.is_empty() {
        return Err(CliError::Runtime("cascade file contains no cascades".into()));
    }
    let missing = dict.undeclared_in(&records);
    if let Some(&id) = missing.first() {
        return Err(CliError::Runtime(format!(
            "node {id} ({}) never appears in any cascade, so its incoming rates cannot be inferred",
            dict.label(id).unwrap_or("?")
        )));
    }
    let cascades = records
        .iter()
        .map(|r| r.to_cascade(window))
        .collect::<sourcetrace::Result<Vec<_>>>()?;
    let config = SolverConfig {
        max_iters,
        tolerance: tol,
        prune_threshold: prune,
        ..SolverConfig::default()
    };
    let result = infer_network(&cascades, window, &config)?;
    write_file(out, &write_network_file(&result.network))?;
    if !result.converged {
        eprintln!(
            "warning: gradient ascent hit the {max_iters}-iteration cap before converging; \
             the best iterate was written anyway"
        );
    }
    if !quiet {
        println!(
            "trained on {} cascades over {} declared nodes",
            records.len(),
            dict.len()
        );
        println!(
            "inferred {} edges over {} nodes in {} iterations (log-likelihood {:.4}) -> {}",
            result.network.n_edges(),
            result.network.n_nodes(),
            result.iterations,
            result.log_likelihood,
            out.display()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_locate(
    network_path: &Path,
    cascades_path: &Path,
    observed_fraction: Option<f64>,
    regime: Option<Regime>,
    samples: usize,
    seed: u64,
    top: usize,
    out: &Path,
    pre_observed: bool,
    quiet: bool,
) -> Result<(), CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be >= 1".into()));
    }
    if top == 0 {
        return Err(CliError::Usage("--top must be >= 1".into()));
    }
    let fraction = observed_fraction.unwrap_or(0.1);
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CliError::Usage(format!(
            "--observed-fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let regime = regime.unwrap_or(Regime::Random);
    let network = parse_network_file(&network_path.display().to_string(), &read_file(network_path)?)?;
    let (_, records) =
        parse_cascade_file(&cascades_path.display().to_string(), &read_file(cascades_path)?)?;
    if records.is_empty() {
        return Err(CliError::Runtime("cascade file contains no cascades".into()));
    }

    let n = network.n_nodes();
    let mut observations = Vec::with_capacity(records.len());
    for (j, record) in records.iter().enumerate() {
        let obs = if pre_observed {
            let observed: BTreeMap<NodeId, f64> =
                record.times.iter().map(|&(v, t)| (NodeId(v), t)).collect();
            PartialObservation::new(n, observed)?
        } else {
            // The observation regimes never look at the window, so any
            // horizon past the last infection works here.
            let cascade = record.to_cascade(record.max_time() + 1.0)?;
            match regime {
                Regime::Random => {
                    observe_random(&cascade, n, fraction, derive_seed(seed, OBS_STREAM, j as u64))?
                }
                Regime::Final => observe_final(&cascade, n, fraction)?,
            }
        };
        observations.push(obs);
    }

    let ranking = rank_sources(&network, &observations, samples, derive_seed(seed, RANK_STREAM, 0))?;
    let shown = ranking.top(top);

    let mut text = String::new();
    let _ = writeln!(text, "# ranked candidate sources");
    let _ = writeln!(text, "# cascades = {}", observations.len());
    let _ = writeln!(text, "# candidates_ranked = {}", ranking.len());
    let _ = writeln!(text, "# columns: rank node sse coverage admissible_cascades");
    for (i, score) in shown.iter().enumerate() {
        let _ = writeln!(
            text,
            "{} {} {:.6} {:.6} {}",
            i + 1,
            score.candidate,
            score.sse,
            score.coverage,
            score.admissible_cascades
        );
    }
    let _ = writeln!(text, "[start_times]");
    let _ = writeln!(text, "# columns: rank node cascade t_s");
    for (i, score) in shown.iter().enumerate() {
        for (j, t_s) in score.start_times.iter().enumerate() {
            let t = t_s.map_or_else(|| "-".to_string(), |t| format!("{t:.6}"));
            let _ = writeln!(text, "{} {} {} {}", i + 1, score.candidate, j, t);
        }
    }
    write_file(out, &text)?;

    if !quiet {
        println!(
            "ranked {} candidates over {} cascades; top {}:",
            ranking.len(),
            observations.len(),
            shown.len()
        );
        println!("  rank  node  sse          coverage");
        for (i, score) in shown.iter().enumerate() {
            println!(
                "  {:<4}  {:<4}  {:<11.6}  {:.3}",
                i + 1,
                score.candidate.0,
                score.sse,
                score.coverage
            );
        }
        println!("full ranking written to {}", out.display());
    }
    Ok(())
}

/// TOML view of [`TrialConfig`]; every field optional, defaults as in
/// `TrialConfig::default`.
#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n_nodes: Option<usize>,
    edge_density: Option<f64>,
    rate_range: Option<[f64; 2]>,
    window_t: Option<f64>,
    n_train_cascades: Option<usize>,
    n_test_cascades_per_source: Option<usize>,
    observed_fraction: Option<f64>,
    regime: Option<String>,
    n_samples: Option<usize>,
    k_list: Option<Vec<usize>>,
    n_trials: Option<usize>,
    master_seed: Option<u64>,
    min_cascade_len: Option<usize>,
    max_resim_attempts: Option<usize>,
    t_start_range: Option<[f64; 2]>,
    solver: Option<SolverSection>,
}

#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    step_size: Option<f64>,
    max_iters: Option<usize>,
    tolerance: Option<f64>,
    prune_threshold: Option<f64>,
}

impl ConfigFile {
    fn into_trial_config(self, path: &str) -> Result<TrialConfig, CliError> {
        let mut config = TrialConfig::default();
        let d = &mut config;
        if let Some(v) = self.n_nodes {
            d.n_nodes = v;
        }
        if let Some(v) = self.edge_density {
            d.edge_density = v;
        }
        if let Some([lo, hi]) = self.rate_range {
            d.rate_range = (lo, hi);
        }
        if let Some(v) = self.window_t {
            d.window_t = v;
        }
        if let Some(v) = self.n_train_cascades {
            d.n_train_cascades = v;
        }
        if let Some(v) = self.n_test_cascades_per_source {
            d.n_test_cascades_per_source = v;
        }
        if let Some(v) = self.observed_fraction {
            d.observed_fraction = v;
        }
        if let Some(ref s) = self.regime {
            d.regime = Regime::from_str(s).map_err(|e| CliError::Format(FormatError::Invalid {
                path: path.into(),
                msg: e.to_string(),
            }))?;
        }
        if let Some(v) = self.n_samples {
            d.n_samples = v;
        }
        if let Some(v) = self.k_list {
            d.k_list = v;
        }
        if let Some(v) = self.n_trials {
            d.n_trials = v;
        }
        if let Some(v) = self.master_seed {
            d.master_seed = v;
        }
        if let Some(v) = self.min_cascade_len {
            d.min_cascade_len = v;
        }
        if let Some(v) = self.max_resim_attempts {
            d.max_resim_attempts = v;
        }
        if let Some([lo, hi]) = self.t_start_range {
            d.t_start_range = (lo, hi);
        }
        if let Some(s) = self.solver {
            if let Some(v) = s.step_size {
                d.solver.step_size = v;
            }
            if let Some(v) = s.max_iters {
                d.solver.max_iters = v;
            }
            if let Some(v) = s.tolerance {
                d.solver.tolerance = v;
            }
            if let Some(v) = s.prune_threshold {
                d.solver.prune_threshold = v;
            }
        }
        Ok(config)
    }
}

fn cmd_evaluate(config_path: &Path, out: &Path, quiet: bool) -> Result<(), CliError> {
    let text = read_file(config_path)?;
    let path = config_path.display().to_string();
    let parsed: ConfigFile = toml::from_str(&text)
        .map_err(|e| CliError::Format(FormatError::Invalid { path: path.clone(), msg: e.to_string() }))?;
    let config = parsed.into_trial_config(&path)?;
    config.validate()?;
    let result = run_experiment(&config)?;
    write_file(out, &result.render_report(&config))?;
    if !quiet {
        println!(
            "{} trials ({} skipped); success probability {:.3}",
            result.rows.len(),
            result.n_skipped,
            result.success_probability
        );
        for &(k, p) in &result.topk {
            println!("top-{k} success probability {p:.3}");
        }
        if let Some(mae) = result.mean_start_time_error {
            println!("mean |t_s error| at the true source: {mae:.3}");
        }
        let t = result.timings;
        println!(
            "stage timings: simulate {:.2}s, infer {:.2}s, localize {:.2}s",
            t.simulate_s, t.infer_s, t.localize_s
        );
        println!("report written to {}", out.display());
    }
    Ok(())
}
