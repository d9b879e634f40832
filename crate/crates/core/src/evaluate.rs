//! Seeded end-to-end experiments: generate a ground-truth network, train the
//! rate model on historical cascades, localize hidden sources on fresh test
//! cascades, and report success probability and top-k success probability.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::localize::rank_sources;
use crate::model::{Edge, Network, NodeId, PartialObservation};
use crate::netrate::{infer_network, SolverConfig};
use crate::simulate::{observe_final, observe_random, simulate_cascade};
use crate::util::derive_seed;
use crate::{Error, Result};

const NET_STREAM: u64 = 0x6e_65_74; // "net"
const TRIAL_STREAM: u64 = 0x74_72_69; // "tri"
const TRAIN_STREAM: u64 = 0x74_72_6e; // "trn"
const SOURCE_STREAM: u64 = 0x73_72_63; // "src"
const TEST_STREAM: u64 = 0x74_73_74; // "tst"
const OBS_STREAM: u64 = 0x6f_62_73; // "obs"
const RANK_STREAM: u64 = 0x72_6e_6b; // "rnk"

/// How observed nodes are selected from each test cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Observed nodes are sampled uniformly from the infected ones.
    Random,
    /// Observed nodes are the latest-infected ones.
    Final,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Regime::Random),
            "final" => Ok(Regime::Final),
            other => Err(Error::InvalidArgument(format!(
                "unknown regime {other:?}, expected \"random\" or \"final\""
            ))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Random => "random",
            Regime::Final => "final",
        })
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub n_nodes: usize,
    /// Probability that each ordered node pair carries an edge.
    pub edge_density: f64,
    /// Ground-truth rates are drawn uniformly from this closed range.
    pub rate_range: (f64, f64),
    /// Observation window length for both training and test cascades.
    pub window_t: f64,
    pub n_train_cascades: usize,
    pub n_test_cascades_per_source: usize,
    pub observed_fraction: f64,
    pub regime: Regime,
    /// Monte-Carlo samples per localization.
    pub n_samples: usize,
    /// Cutoffs for top-k success probability.
    pub k_list: Vec<usize>,
    pub n_trials: usize,
    pub master_seed: u64,
    /// Test cascades must infect at least this many nodes.
    pub min_cascade_len: usize,
    /// Resimulation budget per test cascade before giving up on a source.
    pub max_resim_attempts: usize,
    /// Test-cascade start times are drawn uniformly from this range.
    pub t_start_range: (f64, f64),
    pub solver: SolverConfig,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            n_nodes: 64,
            edge_density: 0.1,
            rate_range: (1.0, 1.0),
            window_t: 10.0,
            n_train_cascades: 400,
            n_test_cascades_per_source: 8,
            observed_fraction: 0.1,
            regime: Regime::Random,
            n_samples: 500,
            k_list: vec![1, 5, 10],
            n_trials: 20,
            master_seed: 1,
            min_cascade_len: 27,
            max_resim_attempts: 50,
            t_start_range: (0.0, 5.0),
            solver: SolverConfig::default(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::InvalidArgument("n_nodes must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_density) {
            return Err(Error::InvalidArgument("edge_density must lie in [0, 1]".into()));
        }
        let (lo, hi) = self.rate_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidArgument("rate_range must satisfy 0 < min <= max".into()));
        }
        if !self.window_t.is_finite() || self.window_t <= 0.0 {
            return Err(Error::InvalidArgument("window_t must be > 0".into()));
        }
        if !(self.observed_fraction > 0.0 && self.observed_fraction <= 1.0) {
            return Err(Error::InvalidArgument("observed_fraction must lie in (0, 1]".into()));
        }
        let (t_lo, t_hi) = self.t_start_range;
        if !(t_lo.is_finite() && t_hi.is_finite() && t_lo >= 0.0 && t_hi >= t_lo) {
            return Err(Error::InvalidArgument(
                "t_start_range must satisfy 0 <= min <= max".into(),
            ));
        }
        for &field in &[
            self.n_train_cascades,
            self.n_test_cascades_per_source,
            self.n_samples,
            self.n_trials,
            self.min_cascade_len,
            self.max_resim_attempts,
        ] {
            if field == 0 {
                return Err(Error::InvalidArgument("counts must be >= 1".into()));
            }
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return Err(Error::InvalidArgument("k_list must contain positive cutoffs".into()));
        }
        Ok(())
    }
}

/// Random ground-truth network: each ordered pair carries an edge
/// independently with probability `edge_density`, rates uniform in
/// `rate_range`.
pub fn random_network(
    n_nodes: usize,
    edge_density: f64,
    rate_range: (f64, f64),
    seed: u64,
) -> Result<Network> {
    if !(0.0..=1.0).contains(&edge_density) {
        return Err(Error::InvalidArgument("edge_density must lie in [0, 1]".into()));
    }
    let (lo, hi) = rate_range;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidArgument("rate_range must satisfy 0 < min <= max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, NET_STREAM, 0));
    let mut edges = Vec::new();
    for src in 0..n_nodes as u32 {
        for dst in 0..n_nodes as u32 {
            if src != dst && rng.random::<f64>() < edge_density {
                let rate = lo + (hi - lo) * rng.random::<f64>();
                edges.push(Edge { src: NodeId(src), dst: NodeId(dst), rate });
            }
        }
    }
    Network::new(n_nodes, edges)
}

/// Start-time fit for one test cascade at the true source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeOutcome {
    pub true_start: f64,
    /// `None` when the true source was inadmissible for this cascade.
    pub estimated_start: Option<f64>,
}

/// How one trial ended.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    /// 1-based rank of the true source in the returned ranking.
    Ranked(usize),
    /// The true source was admissible in no cascade and fell out of the
    /// ranking entirely.
    Absent,
    /// The trial configuration could not be realized; counted as a failure.
    Skipped(String),
}

/// One row of the experiment: everything recorded about a single trial.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: usize,
    pub true_source: Option<NodeId>,
    pub outcome: TrialOutcome,
    /// Size of the candidate pool: nodes observed in no cascade of the set.
    pub n_candidates: usize,
    pub cascades: Vec<CascadeOutcome>,
    /// Mean absolute start-time error at the true source over its
    /// admissible cascades.
    pub start_time_mae: Option<f64>,
}

impl TrialRow {
    pub fn rank(&self) -> Option<usize> {
        match self.outcome {
            TrialOutcome::Ranked(r) => Some(r),
            _ => None,
        }
    }
}

/// Wall-clock seconds per pipeline stage, summed over trials.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub simulate_s: f64,
    pub infer_s: f64,
    pub localize_s: f64,
}

/// Aggregated experiment output. The report rendered by
/// [`ExperimentResult::render_report`] is deterministic: it carries the rows
/// and metrics but not the timings, which live here and on stdout only.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<TrialRow>,
    pub success_probability: f64,
    pub topk: Vec<(usize, f64)>,
    pub mean_start_time_error: Option<f64>,
    pub n_skipped: usize,
    pub timings: StageTimings,
}

/// Fraction of trials whose true source was ranked first. Unranked trials
/// (absent or skipped) count as failures.
pub fn success_probability(ranks: &[Option<usize>]) -> Result<f64> {
    topk_success(ranks, 1)
}

/// Fraction of trials whose true source was ranked within the top `k`.
pub fn topk_success(ranks: &[Option<usize>], k: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::EmptyInput("no trial results".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let hits = ranks.iter().filter(|r| r.is_some_and(|rank| rank <= k)).count();
    Ok(hits as f64 / ranks.len() as f64)
}

struct TestSet {
    source: NodeId,
    observations: Vec<PartialObservation>,
    true_starts: Vec<f64>,
}

/// Tries random sources until one yields the configured number of long test
/// cascades (with valid observations), resimulating each cascade up to the
/// attempt budget.
fn build_test_set(truth: &Network, config: &TrialConfig, trial_seed: u64) -> Option<TestSet> {
    let n = truth.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, SOURCE_STREAM, 0));
    let mut order: Vec<u32> = (0..n as u32).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let source_budget = order.len().min(16);
    for &candidate in order.iter().take(source_budget) {
        let source = NodeId(candidate);
        let mut observations = Vec::new();
        let mut true_starts = Vec::new();
        let mut ok = true;
        for j in 0..config.n_test_cascades_per_source {
            let mut found = false;
            for attempt in 0..config.max_resim_attempts {
                let tag = (candidate as u64) << 40 | (j as u64) << 20 | attempt as u64;
                let seed = derive_seed(trial_seed, TEST_STREAM, tag);
                let (lo, hi) = config.t_start_range;
                let mut t_rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, TEST_STREAM, tag ^ 1 << 60));
                let t_start = lo + (hi - lo) * t_rng.random::<f64>();
                let Ok(cascade) = simulate_cascade(truth, source, t_start, config.window_t, seed)
                else {
                    continue;
                };
                if cascade.n_infected() < config.min_cascade_len {
                    continue;
                }
                let obs = match config.regime {
                    Regime::Random => observe_random(
                        &cascade,
                        n,
                        config.observed_fraction,
                        derive_seed(trial_seed, OBS_STREAM, tag),
                    ),
                    Regime::Final => observe_final(&cascade, n, config.observed_fraction),
                };
                if let Ok(obs) = obs {
                    observations.push(obs);
                    true_starts.push(t_start);
                    found = true;
                    break;
                }
            }
            if !found {
                ok = false;
                break;
            }
        }
        if ok {
            return Some(TestSet { source, observations, true_starts });
        }
    }
    None
}

/// Runs the full experiment described by `config`. Deterministic given
/// `config.master_seed`: every random choice derives from per-trial seed
/// streams, and per-trial failures are recorded as skipped rows rather than
/// aborting the run.
pub fn run_experiment(config: &TrialConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.n_trials);
    let mut timings = StageTimings::default();

    for trial in 0..config.n_trials {
        let trial_seed = derive_seed(config.master_seed, TRIAL_STREAM, trial as u64);
        let row = run_trial(config, trial, trial_seed, &mut timings);
        rows.push(row);
    }

    let ranks: Vec<Option<usize>> = rows.iter().map(TrialRow::rank).collect();
    let success = success_probability(&ranks)?;
    let topk = config
        .k_list
        .iter()
        .map(|&k| topk_success(&ranks, k).map(|p| (k, p)))
        .collect::<Result<Vec<_>>>()?;
    let maes: Vec<f64> = rows.iter().filter_map(|r| r.start_time_mae).collect();
    let mean_start_time_error = if maes.is_empty() {
        None
    } else {
        Some(maes.iter().sum::<f64>() / maes.len() as f64)
    };
    let n_skipped = rows
        .iter()
        .filter(|r| matches!(r.outcome, TrialOutcome::Skipped(_)))
        .count();
    Ok(ExperimentResult {
        rows,
        success_probability: success,
        topk,
        mean_start_time_error,
        n_skipped,
        timings,
    })
}

fn skipped(trial: usize, reason: String) -> TrialRow {
    TrialRow {
        trial,
        true_source: None,
        outcome: TrialOutcome::Skipped(reason),
        n_candidates: 0,
        cascades: Vec::new(),
        start_time_mae: None,
    }
}

fn run_trial(
    config: &TrialConfig,
    trial: usize,
    trial_seed: u64,
    timings: &mut StageTimings,
) -> TrialRow {
    let t0 = Instant::now();
    let truth = match random_network(
        config.n_nodes,
        config.edge_density,
        config.rate_range,
        derive_seed(trial_seed, NET_STREAM, 0),
    ) {
        Ok(net) => net,
        Err(e) => return skipped(trial, format!("network generation failed: {e}")),
    };
    let mut src_rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, TRAIN_STREAM, u64::MAX));
    let mut train = Vec::with_capacity(config.n_train_cascades);
    for i in 0..config.n_train_cascades {
        let source = NodeId(src_rng.random_range(0..config.n_nodes as u32));
        match simulate_cascade(
            &truth,
            source,
            0.0,
            config.window_t,
            derive_seed(trial_seed, TRAIN_STREAM, i as u64),
        ) {
            Ok(c) => train.push(c),
            Err(e) => return skipped(trial, format!("training simulation failed: {e}")),
        }
    }
    timings.simulate_s += t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let inferred = match infer_network(&train, config.window_t, &config.solver) {
        Ok(r) => r,
        Err(e) => return skipped(trial, format!("rate inference failed: {e}")),
    };
    timings.infer_s += t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let Some(test) = build_test_set(&truth, config, trial_seed) else {
        timings.simulate_s += t2.elapsed().as_secs_f64();
        return skipped(
            trial,
            format!(
                "no source produced {} cascades with >= {} infected nodes",
                config.n_test_cascades_per_source, config.min_cascade_len
            ),
        );
    };
    timings.simulate_s += t2.elapsed().as_secs_f64();

    let mut observed_anywhere = std::collections::BTreeSet::new();
    for obs in &test.observations {
        observed_anywhere.extend(obs.observed().keys().copied());
    }
    let n_candidates = config.n_nodes - observed_anywhere.len();

    let t3 = Instant::now();
    let ranking = match rank_sources(
        &inferred.network,
        &test.observations,
        config.n_samples,
        derive_seed(trial_seed, RANK_STREAM, 0),
    ) {
        Ok(r) => r,
        Err(e) => {
            timings.localize_s += t3.elapsed().as_secs_f64();
            return skipped(trial, format!("localization failed: {e}"));
        }
    };
    timings.localize_s += t3.elapsed().as_secs_f64();

    let (outcome, cascades, mae) = match ranking.position_of(test.source) {
        Some(rank) => {
            let score = &ranking.scores()[rank - 1];
            let cascades: Vec<CascadeOutcome> = test
                .true_starts
                .iter()
                .zip(&score.start_times)
                .map(|(&true_start, &estimated_start)| CascadeOutcome {
                    true_start,
                    estimated_start,
                })
                .collect();
            let errs: Vec<f64> = cascades
                .iter()
                .filter_map(|c| c.estimated_start.map(|e| (e - c.true_start).abs()))
                .collect();
            let mae = if errs.is_empty() {
                None
            } else {
                Some(errs.iter().sum::<f64>() / errs.len() as f64)
            };
            (TrialOutcome::Ranked(rank), cascades, mae)
        }
        None => {
            let cascades = test
                .true_starts
                .iter()
                .map(|&true_start| CascadeOutcome { true_start, estimated_start: None })
                .collect();
            (TrialOutcome::Absent, cascades, None)
        }
    };
    TrialRow {
        trial,
        true_source: Some(test.source),
        outcome,
        n_candidates,
        cascades,
        start_time_mae: mae,
    }
}

impl ExperimentResult {
    /// Renders the machine-readable report. Deterministic for a fixed config
    /// and master seed; timings are deliberately left out.
    pub fn render_report(&self, config: &TrialConfig) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        out.push_str("# cascade source localization experiment report\n");
        out.push_str("[config]\n");
        let _ = writeln!(out, "n_nodes = {}", config.n_nodes);
        let _ = writeln!(out, "edge_density = {:.6}", config.edge_density);
        let _ = writeln!(out, "rate_min = {:.6}", config.rate_range.0);
        let _ = writeln!(out, "rate_max = {:.6}", config.rate_range.1);
        let _ = writeln!(out, "window_t = {:.6}", config.window_t);
        let _ = writeln!(out, "n_train_cascades = {}", config.n_train_cascades);
        let _ = writeln!(out, "n_test_cascades_per_source = {}", config.n_test_cascades_per_source);
        let _ = writeln!(out, "observed_fraction = {:.6}", config.observed_fraction);
        let _ = writeln!(out, "regime = {}", config.regime);
        let _ = writeln!(out, "n_samples = {}", config.n_samples);
        let k_list: Vec<String> = config.k_list.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "k_list = {}", k_list.join(","));
        let _ = writeln!(out, "n_trials = {}", config.n_trials);
        let _ = writeln!(out, "master_seed = {}", config.master_seed);
        let _ = writeln!(out, "min_cascade_len = {}", config.min_cascade_len);
        let _ = writeln!(out, "max_resim_attempts = {}", config.max_resim_attempts);
        let _ = writeln!(out, "t_start_min = {:.6}", config.t_start_range.0);
        let _ = writeln!(out, "t_start_max = {:.6}", config.t_start_range.1);
        let _ = writeln!(out, "solver_step_size = {:.6}", config.solver.step_size);
        let _ = writeln!(out, "solver_max_iters = {}", config.solver.max_iters);
        let _ = writeln!(out, "solver_tolerance = {:e}", config.solver.tolerance);
        let _ = writeln!(out, "solver_prune_threshold = {:e}", config.solver.prune_threshold);

        out.push_str("[trials]\n");
        out.push_str("# columns: trial source outcome rank n_candidates ts_mae\n");
        for row in &self.rows {
            let source = row
                .true_source
                .map_or_else(|| "-".to_string(), |s| s.to_string());
            let (outcome, rank) = match &row.outcome {
                TrialOutcome::Ranked(r) => ("ranked", r.to_string()),
                TrialOutcome::Absent => ("absent", "-".to_string()),
                TrialOutcome::Skipped(_) => ("skipped", "-".to_string()),
            };
            let mae = row
                .start_time_mae
                .map_or_else(|| "-".to_string(), |m| format!("{m:.6}"));
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                row.trial, source, outcome, rank, row.n_candidates, mae
            );
        }

        let skips: Vec<&TrialRow> = self
            .rows
            .iter()
            .filter(|r| matches!(r.outcome, TrialOutcome::Skipped(_)))
            .collect();
        if !skips.is_empty() {
            out.push_str("[skipped]\n");
            for row in skips {
                if let TrialOutcome::Skipped(reason) = &row.outcome {
                    let _ = writeln!(out, "{} {}", row.trial, reason);
                }
            }
        }

        out.push_str("[start_times]\n");
        out.push_str("# columns: trial cascade t_true t_est\n");
        for row in &self.rows {
            for (j, c) in row.cascades.iter().enumerate() {
                let est = c
                    .estimated_start
                    .map_or_else(|| "-".to_string(), |e| format!("{e:.6}"));
                let _ = writeln!(out, "{} {} {:.6} {}", row.trial, j, c.true_start, est);
            }
        }

        out.push_str("[aggregate]\n");
        let _ = writeln!(out, "n_trials = {}", self.rows.len());
        let _ = writeln!(out, "n_skipped = {}", self.n_skipped);
        let _ = writeln!(out, "success_probability = {:.6}", self.success_probability);
        for &(k, p) in &self.topk {
            let _ = writeln!(out, "topk_{k} = {p:.6}");
        }
        match self.mean_start_time_error {
            Some(m) => {
                let _ = writeln!(out, "mean_ts_mae = {m:.6}");
            }
            None => {
                let _ = writeln!(out, "mean_ts_mae = -");
            }
        }
        out
    }
}
