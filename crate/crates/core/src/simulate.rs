//! Ground-truth cascade generation and the two partial-observation regimes.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Cascade, Network, NodeId, PartialObservation};
use crate::paths::{sample_delays, shortest_paths_from};
use crate::util::derive_seed;
use crate::{Error, Result};

const OBSERVE_STREAM: u64 = 0x6f_62_73; // "obs"

/// Simulates one cascade under the continuous-time independent cascade model.
///
/// One delay is drawn per edge from that edge's exponential density; a node's
/// infection time is `t_start` plus its shortest-path distance from the
/// source through those delays, exactly as the propagation dynamics dictate.
/// Nodes whose distance exceeds `window_t` stay ignorant. The delay draw is
/// `sample_delays(network, seed, 0)`, so the produced times are reproducible
/// from the seed and verifiable against `shortest_paths_from` on that sample.
pub fn simulate_cascade(
    network: &Network,
    source: NodeId,
    t_start: f64,
    window_t: f64,
    seed: u64,
) -> Result<Cascade> {
    if !network.contains_node(source) {
        return Err(Error::InvalidArgument(format!(
            "source {source} is outside [0, {})",
            network.n_nodes()
        )));
    }
    if !window_t.is_finite() || window_t <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "observation window must be positive, got {window_t}"
        )));
    }
    if !t_start.is_finite() || t_start < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "start time must be finite and >= 0, got {t_start}"
        )));
    }
    let delays = sample_delays(network, seed, 0);
    let dist = shortest_paths_from(network, &delays, source)?;
    let times: BTreeMap<NodeId, f64> = dist
        .into_iter()
        .filter(|&(_, d)| d <= window_t)
        .map(|(v, d)| (v, t_start + d))
        .collect();
    Cascade::new(times, t_start + window_t)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "observed fraction must lie in (0, 1], got {fraction}"
        )));
    }
    Ok(())
}

fn observable_count(cascade: &Cascade, fraction: f64) -> usize {
    (fraction * cascade.n_infected() as f64).ceil() as usize
}

fn check_universe(cascade: &Cascade, n_nodes: usize) -> Result<()> {
    if cascade.max_node_id().index() >= n_nodes {
        return Err(Error::InvalidArgument(format!(
            "cascade references node {} outside [0, {n_nodes})",
            cascade.max_node_id()
        )));
    }
    Ok(())
}

/// Uniformly samples `ceil(fraction * n_infected)` infected nodes as the
/// observed set, never including the cascade's earliest node: data collection
/// starts only after the propagation does, so the source stays hidden.
/// `n_nodes` is the network's node count; every non-observed node is hidden.
pub fn observe_random(
    cascade: &Cascade,
    n_nodes: usize,
    fraction: f64,
    seed: u64,
) -> Result<PartialObservation> {
    check_fraction(fraction)?;
    check_universe(cascade, n_nodes)?;
    let root = cascade.root();
    let pool: Vec<(NodeId, f64)> = cascade.infected().filter(|&(v, _)| v != root).collect();
    if pool.is_empty() {
        return Err(Error::NoObservableNodes(
            "only the source is infected, and the source is never observed".into(),
        ));
    }
    let k = observable_count(cascade, fraction).min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, OBSERVE_STREAM, 0));
    let picks = rand::seq::index::sample(&mut rng, pool.len(), k);
    let observed: BTreeMap<NodeId, f64> = picks.iter().map(|i| pool[i]).collect();
    PartialObservation::new(n_nodes, observed)
}

/// Deterministically observes the `ceil(fraction * n_infected)` infected
/// nodes with the largest infection times, ties broken towards larger node
/// ids; the cascade's earliest node is never observed.
pub fn observe_final(cascade: &Cascade, n_nodes: usize, fraction: f64) -> Result<PartialObservation> {
    check_fraction(fraction)?;
    check_universe(cascade, n_nodes)?;
    let root = cascade.root();
    let mut pool: Vec<(NodeId, f64)> = cascade.infected().filter(|&(v, _)| v != root).collect();
    if pool.is_empty() {
        return Err(Error::NoObservableNodes(
            "only the source is infected, and the source is never observed".into(),
        ));
    }
    pool.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let k = observable_count(cascade, fraction).min(pool.len());
    let observed: BTreeMap<NodeId, f64> = pool[pool.len() - k..].iter().copied().collect();
    PartialObservation::new(n_nodes, observed)
}
