//! Monte-Carlo estimation of expected infection times between candidate
//! sources and observed nodes.
//!
//! Each sample draws one delay per edge from that edge's exponential density.
//! Within a sample the infection time of a node equals the shortest-path
//! distance from the source through the sampled delays, so the expected
//! infection time is estimated by averaging per-sample Dijkstra distances.
//! To keep the sweep cheap when few nodes are observed, the sweep runs on the
//! reversed graph, once per observed node, instead of once per candidate.

use std::collections::BTreeMap;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Network, NodeId};
use crate::util::{derive_seed, uniform_open01, KahanSum};
use crate::{Error, Result};

const DELAY_STREAM: u64 = 0x64_65_6c_61_79; // "delay"

/// One Monte-Carlo draw of per-edge transmission delays.
///
/// `delays()[k]` is the delay of `network.edges()[k]` in the network's
/// canonical edge order, so the draw for a given `(src, dst)` pair depends
/// only on `(master_seed, sample_index)` and the edge set — never on the
/// order edges were supplied in.
#[derive(Debug, Clone)]
pub struct DelaySample {
    delays: Vec<f64>,
    seed_index: u64,
}

impl DelaySample {
    #[inline]
    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    #[inline]
    pub fn seed_index(&self) -> u64 {
        self.seed_index
    }

    /// Delay of the edge at canonical index `k`.
    #[inline]
    pub fn delay(&self, k: usize) -> f64 {
        self.delays[k]
    }
}

/// Draws one delay per edge, each from the exponential density with that
/// edge's rate, by inverse-CDF transform of an open-(0,1) uniform.
pub fn sample_delays(network: &Network, master_seed: u64, sample_index: u64) -> DelaySample {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, DELAY_STREAM, sample_index));
    let delays = network
        .edges()
        .iter()
        .map(|e| -uniform_open01(&mut rng).ln() / e.rate)
        .collect();
    DelaySample { delays, seed_index: sample_index }
}

/// Min-heap entry; delays are finite and positive so the order is total.
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed so the BinaryHeap pops the smallest distance first.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Compressed adjacency over canonical edge indices. `heads[k]` is the far
/// endpoint and `edge_ids[k]` the canonical index of the traversed edge, so
/// the same structure serves the forward and the reversed orientation.
struct Csr {
    offsets: Vec<u32>,
    heads: Vec<u32>,
    edge_ids: Vec<u32>,
}

impl Csr {
    fn forward(network: &Network) -> Self {
        Self::build(network, false)
    }

    fn reversed(network: &Network) -> Self {
        Self::build(network, true)
    }

    fn build(network: &Network, reversed: bool) -> Self {
        let n = network.n_nodes();
        let m = network.n_edges();
        let mut offsets = vec![0u32; n + 1];
        for e in network.edges() {
            let tail = if reversed { e.dst } else { e.src };
            offsets[tail.index() + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut heads = vec![0u32; m];
        let mut edge_ids = vec![0u32; m];
        let mut cursor = offsets.clone();
        for (k, e) in network.edges().iter().enumerate() {
            let (tail, head) = if reversed { (e.dst, e.src) } else { (e.src, e.dst) };
            let slot = cursor[tail.index()] as usize;
            heads[slot] = head.0;
            edge_ids[slot] = k as u32;
            cursor[tail.index()] += 1;
        }
        Self { offsets, heads, edge_ids }
    }

    #[inline]
    fn neighbors(&self, v: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        let lo = self.offsets[v as usize] as usize;
        let hi = self.offsets[v as usize + 1] as usize;
        (lo..hi).map(move |k| (self.heads[k], self.edge_ids[k]))
    }
}

const NO_PARENT: u32 = u32::MAX;

/// Reusable per-sweep state for Dijkstra runs over the same node set.
struct DijkstraScratch {
    dist: Vec<f64>,
    parent_edge: Vec<u32>,
    heap: BinaryHeap<HeapEntry>,
}

impl DijkstraScratch {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            parent_edge: vec![NO_PARENT; n],
            heap: BinaryHeap::new(),
        }
    }

    fn run(&mut self, csr: &Csr, delays: &[f64], root: u32) {
        self.dist.fill(f64::INFINITY);
        self.parent_edge.fill(NO_PARENT);
        self.heap.clear();
        self.dist[root as usize] = 0.0;
        self.heap.push(HeapEntry { dist: 0.0, node: root });
        while let Some(HeapEntry { dist, node }) = self.heap.pop() {
            if dist > self.dist[node as usize] {
                continue; // stale entry
            }
            for (head, edge_id) in csr.neighbors(node) {
                let next = dist + delays[edge_id as usize];
                if next < self.dist[head as usize] {
                    self.dist[head as usize] = next;
                    self.parent_edge[head as usize] = edge_id;
                    self.heap.push(HeapEntry { dist: next, node: head });
                }
            }
        }
    }
}

/// Single-source shortest-path distances along directed edges under one
/// delay sample. Unreachable nodes are absent from the map.
pub fn shortest_paths_from(
    network: &Network,
    delays: &DelaySample,
    root: NodeId,
) -> Result<BTreeMap<NodeId, f64>> {
    if !network.contains_node(root) {
        return Err(Error::InvalidArgument(format!(
            "root {root} is outside [0, {})",
            network.n_nodes()
        )));
    }
    if delays.delays.len() != network.n_edges() {
        return Err(Error::InvalidArgument(
            "delay sample does not match the network's edge count".into(),
        ));
    }
    let csr = Csr::forward(network);
    let mut scratch = DijkstraScratch::new(network.n_nodes());
    scratch.run(&csr, &delays.delays, root.0);
    Ok(scratch
        .dist
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite())
        .map(|(v, &d)| (NodeId(v as u32), d))
        .collect())
}

/// Expected infection times between candidate sources and observed nodes,
/// averaged over reachable samples only. `reach_count` tells how many of the
/// `n_samples` draws actually contained a path for each pair.
#[derive(Debug, Clone)]
pub struct ExpectedDistances {
    observed: Vec<NodeId>,
    candidates: Vec<NodeId>,
    n_samples: usize,
    /// Candidate-major `[candidate][observed]`; meaningful iff reach > 0.
    means: Vec<f64>,
    reach: Vec<u32>,
}

impl ExpectedDistances {
    /// Mean shortest-path time from `candidate` to `observed` over the
    /// samples where a path existed; `None` when no sample had one.
    pub fn t_hat(&self, candidate: NodeId, observed: NodeId) -> Option<f64> {
        let idx = self.pair_index(candidate, observed)?;
        (self.reach[idx] > 0).then(|| self.means[idx])
    }

    /// Number of samples in which `observed` was reachable from `candidate`.
    pub fn reach_count(&self, candidate: NodeId, observed: NodeId) -> usize {
        self.pair_index(candidate, observed)
            .map_or(0, |idx| self.reach[idx] as usize)
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn observed_nodes(&self) -> &[NodeId] {
        &self.observed
    }

    pub fn candidate_nodes(&self) -> &[NodeId] {
        &self.candidates
    }

    /// Builds the table from externally supplied expected times, e.g. exact
    /// analytic means. Pairs mapped to `None` count as never reachable.
    pub fn from_means(
        observed: &[NodeId],
        candidates: &[NodeId],
        mut t_hat: impl FnMut(NodeId, NodeId) -> Option<f64>,
    ) -> Self {
        let mut observed = observed.to_vec();
        let mut candidates = candidates.to_vec();
        observed.sort_unstable();
        observed.dedup();
        candidates.sort_unstable();
        candidates.dedup();
        let mut means = vec![0.0; observed.len() * candidates.len()];
        let mut reach = vec![0u32; observed.len() * candidates.len()];
        for (ci, &c) in candidates.iter().enumerate() {
            for (oi, &o) in observed.iter().enumerate() {
                if let Some(v) = t_hat(c, o) {
                    means[ci * observed.len() + oi] = v;
                    reach[ci * observed.len() + oi] = 1;
                }
            }
        }
        Self { observed, candidates, n_samples: 1, means, reach }
    }

    fn pair_index(&self, candidate: NodeId, observed: NodeId) -> Option<usize> {
        let ci = self.candidates.binary_search(&candidate).ok()?;
        let oi = self.observed.binary_search(&observed).ok()?;
        Some(ci * self.observed.len() + oi)
    }
}

/// Estimates the expected infection time of every observed node for every
/// candidate source.
///
/// For each sample the edges are reversed (keeping each edge's sampled
/// delay) and Dijkstra runs once per observed node, which is cheaper than
/// once per candidate because observed nodes are few. Distances are then
/// re-accumulated along the optimal path in source-to-observer order, so the
/// reported values are bit-identical to a forward sweep from each candidate.
pub fn estimate_infection_times(
    network: &Network,
    observed: &[NodeId],
    candidates: &[NodeId],
    n_samples: usize,
    master_seed: u64,
) -> Result<ExpectedDistances> {
    if observed.is_empty() {
        return Err(Error::EmptyInput("no observed nodes".into()));
    }
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no candidate nodes".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let mut observed = observed.to_vec();
    observed.sort_unstable();
    observed.dedup();
    let mut candidates = candidates.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    for &v in observed.iter().chain(candidates.iter()) {
        if !network.contains_node(v) {
            return Err(Error::InvalidArgument(format!(
                "node {v} is outside [0, {})",
                network.n_nodes()
            )));
        }
    }
    if candidates.iter().any(|c| observed.binary_search(c).is_ok()) {
        return Err(Error::InvalidArgument(
            "observed and candidate sets must be disjoint".into(),
        ));
    }

    let n_obs = observed.len();
    let rev = Csr::reversed(network);
    let mut scratch = DijkstraScratch::new(network.n_nodes());
    let mut sums = vec![KahanSum::default(); candidates.len() * n_obs];
    let mut reach = vec![0u32; candidates.len() * n_obs];

    for sample in 0..n_samples {
        let ds = sample_delays(network, master_seed, sample as u64);
        for (oi, &o) in observed.iter().enumerate() {
            scratch.run(&rev, &ds.delays, o.0);
            for (ci, &c) in candidates.iter().enumerate() {
                if scratch.dist[c.index()].is_finite() {
                    let d = forward_path_sum(network, &scratch.parent_edge, &ds.delays, c.0);
                    sums[ci * n_obs + oi].add(d);
                    reach[ci * n_obs + oi] += 1;
                }
            }
        }
    }

    let means = sums
        .iter()
        .zip(&reach)
        .map(|(s, &r)| if r > 0 { s.value() / f64::from(r) } else { 0.0 })
        .collect();
    Ok(ExpectedDistances { observed, candidates, n_samples, means, reach })
}

/// Walks the reversed-sweep parent chain from `from` back to the sweep root,
/// summing delays in forward (source-to-observer) order. This makes the
/// reported distance independent of which direction the sweep ran in: both
/// orientations sum the same optimal path's delays in the same order.
fn forward_path_sum(network: &Network, parent_edge: &[u32], delays: &[f64], from: u32) -> f64 {
    let mut sum = 0.0;
    let mut v = from;
    while parent_edge[v as usize] != NO_PARENT {
        let k = parent_edge[v as usize] as usize;
        sum += delays[k];
        // The reversed sweep reached `v` through forward edge v -> dst.
        debug_assert_eq!(network.edges()[k].src.0, v);
        v = network.edges()[k].dst.0;
    }
    sum
}
