//! Domain types shared by the whole pipeline, plus the exponential
//! transmission-density primitives.
//!
//! All types are immutable after construction and safe to share across
//! threads; every operation here is a pure function.

use std::collections::BTreeMap;
use std::fmt;

use crate::{Error, Result};

/// Dense node index into the owning network, valid in `[0, n_nodes)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A directed edge carrying a transmission rate in units of 1/time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub rate: f64,
}

/// Directed weighted graph. Edges are held sorted by `(src, dst)` so that
/// iteration order is a function of the edge set alone, never of insertion
/// order.
#[derive(Debug, Clone)]
pub struct Network {
    n_nodes: usize,
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
}

impl Network {
    /// Validates and canonicalizes an edge list.
    ///
    /// Rejects self-loops, duplicate `(src, dst)` pairs, node ids outside
    /// `[0, n_nodes)` and non-positive or non-finite rates. An edge whose
    /// rate would be zero must simply be absent.
    pub fn new(n_nodes: usize, mut edges: Vec<Edge>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidNetwork(
                "network must contain at least one node".into(),
            ));
        }
        if n_nodes > u32::MAX as usize {
            return Err(Error::InvalidNetwork("too many nodes".into()));
        }
        for e in &edges {
            if e.src == e.dst {
                return Err(Error::InvalidNetwork(format!(
                    "self-loop on node {}",
                    e.src
                )));
            }
            if e.src.index() >= n_nodes || e.dst.index() >= n_nodes {
                return Err(Error::InvalidNetwork(format!(
                    "edge {} -> {} references a node outside [0, {})",
                    e.src, e.dst, n_nodes
                )));
            }
            if !e.rate.is_finite() || e.rate <= 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "edge {} -> {} has non-positive rate {}",
                    e.src, e.dst, e.rate
                )));
            }
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        if let Some(w) = edges.windows(2).find(|w| (w[0].src, w[0].dst) == (w[1].src, w[1].dst)) {
            return Err(Error::InvalidNetwork(format!(
                "duplicate edge {} -> {}",
                w[0].src, w[0].dst
            )));
        }
        let mut out_offsets = vec![0usize; n_nodes + 1];
        for e in &edges {
            out_offsets[e.src.index() + 1] += 1;
        }
        for i in 0..n_nodes {
            out_offsets[i + 1] += out_offsets[i];
        }
        Ok(Self { n_nodes, edges, out_offsets })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical `(src, dst)` order.
    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Outgoing edges of `v`, contiguous in the canonical edge slice.
    #[inline]
    pub fn out_edges(&self, v: NodeId) -> &[Edge] {
        &self.edges[self.out_offsets[v.index()]..self.out_offsets[v.index() + 1]]
    }

    #[inline]
    pub fn contains_node(&self, v: NodeId) -> bool {
        v.index() < self.n_nodes
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n_nodes as u32).map(NodeId)
    }
}

/// One propagation trace: infection timestamps for the nodes that got
/// infected within the observation window.
///
/// Nodes absent from the map are ignorant — their infection time is
/// conceptually infinite. `window_t` is the absolute end of the observation
/// window on the cascade's clock, so every recorded time is `<= window_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    times: BTreeMap<NodeId, f64>,
    window_t: f64,
}

impl Cascade {
    pub fn new(times: BTreeMap<NodeId, f64>, window_t: f64) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidCascade(
                "cascade must contain at least one infected node".into(),
            ));
        }
        if !window_t.is_finite() || window_t <= 0.0 {
            return Err(Error::InvalidCascade(format!(
                "observation window must be positive, got {window_t}"
            )));
        }
        for (&v, &t) in &times {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidCascade(format!(
                    "node {v} has invalid infection time {t}"
                )));
            }
            if t > window_t {
                return Err(Error::InvalidCascade(format!(
                    "node {v} is infected at {t}, after the window end {window_t}"
                )));
            }
        }
        Ok(Self { times, window_t })
    }

    #[inline]
    pub fn window_t(&self) -> f64 {
        self.window_t
    }

    #[inline]
    pub fn time_of(&self, v: NodeId) -> Option<f64> {
        self.times.get(&v).copied()
    }

    #[inline]
    pub fn is_infected(&self, v: NodeId) -> bool {
        self.times.contains_key(&v)
    }

    #[inline]
    pub fn n_infected(&self) -> usize {
        self.times.len()
    }

    /// Infected nodes in ascending node-id order.
    pub fn infected(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.times.iter().map(|(&v, &t)| (v, t))
    }

    /// Infected nodes sorted by `(time, id)` ascending.
    pub fn by_time(&self) -> Vec<(NodeId, f64)> {
        let mut v: Vec<(NodeId, f64)> = self.infected().collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }

    /// The earliest-infected node, ties broken by ascending id. For a
    /// simulated cascade this is the true source.
    pub fn root(&self) -> NodeId {
        self.infected()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(v, _)| v)
            .expect("cascade is never empty")
    }

    pub fn max_node_id(&self) -> NodeId {
        *self.times.keys().next_back().expect("cascade is never empty")
    }
}

/// The observed slice of a cascade: a subset of infected nodes with their
/// infection times. Every other node of the network is hidden, so observed
/// and hidden always partition the node set.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialObservation {
    n_nodes: usize,
    observed: BTreeMap<NodeId, f64>,
}

impl PartialObservation {
    pub fn new(n_nodes: usize, observed: BTreeMap<NodeId, f64>) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::InvalidObservation(
                "observation must contain at least one node".into(),
            ));
        }
        for (&v, &t) in &observed {
            if v.index() >= n_nodes {
                return Err(Error::InvalidObservation(format!(
                    "observed node {v} is outside [0, {n_nodes})"
                )));
            }
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidObservation(format!(
                    "observed node {v} has invalid time {t}"
                )));
            }
        }
        Ok(Self { n_nodes, observed })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of observed nodes, `K`.
    #[inline]
    pub fn n_observed(&self) -> usize {
        self.observed.len()
    }

    #[inline]
    pub fn observed(&self) -> &BTreeMap<NodeId, f64> {
        &self.observed
    }

    #[inline]
    pub fn is_observed(&self, v: NodeId) -> bool {
        self.observed.contains_key(&v)
    }

    #[inline]
    pub fn is_hidden(&self, v: NodeId) -> bool {
        v.index() < self.n_nodes && !self.is_observed(v)
    }

    /// The hidden set: all network nodes that were not observed.
    pub fn hidden(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n_nodes as u32).map(NodeId).filter(|v| !self.is_observed(*v))
    }
}

/// Family of per-edge transmission delay densities. Only the exponential
/// member is implemented; the enumeration is the extension seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmissionModel {
    Exponential,
}

impl TransmissionModel {
    pub fn density(self, tau: f64, rate: f64) -> Result<f64> {
        match self {
            TransmissionModel::Exponential => exp_density(tau, rate),
        }
    }

    pub fn survival(self, tau: f64, rate: f64) -> Result<f64> {
        match self {
            TransmissionModel::Exponential => exp_survival(tau, rate),
        }
    }

    pub fn hazard(self, rate: f64) -> Result<f64> {
        match self {
            TransmissionModel::Exponential => exp_hazard(rate),
        }
    }
}

fn check_domain(tau: f64, rate: f64) -> Result<()> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::Domain(format!("delay must be finite and >= 0, got {tau}")));
    }
    check_rate(rate)
}

fn check_rate(rate: f64) -> Result<()> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::Domain(format!("rate must be finite and > 0, got {rate}")));
    }
    Ok(())
}

/// Exponential delay density `rate * exp(-rate * tau)`.
pub fn exp_density(tau: f64, rate: f64) -> Result<f64> {
    check_domain(tau, rate)?;
    Ok(rate * (-rate * tau).exp())
}

/// Exponential survival function `exp(-rate * tau)`, i.e. `1 - CDF`.
pub fn exp_survival(tau: f64, rate: f64) -> Result<f64> {
    check_domain(tau, rate)?;
    Ok((-rate * tau).exp())
}

/// Exponential hazard `density / survival`; constant in the delay.
pub fn exp_hazard(rate: f64) -> Result<f64> {
    check_rate(rate)?;
    Ok(rate)
}
