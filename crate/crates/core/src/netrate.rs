//! Transmission-rate inference from fully observed historical cascades.
//!
//! The model: an infected node `j` attacks each out-neighbor `i` after an
//! exponential delay with rate `alpha[j][i]`. For one cascade the
//! log-likelihood of all infection times, specialized to exponentials, is
//!
//! ```text
//! sum over infected i of
//!     - sum_{k: t_k < t_i} alpha[k][i] (t_i - t_k)      survival of slower attacks
//!     + log sum_{j: t_j < t_i} alpha[j][i]              hazard of the winning attack
//! - sum over infected j, ignorant m of alpha[j][m] (T - t_j)
//! ```
//!
//! where the earliest-infected node contributes no hazard term: it is the
//! cascade's root and has no potential parent. The objective is concave in
//! `alpha` and splits into independent subproblems per destination node, so
//! it is maximized by per-column projected gradient ascent with a
//! backtracking line search.

use std::collections::BTreeSet;

use crate::model::{Cascade, Edge, Network, NodeId};
use crate::{Error, Result};

/// Solver settings for [`infer_network`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Initial ascent step; the line search adapts it per destination node.
    pub step_size: f64,
    /// Iteration cap per destination-node subproblem.
    pub max_iters: usize,
    /// Relative log-likelihood change below which a subproblem is converged.
    pub tolerance: f64,
    /// Rates at or below this value are dropped from the returned network.
    pub prune_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { step_size: 0.5, max_iters: 2000, tolerance: 1e-10, prune_threshold: 1e-4 }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(Error::InvalidArgument("step_size must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        if !self.prune_threshold.is_finite() || self.prune_threshold < 0.0 {
            return Err(Error::InvalidArgument("prune_threshold must be >= 0".into()));
        }
        Ok(())
    }
}

/// Sparse non-negative rate matrix over the candidate edge set.
///
/// A pair `(j, i)` is a candidate when `j` is infected strictly before `i`
/// in at least one cascade; every other pair is structurally zero. Storage is
/// column-major: per destination, the sorted candidate parents and their
/// rates.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    n_nodes: usize,
    parents: Vec<Vec<NodeId>>,
    values: Vec<Vec<f64>>,
    children: Vec<Vec<NodeId>>,
}

impl RateMatrix {
    /// Builds the candidate set from cascades: all ordered pairs of infected
    /// nodes that co-occur in the right time order, initialized to `init`.
    pub fn from_cascades(n_nodes: usize, cascades: &[Cascade], init: f64) -> Result<Self> {
        if init < 0.0 || !init.is_finite() {
            return Err(Error::InvalidArgument("initial rate must be finite and >= 0".into()));
        }
        let mut pair_sets: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n_nodes];
        for c in cascades {
            if c.max_node_id().index() >= n_nodes {
                return Err(Error::InvalidArgument(format!(
                    "cascade references node {} outside [0, {n_nodes})",
                    c.max_node_id()
                )));
            }
            let order = c.by_time();
            for (pos, &(i, t_i)) in order.iter().enumerate() {
                for &(j, t_j) in &order[..pos] {
                    if t_j < t_i {
                        pair_sets[i.index()].insert(j);
                    }
                }
            }
        }
        let parents: Vec<Vec<NodeId>> =
            pair_sets.into_iter().map(|s| s.into_iter().collect()).collect();
        Ok(Self::assemble(n_nodes, parents, init))
    }

    /// Builds a matrix from explicit `(src, dst, rate)` entries.
    pub fn from_pairs(n_nodes: usize, entries: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n_nodes];
        for &(src, dst, rate) in entries {
            if src == dst {
                return Err(Error::InvalidArgument(format!("self-pair on node {src}")));
            }
            if src.index() >= n_nodes || dst.index() >= n_nodes {
                return Err(Error::InvalidArgument(format!(
                    "pair {src} -> {dst} outside [0, {n_nodes})"
                )));
            }
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "pair {src} -> {dst} has invalid rate {rate}"
                )));
            }
            parents[dst.index()].push(src);
        }
        for col in &mut parents {
            col.sort_unstable();
            if col.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument("duplicate pair".into()));
            }
        }
        let mut m = Self::assemble(n_nodes, parents, 0.0);
        for &(src, dst, rate) in entries {
            m.set_rate(src, dst, rate)?;
        }
        Ok(m)
    }

    fn assemble(n_nodes: usize, parents: Vec<Vec<NodeId>>, init: f64) -> Self {
        let values: Vec<Vec<f64>> = parents.iter().map(|p| vec![init; p.len()]).collect();
        let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n_nodes];
        for (dst, col) in parents.iter().enumerate() {
            for &src in col {
                children[src.index()].push(NodeId(dst as u32));
            }
        }
        Self { n_nodes, parents, values, children }
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_pairs(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Rate of the pair, or 0 where the pair is not a candidate.
    pub fn rate(&self, src: NodeId, dst: NodeId) -> f64 {
        match self.parents[dst.index()].binary_search(&src) {
            Ok(pos) => self.values[dst.index()][pos],
            Err(_) => 0.0,
        }
    }

    /// Sets a candidate pair's rate; unknown pairs are an error because they
    /// are structurally zero.
    pub fn set_rate(&mut self, src: NodeId, dst: NodeId, rate: f64) -> Result<()> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid rate {rate}")));
        }
        match self.parents[dst.index()].binary_search(&src) {
            Ok(pos) => {
                self.values[dst.index()][pos] = rate;
                Ok(())
            }
            Err(_) => Err(Error::InvalidArgument(format!(
                "pair {src} -> {dst} is not a candidate"
            ))),
        }
    }

    /// All candidate pairs with their current rates, in `(dst, src)` order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.parents.iter().enumerate().flat_map(move |(dst, col)| {
            col.iter()
                .zip(&self.values[dst])
                .map(move |(&src, &v)| (src, NodeId(dst as u32), v))
        })
    }

    fn column(&self, dst: NodeId) -> (&[NodeId], &[f64]) {
        (&self.parents[dst.index()], &self.values[dst.index()])
    }

    fn children_of(&self, src: NodeId) -> &[NodeId] {
        &self.children[src.index()]
    }

    fn zeros_like(&self) -> Self {
        Self {
            n_nodes: self.n_nodes,
            parents: self.parents.clone(),
            values: self.parents.iter().map(|p| vec![0.0; p.len()]).collect(),
            children: self.children.clone(),
        }
    }
}

fn check_cascade(alpha: &RateMatrix, cascade: &Cascade, window_t: f64) -> Result<()> {
    if !window_t.is_finite() || window_t <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "window must be positive, got {window_t}"
        )));
    }
    if cascade.max_node_id().index() >= alpha.n_nodes {
        return Err(Error::InvalidArgument(format!(
            "cascade references node {} outside [0, {})",
            cascade.max_node_id(),
            alpha.n_nodes
        )));
    }
    if let Some((v, t)) = cascade.infected().find(|&(_, t)| t > window_t) {
        return Err(Error::InvalidArgument(format!(
            "node {v} is infected at {t}, after the window end {window_t}"
        )));
    }
    Ok(())
}

/// Log-likelihood of one fully observed cascade under `alpha`.
///
/// Returns `-inf` (a flagged sentinel, not an error) when some non-root
/// infected node has zero total incoming hazard, which a line search must be
/// able to step over gracefully.
pub fn cascade_loglik(alpha: &RateMatrix, cascade: &Cascade, window_t: f64) -> Result<f64> {
    check_cascade(alpha, cascade, window_t)?;
    let order = cascade.by_time();
    let mut ll = 0.0;
    for (pos, &(i, t_i)) in order.iter().enumerate() {
        let (parents, rates) = alpha.column(i);
        let mut hazard = 0.0;
        for (&j, &a) in parents.iter().zip(rates) {
            if let Some(t_j) = cascade.time_of(j) {
                if t_j < t_i {
                    hazard += a;
                    ll -= a * (t_i - t_j);
                }
            }
        }
        if pos > 0 {
            if hazard <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            ll += hazard.ln();
        }
        // Pressure each infected node exerted on neighbors that stayed
        // ignorant through the window.
        for &m in alpha.children_of(i) {
            if !cascade.is_infected(m) {
                ll -= alpha.rate(i, m) * (window_t - t_i);
            }
        }
    }
    Ok(ll)
}

/// Gradient of the summed log-likelihood over `cascades`, shaped like
/// `alpha`. Errors where the likelihood itself is `-inf`, since the gradient
/// is undefined there.
pub fn loglik_gradient(
    alpha: &RateMatrix,
    cascades: &[Cascade],
    window_t: f64,
) -> Result<RateMatrix> {
    let mut grad = alpha.zeros_like();
    for (ci, cascade) in cascades.iter().enumerate() {
        check_cascade(alpha, cascade, window_t)?;
        let order = cascade.by_time();
        for (pos, &(i, t_i)) in order.iter().enumerate() {
            let (parents, rates) = alpha.column(i);
            let mut hazard = 0.0;
            for (&j, &a) in parents.iter().zip(rates) {
                if let Some(t_j) = cascade.time_of(j) {
                    if t_j < t_i {
                        hazard += a;
                    }
                }
            }
            if pos > 0 && hazard <= 0.0 {
                return Err(Error::DegenerateLikelihood(format!(
                    "cascade {ci}: node {i} has zero total incoming hazard"
                )));
            }
            let g = &mut grad.values[i.index()];
            for (slot, &j) in parents.iter().enumerate() {
                if let Some(t_j) = cascade.time_of(j) {
                    if t_j < t_i {
                        g[slot] -= t_i - t_j;
                        if pos > 0 {
                            g[slot] += 1.0 / hazard;
                        }
                    }
                }
            }
        }
        // Ignorant-neighbor terms: for infected j and ignorant m, the factor
        // exp(-alpha[j][m] (T - t_j)) contributes -(T - t_j).
        for (j, t_j) in cascade.infected() {
            for &m in alpha.children_of(j) {
                if !cascade.is_infected(m) {
                    let col = &alpha.parents[m.index()];
                    let slot = col.binary_search(&j).expect("children index is consistent");
                    grad.values[m.index()][slot] -= window_t - t_j;
                }
            }
        }
    }
    Ok(grad)
}

/// One destination node's concave subproblem:
/// `f(a) = -lin . a + sum_c ln(sum_{p in par_c} a_p)`.
struct ColumnProblem {
    lin: Vec<f64>,
    log_terms: Vec<Vec<u32>>,
}

impl ColumnProblem {
    fn objective(&self, a: &[f64]) -> f64 {
        let mut f = 0.0;
        for (x, l) in a.iter().zip(&self.lin) {
            f -= x * l;
        }
        for term in &self.log_terms {
            let h: f64 = term.iter().map(|&p| a[p as usize]).sum();
            if h <= 0.0 {
                return f64::NEG_INFINITY;
            }
            f += h.ln();
        }
        f
    }

    fn gradient(&self, a: &[f64], g: &mut [f64]) {
        for (slot, l) in self.lin.iter().enumerate() {
            g[slot] = -l;
        }
        for term in &self.log_terms {
            let h: f64 = term.iter().map(|&p| a[p as usize]).sum();
            let inv = 1.0 / h;
            for &p in term {
                g[p as usize] += inv;
            }
        }
    }
}

struct ColumnSolution {
    alpha: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

const INIT_RATE: f64 = 0.1;
const MAX_BACKTRACKS: usize = 80;

fn maximize_column(problem: &ColumnProblem, config: &SolverConfig) -> ColumnSolution {
    let m = problem.lin.len();
    let mut alpha = vec![INIT_RATE; m];
    let mut obj = problem.objective(&alpha);
    debug_assert!(obj.is_finite());
    let mut step = config.step_size;
    let mut grad = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut small_steps = 0u32;
    let mut iterations = 0;
    let mut converged = false;

    'outer: for it in 0..config.max_iters {
        iterations = it + 1;
        problem.gradient(&alpha, &mut grad);
        let mut backtracks = 0;
        loop {
            for p in 0..m {
                trial[p] = (alpha[p] + step * grad[p]).max(0.0);
            }
            let new_obj = problem.objective(&trial);
            // Accept only non-decreasing steps; -inf trials (all parents of
            // some cascade projected to zero) are rejected like any other.
            if new_obj >= obj {
                std::mem::swap(&mut alpha, &mut trial);
                let gain = new_obj - obj;
                obj = new_obj;
                // Flatness only counts on clean full steps; a step that had
                // to be halved says nothing about closeness to the optimum.
                if backtracks == 0 {
                    step = (step * 1.5).min(1e8);
                    if gain <= config.tolerance * (1.0 + obj.abs()) {
                        small_steps += 1;
                        if small_steps >= 2 {
                            converged = true;
                            break 'outer;
                        }
                    } else {
                        small_steps = 0;
                    }
                } else {
                    small_steps = 0;
                }
                break;
            }
            step *= 0.5;
            backtracks += 1;
            if backtracks > MAX_BACKTRACKS {
                // No ascent direction at representable step sizes.
                converged = true;
                break 'outer;
            }
        }
    }

    ColumnSolution { alpha, objective: obj, iterations, converged }
}

/// Outcome of [`infer_network`]: the pruned network plus convergence
/// diagnostics. `log_likelihood` is the training log-likelihood of the final
/// (unpruned) iterate; `converged` is false when some subproblem hit its
/// iteration cap, in which case the best iterate is still returned.
#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub network: Network,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Infers transmission rates from fully observed cascades by maximizing the
/// summed log-likelihood with per-destination projected gradient ascent,
/// then prunes rates at or below `config.prune_threshold`.
pub fn infer_network(
    cascades: &[Cascade],
    window_t: f64,
    config: &SolverConfig,
) -> Result<InferenceResult> {
    config.validate()?;
    if cascades.is_empty() {
        return Err(Error::EmptyInput("no training cascades".into()));
    }
    let n_nodes = cascades
        .iter()
        .map(|c| c.max_node_id().index() + 1)
        .max()
        .expect("cascades are non-empty");
    let mut appears = vec![false; n_nodes];
    for c in cascades {
        for (v, _) in c.infected() {
            appears[v.index()] = true;
        }
    }
    if let Some(v) = appears.iter().position(|a| !a) {
        return Err(Error::InvalidArgument(format!(
            "node {v} never appears in any training cascade"
        )));
    }
    let alpha = RateMatrix::from_cascades(n_nodes, cascades, 0.0)?;
    for c in cascades {
        check_cascade(&alpha, c, window_t)?;
    }

    // Assemble per-column problems. The linear coefficient of pair (j, i)
    // collects (t_i - t_j) over cascades where both are infected in order,
    // plus (T - t_j) over cascades where i stayed ignorant while j was
    // infected.
    let mut problems: Vec<ColumnProblem> = alpha
        .parents
        .iter()
        .map(|col| ColumnProblem { lin: vec![0.0; col.len()], log_terms: Vec::new() })
        .collect();
    for cascade in cascades {
        let order = cascade.by_time();
        for (pos, &(i, t_i)) in order.iter().enumerate() {
            let col = &alpha.parents[i.index()];
            let problem = &mut problems[i.index()];
            let mut term: Vec<u32> = Vec::new();
            for (slot, &j) in col.iter().enumerate() {
                if let Some(t_j) = cascade.time_of(j) {
                    if t_j < t_i {
                        problem.lin[slot] += t_i - t_j;
                        term.push(slot as u32);
                    }
                }
            }
            if pos > 0 {
                debug_assert!(!term.is_empty(), "every non-root has an in-order parent");
                problem.log_terms.push(term);
            }
        }
        for (j, t_j) in cascade.infected() {
            for &m in alpha.children_of(j) {
                if !cascade.is_infected(m) {
                    let slot = alpha.parents[m.index()]
                        .binary_search(&j)
                        .expect("children index is consistent");
                    problems[m.index()].lin[slot] += window_t - t_j;
                }
            }
        }
    }

    let mut edges = Vec::new();
    let mut log_likelihood = 0.0;
    let mut iterations = 0;
    let mut converged = true;
    for (dst, problem) in problems.iter().enumerate() {
        if problem.lin.is_empty() {
            continue;
        }
        let sol = maximize_column(problem, config);
        log_likelihood += sol.objective;
        iterations = iterations.max(sol.iterations);
        converged &= sol.converged;
        for (slot, &a) in sol.alpha.iter().enumerate() {
            if a > config.prune_threshold {
                edges.push(Edge {
                    src: alpha.parents[dst][slot],
                    dst: NodeId(dst as u32),
                    rate: a,
                });
            }
        }
    }
    let network = Network::new(n_nodes, edges)?;
    Ok(InferenceResult { network, log_likelihood, iterations, converged })
}
