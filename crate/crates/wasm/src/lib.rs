//! Browser demo bindings: build a random diffusion network, spread cascades
//! from a hidden source, reveal a slice of the infections, and rank the
//! hidden candidates.
//!
//! Every method returns a JSON string (errors come back as
//! `{"error": "..."}`), so the page needs nothing beyond `JSON.parse`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sourcetrace::derive_seed;
use sourcetrace::evaluate::{random_network, Regime};
use sourcetrace::localize::rank_sources;
use sourcetrace::simulate::{observe_final, observe_random, simulate_cascade};
use sourcetrace::{Cascade, Network, NodeId, PartialObservation};

const SIM_STREAM: u64 = 1;
const OBS_STREAM: u64 = 2;
const RANK_STREAM: u64 = 3;

#[derive(Serialize)]
struct EdgeOut {
    src: u32,
    dst: u32,
    rate: f64,
}

#[derive(Serialize)]
struct NetworkOut {
    n_nodes: usize,
    edges: Vec<EdgeOut>,
}

#[derive(Serialize)]
struct InfectionOut {
    node: u32,
    time: f64,
}

#[derive(Serialize)]
struct CascadeOut {
    window_end: f64,
    times: Vec<InfectionOut>,
}

#[derive(Serialize)]
struct ObservationOut {
    cascade: usize,
    observed: Vec<InfectionOut>,
}

#[derive(Serialize)]
struct RankedOut {
    rank: usize,
    node: u32,
    sse: f64,
    coverage: f64,
    start_times: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct LocateOut {
    true_source: u32,
    true_starts: Vec<f64>,
    rank_of_true_source: Option<usize>,
    n_candidates: usize,
    ranking: Vec<RankedOut>,
}

fn ok(value: &impl Serialize) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| error(&e.to_string()))
}

fn error(msg: &str) -> String {
    format!("{{\"error\":{}}}", serde_json::to_string(msg).unwrap())
}

/// One interactive scenario: a network plus the cascades and observations
/// built on top of it so far.
#[wasm_bindgen]
pub struct Demo {
    network: Network,
    source: Option<NodeId>,
    cascades: Vec<Cascade>,
    true_starts: Vec<f64>,
    observations: Vec<PartialObservation>,
}

#[wasm_bindgen]
impl Demo {
    /// Builds a random directed network with exponential transmission rates
    /// drawn uniformly from [0.5, 2].
    #[wasm_bindgen(constructor)]
    pub fn new(n_nodes: u32, edge_density: f64, seed: u32) -> Demo {
        let n = n_nodes.clamp(2, 192) as usize;
        let density = if edge_density.is_finite() { edge_density.clamp(0.0, 1.0) } else { 0.1 };
        let network = random_network(n, density, (0.5, 2.0), u64::from(seed))
            .expect("clamped parameters are always valid");
        Demo { network, source: None, cascades: Vec::new(), true_starts: Vec::new(), observations: Vec::new() }
    }

    pub fn network_json(&self) -> String {
        let out = NetworkOut {
            n_nodes: self.network.n_nodes(),
            edges: self
                .network
                .edges()
                .iter()
                .map(|e| EdgeOut { src: e.src.0, dst: e.dst.0, rate: e.rate })
                .collect(),
        };
        ok(&out)
    }

    /// Picks a hidden source and spreads `n_cascades` cascades from it with
    /// distinct random start times. Returns the full infection records for
    /// animation; the source itself is whatever node is earliest.
    pub fn simulate(&mut self, n_cascades: u32, window: f64, seed: u32) -> String {
        let n_cascades = n_cascades.clamp(1, 16);
        let window = if window.is_finite() && window > 0.0 { window } else { 3.0 };
        let seed = u64::from(seed);
        let n = self.network.n_nodes() as u64;
        self.cascades.clear();
        self.true_starts.clear();
        self.observations.clear();

        // Find a source whose cascades reach beyond itself.
        let mut source = None;
        'outer: for attempt in 0..64u64 {
            let candidate = NodeId((derive_seed(seed, SIM_STREAM, attempt) % n) as u32);
            for probe in 0..8 {
                let s = derive_seed(seed, SIM_STREAM, attempt << 8 | probe);
                if let Ok(c) = simulate_cascade(&self.network, candidate, 0.0, window, s) {
                    if c.n_infected() >= 3 {
                        source = Some(candidate);
                        break 'outer;
                    }
                }
            }
        }
        let Some(source) = source else {
            return error("no node spreads anywhere at this density; raise it and rebuild");
        };
        self.source = Some(source);

        let mut out = Vec::new();
        for j in 0..n_cascades as u64 {
            let mut chosen = None;
            for attempt in 0..50u64 {
                let s = derive_seed(seed, SIM_STREAM, (1 << 40) | j << 16 | attempt);
                let t_start = (derive_seed(s, SIM_STREAM, 0) % 512) as f64 / 256.0;
                if let Ok(c) = simulate_cascade(&self.network, source, t_start, window, s) {
                    if c.n_infected() >= 3 {
                        chosen = Some((c, t_start));
                        break;
                    }
                }
            }
            let Some((cascade, t_start)) = chosen else {
                return error("the source kept failing to spread; try another seed");
            };
            out.push(CascadeOut {
                window_end: cascade.window_t(),
                times: cascade
                    .infected()
                    .map(|(v, t)| InfectionOut { node: v.0, time: t })
                    .collect(),
            });
            self.cascades.push(cascade);
            self.true_starts.push(t_start);
        }
        ok(&out)
    }

    /// Reveals a fraction of each cascade's infections under the chosen
    /// regime ("random" or "final"). The source is never revealed.
    pub fn observe(&mut self, fraction: f64, regime: &str, seed: u32) -> String {
        if self.cascades.is_empty() {
            return error("simulate some cascades first");
        }
        let fraction = if fraction.is_finite() { fraction.clamp(0.05, 1.0) } else { 0.1 };
        let regime = match regime.parse::<Regime>() {
            Ok(r) => r,
            Err(e) => return error(&e.to_string()),
        };
        let n = self.network.n_nodes();
        self.observations.clear();
        let mut out = Vec::new();
        for (j, cascade) in self.cascades.iter().enumerate() {
            let obs = match regime {
                Regime::Random => observe_random(
                    cascade,
                    n,
                    fraction,
                    derive_seed(u64::from(seed), OBS_STREAM, j as u64),
                ),
                Regime::Final => observe_final(cascade, n, fraction),
            };
            match obs {
                Ok(obs) => {
                    out.push(ObservationOut {
                        cascade: j,
                        observed: obs
                            .observed()
                            .iter()
                            .map(|(&v, &t)| InfectionOut { node: v.0, time: t })
                            .collect(),
                    });
                    self.observations.push(obs);
                }
                Err(e) => return error(&e.to_string()),
            }
        }
        ok(&out)
    }

    /// Ranks every hidden candidate source from the current observations and
    /// reveals the truth for scoring.
    pub fn locate(&self, n_samples: u32, seed: u32) -> String {
        if self.observations.is_empty() {
            return error("observe the cascades first");
        }
        let n_samples = n_samples.clamp(10, 2000) as usize;
        let ranking = match rank_sources(
            &self.network,
            &self.observations,
            n_samples,
            derive_seed(u64::from(seed), RANK_STREAM, 0),
        ) {
            Ok(r) => r,
            Err(e) => return error(&e.to_string()),
        };
        let true_source = self.source.expect("observations imply cascades");
        let out = LocateOut {
            true_source: true_source.0,
            true_starts: self.true_starts.clone(),
            rank_of_true_source: ranking.position_of(true_source),
            n_candidates: ranking.len(),
            ranking: ranking
                .scores()
                .iter()
                .enumerate()
                .map(|(i, s)| RankedOut {
                    rank: i + 1,
                    node: s.candidate.0,
                    sse: s.sse,
                    coverage: s.coverage,
                    start_times: s.start_times.clone(),
                })
                .collect(),
        };
        ok(&out)
    }
}
