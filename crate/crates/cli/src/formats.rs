//! Text file formats: networks as edge lists, cascades as timestamped node
//! lists with a node dictionary header.
//!
//! Network files hold one `src dst rate` line per edge; `#` starts a comment,
//! and the magic comment `# nodes N` pins the node count so isolated nodes
//! survive a round trip. Cascade files declare every node up front with
//! `# node <id> <label>` header lines, then carry one record per cascade:
//!
//! ```text
//! # node 0 siteA
//! # node 1 siteB
//! c0; 0:0, 1:1.5
//! ```
//!
//! Writers emit a canonical form (sorted headers, record entries sorted by
//! time) that re-parses to the same data; readers tolerate any order. Times
//! and rates are printed with Rust's shortest round-trip float formatting,
//! so write -> parse is lossless.

use std::collections::{BTreeMap, HashSet};

use sourcetrace::{Cascade, Edge, Network, NodeId};

/// Parse failure with enough position information to act on.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}:{line}:{col}: {msg}")]
    Syntax { path: String, line: usize, col: usize, msg: String },

    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

impl FormatError {
    fn syntax(path: &str, line: usize, col: usize, msg: impl Into<String>) -> Self {
        Self::Syntax { path: path.into(), line, col, msg: msg.into() }
    }
}

/// Node dictionary from a cascade file header: id to label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeDict {
    labels: BTreeMap<u32, String>,
}

impl NodeDict {
    /// Dictionary `0..n` with synthetic `n<i>` labels, for generated data.
    pub fn synthetic(n_nodes: usize) -> Self {
        let labels = (0..n_nodes as u32).map(|i| (i, format!("n{i}"))).collect();
        Self { labels }
    }

    pub fn insert(&mut self, id: u32, label: String) -> bool {
        self.labels.insert(id, label).is_none()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.labels.contains_key(&id)
    }

    pub fn label(&self, id: u32) -> Option<&str> {
        self.labels.get(&id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.labels.iter().map(|(&id, label)| (id, label.as_str()))
    }

    /// Ids declared but never carrying an infection in any record.
    pub fn undeclared_in(&self, records: &[CascadeRecord]) -> Vec<u32> {
        let mut seen: HashSet<u32> = HashSet::new();
        for r in records {
            seen.extend(r.times.iter().map(|&(v, _)| v));
        }
        self.labels.keys().copied().filter(|id| !seen.contains(id)).collect()
    }
}

/// One cascade as read from or written to a file. Times are absolute;
/// conversion to a [`Cascade`] happens when a window is known.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeRecord {
    pub id: String,
    pub times: Vec<(u32, f64)>,
}

impl CascadeRecord {
    /// Largest infection time in the record.
    pub fn max_time(&self) -> f64 {
        self.times.iter().map(|&(_, t)| t).fold(0.0, f64::max)
    }

    pub fn to_cascade(&self, window_t: f64) -> sourcetrace::Result<Cascade> {
        let times: BTreeMap<NodeId, f64> =
            self.times.iter().map(|&(v, t)| (NodeId(v), t)).collect();
        Cascade::new(times, window_t)
    }
}

/// Tokens of a line together with their 1-based byte columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

pub fn parse_network_file(path: &str, text: &str) -> Result<Network, FormatError> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut max_id = 0u32;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let toks: Vec<&str> = comment.split_whitespace().collect();
            if toks.first() == Some(&"nodes") {
                if toks.len() != 2 {
                    return Err(FormatError::syntax(path, lineno, 1, "expected '# nodes N'"));
                }
                let n: usize = toks[1].parse().map_err(|_| {
                    FormatError::syntax(path, lineno, 1, format!("invalid node count {:?}", toks[1]))
                })?;
                declared = Some(n);
            }
            continue;
        }
        let toks = tokens(line);
        if toks.len() != 3 {
            return Err(FormatError::syntax(
                path,
                lineno,
                toks.first().map_or(1, |&(c, _)| c),
                format!("expected 'src dst rate', found {} fields", toks.len()),
            ));
        }
        let src: u32 = toks[0].1.parse().map_err(|_| {
            FormatError::syntax(path, lineno, toks[0].0, format!("invalid node id {:?}", toks[0].1))
        })?;
        let dst: u32 = toks[1].1.parse().map_err(|_| {
            FormatError::syntax(path, lineno, toks[1].0, format!("invalid node id {:?}", toks[1].1))
        })?;
        let rate: f64 = toks[2].1.parse().map_err(|_| {
            FormatError::syntax(path, lineno, toks[2].0, format!("invalid rate {:?}", toks[2].1))
        })?;
        if src == dst {
            return Err(FormatError::syntax(path, lineno, toks[0].0, format!("self-loop on node {src}")));
        }
        if !rate.is_finite() || rate <= 0.0 {
            return Err(FormatError::syntax(path, lineno, toks[2].0, format!("rate must be > 0, got {rate}")));
        }
        if !seen.insert((src, dst)) {
            return Err(FormatError::syntax(path, lineno, toks[0].0, format!("duplicate edge {src} -> {dst}")));
        }
        max_id = max_id.max(src).max(dst);
        edges.push(Edge { src: NodeId(src), dst: NodeId(dst), rate });
    }
    let inferred = if edges.is_empty() { 1 } else { max_id as usize + 1 };
    let n_nodes = match declared {
        Some(n) => {
            if inferred > n.max(1) {
                return Err(FormatError::Invalid {
                    path: path.into(),
                    msg: format!("edge references node {max_id} but the file declares {n} nodes"),
                });
            }
            n.max(1)
        }
        None => inferred,
    };
    Network::new(n_nodes, edges)
        .map_err(|e| FormatError::Invalid { path: path.into(), msg: e.to_string() })
}

pub fn write_network_file(network: &Network) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "# nodes {}", network.n_nodes());
    for e in network.edges() {
        let _ = writeln!(out, "{} {} {}", e.src, e.dst, e.rate);
    }
    out
}

pub fn parse_cascade_file(
    path: &str,
    text: &str,
) -> Result<(NodeDict, Vec<CascadeRecord>), FormatError> {
    let mut dict = NodeDict::default();
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let rest = comment.trim_start();
            if let Some(decl) = rest.strip_prefix("node ").or(rest.strip_prefix("node\t")) {
                let toks = tokens(decl);
                if toks.len() < 2 {
                    return Err(FormatError::syntax(path, lineno, 1, "expected '# node <id> <label>'"));
                }
                let id: u32 = toks[0].1.parse().map_err(|_| {
                    FormatError::syntax(path, lineno, 1, format!("invalid node id {:?}", toks[0].1))
                })?;
                let label = decl[toks[1].0 - 1..].trim().to_string();
                if !dict.insert(id, label) {
                    return Err(FormatError::syntax(path, lineno, 1, format!("duplicate node id {id}")));
                }
            }
            continue;
        }
        let Some((id_part, rest)) = line.split_once(';') else {
            return Err(FormatError::syntax(path, lineno, 1, "expected 'cascade_id; node:time, ...'"));
        };
        let id = id_part.trim();
        if id.is_empty() {
            return Err(FormatError::syntax(path, lineno, 1, "empty cascade id"));
        }
        let mut times: Vec<(u32, f64)> = Vec::new();
        let mut seen: HashSet<u32> = HashSet::new();
        let mut col = id_part.len() + 2;
        for pair in rest.split(',') {
            let pair_col = col + (pair.len() - pair.trim_start().len());
            col += pair.len() + 1;
            let entry = pair.trim();
            if entry.is_empty() {
                return Err(FormatError::syntax(path, lineno, pair_col, "empty node:time entry"));
            }
            let Some((node_s, time_s)) = entry.split_once(':') else {
                return Err(FormatError::syntax(path, lineno, pair_col, format!("expected 'node:time', found {entry:?}")));
            };
            let node: u32 = node_s.trim().parse().map_err(|_| {
                FormatError::syntax(path, lineno, pair_col, format!("invalid node id {:?}", node_s.trim()))
            })?;
            let time: f64 = time_s.trim().parse().map_err(|_| {
                FormatError::syntax(path, lineno, pair_col, format!("invalid time {:?}", time_s.trim()))
            })?;
            if !dict.contains(node) {
                return Err(FormatError::syntax(path, lineno, pair_col, format!("node {node} is not declared in the header")));
            }
            if !time.is_finite() || time < 0.0 {
                return Err(FormatError::syntax(path, lineno, pair_col, format!("time must be finite and >= 0, got {time}")));
            }
            if !seen.insert(node) {
                return Err(FormatError::syntax(path, lineno, pair_col, format!("node {node} appears twice in cascade {id:?}")));
            }
            times.push((node, time));
        }
        if times.is_empty() {
            return Err(FormatError::syntax(path, lineno, 1, format!("cascade {id:?} has no infected nodes")));
        }
        records.push(CascadeRecord { id: id.to_string(), times });
    }
    Ok((dict, records))
}

pub fn write_cascade_file(dict: &NodeDict, records: &[CascadeRecord]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for (id, label) in dict.iter() {
        let _ = writeln!(out, "# node {id} {label}");
    }
    for record in records {
        debug_assert!(!record.id.contains(';') && !record.id.contains('\n'));
        let mut times = record.times.clone();
        times.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let body: Vec<String> = times.iter().map(|&(v, t)| format!("{v}:{t}")).collect();
        let _ = writeln!(out, "{}; {}", record.id, body.join(", "));
    }
    out
}
