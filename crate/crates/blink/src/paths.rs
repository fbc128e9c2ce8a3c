//! Minimal-path enumeration under prefix-prunable filters.
//!
//! Works on the weight-split graph so node weights take part through their
//! auxiliary edges. Two filters bound the search, and both only shrink as a
//! prefix grows, so a prefix is abandoned exactly when no extension could
//! qualify:
//!
//! * strength: the path's edge-weight product must stay at or above
//!   1 - exp(-t1), i.e. the path score must reach t1;
//! * fan-out: the product over traversal steps of
//!   ln(1 - w_e) / sum over sibling out-edges ln(1 - w_f) must stay at or
//!   above t2. The factors at one node sum to 1, which caps the number of
//!   surviving depth-k prefixes at 1/t2 regardless of graph size.
//!
//! One traversal from A records a qualified path to every original node it
//! passes through, so a single sweep serves all targets.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::BlinkError;
use crate::graph::{EdgeId, NodeId, SplitGraph};
use crate::{score_from_probability, COMPLEMENT_FLOOR};

/// A cycle-free path with its contribution data. `nodes` are original node
/// ids; `edges` are split-graph edge ids and include auxiliary node-weight
/// edges, which `length` does not count.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalPath {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    pub weight_product: f64,
    pub nominal: f64,
    pub length: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PathFilterParams {
    pub t1: f64,
    pub t2: f64,
    pub max_paths_per_source: usize,
}

impl Default for PathFilterParams {
    fn default() -> Self {
        PathFilterParams {
            t1: 1e-4,
            t2: 2e-6,
            max_paths_per_source: 500_000,
        }
    }
}

/// Score a path contributes on its own: -ln(1 - product of its weights).
pub fn nominal_contribution(weights: &[f64]) -> f64 {
    score_from_probability(weights.iter().product())
}

struct Search<'a> {
    split: &'a SplitGraph,
    fan_factor: Vec<f64>,
    min_product: f64,
    t2: f64,
    budget: usize,
    targets: Option<&'a BTreeSet<NodeId>>,
    on_path: Vec<bool>,
    node_seq: Vec<NodeId>,
    edge_seq: Vec<EdgeId>,
    aux_on_path: usize,
    found: BTreeMap<NodeId, Vec<MinimalPath>>,
    retained: usize,
}

impl Search<'_> {
    fn record(&mut self, at: NodeId, product: f64) -> Result<(), BlinkError> {
        if let Some(ts) = self.targets {
            if !ts.contains(&at) {
                return Ok(());
            }
        }
        if self.retained == self.budget {
            return Err(BlinkError::BudgetExceeded { max: self.budget });
        }
        self.retained += 1;
        self.found.entry(at).or_default().push(MinimalPath {
            nodes: self.node_seq.clone(),
            edges: self.edge_seq.clone(),
            weight_product: product,
            nominal: score_from_probability(product),
            length: self.edge_seq.len() - self.aux_on_path,
        });
        Ok(())
    }

    fn dfs(&mut self, at: NodeId, product: f64, fan: f64) -> Result<(), BlinkError> {
        for &e in self.split.graph.out_edges(at) {
            let edge = self.split.graph.edge(e);
            let aux = self.split.is_aux_edge(e);
            if !aux && self.on_path[edge.dst.index()] {
                continue;
            }
            let product = product * edge.weight;
            if product < self.min_product {
                continue;
            }
            let fan = fan * self.fan_factor[e.index()];
            if fan < self.t2 {
                continue;
            }
            self.edge_seq.push(e);
            if aux {
                self.aux_on_path += 1;
                self.dfs(edge.dst, product, fan)?;
                self.aux_on_path -= 1;
            } else {
                self.on_path[edge.dst.index()] = true;
                self.node_seq.push(edge.dst);
                self.record(edge.dst, product)?;
                self.dfs(edge.dst, product, fan)?;
                self.node_seq.pop();
                self.on_path[edge.dst.index()] = false;
            }
            self.edge_seq.pop();
        }
        Ok(())
    }
}

/// Depth-first enumeration of qualifying minimal paths out of `a`, grouped
/// by endpoint. With `targets`, only paths ending there are retained (the
/// traversal itself is unchanged). Paths per target come back sorted by
/// descending nominal, ties by node sequence.
pub fn enumerate_minimal_paths(
    split: &SplitGraph,
    a: NodeId,
    params: &PathFilterParams,
    targets: Option<&BTreeSet<NodeId>>,
) -> Result<BTreeMap<NodeId, Vec<MinimalPath>>, BlinkError> {
    let g = &split.graph;
    // Per-edge share of its source's fan-out, in log-complement mass.
    let mut fan_factor = vec![1.0f64; g.edge_count()];
    for v in g.nodes() {
        let total: f64 = g
            .out_edges(v)
            .iter()
            .map(|&e| (1.0 - g.edge(e).weight).max(COMPLEMENT_FLOOR).ln())
            .sum();
        if total < 0.0 {
            for &e in g.out_edges(v) {
                fan_factor[e.index()] =
                    (1.0 - g.edge(e).weight).max(COMPLEMENT_FLOOR).ln() / total;
            }
        }
    }
    let mut search = Search {
        split,
        fan_factor,
        min_product: -(-params.t1).exp_m1(),
        t2: params.t2,
        budget: params.max_paths_per_source,
        targets,
        on_path: vec![false; g.node_count()],
        node_seq: vec![a],
        edge_seq: Vec::new(),
        aux_on_path: 0,
        found: BTreeMap::new(),
        retained: 0,
    };
    search.on_path[a.index()] = true;
    search.dfs(split.out_node(a), 1.0, 1.0)?;
    let mut found = search.found;
    for paths in found.values_mut() {
        paths.sort_by(|p, q| {
            q.nominal
                .partial_cmp(&p.nominal)
                .expect("finite nominals")
                .then_with(|| p.nodes.cmp(&q.nodes))
        });
        paths.dedup_by(|p, q| p.nodes == q.nodes);
    }
    Ok(found)
}

/// Strongest single path from a to b: maximizes the weight product via a
/// least-cost search over edge costs -ln(w). Used as the fallback evidence
/// for targets no enumerated path reaches.
pub fn best_single_path(
    split: &SplitGraph,
    a: NodeId,
    b: NodeId,
) -> Result<MinimalPath, BlinkError> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    if a == b {
        return Err(BlinkError::InvalidInput(
            "best path needs distinct endpoints".into(),
        ));
    }
    let g = &split.graph;
    let start = split.out_node(a);
    let goal = split.in_node(b);
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut parent: Vec<Option<EdgeId>> = vec![None; g.node_count()];
    // f64 cost ordered through its bit pattern; valid for non-negative
    // finite costs.
    let key = |c: f64| c.max(0.0).to_bits();
    let mut heap = BinaryHeap::new();
    dist[start.index()] = 0.0;
    heap.push(Reverse((key(0.0), start)));
    while let Some(Reverse((k, v))) = heap.pop() {
        if k > key(dist[v.index()]) {
            continue;
        }
        if v == goal {
            break;
        }
        for &e in g.out_edges(v) {
            let edge = g.edge(e);
            let nd = dist[v.index()] - edge.weight.ln();
            if nd < dist[edge.dst.index()] {
                dist[edge.dst.index()] = nd;
                parent[edge.dst.index()] = Some(e);
                heap.push(Reverse((key(nd), edge.dst)));
            }
        }
    }
    if dist[goal.index()].is_infinite() {
        return Err(BlinkError::Unreachable);
    }
    let mut edges = Vec::new();
    let mut at = goal;
    while at != start {
        let e = parent[at.index()].expect("parent chain reaches start");
        edges.push(e);
        at = g.edge(e).src;
    }
    edges.reverse();
    let mut nodes = vec![a];
    let mut product = 1.0;
    let mut length = 0;
    for &e in &edges {
        product *= g.edge(e).weight;
        if !split.is_aux_edge(e) {
            nodes.push(g.edge(e).dst);
            length += 1;
        }
    }
    Ok(MinimalPath {
        nodes,
        edges,
        weight_product: product,
        nominal: score_from_probability(product),
        length,
    })
}
