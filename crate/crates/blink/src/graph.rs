//! Weighted directed graphs with existence probabilities on edges and nodes.
//!
//! Every edge and every node carries a weight in (0, 1]: the probability that
//! the element is present in a random instance of the graph, drawn
//! independently per element. All analysis code in this crate works on the
//! normalized form produced by [`GraphBuilder::build`]: parallel edges merged,
//! no self loops, node ids dense.
//!
//! Node names are interned to dense `u32` ids at load time. Ids are assigned
//! in first-seen order and double as the canonical tie-break order everywhere
//! a deterministic ordering is needed.

use std::collections::HashMap;

use crate::error::BlinkError;

/// Dense node identifier. Ordering is the canonical deterministic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct NodeId(pub u32);

/// Dense edge identifier, assigned in (src, dst) lexicographic order by the
/// builder so that iteration over edges is reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct EdgeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

/// Immutable weighted digraph. Construct through [`GraphBuilder`]; the
/// invariants below are established once and relied on everywhere:
///
/// - at most one edge per ordered node pair (parallel inputs merged),
/// - no self loops,
/// - all weights in (0, 1],
/// - adjacency lists sorted by neighbor id.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    names: Vec<String>,
    name_index: HashMap<String, NodeId>,
    node_weights: Vec<f64>,
    edges: Vec<Edge>,
    out: Vec<Vec<EdgeId>>,
    inc: Vec<Vec<EdgeId>>,
}

impl WeightedGraph {
    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.names[v.index()]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.name_index.get(name).copied()
    }

    pub fn node_weight(&self, v: NodeId) -> f64 {
        self.node_weights[v.index()]
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e.index()]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out[v.index()]
    }

    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.inc[v.index()]
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out[v.index()].len()
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.inc[v.index()].len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len() as u32).map(NodeId)
    }

    /// Looks up the edge src -> dst, if present. Binary search over the
    /// sorted out list.
    pub fn find_edge(&self, src: NodeId, dst: NodeId) -> Option<EdgeId> {
        let list = &self.out[src.index()];
        list.binary_search_by(|e| self.edges[e.index()].dst.cmp(&dst))
            .ok()
            .map(|i| list[i])
    }

    /// True when some node weight is below 1, i.e. node existence actually
    /// matters for reachability.
    pub fn has_fallible_nodes(&self) -> bool {
        self.node_weights.iter().any(|&w| w < 1.0)
    }
}

/// Probability that at least one of two independent parallel edges is
/// present. This is the normalization rule for parallel inputs and the reason
/// edge multiplicity never needs to be represented: x parallel edges of
/// weight w collapse to a single edge of weight 1 - (1 - w)^x.
#[inline]
pub fn merge_parallel(w1: f64, w2: f64) -> f64 {
    1.0 - (1.0 - w1) * (1.0 - w2)
}

fn check_weight(w: f64, what: &str) -> Result<(), BlinkError> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(BlinkError::InvalidWeight {
            what: what.to_string(),
            value: w,
        });
    }
    Ok(())
}

/// Mutable accumulator for graph construction. Interns names, merges
/// parallel edges eagerly, drops self loops, rejects weights outside (0, 1].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    names: Vec<String>,
    name_index: HashMap<String, NodeId>,
    node_weights: Vec<f64>,
    edge_weights: HashMap<(NodeId, NodeId), f64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `name`, creating the node with weight 1 on first sight.
    pub fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.name_index.get(name) {
            return id;
        }
        let id = NodeId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.name_index.insert(name.to_string(), id);
        self.node_weights.push(1.0);
        id
    }

    /// Interns a generated name, adding primes until it does not collide
    /// with anything already present.
    pub fn intern_fresh(&mut self, base: &str) -> NodeId {
        let mut candidate = base.to_string();
        while self.name_index.contains_key(&candidate) {
            candidate.push('\'');
        }
        self.intern(&candidate)
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn set_node_weight(&mut self, v: NodeId, w: f64) -> Result<(), BlinkError> {
        check_weight(w, "node weight")?;
        self.node_weights[v.index()] = w;
        Ok(())
    }

    /// Adds a directed edge, merging with any existing edge on the same
    /// ordered pair. Self loops are dropped: they can never lie on a path
    /// between distinct nodes.
    pub fn add_edge(&mut self, src: NodeId, dst: NodeId, w: f64) -> Result<(), BlinkError> {
        check_weight(w, "edge weight")?;
        if src == dst {
            return Ok(());
        }
        self.edge_weights
            .entry((src, dst))
            .and_modify(|cur| *cur = merge_parallel(*cur, w))
            .or_insert(w);
        Ok(())
    }

    /// An undirected input edge becomes two directed edges with the same
    /// weight value, each blinking independently.
    pub fn add_undirected_edge(&mut self, a: NodeId, b: NodeId, w: f64) -> Result<(), BlinkError> {
        self.add_edge(a, b, w)?;
        self.add_edge(b, a, w)
    }

    /// Expands one hyperedge: an auxiliary node whose weight is the
    /// hyperedge weight, joined to and from every member by weight-1 edges.
    /// All member-to-member connections through it live or die together with
    /// the auxiliary node.
    pub fn add_hyperedge(&mut self, members: &[NodeId], weight: f64) -> Result<NodeId, BlinkError> {
        check_weight(weight, "hyperedge weight")?;
        let mut distinct: Vec<NodeId> = members.to_vec();
        distinct.sort();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(BlinkError::InvalidInput(
                "hyperedge needs at least two distinct members".to_string(),
            ));
        }
        let aux = self.intern_fresh(&format!("he#{}", self.names.len()));
        self.node_weights[aux.index()] = weight;
        for &m in &distinct {
            self.add_edge(m, aux, 1.0)?;
            self.add_edge(aux, m, 1.0)?;
        }
        Ok(aux)
    }

    pub fn build(self) -> WeightedGraph {
        let n = self.names.len();
        let mut pairs: Vec<((NodeId, NodeId), f64)> = self.edge_weights.into_iter().collect();
        pairs.sort_by_key(|&(k, _)| k);
        let mut edges = Vec::with_capacity(pairs.len());
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for ((src, dst), weight) in pairs {
            let id = EdgeId(edges.len() as u32);
            edges.push(Edge { src, dst, weight });
            out[src.index()].push(id);
            inc[dst.index()].push(id);
        }
        for list in &mut inc {
            list.sort_by_key(|e| edges[e.index()].src);
        }
        WeightedGraph {
            names: self.names,
            name_index: self.name_index,
            node_weights: self.node_weights,
            edges,
            out,
            inc,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HyperedgeRecord {
    pub weight: f64,
    pub members: Vec<String>,
}

/// Builds a graph from hyperedge records alone. Members get node weight 1;
/// every record becomes an auxiliary node carrying the record weight.
pub fn expand_hyperedges(records: &[HyperedgeRecord]) -> Result<WeightedGraph, BlinkError> {
    let mut b = GraphBuilder::new();
    for rec in records {
        let members: Vec<NodeId> = rec.members.iter().map(|m| b.intern(m)).collect();
        b.add_hyperedge(&members, rec.weight)?;
    }
    Ok(b.build())
}

/// Eliminates pass-through nodes. A node y outside `preserve` whose only
/// incident edges are x -> y and y -> z is replaced by a direct edge x -> z
/// of weight w(x,y) * w(y,z) * node_weight(y); parallel edges arising from a
/// splice are merged immediately and the rule is applied again until nothing
/// changes. Reachability probabilities between preserved nodes are unchanged.
///
/// Eliminated nodes stay in the id space as isolated nodes so that ids in
/// `preserve` remain valid for the caller.
pub fn series_reduce(g: &WeightedGraph, preserve: &[NodeId]) -> WeightedGraph {
    let n = g.node_count();
    let mut keep = vec![false; n];
    for &p in preserve {
        keep[p.index()] = true;
    }
    let mut weights: HashMap<(NodeId, NodeId), f64> =
        g.edges().iter().map(|e| ((e.src, e.dst), e.weight)).collect();
    let mut in_of: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut out_of: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for e in g.edges() {
        out_of[e.src.index()].push(e.dst);
        in_of[e.dst.index()].push(e.src);
    }

    let mut changed = true;
    while changed {
        changed = false;
        for y in 0..n {
            if keep[y] || in_of[y].len() != 1 || out_of[y].len() != 1 {
                continue;
            }
            let x = in_of[y][0];
            let z = out_of[y][0];
            let yid = NodeId(y as u32);
            let w_in = weights.remove(&(x, yid)).expect("tracked edge");
            let w_out = weights.remove(&(yid, z)).expect("tracked edge");
            in_of[y].clear();
            out_of[y].clear();
            out_of[x.index()].retain(|&d| d != yid);
            in_of[z.index()].retain(|&s| s != yid);
            if x != z {
                let w_new = w_in * w_out * g.node_weight(yid);
                match weights.get_mut(&(x, z)) {
                    Some(cur) => *cur = merge_parallel(*cur, w_new),
                    None => {
                        weights.insert((x, z), w_new);
                        out_of[x.index()].push(z);
                        in_of[z.index()].push(x);
                    }
                }
            }
            changed = true;
        }
    }

    let mut b = GraphBuilder::new();
    for v in g.nodes() {
        let id = b.intern(g.node_name(v));
        debug_assert_eq!(id, v);
        b.set_node_weight(id, g.node_weight(v)).expect("valid weight");
    }
    let mut pairs: Vec<((NodeId, NodeId), f64)> = weights.into_iter().collect();
    pairs.sort_by_key(|&(k, _)| k);
    for ((src, dst), w) in pairs {
        b.add_edge(src, dst, w).expect("valid weight");
    }
    b.build()
}

/// Result of pushing node weights into auxiliary edges. Node ids of the
/// original graph stay valid: an original node keeps its id as the entry
/// side, and a fresh companion node takes over its outgoing edges when the
/// node had to be split.
#[derive(Debug, Clone)]
pub struct SplitGraph {
    pub graph: WeightedGraph,
    /// Number of nodes of the original graph; ids below this bound are
    /// original nodes, ids at or above it are companions.
    pub original_nodes: usize,
    /// Where paths leaving original node v start: v itself, or its
    /// companion when v was split.
    out_node: Vec<NodeId>,
    /// Marks the auxiliary entry -> companion edges that carry node weights.
    aux_edge: Vec<bool>,
}

impl SplitGraph {
    /// Entry point for paths arriving at original node v. Always v itself.
    #[inline]
    pub fn in_node(&self, v: NodeId) -> NodeId {
        v
    }

    /// Exit point for paths leaving original node v.
    #[inline]
    pub fn out_node(&self, v: NodeId) -> NodeId {
        self.out_node[v.index()]
    }

    /// True for the synthetic edges that stand in for node weights. Path
    /// lengths are counted over real edges only.
    #[inline]
    pub fn is_aux_edge(&self, e: EdgeId) -> bool {
        self.aux_edge[e.index()]
    }

    #[inline]
    pub fn is_original(&self, v: NodeId) -> bool {
        v.index() < self.original_nodes
    }
}

/// Rewrites node weights as edge weights. A node v with weight below 1 that
/// can appear in the interior of a path (it has both in- and out-edges) is
/// split: v keeps its incoming edges, a fresh companion takes the outgoing
/// ones, and a single auxiliary edge v -> companion carries the node weight.
/// Nodes that can only ever be endpoints keep their id unsplit; endpoint
/// existence is never required, so dropping their weight is exact.
///
/// Reachability probabilities between original nodes are preserved when
/// sources are mapped through [`SplitGraph::out_node`] and targets through
/// [`SplitGraph::in_node`].
pub fn split_node_weights(g: &WeightedGraph) -> SplitGraph {
    let n = g.node_count();
    let mut b = GraphBuilder::new();
    for v in g.nodes() {
        let id = b.intern(g.node_name(v));
        debug_assert_eq!(id, v);
    }
    let mut out_node: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
    let mut aux_pairs: Vec<(NodeId, NodeId, f64)> = Vec::new();
    for v in g.nodes() {
        let w = g.node_weight(v);
        if w < 1.0 && g.in_degree(v) > 0 && g.out_degree(v) > 0 {
            let base = format!("{}@out", g.node_name(v));
            let companion = b.intern_fresh(&base);
            out_node[v.index()] = companion;
            aux_pairs.push((v, companion, w));
        }
    }
    for e in g.edges() {
        b.add_edge(out_node[e.src.index()], e.dst, e.weight)
            .expect("valid weight");
    }
    for &(v, companion, w) in &aux_pairs {
        b.add_edge(v, companion, w).expect("valid weight");
    }
    let graph = b.build();
    let mut aux_edge = vec![false; graph.edge_count()];
    for &(v, companion, _) in &aux_pairs {
        let e = graph.find_edge(v, companion).expect("aux edge present");
        aux_edge[e.index()] = true;
    }
    SplitGraph {
        graph,
        original_nodes: n,
        out_node,
        aux_edge,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph_from(edges: &[(&str, &str, f64)]) -> WeightedGraph {
        let mut b = GraphBuilder::new();
        for &(s, d, w) in edges {
            let s = b.intern(s);
            let d = b.intern(d);
            b.add_edge(s, d, w).unwrap();
        }
        b.build()
    }

    #[test]
    fn parallel_edges_merge_at_load() {
        let g = graph_from(&[("a", "b", 0.5), ("a", "b", 0.5)]);
        assert_eq!(g.edge_count(), 1);
        let e = g.find_edge(g.node_id("a").unwrap(), g.node_id("b").unwrap());
        assert!((g.edge(e.unwrap()).weight - 0.75).abs() < 1e-15);
    }

    #[test]
    fn merge_with_certain_edge_is_certain() {
        assert_eq!(merge_parallel(0.3, 1.0), 1.0);
    }

    #[test]
    fn zero_weight_rejected() {
        let mut b = GraphBuilder::new();
        let a = b.intern("a");
        let c = b.intern("b");
        assert!(b.add_edge(a, c, 0.0).is_err());
        assert!(b.set_node_weight(a, 0.0).is_err());
        assert!(b.add_edge(a, c, 1.5).is_err());
    }

    #[test]
    fn self_loops_dropped() {
        let g = graph_from(&[("a", "a", 0.5), ("a", "b", 0.5)]);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn series_chain_collapses() {
        let g = graph_from(&[("a", "y", 0.5), ("y", "b", 0.5)]);
        let a = g.node_id("a").unwrap();
        let bn = g.node_id("b").unwrap();
        let r = series_reduce(&g, &[a, bn]);
        assert_eq!(r.out_degree(a) + r.in_degree(a), 1);
        let e = r.find_edge(a, bn).unwrap();
        assert!((r.edge(e).weight - 0.25).abs() < 1e-15);
    }

    #[test]
    fn series_chain_picks_up_node_weight() {
        let mut b = GraphBuilder::new();
        let a = b.intern("a");
        let y = b.intern("y");
        let t = b.intern("b");
        b.add_edge(a, y, 0.5).unwrap();
        b.add_edge(y, t, 0.5).unwrap();
        b.set_node_weight(y, 0.8).unwrap();
        let g = b.build();
        let r = series_reduce(&g, &[a, t]);
        let e = r.find_edge(a, t).unwrap();
        assert!((r.edge(e).weight - 0.2).abs() < 1e-15);
    }

    #[test]
    fn series_splice_merges_into_existing_edge() {
        let g = graph_from(&[("a", "y", 0.5), ("y", "b", 0.5), ("a", "b", 0.5)]);
        let a = g.node_id("a").unwrap();
        let t = g.node_id("b").unwrap();
        let r = series_reduce(&g, &[a, t]);
        assert_eq!(r.edge_count(), 1);
        let e = r.find_edge(a, t).unwrap();
        // 1 - (1 - 0.25)(1 - 0.5)
        assert!((r.edge(e).weight - 0.625).abs() < 1e-15);
    }

    #[test]
    fn back_and_forth_pair_does_not_create_loop() {
        // y's only edges are a -> y and y -> a; the splice would be a self
        // loop, which must simply disappear.
        let g = graph_from(&[("a", "y", 0.5), ("y", "a", 0.5), ("a", "b", 0.5)]);
        let a = g.node_id("a").unwrap();
        let t = g.node_id("b").unwrap();
        let r = series_reduce(&g, &[a, t]);
        assert_eq!(r.edge_count(), 1);
        assert!(r.find_edge(a, t).is_some());
    }

    #[test]
    fn split_keeps_pure_source_and_sink_unsplit() {
        let mut b = GraphBuilder::new();
        let a = b.intern("a");
        let c = b.intern("c");
        let t = b.intern("b");
        b.add_edge(a, c, 0.9).unwrap();
        b.add_edge(c, t, 0.9).unwrap();
        b.set_node_weight(a, 0.5).unwrap();
        b.set_node_weight(c, 0.5).unwrap();
        b.set_node_weight(t, 0.5).unwrap();
        let g = b.build();
        let split = split_node_weights(&g);
        // only c sits in path interiors, so only c gets a companion
        assert_eq!(split.graph.node_count(), 4);
        assert_eq!(split.out_node(a), a);
        assert_eq!(split.out_node(t), t);
        assert_ne!(split.out_node(c), c);
        let aux = split.graph.find_edge(c, split.out_node(c)).unwrap();
        assert!(split.is_aux_edge(aux));
        assert!((split.graph.edge(aux).weight - 0.5).abs() < 1e-15);
        assert!(!split.graph.has_fallible_nodes());
    }

    #[test]
    fn split_without_fallible_nodes_is_identity_shaped() {
        let g = graph_from(&[("a", "b", 0.5), ("b", "c", 0.25)]);
        let split = split_node_weights(&g);
        assert_eq!(split.graph.node_count(), g.node_count());
        assert_eq!(split.graph.edge_count(), g.edge_count());
    }

    #[test]
    fn hyperedge_expansion_shape() {
        let records = vec![HyperedgeRecord {
            weight: 0.5,
            members: vec!["a".to_string(), "b".to_string(), "c".to_string()],
        }];
        let g = expand_hyperedges(&records).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 6);
        let aux = g.nodes().find(|&v| g.node_weight(v) < 1.0).unwrap();
        assert_eq!(g.in_degree(aux), 3);
        assert_eq!(g.out_degree(aux), 3);
    }

    proptest! {
        #[test]
        fn merge_parallel_commutes(w1 in 0.0f64..=1.0, w2 in 0.0f64..=1.0) {
            prop_assert!((merge_parallel(w1, w2) - merge_parallel(w2, w1)).abs() <= 1e-15);
        }

        #[test]
        fn merge_parallel_associates(
            w1 in 0.0f64..=1.0,
            w2 in 0.0f64..=1.0,
            w3 in 0.0f64..=1.0,
        ) {
            let left = merge_parallel(merge_parallel(w1, w2), w3);
            let right = merge_parallel(w1, merge_parallel(w2, w3));
            prop_assert!((left - right).abs() <= 1e-15);
        }

        #[test]
        fn merge_parallel_matches_power_form(w in 0.0f64..=1.0, x in 1u32..6) {
            let mut acc = w;
            for _ in 1..x {
                acc = merge_parallel(acc, w);
            }
            let direct = 1.0 - (1.0 - w).powi(x as i32);
            prop_assert!((acc - direct).abs() <= 1e-12);
        }
    }
}
