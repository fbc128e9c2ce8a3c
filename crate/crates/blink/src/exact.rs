//! Exact connection probabilities by recursive edge factoring.
//!
//! b(A, B) is the probability that a random instance of the graph contains a
//! directed path from A to B, where each edge and node is present
//! independently with probability equal to its weight and the end nodes are
//! exempt from their own existence draw.
//!
//! The engine conditions on one uncertain edge at a time (present: weight
//! becomes 1; absent: edge removed) and shrinks the remainder between
//! recursion steps with three probability-preserving reductions: dropping
//! edges that cannot lie on any A-to-B path, merging parallel edges, and
//! splicing pass-through nodes. Cost is exponential in the number of
//! uncertain edges that survive reduction, so callers face a hard cap.
//!
//! [`brute`] holds a completely separate enumerator over all edge subsets.
//! It shares no code with the factoring path and exists so the two can be
//! checked against each other.

use crate::error::BlinkError;
use crate::graph::{split_node_weights, NodeId, WeightedGraph};
use crate::score_from_probability;

/// Cap on edges surviving reduction before factoring refuses to run.
/// 25 uncertain edges keeps the worst-case recursion tractable.
pub const DEFAULT_REACH_EDGE_CAP: usize = 25;

/// Connection events beyond plain reachability.
#[derive(Debug, Clone)]
pub enum BlinkEvent {
    /// A path from `source` to `target` exists.
    Reach { source: NodeId, target: NodeId },
    /// Every node in `targets` is reached from at least one node in
    /// `sources`.
    AnyToAll {
        sources: Vec<NodeId>,
        targets: Vec<NodeId>,
    },
    /// A path from `source` to `target` exists while `avoid` is not
    /// reachable from `source`.
    ReachAndAvoid {
        source: NodeId,
        target: NodeId,
        avoid: NodeId,
    },
}

/// Compact scratch representation used by the factoring recursion: edges of
/// a node-weight-free graph, kept sorted by (src, dst).
pub(crate) type EdgeList = Vec<(u32, u32, f64)>;

fn reachable_over(n: usize, edges: &EdgeList, start: u32, forward: bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[start as usize] = true;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(s, d, _) in edges.iter() {
            let (from, to) = if forward { (s, d) } else { (d, s) };
            if from == v && !seen[to as usize] {
                seen[to as usize] = true;
                stack.push(to);
            }
        }
    }
    seen
}

/// Reduction outcome: either the probability is already decided or an edge
/// list remains to be factored.
pub(crate) enum ReducedState {
    Decided(f64),
    Open(EdgeList),
}

/// Applies relevance filtering, parallel merging, and series splicing until
/// nothing changes. Preserves b(a, b) exactly.
pub(crate) fn reduce_state(n: usize, mut edges: EdgeList, a: u32, b: u32) -> ReducedState {
    use std::collections::HashMap;
    if a == b {
        return ReducedState::Decided(1.0);
    }
    loop {
        // Edges that cannot appear on any a-to-b path have no influence on
        // the event and are marginalized out by deletion: the source end
        // must be reachable from a (and not b), the target end must reach b
        // (and not be a).
        let fwd = reachable_over(n, &edges, a, true);
        if !fwd[b as usize] {
            return ReducedState::Decided(0.0);
        }
        let bwd = reachable_over(n, &edges, b, false);
        let before = edges.len();
        edges.retain(|&(s, d, _)| fwd[s as usize] && bwd[d as usize] && s != b && d != a);
        let mut changed = edges.len() != before;

        // Adjacency maps; inserting into out merges parallels on the spot.
        let mut out: Vec<HashMap<u32, f64>> = vec![HashMap::new(); n];
        let mut inc: Vec<std::collections::HashSet<u32>> =
            vec![std::collections::HashSet::new(); n];
        for &(s, d, w) in &edges {
            use std::collections::hash_map::Entry;
            match out[s as usize].entry(d) {
                Entry::Occupied(mut o) => {
                    *o.get_mut() = crate::graph::merge_parallel(*o.get(), w);
                    changed = true;
                }
                Entry::Vacant(slot) => {
                    slot.insert(w);
                    inc[d as usize].insert(s);
                }
            }
        }

        // Pass-through splicing with a worklist; each splice can enable new
        // candidates only at its two endpoints.
        let mut work: Vec<u32> = (0..n as u32).collect();
        while let Some(y) = work.pop() {
            if y == a || y == b {
                continue;
            }
            let yi = y as usize;
            if out[yi].len() != 1 || inc[yi].len() != 1 {
                continue;
            }
            let x = *inc[yi].iter().next().expect("one in-neighbor");
            let z = *out[yi].keys().next().expect("one out-neighbor");
            let w_in = out[x as usize].remove(&y).expect("tracked edge");
            let w_out = out[yi].remove(&z).expect("tracked edge");
            inc[yi].clear();
            inc[z as usize].remove(&y);
            if x != z {
                match out[x as usize].get_mut(&z) {
                    Some(cur) => *cur = crate::graph::merge_parallel(*cur, w_in * w_out),
                    None => {
                        out[x as usize].insert(z, w_in * w_out);
                        inc[z as usize].insert(x);
                    }
                }
            }
            changed = true;
            work.push(x);
            work.push(z);
        }

        edges = (0..n as u32)
            .flat_map(|s| {
                let mut row: Vec<(u32, u32, f64)> =
                    out[s as usize].iter().map(|(&d, &w)| (s, d, w)).collect();
                row.sort_by_key(|&(_, d, _)| d);
                row
            })
            .collect();

        if !changed {
            return ReducedState::Open(edges);
        }
    }
}

fn factor(n: usize, edges: EdgeList, a: u32, b: u32) -> f64 {
    let edges = match reduce_state(n, edges, a, b) {
        ReducedState::Decided(p) => return p,
        ReducedState::Open(e) => e,
    };
    // Reduction guarantees b is reachable here; with every survivor certain
    // the connection is certain.
    let pivot = edges
        .iter()
        .enumerate()
        .filter(|(_, &(_, _, w))| w < 1.0)
        .min_by(|(_, &(_, _, w1)), (_, &(_, _, w2))| {
            (w1 - 0.5)
                .abs()
                .partial_cmp(&(w2 - 0.5).abs())
                .expect("weights are finite")
        })
        .map(|(i, _)| i);
    let Some(i) = pivot else {
        return 1.0;
    };
    let w = edges[i].2;
    let mut present = edges.clone();
    present[i].2 = 1.0;
    let mut absent = edges;
    absent.remove(i);
    w * factor(n, present, a, b) + (1.0 - w) * factor(n, absent, a, b)
}

/// Factoring entry point for callers that already hold a node-weight-free
/// edge list (the approximation engine evaluates subgraphs this way). The
/// cap applies to the edge count after one reduction pass.
pub(crate) fn factor_edge_list(
    n: usize,
    edges: EdgeList,
    a: u32,
    b: u32,
    cap: usize,
) -> Result<f64, BlinkError> {
    match reduce_state(n, edges, a, b) {
        ReducedState::Decided(p) => Ok(p),
        ReducedState::Open(reduced) => {
            if reduced.len() > cap {
                return Err(BlinkError::CapExceeded {
                    edges: reduced.len(),
                    cap,
                });
            }
            Ok(factor(n, reduced, a, b))
        }
    }
}

pub(crate) fn split_edge_list(g: &crate::graph::SplitGraph) -> EdgeList {
    g.graph
        .edges()
        .iter()
        .map(|e| (e.src.0, e.dst.0, e.weight))
        .collect()
}

/// Exact b(a, b) with the default reduction cap.
pub fn exact_reachability(g: &WeightedGraph, a: NodeId, b: NodeId) -> Result<f64, BlinkError> {
    exact_reachability_with_cap(g, a, b, DEFAULT_REACH_EDGE_CAP)
}

pub fn exact_reachability_with_cap(
    g: &WeightedGraph,
    a: NodeId,
    b: NodeId,
    cap: usize,
) -> Result<f64, BlinkError> {
    let split = split_node_weights(g);
    factor_edge_list(
        split.graph.node_count(),
        split_edge_list(&split),
        split.out_node(a).0,
        split.in_node(b).0,
        cap,
    )
}

/// Log-scale proximity -ln(1 - b(a, b)).
pub fn exact_blink_score(g: &WeightedGraph, a: NodeId, b: NodeId) -> Result<f64, BlinkError> {
    Ok(score_from_probability(exact_reachability(g, a, b)?))
}

/// Distance -ln b(a, b). Satisfies the triangle inequality because the
/// events "a reaches b" and "b reaches c" are positively correlated.
pub fn blink_distance(g: &WeightedGraph, a: NodeId, b: NodeId) -> Result<f64, BlinkError> {
    let p = exact_reachability(g, a, b)?;
    if p <= 0.0 {
        return Err(BlinkError::Unreachable);
    }
    Ok(-p.max(crate::COMPLEMENT_FLOOR).ln())
}

/// Exact probability of a connection event. Plain reachability goes through
/// factoring; the generalized events do not reduce safely, so they are
/// enumerated over all edge subsets and the cap applies to the raw edge
/// count after node-weight splitting.
pub fn exact_event_probability(g: &WeightedGraph, event: &BlinkEvent) -> Result<f64, BlinkError> {
    match event {
        BlinkEvent::Reach { source, target } => exact_reachability(g, *source, *target),
        _ => brute::event_probability(g, event),
    }
}

pub mod brute {
    //! Edge-subset enumeration, kept deliberately independent of the
    //! factoring engine so each can serve as the other's oracle. Cost is
    //! 2^|E| over the split graph, hence the hard edge limit.

    use super::BlinkEvent;
    use crate::error::BlinkError;
    use crate::graph::{split_node_weights, NodeId, WeightedGraph};

    /// Enumeration covers at most 2^20 subsets.
    pub const MAX_ENUM_EDGES: usize = 20;

    struct Instance {
        n: usize,
        srcs: Vec<u32>,
        dsts: Vec<u32>,
    }

    impl Instance {
        /// Nodes reachable from `starts` using the present edges.
        fn reach(&self, present: &[bool], starts: &[u32]) -> Vec<bool> {
            let mut seen = vec![false; self.n];
            let mut stack: Vec<u32> = Vec::new();
            for &s in starts {
                if !seen[s as usize] {
                    seen[s as usize] = true;
                    stack.push(s);
                }
            }
            while let Some(v) = stack.pop() {
                for i in 0..self.srcs.len() {
                    if present[i] && self.srcs[i] == v && !seen[self.dsts[i] as usize] {
                        seen[self.dsts[i] as usize] = true;
                        stack.push(self.dsts[i]);
                    }
                }
            }
            seen
        }

        fn holds(&self, present: &[bool], event: &Ev) -> bool {
            match event {
                Ev::Reach { source, target } => self.reach(present, &[*source])[*target as usize],
                Ev::AnyToAll { sources, targets } => {
                    let seen = self.reach(present, sources);
                    targets.iter().all(|&t| seen[t as usize])
                }
                Ev::ReachAndAvoid {
                    source,
                    target,
                    avoid,
                } => {
                    let seen = self.reach(present, &[*source]);
                    seen[*target as usize] && !seen[*avoid as usize]
                }
            }
        }
    }

    enum Ev {
        Reach { source: u32, target: u32 },
        AnyToAll { sources: Vec<u32>, targets: Vec<u32> },
        ReachAndAvoid { source: u32, target: u32, avoid: u32 },
    }

    /// Exact event probability by full enumeration.
    pub fn event_probability(g: &WeightedGraph, event: &BlinkEvent) -> Result<f64, BlinkError> {
        let split = split_node_weights(g);
        let m = split.graph.edge_count();
        if m > MAX_ENUM_EDGES {
            return Err(BlinkError::CapExceeded {
                edges: m,
                cap: MAX_ENUM_EDGES,
            });
        }
        let src_of = |v: NodeId| split.out_node(v).0;
        let dst_of = |v: NodeId| split.in_node(v).0;
        let ev = match event {
            BlinkEvent::Reach { source, target } => Ev::Reach {
                source: src_of(*source),
                target: dst_of(*target),
            },
            BlinkEvent::AnyToAll { sources, targets } => Ev::AnyToAll {
                sources: sources.iter().map(|&s| src_of(s)).collect(),
                targets: targets.iter().map(|&t| dst_of(t)).collect(),
            },
            BlinkEvent::ReachAndAvoid {
                source,
                target,
                avoid,
            } => Ev::ReachAndAvoid {
                source: src_of(*source),
                target: dst_of(*target),
                avoid: dst_of(*avoid),
            },
        };
        let inst = Instance {
            n: split.graph.node_count(),
            srcs: split.graph.edges().iter().map(|e| e.src.0).collect(),
            dsts: split.graph.edges().iter().map(|e| e.dst.0).collect(),
        };
        let probs: Vec<f64> = split.graph.edges().iter().map(|e| e.weight).collect();
        let mut present = vec![false; m];
        let mut total = 0.0;
        enumerate(&probs, &mut present, 0, 1.0, &inst, &ev, &mut total);
        Ok(total)
    }

    fn enumerate(
        probs: &[f64],
        present: &mut [bool],
        i: usize,
        p: f64,
        inst: &Instance,
        ev: &Ev,
        total: &mut f64,
    ) {
        if p == 0.0 {
            return;
        }
        if i == probs.len() {
            if inst.holds(present, ev) {
                *total += p;
            }
            return;
        }
        present[i] = true;
        enumerate(probs, present, i + 1, p * probs[i], inst, ev, total);
        present[i] = false;
        enumerate(probs, present, i + 1, p * (1.0 - probs[i]), inst, ev, total);
    }
}
