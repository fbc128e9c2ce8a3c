//! Monte Carlo estimation over random graph instances.
//!
//! A sample realizes one instance of the graph: every edge and every node is
//! independently present with probability equal to its weight. Draws are
//! made lazily the first time traversal touches an element, so cost tracks
//! the explored region rather than graph size. Elements with weight 1 are
//! present unconditionally and consume no randomness.
//!
//! Reproducibility contract: one root seed; sample i draws from stream i of
//! a counter-mode generator, so results are independent of traversal order
//! within other samples and identical under any sample-level parallelism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeId, WeightedGraph};

/// Estimate of a probability from `samples` Bernoulli outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub hits: u64,
}

impl McEstimate {
    fn from_counts(hits: u64, samples: u64) -> Self {
        let mean = hits as f64 / samples as f64;
        McEstimate {
            mean,
            stderr: (mean * (1.0 - mean) / samples as f64).sqrt(),
            samples,
            hits,
        }
    }
}

/// Lazily drawn presence state for one instance, reused across samples via
/// generation stamps to avoid reallocating.
struct InstanceDraws {
    rng: ChaCha8Rng,
    generation: u32,
    edge_stamp: Vec<u32>,
    edge_present: Vec<bool>,
    node_stamp: Vec<u32>,
    node_present: Vec<bool>,
}

impl InstanceDraws {
    fn new(seed: u64, nodes: usize, edges: usize) -> Self {
        InstanceDraws {
            rng: ChaCha8Rng::seed_from_u64(seed),
            generation: 0,
            edge_stamp: vec![0; edges],
            edge_present: vec![false; edges],
            node_stamp: vec![0; nodes],
            node_present: vec![false; nodes],
        }
    }

    /// Begins instance `index`: bumps the generation (invalidating all
    /// memoized draws) and switches to that sample's private stream.
    fn begin(&mut self, index: u64) {
        self.generation += 1;
        self.rng.set_stream(index);
    }

    fn edge(&mut self, e: usize, weight: f64) -> bool {
        if weight >= 1.0 {
            return true;
        }
        if self.edge_stamp[e] != self.generation {
            self.edge_stamp[e] = self.generation;
            self.edge_present[e] = self.rng.random::<f64>() < weight;
        }
        self.edge_present[e]
    }

    fn node(&mut self, v: usize, weight: f64) -> bool {
        if weight >= 1.0 {
            return true;
        }
        if self.node_stamp[v] != self.generation {
            self.node_stamp[v] = self.generation;
            self.node_present[v] = self.rng.random::<f64>() < weight;
        }
        self.node_present[v]
    }
}

/// Breadth-first reach over one instance. End-node exemption: the start
/// node expands regardless of its own draw, and membership in the result
/// never consults the member's draw (a node is reached when a present edge
/// from an expanded node leads to it).
struct Traversal {
    seen_stamp: Vec<u32>,
    dist: Vec<u32>,
    queue: std::collections::VecDeque<NodeId>,
}

impl Traversal {
    fn new(nodes: usize) -> Self {
        Traversal {
            seen_stamp: vec![0; nodes],
            dist: vec![0; nodes],
            queue: std::collections::VecDeque::new(),
        }
    }

    /// Returns the hop distance to `until` if reached, scanning the whole
    /// component when `until` is None. Seen state is keyed by the draw
    /// generation so two traversals of the same instance share nothing but
    /// the draws.
    fn run(
        &mut self,
        g: &WeightedGraph,
        draws: &mut InstanceDraws,
        stamp: u32,
        start: NodeId,
        until: Option<NodeId>,
    ) -> Option<u32> {
        self.queue.clear();
        self.seen_stamp[start.index()] = stamp;
        self.dist[start.index()] = 0;
        self.queue.push_back(start);
        if until == Some(start) {
            return Some(0);
        }
        while let Some(v) = self.queue.pop_front() {
            if v != start && !draws.node(v.index(), g.node_weight(v)) {
                continue;
            }
            for &e in g.out_edges(v) {
                let edge = g.edge(e);
                if self.seen_stamp[edge.dst.index()] == stamp {
                    continue;
                }
                if !draws.edge(e.index(), edge.weight) {
                    continue;
                }
                self.seen_stamp[edge.dst.index()] = stamp;
                self.dist[edge.dst.index()] = self.dist[v.index()] + 1;
                if until == Some(edge.dst) {
                    return Some(self.dist[edge.dst.index()]);
                }
                self.queue.push_back(edge.dst);
            }
        }
        None
    }
}

/// Realizes one instance (chosen by `seed`) and returns every node
/// reachable from `a`, including `a` itself.
pub fn sample_reachable_set(
    g: &WeightedGraph,
    a: NodeId,
    seed: u64,
) -> std::collections::BTreeSet<NodeId> {
    let mut draws = InstanceDraws::new(seed, g.node_count(), g.edge_count());
    draws.begin(0);
    let stamp = draws.generation;
    let mut t = Traversal::new(g.node_count());
    t.run(g, &mut draws, stamp, a, None);
    (0..g.node_count())
        .map(|i| NodeId(i as u32))
        .filter(|v| t.seen_stamp[v.index()] == stamp)
        .collect()
}

/// Estimates b(a, b) as the fraction of instances containing an a-to-b
/// path. Traversal stops early once b is reached.
pub fn mc_blink_estimate(
    g: &WeightedGraph,
    a: NodeId,
    b: NodeId,
    samples: u64,
    seed: u64,
) -> McEstimate {
    assert!(samples >= 1, "at least one sample");
    let mut draws = InstanceDraws::new(seed, g.node_count(), g.edge_count());
    let mut t = Traversal::new(g.node_count());
    let mut hits = 0u64;
    for i in 0..samples {
        draws.begin(i);
        let stamp = draws.generation;
        if t.run(g, &mut draws, stamp, a, Some(b)).is_some() {
            hits += 1;
        }
    }
    McEstimate::from_counts(hits, samples)
}

/// Expected round distance: mean hop distance from a to b over the
/// instances where b is reachable, +inf if it never is. With `symmetric`,
/// each instance contributes the shorter of the a-to-b and b-to-a
/// distances, both measured in the same instance.
pub fn mc_erd(
    g: &WeightedGraph,
    a: NodeId,
    b: NodeId,
    samples: u64,
    seed: u64,
    symmetric: bool,
) -> f64 {
    assert!(samples >= 1, "at least one sample");
    let mut draws = InstanceDraws::new(seed, g.node_count(), g.edge_count());
    let mut t = Traversal::new(g.node_count());
    let mut finite = 0u64;
    let mut total = 0.0f64;
    for i in 0..samples {
        draws.begin(i);
        // Two traversals of one instance need distinct seen-stamps but
        // shared draws; odd/even generations keep them apart.
        let stamp = draws.generation;
        let forward = t.run(g, &mut draws, 2 * stamp, a, Some(b));
        let d = if symmetric {
            let backward = t.run(g, &mut draws, 2 * stamp + 1, b, Some(a));
            match (forward, backward) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, None) => x,
                (None, y) => y,
            }
        } else {
            forward
        };
        if let Some(d) = d {
            finite += 1;
            total += d as f64;
        }
    }
    if finite == 0 {
        f64::INFINITY
    } else {
        total / finite as f64
    }
}

/// Reachability estimate over a bare edge list (node weights already split
/// into edges). The approximation engine evaluates oversized subgraphs
/// through this.
pub(crate) fn mc_edge_list_estimate(
    n: usize,
    edges: &[(u32, u32, f64)],
    a: u32,
    b: u32,
    samples: u64,
    seed: u64,
) -> McEstimate {
    let mut out: Vec<Vec<(u32, usize)>> = vec![Vec::new(); n];
    for (i, &(s, d, _)) in edges.iter().enumerate() {
        out[s as usize].push((d, i));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edge_stamp = vec![0u32; edges.len()];
    let mut edge_present = vec![false; edges.len()];
    let mut seen = vec![0u32; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut hits = 0u64;
    for i in 0..samples {
        rng.set_stream(i);
        let gen = (i + 1) as u32;
        stack.clear();
        stack.push(a);
        seen[a as usize] = gen;
        let mut reached = a == b;
        'bfs: while let Some(v) = stack.pop() {
            for &(d, e) in &out[v as usize] {
                if seen[d as usize] == gen {
                    continue;
                }
                let w = edges[e].2;
                let present = if w >= 1.0 {
                    true
                } else {
                    if edge_stamp[e] != gen {
                        edge_stamp[e] = gen;
                        edge_present[e] = rng.random::<f64>() < w;
                    }
                    edge_present[e]
                };
                if !present {
                    continue;
                }
                seen[d as usize] = gen;
                if d == b {
                    reached = true;
                    break 'bfs;
                }
                stack.push(d);
            }
        }
        if reached {
            hits += 1;
        }
    }
    McEstimate::from_counts(hits, samples)
}
