//! Competing proximity measures and the shared ranked-table type.

use crate::error::BlinkError;
use crate::graph::{NodeId, WeightedGraph};
use crate::score_from_probability;

/// Scores from one source, held in ranked order. The order is total and
/// deterministic: by score, then higher in-degree first, then node id.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    pub source: NodeId,
    entries: Vec<(NodeId, f64)>,
}

impl ScoreTable {
    fn build(
        source: NodeId,
        mut scores: Vec<(NodeId, f64)>,
        g: &WeightedGraph,
        ascending: bool,
    ) -> Self {
        scores.sort_by(|&(v1, s1), &(v2, s2)| {
            let primary = if ascending {
                s1.partial_cmp(&s2)
            } else {
                s2.partial_cmp(&s1)
            };
            primary
                .expect("scores are never NaN")
                .then_with(|| g.in_degree(v2).cmp(&g.in_degree(v1)))
                .then_with(|| v1.cmp(&v2))
        });
        ScoreTable {
            source,
            entries: scores,
        }
    }

    /// Ranking for measures where larger is closer.
    pub fn descending(source: NodeId, scores: Vec<(NodeId, f64)>, g: &WeightedGraph) -> Self {
        Self::build(source, scores, g, false)
    }

    /// Ranking for distance-like measures; +inf naturally sorts last.
    pub fn ascending(source: NodeId, scores: Vec<(NodeId, f64)>, g: &WeightedGraph) -> Self {
        Self::build(source, scores, g, true)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &[(NodeId, f64)] {
        &self.entries
    }

    pub fn get(&self, v: NodeId) -> Option<f64> {
        self.entries
            .iter()
            .find(|&&(u, _)| u == v)
            .map(|&(_, s)| s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Personalized PageRank by power iteration. From any node: restart to `a`
/// with probability `alpha`, otherwise follow an out-edge with probability
/// proportional to its weight. A node without out-edges always restarts.
/// Node weights play no part. The table covers every node; callers slice
/// out whatever exclusions their task demands.
pub fn ppr_scores(g: &WeightedGraph, a: NodeId, alpha: f64) -> ScoreTable {
    assert!(alpha > 0.0 && alpha < 1.0, "restart probability in (0,1)");
    let n = g.node_count();
    let wsum: Vec<f64> = g
        .nodes()
        .map(|v| g.out_edges(v).iter().map(|&e| g.edge(e).weight).sum())
        .collect();
    let mut pi = vec![0.0; n];
    pi[a.index()] = 1.0;
    loop {
        let mut next = vec![0.0; n];
        for v in g.nodes() {
            let mass = pi[v.index()];
            if mass == 0.0 {
                continue;
            }
            if wsum[v.index()] == 0.0 {
                next[a.index()] += mass;
                continue;
            }
            next[a.index()] += alpha * mass;
            let spread = (1.0 - alpha) * mass / wsum[v.index()];
            for &e in g.out_edges(v) {
                let edge = g.edge(e);
                next[edge.dst.index()] += spread * edge.weight;
            }
        }
        let residual: f64 = pi
            .iter()
            .zip(&next)
            .map(|(x, y)| (x - y).abs())
            .sum();
        pi = next;
        if residual < 1e-12 {
            break;
        }
    }
    let scores = (0..n).map(|i| (NodeId(i as u32), pi[i])).collect();
    ScoreTable::descending(a, scores, g)
}

/// Power-iteration estimate of the spectral radius of M, where
/// M[x][y] = node_weight(x) * w(x, y). Exact on cycles, 0 for graphs whose
/// walks die out; a geometric mean over the trailing window damps
/// oscillation from complex leading eigenvalues.
fn spectral_radius_estimate(g: &WeightedGraph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0f64; n];
    let mut window: Vec<f64> = Vec::new();
    for _ in 0..256 {
        let mut y = vec![0.0f64; n];
        for v in g.nodes() {
            let scale = x[v.index()] * g.node_weight(v);
            if scale == 0.0 {
                continue;
            }
            for &e in g.out_edges(v) {
                let edge = g.edge(e);
                y[edge.dst.index()] += scale * edge.weight;
            }
        }
        let norm = y.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if norm == 0.0 {
            return 0.0;
        }
        window.push(norm);
        for v in &mut y {
            *v /= norm;
        }
        x = y;
    }
    let tail = &window[window.len() - 64..];
    (tail.iter().map(|v| v.ln()).sum::<f64>() / tail.len() as f64).exp()
}

/// Attenuated walk sum: score(b) accumulates beta^l times the weight
/// product of every length-l walk from a to b, where a walk's weight is its
/// edge weights times the node weights of its interior nodes (endpoints
/// exempt). Refuses parameter choices the series cannot absorb.
pub fn katz_scores(g: &WeightedGraph, a: NodeId, beta: f64) -> Result<ScoreTable, BlinkError> {
    let rho = spectral_radius_estimate(g);
    if rho > 0.0 && beta.abs() * rho >= 1.0 {
        return Err(BlinkError::Divergent {
            beta,
            spectral_radius: rho,
        });
    }
    let n = g.node_count();
    let mut total = vec![0.0f64; n];
    // First hop leaves a without charging a's node weight.
    let mut t = vec![0.0f64; n];
    for &e in g.out_edges(a) {
        let edge = g.edge(e);
        t[edge.dst.index()] += beta * edge.weight;
    }
    let mut loops = 0;
    loop {
        let linf = t.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if linf < 1e-12 {
            break;
        }
        loops += 1;
        if loops > 200_000 {
            return Err(BlinkError::Divergent {
                beta,
                spectral_radius: rho,
            });
        }
        for (acc, inc) in total.iter_mut().zip(&t) {
            *acc += inc;
        }
        let mut next = vec![0.0f64; n];
        for v in g.nodes() {
            let scale = t[v.index()] * g.node_weight(v);
            if scale == 0.0 {
                continue;
            }
            for &e in g.out_edges(v) {
                let edge = g.edge(e);
                next[edge.dst.index()] += beta * scale * edge.weight;
            }
        }
        t = next;
    }
    let scores = (0..n).map(|i| (NodeId(i as u32), total[i])).collect();
    Ok(ScoreTable::descending(a, scores, g))
}

/// Common-neighbor count damped by the neighbor's degrees. Degrees below 2
/// are lifted to 2 so the log denominator stays positive.
pub fn adamic_adar(g: &WeightedGraph, a: NodeId) -> ScoreTable {
    let n = g.node_count();
    let mut scores = vec![0.0f64; n];
    for &e in g.out_edges(a) {
        let c = g.edge(e).dst;
        let denom = (g.in_degree(c).max(2) as f64).ln() + (g.out_degree(c).max(2) as f64).ln();
        for &f in g.out_edges(c) {
            scores[g.edge(f).dst.index()] += 1.0 / denom;
        }
    }
    let scores = (0..n).map(|i| (NodeId(i as u32), scores[i])).collect();
    ScoreTable::descending(a, scores, g)
}

/// Electrical conductance between a and b with each edge a conductor.
/// Direction is discarded: a pair connected both ways conducts the mean of
/// the two weights, one way conducts that weight. Solved through the graph
/// Laplacian by conjugate gradients on b's component.
pub fn effective_conductance(g: &WeightedGraph, a: NodeId, b: NodeId) -> Result<f64, BlinkError> {
    assert!(a != b, "conductance needs two distinct terminals");
    let n = g.node_count();
    let mut pair_sum: std::collections::BTreeMap<(u32, u32), (f64, u32)> =
        std::collections::BTreeMap::new();
    for e in g.edges() {
        let key = (e.src.0.min(e.dst.0), e.src.0.max(e.dst.0));
        let slot = pair_sum.entry(key).or_insert((0.0, 0));
        slot.0 += e.weight;
        slot.1 += 1;
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(u, v), &(sum, count)) in &pair_sum {
        let c = sum / count as f64;
        adj[u as usize].push((v as usize, c));
        adj[v as usize].push((u as usize, c));
    }
    // Component check doubles as the restriction mask for the solve.
    let mut in_comp = vec![false; n];
    in_comp[a.index()] = true;
    let mut stack = vec![a.index()];
    while let Some(v) = stack.pop() {
        for &(u, _) in &adj[v] {
            if !in_comp[u] {
                in_comp[u] = true;
                stack.push(u);
            }
        }
    }
    if !in_comp[b.index()] {
        return Err(BlinkError::Unreachable);
    }
    let degree: Vec<f64> = (0..n).map(|v| adj[v].iter().map(|&(_, c)| c).sum()).collect();
    let apply = |x: &[f64], out: &mut Vec<f64>| {
        for v in 0..n {
            if !in_comp[v] {
                out[v] = 0.0;
                continue;
            }
            let mut acc = degree[v] * x[v];
            for &(u, c) in &adj[v] {
                acc -= c * x[u];
            }
            out[v] = acc;
        }
    };
    // Conjugate gradients; the right-hand side sums to zero, which keeps
    // the singular (constant-shift) direction out of the Krylov space.
    let mut x = vec![0.0f64; n];
    let mut r = vec![0.0f64; n];
    r[a.index()] = 1.0;
    r[b.index()] = -1.0;
    let mut p = r.clone();
    let mut ap = vec![0.0f64; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..20 * n.max(10) {
        if rr.sqrt() < 1e-12 {
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(p, ap)| p * ap).sum();
        if pap <= 0.0 {
            break;
        }
        let step = rr / pap;
        for v in 0..n {
            x[v] += step * p[v];
            r[v] -= step * ap[v];
        }
        let rr_next: f64 = r.iter().map(|v| v * v).sum();
        let ratio = rr_next / rr;
        rr = rr_next;
        for v in 0..n {
            p[v] = r[v] + ratio * p[v];
        }
    }
    let resistance = x[a.index()] - x[b.index()];
    if resistance <= 0.0 {
        return Err(BlinkError::Numeric(
            "conductance solve produced a non-positive resistance".into(),
        ));
    }
    Ok(1.0 / resistance)
}

/// Proximity along the single cheapest path, each edge costing 1/w: the
/// reciprocal of the path's total cost.
pub fn weighted_shortest_path(g: &WeightedGraph, a: NodeId, b: NodeId) -> Result<f64, BlinkError> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let key = |c: f64| c.to_bits();
    dist[a.index()] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((key(0.0), a)));
    while let Some(Reverse((k, v))) = heap.pop() {
        if k > key(dist[v.index()]) {
            continue;
        }
        if v == b {
            break;
        }
        for &e in g.out_edges(v) {
            let edge = g.edge(e);
            let nd = dist[v.index()] + 1.0 / edge.weight;
            if nd < dist[edge.dst.index()] {
                dist[edge.dst.index()] = nd;
                heap.push(Reverse((key(nd), edge.dst)));
            }
        }
    }
    let total = dist[b.index()];
    if total.is_infinite() {
        return Err(BlinkError::Unreachable);
    }
    Ok(1.0 / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineRule {
    Max,
    Min,
    Sum,
    /// For blink probabilities only: -ln(1 - b_ab * b_ba).
    ProductB,
}

/// Folds the two directional values of a pair into one symmetric score.
pub fn symmetric_combine(ab: f64, ba: f64, rule: CombineRule) -> f64 {
    match rule {
        CombineRule::Max => ab.max(ba),
        CombineRule::Min => ab.min(ba),
        CombineRule::Sum => ab + ba,
        CombineRule::ProductB => score_from_probability(ab * ba),
    }
}
