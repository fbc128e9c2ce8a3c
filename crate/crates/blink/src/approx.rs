//! Iterative path-contribution refinement.
//!
//! The score s(A, B) is split across the minimal paths from A to B: each
//! path starts at its nominal contribution and is repeatedly rescaled by
//! how much of its evidence subgraph's score is left after the short paths
//! take their fixed share,
//!
//! ```text
//! s_hat[i] <- s_hat[i] * (sG_i - len2_sum_i) / denom_i
//! ```
//!
//! clamped into [0, nominal]. Paths of length <= 2 keep their nominal
//! contribution forever; by construction the total always stays between the
//! short-path sum and the all-nominal sum. The three accuracy tiers differ
//! only in how sG_i and denom_i are produced:
//!
//! * high: sG_i is the evaluated score of the union of path i and every
//!   path sharing a real (non-auxiliary) edge with it, exact when the
//!   reduced union is small and Monte Carlo otherwise; denom_i sums the
//!   current s_hat of the long paths inside that union.
//! * medium: a series-parallel stand-in for the subgraph is built from
//!   per-edge usage counters and evaluated in closed form; denom_i is the
//!   largest usage on the path.
//! * low: the path is collapsed to a fixed three-segment chain with usage
//!   exponents and optional original shortcut edges; denom_i as in medium.

use std::collections::BTreeSet;

use crate::baselines::ScoreTable;
use crate::error::BlinkError;
use crate::exact::{factor_edge_list, DEFAULT_REACH_EDGE_CAP};
use crate::graph::{split_node_weights, EdgeId, NodeId, SplitGraph, WeightedGraph};
use crate::mc::mc_edge_list_estimate;
use crate::paths::{best_single_path, enumerate_minimal_paths, MinimalPath, PathFilterParams};
use crate::{mix_seed, score_from_probability};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variation {
    High,
    Medium,
    Low,
}

#[derive(Debug, Clone)]
pub struct ApproxParams {
    pub filters: PathFilterParams,
    pub seed: u64,
    /// Sample budget when a high-tier subgraph stays above the exact cap.
    pub mc_budget: u64,
    pub exact_cap: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams {
            filters: PathFilterParams::default(),
            seed: 0,
            mc_budget: 100_000,
            exact_cap: DEFAULT_REACH_EDGE_CAP,
            max_iterations: 100,
            rel_tolerance: 1e-9,
        }
    }
}

/// Refinement outcome for one source-target pair.
#[derive(Debug, Clone)]
pub struct PathContributionState {
    pub paths: Vec<MinimalPath>,
    pub s_hat: Vec<f64>,
    pub iteration: usize,
    pub converged: bool,
}

impl PathContributionState {
    pub fn total(&self) -> f64 {
        self.s_hat.iter().sum()
    }
}

/// 1 - (1 - p)^(to / from): the parallel merge of a segment with its own
/// hypothetical bypass, which lifts the segment from usage `from` to `to`.
fn raise(p: f64, from: f64, to: f64) -> f64 {
    if to <= from {
        p
    } else {
        1.0 - (1.0 - p).powf(to / from)
    }
}

/// Collapses a series chain of (probability, usage) segments into one
/// segment at the chain's maximum usage. Neighboring segments merge only
/// once raised to a common usage, lowest usages first, which reproduces the
/// bypass-then-merge order of processing edges by increasing usage. The
/// stack keeps usage strictly decreasing, so total work is linear in the
/// segment count; the operation count is returned for cost assertions.
pub(crate) fn sweep_segments(segments: &[(f64, f64)]) -> (f64, f64, usize) {
    let mut stack: Vec<(f64, f64)> = Vec::new();
    let mut ops = 0usize;
    for &seg in segments {
        let mut cur = seg;
        loop {
            ops += 1;
            match stack.last().copied() {
                Some((tp, tu)) if tu <= cur.1 => {
                    stack.pop();
                    match stack.last().copied() {
                        Some((lp, lu)) if lu < cur.1 => {
                            // The popped segment's lower-usage neighbor is
                            // the left one: merge leftward first.
                            stack.pop();
                            stack.push((lp * raise(tp, tu, lu), lu));
                        }
                        _ => {
                            cur = (raise(tp, tu, cur.1) * cur.0, cur.1);
                        }
                    }
                }
                _ => {
                    stack.push(cur);
                    break;
                }
            }
        }
    }
    while stack.len() > 1 {
        ops += 1;
        let (tp, tu) = stack.pop().expect("checked len");
        let (lp, lu) = stack.pop().expect("checked len");
        stack.push((lp * raise(tp, tu, lu), lu));
    }
    let (p, u) = stack[0];
    (p, u, ops)
}

/// Reachability of the five-edge stand-in graph
/// A -pa-> C -pm-> D -pc-> B with shortcuts C -d1-> B and A -d2-> D.
fn chain_reachability(pa: f64, pm: f64, pc: f64, d1: Option<f64>, d2: Option<f64>) -> f64 {
    let d1 = d1.unwrap_or(0.0);
    let d2 = d2.unwrap_or(0.0);
    pa * (d1 + (1.0 - d1) * pc * (1.0 - (1.0 - pm) * (1.0 - d2))) + (1.0 - pa) * d2 * pc
}

/// One multiplicative rescale of a long path's contribution. `noisy` marks
/// a sampled sG where falling slightly below the short-path sum is
/// statistical rather than a construction bug.
fn updated(
    s_old: f64,
    nominal: f64,
    sg: f64,
    len2_sum: f64,
    denom: f64,
    noisy: bool,
) -> Result<f64, BlinkError> {
    let mut numer = sg - len2_sum;
    if numer < 0.0 {
        if !noisy && numer < -1e-9 {
            return Err(BlinkError::Numeric(format!(
                "subgraph score {sg} under its short-path share {len2_sum}"
            )));
        }
        numer = 0.0;
    }
    if denom <= 0.0 {
        return Ok(s_old);
    }
    Ok((s_old * numer / denom).clamp(0.0, nominal))
}

struct HighPlan {
    path: usize,
    sg: f64,
    noisy: bool,
    len2_sum: f64,
    /// Long paths whose edges all lie inside this path's subgraph.
    cohort: Vec<usize>,
}

struct MediumPlan {
    path: usize,
    /// Index ranges into the path's edge list: [0, z1) | [z1, z3) | [z3, m).
    z1: usize,
    z3: usize,
    d1: Option<f64>,
    d2: Option<f64>,
    len2_sum: f64,
}

struct LowPlan {
    path: usize,
    d1: Option<f64>,
    d2: Option<f64>,
    len2_sum: f64,
}

enum Plan {
    High(Vec<HighPlan>),
    Medium(Vec<MediumPlan>),
    Low(Vec<LowPlan>),
}

/// Reduce-then-evaluate for an explicit edge list: exact factoring when the
/// reduced form fits the cap, seeded sampling otherwise.
fn eval_edge_list_score(
    n: usize,
    edges: Vec<(u32, u32, f64)>,
    a: u32,
    b: u32,
    params: &ApproxParams,
    seed: u64,
) -> (f64, bool) {
    match crate::exact::reduce_state(n, edges, a, b) {
        crate::exact::ReducedState::Decided(p) => (score_from_probability(p), false),
        crate::exact::ReducedState::Open(reduced) => {
            if reduced.len() <= params.exact_cap {
                let p = factor_edge_list(n, reduced, a, b, usize::MAX)
                    .expect("cap disabled for reduced list");
                (score_from_probability(p), false)
            } else {
                let est = mc_edge_list_estimate(n, &reduced, a, b, params.mc_budget, seed);
                (score_from_probability(est.mean), true)
            }
        }
    }
}

fn high_plans(
    split: &SplitGraph,
    a: NodeId,
    b: NodeId,
    paths: &[MinimalPath],
    long: &[usize],
    params: &ApproxParams,
) -> Vec<HighPlan> {
    let real_edge_sets: Vec<BTreeSet<EdgeId>> = paths
        .iter()
        .map(|p| {
            p.edges
                .iter()
                .copied()
                .filter(|&e| !split.is_aux_edge(e))
                .collect()
        })
        .collect();
    long.iter()
        .map(|&i| {
            let mut union: BTreeSet<EdgeId> = paths[i].edges.iter().copied().collect();
            for (j, p) in paths.iter().enumerate() {
                if j != i && !real_edge_sets[j].is_disjoint(&real_edge_sets[i]) {
                    union.extend(p.edges.iter().copied());
                }
            }
            let mut len2_sum = 0.0;
            let mut cohort = Vec::new();
            for (j, p) in paths.iter().enumerate() {
                if p.edges.iter().all(|e| union.contains(e)) {
                    if p.length <= 2 {
                        len2_sum += p.nominal;
                    } else {
                        cohort.push(j);
                    }
                }
            }
            let edges: Vec<(u32, u32, f64)> = union
                .iter()
                .map(|&e| {
                    let edge = split.graph.edge(e);
                    (edge.src.0, edge.dst.0, edge.weight)
                })
                .collect();
            let (sg, noisy) = eval_edge_list_score(
                split.graph.node_count(),
                edges,
                split.out_node(a).0,
                split.in_node(b).0,
                params,
                mix_seed(params.seed, &[a.0 as u64, b.0 as u64, i as u64]),
            );
            HighPlan {
                path: i,
                sg,
                noisy,
                len2_sum,
                cohort,
            }
        })
        .collect()
}

fn medium_plans(split: &SplitGraph, paths: &[MinimalPath], long: &[usize]) -> Vec<MediumPlan> {
    long.iter()
        .map(|&i| {
            let edges = &paths[i].edges;
            let m = edges.len();
            let z1 = if split.is_aux_edge(edges[1]) { 2 } else { 1 };
            let z3 = if split.is_aux_edge(edges[m - 2]) {
                m - 2
            } else {
                m - 1
            };
            debug_assert!(z1 < z3, "length > 2 leaves a middle zone");
            let mut d1 = None;
            let mut d2 = None;
            let mut len2_sum = 0.0;
            for p in paths {
                if p.length > 2 {
                    continue;
                }
                if p.edges.contains(&edges[0]) {
                    d1 = Some(split.graph.edge(*p.edges.last().expect("nonempty")).weight);
                    len2_sum += p.nominal;
                } else if p.edges.contains(&edges[m - 1]) {
                    d2 = Some(split.graph.edge(p.edges[0]).weight);
                    len2_sum += p.nominal;
                }
            }
            MediumPlan {
                path: i,
                z1,
                z3,
                d1,
                d2,
                len2_sum,
            }
        })
        .collect()
}

fn low_plans(
    split: &SplitGraph,
    a: NodeId,
    b: NodeId,
    paths: &[MinimalPath],
    long: &[usize],
) -> Vec<LowPlan> {
    long.iter()
        .map(|&i| {
            let edges = &paths[i].edges;
            let m = edges.len();
            let g = &split.graph;
            // Shortcut edges keep their original graph weights; they are
            // only visible when the adjacent path node was not weight-split
            // (a split node's entry half has no real out-edges and its exit
            // half no real in-edges).
            let c = g.edge(edges[0]).dst;
            let d = g.edge(edges[m - 1]).src;
            let mut len2_sum = 0.0;
            let d1 = g.find_edge(c, split.in_node(b)).map(|e| {
                let w = g.edge(e).weight;
                len2_sum += score_from_probability(g.edge(edges[0]).weight * w);
                w
            });
            let d2 = g.find_edge(split.out_node(a), d).map(|e| {
                let w = g.edge(e).weight;
                len2_sum += score_from_probability(w * g.edge(edges[m - 1]).weight);
                w
            });
            LowPlan {
                path: i,
                d1,
                d2,
                len2_sum,
            }
        })
        .collect()
}

/// Runs the refinement loop for one target. `paths` is every supplied
/// minimal path for the pair, already filtered and sorted.
pub fn refine_path_contributions(
    split: &SplitGraph,
    a: NodeId,
    b: NodeId,
    paths: Vec<MinimalPath>,
    variation: Variation,
    params: &ApproxParams,
) -> Result<PathContributionState, BlinkError> {
    let mut s_hat: Vec<f64> = paths.iter().map(|p| p.nominal).collect();
    let long: Vec<usize> = (0..paths.len())
        .filter(|&i| paths[i].length > 2)
        .collect();
    if long.is_empty() {
        return Ok(PathContributionState {
            paths,
            s_hat,
            iteration: 0,
            converged: true,
        });
    }
    let plan = match variation {
        Variation::High => Plan::High(high_plans(split, a, b, &paths, &long, params)),
        Variation::Medium => Plan::Medium(medium_plans(split, &paths, &long)),
        Variation::Low => Plan::Low(low_plans(split, a, b, &paths, &long)),
    };

    // Dense usage table over the edges the long paths actually touch; the
    // hot loop rebuilds it every iteration.
    let mut touched: Vec<EdgeId> = long
        .iter()
        .flat_map(|&j| paths[j].edges.iter().copied())
        .collect();
    touched.sort_unstable();
    touched.dedup();
    let mut usage = vec![0.0f64; split.graph.edge_count()];
    let mut scratch: Vec<(f64, f64)> = Vec::new();
    let mut next = s_hat.clone();
    let mut iteration = 0;
    let mut converged = false;
    while iteration < params.max_iterations && !converged {
        iteration += 1;
        if matches!(plan, Plan::Medium(_) | Plan::Low(_)) {
            for &e in &touched {
                usage[e.index()] = 0.0;
            }
            for &j in &long {
                for &e in &paths[j].edges {
                    usage[e.index()] += s_hat[j];
                }
            }
        }
        next.copy_from_slice(&s_hat);
        match &plan {
            Plan::High(plans) => {
                for hp in plans {
                    if s_hat[hp.path] == 0.0 {
                        continue;
                    }
                    let denom: f64 = hp.cohort.iter().map(|&j| s_hat[j]).sum();
                    next[hp.path] = updated(
                        s_hat[hp.path],
                        paths[hp.path].nominal,
                        hp.sg,
                        hp.len2_sum,
                        denom,
                        hp.noisy,
                    )?;
                }
            }
            Plan::Medium(plans) => {
                for mp in plans {
                    if s_hat[mp.path] == 0.0 {
                        continue;
                    }
                    let edges = &paths[mp.path].edges;
                    let u_max = edges
                        .iter()
                        .map(|&e| usage[e.index()])
                        .fold(0.0f64, f64::max);
                    let mut seg = |range: std::ops::Range<usize>| -> f64 {
                        scratch.clear();
                        scratch.extend(
                            edges[range]
                                .iter()
                                .map(|&e| (split.graph.edge(e).weight, usage[e.index()])),
                        );
                        let (p, u, _) = sweep_segments(&scratch);
                        raise(p, u, u_max)
                    };
                    let pa = seg(0..mp.z1);
                    let pm = seg(mp.z1..mp.z3);
                    let pc = seg(mp.z3..edges.len());
                    let sg =
                        score_from_probability(chain_reachability(pa, pm, pc, mp.d1, mp.d2));
                    next[mp.path] = updated(
                        s_hat[mp.path],
                        paths[mp.path].nominal,
                        sg,
                        mp.len2_sum,
                        u_max,
                        false,
                    )?;
                }
            }
            Plan::Low(plans) => {
                for lp in plans {
                    if s_hat[lp.path] == 0.0 {
                        continue;
                    }
                    let edges = &paths[lp.path].edges;
                    let m = edges.len();
                    let w = |k: usize| split.graph.edge(edges[k]).weight;
                    let u = |k: usize| usage[edges[k].index()];
                    let u_max = (0..m).map(u).fold(0.0f64, f64::max);
                    let pa = raise(w(0), u(0), u_max);
                    let pc = raise(w(m - 1), u(m - 1), u_max);
                    let mid_prod: f64 = (1..m - 1).map(w).product();
                    // Usage average weighted by log-weight; weight-1 edges
                    // carry no log mass and drop out.
                    let log_mass: f64 = (1..m - 1).map(|k| w(k).ln()).sum();
                    let u_mean = if log_mass == 0.0 {
                        u_max
                    } else {
                        (1..m - 1).map(|k| u(k) * w(k).ln()).sum::<f64>() / log_mass
                    };
                    let pm = raise(mid_prod, u_mean, u_max);
                    let sg =
                        score_from_probability(chain_reachability(pa, pm, pc, lp.d1, lp.d2));
                    next[lp.path] = updated(
                        s_hat[lp.path],
                        paths[lp.path].nominal,
                        sg,
                        lp.len2_sum,
                        u_max,
                        false,
                    )?;
                }
            }
        }
        converged = long.iter().all(|&i| {
            (next[i] - s_hat[i]).abs() / s_hat[i].max(1e-12) < params.rel_tolerance
        });
        std::mem::swap(&mut s_hat, &mut next);
    }
    Ok(PathContributionState {
        paths,
        s_hat,
        iteration,
        converged,
    })
}

/// Approximate blink scores from one source to each target. Targets with no
/// qualifying enumerated path fall back to the strongest single path's
/// nominal score (a valid lower bound), or 0 when unreachable.
pub fn approx_blink(
    g: &WeightedGraph,
    a: NodeId,
    targets: &BTreeSet<NodeId>,
    variation: Variation,
    params: &ApproxParams,
) -> Result<ScoreTable, BlinkError> {
    let split = split_node_weights(g);
    approx_blink_on_split(g, &split, a, targets, variation, params)
}

/// As [`approx_blink`] but reusing a prepared split graph, which matters
/// when many sources are scored over one large graph.
pub fn approx_blink_on_split(
    g: &WeightedGraph,
    split: &SplitGraph,
    a: NodeId,
    targets: &BTreeSet<NodeId>,
    variation: Variation,
    params: &ApproxParams,
) -> Result<ScoreTable, BlinkError> {
    let mut found = enumerate_minimal_paths(split, a, &params.filters, Some(targets))?;
    let mut scores = Vec::with_capacity(targets.len());
    for &t in targets {
        if t == a {
            continue;
        }
        let score = match found.remove(&t) {
            Some(paths) => {
                refine_path_contributions(split, a, t, paths, variation, params)?.total()
            }
            None => match best_single_path(split, a, t) {
                Ok(p) => p.nominal,
                Err(BlinkError::Unreachable) => 0.0,
                Err(e) => return Err(e),
            },
        };
        scores.push((t, score));
    }
    Ok(ScoreTable::descending(a, scores, g))
}

/// Two-pass scoring: a cheap tier ranks every target, then the high tier
/// re-scores the current top `top_k` and overwrites their entries.
pub fn hybrid_blink(
    g: &WeightedGraph,
    a: NodeId,
    targets: &BTreeSet<NodeId>,
    coarse: Variation,
    top_k: usize,
    params: &ApproxParams,
) -> Result<ScoreTable, BlinkError> {
    let coarse_table = approx_blink(g, a, targets, coarse, params)?;
    let head: BTreeSet<NodeId> = coarse_table
        .iter()
        .take(top_k)
        .map(|(v, _)| v)
        .collect();
    if head.is_empty() {
        return Ok(coarse_table);
    }
    let refined = approx_blink(g, a, &head, Variation::High, params)?;
    let merged: Vec<(NodeId, f64)> = coarse_table
        .iter()
        .map(|(v, s)| (v, refined.get(v).unwrap_or(s)))
        .collect();
    Ok(ScoreTable::descending(coarse_table.source, merged, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_blink_score;
    use crate::graph::GraphBuilder;

    fn graph_from(edges: &[(&str, &str, f64)]) -> WeightedGraph {
        let mut b = GraphBuilder::new();
        for &(s, d, w) in edges {
            let s = b.intern(s);
            let d = b.intern(d);
            b.add_edge(s, d, w).unwrap();
        }
        b.build()
    }

    fn all_variations() -> [Variation; 3] {
        [Variation::High, Variation::Medium, Variation::Low]
    }

    #[test]
    fn raise_is_identity_at_equal_usage() {
        assert_eq!(raise(0.3, 2.0, 2.0), 0.3);
        assert!((raise(0.5, 1.0, 2.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sweep_of_uniform_usage_is_plain_product() {
        let (p, u, _) = sweep_segments(&[(0.5, 3.0), (0.5, 3.0), (0.8, 3.0)]);
        assert!((p - 0.2).abs() < 1e-15);
        assert_eq!(u, 3.0);
    }

    #[test]
    fn sweep_bypasses_lower_usage_segment() {
        let (p, u, _) = sweep_segments(&[(0.5, 1.0), (0.5, 2.0)]);
        assert!((p - 0.375).abs() < 1e-15);
        assert_eq!(u, 2.0);
    }

    #[test]
    fn sweep_merges_toward_smaller_neighbor_first() {
        // Middle segment has the lowest usage; it must merge with the
        // usage-3 left neighbor before that joins the usage-9 right one.
        let (p, _, _) = sweep_segments(&[(0.6, 3.0), (0.5, 1.0), (0.7, 9.0)]);
        let merged_left = 0.6 * raise(0.5, 1.0, 3.0);
        let expect = raise(merged_left, 3.0, 9.0) * 0.7;
        assert!((p - expect).abs() < 1e-15);
    }

    #[test]
    fn sweep_cost_is_linear_in_chain_length() {
        let ops_of = |n: usize| {
            let segs: Vec<(f64, f64)> = (0..n)
                .map(|i| (0.5, 1.0 + ((i * 7919) % 101) as f64))
                .collect();
            sweep_segments(&segs).2
        };
        // Pushes, merges, and the drain each touch a segment a bounded
        // number of times: at most 4n operations overall.
        for n in [10, 100, 1000] {
            assert!(ops_of(n) <= 4 * n, "{n}: {} ops", ops_of(n));
        }
    }

    #[test]
    fn chain_reachability_without_shortcuts_is_the_product() {
        assert!((chain_reachability(0.9, 0.5, 0.8, None, None) - 0.36).abs() < 1e-15);
    }

    #[test]
    fn chain_reachability_matches_exhaustive_check() {
        // All 32 presence patterns of the 5-edge stand-in graph.
        let (pa, pm, pc, d1, d2) = (0.3, 0.7, 0.6, 0.2, 0.9);
        let mut expect = 0.0;
        for mask in 0..32u32 {
            let on = |k: u32| mask & (1 << k) != 0;
            let p_of = |k: u32, p: f64| if on(k) { p } else { 1.0 - p };
            let prob = p_of(0, pa) * p_of(1, pm) * p_of(2, pc) * p_of(3, d1) * p_of(4, d2);
            let c_reached = on(0);
            let d_reached = (c_reached && on(1)) || on(4);
            let b_reached = (d_reached && on(2)) || (c_reached && on(3));
            if b_reached {
                expect += prob;
            }
        }
        let got = chain_reachability(pa, pm, pc, Some(d1), Some(d2));
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn single_path_converges_immediately_at_nominal() {
        let g = graph_from(&[("a", "x", 0.5), ("x", "y", 0.5), ("y", "b", 0.5)]);
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        for variation in all_variations() {
            let table = approx_blink(
                &g,
                a,
                &[b].into(),
                variation,
                &ApproxParams::default(),
            )
            .unwrap();
            let expect = score_from_probability(0.125);
            let got = table.get(b).unwrap();
            assert!(
                (got - expect).abs() < 1e-9,
                "{variation:?}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn disjoint_paths_sum_to_exact_score() {
        let g = graph_from(&[
            ("a", "x", 0.7),
            ("x", "y", 0.8),
            ("y", "b", 0.9),
            ("a", "p", 0.6),
            ("p", "q", 0.5),
            ("q", "b", 0.4),
            ("a", "m", 0.5),
            ("m", "b", 0.5),
        ]);
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        let exact = exact_blink_score(&g, a, b).unwrap();
        for variation in all_variations() {
            let table =
                approx_blink(&g, a, &[b].into(), variation, &ApproxParams::default()).unwrap();
            let got = table.get(b).unwrap();
            assert!(
                (got - exact).abs() < 1e-9,
                "{variation:?}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn crossed_routes_rank_above_independent_routes() {
        let build = |cross: bool| {
            let mut bld = GraphBuilder::new();
            let a = bld.intern("a");
            let x = bld.intern("x");
            let y = bld.intern("y");
            let t = bld.intern("t");
            for &(u, v) in &[(a, x), (a, y), (x, t), (y, t)] {
                bld.add_undirected_edge(u, v, 0.5).unwrap();
            }
            if cross {
                bld.add_undirected_edge(x, y, 0.5).unwrap();
            }
            (bld.build(), a, t)
        };
        for variation in [Variation::High, Variation::Medium] {
            let (plain, a1, b1) = build(false);
            let (crossed, a2, b2) = build(true);
            let params = ApproxParams::default();
            let s1 = approx_blink(&plain, a1, &[b1].into(), variation, &params)
                .unwrap()
                .get(b1)
                .unwrap();
            let s2 = approx_blink(&crossed, a2, &[b2].into(), variation, &params)
                .unwrap()
                .get(b2)
                .unwrap();
            assert!(s2 > s1, "{variation:?}: {s2} vs {s1}");
        }
    }

    #[test]
    fn contribution_bounds_hold_each_iteration() {
        let g = graph_from(&[
            ("a", "x", 0.6),
            ("x", "y", 0.7),
            ("y", "b", 0.8),
            ("x", "b", 0.5),
            ("a", "y", 0.4),
            ("a", "b", 0.3),
        ]);
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        let split = split_node_weights(&g);
        let found = enumerate_minimal_paths(
            &split,
            a,
            &PathFilterParams {
                t1: 1e-12,
                t2: 1e-12,
                max_paths_per_source: 1000,
            },
            None,
        )
        .unwrap();
        let paths = found[&b].clone();
        let lower: f64 = paths
            .iter()
            .filter(|p| p.length <= 2)
            .map(|p| p.nominal)
            .sum();
        let upper: f64 = paths.iter().map(|p| p.nominal).sum();
        for variation in all_variations() {
            for iters in 0..8 {
                let params = ApproxParams {
                    max_iterations: iters,
                    ..ApproxParams::default()
                };
                let state =
                    refine_path_contributions(&split, a, b, paths.clone(), variation, &params)
                        .unwrap();
                let total = state.total();
                assert!(
                    total >= lower - 1e-12 && total <= upper + 1e-12,
                    "{variation:?} iter {iters}: {total} not in [{lower}, {upper}]"
                );
                for (p, &s) in state.paths.iter().zip(&state.s_hat) {
                    if p.length <= 2 {
                        assert_eq!(s, p.nominal);
                    } else {
                        assert!(s >= 0.0 && s <= p.nominal + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn fallback_uses_best_single_path_nominal() {
        // Chain too weak for the strength filter: no enumerated path, so
        // the score equals the strongest path's nominal.
        let g = graph_from(&[("a", "x", 0.01), ("x", "b", 0.01)]);
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        let params = ApproxParams {
            filters: PathFilterParams {
                t1: 0.01,
                t2: 2e-6,
                max_paths_per_source: 1000,
            },
            ..ApproxParams::default()
        };
        let table = approx_blink(&g, a, &[b].into(), Variation::Medium, &params).unwrap();
        let got = table.get(b).unwrap();
        assert!((got - score_from_probability(1e-4)).abs() < 1e-12);
    }

    #[test]
    fn unreachable_target_scores_zero() {
        let g = graph_from(&[("a", "x", 0.5), ("b", "x", 0.5)]);
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        let table =
            approx_blink(&g, a, &[b].into(), Variation::High, &ApproxParams::default()).unwrap();
        assert_eq!(table.get(b), Some(0.0));
    }

    #[test]
    fn hybrid_rescores_the_head_of_the_table() {
        let g = graph_from(&[
            ("a", "x", 0.9),
            ("x", "y", 0.9),
            ("y", "b", 0.9),
            ("x", "b", 0.8),
            ("a", "c", 0.2),
            ("c", "d", 0.9),
            ("d", "c2", 0.8),
        ]);
        let a = g.node_id("a").unwrap();
        let targets: BTreeSet<NodeId> = ["b", "c", "d", "c2", "x", "y"]
            .iter()
            .map(|n| g.node_id(n).unwrap())
            .collect();
        let params = ApproxParams::default();
        let hybrid = hybrid_blink(&g, a, &targets, Variation::Low, 2, &params).unwrap();
        let high = approx_blink(&g, a, &targets, Variation::High, &params).unwrap();
        let low = approx_blink(&g, a, &targets, Variation::Low, &params).unwrap();
        let head: Vec<NodeId> = low.iter().take(2).map(|(v, _)| v).collect();
        for (v, s) in hybrid.iter() {
            if head.contains(&v) {
                assert_eq!(s, high.get(v).unwrap(), "head entry rescored");
            } else {
                assert_eq!(s, low.get(v).unwrap(), "tail entry untouched");
            }
        }
    }

    #[test]
    fn determinism_across_runs() {
        let g = graph_from(&[
            ("a", "x", 0.6),
            ("x", "y", 0.7),
            ("y", "b", 0.8),
            ("x", "b", 0.5),
            ("a", "y", 0.4),
        ]);
        let a = g.node_id("a").unwrap();
        let targets: BTreeSet<NodeId> =
            [g.node_id("b").unwrap(), g.node_id("y").unwrap()].into();
        for variation in all_variations() {
            let params = ApproxParams::default();
            let t1 = approx_blink(&g, a, &targets, variation, &params).unwrap();
            let t2 = approx_blink(&g, a, &targets, variation, &params).unwrap();
            let rows1: Vec<(NodeId, f64)> = t1.iter().collect();
            let rows2: Vec<(NodeId, f64)> = t2.iter().collect();
            assert_eq!(rows1, rows2);
        }
    }
}
