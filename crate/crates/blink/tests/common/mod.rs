#![allow(dead_code)]

use blink::{GraphBuilder, NodeId, WeightedGraph};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random digraph with exactly `edges` distinct ordered pairs. With
/// `fallible`, roughly half the nodes get a weight below one.
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    nodes: usize,
    edges: usize,
    fallible: bool,
) -> WeightedGraph {
    assert!(edges <= nodes * (nodes - 1));
    let mut b = GraphBuilder::new();
    let ids: Vec<NodeId> = (0..nodes).map(|i| b.intern(&format!("n{i}"))).collect();
    if fallible {
        for &v in &ids {
            if rng.random_bool(0.5) {
                b.set_node_weight(v, rng.random_range(0.3..0.95)).unwrap();
            }
        }
    }
    let mut pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    while pairs.len() < edges {
        let u = rng.random_range(0..nodes as u32);
        let v = rng.random_range(0..nodes as u32);
        if u != v {
            pairs.insert((u, v));
        }
    }
    for &(u, v) in &pairs {
        let w = rng.random_range(0.05..0.95);
        b.add_edge(ids[u as usize], ids[v as usize], w).unwrap();
    }
    b.build()
}

pub fn distinct_pair(rng: &mut ChaCha8Rng, g: &WeightedGraph) -> (NodeId, NodeId) {
    let n = g.node_count() as u32;
    loop {
        let a = NodeId(rng.random_range(0..n));
        let b = NodeId(rng.random_range(0..n));
        if a != b {
            return (a, b);
        }
    }
}

/// Reference reachability by enumerating every on/off configuration of the
/// uncertain elements directly on the input graph. Shares nothing with the
/// library's factoring or splitting machinery, so disagreements implicate
/// exactly one side. Endpoints are exempt from their own node weights.
pub fn brute_reachability(g: &WeightedGraph, a: NodeId, b: NodeId) -> f64 {
    let edges = g.edges();
    let random_edges: Vec<usize> = edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.weight < 1.0)
        .map(|(i, _)| i)
        .collect();
    let fallible: Vec<NodeId> = g
        .nodes()
        .filter(|&v| g.node_weight(v) < 1.0 && v != a && v != b)
        .collect();
    let bits = random_edges.len() + fallible.len();
    assert!(bits <= 20, "oracle is limited to 2^20 configurations");
    let n = g.node_count();
    let mut present = vec![true; edges.len()];
    let mut active = vec![true; n];
    let mut total = 0.0f64;
    for mask in 0u32..(1u32 << bits) {
        let mut p = 1.0f64;
        for (k, &ei) in random_edges.iter().enumerate() {
            let on = mask >> k & 1 == 1;
            let w = edges[ei].weight;
            p *= if on { w } else { 1.0 - w };
            present[ei] = on;
        }
        for (k, &v) in fallible.iter().enumerate() {
            let on = mask >> (random_edges.len() + k) & 1 == 1;
            let w = g.node_weight(v);
            p *= if on { w } else { 1.0 - w };
            active[v.index()] = on;
        }
        if p > 0.0 && configuration_reaches(g, &present, &active, a, b) {
            total += p;
        }
    }
    total
}

fn configuration_reaches(
    g: &WeightedGraph,
    present: &[bool],
    active: &[bool],
    a: NodeId,
    b: NodeId,
) -> bool {
    let edges = g.edges();
    let mut seen = vec![false; g.node_count()];
    seen[a.index()] = true;
    let mut stack = vec![a];
    while let Some(u) = stack.pop() {
        if u == b {
            return true;
        }
        for (i, e) in edges.iter().enumerate() {
            if e.src == u && present[i] && active[e.dst.index()] && !seen[e.dst.index()] {
                seen[e.dst.index()] = true;
                stack.push(e.dst);
            }
        }
    }
    false
}
