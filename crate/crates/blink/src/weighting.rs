//! Turns domain knowledge (relative frequencies) into edge and node
//! probabilities.
//!
//! Frequencies are dimensionless positive reals: f = 1 is the baseline
//! strength of a relation, f = 2 is worth two independent baseline
//! relations, and so on. Two parameters anchor the map into probability
//! space: b1 for edges and b2 for nodes. The exponential scheme sends f to
//! 1 - (1 - b)^f, so frequencies add exactly the way independent parallel
//! edges merge. The linear scheme sends f to b * f, a small-b approximation
//! of the first; some measures prefer it.

use std::collections::HashMap;

use crate::error::BlinkError;
use crate::graph::{GraphBuilder, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Exponential,
    Linear,
}

/// A weighting scheme with its two anchor probabilities, b1 for edges and
/// b2 for nodes, both in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightScheme {
    pub kind: SchemeKind,
    pub b1: f64,
    pub b2: f64,
}

impl WeightScheme {
    pub fn exponential(b1: f64, b2: f64) -> Self {
        Self::new(SchemeKind::Exponential, b1, b2)
    }

    pub fn linear(b1: f64, b2: f64) -> Self {
        Self::new(SchemeKind::Linear, b1, b2)
    }

    pub fn new(kind: SchemeKind, b1: f64, b2: f64) -> Self {
        assert!(b1 > 0.0 && b1 < 1.0, "b1 must lie in (0,1)");
        assert!(b2 > 0.0 && b2 < 1.0, "b2 must lie in (0,1)");
        WeightScheme { kind, b1, b2 }
    }

    fn element(self, base: f64, f: f64) -> Result<f64, BlinkError> {
        // Infinite frequency pins the element: certain under either scheme.
        if f.is_infinite() {
            return Ok(1.0);
        }
        match self.kind {
            SchemeKind::Exponential => Ok(1.0 - (1.0 - base).powf(f)),
            SchemeKind::Linear => {
                let w = base * f;
                if w > 1.0 {
                    return Err(BlinkError::Range { value: w });
                }
                Ok(w)
            }
        }
    }

    pub fn edge_weight(self, f: f64) -> Result<f64, BlinkError> {
        self.element(self.b1, f)
    }

    pub fn node_weight(self, f: f64) -> Result<f64, BlinkError> {
        self.element(self.b2, f)
    }
}

/// A graph at the frequency level: structure plus f values, before any
/// scheme is chosen. Parallel contributions add their frequencies here, so
/// the realized graph never sees parallel edges.
#[derive(Debug, Clone)]
pub struct DomainKnowledge {
    pub gamma: f64,
    names: Vec<String>,
    index: HashMap<String, u32>,
    node_f: Vec<f64>,
    edge_f: std::collections::BTreeMap<(u32, u32), f64>,
    records: Vec<(f64, Vec<u32>)>,
}

impl DomainKnowledge {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma > 1.0, "log base must exceed 1");
        DomainKnowledge {
            gamma,
            names: Vec::new(),
            index: HashMap::new(),
            node_f: Vec::new(),
            edge_f: std::collections::BTreeMap::new(),
            records: Vec::new(),
        }
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        self.node_f.push(1.0);
        id
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn node_name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn node_frequency(&self, id: u32) -> f64 {
        self.node_f[id as usize]
    }

    pub fn set_node_frequency(&mut self, id: u32, f: f64) {
        assert!(f > 0.0, "frequencies are strictly positive");
        self.node_f[id as usize] = f;
    }

    /// Adds frequency mass to a directed relation; repeated calls for the
    /// same ordered pair accumulate.
    pub fn add_edge_frequency(&mut self, src: u32, dst: u32, f: f64) {
        assert!(f > 0.0, "frequencies are strictly positive");
        *self.edge_f.entry((src, dst)).or_insert(0.0) += f;
    }

    pub fn edge_frequency(&self, src: u32, dst: u32) -> Option<f64> {
        self.edge_f.get(&(src, dst)).copied()
    }

    pub fn edge_frequencies(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.edge_f.iter().map(|(&k, &f)| (k, f))
    }

    /// An all-or-nothing group relation among the members, carried by an
    /// auxiliary node at realization time.
    pub fn add_record(&mut self, f: f64, members: &[u32]) {
        assert!(f > 0.0, "frequencies are strictly positive");
        assert!(members.len() >= 2, "a group relation needs two members");
        self.records.push((f, members.to_vec()));
    }

    pub fn records(&self) -> &[(f64, Vec<u32>)] {
        &self.records
    }

    /// Materializes probabilities under the scheme. Node ids carry over
    /// unchanged; record nodes are appended after all real nodes. Group
    /// records become an auxiliary node whose weight comes from the record
    /// frequency through b2, linked to every member both ways by f = 1
    /// edges (weight b1 under either scheme).
    pub fn apply_weights(&self, scheme: WeightScheme) -> Result<WeightedGraph, BlinkError> {
        let mut b = GraphBuilder::new();
        for name in &self.names {
            b.intern(name);
        }
        for (id, &f) in self.node_f.iter().enumerate() {
            let w = scheme.node_weight(f)?;
            if w < 1.0 {
                b.set_node_weight(crate::graph::NodeId(id as u32), w)?;
            }
        }
        for (&(s, d), &f) in &self.edge_f {
            b.add_edge(
                crate::graph::NodeId(s),
                crate::graph::NodeId(d),
                scheme.edge_weight(f)?,
            )?;
        }
        let link = scheme.edge_weight(1.0)?;
        for (k, (f, members)) in self.records.iter().enumerate() {
            let aux = b.intern_fresh(&format!("rec#{k}"));
            let w = scheme.node_weight(*f)?;
            if w < 1.0 {
                b.set_node_weight(aux, w)?;
            }
            for &m in members {
                let m = crate::graph::NodeId(m);
                b.add_edge(m, aux, link)?;
                b.add_edge(aux, m, link)?;
            }
        }
        Ok(b.build())
    }
}

/// max(1, log_gamma(x)); anything at or below gamma contributes 1.
fn log_floor(gamma: f64, x: f64) -> f64 {
    if x <= gamma {
        return 1.0;
    }
    (x.ln() / gamma.ln()).max(1.0)
}

/// One paper with its author list: the unit of a coauthorship corpus.
#[derive(Debug, Clone)]
pub struct Publication {
    pub paper: String,
    pub authors: Vec<String>,
}

/// Bipartite author/paper knowledge. Papers are certain nodes (infinite
/// frequency). An author's node frequency shrinks with their coauthor
/// count, and every edge out of a node shrinks with that node's fan-out,
/// both on a log_gamma scale.
pub fn coauthorship_knowledge(publications: &[Publication], gamma: f64) -> DomainKnowledge {
    let mut k = DomainKnowledge::new(gamma);
    let mut coauthors: HashMap<u32, std::collections::BTreeSet<u32>> = HashMap::new();
    let mut papers = Vec::new();
    for publication in publications {
        let p = k.intern(&publication.paper);
        papers.push(p);
        let authors: Vec<u32> = publication.authors.iter().map(|a| k.intern(a)).collect();
        for &a in &authors {
            for &other in &authors {
                if other != a {
                    coauthors.entry(a).or_default().insert(other);
                }
            }
        }
        for &a in &authors {
            k.add_edge_frequency(a, p, 1.0);
            k.add_edge_frequency(p, a, 1.0);
        }
    }
    for &p in &papers {
        k.set_node_frequency(p, f64::INFINITY);
    }
    for (a, set) in coauthors {
        k.set_node_frequency(a, 1.0 / log_floor(gamma, set.len() as f64));
    }
    // Out-degree damping replaces the accumulated per-edge mass: an edge
    // from X is worth 1/max(1, log_gamma d_X), not the sum of duplicates.
    let degrees: HashMap<u32, f64> = {
        let mut d: HashMap<u32, usize> = HashMap::new();
        for ((s, _), _) in k.edge_frequencies() {
            *d.entry(s).or_insert(0) += 1;
        }
        d.into_iter().map(|(v, c)| (v, c as f64)).collect()
    };
    let rescored: Vec<((u32, u32), f64)> = k
        .edge_frequencies()
        .map(|((s, d), _)| ((s, d), 1.0 / log_floor(gamma, degrees[&s])))
        .collect();
    for ((s, d), f) in rescored {
        k.set_edge_frequency_raw(s, d, f);
    }
    k
}

/// One page with its outgoing links in citation order.
#[derive(Debug, Clone)]
pub struct PageLinks {
    pub page: String,
    pub links: Vec<String>,
}

/// Citation-graph knowledge. An edge X→Y earns more the earlier it appears
/// on X's page and the fewer citations Y receives; a reciprocal link
/// doubles it. Node frequency follows the same degree-damping shape as the
/// Adamic/Adar denominator, natural logs with the degree floor at 2.
pub fn citation_knowledge(pages: &[PageLinks], gamma: f64) -> DomainKnowledge {
    let mut k = DomainKnowledge::new(gamma);
    let mut out: Vec<(u32, Vec<u32>)> = Vec::new();
    for page in pages {
        let x = k.intern(&page.page);
        let mut seen = std::collections::BTreeSet::new();
        let mut links = Vec::new();
        for name in &page.links {
            let y = k.intern(name);
            // A repeated link keeps its first (best) position.
            if y != x && seen.insert(y) {
                links.push(y);
            }
        }
        out.push((x, links));
    }
    let mut in_degree: HashMap<u32, usize> = HashMap::new();
    let mut linked: std::collections::BTreeSet<(u32, u32)> = std::collections::BTreeSet::new();
    for (x, links) in &out {
        for &y in links {
            *in_degree.entry(y).or_insert(0) += 1;
            linked.insert((*x, y));
        }
    }
    for (x, links) in &out {
        for (pos, &y) in links.iter().enumerate() {
            let i = (pos + 1) as f64;
            let delta = if linked.contains(&(y, *x)) { 2.0 } else { 1.0 };
            let d_in = *in_degree.get(&y).unwrap_or(&0) as f64;
            let f = delta / (log_floor(gamma, i) * log_floor(gamma, d_in));
            k.add_edge_frequency(*x, y, f);
        }
    }
    for id in 0..k.node_count() as u32 {
        let din = *in_degree.get(&id).unwrap_or(&0);
        let dout = out
            .iter()
            .find(|(x, _)| *x == id)
            .map(|(_, l)| l.len())
            .unwrap_or(0);
        let denom = (din.max(2) as f64).ln() + (dout.max(2) as f64).ln();
        k.set_node_frequency(id, 1.0 / denom);
    }
    k
}

impl DomainKnowledge {
    /// Overwrites the frequency of an existing relation instead of adding.
    pub fn set_edge_frequency_raw(&mut self, src: u32, dst: u32, f: f64) {
        assert!(f > 0.0, "frequencies are strictly positive");
        self.edge_f.insert((src, dst), f);
    }
}

/// The parameter grid for the scan: b1 varies fastest in reporting order
/// but the scan is exhaustive, so order only matters for tie-breaking.
#[derive(Debug, Clone)]
pub struct ParamGrid {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        let steps: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        ParamGrid {
            b1: steps.clone(),
            b2: steps,
            gamma: vec![4.0, 5.0, 10.0, 500.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridChoice {
    pub b1: f64,
    pub b2: f64,
    pub gamma: f64,
    pub metric: f64,
}

/// Exhaustive scan, keeping the first point that attains the maximum so
/// ties resolve to the lexicographically smallest (b1, b2, gamma) tuple.
pub fn grid_search<F>(grid: &ParamGrid, mut eval: F) -> GridChoice
where
    F: FnMut(f64, f64, f64) -> f64,
{
    assert!(
        !grid.b1.is_empty() && !grid.b2.is_empty() && !grid.gamma.is_empty(),
        "grid must be non-empty"
    );
    let mut best: Option<GridChoice> = None;
    for &b1 in &grid.b1 {
        for &b2 in &grid.b2 {
            for &gamma in &grid.gamma {
                let metric = eval(b1, b2, gamma);
                let better = match &best {
                    None => true,
                    Some(cur) => metric > cur.metric,
                };
                if better {
                    best = Some(GridChoice {
                        b1,
                        b2,
                        gamma,
                        metric,
                    });
                }
            }
        }
    }
    best.expect("non-empty grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::merge_parallel;

    #[test]
    fn exponential_examples() {
        let s = WeightScheme::exponential(0.5, 0.5);
        assert!((s.edge_weight(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((s.edge_weight(2.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((s.edge_weight(2.0).unwrap() - merge_parallel(0.5, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn linear_examples_and_range_guard() {
        let s = WeightScheme::linear(0.3, 0.3);
        assert!((s.edge_weight(2.0).unwrap() - 0.6).abs() < 1e-15);
        assert!(matches!(
            s.edge_weight(5.0),
            Err(BlinkError::Range { .. })
        ));
    }

    #[test]
    fn infinite_frequency_pins_weight_to_one() {
        for s in [WeightScheme::exponential(0.2, 0.2), WeightScheme::linear(0.2, 0.2)] {
            assert_eq!(s.node_weight(f64::INFINITY).unwrap(), 1.0);
        }
    }

    #[test]
    fn frequency_addition_matches_parallel_merge() {
        let s = WeightScheme::exponential(0.37, 0.5);
        for &(f1, f2) in &[(1.0, 1.0), (0.5, 2.5), (3.0, 0.25), (1.7, 4.1)] {
            let joint = s.edge_weight(f1 + f2).unwrap();
            let merged = merge_parallel(s.edge_weight(f1).unwrap(), s.edge_weight(f2).unwrap());
            assert!((joint - merged).abs() < 1e-15);
        }
    }

    #[test]
    fn small_base_schemes_agree_asymptotically() {
        for &b in &[0.01, 0.005, 0.001] {
            for &f in &[1.0, 2.0, 5.0] {
                let we = WeightScheme::exponential(b, b).edge_weight(f).unwrap();
                let wl = WeightScheme::linear(b, b).edge_weight(f).unwrap();
                assert!((we - wl).abs() / wl <= f * b);
            }
        }
    }

    #[test]
    fn duplicate_relations_accumulate_frequency() {
        let mut k = DomainKnowledge::new(4.0);
        let a = k.intern("a");
        let b = k.intern("b");
        k.add_edge_frequency(a, b, 1.0);
        k.add_edge_frequency(a, b, 1.0);
        assert_eq!(k.edge_frequency(a, b), Some(2.0));
        let g = k.apply_weights(WeightScheme::exponential(0.5, 0.5)).unwrap();
        let e = g.find_edge(crate::graph::NodeId(a), crate::graph::NodeId(b)).unwrap();
        assert!((g.edge(e).weight - 0.75).abs() < 1e-15);
    }

    #[test]
    fn uniform_knowledge_realizes_to_uniform_weights() {
        let mut k = DomainKnowledge::new(4.0);
        let a = k.intern("a");
        let b = k.intern("b");
        let c = k.intern("c");
        k.add_edge_frequency(a, b, 1.0);
        k.add_record(1.0, &[b, c]);
        let g = k.apply_weights(WeightScheme::exponential(0.3, 0.6)).unwrap();
        let e = g.find_edge(crate::graph::NodeId(a), crate::graph::NodeId(b)).unwrap();
        assert!((g.edge(e).weight - 0.3).abs() < 1e-15);
        for v in g.nodes() {
            assert!((g.node_weight(v) - 0.6).abs() < 1e-15);
        }
        // Record node sits after the real nodes, linked both ways at b1.
        assert_eq!(g.node_count(), 4);
        let aux = crate::graph::NodeId(3);
        for m in [b, c] {
            let m = crate::graph::NodeId(m);
            let to = g.find_edge(m, aux).unwrap();
            let from = g.find_edge(aux, m).unwrap();
            assert!((g.edge(to).weight - 0.3).abs() < 1e-15);
            assert!((g.edge(from).weight - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn coauthorship_frequencies() {
        // One prolific author x with 16 solo papers: fan-out 16 = 4^2 gives
        // edge frequency 0.5 at gamma 4; no coauthors keeps node frequency 1.
        let mut pubs: Vec<Publication> = (0..16)
            .map(|i| Publication {
                paper: format!("p{i}"),
                authors: vec!["x".into()],
            })
            .collect();
        // y and z write 4 joint papers: fan-out 4 = gamma keeps edges at 1.
        for i in 0..4 {
            pubs.push(Publication {
                paper: format!("q{i}"),
                authors: vec!["y".into(), "z".into()],
            });
        }
        let k = coauthorship_knowledge(&pubs, 4.0);
        let x = k.lookup("x").unwrap();
        let p0 = k.lookup("p0").unwrap();
        assert!((k.edge_frequency(x, p0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(k.node_frequency(x), 1.0);
        let y = k.lookup("y").unwrap();
        let q0 = k.lookup("q0").unwrap();
        assert!((k.edge_frequency(y, q0).unwrap() - 1.0).abs() < 1e-12);
        // One coauthor is below gamma: max guard keeps node frequency 1.
        assert_eq!(k.node_frequency(y), 1.0);
        // Papers are certain.
        assert!(k.node_frequency(p0).is_infinite());
        let g = k.apply_weights(WeightScheme::exponential(0.5, 0.5)).unwrap();
        assert_eq!(g.node_weight(crate::graph::NodeId(p0)), 1.0);
    }

    #[test]
    fn citation_frequencies() {
        let pages = vec![
            PageLinks {
                page: "a".into(),
                links: vec!["b".into(), "c".into()],
            },
            PageLinks {
                page: "b".into(),
                links: vec!["a".into()],
            },
        ];
        let k = citation_knowledge(&pages, 4.0);
        let (a, b, c) = (
            k.lookup("a").unwrap(),
            k.lookup("b").unwrap(),
            k.lookup("c").unwrap(),
        );
        // Position 1, in-degree 1, reciprocal link b->a exists: doubled.
        assert!((k.edge_frequency(a, b).unwrap() - 2.0).abs() < 1e-12);
        // Position 2 is under gamma, no reciprocation.
        assert!((k.edge_frequency(a, c).unwrap() - 1.0).abs() < 1e-12);
        // Node frequency floors both degrees at 2.
        let expect = 1.0 / (2.0 * 2.0f64.ln());
        assert!((k.node_frequency(c) - expect).abs() < 1e-12);
    }

    #[test]
    fn citation_position_damping() {
        // 17th link with gamma 4: log_4(17) slightly over 2.
        let links: Vec<String> = (0..17).map(|i| format!("t{i}")).collect();
        let pages = vec![PageLinks {
            page: "src".into(),
            links,
        }];
        let k = citation_knowledge(&pages, 4.0);
        let src = k.lookup("src").unwrap();
        let t16 = k.lookup("t16").unwrap();
        let expect = 1.0 / (17.0f64.ln() / 4.0f64.ln());
        assert!((k.edge_frequency(src, t16).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_search_prefers_smallest_tuple_on_ties() {
        let grid = ParamGrid::default();
        let choice = grid_search(&grid, |_, _, _| 1.0);
        assert_eq!((choice.b1, choice.b2, choice.gamma), (0.1, 0.1, 4.0));
    }

    #[test]
    fn grid_search_finds_planted_maximum() {
        let grid = ParamGrid::default();
        let choice = grid_search(&grid, |b1, _, _| -(b1 - 0.5).abs());
        assert!((choice.b1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_point_grid_returns_it() {
        let grid = ParamGrid {
            b1: vec![0.25],
            b2: vec![0.5],
            gamma: vec![10.0],
        };
        let choice = grid_search(&grid, |_, _, _| f64::NEG_INFINITY);
        assert_eq!((choice.b1, choice.b2, choice.gamma), (0.25, 0.5, 10.0));
    }
}
