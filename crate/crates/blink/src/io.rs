//! Plain-text input formats and score serialization.
//!
//! All graph inputs are UTF-8, tab-separated, one record per line. Lines
//! starting with `#` and blank lines are skipped. Numeric third columns are
//! optional where noted and default to 1.0.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::baselines::ScoreTable;
use crate::error::BlinkError;
use crate::graph::{GraphBuilder, WeightedGraph};
use crate::weighting::DomainKnowledge;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub src: String,
    pub dst: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub node: String,
    pub value: f64,
}

/// A group relation: `value<TAB>member1<TAB>member2...` with at least two
/// members.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRecord {
    pub value: f64,
    pub members: Vec<String>,
}

fn parse_err(line: usize, message: impl Into<String>) -> BlinkError {
    BlinkError::Parse {
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_value(line: usize, field: &str) -> Result<f64, BlinkError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("not a number: {field:?}")))
}

/// `src<TAB>dst<TAB>value`, value optional.
pub fn parse_edge_lines(text: &str) -> Result<Vec<EdgeRecord>, BlinkError> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let mut fields = l.split('\t');
        let src = fields.next().unwrap_or("").trim();
        let dst = fields.next().map(str::trim).unwrap_or("");
        if src.is_empty() || dst.is_empty() {
            return Err(parse_err(line, "expected src<TAB>dst"));
        }
        let value = match fields.next() {
            Some(f) if !f.trim().is_empty() => parse_value(line, f)?,
            _ => 1.0,
        };
        if fields.next().is_some() {
            return Err(parse_err(line, "too many fields"));
        }
        out.push(EdgeRecord {
            src: src.to_owned(),
            dst: dst.to_owned(),
            value,
        });
    }
    Ok(out)
}

/// `node<TAB>value`.
pub fn parse_node_lines(text: &str) -> Result<Vec<NodeRecord>, BlinkError> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let mut fields = l.split('\t');
        let node = fields.next().unwrap_or("").trim();
        let value = fields
            .next()
            .ok_or_else(|| parse_err(line, "expected node<TAB>value"))?;
        if node.is_empty() {
            return Err(parse_err(line, "empty node name"));
        }
        let value = parse_value(line, value)?;
        if fields.next().is_some() {
            return Err(parse_err(line, "too many fields"));
        }
        out.push(NodeRecord {
            node: node.to_owned(),
            value,
        });
    }
    Ok(out)
}

/// `value<TAB>member1<TAB>member2...`.
pub fn parse_group_lines(text: &str) -> Result<Vec<GroupRecord>, BlinkError> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let mut fields = l.split('\t');
        let value = parse_value(line, fields.next().unwrap_or(""))?;
        let members: Vec<String> = fields
            .map(str::trim)
            .filter(|m| !m.is_empty())
            .map(str::to_owned)
            .collect();
        if members.len() < 2 {
            return Err(parse_err(line, "a group needs at least two members"));
        }
        out.push(GroupRecord { value, members });
    }
    Ok(out)
}

/// `old<TAB>new` node-name redirects.
pub fn parse_mapping_lines(text: &str) -> Result<Vec<(String, String)>, BlinkError> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let mut fields = l.split('\t');
        let old = fields.next().unwrap_or("").trim();
        let new = fields.next().map(str::trim).unwrap_or("");
        if old.is_empty() || new.is_empty() {
            return Err(parse_err(line, "expected old<TAB>new"));
        }
        out.push((old.to_owned(), new.to_owned()));
    }
    Ok(out)
}

pub fn read_edge_file(path: impl AsRef<Path>) -> Result<Vec<EdgeRecord>, BlinkError> {
    parse_edge_lines(&std::fs::read_to_string(path)?)
}

pub fn read_node_file(path: impl AsRef<Path>) -> Result<Vec<NodeRecord>, BlinkError> {
    parse_node_lines(&std::fs::read_to_string(path)?)
}

pub fn read_group_file(path: impl AsRef<Path>) -> Result<Vec<GroupRecord>, BlinkError> {
    parse_group_lines(&std::fs::read_to_string(path)?)
}

pub fn read_mapping_file(path: impl AsRef<Path>) -> Result<Vec<(String, String)>, BlinkError> {
    parse_mapping_lines(&std::fs::read_to_string(path)?)
}

/// Assembles frequency-level knowledge from parsed records. Values are
/// frequencies: edge values accumulate per ordered pair, node values
/// overwrite the default 1.0, group values carry the record.
pub fn knowledge_from_records(
    edges: &[EdgeRecord],
    nodes: &[NodeRecord],
    groups: &[GroupRecord],
    gamma: f64,
    undirected: bool,
) -> DomainKnowledge {
    let mut k = DomainKnowledge::new(gamma);
    for e in edges {
        let s = k.intern(&e.src);
        let d = k.intern(&e.dst);
        if s == d {
            continue;
        }
        k.add_edge_frequency(s, d, e.value);
        if undirected {
            k.add_edge_frequency(d, s, e.value);
        }
    }
    for n in nodes {
        let v = k.intern(&n.node);
        k.set_node_frequency(v, n.value);
    }
    for g in groups {
        let members: Vec<u32> = {
            let mut seen = std::collections::BTreeSet::new();
            g.members
                .iter()
                .map(|m| k.intern(m))
                .filter(|&m| seen.insert(m))
                .collect()
        };
        if members.len() >= 2 {
            k.add_record(g.value, &members);
        }
    }
    k
}

/// Builds a probability graph directly: values are weights in (0, 1].
pub fn graph_from_records(
    edges: &[EdgeRecord],
    nodes: &[NodeRecord],
    groups: &[GroupRecord],
    undirected: bool,
) -> Result<WeightedGraph, BlinkError> {
    let mut b = GraphBuilder::new();
    for e in edges {
        let s = b.intern(&e.src);
        let d = b.intern(&e.dst);
        if undirected {
            b.add_undirected_edge(s, d, e.value)?;
        } else {
            b.add_edge(s, d, e.value)?;
        }
    }
    for n in nodes {
        let v = b.intern(&n.node);
        b.set_node_weight(v, n.value)?;
    }
    for g in groups {
        let members: Vec<crate::graph::NodeId> = {
            let mut seen = std::collections::BTreeSet::new();
            g.members
                .iter()
                .map(|m| b.intern(m))
                .filter(|&m| seen.insert(m))
                .collect()
        };
        b.add_hyperedge(&members, g.value)?;
    }
    Ok(b.build())
}

/// `key = value` pairs, one per line, `#` comments. Later occurrences of a
/// key win, so a config can end with local overrides.
#[derive(Debug, Clone, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, BlinkError> {
        let mut map = BTreeMap::new();
        for (line, l) in content_lines(text) {
            let Some((key, value)) = l.split_once('=') else {
                return Err(parse_err(line, "expected key = value"));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(parse_err(line, "empty key"));
            }
            map.insert(key.to_owned(), value.trim().to_owned());
        }
        Ok(Config { map })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Config, BlinkError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, BlinkError> {
        self.map
            .get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| BlinkError::Parse {
                    line: 0,
                    message: format!("config key {key}: not a number: {v:?}"),
                })
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, BlinkError> {
        self.map
            .get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| BlinkError::Parse {
                    line: 0,
                    message: format!("config key {key}: not an integer: {v:?}"),
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, BlinkError> {
        self.map
            .get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| BlinkError::Parse {
                    line: 0,
                    message: format!("config key {key}: not an integer: {v:?}"),
                })
            })
            .transpose()
    }

    /// Comma-separated list of reals.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, BlinkError> {
        self.map
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|p| {
                        p.trim().parse::<f64>().map_err(|_| BlinkError::Parse {
                            line: 0,
                            message: format!("config key {key}: not a number: {p:?}"),
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}

/// 12 significant digits; enough to make determinism checks byte-exact
/// without printing noise beyond double precision.
pub fn format_score(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_score_csv<W: Write>(
    out: &mut W,
    table: &ScoreTable,
    g: &WeightedGraph,
) -> std::io::Result<()> {
    writeln!(out, "node,score")?;
    for (v, s) in table.iter() {
        writeln!(out, "{},{}", g.node_name(v), format_score(s))?;
    }
    Ok(())
}

pub fn write_roc_csv<W: Write>(out: &mut W, points: &[(usize, f64)]) -> std::io::Result<()> {
    writeln!(out, "predictions,true_positive_rate")?;
    for &(n, tpr) in points {
        writeln!(out, "{},{}", n, format_score(tpr))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_lines_with_defaults_and_comments() {
        let text = "# edges\na\tb\t0.5\n\nb\tc\n";
        let recs = parse_edge_lines(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].value, 0.5);
        assert_eq!(recs[1].value, 1.0);
        assert_eq!(recs[1].src, "b");
    }

    #[test]
    fn edge_parse_errors_carry_line_numbers() {
        let err = parse_edge_lines("a\tb\n\nonly_one_field\n").unwrap_err();
        match err {
            BlinkError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected: {other:?}"),
        }
        let err = parse_edge_lines("a\tb\tnot_a_number\n").unwrap_err();
        assert!(matches!(err, BlinkError::Parse { line: 1, .. }));
    }

    #[test]
    fn node_and_group_lines() {
        let nodes = parse_node_lines("x\t0.25\n# c\ny\t1\n").unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[0].value, 0.25);
        let groups = parse_group_lines("0.5\tp\tq\tr\n").unwrap();
        assert_eq!(groups[0].members, ["p", "q", "r"]);
        assert!(parse_group_lines("0.5\tlonely\n").is_err());
    }

    #[test]
    fn mapping_lines() {
        let m = parse_mapping_lines("Old Name\tNew Name\n").unwrap();
        assert_eq!(m[0], ("Old Name".to_owned(), "New Name".to_owned()));
    }

    #[test]
    fn direct_graph_from_records() {
        let edges = parse_edge_lines("a\tb\t0.5\nb\tc\t0.25\n").unwrap();
        let nodes = parse_node_lines("b\t0.8\n").unwrap();
        let g = graph_from_records(&edges, &nodes, &[], false).unwrap();
        assert_eq!(g.node_count(), 3);
        let b = g.node_id("b").unwrap();
        assert!((g.node_weight(b) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn undirected_load_doubles_edges() {
        let edges = parse_edge_lines("a\tb\t0.5\n").unwrap();
        let g = graph_from_records(&edges, &[], &[], true).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn knowledge_load_accumulates() {
        let edges = parse_edge_lines("a\tb\t1\na\tb\t1\n").unwrap();
        let k = knowledge_from_records(&edges, &[], &[], 4.0, false);
        let (a, b) = (k.lookup("a").unwrap(), k.lookup("b").unwrap());
        assert_eq!(k.edge_frequency(a, b), Some(2.0));
    }

    #[test]
    fn config_parse_and_typed_reads() {
        let text = "# run\nmeasure = blink\nb1 = 0.5\nsamples = 1000\nb1_grid = 0.1, 0.2,0.3\nb1 = 0.7\n";
        let c = Config::parse(text).unwrap();
        assert_eq!(c.get("measure"), Some("blink"));
        // Later assignment wins.
        assert_eq!(c.get_f64("b1").unwrap(), Some(0.7));
        assert_eq!(c.get_usize("samples").unwrap(), Some(1000));
        assert_eq!(c.get_f64_list("b1_grid").unwrap().unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(c.get("absent").is_none());
        assert!(Config::parse("no equals sign\n").is_err());
    }

    #[test]
    fn score_formatting_is_stable() {
        assert_eq!(format_score(0.5), "5.00000000000e-1");
        assert_eq!(format_score(1.0 / 3.0), "3.33333333333e-1");
    }

    #[test]
    fn csv_writers() {
        let edges = parse_edge_lines("a\tb\t0.5\n").unwrap();
        let g = graph_from_records(&edges, &[], &[], false).unwrap();
        let table = crate::baselines::ScoreTable::descending(
            g.node_id("a").unwrap(),
            vec![(g.node_id("b").unwrap(), 0.25)],
            &g,
        );
        let mut buf = Vec::new();
        write_score_csv(&mut buf, &table, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "node,score\nb,2.50000000000e-1\n");
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &[(1, 0.5), (2, 1.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("predictions,true_positive_rate\n1,"));
    }
}
