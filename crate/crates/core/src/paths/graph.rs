//! Layered graph of distinguishable outcomes: one layer per retained record,
//! edges between consecutive layers weighted by their joint probability.

use std::fmt::Write as _;

use serde::Serialize;

use super::distribution::OutcomeDistribution;
use crate::hilbert::STRUCTURE_TOL;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphLayer {
    pub agent: String,
    pub labels: Vec<String>,
    /// Single-record marginal of each label.
    pub marginals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphEdge {
    /// Index of the source layer; the target is the next layer.
    pub layer: usize,
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealPathGraph {
    pub layers: Vec<GraphLayer>,
    pub edges: Vec<GraphEdge>,
}

pub fn real_path_graph(d: &OutcomeDistribution) -> RealPathGraph {
    let axes = d.axes();
    let layers = axes
        .iter()
        .map(|a| {
            let m = d.marginal(&[a.agent.as_str()]).expect("own agent");
            GraphLayer {
                agent: a.agent.clone(),
                labels: a.labels.clone(),
                marginals: m.weights().to_vec(),
            }
        })
        .collect();
    let mut edges = Vec::new();
    for (layer, pair) in axes.windows(2).enumerate() {
        let joint = d
            .marginal(&[pair[0].agent.as_str(), pair[1].agent.as_str()])
            .expect("own agents");
        let width = pair[1].labels.len();
        for (i, &weight) in joint.weights().iter().enumerate() {
            edges.push(GraphEdge {
                layer,
                from: i / width,
                to: i % width,
                weight,
                zero: weight <= STRUCTURE_TOL,
            });
        }
    }
    RealPathGraph { layers, edges }
}

impl RealPathGraph {
    fn node(&self, agent: &str, label: &str) -> Option<(usize, usize)> {
        let l = self.layers.iter().position(|x| x.agent == agent)?;
        let n = self.layers[l].labels.iter().position(|x| x == label)?;
        Some((l, n))
    }

    /// True when a nonzero edge joins the two outcomes of adjacent layers.
    pub fn has_pathway(&self, a: (&str, &str), b: (&str, &str)) -> bool {
        let (Some(x), Some(y)) = (self.node(a.0, a.1), self.node(b.0, b.1)) else {
            return false;
        };
        let (from, to) = if x.0 <= y.0 { (x, y) } else { (y, x) };
        if to.0 != from.0 + 1 {
            return false;
        }
        self.edges
            .iter()
            .any(|e| e.layer == from.0 && e.from == from.1 && e.to == to.1 && !e.zero)
    }

    pub fn nonzero_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.zero).count()
    }

    /// Graphviz digraph, one rank per layer; vanishing edges are dashed.
    pub fn to_dot(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(title));
        let _ = writeln!(out, "  rankdir=LR;");
        let _ = writeln!(out, "  node [shape=box];");
        for (l, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{l} {{");
            let _ = writeln!(out, "    label=\"{}\";", escape(&layer.agent));
            let _ = writeln!(out, "    rank=same;");
            for (n, (label, p)) in layer.labels.iter().zip(&layer.marginals).enumerate() {
                let _ = writeln!(
                    out,
                    "    n{l}_{n} [label=\"{}\\n{}\"];",
                    escape(label),
                    fmt_weight(*p)
                );
            }
            let _ = writeln!(out, "  }}");
        }
        for e in &self.edges {
            let style = if e.zero { ", style=dashed" } else { "" };
            let _ = writeln!(
                out,
                "  n{}_{} -> n{}_{} [label=\"{}\"{style}];",
                e.layer,
                e.from,
                e.layer + 1,
                e.to,
                fmt_weight(e.weight)
            );
        }
        out.push_str("}\n");
        out
    }
}

fn fmt_weight(p: f64) -> String {
    format!("{p:.6}")
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::distribution::RecordAxis;

    fn axis(agent: &str, labels: &[&str]) -> RecordAxis {
        RecordAxis {
            agent: agent.into(),
            labels: labels.iter().map(|l| l.to_string()).collect(),
        }
    }

    #[test]
    fn single_layer_has_no_edges() {
        let d = OutcomeDistribution::new(
            vec![axis("A", &["x", "y"])],
            vec![],
            vec![0.5, 0.5],
            "".into(),
        );
        let g = real_path_graph(&d);
        assert_eq!(g.layers.len(), 1);
        assert!(g.edges.is_empty());
        assert!(g.to_dot("t").contains("n0_1"));
    }

    #[test]
    fn zero_edges_are_dashed() {
        let d = OutcomeDistribution::new(
            vec![axis("A", &["x", "y"]), axis("B", &["u", "v"])],
            vec![],
            vec![0.5, 0.0, 0.25, 0.25],
            "".into(),
        );
        let g = real_path_graph(&d);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(g.nonzero_edges(), 3);
        assert!(!g.has_pathway(("A", "x"), ("B", "v")));
        assert!(g.has_pathway(("B", "u"), ("A", "y")));
        let dot = g.to_dot("t");
        assert!(
            dot.contains("n0_0 -> n1_1 [label=\"0.000000\", style=dashed]"),
            "{dot}"
        );
        // outgoing weights add up to the source marginal
        let out: f64 = g
            .edges
            .iter()
            .filter(|e| e.from == 1)
            .map(|e| e.weight)
            .sum();
        assert!((out - g.layers[0].marginals[1]).abs() < 1e-15);
    }
}
