use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Edge, ProcessModel};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    schema_version: u32,
    nodes: Vec<String>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    from: String,
    to: String,
    count: u64,
    weight: f64,
}

pub fn model_to_json(model: &ProcessModel) -> serde_json::Value {
    let doc = ModelDoc {
        schema_version: SCHEMA_VERSION,
        nodes: model.nodes().iter().cloned().collect(),
        edges: model
            .edges()
            .iter()
            .map(|((from, to), e)| EdgeDoc {
                from: from.clone(),
                to: to.clone(),
                count: e.count,
                weight: e.weight,
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("model serializes")
}

pub fn model_from_json(value: &serde_json::Value) -> Result<ProcessModel> {
    let doc: ModelDoc = serde_json::from_value(value.clone())
        .map_err(|e| Error::InvalidParameter(format!("model JSON: {e}")))?;
    Ok(ProcessModel::from_weighted_edges(
        doc.nodes,
        doc.edges.into_iter().map(|e| {
            (
                (e.from, e.to),
                Edge {
                    count: e.count,
                    weight: e.weight,
                },
            )
        }),
    ))
}

/// Graphviz rendering; edge labels carry the weight to four decimals.
pub fn model_to_dot(model: &ProcessModel) -> String {
    let mut out = String::from("digraph process_model {\n  rankdir=LR;\n  node [shape=box];\n");
    for node in model.nodes() {
        let _ = writeln!(out, "  \"{}\";", dot_escape(node));
    }
    for ((from, to), edge) in model.edges() {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{:.4}\"];",
            dot_escape(from),
            dot_escape(to),
            edge.weight
        );
    }
    out.push_str("}\n");
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_json() {
        let model = ProcessModel::from_counts(
            Vec::new(),
            vec![
                (("A".into(), "B".into()), 3),
                (("A".into(), "C\"x".into()), 1),
            ],
        );
        let dot = model_to_dot(&model);
        assert!(dot.contains("\"A\" -> \"B\" [label=\"0.7500\"]"));
        assert!(dot.contains("C\\\"x"));
        let json = model_to_json(&model);
        assert_eq!(json["schema_version"], SCHEMA_VERSION);
        assert_eq!(json["edges"][0]["count"], 3);
        assert_eq!(model_from_json(&json).unwrap(), model);
    }
}
