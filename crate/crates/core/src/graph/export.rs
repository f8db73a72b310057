//! Graph serialization: DOT, GraphML 1.0, and a JSON mirror of the
//! in-memory model. All emission follows the graph's stored (already
//! sorted) node and edge order, so output bytes are stable for a fixed
//! graph.

use super::CooccurrenceGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    GraphMl,
    StructuredText,
}

/// Serialize a graph. Output is byte-stable: exporting the same graph twice
/// yields identical bytes.
pub fn export_graph(g: &CooccurrenceGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Dot => to_dot(g),
        ExportFormat::GraphMl => to_graphml(g),
        ExportFormat::StructuredText => {
            let mut s = serde_json::to_string_pretty(g).expect("graph serializes");
            s.push('\n');
            s
        }
    }
}

/// Read back a graph produced by [`ExportFormat::StructuredText`].
pub fn import_graph(data: &str) -> Result<CooccurrenceGraph> {
    serde_json::from_str(data).map_err(|e| Error::DataIntegrity(format!("graph import: {e}")))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn to_dot(g: &CooccurrenceGraph) -> String {
    let mut out = String::from("graph G {\n");
    for n in &g.nodes {
        out.push_str(&format!(
            "  \"{}\" [category=\"{}\", label=\"{}\", paper_freq={}];\n",
            dot_escape(&n.cluster_id),
            n.category,
            dot_escape(&n.label),
            n.paper_freq
        ));
    }
    for e in &g.edges {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\" [weight={}];\n",
            dot_escape(&e.a),
            dot_escape(&e.b),
            e.weight
        ));
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn to_graphml(g: &CooccurrenceGraph) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n\
         \x20 <key id=\"d0\" for=\"node\" attr.name=\"category\" attr.type=\"string\"/>\n\
         \x20 <key id=\"d1\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n\
         \x20 <key id=\"d2\" for=\"node\" attr.name=\"paper_freq\" attr.type=\"int\"/>\n\
         \x20 <key id=\"d3\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n\
         \x20 <graph id=\"G\" edgedefault=\"undirected\">\n",
    );
    for n in &g.nodes {
        out.push_str(&format!(
            "    <node id=\"{}\">\n      <data key=\"d0\">{}</data>\n      <data key=\"d1\">{}</data>\n      <data key=\"d2\">{}</data>\n    </node>\n",
            xml_escape(&n.cluster_id),
            n.category,
            xml_escape(&n.label),
            n.paper_freq
        ));
    }
    for e in &g.edges {
        out.push_str(&format!(
            "    <edge source=\"{}\" target=\"{}\">\n      <data key=\"d3\">{}</data>\n    </edge>\n",
            xml_escape(&e.a),
            xml_escape(&e.b),
            e.weight
        ));
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}
