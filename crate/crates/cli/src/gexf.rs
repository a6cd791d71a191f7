//! GEXF 1.2 export of the backbone network with per-node analysis
//! attributes, for rendering in standard graph tooling.

use std::collections::BTreeMap;
use std::io::{self, Write};

use coordnet::{fmt_sig9, SimilarityGraph};

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Writes the graph with `community_id` and `node_coordination` node
/// attributes, plus `polarity` when available. Nodes missing an attribute
/// value simply omit it.
pub fn write_gexf<W: Write>(
    graph: &SimilarityGraph,
    community: &BTreeMap<String, u32>,
    coordination: &BTreeMap<String, f64>,
    polarity: Option<&BTreeMap<String, f64>>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">"#
    )?;
    writeln!(out, r#"  <graph defaultedgetype="undirected">"#)?;
    writeln!(out, r#"    <attributes class="node">"#)?;
    writeln!(
        out,
        r#"      <attribute id="0" title="community_id" type="integer"/>"#
    )?;
    writeln!(
        out,
        r#"      <attribute id="1" title="node_coordination" type="double"/>"#
    )?;
    if polarity.is_some() {
        writeln!(
            out,
            r#"      <attribute id="2" title="polarity" type="double"/>"#
        )?;
    }
    writeln!(out, "    </attributes>")?;
    writeln!(out, "    <nodes>")?;
    for v in 0..graph.node_count() as u32 {
        let name = graph.node_name(v);
        let escaped = xml_escape(name);
        writeln!(out, r#"      <node id="{escaped}" label="{escaped}">"#)?;
        writeln!(out, "        <attvalues>")?;
        if let Some(c) = community.get(name) {
            writeln!(out, r#"          <attvalue for="0" value="{c}"/>"#)?;
        }
        if let Some(score) = coordination.get(name) {
            writeln!(out, r#"          <attvalue for="1" value="{score:.6}"/>"#)?;
        }
        if let Some(p) = polarity.and_then(|m| m.get(name)) {
            writeln!(out, r#"          <attvalue for="2" value="{p:.6}"/>"#)?;
        }
        writeln!(out, "        </attvalues>")?;
        writeln!(out, "      </node>")?;
    }
    writeln!(out, "    </nodes>")?;
    writeln!(out, "    <edges>")?;
    for (i, &(a, b, w)) in graph.edges().iter().enumerate() {
        writeln!(
            out,
            r#"      <edge id="{i}" source="{}" target="{}" weight="{}"/>"#,
            xml_escape(graph.node_name(a)),
            xml_escape(graph.node_name(b)),
            fmt_sig9(w),
        )?;
    }
    writeln!(out, "    </edges>")?;
    writeln!(out, "  </graph>")?;
    writeln!(out, "</gexf>")?;
    Ok(())
}
