//! Graphviz dumps of flow networks.

use std::fmt::Write;

use mixfair_core::flow::FlowNetwork;

/// One `digraph` per network. Arcs are labelled `[lower,upper]`, or just the
/// upper bound when the lower bound is zero; the source and sink are boxed.
pub fn network_to_dot(name: &str, net: &FlowNetwork) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    for (v, label) in net.labels().iter().enumerate() {
        let shape = if Some(v) == net.source || Some(v) == net.sink { "box" } else { "ellipse" };
        writeln!(out, "  n{v} [label=\"{}\", shape={shape}];", escape(label)).unwrap();
    }
    for arc in net.arcs() {
        let label = if arc.lower == 0 { arc.upper.to_string() } else { format!("[{},{}]", arc.lower, arc.upper) };
        writeln!(out, "  n{} -> n{} [label=\"{label}\"];", arc.tail, arc.head).unwrap();
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
