use std::fmt::Write;

use super::tree::{NodeStatus, UnfoldingTree};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: tree edges solid and labelled by rule, back-links
/// dashed and labelled by their substitution.
pub fn export_tree(tree: &UnfoldingTree) -> String {
    export_forest(std::slice::from_ref(tree))
}

/// Several trees in one graph, one cluster per tree.
pub fn export_forest(trees: &[UnfoldingTree]) -> String {
    let mut out = String::from("digraph unfolding {\n  node [shape=box, fontname=\"monospace\"];\n");
    let single = trees.len() == 1;
    for (k, tree) in trees.iter().enumerate() {
        let id = |n: usize| if single { format!("n{n}") } else { format!("t{k}_n{n}") };
        let indent = if single { "  " } else { "    " };
        if !single {
            let _ = writeln!(out, "  subgraph cluster_{k} {{\n    label=\"disjunct {k}\";");
        }
        for node in &tree.nodes {
            let (status, style) = match &node.status {
                NodeStatus::Open if node.children.is_empty() => ("open".to_string(), ""),
                NodeStatus::Open => (String::new(), ""),
                NodeStatus::ClosedUnsat(r) => (format!("unsat ({r})"), ", color=red"),
                NodeStatus::BackLinked { .. } => ("linked".to_string(), ", color=blue"),
                NodeStatus::SatLeaf(_) => ("sat".to_string(), ", color=green, penwidth=2"),
            };
            let mut label = format!("π{}", node.id);
            if !status.is_empty() {
                let _ = write!(label, " [{status}]");
            }
            let _ = write!(label, "\n{}", tree.full_formula(node.id));
            let _ = writeln!(out, "{indent}{} [label=\"{}\"{style}];", id(node.id), escape(&label));
        }
        for node in &tree.nodes {
            for &c in &node.children {
                let rule = tree.node(c).rule.map(|r| r.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{indent}{} -> {} [label=\"{}\"];", id(node.id), id(c), escape(&rule));
            }
            if let NodeStatus::BackLinked { target, theta } = &node.status {
                let _ = writeln!(
                    out,
                    "{indent}{} -> {} [style=dashed, constraint=false, label=\"{}\"];",
                    id(node.id),
                    id(*target),
                    escape(&theta.to_string())
                );
            }
        }
        if !single {
            out.push_str("  }\n");
        }
    }
    out.push_str("}\n");
    out
}
