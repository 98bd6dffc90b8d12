use std::collections::BTreeSet;
use std::fmt::Write;

use super::{ProofDag, ProofTree};
use crate::ledger::AccountId;

/// Renders the graph as Graphviz DOT.
///
/// Open statements are dotted circles and proven ones solid. Each
/// justification draws one edge per premise, or a single edge to `True` when
/// it is complete, labelled with its record id. Justifications by accounts in
/// `ai_authors` are coloured green, as are the statements they target.
/// Edges of `highlight` are drawn bold.
pub fn export_dot(
    dag: &ProofDag,
    highlight: Option<&ProofTree>,
    ai_authors: &BTreeSet<AccountId>,
) -> String {
    let mut out = String::from("digraph proof_dag {\n  rankdir=TB;\n  node [shape=circle];\n");

    let ai_targets: BTreeSet<_> = dag
        .justifications()
        .iter()
        .filter(|j| ai_authors.contains(&j.author))
        .map(|j| &j.target)
        .collect();

    let truth = crate::data_layer::StatementId::truth();
    let order =
        std::iter::once(&truth).chain(dag.statements().map(|(s, _)| s).filter(|s| !s.is_truth()));
    for s in order {
        let style = if dag.proven.contains(s) {
            "solid"
        } else {
            "dotted"
        };
        let mut attrs = format!("style={style}");
        if ai_targets.contains(s) {
            attrs.push_str(", color=green");
        }
        let _ = writeln!(out, "  \"{s}\" [{attrs}];");
    }

    for j in dag.justifications() {
        let mut attrs = format!("label=\"{}\"", j.record_id);
        if ai_authors.contains(&j.author) {
            attrs.push_str(", color=green");
        }
        if highlight.is_some_and(|t| t.uses(&j.id)) {
            attrs.push_str(", penwidth=3");
        }
        if j.premises.is_empty() {
            let _ = writeln!(out, "  \"{}\" -> \"True\" [{attrs}];", j.target);
        }
        for p in &j.premises {
            let _ = writeln!(out, "  \"{}\" -> \"{p}\" [{attrs}];", j.target);
        }
    }
    out.push_str("}\n");
    out
}
