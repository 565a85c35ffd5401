//! Single-unit goal-dependent analysis and the analysis-graph algebra.

mod fixpoint;
mod graph;
mod kleene;
mod unit;

pub use fixpoint::{analyze, analyze_seeded, AnalyzeStats};
pub use graph::{AnalysisGraph, Edge, NodeKey};
pub use kleene::kleene_lfp;
pub use unit::{AnalysisUnit, CLit, CompiledClause};

use std::collections::BTreeMap;

use crate::domain::AbsValue;

/// Answers of the nodes reachable from `entries` along edges.
pub fn reachable_answers(g: &AnalysisGraph, entries: &[NodeKey]) -> BTreeMap<NodeKey, AbsValue> {
    g.reachable(entries)
        .into_iter()
        .map(|k| {
            let v = g.answer(&k).cloned().unwrap_or(AbsValue::Bot);
            (k, v)
        })
        .collect()
}

/// The analysis-graph order: graphs are only partially comparable, so a
/// node of `a` constrains nothing unless `b` has the same call pattern.
pub fn graph_leq(dom: &dyn crate::domain::AbstractDomain, a: &BTreeMap<NodeKey, AbsValue>, b: &BTreeMap<NodeKey, AbsValue>) -> bool {
    a.iter().all(|(k, v)| b.get(k).is_none_or(|w| dom.leq(v, w)))
}
