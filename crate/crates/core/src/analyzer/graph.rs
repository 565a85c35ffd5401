//! Analysis graphs: call-pattern nodes with answers and literal-labelled
//! dependency edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::domain::{position_name, AbsValue, DomainKind};
use crate::error::{Error, Result};
use crate::ir::{sym, ClauseId, PredId};

/// A call pattern `<p, call>`, with `call` over the head positions of `p`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeKey {
    pub pred: PredId,
    pub call: AbsValue,
}

impl NodeKey {
    pub fn new(pred: PredId, call: AbsValue) -> Self {
        NodeKey { pred, call }
    }

    /// `name(A,B): <call>` with positional names.
    pub fn label(&self) -> String {
        let names: Vec<String> = (0..self.pred.arity).map(position_name).collect();
        let head = if names.is_empty() { self.pred.name.to_string() } else { format!("{}({})", self.pred.name, names.join(",")) };
        format!("{head}: {}", self.call.show(&names))
    }
}

/// `src` calls `dst` at literal `lit` of clause `clause`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: NodeKey,
    pub clause: ClauseId,
    pub lit: usize,
    pub dst: NodeKey,
}

type OutLabel = (ClauseId, usize, NodeKey);
type InLabel = (NodeKey, ClauseId, usize);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnalysisGraph {
    answers: BTreeMap<NodeKey, AbsValue>,
    out: BTreeMap<NodeKey, BTreeSet<OutLabel>>,
    inc: BTreeMap<NodeKey, BTreeSet<InLabel>>,
}

impl AnalysisGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn contains(&self, k: &NodeKey) -> bool {
        self.answers.contains_key(k)
    }

    pub fn answer(&self, k: &NodeKey) -> Option<&AbsValue> {
        self.answers.get(k)
    }

    pub fn answers(&self) -> &BTreeMap<NodeKey, AbsValue> {
        &self.answers
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeKey> {
        self.answers.keys()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.out.iter().flat_map(|(src, ls)| {
            ls.iter().map(move |(clause, lit, dst)| Edge { src: src.clone(), clause: *clause, lit: *lit, dst: dst.clone() })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.out.values().map(BTreeSet::len).sum()
    }

    /// Overwrites the answer of `k`, creating the node if needed.
    pub fn upd_answer(&mut self, k: NodeKey, v: AbsValue) {
        self.answers.insert(k, v);
    }

    /// Inserts `k` with a bottom answer unless present. Returns true if new.
    pub fn ensure(&mut self, k: &NodeKey) -> bool {
        if self.answers.contains_key(k) {
            return false;
        }
        self.answers.insert(k.clone(), AbsValue::Bot);
        true
    }

    /// Adds an edge (set semantics), creating missing endpoints as bottom.
    pub fn upd_edge(&mut self, e: Edge) {
        self.ensure(&e.src);
        self.ensure(&e.dst);
        self.inc.entry(e.dst.clone()).or_default().insert((e.src.clone(), e.clause, e.lit));
        self.out.entry(e.src).or_default().insert((e.clause, e.lit, e.dst));
    }

    /// Replaces the outgoing edges of `src`.
    pub fn set_out_edges(&mut self, src: &NodeKey, edges: BTreeSet<(ClauseId, usize, NodeKey)>) {
        if let Some(old) = self.out.remove(src) {
            for (clause, lit, dst) in old {
                if let Some(ins) = self.inc.get_mut(&dst) {
                    ins.remove(&(src.clone(), clause, lit));
                    if ins.is_empty() {
                        self.inc.remove(&dst);
                    }
                }
            }
        }
        for (clause, lit, dst) in edges {
            self.upd_edge(Edge { src: src.clone(), clause, lit, dst });
        }
    }

    pub fn out_edges(&self, k: &NodeKey) -> impl Iterator<Item = &(ClauseId, usize, NodeKey)> {
        self.out.get(k).into_iter().flatten()
    }

    pub fn parents(&self, k: &NodeKey) -> BTreeSet<NodeKey> {
        self.inc.get(k).into_iter().flatten().map(|(s, _, _)| s.clone()).collect()
    }

    pub fn children(&self, k: &NodeKey) -> BTreeSet<NodeKey> {
        self.out_edges(k).map(|(_, _, d)| d.clone()).collect()
    }

    pub fn has_incoming(&self, k: &NodeKey) -> bool {
        self.inc.get(k).is_some_and(|s| !s.is_empty())
    }

    /// Removes nodes with their incident edges. Returns the surviving nodes
    /// that lost an outgoing edge.
    pub fn del_nodes<'a>(&mut self, keys: impl IntoIterator<Item = &'a NodeKey>) -> BTreeSet<NodeKey> {
        let keys: BTreeSet<&NodeKey> = keys.into_iter().collect();
        let mut orphaned = BTreeSet::new();
        for k in &keys {
            if self.answers.remove(*k).is_none() {
                continue;
            }
            self.set_out_edges(k, BTreeSet::new());
            if let Some(ins) = self.inc.remove(*k) {
                for (src, clause, lit) in ins {
                    if let Some(o) = self.out.get_mut(&src) {
                        o.remove(&(clause, lit, (*k).clone()));
                        if o.is_empty() {
                            self.out.remove(&src);
                        }
                    }
                    orphaned.insert(src);
                }
            }
        }
        orphaned.retain(|k| self.answers.contains_key(k));
        orphaned
    }

    fn closure(&self, start: impl IntoIterator<Item = NodeKey>, step: impl Fn(&NodeKey) -> BTreeSet<NodeKey>) -> BTreeSet<NodeKey> {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<NodeKey> = start.into_iter().collect();
        while let Some(k) = todo.pop() {
            for n in step(&k) {
                if seen.insert(n.clone()) {
                    todo.push(n);
                }
            }
        }
        seen
    }

    /// Nodes with a path to `k`; `k` itself only if it lies on a cycle.
    pub fn ancestors(&self, k: &NodeKey) -> BTreeSet<NodeKey> {
        self.closure([k.clone()], |n| self.parents(n))
    }

    /// Nodes reachable from some of `ks` by a nonempty path.
    pub fn descendants<'a>(&self, ks: impl IntoIterator<Item = &'a NodeKey>) -> BTreeSet<NodeKey> {
        self.closure(ks.into_iter().cloned(), |n| self.children(n))
    }

    /// `ks` plus everything reachable from them.
    pub fn reachable<'a>(&self, ks: impl IntoIterator<Item = &'a NodeKey>) -> BTreeSet<NodeKey> {
        let ks: Vec<&NodeKey> = ks.into_iter().filter(|k| self.contains(k)).collect();
        let mut r = self.descendants(ks.iter().copied());
        r.extend(ks.into_iter().cloned());
        r
    }

    /// The set removed by `del_dependent`: the calls, their ancestors, and
    /// every node sharing an ancestor with a call.
    pub fn dependent_set(&self, calls: &BTreeSet<NodeKey>) -> BTreeSet<NodeKey> {
        let calls: BTreeSet<NodeKey> = calls.iter().filter(|k| self.contains(k)).cloned().collect();
        let mut anc = BTreeSet::new();
        for c in &calls {
            anc.extend(self.ancestors(c));
        }
        let mut out = self.descendants(&anc);
        out.extend(anc);
        out.extend(calls);
        out
    }

    /// Deletes [`dependent_set`](Self::dependent_set). Returns the deleted
    /// nodes and the survivors that lost an outgoing edge.
    pub fn del_dependent(&mut self, calls: &BTreeSet<NodeKey>) -> (BTreeSet<NodeKey>, BTreeSet<NodeKey>) {
        let doomed = self.dependent_set(calls);
        let orphaned = self.del_nodes(&doomed);
        (doomed, orphaned)
    }

    /// The subgraph induced by `keep`.
    pub fn restrict(&self, keep: &BTreeSet<NodeKey>) -> AnalysisGraph {
        let mut g = AnalysisGraph::new();
        for k in keep {
            if let Some(v) = self.answers.get(k) {
                g.answers.insert(k.clone(), v.clone());
            }
        }
        for e in self.edges() {
            if keep.contains(&e.src) && keep.contains(&e.dst) {
                g.upd_edge(e);
            }
        }
        g
    }

    pub fn to_json(&self) -> Value {
        let ids: BTreeMap<&NodeKey, usize> = self.answers.keys().enumerate().map(|(i, k)| (k, i)).collect();
        let nodes: Vec<Value> = self
            .answers
            .iter()
            .map(|(k, v)| {
                json!({
                    "module": &*k.pred.module,
                    "pred": &*k.pred.name,
                    "arity": k.pred.arity,
                    "call": k.call.to_json(),
                    "success": v.to_json(),
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges()
            .map(|e| json!({"src": ids[&e.src], "clause": e.clause.to_string(), "lit": e.lit, "dst": ids[&e.dst]}))
            .collect();
        json!({"nodes": nodes, "edges": edges})
    }

    pub fn from_json(kind: DomainKind, v: &Value) -> Result<AnalysisGraph> {
        let bad = |what: &str| Error::State(format!("malformed graph: {what}"));
        let mut g = AnalysisGraph::new();
        let mut keys = Vec::new();
        for n in v["nodes"].as_array().ok_or_else(|| bad("nodes"))? {
            let field = |f: &str| n[f].as_str().ok_or_else(|| bad(f));
            let arity = n["arity"].as_u64().ok_or_else(|| bad("arity"))? as usize;
            let pred = PredId { module: sym(field("module")?), name: sym(field("pred")?), arity };
            let call = AbsValue::from_json(kind, arity, &n["call"])?;
            let success = AbsValue::from_json(kind, arity, &n["success"])?;
            let key = NodeKey::new(pred, call);
            g.answers.insert(key.clone(), success);
            keys.push(key);
        }
        for e in v["edges"].as_array().ok_or_else(|| bad("edges"))? {
            let idx = |f: &str| -> Result<&NodeKey> {
                let i = e[f].as_u64().ok_or_else(|| bad(f))? as usize;
                keys.get(i).ok_or_else(|| bad("edge endpoint"))
            };
            let clause: ClauseId =
                e["clause"].as_str().and_then(|s| s.parse().ok()).ok_or_else(|| bad("clause"))?;
            let lit = e["lit"].as_u64().ok_or_else(|| bad("lit"))? as usize;
            g.upd_edge(Edge { src: idx("src")?.clone(), clause, lit, dst: idx("dst")?.clone() });
        }
        Ok(g)
    }

    /// DOT rendering; node ids are prefixed with `prefix` so several graphs
    /// can share one file.
    pub fn write_dot(&self, out: &mut String, prefix: &str, style: &str) {
        let ids: BTreeMap<&NodeKey, usize> = self.answers.keys().enumerate().map(|(i, k)| (k, i)).collect();
        for (k, v) in &self.answers {
            let names: Vec<String> = (0..k.pred.arity).map(position_name).collect();
            let label = format!("{} -> {}", k.label(), v.show(&names));
            let _ = writeln!(out, "  {prefix}{} [label=\"{}\"{style}];", ids[k], label.replace('"', "\\\""));
        }
        for e in self.edges() {
            let _ = writeln!(
                out,
                "  {prefix}{} -> {prefix}{} [label=\"{},{}\"{style}];",
                ids[&e.src], ids[&e.dst], e.clause, e.lit
            );
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lag {\n  node [shape=box];\n");
        self.write_dot(&mut s, "n", "");
        s.push_str("}\n");
        s
    }
}
