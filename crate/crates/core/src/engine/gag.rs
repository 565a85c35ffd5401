//! The global analysis graph: answers of boundary call patterns and the
//! cross-unit dependencies between them.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::analyzer::{AnalysisGraph, NodeKey};
use crate::domain::{AbsValue, DomainKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlobalGraph {
    pub answers: BTreeMap<NodeKey, AbsValue>,
    /// `(src, dst)`: analyzing `src` may call `dst` in another unit.
    pub edges: BTreeSet<(NodeKey, NodeKey)>,
}

impl GlobalGraph {
    pub fn contains(&self, k: &NodeKey) -> bool {
        self.answers.contains_key(k)
    }

    pub fn answer(&self, k: &NodeKey) -> Option<&AbsValue> {
        self.answers.get(k)
    }

    pub fn parents(&self, k: &NodeKey) -> BTreeSet<NodeKey> {
        self.edges.iter().filter(|(_, d)| d == k).map(|(s, _)| s.clone()).collect()
    }

    /// `roots` and every node reachable from them along edges.
    pub fn reachable(&self, roots: &[NodeKey]) -> BTreeSet<NodeKey> {
        let mut succ: BTreeMap<&NodeKey, Vec<&NodeKey>> = BTreeMap::new();
        for (s, d) in &self.edges {
            succ.entry(s).or_default().push(d);
        }
        let mut seen: BTreeSet<NodeKey> = roots.iter().cloned().collect();
        let mut todo: Vec<&NodeKey> = roots.iter().collect();
        while let Some(k) = todo.pop() {
            for d in succ.get(k).into_iter().flatten() {
                if seen.insert((*d).clone()) {
                    todo.push(d);
                }
            }
        }
        seen
    }

    /// Drops nodes outside `keep`, with their edges.
    pub fn retain(&mut self, keep: &BTreeSet<NodeKey>) -> usize {
        let before = self.answers.len();
        self.answers.retain(|k, _| keep.contains(k));
        self.edges.retain(|(s, d)| keep.contains(s) && keep.contains(d));
        before - self.answers.len()
    }

    /// Answers of the nodes reachable from `roots`.
    pub fn reachable_answers(&self, roots: &[NodeKey]) -> BTreeMap<NodeKey, AbsValue> {
        self.reachable(roots)
            .into_iter()
            .filter_map(|k| self.answers.get(&k).map(|v| (k, v.clone())))
            .collect()
    }

    /// Reachable part of the graph, answers and edges.
    pub fn reachable_part(&self, roots: &[NodeKey]) -> GlobalGraph {
        let mut g = self.clone();
        g.retain(&self.reachable(roots));
        g
    }

    pub fn to_json(&self) -> Value {
        let ids: BTreeMap<&NodeKey, usize> = self.answers.keys().enumerate().map(|(i, k)| (k, i)).collect();
        let nodes: Vec<Value> = self
            .answers
            .iter()
            .map(|(k, v)| {
                let mut n = key_to_json(k);
                n["success"] = v.to_json();
                n
            })
            .collect();
        let edges: Vec<Value> = self.edges.iter().map(|(s, d)| json!({"src": ids[s], "dst": ids[d]})).collect();
        json!({"nodes": nodes, "edges": edges})
    }

    pub fn from_json(kind: DomainKind, v: &Value) -> Result<GlobalGraph> {
        let bad = |what: &str| Error::State(format!("malformed global graph: {what}"));
        let mut g = GlobalGraph::default();
        let mut keys = Vec::new();
        for n in v["nodes"].as_array().ok_or_else(|| bad("nodes"))? {
            let k = key_from_json(kind, n)?;
            let success = AbsValue::from_json(kind, k.pred.arity, &n["success"])?;
            g.answers.insert(k.clone(), success);
            keys.push(k);
        }
        for e in v["edges"].as_array().ok_or_else(|| bad("edges"))? {
            let get = |f: &str| {
                e[f].as_u64().and_then(|i| keys.get(i as usize)).cloned().ok_or_else(|| bad("edge endpoint"))
            };
            g.edges.insert((get("src")?, get("dst")?));
        }
        Ok(g)
    }

    /// The same content as an analysis graph (edges carry no literal).
    pub fn as_analysis_graph(&self) -> AnalysisGraph {
        let mut g = AnalysisGraph::new();
        for (k, v) in &self.answers {
            g.upd_answer(k.clone(), v.clone());
        }
        g
    }
}

pub fn key_to_json(k: &NodeKey) -> Value {
    json!({
        "module": &*k.pred.module,
        "pred": &*k.pred.name,
        "arity": k.pred.arity,
        "call": k.call.to_json(),
    })
}

pub fn key_from_json(kind: DomainKind, v: &Value) -> Result<NodeKey> {
    let bad = |what: &str| Error::State(format!("malformed node key: {what}"));
    let s = |f: &str| v[f].as_str().ok_or_else(|| bad(f));
    let arity = v["arity"].as_u64().ok_or_else(|| bad("arity"))? as usize;
    let pred = crate::ir::PredId { module: crate::ir::sym(s("module")?), name: crate::ir::sym(s("pred")?), arity };
    Ok(NodeKey::new(pred, AbsValue::from_json(kind, arity, &v["call"])?))
}
