//! Predicate call-graph SCCs and the per-SCC module partition used by the
//! SCC deletion strategy.

use std::collections::{BTreeMap, BTreeSet};

use super::diff::ModuleDiff;
use super::module::Module;
use super::scc::tarjan;
use super::term::{sym, ClauseId, PredSig, Sym};

fn is_local(m: &Module, sig: &PredSig) -> bool {
    m.exports.contains(sig) || m.defines(sig)
}

fn call_graph(m: &Module) -> (BTreeSet<PredSig>, BTreeMap<PredSig, BTreeSet<PredSig>>) {
    let nodes: BTreeSet<PredSig> = m.defined().into_iter().chain(m.exports.iter().cloned()).collect();
    let mut succ: BTreeMap<PredSig, BTreeSet<PredSig>> = BTreeMap::new();
    for c in &m.clauses {
        for call in c.calls() {
            let sig = call.sig();
            if is_local(m, &sig) {
                succ.entry(c.sig()).or_default().insert(sig);
            }
        }
    }
    (nodes, succ)
}

/// SCCs of the intra-module call graph, callees first.
pub fn pred_scc(m: &Module) -> Vec<BTreeSet<PredSig>> {
    let (nodes, succ) = call_graph(m);
    tarjan(&nodes, &succ).into_iter().map(|c| c.into_iter().collect()).collect()
}

pub fn submodule_name(module: &str, index: usize) -> Sym {
    sym(&format!("{module}#{index}"))
}

/// One synthetic module per predicate SCC, with clauses and diff entries
/// routed by head predicate. Deleted ids are routed through clauses still
/// present in `m`; ids unknown to `m` are dropped.
pub fn split_sources_scc(m: &Module, d: &ModuleDiff) -> (Vec<Module>, Vec<ModuleDiff>) {
    split_sources_scc_with(m, d, |id| m.find(id).map(|c| c.sig()))
}

/// As [`split_sources_scc`] with an explicit lookup for deleted clauses.
pub fn split_sources_scc_with(
    m: &Module,
    d: &ModuleDiff,
    deleted_pred: impl Fn(ClauseId) -> Option<PredSig>,
) -> (Vec<Module>, Vec<ModuleDiff>) {
    let sccs = pred_scc(m);
    let (_, succ) = call_graph(m);
    let owner: BTreeMap<&PredSig, usize> =
        sccs.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |p| (p, i))).collect();

    let mut subs: Vec<Module> = sccs
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut sub = Module::new(&submodule_name(&m.name, i));
            sub.imports = m.imports.clone();
            sub
        })
        .collect();

    for (caller, callees) in &succ {
        let from = owner[caller];
        for callee in callees {
            let to = owner[callee];
            if from != to {
                subs[to].exports.insert(callee.clone());
                let name = subs[to].name.clone();
                subs[from].imports.insert(name);
            }
        }
    }
    for e in &m.exports {
        subs[owner[e]].exports.insert(e.clone());
    }
    for c in &m.clauses {
        subs[owner[&c.sig()]].clauses.push(c.clone());
    }

    let mut diffs = vec![ModuleDiff::default(); subs.len()];
    for c in &d.added {
        if let Some(&i) = owner.get(&c.sig()) {
            diffs[i].added.push(c.clone());
        }
    }
    for &id in &d.deleted {
        if let Some(i) = deleted_pred(id).and_then(|sig| owner.get(&sig).copied()) {
            diffs[i].deleted.insert(id);
        }
    }
    (subs, diffs)
}
