//! Deletion by re-running the modular algorithm over the predicate SCCs of
//! one unit.

use std::collections::{BTreeMap, BTreeSet};

use super::gag::GlobalGraph;
use super::state::EngineState;
use super::units::UnitProgram;
use super::{reseed, run, Ctx, DelStrategy, RunStats};
use crate::analyzer::{AnalysisGraph, AnalysisUnit, NodeKey};
use crate::error::Result;
use crate::ir::scc::tarjan;
use crate::ir::{submodule_name, PredId, Sym};

/// One sub-unit per predicate SCC of `unit`. A sub-unit exports the
/// predicates other SCCs call plus the unit's own exports.
pub fn scc_units(unit: &AnalysisUnit) -> UnitProgram {
    let cg = unit.call_graph();
    let sccs = tarjan(&unit.local, &cg);
    let owner: BTreeMap<&PredId, usize> =
        sccs.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |p| (p, i))).collect();
    let mut subs: Vec<AnalysisUnit> = sccs
        .iter()
        .enumerate()
        .map(|(i, s)| unit.restrict(&submodule_name(&unit.name, i), &s.iter().cloned().collect()))
        .collect();
    for (caller, callees) in &cg {
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
    for e in &unit.exports {
        if let Some(&i) = owner.get(e) {
            subs[i].exports.insert(e.clone());
        }
    }
    let order: Vec<Sym> = subs.iter().rev().map(|s| s.name.clone()).collect();
    UnitProgram::from_units(subs, order, BTreeMap::new())
}

/// Distributes `lag` over the sub-units: each gets its own nodes with their
/// outgoing edges and copies of the callees. The global graph mirrors the
/// exported and external nodes with the cross-unit dependencies.
pub fn split_in_scc(lag: &AnalysisGraph, sub: &UnitProgram) -> (GlobalGraph, BTreeMap<Sym, AnalysisGraph>) {
    let mut lags: BTreeMap<Sym, AnalysisGraph> = sub.order.iter().map(|n| (n.clone(), AnalysisGraph::new())).collect();
    for (k, v) in lag.answers() {
        if let Some(owner) = sub.unit_of(&k.pred) {
            lags.get_mut(owner).expect("sub-unit").upd_answer(k.clone(), v.clone());
        }
    }
    for e in lag.edges() {
        let Some(owner) = sub.unit_of(&e.src.pred) else { continue };
        let g = lags.get_mut(owner).expect("sub-unit");
        if !g.contains(&e.dst) {
            g.upd_answer(e.dst.clone(), lag.answer(&e.dst).cloned().expect("edge endpoint"));
        }
        g.upd_edge(e);
    }
    let mut gag = GlobalGraph::default();
    for (name, g) in &lags {
        let unit = sub.get(name);
        for (k, v) in g.answers() {
            if !unit.is_local(&k.pred) || unit.exports.contains(&k.pred) {
                gag.answers.insert(k.clone(), v.clone());
            }
        }
        for k in g.nodes().filter(|k| unit.exports.contains(&k.pred)) {
            for d in g.reachable([k]) {
                if !unit.is_local(&d.pred) {
                    gag.edges.insert((k.clone(), d));
                }
            }
        }
    }
    (gag, lags)
}

/// Merges sub-unit graphs back into one. Each node takes its owner's
/// answer. Returns the merged graph and the nodes whose edges pointed at a
/// callee copy that disagrees with (or is missing from) its owner.
pub fn flatten(lags: &BTreeMap<Sym, AnalysisGraph>, sub: &UnitProgram) -> (AnalysisGraph, BTreeSet<NodeKey>) {
    let mut out = AnalysisGraph::new();
    for (name, g) in lags {
        let unit = sub.get(name);
        for (k, v) in g.answers().iter().filter(|(k, _)| unit.is_local(&k.pred)) {
            out.upd_answer(k.clone(), v.clone());
        }
    }
    for g in lags.values() {
        for (k, v) in g.answers().iter().filter(|(k, _)| sub.unit_of(&k.pred).is_none()) {
            if !out.contains(k) {
                out.upd_answer(k.clone(), v.clone());
            }
        }
    }
    let mut stale = BTreeSet::new();
    for g in lags.values() {
        for e in g.edges() {
            let consistent = match out.answer(&e.dst) {
                None => false,
                Some(v) => sub.unit_of(&e.dst.pred).is_none() || Some(v) == g.answer(&e.dst),
            };
            if consistent {
                out.upd_edge(e);
            } else {
                stale.insert(e.src);
            }
        }
    }
    (out, stale)
}

/// Deletion handling that re-analyzes the SCC partition of `u` for the
/// affected call patterns and their callers, then merges the pieces back.
pub fn step_invalid_del_cls_scc(
    state: &mut EngineState,
    ctx: &Ctx<'_>,
    u: &Sym,
    deleted_preds: &BTreeSet<PredId>,
    stats: &mut RunStats,
) -> Result<BTreeSet<NodeKey>> {
    let unit = ctx.units.get(u);
    let Some(lag) = state.lags.get(u) else { return Ok(BTreeSet::new()) };
    let calls: BTreeSet<NodeKey> = lag.nodes().filter(|k| deleted_preds.contains(&k.pred)).cloned().collect();
    if calls.is_empty() {
        return Ok(BTreeSet::new());
    }
    let sub = scc_units(unit);
    let (gag, lags) = split_in_scc(lag, &sub);
    let mut roots = calls.clone();
    for c in &calls {
        roots.extend(lag.ancestors(c));
    }
    let qalpha: Vec<NodeKey> = roots.into_iter().filter(|k| sub.is_exported(&k.pred)).collect();

    let mut inner = EngineState::new(state.domain, state.layout);
    inner.gag = gag;
    inner.lags = lags;
    for p in deleted_preds {
        if let Some(s) = sub.unit_of(p) {
            inner.pending.entry(s.clone()).or_default().deleted.insert(p.clone());
        }
    }
    let inner_ctx = Ctx { units: &sub, dom: ctx.dom, strategy: DelStrategy::Td, policy: ctx.policy };
    let mut inner_stats = RunStats::default();
    run(&inner_ctx, &mut inner, &qalpha, &mut inner_stats, false)?;

    // Sub-units the inner run never reached still owe their invalidation.
    let mut doomed: BTreeSet<NodeKey> = BTreeSet::new();
    for (s, p) in &inner.pending {
        if let Some(g) = inner.lags.get(s) {
            doomed.extend(g.nodes().filter(|k| p.deleted.contains(&k.pred)).cloned());
        }
    }
    let (mut flat, stale) = flatten(&inner.lags, &sub);
    doomed.extend(stale);
    let (deleted, orphans) = flat.del_dependent(&doomed);

    stats.analyzer.add(&inner_stats.analyzer);
    *stats.per_unit.entry(u.clone()).or_default() += inner_stats.clause_evals();
    stats.nodes_deleted += inner_stats.nodes_deleted + deleted.len() as u64;
    state.lags.insert(u.clone(), flat);
    Ok(reseed(state, ctx, u, &deleted, orphans))
}
