//! The goal-dependent fixpoint analyzer for one unit.

use std::collections::BTreeSet;

use super::graph::{AnalysisGraph, NodeKey};
use super::unit::{AnalysisUnit, CLit, CompiledClause};
use crate::domain::{AbsValue, AbstractDomain};
use crate::error::{Error, Result};
use crate::ir::ClauseId;

/// Work counters of one or more analyzer runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AnalyzeStats {
    /// Clause bodies evaluated.
    pub clause_evals: u64,
    /// Node (re)evaluations.
    pub node_evals: u64,
    /// Strict answer increases.
    pub growths: u64,
    /// Nodes created during analysis.
    pub created: u64,
}

impl AnalyzeStats {
    pub fn add(&mut self, o: &AnalyzeStats) {
        self.clause_evals += o.clause_evals;
        self.node_evals += o.node_evals;
        self.growths += o.growths;
        self.created += o.created;
    }
}

/// Analyzes `unit` for `entries`, starting from `guesses`. Nodes of
/// predicates outside the unit are assumptions: their answers are used as
/// given, and unknown ones are created with a bottom answer.
pub fn analyze(
    unit: &AnalysisUnit,
    dom: &dyn AbstractDomain,
    entries: &[NodeKey],
    guesses: &AnalysisGraph,
) -> Result<AnalysisGraph> {
    for (k, v) in guesses.answers() {
        dom.check(&k.call, k.pred.arity)?;
        dom.check(v, k.pred.arity)?;
    }
    let mut g = guesses.clone();
    let seeds: Vec<NodeKey> =
        guesses.nodes().filter(|k| unit.is_local(&k.pred)).cloned().chain(entries.iter().cloned()).collect();
    analyze_seeded(unit, dom, &mut g, seeds, &mut AnalyzeStats::default())?;
    Ok(g)
}

/// Brings `g` to a fixpoint, re-evaluating only `seeds` and whatever their
/// changes reach. The caller guarantees every other local node is already
/// consistent with its callees.
pub fn analyze_seeded(
    unit: &AnalysisUnit,
    dom: &dyn AbstractDomain,
    g: &mut AnalysisGraph,
    seeds: impl IntoIterator<Item = NodeKey>,
    stats: &mut AnalyzeStats,
) -> Result<()> {
    let mut seeds: Vec<NodeKey> = seeds.into_iter().collect();
    for k in &seeds {
        if !unit.is_local(&k.pred) {
            return Err(Error::BadEntry(k.pred.clone()));
        }
        dom.check(&k.call, k.pred.arity)?;
    }
    seeds.sort();
    seeds.dedup();
    let mut queued: BTreeSet<NodeKey> = BTreeSet::new();
    let mut work: Vec<NodeKey> = Vec::new();
    for k in seeds.into_iter().rev() {
        if g.ensure(&k) {
            stats.created += 1;
        }
        queued.insert(k.clone());
        work.push(k);
    }

    while let Some(k) = work.pop() {
        queued.remove(&k);
        stats.node_evals += 1;
        let mut answer = AbsValue::Bot;
        let mut edges = BTreeSet::new();
        for c in unit.clauses_of(&k.pred) {
            stats.clause_evals += 1;
            let exit = eval_clause(dom, c, &k.call, g, &mut edges, &mut |n: &NodeKey, g: &mut AnalysisGraph| {
                if g.ensure(n) {
                    stats.created += 1;
                    if unit.is_local(&n.pred) && queued.insert(n.clone()) {
                        work.push(n.clone());
                    }
                }
            });
            answer = dom.lub(&answer, &exit);
        }
        g.set_out_edges(&k, edges);
        let old = g.answer(&k).cloned().unwrap_or(AbsValue::Bot);
        let joined = dom.lub(&old, &answer);
        if joined != old {
            stats.growths += 1;
            g.upd_answer(k.clone(), joined);
            let parents: Vec<NodeKey> = g.parents(&k).into_iter().filter(|p| unit.is_local(&p.pred)).collect();
            for p in parents.into_iter().rev() {
                if queued.insert(p.clone()) {
                    work.push(p);
                }
            }
        }
    }
    Ok(())
}

/// Evaluates one clause for call pattern `call` against the current answers,
/// recording the calls it makes. Returns the exit value over the head.
fn eval_clause(
    dom: &dyn AbstractDomain,
    c: &CompiledClause,
    call: &AbsValue,
    g: &mut AnalysisGraph,
    edges: &mut BTreeSet<(ClauseId, usize, NodeKey)>,
    on_call: &mut impl FnMut(&NodeKey, &mut AnalysisGraph),
) -> AbsValue {
    let mut v = dom.extend(call, c.width);
    for (i, lit) in c.body.iter().enumerate() {
        if v.is_bot() {
            break;
        }
        v = match lit {
            CLit::Prim { op, args } => dom.transfer_primitive(op, args, &v),
            CLit::Call { pred, args } => {
                let callee = NodeKey::new(pred.clone(), dom.call_to_entry(&v, args));
                on_call(&callee, g);
                let exit = g.answer(&callee).cloned().unwrap_or(AbsValue::Bot);
                edges.insert((c.id, i, callee));
                dom.exit_to_success(&v, args, &exit)
            }
        };
    }
    // Equalities still hold at clause exit. Re-applying them recovers
    // bindings made before a later literal refined one side (for instance
    // a head unification `D=P` followed by a call binding `P`).
    loop {
        if v.is_bot() {
            break;
        }
        let before = v.clone();
        for lit in &c.body {
            if let CLit::Prim { op, args } = lit {
                v = dom.transfer_primitive(op, args, &v);
            }
        }
        if v == before {
            break;
        }
    }
    let head: Vec<usize> = (0..c.arity).collect();
    dom.project(&v, &head)
}
