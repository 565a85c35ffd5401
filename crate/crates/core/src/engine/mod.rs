//! Incremental modular analysis: per-unit local graphs exchanging boundary
//! answers through a global graph, driven by a queue of call patterns.

mod gag;
mod scc;
mod state;
mod units;

pub use gag::{key_from_json, key_to_json, GlobalGraph};
pub use scc::{flatten, scc_units, split_in_scc, step_invalid_del_cls_scc};
pub use state::{load_state, save_state, EngineState, Pending, STATE_VERSION};
pub use units::{Layout, UnitProgram, WHOLE_PROGRAM};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, trace};

use crate::analyzer::{analyze_seeded, AnalyzeStats, NodeKey};
use crate::domain::{AbsValue, AbstractDomain, DomainKind};
use crate::error::{Error, Result};
use crate::ir::{Diff, PredId, Program, Sym};

/// How clause deletions invalidate a unit's local graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DelStrategy {
    /// Delete the whole dependent cone of the affected nodes.
    Td,
    /// Re-run the modular algorithm over the predicate SCCs of the unit.
    Scc,
}

impl fmt::Display for DelStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DelStrategy::Td => "td",
            DelStrategy::Scc => "scc",
        })
    }
}

impl FromStr for DelStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "td" => Ok(DelStrategy::Td),
            "scc" => Ok(DelStrategy::Scc),
            other => Err(format!("unknown strategy `{other}` (expected td or scc)")),
        }
    }
}

/// Picks the unit to analyze next among those with reachable queued entries.
pub trait SchedulePolicy: fmt::Debug + Send + Sync {
    fn pick(&self, candidates: &BTreeSet<Sym>, order: &[Sym]) -> Sym;
}

/// Importers before importees.
#[derive(Clone, Copy, Debug, Default)]
pub struct TopDown;

impl SchedulePolicy for TopDown {
    fn pick(&self, candidates: &BTreeSet<Sym>, order: &[Sym]) -> Sym {
        order.iter().find(|u| candidates.contains(*u)).or(candidates.first()).cloned().expect("nonempty candidates")
    }
}

/// Importees before importers.
#[derive(Clone, Copy, Debug, Default)]
pub struct BottomUp;

impl SchedulePolicy for BottomUp {
    fn pick(&self, candidates: &BTreeSet<Sym>, order: &[Sym]) -> Sym {
        order.iter().rev().find(|u| candidates.contains(*u)).or(candidates.first()).cloned().expect("nonempty candidates")
    }
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub domain: DomainKind,
    pub layout: Layout,
    pub strategy: DelStrategy,
    pub policy: Arc<dyn SchedulePolicy>,
}

impl EngineOptions {
    pub fn new(domain: DomainKind) -> EngineOptions {
        EngineOptions { domain, layout: Layout::Modular, strategy: DelStrategy::Td, policy: Arc::new(TopDown) }
    }

    pub fn layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn strategy(mut self, strategy: DelStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn policy(mut self, policy: Arc<dyn SchedulePolicy>) -> Self {
        self.policy = policy;
        self
    }
}

/// Wall time per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    /// Local fixpoint computation.
    pub analyze: Duration,
    /// Keeping local graphs in step with the global one.
    pub incact: Duration,
    /// Building units and checking the previous state.
    pub preproc: Duration,
    /// Global graph updates.
    pub updg: Duration,
    /// Invalidation caused by clause deletions.
    pub procdiff: Duration,
}

impl PhaseTimes {
    pub fn add(&mut self, o: &PhaseTimes) {
        self.analyze += o.analyze;
        self.incact += o.incact;
        self.preproc += o.preproc;
        self.updg += o.updg;
        self.procdiff += o.procdiff;
    }

    pub fn total(&self) -> Duration {
        self.analyze + self.incact + self.preproc + self.updg + self.procdiff
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub analyzer: AnalyzeStats,
    pub nodes_deleted: u64,
    pub gag_updates: u64,
    /// Units in the order they were analyzed.
    pub trace: Vec<Sym>,
    /// Clause evaluations per unit.
    pub per_unit: BTreeMap<Sym, u64>,
    pub times: PhaseTimes,
}

impl RunStats {
    pub fn clause_evals(&self) -> u64 {
        self.analyzer.clause_evals
    }

    /// Clause evaluations spent on the clauses of `module`.
    pub fn evals_in(&self, unit: &str) -> u64 {
        self.per_unit.get(unit).copied().unwrap_or(0)
    }

    pub fn add(&mut self, o: &RunStats) {
        self.analyzer.add(&o.analyzer);
        self.nodes_deleted += o.nodes_deleted;
        self.gag_updates += o.gag_updates;
        self.trace.extend(o.trace.iter().cloned());
        for (u, n) in &o.per_unit {
            *self.per_unit.entry(u.clone()).or_default() += n;
        }
        self.times.add(&o.times);
    }
}

/// What one engine loop works with.
pub struct Ctx<'a> {
    pub units: &'a UnitProgram,
    pub dom: &'static dyn AbstractDomain,
    pub strategy: DelStrategy,
    pub policy: &'a dyn SchedulePolicy,
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed();
    out
}

/// Top call patterns of the root module's exports.
pub fn default_entries(program: &Program, domain: DomainKind) -> Result<Vec<NodeKey>> {
    let root = program.root_module()?;
    let m = program.module(&root).expect("root exists");
    Ok(m.exports.iter().map(|s| top_entry(program.resolve(&root, s), domain)).collect())
}

pub fn top_entry(pred: PredId, domain: DomainKind) -> NodeKey {
    let call = domain.ops().top(pred.arity);
    NodeKey::new(pred, call)
}

/// Resolves `name/arity` entries against the root module (or `module:name/arity`).
pub fn parse_entries(program: &Program, spec: &str, domain: DomainKind) -> Result<Vec<NodeKey>> {
    let root = program.root_module()?;
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (module, rest) = match item.split_once(':') {
            Some((m, r)) => (crate::ir::sym(m), r),
            None => (root.clone(), item),
        };
        let bad = || Error::EntrySyntax(item.to_string());
        let (name, arity) = rest.rsplit_once('/').ok_or_else(bad)?;
        let arity: usize = arity.parse().map_err(|_| bad())?;
        let m = program.module(&module).ok_or_else(|| Error::UnknownModule(module.clone()))?;
        let sig = crate::ir::PredSig::new(name, arity);
        let pred = program.resolve(&module, &sig);
        if !m.exports.contains(&sig) || pred.module != module {
            return Err(Error::BadEntry(pred));
        }
        out.push(top_entry(pred, domain));
    }
    Ok(out)
}

/// Checks that `prev` describes the program `p` with `diff` undone.
fn check_fingerprint(prev: &EngineState, p: &Program, diff: &Diff) -> Result<()> {
    let now = p.index();
    let old = &prev.index;
    let names_now: BTreeSet<&Sym> = now.modules.keys().collect();
    let names_old: BTreeSet<&Sym> = old.modules.keys().collect();
    if names_now != names_old {
        return Err(Error::FingerprintMismatch("the set of modules changed".into()));
    }
    for name in diff.modules.keys() {
        if !now.modules.contains_key(name) {
            return Err(Error::UnknownModule(name.clone()));
        }
    }
    for (name, m) in &now.modules {
        let o = &old.modules[name];
        if m.exports != o.exports || m.imports != o.imports {
            return Err(Error::FingerprintMismatch(format!("declarations of module `{name}` changed")));
        }
        let mut expect: BTreeSet<_> = m.clauses.keys().copied().collect();
        if let Some(d) = diff.modules.get(name) {
            for c in &d.added {
                expect.remove(&c.id);
            }
            expect.extend(d.deleted.iter().copied());
        }
        if expect != o.clauses.keys().copied().collect() {
            return Err(Error::FingerprintMismatch(format!(
                "clauses of module `{name}` do not match the stored analysis plus the diff"
            )));
        }
    }
    Ok(())
}

/// Records the diff as pending work of the units it touches.
fn route_diff(state: &mut EngineState, units: &UnitProgram, p: &Program, diff: &Diff) {
    for (module, d) in &diff.modules {
        for c in &d.added {
            let pred = p.resolve(module, &c.sig());
            if let Some(u) = units.unit_of(&pred).or(units.unit_of_module(module)) {
                state.pending.entry(u.clone()).or_default().added.insert(pred);
            }
        }
        for id in &d.deleted {
            let Some(pred) = state.index.pred_of(module, *id).cloned() else { continue };
            if let Some(u) = units.unit_of(&pred).or(units.unit_of_module(module)) {
                state.pending.entry(u.clone()).or_default().deleted.insert(pred);
            }
        }
    }
    state.pending.retain(|_, p| !p.is_empty());
}

/// Analyzes `p` for `qalpha`, reusing `prev` (the state for `p` with `diff`
/// undone) when given.
pub fn mod_inc_analyze(
    p: &Program,
    qalpha: &[NodeKey],
    prev: Option<EngineState>,
    diff: &Diff,
    opts: &EngineOptions,
) -> Result<(EngineState, RunStats)> {
    let mut stats = RunStats::default();
    let t = Instant::now();
    let units = UnitProgram::new(p, opts.layout);
    let dom = opts.domain.ops();
    let mut state = match prev {
        Some(s) => {
            if s.domain != opts.domain {
                return Err(Error::DomainMismatch { expected: opts.domain.to_string(), found: s.domain.to_string() });
            }
            if s.layout != opts.layout {
                return Err(Error::State(format!("state was built with the {} layout", s.layout)));
            }
            check_fingerprint(&s, p, diff)?;
            let mut s = s;
            route_diff(&mut s, &units, p, diff);
            s
        }
        None => EngineState::new(opts.domain, opts.layout),
    };
    for k in qalpha {
        if !units.is_exported(&k.pred) {
            return Err(Error::BadEntry(k.pred.clone()));
        }
        dom.check(&k.call, k.pred.arity)?;
    }
    state.index = p.index();
    state.entries = qalpha.iter().cloned().collect();
    stats.times.preproc += t.elapsed();

    let ctx = Ctx { units: &units, dom, strategy: opts.strategy, policy: opts.policy.as_ref() };
    run(&ctx, &mut state, qalpha, &mut stats, true)?;
    Ok((state, stats))
}

/// The engine loop. `gc` drops global nodes unreachable from `qalpha` at
/// the end.
pub(crate) fn run(
    ctx: &Ctx<'_>,
    state: &mut EngineState,
    qalpha: &[NodeKey],
    stats: &mut RunStats,
    gc: bool,
) -> Result<()> {
    // AnalyzeOutdated
    let outdated: Vec<NodeKey> = state
        .gag
        .answers
        .keys()
        .filter(|k| ctx.units.unit_of(&k.pred).is_some_and(|u| state.pending.contains_key(u)))
        .cloned()
        .collect();
    add_entries(state, outdated);
    // AnalyzeNew
    let fresh: Vec<NodeKey> = qalpha.iter().filter(|k| !state.gag.contains(k)).cloned().collect();
    add_entries(state, fresh);

    let mut visited: BTreeSet<Sym> = BTreeSet::new();
    while let Some((u, entries)) = next_entries(state, ctx, qalpha) {
        debug!("analyzing {u} for {} entries", entries.len());
        stats.trace.push(u.clone());
        let mut seeds = entries;
        if visited.insert(u.clone()) {
            if let Some(pending) = state.pending.remove(&u) {
                let t = Instant::now();
                if !pending.deleted.is_empty() {
                    let extra = match ctx.strategy {
                        DelStrategy::Td => step_invalid_del_cls_td(state, ctx, &u, &pending.deleted, stats),
                        DelStrategy::Scc => step_invalid_del_cls_scc(state, ctx, &u, &pending.deleted, stats)?,
                    };
                    seeds.extend(extra);
                }
                if let Some(lag) = state.lags.get(&u) {
                    seeds.extend(lag.nodes().filter(|k| pending.added.contains(&k.pred)).cloned());
                }
                stats.times.procdiff += t.elapsed();
            }
        }
        let t = Instant::now();
        seeds.extend(step_prepare_imported(state, ctx, &u, stats));
        stats.times.incact += t.elapsed();
        let t = Instant::now();
        local_inc_analyze(state, ctx, &u, seeds, stats)?;
        stats.times.analyze += t.elapsed();
        timed(&mut stats.times.incact, || step_remove_unused(state, ctx, &u));
        let t = Instant::now();
        step_store_answers(state, ctx, &u, stats);
        step_update_dependencies(state, ctx, &u);
        stats.times.updg += t.elapsed();
    }
    if gc {
        timed(&mut stats.times.updg, || {
            let keep = state.gag.reachable(qalpha);
            let dropped = state.gag.retain(&keep);
            trace!("collected {dropped} unreachable global nodes");
        });
    }
    Ok(())
}

pub fn add_entries(state: &mut EngineState, keys: impl IntoIterator<Item = NodeKey>) {
    state.queue.extend(keys);
}

/// Takes all queued entries of one unit that are reachable from `qalpha`.
/// Entries no unit can analyze are dropped. Unreachable entries wait while
/// reachable ones remain, and are dropped once none do.
pub fn next_entries(state: &mut EngineState, ctx: &Ctx<'_>, qalpha: &[NodeKey]) -> Option<(Sym, BTreeSet<NodeKey>)> {
    let units = ctx.units;
    state
        .queue
        .retain(|k| units.unit_of(&k.pred).is_some_and(|u| units.get(u).is_local(&k.pred)));
    let reach = state.gag.reachable(qalpha);
    let live: Vec<&NodeKey> = state.queue.iter().filter(|k| reach.contains(*k)).collect();
    if live.is_empty() {
        state.queue.clear();
        return None;
    }
    let candidates: BTreeSet<Sym> = live.iter().map(|k| units.unit_of(&k.pred).expect("routed").clone()).collect();
    let u = ctx.policy.pick(&candidates, &units.order);
    let take: BTreeSet<NodeKey> =
        live.into_iter().filter(|k| units.unit_of(&k.pred) == Some(&u)).cloned().collect();
    for k in &take {
        state.queue.remove(k);
    }
    Some((u, take))
}

/// Nodes that must be recomputed after `deleted` left the local graph of
/// `u`: surviving parents that lost an edge, and deleted nodes the global
/// graph still refers to.
fn reseed(
    state: &EngineState,
    ctx: &Ctx<'_>,
    u: &Sym,
    deleted: &BTreeSet<NodeKey>,
    orphans: BTreeSet<NodeKey>,
) -> BTreeSet<NodeKey> {
    let unit = ctx.units.get(u);
    let mut seeds = orphans;
    seeds.extend(deleted.iter().filter(|k| state.gag.contains(k)).cloned());
    seeds.retain(|k| unit.is_local(&k.pred));
    seeds
}

/// Removes what clause deletions may have made inaccurate: every node of a
/// predicate that lost clauses, with its dependents.
pub fn step_invalid_del_cls_td(
    state: &mut EngineState,
    ctx: &Ctx<'_>,
    u: &Sym,
    deleted_preds: &BTreeSet<PredId>,
    stats: &mut RunStats,
) -> BTreeSet<NodeKey> {
    let Some(lag) = state.lags.get_mut(u) else { return BTreeSet::new() };
    let calls: BTreeSet<NodeKey> = lag.nodes().filter(|k| deleted_preds.contains(&k.pred)).cloned().collect();
    if calls.is_empty() {
        return BTreeSet::new();
    }
    let (deleted, orphans) = lag.del_dependent(&calls);
    stats.nodes_deleted += deleted.len() as u64;
    reseed(state, ctx, u, &deleted, orphans)
}

/// Brings the assumptions of `u` in line with the global graph. Returns the
/// local nodes to re-evaluate.
pub fn step_prepare_imported(
    state: &mut EngineState,
    ctx: &Ctx<'_>,
    u: &Sym,
    stats: &mut RunStats,
) -> BTreeSet<NodeKey> {
    let unit = ctx.units.get(u);
    let dom = ctx.dom;
    let lag = state.lags.entry(u.clone()).or_default();
    let gag = &state.gag;
    let bot = AbsValue::Bot;
    let shrunk: BTreeSet<NodeKey> = lag
        .answers()
        .iter()
        .filter(|(k, v)| !unit.is_local(&k.pred) && !dom.leq(v, gag.answer(k).unwrap_or(&bot)))
        .map(|(k, _)| k.clone())
        .collect();
    let (deleted, orphans) = if shrunk.is_empty() { Default::default() } else { lag.del_dependent(&shrunk) };
    stats.nodes_deleted += deleted.len() as u64;

    let imported = unit.imported_preds();
    let mut changed = Vec::new();
    for (k, v) in gag.answers.iter().filter(|(k, _)| imported.contains(&k.pred)) {
        match lag.answer(k) {
            Some(old) if old == v => {}
            Some(_) => {
                changed.push(k.clone());
                lag.upd_answer(k.clone(), v.clone());
            }
            None => lag.upd_answer(k.clone(), v.clone()),
        }
    }
    let mut seeds = orphans;
    for k in &changed {
        seeds.extend(lag.parents(k));
    }
    reseed(state, ctx, u, &deleted, seeds)
}

/// Runs the local fixpoint of `u` from `seeds` over its current local graph.
pub fn local_inc_analyze(
    state: &mut EngineState,
    ctx: &Ctx<'_>,
    u: &Sym,
    seeds: BTreeSet<NodeKey>,
    stats: &mut RunStats,
) -> Result<()> {
    let unit = ctx.units.get(u);
    let lag = state.lags.entry(u.clone()).or_default();
    let mut a = AnalyzeStats::default();
    analyze_seeded(unit, ctx.dom, lag, seeds, &mut a)?;
    stats.analyzer.add(&a);
    *stats.per_unit.entry(u.clone()).or_default() += a.clause_evals;
    Ok(())
}

/// Drops imported call patterns nothing in `u` calls any more.
pub fn step_remove_unused(state: &mut EngineState, ctx: &Ctx<'_>, u: &Sym) -> usize {
    let unit = ctx.units.get(u);
    let Some(lag) = state.lags.get_mut(u) else { return 0 };
    let unused: Vec<NodeKey> =
        lag.nodes().filter(|k| !unit.is_local(&k.pred) && !lag.has_incoming(k)).cloned().collect();
    lag.del_nodes(&unused);
    unused.len()
}

/// Publishes changed boundary answers of `u` and queues the global parents
/// of the changed nodes. Returns the changed nodes.
pub fn step_store_answers(state: &mut EngineState, ctx: &Ctx<'_>, u: &Sym, stats: &mut RunStats) -> BTreeSet<NodeKey> {
    let unit = ctx.units.get(u);
    let Some(lag) = state.lags.get(u) else { return BTreeSet::new() };
    let changed: BTreeMap<NodeKey, AbsValue> = lag
        .answers()
        .iter()
        .filter(|(k, v)| unit.exports.contains(&k.pred) && state.gag.answer(k) != Some(*v))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    stats.gag_updates += changed.len() as u64;
    let mut parents = Vec::new();
    for (k, v) in &changed {
        state.gag.answers.insert(k.clone(), v.clone());
        parents.extend(state.gag.parents(k));
    }
    add_entries(state, parents);
    changed.into_keys().collect()
}

/// Recomputes the global edges leaving the boundary nodes of `u`, queueing
/// imported call patterns the global graph has not seen.
pub fn step_update_dependencies(state: &mut EngineState, ctx: &Ctx<'_>, u: &Sym) {
    let unit = ctx.units.get(u);
    let Some(lag) = state.lags.get(u) else { return };
    state.gag.edges.retain(|(s, _)| !(unit.is_local(&s.pred) && lag.contains(s)));
    let mut fresh = Vec::new();
    for k in lag.nodes().filter(|k| unit.exports.contains(&k.pred)) {
        for d in lag.reachable([k]) {
            if unit.is_local(&d.pred) {
                continue;
            }
            if !state.gag.contains(&d) {
                state.gag.answers.insert(d.clone(), AbsValue::Bot);
                fresh.push(d.clone());
            }
            state.gag.edges.insert((k.clone(), d));
        }
    }
    add_entries(state, fresh);
}

/// One-line answer summary, e.g. `main/2: top -> P=b`, with head variable
/// names taken from the first clause when available.
pub fn describe(units: &UnitProgram, k: &NodeKey, answer: &AbsValue) -> String {
    let names: Vec<String> = units
        .unit_of(&k.pred)
        .and_then(|u| units.get(u).head_names(&k.pred))
        .map(|ns| ns.iter().map(|s| s.to_string()).collect())
        .filter(|ns: &Vec<String>| !ns.iter().any(|n| n.starts_with('_')))
        .unwrap_or_else(|| (0..k.pred.arity).map(crate::domain::position_name).collect());
    format!("{}/{}: {} -> {}", k.pred.name, k.pred.arity, k.call.show(&names), answer.show(&names))
}

/// DOT rendering of the global graph (dashed) and local graphs (solid).
pub fn state_to_dot(state: &EngineState) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("digraph analysis {\n  node [shape=box];\n");
    s.push_str("  subgraph cluster_gag {\n  label=\"global\";\n");
    state.gag.as_analysis_graph().write_dot(&mut s, "g", ", style=dashed");
    let ids: BTreeMap<&NodeKey, usize> = state.gag.answers.keys().enumerate().map(|(i, k)| (k, i)).collect();
    for (a, b) in &state.gag.edges {
        let _ = writeln!(s, "  g{} -> g{} [style=dashed];", ids[a], ids[b]);
    }
    s.push_str("  }\n");
    for (i, (u, lag)) in state.lags.iter().enumerate() {
        let _ = writeln!(s, "  subgraph cluster_{i} {{\n  label=\"{u}\";");
        lag.write_dot(&mut s, &format!("l{i}_"), "");
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}

/// Answers of the global nodes reachable from the entries.
pub fn boundary_answers(state: &EngineState) -> BTreeMap<NodeKey, AbsValue> {
    let roots: Vec<NodeKey> = state.entries.iter().cloned().collect();
    state.gag.reachable_answers(&roots)
}

/// Every call pattern reachable from the entries across local graphs, each
/// answered by the graph of the unit owning it. Patterns no owner has
/// analyzed map to bottom.
pub fn reachable_local_answers(state: &EngineState, units: &UnitProgram) -> BTreeMap<NodeKey, AbsValue> {
    let mut out = BTreeMap::new();
    let mut todo: Vec<NodeKey> = state.entries.iter().cloned().collect();
    while let Some(k) = todo.pop() {
        if out.contains_key(&k) {
            continue;
        }
        let lag = units.unit_of(&k.pred).and_then(|u| state.lags.get(u));
        let answer = lag.and_then(|g| g.answer(&k)).cloned().unwrap_or(AbsValue::Bot);
        if let Some(g) = lag {
            todo.extend(g.children(&k));
        }
        out.insert(k, answer);
    }
    out
}
