//! Replays clause-by-clause edit sequences under the four analyzer
//! configurations, recording phase times and work counters.

mod synth;

pub use synth::{synth_program, synth_sources};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analyzer::NodeKey;
use crate::domain::DomainKind;
use crate::engine::{default_entries, mod_inc_analyze, DelStrategy, EngineOptions, EngineState, Layout, RunStats};
use crate::error::{Error, Result};
use crate::ir::{Clause, Diff, LoadMode, Program, Sym};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Whole program, from scratch at every step.
    Mon,
    /// Whole program, incremental.
    MonInc,
    /// Modular, from scratch at every step.
    Mod,
    /// Modular and incremental.
    ModInc,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Mon, Mode::MonInc, Mode::Mod, Mode::ModInc];

    pub fn layout(self) -> Layout {
        match self {
            Mode::Mon | Mode::MonInc => Layout::Monolithic,
            Mode::Mod | Mode::ModInc => Layout::Modular,
        }
    }

    pub fn incremental(self) -> bool {
        matches!(self, Mode::MonInc | Mode::ModInc)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mon => "mon",
            Mode::MonInc => "mon_inc",
            Mode::Mod => "mod",
            Mode::ModInc => "mod_inc",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mon" => Ok(Mode::Mon),
            "mon_inc" => Ok(Mode::MonInc),
            "mod" => Ok(Mode::Mod),
            "mod_inc" => Ok(Mode::ModInc),
            other => Err(format!("unknown mode `{other}` (expected mon, mon_inc, mod or mod_inc)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Add,
    Del,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Add => "add",
            Direction::Del => "del",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "add" => Ok(Direction::Add),
            "del" => Ok(Direction::Del),
            other => Err(format!("unknown direction `{other}` (expected add or del)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub bench: String,
    pub program: Program,
    pub domain: DomainKind,
    pub mode: Mode,
    /// Only matters for deletions in incremental modes.
    pub strategy: DelStrategy,
    pub direction: Direction,
    pub seed: u64,
    /// Compare every step against a from-scratch run.
    pub verify: bool,
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub bench: String,
    pub domain: String,
    pub mode: String,
    pub strategy: String,
    pub direction: String,
    pub step: usize,
    pub clauses: usize,
    pub analyze_ms: f64,
    pub incact_ms: f64,
    pub preproc_ms: f64,
    pub updg_ms: f64,
    pub procdiff_ms: f64,
    pub clause_evals: u64,
    pub nodes_deleted: u64,
    pub gag_updates: u64,
    /// Clause evaluations per unit; not part of the CSV.
    #[serde(skip)]
    pub per_unit: BTreeMap<Sym, u64>,
}

impl StepRecord {
    pub fn total_ms(&self) -> f64 {
        self.analyze_ms + self.incact_ms + self.preproc_ms + self.updg_ms + self.procdiff_ms
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// The programs visited when adding clauses one at a time to the module
/// skeletons, or deleting them one at a time from `p`, in a seeded order.
/// Each program comes with the one-clause diff leading to it.
pub fn gen_sequence(p: &Program, direction: Direction, seed: u64) -> Result<Vec<(Program, Diff)>> {
    let mut clauses: Vec<(Sym, Clause)> =
        p.modules.values().flat_map(|m| m.clauses.iter().map(move |c| (m.name.clone(), c.clone()))).collect();
    clauses.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut cur = match direction {
        Direction::Add => p.skeleton(),
        Direction::Del => p.with_mode(LoadMode::Lenient)?,
    };
    let mut out = Vec::with_capacity(clauses.len());
    for (module, c) in clauses {
        let d = match direction {
            Direction::Add => Diff::added(&module, vec![c]),
            Direction::Del => Diff::deleted(&module, [c.id]),
        };
        cur = cur.apply(&d)?;
        out.push((cur.clone(), d));
    }
    Ok(out)
}

/// Where a sequence starts: the skeletons, or the whole program.
pub fn sequence_start(p: &Program, direction: Direction) -> Result<Program> {
    match direction {
        Direction::Add => Ok(p.skeleton()),
        Direction::Del => p.with_mode(LoadMode::Lenient),
    }
}

fn check_same(step: usize, got: &EngineState, want: &EngineState, entries: &[NodeKey]) -> Result<()> {
    let a = got.gag.reachable_part(entries);
    let b = want.gag.reachable_part(entries);
    if a != b {
        return Err(Error::Verification {
            step,
            detail: format!("global graph differs from scratch ({} vs {} nodes)", a.answers.len(), b.answers.len()),
        });
    }
    Ok(())
}

/// The result of one experiment: per-step records plus the final state.
pub struct Experiment {
    pub records: Vec<StepRecord>,
    pub states: Vec<EngineState>,
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<StepRecord>> {
    Ok(run_experiment_states(plan, false)?.records)
}

/// As [`run_experiment`], optionally keeping the state after every step.
pub fn run_experiment_states(plan: &ExperimentPlan, keep_states: bool) -> Result<Experiment> {
    let at = |step: usize| move |e: Error| Error::AtStep { step, source: Box::new(e) };
    let start = sequence_start(&plan.program, plan.direction)?;
    let entries = default_entries(&start, plan.domain)?;
    let seq = gen_sequence(&plan.program, plan.direction, plan.seed)?;
    let opts = EngineOptions::new(plan.domain).layout(plan.mode.layout()).strategy(plan.strategy);
    let mut state = if plan.mode.incremental() {
        Some(mod_inc_analyze(&start, &entries, None, &Diff::default(), &opts).map_err(at(0))?.0)
    } else {
        None
    };
    let mut records = Vec::with_capacity(seq.len());
    let mut states = Vec::new();
    for (i, (p, d)) in seq.iter().enumerate() {
        let step = i + 1;
        let (s, st): (EngineState, RunStats) = if plan.mode.incremental() {
            mod_inc_analyze(p, &entries, state.take(), d, &opts).map_err(at(step))?
        } else {
            mod_inc_analyze(p, &entries, None, &Diff::default(), &opts).map_err(at(step))?
        };
        if plan.verify && plan.mode.incremental() {
            let (fresh, _) = mod_inc_analyze(p, &entries, None, &Diff::default(), &opts).map_err(at(step))?;
            check_same(step, &s, &fresh, &entries)?;
        }
        let procdiff = if plan.mode.incremental() { ms(st.times.procdiff) } else { 0.0 };
        records.push(StepRecord {
            bench: plan.bench.clone(),
            domain: plan.domain.to_string(),
            mode: plan.mode.to_string(),
            strategy: plan.strategy.to_string(),
            direction: plan.direction.to_string(),
            step,
            clauses: p.clause_count(),
            analyze_ms: ms(st.times.analyze),
            incact_ms: ms(st.times.incact),
            preproc_ms: ms(st.times.preproc),
            updg_ms: ms(st.times.updg),
            procdiff_ms: procdiff,
            clause_evals: st.clause_evals(),
            nodes_deleted: st.nodes_deleted,
            gag_updates: st.gag_updates,
            per_unit: st.per_unit.clone(),
        });
        if keep_states {
            states.push(s.clone());
        }
        state = Some(s);
    }
    Ok(Experiment { records, states })
}

/// Runs independent plans, in parallel when the `parallel` feature is on.
pub fn run_plans(plans: &[ExperimentPlan]) -> Vec<Result<Vec<StepRecord>>> {
    crate::par::par_map(plans, run_experiment)
}

/// Every combination of the given domains, modes and strategies.
/// Strategies only multiply incremental deletion plans.
#[allow(clippy::too_many_arguments)]
pub fn plan_product(
    bench: &str,
    program: &Program,
    direction: Direction,
    domains: &[DomainKind],
    modes: &[Mode],
    strategies: &[DelStrategy],
    seed: u64,
    verify: bool,
) -> Vec<ExperimentPlan> {
    let mut out = Vec::new();
    for &domain in domains {
        for &mode in modes {
            let strats: &[DelStrategy] =
                if direction == Direction::Del && mode.incremental() { strategies } else { &strategies[..1.min(strategies.len())] };
            let strats = if strats.is_empty() { &[DelStrategy::Td][..] } else { strats };
            for &strategy in strats {
                out.push(ExperimentPlan {
                    bench: bench.to_string(),
                    program: program.clone(),
                    domain,
                    mode,
                    strategy,
                    direction,
                    seed,
                    verify,
                });
            }
        }
    }
    out
}

pub fn emit_csv(records: &[StepRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 15] = [
    "bench",
    "domain",
    "mode",
    "strategy",
    "direction",
    "step",
    "clauses",
    "analyze_ms",
    "incact_ms",
    "preproc_ms",
    "updg_ms",
    "procdiff_ms",
    "clause_evals",
    "nodes_deleted",
    "gag_updates",
];

/// One series per configuration: per-step totals and accumulated phase
/// times, the latter also normalized so that the `mon` total of the same
/// benchmark, domain and direction is 1.0.
pub fn plot_data(records: &[StepRecord]) -> Value {
    type Config = (String, String, String, String, String);
    let mut groups: BTreeMap<Config, Vec<&StepRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.bench.clone(), r.domain.clone(), r.direction.clone(), r.mode.clone(), r.strategy.clone());
        groups.entry(key).or_default().push(r);
    }
    let acc = |rs: &[&StepRecord]| {
        let sum = |f: fn(&StepRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>();
        [
            ("analyze", sum(|r| r.analyze_ms)),
            ("incact", sum(|r| r.incact_ms)),
            ("preproc", sum(|r| r.preproc_ms)),
            ("updg", sum(|r| r.updg_ms)),
            ("procdiff", sum(|r| r.procdiff_ms)),
        ]
    };
    let mon_total = |bench: &str, domain: &str, direction: &str| -> Option<f64> {
        groups
            .iter()
            .find(|((b, d, dir, m, _), _)| b == bench && d == domain && dir == direction && m == "mon")
            .map(|(_, rs)| acc(rs).iter().map(|(_, v)| v).sum())
    };
    let series: Vec<Value> = groups
        .iter()
        .map(|((bench, domain, direction, mode, strategy), rs)| {
            let phases = acc(rs);
            let total: f64 = phases.iter().map(|(_, v)| v).sum();
            let base = mon_total(bench, domain, direction).filter(|t| *t > 0.0);
            let accumulated: serde_json::Map<String, Value> =
                phases.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            let normalized: Value = match base {
                Some(b) => {
                    let mut m: serde_json::Map<String, Value> =
                        phases.iter().map(|(k, v)| (k.to_string(), json!(v / b))).collect();
                    m.insert("total".into(), json!(total / b));
                    Value::Object(m)
                }
                None => Value::Null,
            };
            json!({
                "bench": bench,
                "domain": domain,
                "direction": direction,
                "mode": mode,
                "strategy": strategy,
                "steps": rs.iter().map(|r| json!({
                    "step": r.step,
                    "clauses": r.clauses,
                    "total_ms": r.total_ms(),
                    "clause_evals": r.clause_evals,
                })).collect::<Vec<_>>(),
                "accumulated": accumulated,
                "total_ms": total,
                "normalized": normalized,
            })
        })
        .collect();
    json!({ "series": series })
}

pub fn emit_plot_data(records: &[StepRecord], path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(&plot_data(records))?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::NodeKey;
    use crate::domain::{AbsValue, Bit};
    use crate::ir::PredId;
    use crate::parity;

    fn plan(mode: Mode, direction: Direction, strategy: DelStrategy) -> ExperimentPlan {
        ExperimentPlan {
            bench: "parity".into(),
            program: parity::program(1).unwrap(),
            domain: DomainKind::Bit,
            mode,
            strategy,
            direction,
            seed: 3,
            verify: true,
        }
    }

    #[test]
    fn sequence_lengths_and_shapes() {
        let p = parity::program(1).unwrap();
        let add = gen_sequence(&p, Direction::Add, 1).unwrap();
        assert_eq!(add.len(), 7);
        assert!(add.iter().all(|(_, d)| d.modules.values().map(|m| m.added.len()).sum::<usize>() == 1));
        assert_eq!(add.last().unwrap().0.clause_count(), 7);
        let del = gen_sequence(&p, Direction::Del, 1).unwrap();
        assert_eq!(del.last().unwrap().0.clause_count(), 0);
        assert_eq!(del.last().unwrap().0.modules["main"].exports, p.modules["main"].exports);
        let again = gen_sequence(&p, Direction::Add, 1).unwrap();
        let ids = |s: &[(Program, Diff)]| s.iter().map(|(_, d)| d.to_json()).collect::<Vec<_>>();
        assert_eq!(ids(&add), ids(&again));
        let one = synth_program(1, 1, 1, 0).unwrap();
        assert_eq!(gen_sequence(&one, Direction::Add, 0).unwrap().len(), 1);
    }

    #[test]
    fn mod_inc_addition_ends_at_full_answer() {
        let ex = run_experiment_states(&plan(Mode::ModInc, Direction::Add, DelStrategy::Td), true).unwrap();
        let last = ex.states.last().unwrap();
        let main = NodeKey::new(PredId::new("main", "main", 2), AbsValue::Bit(vec![Bit::Top, Bit::Top]));
        assert_eq!(last.gag.answers[&main], AbsValue::Bit(vec![Bit::Top, Bit::B]));
        assert_eq!(last.gag.answers.len(), 3);
    }

    #[test]
    fn deleting_xor_110_leaves_main_alone() {
        let p = parity::program(1).unwrap();
        let target = crate::ir::parse_clause("xor(1,1,0)").unwrap().id;
        let seed = (0..1000)
            .find(|&s| gen_sequence(&p, Direction::Del, s).unwrap()[0].1.modules["bitops"].deleted.contains(&target))
            .expect("some order deletes xor(1,1,0) first");
        for strategy in [DelStrategy::Td, DelStrategy::Scc] {
            let mut pl = plan(Mode::ModInc, Direction::Del, strategy);
            pl.seed = seed;
            let recs = run_experiment(&pl).unwrap();
            assert_eq!(recs[0].per_unit.get("main").copied().unwrap_or(0), 0, "{strategy}");
            assert!(recs[0].per_unit["bitops"] > 0);
        }
    }

    #[test]
    fn reuse_beats_scratch_on_parity() {
        let total = |m| run_experiment(&plan(m, Direction::Add, DelStrategy::Td)).unwrap().iter().map(|r| r.clause_evals).sum::<u64>();
        assert!(total(Mode::ModInc) < total(Mode::Mon));
    }

    #[test]
    fn csv_and_plot_output() {
        let dir = tempfile::tempdir().unwrap();
        let recs: Vec<StepRecord> = run_experiment(&plan(Mode::Mon, Direction::Add, DelStrategy::Td)).unwrap();
        let path = dir.path().join("r.csv");
        emit_csv(&recs[..3], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        emit_csv(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);

        let mut all = recs.clone();
        all.extend(run_experiment(&plan(Mode::ModInc, Direction::Add, DelStrategy::Td)).unwrap());
        let v = plot_data(&all);
        let mon = v["series"].as_array().unwrap().iter().find(|s| s["mode"] == "mon").unwrap();
        assert!((mon["normalized"]["total"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        emit_plot_data(&all, &dir.path().join("p.json")).unwrap();
    }

    #[test]
    fn plan_product_counts() {
        let p = parity::program(1).unwrap();
        let plans = plan_product(
            "parity",
            &p,
            Direction::Add,
            &[DomainKind::Bit, DomainKind::Gr],
            &[Mode::Mon, Mode::ModInc],
            &[DelStrategy::Td],
            0,
            false,
        );
        assert_eq!(plans.len(), 4);
        let del = plan_product("parity", &p, Direction::Del, &[DomainKind::Bit], &Mode::ALL, &[DelStrategy::Td, DelStrategy::Scc], 0, false);
        assert_eq!(del.len(), 6);
        assert!(run_plans(&plans).into_iter().all(|r| r.is_ok()));
    }
}
