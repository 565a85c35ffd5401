#![allow(dead_code)]

use std::collections::BTreeSet;

use chc_modinc::analyzer::NodeKey;
use chc_modinc::bench::synth_sources;
use chc_modinc::domain::DomainKind;
use chc_modinc::engine::{default_entries, mod_inc_analyze, EngineOptions, EngineState, RunStats};
use chc_modinc::ir::{parse_module, ClauseId, Diff, LoadMode, Program};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A program version: the synthetic program `full` minus `dropped`.
pub fn version(full: &Program, dropped: &BTreeSet<ClauseId>) -> Program {
    let modules = full
        .modules
        .values()
        .map(|m| {
            let mut m = m.clone();
            m.clauses.retain(|c| !dropped.contains(&c.id));
            m
        })
        .collect();
    Program::from_modules(modules, LoadMode::Lenient).unwrap()
}

pub fn synth_lenient(n: usize, preds: usize, clauses: usize, seed: u64) -> Program {
    let ms = synth_sources(n, preds, clauses, seed).iter().map(|t| parse_module(t).unwrap()).collect();
    Program::from_modules(ms, LoadMode::Lenient).unwrap()
}

/// Two random versions of one synthetic program and the diff between them.
pub struct Case {
    pub old: Program,
    pub new: Program,
    pub diff: Diff,
}

pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(1..=4);
    let preds = rng.random_range(1..=3);
    let clauses = rng.random_range(1..=3);
    let full = synth_lenient(n, preds, clauses, seed);
    let ids: Vec<ClauseId> = full.modules.values().flat_map(|m| m.clauses.iter().map(|c| c.id)).collect();
    let p_old = rng.random_range(0.0..0.5);
    let p_new = rng.random_range(0.0..0.5);
    let old_drop: BTreeSet<ClauseId> = ids.iter().copied().filter(|_| rng.random_bool(p_old)).collect();
    let new_drop: BTreeSet<ClauseId> = ids.iter().copied().filter(|_| rng.random_bool(p_new)).collect();
    let old = version(&full, &old_drop);
    let new = version(&full, &new_drop);
    let diff = Diff::between(&old, &new).unwrap();
    Case { old, new, diff }
}

pub fn entries(p: &Program, d: DomainKind) -> Vec<NodeKey> {
    default_entries(p, d).unwrap()
}

pub fn scratch(p: &Program, o: &EngineOptions) -> (EngineState, RunStats) {
    mod_inc_analyze(p, &entries(p, o.domain), None, &Diff::default(), o).unwrap()
}
