use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::module::Module;
use super::normalize::normalize_clause;
use super::parse::parse_clause;
use super::program::Program;
use super::term::{Clause, ClauseId, Sym};
use crate::error::{Error, Result};

/// Added clauses and deleted clause ids of one module.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModuleDiff {
    pub added: Vec<Clause>,
    pub deleted: BTreeSet<ClauseId>,
}

impl ModuleDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.deleted.is_empty()
    }

    pub fn added_ids(&self) -> BTreeSet<ClauseId> {
        self.added.iter().map(|c| c.id).collect()
    }
}

/// Per-module clause changes between two program versions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diff {
    pub modules: BTreeMap<Sym, ModuleDiff>,
}

impl Diff {
    pub fn is_empty(&self) -> bool {
        self.modules.values().all(ModuleDiff::is_empty)
    }

    pub fn added(module: &Sym, clauses: Vec<Clause>) -> Diff {
        let mut d = Diff::default();
        d.modules.insert(module.clone(), ModuleDiff { added: clauses, deleted: BTreeSet::new() });
        d
    }

    pub fn deleted(module: &Sym, ids: impl IntoIterator<Item = ClauseId>) -> Diff {
        let mut d = Diff::default();
        d.modules.insert(module.clone(), ModuleDiff { added: vec![], deleted: ids.into_iter().collect() });
        d
    }

    /// Module-by-module diff of two versions with the same module names.
    pub fn between(old: &Program, new: &Program) -> Result<Diff> {
        let old_names: BTreeSet<&Sym> = old.modules.keys().collect();
        let new_names: BTreeSet<&Sym> = new.modules.keys().collect();
        if old_names != new_names {
            let missing = old_names.symmetric_difference(&new_names).next().expect("differ");
            return Err(Error::UnknownModule((*missing).clone()));
        }
        let mut out = Diff::default();
        for (name, m) in &new.modules {
            let d = diff_modules(&old.modules[name], m)?;
            if !d.is_empty() {
                out.modules.insert(name.clone(), d);
            }
        }
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Diff> {
        let entries: Vec<DiffEntry> = serde_json::from_str(text)?;
        let mut out = Diff::default();
        for e in entries {
            let slot = out.modules.entry(super::term::sym(&e.module)).or_default();
            for clause_text in &e.added {
                slot.added.push(normalize_clause(&parse_clause(clause_text)?));
            }
            for hex in &e.deleted {
                let id = hex
                    .parse::<ClauseId>()
                    .map_err(|_| Error::InvalidDiff(format!("bad clause hash `{hex}`")))?;
                slot.deleted.insert(id);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<DiffEntry> = self
            .modules
            .iter()
            .map(|(m, d)| DiffEntry {
                module: m.to_string(),
                added: d.added.iter().map(ToString::to_string).collect(),
                deleted: d.deleted.iter().map(ToString::to_string).collect(),
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("diff serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct DiffEntry {
    module: String,
    #[serde(default)]
    added: Vec<String>,
    #[serde(default)]
    deleted: Vec<String>,
}

/// Clauses of `new` whose id is absent from `old`, and ids of `old` absent
/// from `new`. An edited clause shows up as one deletion plus one addition.
pub fn diff_modules(old: &Module, new: &Module) -> Result<ModuleDiff> {
    if old.name != new.name {
        return Err(Error::ModuleMismatch(old.name.clone(), new.name.clone()));
    }
    let old_ids = old.clause_ids();
    let new_ids = new.clause_ids();
    let mut seen = BTreeSet::new();
    let added = new
        .clauses
        .iter()
        .filter(|c| !old_ids.contains(&c.id) && seen.insert(c.id))
        .cloned()
        .collect();
    let deleted = old_ids.difference(&new_ids).copied().collect();
    Ok(ModuleDiff { added, deleted })
}
