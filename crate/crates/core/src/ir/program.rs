use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::diff::Diff;
use super::module::Module;
use super::parse::parse_module;
use super::scc::tarjan;
use super::term::{ClauseId, PredId, PredSig, Sym};
use crate::error::{Error, Result};

/// How strictly declarations are checked when assembling a program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadMode {
    /// Exports must be defined and every call must resolve.
    Strict,
    /// Partially written programs: unresolved calls and undefined exports
    /// denote local predicates without clauses.
    Lenient,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub modules: BTreeMap<Sym, Module>,
    /// Strongly connected groups of the import graph, importers first.
    pub clique_groups: Vec<Vec<Sym>>,
    resolution: BTreeMap<Sym, BTreeMap<PredSig, Sym>>,
    mode: LoadMode,
}

/// Loads module sources, normalizing every clause.
pub fn program_load<S: AsRef<str>>(module_texts: &[S]) -> Result<Program> {
    let modules = module_texts
        .iter()
        .map(|t| parse_module(t.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Program::from_modules(modules, LoadMode::Strict)
}

/// Loads every `*.pl` file of `dir`, in file-name order.
pub fn program_load_dir(dir: &std::path::Path, mode: LoadMode) -> Result<Program> {
    let mut paths: Vec<std::path::PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "pl"));
    paths.sort();
    let mut modules = Vec::with_capacity(paths.len());
    for p in &paths {
        modules.push(parse_module(&std::fs::read_to_string(p)?)?);
    }
    Program::from_modules(modules, mode)
}

impl Program {
    /// The same clauses and declarations checked under `mode`.
    pub fn with_mode(&self, mode: LoadMode) -> Result<Program> {
        Program::from_modules(self.modules.values().cloned().collect(), mode)
    }

    /// Declarations only, loaded leniently.
    pub fn skeleton(&self) -> Program {
        Program::from_modules(self.modules.values().map(Module::skeleton).collect(), LoadMode::Lenient)
            .expect("declarations of a loaded program stay valid")
    }

    pub fn from_modules(modules: Vec<Module>, mode: LoadMode) -> Result<Program> {
        let mut by_name = BTreeMap::new();
        for m in modules {
            let name = m.name.clone();
            if by_name.insert(name.clone(), m.normalized()).is_some() {
                return Err(Error::DuplicateModule(name));
            }
        }

        for m in by_name.values() {
            for imp in &m.imports {
                if !by_name.contains_key(imp) {
                    return Err(Error::UnresolvedImport { module: m.name.clone(), import: imp.clone() });
                }
            }
            if mode == LoadMode::Strict {
                let defined = m.defined();
                if let Some(e) = m.exports.iter().find(|e| !defined.contains(*e)) {
                    return Err(Error::ExportUndefined { module: m.name.clone(), pred: e.clone() });
                }
            }
        }

        let mut resolution = BTreeMap::new();
        for m in by_name.values() {
            let local: BTreeSet<PredSig> = m.defined().into_iter().chain(m.exports.iter().cloned()).collect();
            let mut table = BTreeMap::new();
            for sig in &local {
                table.insert(sig.clone(), m.name.clone());
            }
            for c in &m.clauses {
                for call in c.calls() {
                    let sig = call.sig();
                    if table.contains_key(&sig) {
                        continue;
                    }
                    let providers: Vec<&Sym> = m
                        .imports
                        .iter()
                        .filter(|i| by_name[*i].exports.contains(&sig))
                        .collect();
                    let target = match providers.as_slice() {
                        [one] => (*one).clone(),
                        [] if mode == LoadMode::Lenient => m.name.clone(),
                        [] => return Err(Error::UndefinedCall { module: m.name.clone(), pred: sig }),
                        _ => return Err(Error::AmbiguousCall { module: m.name.clone(), pred: sig }),
                    };
                    table.insert(sig, target);
                }
            }
            resolution.insert(m.name.clone(), table);
        }

        let names: BTreeSet<Sym> = by_name.keys().cloned().collect();
        let succ: BTreeMap<Sym, BTreeSet<Sym>> =
            by_name.values().map(|m| (m.name.clone(), m.imports.clone())).collect();
        let mut clique_groups = tarjan(&names, &succ);
        clique_groups.reverse();

        Ok(Program { modules: by_name, clique_groups, resolution, mode })
    }

    pub fn mode(&self) -> LoadMode {
        self.mode
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.get(name)
    }

    /// Qualified identity of a predicate called (or defined) inside `module`.
    pub fn resolve(&self, module: &Sym, sig: &PredSig) -> PredId {
        let owner = self
            .resolution
            .get(module)
            .and_then(|t| t.get(sig))
            .cloned()
            .unwrap_or_else(|| module.clone());
        PredId { module: owner, name: sig.name.clone(), arity: sig.arity }
    }

    /// Local predicates of a module: defined, exported, or (lenient) called
    /// without an imported provider.
    pub fn local_preds(&self, module: &Sym) -> BTreeSet<PredId> {
        self.resolution
            .get(module)
            .into_iter()
            .flatten()
            .filter(|(_, owner)| *owner == module)
            .map(|(sig, owner)| PredId { module: owner.clone(), name: sig.name.clone(), arity: sig.arity })
            .collect()
    }

    pub fn clause_count(&self) -> usize {
        self.modules.values().map(|m| m.clauses.len()).sum()
    }

    /// The unique module no other module imports.
    pub fn root_module(&self) -> Result<Sym> {
        let imported: BTreeSet<&Sym> = self.modules.values().flat_map(|m| m.imports.iter()).collect();
        let roots: Vec<&Sym> = self.modules.keys().filter(|m| !imported.contains(m)).collect();
        match roots.as_slice() {
            [one] => Ok((*one).clone()),
            [] => Err(Error::NoRootModule("every module is imported by another".into())),
            many => Err(Error::NoRootModule(format!(
                "candidates: {}",
                many.iter().map(|s| &***s).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Applies added/deleted clauses, keeping declarations.
    pub fn apply(&self, diff: &Diff) -> Result<Program> {
        let mut modules: Vec<Module> = Vec::with_capacity(self.modules.len());
        for m in self.modules.values() {
            let mut m = m.clone();
            if let Some(d) = diff.modules.get(&m.name) {
                m.clauses.retain(|c| !d.deleted.contains(&c.id));
                m.clauses.extend(d.added.iter().cloned());
            }
            modules.push(m);
        }
        for name in diff.modules.keys() {
            if !self.modules.contains_key(name) {
                return Err(Error::UnknownModule(name.clone()));
            }
        }
        Program::from_modules(modules, self.mode)
    }

    pub fn index(&self) -> ProgramIndex {
        ProgramIndex {
            modules: self
                .modules
                .values()
                .map(|m| {
                    let clauses = m
                        .clauses
                        .iter()
                        .map(|c| (c.id, self.resolve(&m.name, &c.sig())))
                        .collect();
                    (
                        m.name.clone(),
                        ModuleIndex { exports: m.exports.clone(), imports: m.imports.clone(), clauses },
                    )
                })
                .collect(),
        }
    }
}

/// Declarations and clause identities of a program, enough to check that a
/// stored analysis belongs to a given program version.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramIndex {
    pub modules: BTreeMap<Sym, ModuleIndex>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleIndex {
    pub exports: BTreeSet<PredSig>,
    pub imports: BTreeSet<Sym>,
    pub clauses: BTreeMap<ClauseId, PredId>,
}

impl ProgramIndex {
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (name, m) in &self.modules {
            h.update(format!("module {name}\n").as_bytes());
            for e in &m.exports {
                h.update(format!("export {e}\n").as_bytes());
            }
            for i in &m.imports {
                h.update(format!("import {i}\n").as_bytes());
            }
            for id in m.clauses.keys() {
                h.update(format!("clause {id}\n").as_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn pred_of(&self, module: &Sym, id: ClauseId) -> Option<&PredId> {
        self.modules.get(module)?.clauses.get(&id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MAIN: &str = ":- module(main, [main/2]).
:- use_module(bitops).
main(Msg, P) :- par(Msg, 0, P).
par([], P, P).
par([C|Cs], P0, P) :- xor(C, P0, P1), par(Cs, P1, P).
";
    pub(crate) const BITOPS: &str = ":- module(bitops, [xor/3]).
xor(0,0,0).
xor(0,1,1).
xor(1,0,1).
xor(1,1,0).
";

    #[test]
    fn renamed_duplicates_collapse() {
        let p = program_load(&[":- module(m, [p/1]).\np(X) :- q(Y).\np(X) :- q(Z).\nq(1).\n"]).unwrap();
        assert_eq!(p.clause_count(), 2);
        let c = p.modules["m"].clauses.iter().find(|c| c.calls().next().is_some()).unwrap();
        let q = p.with_mode(LoadMode::Lenient).unwrap().apply(&Diff::deleted(&crate::ir::sym("m"), [c.id])).unwrap();
        assert_eq!(q.clause_count(), 1);
    }

    #[test]
    fn parity_program_groups() {
        let p = program_load(&[MAIN, BITOPS]).unwrap();
        assert_eq!(p.modules.len(), 2);
        let groups: Vec<Vec<&str>> =
            p.clique_groups.iter().map(|g| g.iter().map(|s| &**s).collect()).collect();
        assert_eq!(groups, vec![vec!["main"], vec!["bitops"]]);
        assert_eq!(&*p.root_module().unwrap(), "main");
        let main = super::super::term::sym("main");
        assert_eq!(p.resolve(&main, &PredSig::new("xor", 3)), PredId::new("bitops", "xor", 3));
        assert_eq!(p.resolve(&main, &PredSig::new("par", 3)), PredId::new("main", "par", 3));
    }

    #[test]
    fn single_module_single_group() {
        let p = program_load(&[":- module(m, [p/0]). p."]).unwrap();
        assert_eq!(p.clique_groups.len(), 1);
    }

    #[test]
    fn mutual_imports_form_one_clique() {
        let a = ":- module(a, [p/0]). :- use_module(b). p :- q.";
        let b = ":- module(b, [q/0]). :- use_module(a). q :- p.";
        let p = program_load(&[a, b]).unwrap();
        assert_eq!(p.clique_groups.len(), 1);
        assert_eq!(p.clique_groups[0].len(), 2);
        assert!(p.root_module().is_err());
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            program_load(&[":- module(a, []). :- use_module(zz)."]),
            Err(Error::UnresolvedImport { .. })
        ));
        assert!(matches!(
            program_load(&[":- module(a, [p/1]). p."]),
            Err(Error::ExportUndefined { .. })
        ));
        // q/0 exists in b but is not exported
        assert!(matches!(
            program_load(&[":- module(a, [p/0]). :- use_module(b). p :- q.", ":- module(b, []). q."]),
            Err(Error::UndefinedCall { .. })
        ));
        assert!(matches!(
            program_load(&[":- module(a, []).", ":- module(a, [])."]),
            Err(Error::DuplicateModule(_))
        ));
    }

    #[test]
    fn main_export_arity_discrepancy_is_reported() {
        let as_printed = MAIN.replace("main/2", "main/1");
        let err = program_load(&[as_printed.as_str(), BITOPS]).unwrap_err();
        assert!(matches!(err, Error::ExportUndefined { ref pred, .. } if pred == &PredSig::new("main", 1)));
    }

    #[test]
    fn lenient_mode_accepts_skeletons() {
        let skel = Program::from_modules(
            vec![
                parse_module(":- module(main, [main/2]). :- use_module(bitops). main(M,P) :- par(M,0,P).").unwrap(),
                parse_module(":- module(bitops, [xor/3]).").unwrap(),
            ],
            LoadMode::Lenient,
        )
        .unwrap();
        let main = super::super::term::sym("main");
        assert_eq!(skel.resolve(&main, &PredSig::new("par", 3)).module, main);
        assert!(skel.local_preds(&main).contains(&PredId::new("main", "par", 3)));
    }

    #[test]
    fn fingerprint_tracks_clause_sets() {
        let p = program_load(&[MAIN, BITOPS]).unwrap();
        let q = program_load(&[MAIN, &BITOPS.replace("xor(1,1,0).\n", "")]).unwrap();
        assert_ne!(p.index().fingerprint(), q.index().fingerprint());
        let reordered = BITOPS.replace("xor(0,0,0).\nxor(0,1,1).", "xor(0,1,1).\nxor(0,0,0).");
        let r = program_load(&[MAIN, &reordered]).unwrap();
        assert_eq!(p.index().fingerprint(), r.index().fingerprint());
    }
}
