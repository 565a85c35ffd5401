use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::normalize::normalize_clause;
use super::term::{Clause, ClauseId, PredSig, Sym};

/// One source unit: declarations plus clauses in source order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Module {
    pub name: Sym,
    pub exports: BTreeSet<PredSig>,
    pub imports: BTreeSet<Sym>,
    pub clauses: Vec<Clause>,
}

impl Module {
    pub fn new(name: &str) -> Self {
        Module {
            name: super::term::sym(name),
            exports: BTreeSet::new(),
            imports: BTreeSet::new(),
            clauses: Vec::new(),
        }
    }

    /// Predicates with at least one clause.
    pub fn defined(&self) -> BTreeSet<PredSig> {
        self.clauses.iter().map(Clause::sig).collect()
    }

    pub fn defines(&self, sig: &PredSig) -> bool {
        self.clauses.iter().any(|c| &c.sig() == sig)
    }

    pub fn clauses_of<'a>(&'a self, sig: &'a PredSig) -> impl Iterator<Item = &'a Clause> + 'a {
        self.clauses.iter().filter(move |c| &c.sig() == sig)
    }

    /// Clauses grouped by predicate, predicates in name order.
    pub fn by_predicate(&self) -> BTreeMap<PredSig, Vec<&Clause>> {
        let mut out: BTreeMap<PredSig, Vec<&Clause>> = BTreeMap::new();
        for c in &self.clauses {
            out.entry(c.sig()).or_default().push(c);
        }
        out
    }

    pub fn clause_ids(&self) -> BTreeSet<ClauseId> {
        self.clauses.iter().map(|c| c.id).collect()
    }

    pub fn find(&self, id: ClauseId) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    /// Normalized clauses. Clauses equal up to variable renaming share an
    /// id and add nothing to the semantics, so only the first is kept.
    pub fn normalized(&self) -> Module {
        let mut seen = std::collections::BTreeSet::new();
        Module {
            clauses: self.clauses.iter().map(normalize_clause).filter(|c| seen.insert(c.id)).collect(),
            ..self.clone()
        }
    }

    /// The same declarations without any clause.
    pub fn skeleton(&self) -> Module {
        Module { clauses: Vec::new(), ..self.clone() }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ":- module({}, [", self.name)?;
        for (i, e) in self.exports.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        writeln!(f, "]).")?;
        for imp in &self.imports {
            writeln!(f, ":- use_module({imp}).")?;
        }
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
