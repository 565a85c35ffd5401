//! Clauses compiled to positional form, grouped into an analysis unit.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::VTerm;
use crate::ir::{Clause, ClauseId, Literal, PredId, Program, Sym, Term};

#[derive(Clone, Debug, PartialEq)]
pub enum CLit {
    Prim { op: Sym, args: Vec<VTerm> },
    Call { pred: PredId, args: Vec<usize> },
}

/// A normalized clause over a frame of `width` variables; the head
/// arguments occupy positions `0..arity`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledClause {
    pub id: ClauseId,
    pub pred: PredId,
    pub arity: usize,
    pub width: usize,
    pub names: Vec<Sym>,
    pub body: Vec<CLit>,
}

fn vterm(t: &Term, index: &BTreeMap<Sym, usize>) -> VTerm {
    match t {
        Term::Var(v) => VTerm::Var(index[v]),
        Term::Int(i) => VTerm::Int(*i),
        Term::Const(c) => VTerm::Const(c.clone()),
        Term::Compound(f, args) => VTerm::Compound(f.clone(), args.iter().map(|a| vterm(a, index)).collect()),
    }
}

impl CompiledClause {
    /// Compiles a normalized clause of `module`.
    pub fn compile(program: &Program, module: &Sym, c: &Clause) -> CompiledClause {
        assert!(c.head.is_normal_head(), "clause {c} is not normalized");
        let names = c.vars();
        let index: BTreeMap<Sym, usize> = names.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let body = c
            .body
            .iter()
            .map(|lit| match lit {
                Literal::Prim { op, args } => {
                    CLit::Prim { op: op.clone(), args: args.iter().map(|a| vterm(a, &index)).collect() }
                }
                Literal::Call(a) => CLit::Call {
                    pred: program.resolve(module, &a.sig()),
                    args: a
                        .args
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => index[v],
                            other => panic!("call argument {other} in {c} is not a variable"),
                        })
                        .collect(),
                },
            })
            .collect();
        CompiledClause {
            id: c.id,
            pred: program.resolve(module, &c.sig()),
            arity: c.head.arity(),
            width: names.len(),
            names,
            body,
        }
    }

    pub fn calls(&self) -> impl Iterator<Item = (usize, &PredId)> {
        self.body.iter().enumerate().filter_map(|(i, l)| match l {
            CLit::Call { pred, .. } => Some((i, pred)),
            CLit::Prim { .. } => None,
        })
    }
}

/// The clauses analyzed together in one local analysis: a module, a clique
/// of modules, a whole program, or one predicate SCC of a module.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisUnit {
    pub name: Sym,
    /// Source modules contributing clauses.
    pub members: BTreeSet<Sym>,
    /// Predicates owned by this unit; calls to anything else are frozen.
    pub local: BTreeSet<PredId>,
    pub exports: BTreeSet<PredId>,
    /// Names of the units this one calls into.
    pub imports: BTreeSet<Sym>,
    pub clauses: BTreeMap<PredId, Vec<CompiledClause>>,
}

impl AnalysisUnit {
    /// Builds a unit from whole modules of `program`. Imports are module
    /// names outside `members`.
    pub fn from_modules(program: &Program, name: &str, members: &BTreeSet<Sym>) -> AnalysisUnit {
        let mut unit = AnalysisUnit {
            name: crate::ir::sym(name),
            members: members.clone(),
            local: BTreeSet::new(),
            exports: BTreeSet::new(),
            imports: BTreeSet::new(),
            clauses: BTreeMap::new(),
        };
        for m in members {
            let module = program.module(m).unwrap_or_else(|| panic!("unknown module {m}"));
            unit.local.extend(program.local_preds(m));
            unit.exports.extend(module.exports.iter().map(|s| program.resolve(m, s)));
            unit.imports.extend(module.imports.iter().filter(|i| !members.contains(*i)).cloned());
            for c in &module.clauses {
                let cc = CompiledClause::compile(program, m, c);
                unit.local.insert(cc.pred.clone());
                unit.clauses.entry(cc.pred.clone()).or_default().push(cc);
            }
        }
        unit
    }

    pub fn single(program: &Program, module: &str) -> AnalysisUnit {
        AnalysisUnit::from_modules(program, module, &[crate::ir::sym(module)].into())
    }

    pub fn is_local(&self, p: &PredId) -> bool {
        self.local.contains(p)
    }

    pub fn clauses_of(&self, p: &PredId) -> &[CompiledClause] {
        self.clauses.get(p).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.values().map(Vec::len).sum()
    }

    pub fn find_clause(&self, id: ClauseId) -> Option<&CompiledClause> {
        self.clauses.values().flatten().find(|c| c.id == id)
    }

    /// Head variable names of the first clause of `p`, if it has one.
    pub fn head_names(&self, p: &PredId) -> Option<Vec<Sym>> {
        self.clauses_of(p).first().map(|c| c.names[..c.arity].to_vec())
    }

    /// Local call graph: predicate to local callees.
    pub fn call_graph(&self) -> BTreeMap<PredId, BTreeSet<PredId>> {
        let mut g: BTreeMap<PredId, BTreeSet<PredId>> = BTreeMap::new();
        for (p, cs) in &self.clauses {
            let entry = g.entry(p.clone()).or_default();
            for c in cs {
                entry.extend(c.calls().map(|(_, q)| q.clone()).filter(|q| self.is_local(q)));
            }
        }
        g
    }

    /// Predicates of other units called from this unit.
    pub fn imported_preds(&self) -> BTreeSet<PredId> {
        self.clauses
            .values()
            .flatten()
            .flat_map(|c| c.calls().map(|(_, q)| q.clone()))
            .filter(|q| !self.is_local(q))
            .collect()
    }

    /// The sub-unit holding the clauses of `preds`, which become its local
    /// predicates.
    pub fn restrict(&self, name: &str, preds: &BTreeSet<PredId>) -> AnalysisUnit {
        AnalysisUnit {
            name: crate::ir::sym(name),
            members: self.members.clone(),
            local: preds.clone(),
            exports: BTreeSet::new(),
            imports: BTreeSet::new(),
            clauses: self.clauses.iter().filter(|(p, _)| preds.contains(*p)).map(|(p, c)| (p.clone(), c.clone())).collect(),
        }
    }
}
