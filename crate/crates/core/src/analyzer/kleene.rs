//! A deliberately naive reference analyzer used as a test oracle. It works
//! on the source clauses directly (no compiled form, no worklist) and
//! iterates the whole-program transfer function from bottom.

use std::collections::{BTreeMap, BTreeSet};

use super::graph::NodeKey;
use crate::domain::{AbsValue, AbstractDomain, VTerm};
use crate::ir::{Clause, Literal, PredId, Program, Sym, Term};

struct Frame {
    slots: BTreeMap<Sym, usize>,
    width: usize,
}

impl Frame {
    fn slot(&mut self, v: &Sym) -> usize {
        if let Some(i) = self.slots.get(v) {
            return *i;
        }
        self.slots.insert(v.clone(), self.width);
        self.width += 1;
        self.width - 1
    }

    fn fresh(&mut self) -> usize {
        self.width += 1;
        self.width - 1
    }

    fn term(&mut self, t: &Term) -> VTerm {
        match t {
            Term::Var(v) => VTerm::Var(self.slot(v)),
            Term::Int(i) => VTerm::Int(*i),
            Term::Const(c) => VTerm::Const(c.clone()),
            Term::Compound(f, args) => VTerm::Compound(f.clone(), args.iter().map(|a| self.term(a)).collect()),
        }
    }
}

/// Positions: head arguments first as fresh slots `0..n`, each equated
/// with the written head term, then clause variables as met.
fn frame_width(c: &Clause) -> usize {
    let mut f = Frame { slots: BTreeMap::new(), width: c.head.arity() };
    for t in &c.head.args {
        f.term(t);
    }
    for l in &c.body {
        for t in l.terms() {
            f.term(t);
            f.fresh();
        }
    }
    f.width
}

struct Oracle<'a> {
    program: &'a Program,
    inside: &'a BTreeSet<Sym>,
    dom: &'a dyn AbstractDomain,
    assumptions: &'a BTreeMap<NodeKey, AbsValue>,
}

impl Oracle<'_> {
    fn clauses(&self, p: &PredId) -> Vec<(&Sym, &Clause)> {
        let mut out = Vec::new();
        for m in self.inside {
            let module = &self.program.modules[m];
            for c in &module.clauses {
                if self.program.resolve(m, &c.sig()) == *p {
                    out.push((m, c));
                }
            }
        }
        out
    }

    fn is_inside(&self, p: &PredId) -> bool {
        self.inside.contains(&p.module)
    }

    /// One clause under `call`, reading answers from `x`; reports every
    /// call pattern it meets.
    fn eval(&self, module: &Sym, c: &Clause, call: &AbsValue, x: &BTreeMap<NodeKey, AbsValue>, met: &mut Vec<NodeKey>) -> AbsValue {
        let width = frame_width(c);
        let n = c.head.arity();
        let mut f = Frame { slots: BTreeMap::new(), width: n };
        let mut v = self.dom.extend(call, width);
        let mut head_eqs = Vec::new();
        for (i, t) in c.head.args.iter().enumerate() {
            let t = f.term(t);
            v = self.dom.unify(&v, &VTerm::Var(i), &t);
            head_eqs.push((VTerm::Var(i), t));
        }
        let mut constraints: Vec<(VTerm, VTerm)> = head_eqs;
        let mut prims: Vec<(&str, Vec<VTerm>)> = Vec::new();
        for lit in &c.body {
            if v.is_bot() {
                break;
            }
            match lit {
                Literal::Prim { op, args } => {
                    let args: Vec<VTerm> = args.iter().map(|a| f.term(a)).collect();
                    v = self.dom.transfer_primitive(op, &args, &v);
                    prims.push((op, args));
                }
                Literal::Call(a) => {
                    let mut slots = Vec::new();
                    let mut bound = Vec::new();
                    for t in &a.args {
                        let t = f.term(t);
                        let s = f.fresh();
                        v = self.dom.unify(&v, &VTerm::Var(s), &t);
                        constraints.push((VTerm::Var(s), t.clone()));
                        bound.push((s, t));
                        slots.push(s);
                    }
                    if v.is_bot() {
                        break;
                    }
                    let key = NodeKey::new(self.program.resolve(module, &a.sig()), self.dom.project(&v, &slots));
                    let ans = x.get(&key).cloned().unwrap_or(AbsValue::Bot);
                    met.push(key);
                    v = self.dom.conjoin_at(&v, &slots, &ans);
                    // carry the callee's bindings back to the argument terms
                    for (s, t) in &bound {
                        v = self.dom.unify(&v, &VTerm::Var(*s), t);
                    }
                }
            }
        }
        // every constraint met on the way still holds at exit
        while !v.is_bot() {
            let before = v.clone();
            for (l, r) in &constraints {
                v = self.dom.unify(&v, l, r);
            }
            for (op, args) in &prims {
                v = self.dom.transfer_primitive(op, args, &v);
            }
            if v == before {
                break;
            }
        }
        let head: Vec<usize> = (0..n).collect();
        self.dom.project(&v, &head)
    }

    /// F(x) on the keys of `x`, the entries, and every call pattern met on
    /// the way, with the call relation under `x`. Keeping met keys makes F
    /// monotone: a caller moving to a new pattern finds the answer it had
    /// before rather than bottom.
    fn step(
        &self,
        x: &BTreeMap<NodeKey, AbsValue>,
        entries: &[NodeKey],
    ) -> (BTreeMap<NodeKey, AbsValue>, BTreeMap<NodeKey, Vec<NodeKey>>) {
        let mut keys: BTreeSet<NodeKey> = entries.iter().chain(x.keys()).cloned().collect();
        let mut todo: Vec<NodeKey> = keys.iter().cloned().collect();
        let mut next = BTreeMap::new();
        let mut calls = BTreeMap::new();
        while let Some(k) = todo.pop() {
            let mut met = Vec::new();
            let value = if self.is_inside(&k.pred) {
                let mut acc = AbsValue::Bot;
                for (m, c) in self.clauses(&k.pred) {
                    acc = self.dom.lub(&acc, &self.eval(m, c, &k.call, x, &mut met));
                }
                acc
            } else {
                AbsValue::Bot
            };
            for n in &met {
                if keys.insert(n.clone()) {
                    todo.push(n.clone());
                }
            }
            calls.insert(k.clone(), met);
            let assumed = self.assumptions.get(&k).cloned().unwrap_or(AbsValue::Bot);
            next.insert(k, self.dom.lub(&assumed, &value));
        }
        (next, calls)
    }
}

/// Least fixpoint of `x -> assumptions ⊔ F(x)` over the clauses of the
/// `inside` modules, restricted to call patterns reachable from `entries`.
/// Predicates of other modules contribute only their assumptions.
pub fn kleene_lfp(
    program: &Program,
    inside: &BTreeSet<Sym>,
    dom: &dyn AbstractDomain,
    entries: &[NodeKey],
    assumptions: &BTreeMap<NodeKey, AbsValue>,
) -> BTreeMap<NodeKey, AbsValue> {
    let o = Oracle { program, inside, dom, assumptions };
    let mut x: BTreeMap<NodeKey, AbsValue> = BTreeMap::new();
    loop {
        let (next, calls) = o.step(&x, entries);
        if next == x {
            let mut seen: BTreeSet<NodeKey> = entries.iter().cloned().collect();
            let mut todo: Vec<NodeKey> = entries.to_vec();
            while let Some(k) = todo.pop() {
                for n in calls.get(&k).into_iter().flatten() {
                    if seen.insert(n.clone()) {
                        todo.push(n.clone());
                    }
                }
            }
            x.retain(|k, _| seen.contains(k));
            return x;
        }
        x = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::{analyze, AnalysisGraph, AnalysisUnit};
    use crate::domain::{Bit, DomainKind};
    use crate::ir::{program_load, sym};
    use crate::parity::{BITOPS_B1, MAIN};

    #[test]
    fn whole_parity_program() {
        let p = program_load(&[MAIN, BITOPS_B1]).unwrap();
        let inside: BTreeSet<Sym> = [sym("main"), sym("bitops")].into();
        let main = NodeKey::new(PredId::new("main", "main", 2), AbsValue::Bit(vec![Bit::Top; 2]));
        let x = kleene_lfp(&p, &inside, DomainKind::Bit.ops(), std::slice::from_ref(&main), &BTreeMap::new());
        assert_eq!(x[&main], AbsValue::Bit(vec![Bit::Top, Bit::B]));
        assert_eq!(x.len(), 5);
    }

    #[test]
    fn empty_inputs() {
        let p = program_load(&[":- module(m, [])."]).unwrap();
        let x = kleene_lfp(&p, &[sym("m")].into(), DomainKind::Gr.ops(), &[], &BTreeMap::new());
        assert!(x.is_empty());
    }

    #[test]
    fn agrees_with_analyzer_on_parity() {
        let p = program_load(&[MAIN, BITOPS_B1]).unwrap();
        for kind in DomainKind::ALL {
            let d = kind.ops();
            let u = AnalysisUnit::from_modules(&p, "all", &[sym("main"), sym("bitops")].into());
            let main = NodeKey::new(PredId::new("main", "main", 2), d.top(2));
            let g = analyze(&u, d, std::slice::from_ref(&main), &AnalysisGraph::new()).unwrap();
            let reached = g.reachable([&main]);
            let got: BTreeMap<NodeKey, AbsValue> =
                reached.iter().map(|k| (k.clone(), g.answer(k).unwrap().clone())).collect();
            let want = kleene_lfp(&p, &u.members, d, &[main], &BTreeMap::new());
            assert_eq!(got, want, "{kind}");
        }
    }
}
