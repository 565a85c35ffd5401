//! Head and call-site normalization.
//!
//! A normalized clause has a head `p(X1,...,Xn)` of pairwise-distinct
//! variables and call literals whose arguments are all variables. Removed
//! structure is re-expressed as `=` literals placed before the literal that
//! needed it, in left-to-right argument order.

use std::collections::BTreeSet;

use super::term::{sym, Atom, Clause, Literal, Sym, Term};

struct Fresh {
    used: BTreeSet<Sym>,
    next: usize,
}

impl Fresh {
    fn new(c: &Clause) -> Self {
        Fresh { used: c.vars().into_iter().collect(), next: 0 }
    }

    fn name(i: usize) -> String {
        let letter = (b'A' + (i % 26) as u8) as char;
        match i / 26 {
            0 => letter.to_string(),
            n => format!("{letter}{n}"),
        }
    }

    fn take(&mut self) -> Sym {
        loop {
            let candidate = sym(&Self::name(self.next));
            self.next += 1;
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

/// Normalizes without recomputing the id; used by the hashing routine.
pub(crate) fn normalize_body_and_head(c: &Clause) -> Clause {
    let mut fresh = Fresh::new(c);
    let mut body = Vec::with_capacity(c.body.len() + c.head.arity());

    let head = if c.head.is_normal_head() {
        c.head.clone()
    } else {
        let mut args = Vec::with_capacity(c.head.arity());
        for arg in &c.head.args {
            let v = fresh.take();
            body.push(Literal::unify(Term::Var(v.clone()), arg.clone()));
            args.push(Term::Var(v));
        }
        Atom { pred: c.head.pred.clone(), args }
    };

    for lit in &c.body {
        match lit {
            Literal::Call(atom) if atom.args.iter().any(|a| !a.is_var()) => {
                let mut args = Vec::with_capacity(atom.arity());
                for arg in &atom.args {
                    if arg.is_var() {
                        args.push(arg.clone());
                    } else {
                        let v = fresh.take();
                        body.push(Literal::unify(Term::Var(v.clone()), arg.clone()));
                        args.push(Term::Var(v));
                    }
                }
                body.push(Literal::Call(Atom { pred: atom.pred.clone(), args }));
            }
            other => body.push(other.clone()),
        }
    }
    Clause { head, body, id: c.id }
}

pub fn is_normalized(c: &Clause) -> bool {
    c.head.is_normal_head() && c.calls().all(|a| a.args.iter().all(Term::is_var))
}

pub fn normalize_clause(c: &Clause) -> Clause {
    if is_normalized(c) {
        return c.clone();
    }
    let mut out = normalize_body_and_head(c);
    out.id = super::term::clause_hash(&out);
    out
}
